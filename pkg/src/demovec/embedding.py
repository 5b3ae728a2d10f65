"""Static word embeddings trained with negative sampling.

Implements CBOW and skip-gram over a rewritten corpus (one post per
line, space-separated tokens). The per-position update steps are exact
analytic gradients of the negative-sampling objective; the hot loop is
JIT-compiled with numba so desk-scale corpora train in seconds while the
step functions stay callable (and finite-difference checkable) from
Python.

Enhanced I-tokens are the measurement targets, so by default they are
exempt from min-count filtering and frequency subsampling; raw
first-person pronoun frequency would otherwise discard most of them.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np
from numba import njit

from .corpus import try_parse_enhanced

__all__ = [
    "ConfigError",
    "VocabularyError",
    "TrainingError",
    "ModelFormatError",
    "Vocabulary",
    "TrainConfig",
    "EmbeddingModel",
    "UnigramTable",
    "build_vocab",
    "keep_probability",
    "build_negative_table",
    "cbow_step",
    "skipgram_step",
    "cbow_loss",
    "skipgram_loss",
    "train",
    "save_model",
    "load_model",
    "iter_corpus_tokens",
]

log = logging.getLogger("demovec.embedding")


class ConfigError(ValueError):
    """Training configuration violates its invariants."""


class VocabularyError(Exception):
    """Vocabulary construction failed (e.g. nothing survived filtering)."""


class TrainingError(Exception):
    """Training produced an unusable model or could not run."""


class ModelFormatError(Exception):
    """Model file violates the text format."""


class Vocabulary:
    """Token inventory with dense ids ordered by descending count.

    Ties break on the token string, so ids are a pure function of the
    counted stream. ``counts`` may be all zeros for models loaded from
    disk, where occurrence counts are not persisted.
    """

    def __init__(self, tokens: list[str], counts: np.ndarray):
        if len(tokens) != len(counts):
            raise VocabularyError("token/count length mismatch")
        if len(tokens) == 0:
            raise VocabularyError("empty vocabulary")
        self.tokens = list(tokens)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise VocabularyError("duplicate tokens in vocabulary")
        self.total_tokens = int(self.counts.sum())
        self.enhanced_mask = np.fromiter(
            (try_parse_enhanced(t) is not None for t in self.tokens),
            dtype=bool,
            count=len(self.tokens),
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id_of(self, token: str) -> int:
        return self.index[token]

    def items(self) -> Iterator[tuple[str, tuple[int, int]]]:
        """Yield ``(token, (id, count))`` in id order (descending count)."""
        for i, t in enumerate(self.tokens):
            yield t, (i, int(self.counts[i]))


def build_vocab(
    tokens: Iterable[str],
    min_count: int,
    protect_enhanced: bool = True,
) -> Vocabulary:
    """Count a finite token stream and keep tokens with count >= min_count.

    Enhanced I-tokens are retained regardless of count when
    ``protect_enhanced`` is set.
    """
    counts: dict[str, int] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    kept = [
        (t, c)
        for t, c in counts.items()
        if c >= min_count or (protect_enhanced and try_parse_enhanced(t) is not None)
    ]
    if not kept:
        raise VocabularyError("no tokens survived min_count filtering")
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary([t for t, _ in kept], np.array([c for _, c in kept], dtype=np.int64))


def keep_probability(count: int, total: int, t: float, is_enhanced: bool = False) -> float:
    """Subsampling keep probability min(1, sqrt(t/f)) with f = count/total.

    Enhanced tokens are always kept; t == 0 disables subsampling entirely
    (the literal formula would discard every token).
    """
    if is_enhanced or t <= 0.0:
        return 1.0
    f = count / total
    return min(1.0, math.sqrt(t / f))


class UnigramTable:
    """Sampler over token ids with probability proportional to count^power.

    The lookup table gives each id a slot share equal to its probability
    to within 1/table_size; draws are deterministic given the caller's
    seeded random generator.
    """

    def __init__(self, probs: np.ndarray, table_size: int):
        self.probs = probs
        cum = np.cumsum(probs)
        grid = (np.arange(table_size, dtype=np.float64) + 0.5) / table_size
        self.table = np.searchsorted(cum, grid, side="right").astype(np.int32)
        self.table[self.table >= len(probs)] = len(probs) - 1

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.table[rng.integers(0, len(self.table), size=n)]


def build_negative_table(
    vocab: Vocabulary, power: float = 0.75, table_size: int = 1_000_000
) -> UnigramTable:
    if power <= 0:
        raise ConfigError(f"power must be positive, got {power}")
    weights = np.asarray(vocab.counts, dtype=np.float64) ** power
    total = weights.sum()
    if total <= 0:
        # Loaded vocabularies carry no counts; fall back to uniform noise.
        weights = np.ones(len(vocab), dtype=np.float64)
        total = weights.sum()
    return UnigramTable(weights / total, table_size)


@dataclass
class TrainConfig:
    arch: str = "cbow"  # "cbow" or "sg"
    dims: int = 100
    epochs: int = 10
    window: int = 5
    negatives: int = 5
    initial_lr: float = 0.025
    subsample_t: float = 1e-4
    min_count: int = 5
    seed: int = 1
    workers: int = 1
    protect_enhanced: bool = True

    def validate(self) -> None:
        if self.arch not in ("cbow", "sg"):
            raise ConfigError(f"arch must be 'cbow' or 'sg', got {self.arch!r}")
        if self.dims < 1:
            raise ConfigError(f"dims must be >= 1, got {self.dims}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be >= 1, got {self.negatives}")
        if not self.initial_lr > 0:
            raise ConfigError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.subsample_t < 0:
            raise ConfigError(f"subsample_t must be >= 0, got {self.subsample_t}")
        if self.min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {self.min_count}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class EmbeddingModel:
    """Vocabulary plus input (reported) and output (context) vectors."""

    vocab: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray | None = None
    config: TrainConfig | None = None

    def vector(self, token: str) -> np.ndarray:
        return self.input_vectors[self.vocab.id_of(token)]


# ---------------------------------------------------------------------------
# Negative-sampling steps (numba kernels shared by training and the tests)
# ---------------------------------------------------------------------------

_RNG_A = np.uint64(6364136223846793005)
_RNG_C = np.uint64(1442695040888963407)
_INV_2_53 = 1.0 / 9007199254740992.0
_SHIFT11 = np.uint64(11)
_SHIFT16 = np.uint64(16)


@njit(cache=True, nogil=True)
def _ns_forward(vout, ids, labels, h, g):
    """Logits against pre-update output rows; returns loss, fills g."""
    d = h.shape[0]
    loss = 0.0
    for i in range(ids.shape[0]):
        row = ids[i]
        x = 0.0
        for j in range(d):
            x += vout[row, j] * h[j]
        if x > 30.0:
            x = 30.0
        elif x < -30.0:
            x = -30.0
        s = 1.0 / (1.0 + np.exp(-x))
        if labels[i] > 0.5:
            loss += -np.log(s)
        else:
            loss += -np.log(1.0 - s)
        g[i] = s - labels[i]
    return loss


@njit(cache=True, nogil=True)
def _ns_backward(vout, ids, g, h, e, lr):
    """Accumulate dL/dh into e, then step the output rows.

    Accumulation runs over all rows before any update so the gradient
    stays exact when ids contains duplicates.
    """
    d = h.shape[0]
    for i in range(ids.shape[0]):
        row = ids[i]
        gi = g[i]
        for j in range(d):
            e[j] += gi * vout[row, j]
    for i in range(ids.shape[0]):
        row = ids[i]
        gi = g[i]
        for j in range(d):
            vout[row, j] -= lr * gi * h[j]


@njit(cache=True, nogil=True)
def _cbow_apply(vin, vout, context_ids, out_ids, out_labels, lr, h, e, g):
    d = vin.shape[1]
    nctx = context_ids.shape[0]
    for j in range(d):
        h[j] = 0.0
    for i in range(nctx):
        c = context_ids[i]
        for j in range(d):
            h[j] += vin[c, j]
    for j in range(d):
        h[j] /= nctx
    for j in range(d):
        e[j] = 0.0
    loss = _ns_forward(vout, out_ids, out_labels, h, g)
    _ns_backward(vout, out_ids, g, h, e, lr)
    for i in range(nctx):
        c = context_ids[i]
        for j in range(d):
            vin[c, j] -= lr * e[j] / nctx
    return loss


@njit(cache=True, nogil=True)
def _sg_apply(vin, vout, center_id, out_ids, out_labels, lr, h, e, g):
    d = vin.shape[1]
    for j in range(d):
        h[j] = vin[center_id, j]
        e[j] = 0.0
    loss = _ns_forward(vout, out_ids, out_labels, h, g)
    _ns_backward(vout, out_ids, g, h, e, lr)
    for j in range(d):
        vin[center_id, j] -= lr * e[j]
    return loss


def _step_buffers(model: EmbeddingModel, n_out: int):
    d = model.input_vectors.shape[1]
    dtype = model.input_vectors.dtype
    return (
        np.zeros(d, dtype=dtype),
        np.zeros(d, dtype=dtype),
        np.zeros(n_out, dtype=np.float64),
    )


def _out_ids_labels(positive: int, negative_ids) -> tuple[np.ndarray, np.ndarray]:
    neg = np.asarray(negative_ids, dtype=np.int32)
    if np.any(neg == positive):
        raise ValueError("negative ids must be disjoint from the positive target")
    ids = np.concatenate(([np.int32(positive)], neg))
    labels = np.zeros(len(ids), dtype=np.float64)
    labels[0] = 1.0
    return ids, labels


def cbow_step(context_ids, target_id, negative_ids, lr, model: EmbeddingModel) -> float:
    """One CBOW negative-sampling update; returns the pre-update loss.

    h is the mean of the context input vectors; the analytic gradient is
    applied to the target and negative output rows and to every context
    input row. ``lr = 0`` evaluates the loss without touching the model.
    """
    ctx = np.asarray(context_ids, dtype=np.int32)
    if ctx.size == 0:
        raise ValueError("context_ids must be non-empty")
    out_ids, labels = _out_ids_labels(int(target_id), negative_ids)
    h, e, g = _step_buffers(model, len(out_ids))
    return float(
        _cbow_apply(model.input_vectors, model.output_vectors, ctx, out_ids, labels, float(lr), h, e, g)
    )


def skipgram_step(center_id, context_id, negative_ids, lr, model: EmbeddingModel) -> float:
    """One skip-gram update: h is the center's input vector; gradients go
    to the context/negative output rows and the center input row."""
    out_ids, labels = _out_ids_labels(int(context_id), negative_ids)
    h, e, g = _step_buffers(model, len(out_ids))
    return float(
        _sg_apply(
            model.input_vectors, model.output_vectors, int(center_id), out_ids, labels, float(lr), h, e, g
        )
    )


def cbow_loss(context_ids, target_id, negative_ids, model: EmbeddingModel) -> float:
    return cbow_step(context_ids, target_id, negative_ids, 0.0, model)


def skipgram_loss(center_id, context_id, negative_ids, model: EmbeddingModel) -> float:
    return skipgram_step(center_id, context_id, negative_ids, 0.0, model)


# ---------------------------------------------------------------------------
# Epoch kernel
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _train_range(
    vin,
    vout,
    flat,
    offsets,
    sent_lo,
    sent_hi,
    max_sent,
    keep_prob,
    neg_table,
    window,
    k,
    is_cbow,
    lr0,
    lr_min,
    total_scheduled,
    progress,
    state,
):
    d = vin.shape[1]
    h = np.zeros(d, dtype=vin.dtype)
    e = np.zeros(d, dtype=vin.dtype)
    g = np.zeros(k + 1, dtype=np.float64)
    kept = np.empty(max_sent, dtype=np.int32)
    ctx = np.empty(2 * window, dtype=np.int32)
    outs = np.empty(k + 1, dtype=np.int32)
    labels = np.zeros(k + 1, dtype=np.float64)
    labels[0] = 1.0
    tsize = np.uint64(neg_table.shape[0])
    uwindow = np.uint64(window)
    loss_sum = 0.0
    n_steps = 0

    for s in range(sent_lo, sent_hi):
        start = offsets[s]
        end = offsets[s + 1]
        done = progress[0]
        frac = 1.0 - done / total_scheduled
        lr = lr0 * frac
        if lr < lr_min:
            lr = lr_min
        progress[0] = done + (end - start)

        # Frequency subsampling decides which occurrences survive; the
        # window then slides over the surviving sequence.
        nk = 0
        for t in range(start, end):
            wid = flat[t]
            kp = keep_prob[wid]
            if kp < 1.0:
                state = state * _RNG_A + _RNG_C
                if np.float64(state >> _SHIFT11) * _INV_2_53 >= kp:
                    continue
            kept[nk] = wid
            nk += 1
        if nk < 2:
            continue

        for i in range(nk):
            state = state * _RNG_A + _RNG_C
            r = 1 + np.int64((state >> _SHIFT16) % uwindow)
            lo = i - r
            if lo < 0:
                lo = 0
            hi = i + r
            if hi > nk - 1:
                hi = nk - 1
            if hi <= lo:
                continue

            if is_cbow:
                nctx = 0
                for j in range(lo, hi + 1):
                    if j != i:
                        ctx[nctx] = kept[j]
                        nctx += 1
                if nctx == 0:
                    continue
                target = kept[i]
                outs[0] = target
                m = 1
                for n in range(k):
                    state = state * _RNG_A + _RNG_C
                    cand = neg_table[np.int64((state >> _SHIFT16) % tsize)]
                    for _retry in range(10):
                        if cand != target:
                            break
                        state = state * _RNG_A + _RNG_C
                        cand = neg_table[np.int64((state >> _SHIFT16) % tsize)]
                    if cand == target:
                        continue
                    outs[m] = cand
                    m += 1
                if m == 1:
                    continue
                loss_sum += _cbow_apply(
                    vin, vout, ctx[:nctx], outs[:m], labels[:m], lr, h, e, g
                )
                n_steps += 1
            else:
                center = kept[i]
                for j in range(lo, hi + 1):
                    if j == i:
                        continue
                    target = kept[j]
                    outs[0] = target
                    m = 1
                    for n in range(k):
                        state = state * _RNG_A + _RNG_C
                        cand = neg_table[np.int64((state >> _SHIFT16) % tsize)]
                        for _retry in range(10):
                            if cand != target:
                                break
                            state = state * _RNG_A + _RNG_C
                            cand = neg_table[np.int64((state >> _SHIFT16) % tsize)]
                        if cand == target:
                            continue
                        outs[m] = cand
                        m += 1
                    if m == 1:
                        continue
                    loss_sum += _sg_apply(
                        vin, vout, center, outs[:m], labels[:m], lr, h, e, g
                    )
                    n_steps += 1

    return loss_sum, n_steps, state


# ---------------------------------------------------------------------------
# Full training pipeline
# ---------------------------------------------------------------------------


def iter_corpus_tokens(path) -> Iterator[str]:
    """Flat token stream over a rewritten corpus (one post per line)."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            for tok in line.split():
                yield tok


def _encode_corpus(path, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray, int]:
    """Map the corpus to id sequences: flat ids + sentence offsets."""
    index = vocab.index
    ids: list[np.ndarray] = []
    lengths: list[int] = [0]
    max_sent = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            sent = [index[t] for t in line.split() if t in index]
            if sent:
                arr = np.asarray(sent, dtype=np.int32)
                ids.append(arr)
                lengths.append(len(arr))
                if len(arr) > max_sent:
                    max_sent = len(arr)
    if not ids:
        return np.empty(0, np.int32), np.zeros(1, np.int64), 0
    flat = np.concatenate(ids)
    offsets = np.cumsum(np.asarray(lengths, dtype=np.int64))
    return flat, offsets, max_sent


def _keep_prob_array(vocab: Vocabulary, t: float, protect_enhanced: bool) -> np.ndarray:
    kp = np.empty(len(vocab), dtype=np.float64)
    for i in range(len(vocab)):
        kp[i] = keep_probability(
            int(vocab.counts[i]),
            vocab.total_tokens,
            t,
            is_enhanced=protect_enhanced and bool(vocab.enhanced_mask[i]),
        )
    return kp


def _mix_seed(seed: int, stream: int) -> np.uint64:
    mask = 0xFFFFFFFFFFFFFFFF
    state = (seed & mask) ^ ((0x9E3779B97F4A7C15 * (stream + 1)) & mask)
    for _ in range(3):
        state = (state * int(_RNG_A) + int(_RNG_C)) & mask
    return np.uint64(state)


def train(corpus_path, config: TrainConfig) -> EmbeddingModel:
    """Train an embedding model on a rewritten corpus file.

    Input vectors start uniform in [-0.5/d, 0.5/d], output vectors at
    zero. Every epoch streams the encoded sentences, subsamples frequent
    tokens, shrinks the window uniformly per position, and applies one
    negative-sampling step per position (CBOW) or per context pair
    (skip-gram). The learning rate decays linearly to 1e-4 of its initial
    value over all scheduled tokens. With ``workers == 1`` the result is
    bit-reproducible for a fixed seed; more workers trade determinism for
    speed via lock-free shared updates.
    """
    config.validate()
    try:
        token_stream = iter_corpus_tokens(corpus_path)
        vocab = build_vocab(token_stream, config.min_count, config.protect_enhanced)
    except OSError as exc:
        raise TrainingError(f"cannot read corpus {corpus_path}: {exc}") from exc

    flat, offsets, max_sent = _encode_corpus(corpus_path, vocab)
    n_sent = len(offsets) - 1

    rng = np.random.default_rng(config.seed)
    d = config.dims
    vin = ((rng.random((len(vocab), d), dtype=np.float64) - 0.5) / d).astype(np.float32)
    vout = np.zeros((len(vocab), d), dtype=np.float32)

    keep_prob = _keep_prob_array(vocab, config.subsample_t, config.protect_enhanced)
    table = build_negative_table(vocab)
    total_scheduled = float(max(1, config.epochs * vocab.total_tokens))
    lr_min = config.initial_lr * 1e-4
    progress = np.zeros(1, dtype=np.int64)

    def run_range(lo: int, hi: int, state):
        # numba hands the updated state back as a Python int; re-wrap it so
        # the next call does not overflow int64 type inference.
        state = np.uint64(int(state) & 0xFFFFFFFFFFFFFFFF)
        return _train_range(
            vin,
            vout,
            flat,
            offsets,
            lo,
            hi,
            max_sent,
            keep_prob,
            table.table,
            config.window,
            config.negatives,
            config.arch == "cbow",
            config.initial_lr,
            lr_min,
            total_scheduled,
            progress,
            state,
        )

    state = _mix_seed(config.seed, 0)
    for epoch in range(config.epochs):
        if n_sent == 0:
            break
        if config.workers == 1:
            loss_sum, n_steps, state = run_range(0, n_sent, state)
        else:
            bounds = np.linspace(0, n_sent, config.workers + 1).astype(np.int64)
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futs = [
                    pool.submit(run_range, int(bounds[w]), int(bounds[w + 1]),
                                _mix_seed(config.seed, epoch * config.workers + w + 1))
                    for w in range(config.workers)
                ]
                results = [f.result() for f in futs]
            loss_sum = sum(r[0] for r in results)
            n_steps = sum(r[1] for r in results)
        if n_steps:
            log.info("epoch %d/%d: mean loss %.4f over %d steps",
                     epoch + 1, config.epochs, loss_sum / n_steps, n_steps)

    model = EmbeddingModel(vocab=vocab, input_vectors=vin, output_vectors=vout,
                           config=replace(config))
    if not (np.isfinite(vin).all() and np.isfinite(vout).all()):
        raise TrainingError("training produced non-finite vectors")
    return model


# ---------------------------------------------------------------------------
# Model persistence (word2vec text format)
# ---------------------------------------------------------------------------


def _write_vectors(path, tokens: list[str], matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for token, row in zip(tokens, matrix):
            fh.write(token)
            for x in row:
                fh.write(f" {x:.6g}")
            fh.write("\n")


def save_model(model: EmbeddingModel, path) -> None:
    """Write input vectors to ``path`` (header ``V D`` then one token per
    row, 6 significant digits) and output vectors to ``path + '.out'``."""
    _write_vectors(path, model.vocab.tokens, model.input_vectors)
    if model.output_vectors is not None:
        _write_vectors(str(path) + ".out", model.vocab.tokens, model.output_vectors)


def _read_vectors(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(" ")
        if len(header) != 2:
            raise ModelFormatError(f"{path}: header must be 'V D'")
        try:
            n_rows, dims = int(header[0]), int(header[1])
        except ValueError as exc:
            raise ModelFormatError(f"{path}: non-integer header: {header}") from exc
        if n_rows < 1 or dims < 1:
            raise ModelFormatError(f"{path}: header out of range: {header}")
        tokens: list[str] = []
        matrix = np.empty((n_rows, dims), dtype=np.float32)
        for i, line in enumerate(fh):
            if i >= n_rows:
                raise ModelFormatError(f"{path}: more rows than header declares")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dims + 1:
                raise ModelFormatError(
                    f"{path}: row {i + 1} has {len(parts) - 1} values, expected {dims}"
                )
            tokens.append(parts[0])
            try:
                matrix[i] = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise ModelFormatError(f"{path}: row {i + 1}: {exc}") from exc
        if len(tokens) != n_rows:
            raise ModelFormatError(
                f"{path}: {len(tokens)} rows but header declares {n_rows}"
            )
    if len(set(tokens)) != len(tokens):
        raise ModelFormatError(f"{path}: duplicate tokens")
    return tokens, matrix


def load_model(path) -> EmbeddingModel:
    """Load a model saved by :func:`save_model`.

    The sidecar output-vector file is picked up when present. Occurrence
    counts are not stored in the format, so the loaded vocabulary carries
    zero counts; ids follow file order.
    """
    tokens, vin = _read_vectors(path)
    vocab = Vocabulary(tokens, np.zeros(len(tokens), dtype=np.int64))
    out_path = str(path) + ".out"
    vout = None
    try:
        out_tokens, vout_mat = _read_vectors(out_path)
        if out_tokens == tokens and vout_mat.shape == vin.shape:
            vout = vout_mat
    except FileNotFoundError:
        pass
    return EmbeddingModel(vocab=vocab, input_vectors=vin, output_vectors=vout, config=None)
