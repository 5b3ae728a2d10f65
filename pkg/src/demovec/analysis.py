"""Statistical battery over enhanced-token embeddings.

Everything downstream of a trained model lives here: pulling the
enhanced I-token vectors into a matrix, PCA over them, point-biserial
and Spearman correlations with demographics, semantic-axis construction
and projection, the pole-shuffling permutation test, and the
age-ordering face-validity check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .corpus import DemographicKey, Gender, try_parse_enhanced
from .embedding import EmbeddingModel

__all__ = [
    "AnalysisError",
    "UndefinedCorrelationError",
    "DegenerateAxisError",
    "PermutationError",
    "TokenMatrix",
    "PcaResult",
    "SemanticAxis",
    "CorrelationResult",
    "extract_token_matrix",
    "pca",
    "point_biserial",
    "spearman",
    "build_axis",
    "project",
    "token_projections",
    "permutation_test",
    "age_ordering_score",
    "gender_labels",
]


class AnalysisError(ValueError):
    """Analysis precondition violated."""


class UndefinedCorrelationError(AnalysisError):
    """Correlation undefined (constant input or missing class)."""


class DegenerateAxisError(AnalysisError):
    """Pole difference vector is (numerically) zero."""


class PermutationError(AnalysisError):
    """Permutation test could not build enough valid null axes."""


@dataclass
class TokenMatrix:
    """Enhanced-token vectors, one row per (gender, age) key.

    Keys are sorted by (gender, age); row i belongs to keys[i].
    """

    keys: list[DemographicKey]
    rows: np.ndarray

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if len(self.keys) != self.rows.shape[0]:
            raise AnalysisError("keys/rows length mismatch")
        if len(self.keys) < 2:
            raise AnalysisError("need at least 2 enhanced tokens")
        if len(set(self.keys)) != len(self.keys):
            raise AnalysisError("duplicate demographic keys")

    def gender_mask(self, gender: Gender) -> np.ndarray:
        return np.array([k.gender == gender for k in self.keys], dtype=bool)

    def ages(self) -> np.ndarray:
        return np.array([k.age for k in self.keys], dtype=np.float64)


def extract_token_matrix(model: EmbeddingModel) -> TokenMatrix:
    """Gather every enhanced token's input vector, sorted by (gender, age)."""
    found: list[tuple[DemographicKey, int]] = []
    for i, token in enumerate(model.vocab.tokens):
        key = try_parse_enhanced(token)
        if key is not None:
            found.append((key, i))
    if len(found) < 2:
        raise AnalysisError(f"model contains {len(found)} enhanced tokens, need >= 2")
    found.sort(key=lambda ki: ki[0])
    ids = np.array([i for _, i in found], dtype=np.int64)
    return TokenMatrix(
        keys=[k for k, _ in found],
        rows=model.input_vectors[ids].astype(np.float64),
    )


def gender_labels(keys: list[DemographicKey]) -> np.ndarray:
    """0/1 coding of key genders (F = 1, M = 0)."""
    return np.array([1 if k.gender == Gender.F else 0 for k in keys], dtype=np.int64)


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


@dataclass
class PcaResult:
    components: np.ndarray  # k x d, orthonormal rows
    scores: np.ndarray  # n x k
    explained_variance_ratio: np.ndarray  # k


def pca(rows, k: int) -> PcaResult:
    """Top-k principal directions of the column-centered row matrix.

    Components come from the SVD of the centered data; each is flipped so
    its largest-magnitude entry is positive, which makes the output a
    deterministic function of the input.
    """
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise AnalysisError("need an n x d matrix with n >= 2")
    n, d = X.shape
    if not 1 <= k <= min(n - 1, d):
        raise AnalysisError(f"k={k} outside [1, {min(n - 1, d)}]")
    X = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    var = s**2 / (n - 1)
    total = var.sum()
    ratio = var / total if total > 0 else np.zeros_like(var)
    components = vt[:k].copy()
    for i in range(k):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return PcaResult(
        components=components,
        scores=X @ components.T,
        explained_variance_ratio=ratio[:k].copy(),
    )


# ---------------------------------------------------------------------------
# Correlations
# ---------------------------------------------------------------------------


@dataclass
class CorrelationResult:
    statistic: float
    p_value: float
    n: int
    log10_p: float = field(default=float("nan"))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx <= 0 or sy <= 0:
        raise UndefinedCorrelationError("zero variance input")
    return float((xc @ yc) / np.sqrt(sx * sy))


def _t_test_p(r: float, n: int) -> tuple[float, float]:
    """Two-sided p for a correlation via the t-distribution with n-2 df.

    The CDF is evaluated through the regularized incomplete beta
    function; when that underflows, the small-x asymptotic of I_x(a, 1/2)
    supplies log10(p) so magnitudes like 1e-400 stay reportable.
    """
    df = n - 2
    if abs(r) >= 1.0:
        return 0.0, float("-inf")
    t2 = r * r * df / (1.0 - r * r)
    x = df / (df + t2)
    a = df / 2.0
    p = float(special.betainc(a, 0.5, x))
    if p > 0.0:
        return min(p, 1.0), float(np.log10(p))
    log_p = a * np.log(x) - np.log(a) - special.betaln(a, 0.5)
    return 0.0, float(log_p / np.log(10.0))


def point_biserial(labels, scores) -> CorrelationResult:
    """Pearson correlation between 0/1-coded labels and scores.

    Requires both classes present and non-constant scores; p-values are
    two-tailed via t = r * sqrt((n-2) / (1-r^2)).
    """
    y = np.asarray(labels)
    x = np.asarray(scores, dtype=np.float64)
    if y.shape != x.shape or y.ndim != 1:
        raise AnalysisError("labels and scores must be equal-length 1-D sequences")
    n = len(y)
    if n < 3:
        raise AnalysisError(f"need n >= 3, got {n}")
    classes = np.unique(y)
    if not np.isin(classes, (0, 1)).all():
        raise AnalysisError(f"labels must be 0/1-coded, got values {classes}")
    if len(classes) < 2:
        raise UndefinedCorrelationError("only one label class present")
    r = _pearson(y.astype(np.float64), x)
    p, log10_p = _t_test_p(r, n)
    return CorrelationResult(statistic=r, p_value=p, n=n, log10_p=log10_p)


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> CorrelationResult:
    """Rank correlation with mean ranks on ties, t-approximated p-value."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise AnalysisError("x and y must be equal-length 1-D sequences")
    n = len(xa)
    if n < 3:
        raise AnalysisError(f"need n >= 3, got {n}")
    rho = _pearson(_average_ranks(xa), _average_ranks(ya))
    p, log10_p = _t_test_p(rho, n)
    return CorrelationResult(statistic=rho, p_value=p, n=n, log10_p=log10_p)


# ---------------------------------------------------------------------------
# Semantic axes
# ---------------------------------------------------------------------------


@dataclass
class SemanticAxis:
    """Unit direction from two opposing word lists (poles).

    ``pos_pole``/``neg_pole`` hold the words actually found in the
    vocabulary and used; ``missing`` the ones that were not.
    """

    direction: np.ndarray
    pos_pole: list[str]
    neg_pole: list[str]
    missing: list[str]


def _pole_mean(model: EmbeddingModel, words: list[str]) -> np.ndarray:
    ids = [model.vocab.id_of(w) for w in words]
    return model.input_vectors[ids].astype(np.float64).mean(axis=0)


def build_axis(
    model: EmbeddingModel,
    pos_words: list[str],
    neg_words: list[str],
    missing_threshold: float = 0.5,
) -> SemanticAxis:
    """Normalized difference of pole mean vectors: mean(pos) - mean(neg).

    Out-of-vocabulary words are skipped and recorded; losing strictly
    more than ``missing_threshold`` of either pole is an error, as is an
    empty or overlapping pole or a zero difference vector.
    """
    if not pos_words or not neg_words:
        raise AnalysisError("both pole word lists must be non-empty")
    vocab = model.vocab
    pos_found = [w for w in pos_words if w in vocab]
    neg_found = [w for w in neg_words if w in vocab]
    missing = [w for w in pos_words if w not in vocab] + [
        w for w in neg_words if w not in vocab
    ]
    if not pos_found or not neg_found:
        raise AnalysisError("a pole is empty after removing out-of-vocabulary words")
    if len(missing) and (
        1 - len(pos_found) / len(pos_words) > missing_threshold
        or 1 - len(neg_found) / len(neg_words) > missing_threshold
    ):
        raise AnalysisError(
            f"more than {missing_threshold:.0%} of a pole is out of vocabulary: {missing}"
        )
    diff = _pole_mean(model, pos_found) - _pole_mean(model, neg_found)
    norm = float(np.linalg.norm(diff))
    if norm < 1e-12:
        raise DegenerateAxisError("pole means coincide; axis direction undefined")
    if set(pos_found) & set(neg_found):
        raise AnalysisError(f"poles overlap: {sorted(set(pos_found) & set(neg_found))}")
    return SemanticAxis(
        direction=diff / norm,
        pos_pole=pos_found,
        neg_pole=neg_found,
        missing=missing,
    )


def project(vector, axis: SemanticAxis, cosine: bool = True) -> float:
    """Projection of a vector on the axis: cosine similarity by default,
    raw dot product with ``cosine=False``."""
    v = np.asarray(vector, dtype=np.float64)
    dot = float(v @ axis.direction)
    if not cosine:
        return dot
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise AnalysisError("cannot project a zero vector")
    return dot / norm


def token_projections(tm: TokenMatrix, axis: SemanticAxis, cosine: bool = True) -> np.ndarray:
    """Projection of every token-matrix row on the axis."""
    dots = tm.rows @ axis.direction
    if not cosine:
        return dots
    norms = np.linalg.norm(tm.rows, axis=1)
    if np.any(norms == 0.0):
        raise AnalysisError("token matrix contains a zero vector")
    return dots / norms


# ---------------------------------------------------------------------------
# Permutation test
# ---------------------------------------------------------------------------


def _gender_gap(projections: np.ndarray, f_mask: np.ndarray) -> float:
    return float(projections[f_mask].mean() - projections[~f_mask].mean())


def permutation_test(
    model: EmbeddingModel,
    pos_words: list[str],
    neg_words: list[str],
    token_matrix: TokenMatrix,
    n_perms: int,
    seed: int,
    cosine: bool = True,
) -> tuple[float, float, np.ndarray]:
    """Significance of the gender gap in axis projections by pole shuffling.

    The statistic is mean(projection of F-keyed tokens) minus
    mean(projection of M-keyed tokens). The null reassigns the pooled
    pole words into two pseudo-poles of the original sizes, rebuilds the
    axis, and recomputes the statistic; the two-sided p-value uses the
    plus-one estimator (1 + #{|S_perm| >= |S_obs|}) / (n_perms + 1).
    Replicate i draws from a generator seeded with seed + i, so parallel
    and serial execution produce identical null samples.
    """
    if n_perms < 1:
        raise AnalysisError(f"n_perms must be >= 1, got {n_perms}")
    axis = build_axis(model, pos_words, neg_words)
    f_mask = token_matrix.gender_mask(Gender.F)
    if not f_mask.any() or f_mask.all():
        raise AnalysisError("token matrix must contain both genders")

    if cosine:
        norms = np.linalg.norm(token_matrix.rows, axis=1)
        if np.any(norms == 0.0):
            raise AnalysisError("token matrix contains a zero vector")
        proj_rows = token_matrix.rows / norms[:, None]
    else:
        proj_rows = token_matrix.rows

    def gap_for(direction: np.ndarray) -> float:
        return _gender_gap(proj_rows @ direction, f_mask)

    observed = gap_for(axis.direction)

    pooled = axis.pos_pole + axis.neg_pole
    n_pos = len(axis.pos_pole)
    ids = np.array([model.vocab.id_of(w) for w in pooled], dtype=np.int64)
    W = model.input_vectors[ids].astype(np.float64)

    null_samples = np.empty(n_perms, dtype=np.float64)
    resamples = 0
    max_resamples = 10 * n_perms
    for i in range(n_perms):
        rng = np.random.default_rng(seed + i)
        while True:
            perm = rng.permutation(len(pooled))
            pos_idx = np.sort(perm[:n_pos])
            neg_idx = np.sort(perm[n_pos:])
            diff = W[pos_idx].mean(axis=0) - W[neg_idx].mean(axis=0)
            norm = float(np.linalg.norm(diff))
            if norm >= 1e-12:
                null_samples[i] = gap_for(diff / norm)
                break
            resamples += 1
            if resamples > max_resamples:
                raise PermutationError(
                    f"exceeded {max_resamples} resamples of degenerate null axes"
                )

    n_extreme = int(np.sum(np.abs(null_samples) >= abs(observed)))
    p_value = (1 + n_extreme) / (n_perms + 1)
    return observed, p_value, null_samples


# ---------------------------------------------------------------------------
# Age ordering (face validity)
# ---------------------------------------------------------------------------


def age_ordering_score(tm: TokenMatrix) -> dict[Gender, float]:
    """Fraction of interior ages lying metrically between their neighbors.

    Age i passes when its vector is closer to the midpoint of ages i-1
    and i+1 than half the distance between those neighbors:
    ||v_i - (v_{i-1}+v_{i+1})/2|| < ||v_{i-1} - v_{i+1}|| / 2.
    Computed per gender; a gender present with fewer than 3 ages is an
    error.
    """
    out: dict[Gender, float] = {}
    for gender in (Gender.F, Gender.M):
        mask = tm.gender_mask(gender)
        n = int(mask.sum())
        if n == 0:
            continue
        if n < 3:
            raise AnalysisError(f"gender {gender.value} has {n} ages, need >= 3")
        rows = tm.rows[mask]  # keys sorted, so rows are in ascending age order
        hits = 0
        for i in range(1, n - 1):
            mid = 0.5 * (rows[i - 1] + rows[i + 1])
            half_span = 0.5 * float(np.linalg.norm(rows[i - 1] - rows[i + 1]))
            if float(np.linalg.norm(rows[i] - mid)) < half_span:
                hits += 1
        out[gender] = hits / (n - 2)
    if not out:
        raise AnalysisError("token matrix contains no gendered keys")
    return out
