"""Command-line entry point wiring the pipeline stages together.

Subcommands: synth (generate a synthetic corpus), prep (JSONL to
rewritten corpus), train (corpus to model files), analyze (model to
PCA/correlation/projection tables), permtest (pole-shuffling
significance test), sweep (robustness grid).

Option precedence: command-line flags over the ``--config`` file over
built-in defaults. The config file is flat ``key = value`` lines whose
keys mirror the flag names. All randomness flows from ``--seed``; the
``DEMOVEC_LOG`` environment variable picks the log level.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, corpus, embedding, report, sweep, synth
from .analysis import AnalysisError
from .corpus import CorpusError, EN_PRONOUNS, RU_PRONOUNS
from .embedding import (
    ConfigError,
    ModelFormatError,
    TrainConfig,
    TrainingError,
    VocabularyError,
)

__all__ = ["run", "main"]

log = logging.getLogger("demovec")

_DEFAULTS = {
    "dims": 100,
    "epochs": 10,
    "window": 5,
    "negatives": 5,
    "lr": 0.025,
    "min_count": 5,
    "subsample": 1e-4,
    "arch": "cbow",
    "seed": 1,
    "workers": 1,
    "age_min": corpus.DEFAULT_AGE_MIN,
    "age_max": corpus.DEFAULT_AGE_MAX,
    "n": 999,
    "pronouns": "ru",
}


class UsageError(Exception):
    """Bad flag/config combination; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` config; ``#`` comments, keys mirror flag names."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


class Resolver:
    """Merged view: CLI flags over config file over defaults."""

    def __init__(self, args: argparse.Namespace, config: dict[str, str]):
        self.args = vars(args)
        self.config = config
        self.resolved: dict[str, object] = {}

    def get(self, key: str, coerce=str, default=None):
        if default is None:
            default = _DEFAULTS.get(key)
        cli_value = self.args.get(key)
        if cli_value is not None:
            value = cli_value
        elif key in self.config:
            try:
                value = coerce(self.config[key])
            except ValueError as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
        else:
            value = default
        self.resolved[key] = value
        return value

    def require(self, key: str, coerce=str):
        value = self.get(key, coerce)
        if value is None:
            flag = "--" + key.replace("_", "-").removesuffix("-path")
            raise UsageError(f"missing required option {flag}")
        return value

    def log_resolved(self, command: str) -> None:
        pairs = " ".join(f"{k}={v}" for k, v in sorted(self.resolved.items()))
        log.info("resolved config [%s]: %s", command, pairs)

    def manifest_config(self, command: str) -> dict:
        out = {"command": command}
        out.update({k: v for k, v in sorted(self.resolved.items())})
        return out


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _load_pronouns(value: str) -> frozenset[str]:
    if value == "ru":
        return RU_PRONOUNS
    if value == "en":
        return EN_PRONOUNS
    return frozenset(corpus.load_wordlist(value))


def _train_config(res: Resolver) -> TrainConfig:
    config = TrainConfig(
        arch=res.get("arch"),
        dims=res.get("dims", int),
        epochs=res.get("epochs", int),
        window=res.get("window", int),
        negatives=res.get("negatives", int),
        initial_lr=res.get("lr", float),
        subsample_t=res.get("subsample", float),
        min_count=res.get("min_count", int),
        seed=res.get("seed", int),
        workers=res.get("workers", int),
    )
    config.validate()
    return config


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_synth(res: Resolver) -> int:
    out_dir = Path(res.require("out"))
    spec = synth.SyntheticSpec(
        n_posts=res.get("n_posts", int, 10_000),
        age_min=res.get("age_min", int),
        age_max=res.get("age_max", int),
        beta=res.get("beta", float, 0.5),
        gamma=res.get("gamma", float, 0.1),
        gender_rate=res.get("gender_rate", float, 0.55),
        age_profile=res.get("age_profile", str, "linear"),
        background_vocab_size=res.get("background_vocab_size", int, 20_000),
        post_len_min=res.get("post_len_min", int, 8),
        post_len_max=res.get("post_len_max", int, 30),
        pronoun=res.get("pronoun", str, "i"),
        pronoun_rate=res.get("pronoun_rate", float, 0.8),
        seed=res.get("seed", int),
    )
    n_f = res.get("n_f_words", int, 500)
    n_m = res.get("n_m_words", int, 500)
    n_age = res.get("n_age_words", int, 30)
    spec.f_words = synth.default_wordlist("fem", n_f)
    spec.m_words = synth.default_wordlist("masc", n_m)
    spec.age_words = synth.default_wordlist("age", n_age)
    res.log_resolved("synth")

    out_dir.mkdir(parents=True, exist_ok=True)
    posts_path = out_dir / "posts.jsonl"
    n = synth.generate_corpus(spec, posts_path)
    synth.write_wordlists(spec, out_dir)
    report.emit_report(
        out_dir,
        tables={},
        config=res.manifest_config("synth"),
        inputs={},
        text_files={"corpus_info.txt": f"posts\t{n}\n"},
    )
    print(f"posts_written={n}")
    return 0


def _cmd_prep(res: Resolver) -> int:
    in_path = res.require("in_path")
    out_path = res.require("out")
    pronouns = _load_pronouns(res.get("pronouns"))
    lemmas_path = res.get("lemmas")
    table = corpus.load_lemma_table(lemmas_path) if lemmas_path else None
    age_min = res.get("age_min", int)
    age_max = res.get("age_max", int)
    res.log_resolved("prep")

    stats = corpus.prep_corpus(
        in_path, out_path, pronouns=pronouns, lemma_table=table,
        age_min=age_min, age_max=age_max,
    )
    for err in stats.first_errors:
        log.warning("skipped record: %s", err)
    for key, value in stats.as_dict().items():
        print(f"{key}={value}")
    return 0


def _cmd_train(res: Resolver) -> int:
    in_path = res.require("in_path")
    out_path = res.require("out")
    config = _train_config(res)
    res.log_resolved("train")
    model = embedding.train(in_path, config)
    embedding.save_model(model, out_path)
    log.info("saved %d x %d vectors to %s", len(model.vocab), config.dims, out_path)
    print(f"vocab_size={len(model.vocab)}")
    print(f"model={out_path}")
    return 0


def _analysis_correlations(tm, pc, age_split: int):
    labels = analysis.gender_labels(tm.keys)
    ages = tm.ages()
    rows = []

    def add(name: str, fn):
        try:
            r = fn()
            rows.append([name, f"{r.statistic:.10g}", f"{r.p_value:.6g}",
                         f"{r.log10_p:.6g}", str(r.n)])
        except AnalysisError as exc:
            rows.append([name, "nan", "nan", "nan", "0"])
            log.info("correlation %s unavailable: %s", name, exc)

    add("pb_gender_pc1", lambda: analysis.point_biserial(labels, pc.scores[:, 0]))
    for comp, side in ((1, "younger"), (2, "older")):
        if pc.scores.shape[1] <= comp:
            continue
        scores = pc.scores[:, comp]
        add(f"spearman_age_pc{comp + 1}", lambda s=scores: analysis.spearman(ages, s))
        mask = ages <= age_split if side == "younger" else ages >= age_split
        add(
            f"spearman_age_pc{comp + 1}_{side}",
            lambda s=scores, m=mask: analysis.spearman(ages[m], s[m]),
        )
    return rows


def _cmd_analyze(res: Resolver) -> int:
    model_path = res.require("model")
    out_dir = Path(res.require("out"))
    pos_path = res.get("pos")
    neg_path = res.get("neg")
    age_split = res.get("age_split", int, 26)
    k_max = res.get("pca_k", int, 5)
    res.log_resolved("analyze")

    model = embedding.load_model(model_path)
    tm = analysis.extract_token_matrix(model)
    k = min(len(tm.keys) - 1, tm.rows.shape[1], k_max)
    pc = analysis.pca(tm.rows, k)

    score_rows = []
    for i, key in enumerate(tm.keys):
        score_rows.append([key.gender.value, str(key.age)]
                          + [f"{x:.10g}" for x in pc.scores[i]])
    tables = {
        "pca_scores": (["gender", "age"] + [f"pc{j + 1}" for j in range(k)], score_rows),
        "explained_variance": (
            ["component", "ratio"],
            [[f"pc{j + 1}", f"{x:.10g}"] for j, x in enumerate(pc.explained_variance_ratio)],
        ),
        "correlations": (
            ["name", "statistic", "p_value", "log10_p", "n"],
            _analysis_correlations(tm, pc, age_split),
        ),
    }

    inputs = {"model": model_path}
    if pos_path and neg_path:
        pos_words = corpus.load_wordlist(pos_path)
        neg_words = corpus.load_wordlist(neg_path)
        axis = analysis.build_axis(model, pos_words, neg_words)
        if axis.missing:
            log.warning("axis pole words missing from vocabulary: %s", axis.missing)
        proj = analysis.token_projections(tm, axis)
        tables["projections"] = (
            ["gender", "age", "projection"],
            [[key.gender.value, str(key.age), f"{proj[i]:.10g}"]
             for i, key in enumerate(tm.keys)],
        )
        labels = analysis.gender_labels(tm.keys)
        r = analysis.point_biserial(labels, proj)
        tables["correlations"][1].append(
            ["pb_gender_projection", f"{r.statistic:.10g}", f"{r.p_value:.6g}",
             f"{r.log10_p:.6g}", str(r.n)]
        )
        inputs.update({"pos": pos_path, "neg": neg_path})
    elif pos_path or neg_path:
        raise UsageError("--pos and --neg must be given together")

    report.emit_report(out_dir, tables, res.manifest_config("analyze"), inputs)
    print(f"report={out_dir}")
    return 0


def _cmd_permtest(res: Resolver) -> int:
    model_path = res.require("model")
    pos_path = res.require("pos")
    neg_path = res.require("neg")
    out_dir = Path(res.require("out"))
    n_perms = res.get("n", int)
    seed = res.get("seed", int)
    res.log_resolved("permtest")

    model = embedding.load_model(model_path)
    tm = analysis.extract_token_matrix(model)
    observed, p_value, null_samples = analysis.permutation_test(
        model,
        corpus.load_wordlist(pos_path),
        corpus.load_wordlist(neg_path),
        tm,
        n_perms=n_perms,
        seed=seed,
    )
    tables = {
        "permutation_summary": (
            ["observed", "p_value", "n_perms"],
            [[f"{observed:.10g}", f"{p_value:.10g}", str(n_perms)]],
        )
    }
    nulls = "".join(f"{x:.10g}\n" for x in null_samples)
    report.emit_report(
        out_dir,
        tables,
        res.manifest_config("permtest"),
        inputs={"model": model_path, "pos": pos_path, "neg": neg_path},
        text_files={"null_samples.txt": nulls},
    )
    print(f"observed={observed:.10g}")
    print(f"p_value={p_value:.10g}")
    return 0


def _cmd_sweep(res: Resolver) -> int:
    in_path = res.require("in_path")
    out_dir = Path(res.require("out"))
    pos_path = res.require("pos")
    neg_path = res.require("neg")
    base = _train_config(res)
    grid = sweep.SweepGrid(
        models=res.get("models", _str_list, [base.arch]),
        dims=res.get("dims_grid", _int_list, [base.dims]),
        epochs=res.get("epochs_grid", _int_list, [base.epochs]),
        fractions=res.get("fractions", _float_list, [1.0]),
    )
    try:
        grid.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res.log_resolved("sweep")

    rows = sweep.run_sweep(
        in_path,
        grid,
        corpus.load_wordlist(pos_path),
        corpus.load_wordlist(neg_path),
        base,
        work_dir=out_dir / "work",
    )
    report.emit_report(
        out_dir,
        {"sweep": (sweep.SWEEP_HEADER, sweep.sweep_rows_to_table(rows))},
        res.manifest_config("sweep"),
        inputs={"corpus": in_path, "pos": pos_path, "neg": neg_path},
    )
    print(f"cells={len(rows)}")
    print(f"report={out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------


def _add_common(p: _Parser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)


def _add_train_flags(p: _Parser) -> None:
    p.add_argument("--dims", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--min-count", dest="min_count", type=int, default=None)
    p.add_argument("--subsample", type=float, default=None)
    p.add_argument("--arch", choices=("cbow", "sg"), default=None)
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="demovec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", help="generate a synthetic JSONL corpus")
    p.add_argument("--out", default=None)
    p.add_argument("--age-min", dest="age_min", type=int, default=None)
    p.add_argument("--age-max", dest="age_max", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("prep", help="rewrite JSONL posts into a training corpus")
    p.add_argument("--in", dest="in_path", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--pronouns", default=None)
    p.add_argument("--lemmas", default=None)
    p.add_argument("--age-min", dest="age_min", type=int, default=None)
    p.add_argument("--age-max", dest="age_max", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("train", help="train embeddings on a rewritten corpus")
    p.add_argument("--in", dest="in_path", default=None)
    p.add_argument("--out", default=None)
    _add_train_flags(p)
    _add_common(p)

    p = sub.add_parser("analyze", help="PCA and correlation tables from a model")
    p.add_argument("--model", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--pos", default=None)
    p.add_argument("--neg", default=None)
    _add_common(p)

    p = sub.add_parser("permtest", help="pole-shuffling permutation test")
    p.add_argument("--model", default=None)
    p.add_argument("--pos", default=None)
    p.add_argument("--neg", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)

    p = sub.add_parser("sweep", help="robustness grid over model specification")
    p.add_argument("--in", dest="in_path", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--pos", default=None)
    p.add_argument("--neg", default=None)
    _add_train_flags(p)
    _add_common(p)

    return parser


_COMMANDS = {
    "synth": _cmd_synth,
    "prep": _cmd_prep,
    "train": _cmd_train,
    "analyze": _cmd_analyze,
    "permtest": _cmd_permtest,
    "sweep": _cmd_sweep,
}


class _StderrHandler(logging.StreamHandler):
    """Resolves sys.stderr at emit time so redirected streams stay valid."""

    def __init__(self):
        logging.Handler.__init__(self)

    @property
    def stream(self):
        return sys.stderr


def _setup_logging() -> None:
    level_name = os.environ.get("DEMOVEC_LOG", "info").upper()
    level = getattr(logging, level_name, logging.INFO)
    handler = _StderrHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("demovec")
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(level)


def run(argv) -> int:
    """Dispatch a command line; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    _setup_logging()
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        config = load_config_file(args.config) if args.config else {}
        return _COMMANDS[args.command](Resolver(args, config))
    except (UsageError, ConfigError) as exc:
        print(f"demovec {args.command}: {exc}", file=sys.stderr)
        return 1
    except (
        CorpusError,
        ModelFormatError,
        VocabularyError,
        TrainingError,
        AnalysisError,
        OSError,
    ) as exc:
        print(f"demovec {args.command}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"demovec {args.command}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
