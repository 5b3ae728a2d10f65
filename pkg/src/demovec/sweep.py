"""Robustness sweep over model specification and corpus size.

Trains one model per grid cell (architecture x dimensions x epochs x
corpus fraction), then measures how strongly gender shows up in the
enhanced tokens two ways: point-biserial correlation of gender with the
first principal component, and with the projections on a supplied
semantic axis. Corpus fractions are prefixes of a once-shuffled copy so
the fraction curves are nested.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import (
    build_axis,
    extract_token_matrix,
    gender_labels,
    pca,
    point_biserial,
    token_projections,
)
from .embedding import TrainConfig, train

__all__ = ["SweepGrid", "SweepRow", "SWEEP_HEADER", "run_sweep", "sweep_rows_to_table"]

log = logging.getLogger("demovec.sweep")

SWEEP_HEADER = [
    "model",
    "dims",
    "epochs",
    "fraction",
    "r_pc1_gender",
    "r_axis_gender",
    "wall_time_s",
    "status",
]


@dataclass
class SweepGrid:
    models: list[str]
    dims: list[int]
    epochs: list[int]
    fractions: list[float]

    def validate(self) -> None:
        if not (self.models and self.dims and self.epochs and self.fractions):
            raise ValueError("sweep grid must be non-empty on every dimension")
        for f in self.fractions:
            if not 0.0 < f <= 1.0:
                raise ValueError(f"corpus fraction must be in (0, 1], got {f}")

    def cells(self):
        return itertools.product(self.models, self.dims, self.epochs, self.fractions)

    def __len__(self) -> int:
        return len(self.models) * len(self.dims) * len(self.epochs) * len(self.fractions)


@dataclass
class SweepRow:
    model: str
    dims: int
    epochs: int
    fraction: float
    r_pc1_gender: float
    r_axis_gender: float
    wall_time_s: float
    status: str


def _cell_metrics(model, pos_words, neg_words) -> tuple[float, float]:
    tm = extract_token_matrix(model)
    labels = gender_labels(tm.keys)
    r_pc1 = point_biserial(labels, pca(tm.rows, 1).scores[:, 0]).statistic
    axis = build_axis(model, pos_words, neg_words)
    r_axis = point_biserial(labels, token_projections(tm, axis)).statistic
    return r_pc1, r_axis


def run_sweep(
    corpus_path,
    grid: SweepGrid,
    pos_words: list[str],
    neg_words: list[str],
    base_config: TrainConfig,
    work_dir,
) -> list[SweepRow]:
    """Run every grid cell; failures are recorded per row, never fatal.

    The corpus is shuffled once with the base config's seed; each
    fraction trains on a prefix of that shuffle. Rows come back in grid
    order (models x dims x epochs x fractions).
    """
    grid.validate()
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)

    with open(corpus_path, encoding="utf-8") as fh:
        lines = fh.readlines()
    order = np.random.default_rng(base_config.seed).permutation(len(lines))
    shuffled = [lines[i] for i in order]

    fraction_files: dict[float, Path] = {}
    for frac in sorted(set(grid.fractions)):
        n = max(1, int(round(frac * len(shuffled))))
        path = work_dir / f"corpus_frac_{frac:g}.txt"
        with open(path, "w", encoding="utf-8", newline="") as out:
            out.writelines(shuffled[:n])
        fraction_files[frac] = path

    rows: list[SweepRow] = []
    for arch, dims, epochs, frac in grid.cells():
        config = replace(base_config, arch=arch, dims=dims, epochs=epochs)
        t0 = time.perf_counter()
        try:
            config.validate()
            model = train(fraction_files[frac], config)
            r_pc1, r_axis = _cell_metrics(model, pos_words, neg_words)
            status = "ok"
        except Exception as exc:  # per-cell failure: record and continue
            r_pc1 = r_axis = float("nan")
            status = f"error: {exc}"
            log.warning("sweep cell (%s, d=%d, e=%d, f=%g) failed: %s",
                        arch, dims, epochs, frac, exc)
        wall = time.perf_counter() - t0
        rows.append(SweepRow(arch, dims, epochs, frac, r_pc1, r_axis, wall, status))
        log.info("sweep cell (%s, d=%d, e=%d, f=%g): r_pc1=%.3f r_axis=%.3f (%.1fs)",
                 arch, dims, epochs, frac, r_pc1, r_axis, wall)
    return rows


def sweep_rows_to_table(rows: list[SweepRow]) -> list[list[str]]:
    out = []
    for r in rows:
        out.append([
            r.model,
            str(r.dims),
            str(r.epochs),
            f"{r.fraction:g}",
            f"{r.r_pc1_gender:.10g}",
            f"{r.r_axis_gender:.10g}",
            f"{r.wall_time_s:.3f}",
            r.status,
        ])
    return out
