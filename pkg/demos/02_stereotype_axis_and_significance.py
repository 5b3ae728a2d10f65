"""Projecting enhanced I-tokens on a semantic axis, with a permutation test.

Builds the planted "gender stereotype" axis (mean of the F-associated
word vectors minus mean of the M-associated ones), projects every
I-token on it, and asks whether the female/male projection gap could be
chance: pole words are shuffled into random pseudo-poles 999 times and
the gap is recomputed against each random axis.

Reuses the corpus from demo 01 when present (run that first for speed);
otherwise regenerates it. Outputs land in demo_output/02/.
"""
import pathlib

import numpy as np

from demovec.analysis import (
    build_axis,
    extract_token_matrix,
    gender_labels,
    permutation_test,
    token_projections,
)
from demovec.corpus import EN_PRONOUNS, prep_corpus
from demovec.embedding import TrainConfig, train
from demovec.synth import SyntheticSpec, generate_corpus

OUT = pathlib.Path("demo_output/02")
OUT.mkdir(parents=True, exist_ok=True)
SEED = 7

spec = SyntheticSpec(n_posts=120_000, age_min=16, age_max=45, beta=0.5,
                     gamma=0.0, seed=SEED)
corpus = pathlib.Path("demo_output/01/corpus.txt")
if not corpus.exists():
    print("generating corpus (run demo 01 first to skip this) ...")
    generate_corpus(spec, OUT / "posts.jsonl")
    corpus = OUT / "corpus.txt"
    prep_corpus(OUT / "posts.jsonl", corpus, pronouns=EN_PRONOUNS,
                age_min=spec.age_min, age_max=spec.age_max)

print("training ...")
model = train(corpus, TrainConfig(dims=100, epochs=1, initial_lr=0.05, seed=SEED))
tm = extract_token_matrix(model)

# ---------------------------------------------------------------------------
# 1. The planted axis and the cosine projection of every I-token on it.
# ---------------------------------------------------------------------------
axis = build_axis(model, spec.f_words, spec.m_words)
proj = token_projections(tm, axis)
f_mask = gender_labels(tm.keys).astype(bool)

print("\nprojection on the planted axis (cosine):")
print(f"  F tokens: mean {proj[f_mask].mean():+.3f}, "
      f"{(proj[f_mask] > 0).mean():.0%} positive")
print(f"  M tokens: mean {proj[~f_mask].mean():+.3f}, "
      f"{(proj[~f_mask] < 0).mean():.0%} negative")

with open(OUT / "projections.tsv", "w", encoding="utf-8") as fh:
    fh.write("gender\tage\tprojection\n")
    for key, p in zip(tm.keys, proj):
        fh.write(f"{key.gender.value}\t{key.age}\t{p:.6f}\n")
print(f"per-token table written to {OUT / 'projections.tsv'}")

# ---------------------------------------------------------------------------
# 2. Is the gap bigger than random axes allow? Shuffle the pooled pole
#    words into pseudo-poles and rebuild the axis 999 times.
# ---------------------------------------------------------------------------
observed, p_value, nulls = permutation_test(
    model, spec.f_words, spec.m_words, tm, n_perms=999, seed=SEED
)
np.savetxt(OUT / "null_samples.txt", nulls, fmt="%.6g")

q = np.quantile(np.abs(nulls), [0.5, 0.9, 0.99, 1.0])
print(f"\nobserved gender gap in mean projection: {observed:+.4f}")
print(f"|gap| under shuffled axes: median {q[0]:.4f}, "
      f"p90 {q[1]:.4f}, p99 {q[2]:.4f}, max {q[3]:.4f}")
print(f"permutation p-value (999 shuffles, two-sided): {p_value:.4f}")
