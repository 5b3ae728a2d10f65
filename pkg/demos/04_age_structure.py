"""Age structure in enhanced I-tokens: axis projections and ordering.

This corpus plants an age signal instead of a gender one: a lexicon of
age-marked words whose usage rate climbs linearly with author age
(gradient gamma = 0.5). Projecting I-tokens on an axis from those words
toward frequent neutral words recovers the age ranking, and the vectors
line up so that each age sits between its neighbors.

Outputs land in demo_output/04/.
"""
import pathlib

from demovec.analysis import (
    age_ordering_score,
    build_axis,
    extract_token_matrix,
    spearman,
    token_projections,
)
from demovec.corpus import EN_PRONOUNS, prep_corpus
from demovec.embedding import TrainConfig, train
from demovec.synth import SyntheticSpec, generate_corpus

OUT = pathlib.Path("demo_output/04")
OUT.mkdir(parents=True, exist_ok=True)
SEED = 17

spec = SyntheticSpec(n_posts=100_000, age_min=16, age_max=45, beta=0.5,
                     gamma=0.5, gender_rate=0.2, seed=SEED)
print(f"generating {spec.n_posts} posts with an age gradient ...")
generate_corpus(spec, OUT / "posts.jsonl")
prep_corpus(OUT / "posts.jsonl", OUT / "corpus.txt", pronouns=EN_PRONOUNS,
            age_min=spec.age_min, age_max=spec.age_max)

print("training ...")
model = train(OUT / "corpus.txt", TrainConfig(dims=100, epochs=1,
                                              initial_lr=0.05, seed=SEED))
tm = extract_token_matrix(model)

# Axis: age-marked words vs frequent neutral background words.
axis = build_axis(model, spec.age_words, spec.neutral_words())
proj = token_projections(tm, axis)
rho = spearman(tm.ages(), proj)
print(f"\nSpearman rho(age, projection on age axis) = {rho.statistic:+.3f} "
      f"(p = {rho.p_value:.2e})")

print("\nmean projection by age bucket:")
ages = tm.ages()
for lo in range(spec.age_min, spec.age_max, 6):
    hi = min(lo + 5, spec.age_max)
    mask = (ages >= lo) & (ages <= hi)
    print(f"  {lo}-{hi}: {proj[mask].mean():+.4f}")

# Face validity: is each age's vector between its neighbors? Compare the
# fraction against what shuffled age assignments produce.
import numpy as np
from demovec.analysis import TokenMatrix

scores = age_ordering_score(tm)
rng = np.random.default_rng(SEED)
baselines = {g: [] for g in scores}
for _ in range(30):
    shuffled = TokenMatrix(keys=tm.keys, rows=tm.rows[rng.permutation(len(tm.keys))])
    for g, s in age_ordering_score(shuffled).items():
        baselines[g].append(s)
for gender, score in sorted(scores.items()):
    base = float(np.mean(baselines[gender]))
    print(f"\nage betweenness score ({gender.value}): {score:.2f} "
          f"vs shuffled-age baseline {base:.2f}")
