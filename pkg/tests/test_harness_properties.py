"""Planted-signal recovery properties of the synthetic harness.

These retrain small models repeatedly, so they are the slowest part of
the suite after the acceptance gate.
"""
import numpy as np
import pytest

from demovec.analysis import extract_token_matrix, gender_labels, pca, point_biserial
from demovec.corpus import EN_PRONOUNS, prep_corpus
from demovec.embedding import TrainConfig, train
from demovec.synth import SyntheticSpec, generate_corpus

BETAS = (0.0, 0.25, 0.5, 1.0)
SEEDS = (1, 2, 3)


def recovery_r(tmp_path, beta: float, seed: int) -> float:
    spec = SyntheticSpec(n_posts=120_000, age_min=16, age_max=45, beta=beta,
                         gamma=0.0, seed=seed)
    jsonl = tmp_path / f"b{beta}_s{seed}.jsonl"
    corpus = tmp_path / f"b{beta}_s{seed}.txt"
    generate_corpus(spec, jsonl)
    prep_corpus(jsonl, corpus, pronouns=EN_PRONOUNS, age_min=16, age_max=45)
    model = train(corpus, TrainConfig(dims=100, epochs=1, initial_lr=0.05, seed=seed))
    tm = extract_token_matrix(model)
    r = point_biserial(gender_labels(tm.keys), pca(tm.rows, 1).scores[:, 0]).statistic
    jsonl.unlink()
    corpus.unlink()
    return abs(r)


@pytest.fixture(scope="module")
def beta_curve(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("beta")
    return {
        beta: float(np.mean([recovery_r(tmp, beta, seed) for seed in SEEDS]))
        for beta in BETAS
    }


def test_recovery_monotone_in_beta(beta_curve):
    values = [beta_curve[b] for b in BETAS]
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo - 0.05, f"recovery curve not monotone: {beta_curve}"


def test_no_false_signal_at_beta_zero(beta_curve):
    assert beta_curve[0.0] < 0.3


def test_strong_recovery_at_high_beta(beta_curve):
    assert beta_curve[0.5] >= 0.9
    assert beta_curve[1.0] >= 0.9
