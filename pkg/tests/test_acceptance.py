"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The desk-scale experiments run on synthetic corpora with planted
signals; the planted structure is the oracle. Numeric criteria and
tolerances are asserted exactly as stated, with shared corpora reused
across criteria to keep the suite within its runtime budgets.
"""
import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

from demovec.analysis import (
    extract_token_matrix,
    gender_labels,
    pca,
    permutation_test,
    point_biserial,
    spearman,
    build_axis,
    token_projections,
)
from demovec.corpus import EN_PRONOUNS, prep_corpus
from demovec.embedding import TrainConfig, load_model, save_model, train
from demovec.sweep import SweepGrid, run_sweep
from demovec.synth import SyntheticSpec, generate_corpus
from oracles import (
    check_step_gradients,
    enumerate_balanced_splits,
    mean_ranks_oracle,
    pca_eig_oracle,
    pearson_oracle,
)


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line, flush=True)
    assert ok, line


def desk_spec(seed: int, **overrides) -> SyntheticSpec:
    spec = SyntheticSpec(
        n_posts=150_000,
        age_min=16,
        age_max=45,
        beta=0.5,
        gamma=0.0,
        seed=seed,
    )
    for key, value in overrides.items():
        setattr(spec, key, value)
    return spec


def train_config(seed: int, **overrides) -> TrainConfig:
    cfg = TrainConfig(arch="cbow", dims=100, epochs=1, initial_lr=0.05, seed=seed)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


@dataclass
class DeskRun:
    spec: SyntheticSpec
    corpus_path: str
    model: object
    seconds: float


def make_run(tmp_dir, spec: SyntheticSpec, cfg: TrainConfig) -> DeskRun:
    t0 = time.perf_counter()
    jsonl = tmp_dir / f"posts_{spec.seed}.jsonl"
    corpus = tmp_dir / f"corpus_{spec.seed}.txt"
    generate_corpus(spec, jsonl)
    prep_corpus(jsonl, corpus, pronouns=EN_PRONOUNS,
                age_min=spec.age_min, age_max=spec.age_max)
    model = train(corpus, cfg)
    return DeskRun(spec, str(corpus), model, time.perf_counter() - t0)


@pytest.fixture(scope="module")
def desk_runs(tmp_path_factory):
    """Three seeded ~20MB runs: beta = 0.5, ages 16-45, CBOW d=100, 1 epoch."""
    tmp = tmp_path_factory.mktemp("desk")
    return [make_run(tmp, desk_spec(seed), train_config(seed)) for seed in (101, 102, 103)]


@pytest.fixture(scope="module")
def null_runs(tmp_path_factory):
    """Three beta = 0 runs for the no-false-signal checks."""
    tmp = tmp_path_factory.mktemp("null")
    runs = []
    for seed in (301, 302, 303):
        spec = desk_spec(seed, n_posts=80_000, beta=0.0)
        runs.append(make_run(tmp, spec, train_config(seed)))
    return runs


def r_pc1_gender(model) -> float:
    tm = extract_token_matrix(model)
    return point_biserial(gender_labels(tm.keys), pca(tm.rows, 1).scores[:, 0]).statistic


def test_criterion_1_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2027)
    checked = 0
    configs = 0
    for arch in ("cbow", "sg"):
        for _ in range(55):
            checked += check_step_gradients(arch, rng)
            configs += 1
    elapsed = time.perf_counter() - t0
    ok = configs >= 100 and elapsed < 30.0
    report(1, ok, f"analytic vs central finite differences within 1e-4 relative on "
                  f"{configs} configs / {checked} partials in {elapsed:.1f}s (< 30s)")


def test_criterion_2_pca_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2028)
    worst = 0.0
    for _ in range(50):
        X = rng.normal(size=(20, 5))
        res = pca(X, 4)
        comps_o, ratios_o = pca_eig_oracle(X, 4)
        worst = max(worst, float(np.abs(res.explained_variance_ratio - ratios_o).max()))
        for mine, ref in zip(res.components, comps_o):
            sign = np.sign(mine @ ref)
            worst = max(worst, float(np.abs(mine - sign * ref).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 5.0
    report(2, ok, f"50 random 20x5 matrices vs covariance eigendecomposition: "
                  f"max deviation {worst:.2e} (<= 1e-8) in {elapsed:.1f}s (< 5s)")


def test_criterion_3_statistics_oracles():
    rng = np.random.default_rng(2029)
    worst_pb = 0.0
    for _ in range(50):
        n = int(rng.integers(5, 50))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.normal(size=n)
        worst_pb = max(worst_pb, abs(
            point_biserial(labels, scores).statistic - pearson_oracle(labels, scores)
        ))

    worst_sp = 0.0
    cases = [([1.0, 2.0, 2.0, 4.0], [1.0, 3.0, 2.0, 4.0])]
    for _ in range(50):
        n = int(rng.integers(4, 40))
        x = rng.integers(0, 5, size=n).astype(float)
        y = rng.integers(0, 5, size=n).astype(float)
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        cases.append((x, y))
    for x, y in cases:
        expected = pearson_oracle(mean_ranks_oracle(x), mean_ranks_oracle(y))
        worst_sp = max(worst_sp, abs(spearman(x, y).statistic - expected))

    # Permutation null vs exhaustive enumeration of the 6 balanced 2+2 splits.
    from test_analysis import make_model
    from demovec.corpus import Gender

    tokens = ["w1", "w2", "w3", "w4", "<I:F:20>", "<I:F:21>", "<I:M:20>", "<I:M:21>"]
    model = make_model(tokens, rng.normal(size=(len(tokens), 5)))
    tm = extract_token_matrix(model)
    _, _, nulls = permutation_test(model, ["w1", "w2"], ["w3", "w4"], tm,
                                   n_perms=400, seed=6)
    proj_rows = tm.rows / np.linalg.norm(tm.rows, axis=1)[:, None]
    expected = enumerate_balanced_splits(model, tokens[:4], 2, proj_rows,
                                         tm.gender_mask(Gender.F))
    perm_exact = set(np.round(nulls, 12)) == set(np.round(expected, 12))

    ok = worst_pb <= 1e-12 and worst_sp <= 1e-12 and perm_exact
    report(3, ok, f"point-biserial==Pearson (max dev {worst_pb:.1e}), Spearman vs brute "
                  f"force (max dev {worst_sp:.1e}), permutation null == exhaustive "
                  f"2+2 enumeration ({perm_exact})")


def test_criterion_4_pc1_is_gender(desk_runs):
    rs = [abs(r_pc1_gender(run.model)) for run in desk_runs]
    total_time = sum(run.seconds for run in desk_runs)
    mean_r = float(np.mean(rs))
    ok = mean_r >= 0.9 and total_time < 600.0
    report(4, ok, f"|r_pb(gender, PC1)| = {[round(r, 3) for r in rs]}, "
                  f"mean {mean_r:.3f} (>= 0.9); 3 runs took {total_time:.0f}s (< 600s)")


def test_criterion_5_planted_axis_projections(desk_runs):
    run = desk_runs[0]
    tm = extract_token_matrix(run.model)
    axis = build_axis(run.model, run.spec.f_words, run.spec.m_words)
    proj = token_projections(tm, axis)
    f_mask = gender_labels(tm.keys).astype(bool)
    frac_f_pos = float((proj[f_mask] > 0).mean())
    frac_m_neg = float((proj[~f_mask] < 0).mean())
    _, p_value, _ = permutation_test(run.model, run.spec.f_words, run.spec.m_words,
                                     tm, n_perms=999, seed=run.spec.seed)
    ok = frac_f_pos >= 0.9 and frac_m_neg >= 0.9 and p_value <= 0.01
    report(5, ok, f"F positive {frac_f_pos:.0%}, M negative {frac_m_neg:.0%} "
                  f"(>= 90%); permutation p = {p_value:.4f} (<= 0.01, n=999)")


def test_criterion_6_age_axis(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("age")
    spec = desk_spec(201, n_posts=100_000, gamma=0.5, gender_rate=0.2)
    run = make_run(tmp, spec, train_config(201))
    tm = extract_token_matrix(run.model)
    axis = build_axis(run.model, spec.age_words, spec.neutral_words())
    rho = spearman(tm.ages(), token_projections(tm, axis)).statistic
    ok = abs(rho) >= 0.8
    report(6, ok, f"planted age gradient gamma=0.5: Spearman |rho|(age, projection) "
                  f"= {abs(rho):.3f} (>= 0.8)")


def test_criterion_7_robustness_sweep(desk_runs, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweep")
    run = desk_runs[0]
    base = train_config(run.spec.seed)
    epoch_grid = SweepGrid(models=["cbow"], dims=[100], epochs=[1, 10], fractions=[1.0])
    rows_e = run_sweep(run.corpus_path, epoch_grid, run.spec.f_words, run.spec.m_words,
                       base, tmp / "epochs")
    r_e1, r_e10 = (abs(r.r_pc1_gender) for r in rows_e)
    dims_grid = SweepGrid(models=["cbow"], dims=[50, 100, 200, 300], epochs=[1],
                          fractions=[1.0])
    rows_d = run_sweep(run.corpus_path, dims_grid, run.spec.f_words, run.spec.m_words,
                       base, tmp / "dims")
    dim_rs = {r.dims: abs(r.r_pc1_gender) for r in rows_d}
    ok_epochs = abs(r_e1 - r_e10) <= 0.05
    ok_dims = all(v >= 0.9 for v in dim_rs.values()) and not any(
        math.isnan(v) for v in dim_rs.values()
    )
    statuses_ok = all(r.status == "ok" for r in rows_e + rows_d)
    ok = ok_epochs and ok_dims and statuses_ok
    report(7, ok, f"|r_pc1| at 1 epoch {r_e1:.3f} vs 10 epochs {r_e10:.3f} "
                  f"(|diff| = {abs(r_e1 - r_e10):.3f} <= 0.05); dims "
                  + ", ".join(f"d={d}: {v:.3f}" for d, v in sorted(dim_rs.items()))
                  + " (all >= 0.9)")


def test_criterion_8_null_calibration(null_runs):
    rs = [abs(r_pc1_gender(run.model)) for run in null_runs]
    mean_r = float(np.mean(rs))

    run = null_runs[0]
    model = run.model
    tm = extract_token_matrix(model)
    pool = run.spec.f_words + run.spec.m_words
    n_pos = len(run.spec.f_words)
    hits = 0
    n_trials = 200
    for t in range(n_trials):
        trial_rng = np.random.default_rng(5000 + t)
        perm = trial_rng.permutation(len(pool))
        pos = [pool[i] for i in perm[:n_pos]]
        neg = [pool[i] for i in perm[n_pos:]]
        _, p, _ = permutation_test(model, pos, neg, tm, n_perms=99, seed=9000 + 97 * t)
        if p < 0.05:
            hits += 1
    false_rate = hits / n_trials
    ok = mean_r < 0.3 and false_rate <= 0.12
    report(8, ok, f"beta=0: |r_pc1| = {[round(r, 3) for r in rs]} mean {mean_r:.3f} "
                  f"(< 0.3); p < 0.05 in {false_rate:.1%} of {n_trials} null trials (<= 12%)")


def test_criterion_9_determinism_and_round_trip(tmp_path):
    spec = desk_spec(401, n_posts=4_000, background_vocab_size=2_000)
    jsonl = tmp_path / "posts.jsonl"
    generate_corpus(spec, jsonl)
    corpus_1 = tmp_path / "c1.txt"
    corpus_2 = tmp_path / "c2.txt"
    prep_corpus(jsonl, corpus_1, pronouns=EN_PRONOUNS, age_min=16, age_max=45)
    prep_corpus(jsonl, corpus_2, pronouns=EN_PRONOUNS, age_min=16, age_max=45)
    prep_identical = corpus_1.read_bytes() == corpus_2.read_bytes()

    cfg = train_config(401, dims=32, min_count=2)
    m1 = train(corpus_1, cfg)
    m2 = train(corpus_1, cfg)
    train_identical = np.array_equal(m1.input_vectors, m2.input_vectors) and np.array_equal(
        m1.output_vectors, m2.output_vectors
    )

    save_model(m1, tmp_path / "m.vec")
    loaded = load_model(tmp_path / "m.vec")
    rel = np.abs(loaded.input_vectors - m1.input_vectors) / np.maximum(
        np.abs(m1.input_vectors), 1e-30
    )
    round_trip = float(rel.max())

    ok = prep_identical and train_identical and round_trip <= 1e-5
    report(9, ok, f"prep byte-identical: {prep_identical}; seeded workers=1 training "
                  f"bit-identical: {train_identical}; save/load max relative error "
                  f"{round_trip:.2e} (<= 1e-5)")
