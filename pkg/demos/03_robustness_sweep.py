"""How stable is gender recovery across model specification and data size?

Sweeps architecture, dimensionality, epoch count, and corpus fraction on
one synthetic corpus, reporting two numbers per cell: the point-biserial
correlation of gender with PC1 of the I-tokens (structure that emerges
unsupervised) and with the projections on the planted axis (structure
probed with the word lists). One epoch and any reasonable width
reproduce the result; performance degrades on small corpus fractions as
the planted words get rare.

Takes a couple of minutes. Outputs land in demo_output/03/.
"""
import pathlib

from demovec.corpus import EN_PRONOUNS, prep_corpus
from demovec.embedding import TrainConfig
from demovec.report import write_tsv
from demovec.sweep import SWEEP_HEADER, SweepGrid, run_sweep, sweep_rows_to_table
from demovec.synth import SyntheticSpec, generate_corpus

OUT = pathlib.Path("demo_output/03")
OUT.mkdir(parents=True, exist_ok=True)
SEED = 21

spec = SyntheticSpec(n_posts=120_000, age_min=16, age_max=45, beta=0.5,
                     gamma=0.0, seed=SEED)
print(f"generating {spec.n_posts} posts ...")
generate_corpus(spec, OUT / "posts.jsonl")
prep_corpus(OUT / "posts.jsonl", OUT / "corpus.txt", pronouns=EN_PRONOUNS,
            age_min=spec.age_min, age_max=spec.age_max)

grid = SweepGrid(
    models=["cbow", "sg"],
    dims=[50, 100],
    epochs=[1, 5],
    fractions=[0.25, 1.0],
)
base = TrainConfig(initial_lr=0.05, seed=SEED)
print(f"running {len(grid)} sweep cells ...")
rows = run_sweep(OUT / "corpus.txt", grid, spec.f_words, spec.m_words, base,
                 OUT / "work")

table = sweep_rows_to_table(rows)
write_tsv(OUT / "sweep.tsv", SWEEP_HEADER, table)

print(f"\n{'model':<6}{'dims':>6}{'epochs':>8}{'frac':>6}{'r_pc1':>9}{'r_axis':>9}  status")
for r in rows:
    print(f"{r.model:<6}{r.dims:>6}{r.epochs:>8}{r.fraction:>6g}"
          f"{r.r_pc1_gender:>9.3f}{r.r_axis_gender:>9.3f}  {r.status}")
print(f"\nfull table in {OUT / 'sweep.tsv'}")
