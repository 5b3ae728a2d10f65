"""demovec: demographically enhanced first-person tokens for word embeddings.

Rewrites first-person pronouns in an annotated corpus into ``<I:G:AA>``
tokens, trains CBOW/skip-gram embeddings with negative sampling on the
rewritten text, and analyzes the enhanced tokens with PCA, demographic
correlations, semantic-axis projections, and permutation tests.
"""

__version__ = "0.1.0"

from .analysis import (
    CorrelationResult,
    PcaResult,
    SemanticAxis,
    TokenMatrix,
    age_ordering_score,
    build_axis,
    extract_token_matrix,
    pca,
    permutation_test,
    point_biserial,
    project,
    spearman,
    token_projections,
)
from .corpus import (
    DemographicKey,
    EN_PRONOUNS,
    Gender,
    LemmaTable,
    Post,
    RU_PRONOUNS,
    enhance,
    lemmatize,
    parse_enhanced,
    parse_post,
    prep_corpus,
    render_enhanced,
    tokenize,
    try_parse_enhanced,
)
from .embedding import (
    EmbeddingModel,
    TrainConfig,
    Vocabulary,
    build_negative_table,
    build_vocab,
    cbow_step,
    keep_probability,
    load_model,
    save_model,
    skipgram_step,
    train,
)
from .synth import SyntheticSpec, generate_corpus
from .sweep import SweepGrid, SweepRow, run_sweep

__all__ = [
    "__version__",
    "Gender",
    "DemographicKey",
    "Post",
    "LemmaTable",
    "RU_PRONOUNS",
    "EN_PRONOUNS",
    "tokenize",
    "lemmatize",
    "enhance",
    "render_enhanced",
    "parse_enhanced",
    "try_parse_enhanced",
    "parse_post",
    "prep_corpus",
    "Vocabulary",
    "TrainConfig",
    "EmbeddingModel",
    "build_vocab",
    "keep_probability",
    "build_negative_table",
    "cbow_step",
    "skipgram_step",
    "train",
    "save_model",
    "load_model",
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
    "SyntheticSpec",
    "generate_corpus",
    "SweepGrid",
    "SweepRow",
    "run_sweep",
]
