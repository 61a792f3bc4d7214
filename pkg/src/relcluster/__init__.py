"""Unsupervised relation clustering from annotated entity-pair sentences."""

from .clustering import (
    ClusterAssignment,
    Dendrogram,
    Merge,
    cut_at_k,
    hac_ward,
    kmeans,
)
from .corpus import (
    Corpus,
    EntityMention,
    IdfWeights,
    RelationInstance,
    ValidationError,
    compute_idf,
    load_corpus,
    save_corpus,
)
from .embeddings import EmbeddingTable, load_embeddings
from .features import (
    BLOCK_NAMES,
    FeatureBlock,
    FeatureMatrix,
    TypeVocabulary,
    WeightingConfig,
    build_type_vocabulary,
    dep_reweighted_vector,
    dep_weight,
    entity_type_vector,
    featurize_corpus,
    idf_embedding_vector,
    sum_embedding_vector,
    tfidf_vector,
)
from .metrics import EvalReport, compare_runs, format_ranking, pairwise_f1
from .pca import PcaModel, ReductionPlan, pca_fit, pca_transform, reduce_and_concat
from .pipeline import PipelineResult, RunConfig, run_pipeline, sweep

__version__ = "0.1.0"

__all__ = [
    "BLOCK_NAMES",
    "ClusterAssignment",
    "Corpus",
    "Dendrogram",
    "EmbeddingTable",
    "EntityMention",
    "EvalReport",
    "FeatureBlock",
    "FeatureMatrix",
    "IdfWeights",
    "Merge",
    "PcaModel",
    "PipelineResult",
    "RelationInstance",
    "ReductionPlan",
    "RunConfig",
    "TypeVocabulary",
    "ValidationError",
    "WeightingConfig",
    "build_type_vocabulary",
    "compare_runs",
    "compute_idf",
    "cut_at_k",
    "dep_reweighted_vector",
    "dep_weight",
    "entity_type_vector",
    "featurize_corpus",
    "format_ranking",
    "hac_ward",
    "idf_embedding_vector",
    "kmeans",
    "load_corpus",
    "load_embeddings",
    "pairwise_f1",
    "pca_fit",
    "pca_transform",
    "reduce_and_concat",
    "run_pipeline",
    "save_corpus",
    "sum_embedding_vector",
    "sweep",
    "tfidf_vector",
]
