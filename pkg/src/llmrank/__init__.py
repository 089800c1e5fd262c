"""Cost-aware prompt-to-model routing toolkit.

Pipeline: ingest and filter a prompt/quality/cost dataset, split it by
benchmark category, extract interpretable prompt features plus a text
embedding, train a dual-branch utility ranker on cost-adjusted targets,
then route prompts by predicted-utility argmax and evaluate against the
per-prompt oracle and fixed-model baselines.
"""

from .dataset import (
    Dataset,
    ModelPool,
    PromptRecord,
    SplitSpec,
    filter_dataset,
    ingest_dataset,
    stratified_split,
    write_dataset,
)
from .embeddings import (
    EmbeddingStore,
    HashEmbeddingProvider,
    StoreEmbeddingProvider,
    hash_embed,
    load_embeddings,
    write_embeddings,
)
from .errors import FormatError, LLMRankError, TrainingDiverged, ValidationError
from .evaluation import EvalReport, FrontierRow, evaluate, frontier_csv, sweep_lambda
from .features import (
    FeatureSchema,
    FeatureVector,
    ProxyModel,
    default_schema,
    extract_features,
    featurize_dataset,
    read_feature_matrix,
    train_proxy,
    write_feature_matrix,
)
from .ranker import (
    RankerParams,
    TrainConfig,
    TrainingLog,
    compute_targets,
    load_checkpoint,
    save_checkpoint,
    train_ranker,
)
from .routing import (
    RouterDecision,
    baseline_best_single,
    baseline_cheapest,
    explain_route,
    oracle_decisions,
    oracle_route,
    route,
    route_dataset,
)

__version__ = "0.1.0"
