"""Inference-time routing: argmax selection, the oracle, fixed-model
baselines, and leave-one-group-out attribution for routed decisions.

All ties (argmax over scores, oracle quality, oracle residual cost) break
toward the lowest model index, so decisions are deterministic and stable
under record reordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset, PromptRecord
from .errors import ValidationError
from .features import FeatureSchema
from .ranker import RankerParams, forward


@dataclass(frozen=True)
class RouterDecision:
    sample_id: str
    chosen_index: int
    scores: tuple[float, ...]
    realized_quality: float | None = None
    realized_cost: float | None = None


def route(params: RankerParams, x_j: np.ndarray, x_t: np.ndarray) -> RouterDecision:
    """Score one prompt and pick the argmax (lowest index on exact ties)."""
    scores = forward(params, x_j, x_t, train_mode=False)
    return RouterDecision(
        sample_id="",
        chosen_index=int(np.argmax(scores)),
        scores=tuple(float(s) for s in scores),
    )


def oracle_route(record: PromptRecord) -> int:
    """Cheapest model among those achieving the record's maximal quality."""
    best_q = max(record.quality)
    candidates = [j for j, q in enumerate(record.quality) if q == best_q]
    return min(candidates, key=lambda j: (record.cost[j], j))


def decisions_from_chooser(
    dataset: Dataset, choose: Callable[[int, PromptRecord], int]
) -> list[RouterDecision]:
    """Materialize full decisions (with realized quality/cost) for a policy."""
    decisions = []
    for i, rec in enumerate(dataset.records):
        j = choose(i, rec)
        decisions.append(
            RouterDecision(
                sample_id=rec.sample_id,
                chosen_index=j,
                scores=(),
                realized_quality=rec.quality[j],
                realized_cost=rec.cost[j],
            )
        )
    return decisions


def oracle_decisions(dataset: Dataset) -> list[RouterDecision]:
    return decisions_from_chooser(dataset, lambda i, rec: oracle_route(rec))


def baseline_best_single(dataset: Dataset) -> list[RouterDecision]:
    """Route everything to the model with the highest mean quality on this split."""
    mean_quality = dataset.quality_matrix().mean(axis=0)
    j = int(np.argmax(mean_quality))
    return decisions_from_chooser(dataset, lambda i, rec: j)


def baseline_cheapest(dataset: Dataset) -> list[RouterDecision]:
    """Route everything to the model with the smallest total cost on this split."""
    total_cost = dataset.cost_matrix().sum(axis=0)
    j = int(np.argmin(total_cost))
    return decisions_from_chooser(dataset, lambda i, rec: j)


def route_dataset(
    params: RankerParams,
    dataset: Dataset,
    features: np.ndarray,
    embeddings: np.ndarray,
) -> list[RouterDecision]:
    """Batch-route a dataset; decisions carry scores and realized outcomes."""
    from .ranker import forward_batch

    if features.shape[0] != len(dataset) or embeddings.shape[0] != len(dataset):
        raise ValidationError("feature/embedding rows disagree with dataset size")
    scores, _ = forward_batch(params, features, embeddings, train_mode=False)
    chosen = np.argmax(scores, axis=1)
    return [
        RouterDecision(
            sample_id=rec.sample_id,
            chosen_index=int(j),
            scores=tuple(float(s) for s in row),
            realized_quality=rec.quality[int(j)],
            realized_cost=rec.cost[int(j)],
        )
        for rec, j, row in zip(dataset.records, chosen, scores)
    ]


def explain_route(
    params: RankerParams,
    x_j: np.ndarray,
    x_t: np.ndarray,
    schema: FeatureSchema,
    feature_baseline: np.ndarray | None = None,
) -> list[tuple[str, float]]:
    """Leave-one-group-out attribution for the chosen model's score.

    Each feature group is ablated to the supplied baseline (typically the
    training-set mean; zeros when omitted) and the drop in the chosen
    model's score is the group's attribution.  The embedding branch is
    reported as a single aggregate ``text`` attribution via zeroing x_t.
    Returned sorted by attribution, descending.
    """
    if schema.version != params.feature_schema_version:
        raise ValidationError(
            f"schema version {schema.version} != checkpoint's "
            f"{params.feature_schema_version}"
        )
    if schema.dim != params.d_j:
        raise ValidationError(f"schema dim {schema.dim} != checkpoint d_j {params.d_j}")
    if feature_baseline is None:
        feature_baseline = np.zeros(schema.dim)

    base_scores = forward(params, x_j, x_t, train_mode=False)
    chosen = int(np.argmax(base_scores))
    attributions: list[tuple[str, float]] = []
    for group in schema.groups():
        idx = schema.group_indices(group)
        ablated = x_j.copy()
        ablated[idx] = feature_baseline[idx]
        drop = base_scores[chosen] - forward(params, ablated, x_t, train_mode=False)[chosen]
        attributions.append((group, float(drop)))

    text_drop = base_scores[chosen] - forward(
        params, x_j, np.zeros_like(x_t), train_mode=False
    )[chosen]
    attributions.append(("text", float(text_drop)))
    attributions.sort(key=lambda kv: kv[1], reverse=True)
    return attributions
