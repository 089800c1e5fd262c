"""Evaluation metrics, report formatting, and the cost-quality sweep.

A router's report carries mean quality, mean and total dollar cost, the
cost-adjusted utility at the evaluation lambda, and three comparative
metrics against the per-prompt oracle: efficiency (quality ratio), cost
ratio (total-cost ratio), and quality gap (absolute quality points).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .ranker import TrainConfig, train_ranker
from .routing import (
    RouterDecision,
    baseline_best_single,
    baseline_cheapest,
    oracle_decisions,
    route_dataset,
)


@dataclass(frozen=True)
class EvalReport:
    n: int
    lambda_: float
    quality: float
    mean_cost: float
    total_cost: float
    utility: float
    oracle_quality: float
    oracle_mean_cost: float
    oracle_total_cost: float
    efficiency: float
    cost_ratio: float
    quality_gap: float
    per_benchmark: dict[str, float] = field(default_factory=dict)
    routing_distribution: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lambda": self.lambda_,
            "quality": self.quality,
            "mean_cost": self.mean_cost,
            "total_cost": self.total_cost,
            "utility": self.utility,
            "oracle_quality": self.oracle_quality,
            "oracle_mean_cost": self.oracle_mean_cost,
            "oracle_total_cost": self.oracle_total_cost,
            "efficiency": self.efficiency,
            "cost_ratio": self.cost_ratio,
            "quality_gap": self.quality_gap,
            "per_benchmark": self.per_benchmark,
            "routing_distribution": self.routing_distribution,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def format_table(self) -> str:
        rows = [
            ("Policy", "Quality", "Cost ($)", "Efficiency", "Cost Ratio", "Quality Gap"),
            (
                "router",
                f"{self.quality:.3f}",
                f"{self.total_cost:.3f}",
                f"{self.efficiency * 100:.1f}%",
                f"{self.cost_ratio:.2f}x",
                f"{self.quality_gap * 100:.1f}%",
            ),
            (
                "oracle",
                f"{self.oracle_quality:.3f}",
                f"{self.oracle_total_cost:.3f}",
                "100.0%",
                "1.00x",
                "--",
            ),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        out = io.StringIO()
        for r in rows:
            out.write("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() + "\n")
        return out.getvalue()


def _aggregate(decisions: Sequence[RouterDecision]) -> tuple[float, float, float]:
    quality = float(np.mean([d.realized_quality for d in decisions]))
    costs = np.array([d.realized_cost for d in decisions])
    return quality, float(costs.mean()), float(costs.sum())


def evaluate(
    decisions: Sequence[RouterDecision], dataset: Dataset, lambda_: float
) -> EvalReport:
    """Score a set of routing decisions against a dataset and its oracle.

    The decisions must cover the dataset's sample_ids exactly once.
    """
    if lambda_ < 0.0:
        raise ValidationError(f"lambda must be >= 0, got {lambda_}")
    by_id = {}
    for d in decisions:
        if d.sample_id in by_id:
            raise ValidationError(f"duplicate decision for sample {d.sample_id!r}")
        by_id[d.sample_id] = d
    dataset_ids = {r.sample_id for r in dataset.records}
    if set(by_id) != dataset_ids:
        missing = sorted(dataset_ids - set(by_id))[:3]
        extra = sorted(set(by_id) - dataset_ids)[:3]
        raise ValidationError(
            f"decisions do not cover the dataset exactly once "
            f"(missing={missing}, extra={extra})"
        )
    for rec in dataset.records:
        d = by_id[rec.sample_id]
        if d.realized_quality is None or d.realized_cost is None:
            raise ValidationError(f"decision for {rec.sample_id!r} lacks realized outcome")

    ordered = [by_id[r.sample_id] for r in dataset.records]
    quality, mean_cost, total_cost = _aggregate(ordered)
    oracle = oracle_decisions(dataset)
    oracle_quality, oracle_mean_cost, oracle_total_cost = _aggregate(oracle)

    per_benchmark: dict[str, list[float]] = {}
    for rec, d in zip(dataset.records, ordered):
        per_benchmark.setdefault(rec.benchmark, []).append(d.realized_quality)

    counts = np.zeros(dataset.pool.size)
    for d in ordered:
        if not 0 <= d.chosen_index < dataset.pool.size:
            raise ValidationError(f"chosen index {d.chosen_index} outside the pool")
        counts[d.chosen_index] += 1

    return EvalReport(
        n=len(dataset),
        lambda_=lambda_,
        quality=quality,
        mean_cost=mean_cost,
        total_cost=total_cost,
        utility=quality - lambda_ * mean_cost,
        oracle_quality=oracle_quality,
        oracle_mean_cost=oracle_mean_cost,
        oracle_total_cost=oracle_total_cost,
        efficiency=quality / oracle_quality,
        cost_ratio=total_cost / oracle_total_cost,
        quality_gap=oracle_quality - quality,
        per_benchmark={b: float(np.mean(v)) for b, v in sorted(per_benchmark.items())},
        routing_distribution={
            name: float(c / len(dataset)) for name, c in zip(dataset.pool.names, counts)
        },
    )


# --- lambda sweep -----------------------------------------------------------

FRONTIER_CSV_HEADER = "lambda,quality,mean_cost,total_cost,utility,efficiency,cost_ratio"


@dataclass(frozen=True)
class FrontierRow:
    policy: str  # "router" | "oracle" | "best_single" | "cheapest"
    lambda_: float | None
    quality: float
    mean_cost: float
    total_cost: float
    utility: float | None
    efficiency: float
    cost_ratio: float

    def to_csv(self) -> str:
        first = f"{self.lambda_:g}" if self.lambda_ is not None else self.policy
        utility = f"{self.utility!r}" if self.utility is not None else ""
        return (
            f"{first},{self.quality!r},{self.mean_cost!r},{self.total_cost!r},"
            f"{utility},{self.efficiency!r},{self.cost_ratio!r}"
        )


def frontier_csv(rows: Sequence[FrontierRow]) -> str:
    return "\n".join([FRONTIER_CSV_HEADER, *(r.to_csv() for r in rows)]) + "\n"


def _report_row(policy: str, lambda_: float | None, report: EvalReport) -> FrontierRow:
    return FrontierRow(
        policy=policy,
        lambda_=lambda_,
        quality=report.quality,
        mean_cost=report.mean_cost,
        total_cost=report.total_cost,
        utility=report.utility if lambda_ is not None else None,
        efficiency=report.efficiency,
        cost_ratio=report.cost_ratio,
    )


def sweep_lambda(
    train_set: Dataset,
    val_set: Dataset,
    test_set: Dataset,
    lambdas: Sequence[float],
    config: TrainConfig,
    train_features: np.ndarray,
    val_features: np.ndarray,
    test_features: np.ndarray,
    train_embeddings: np.ndarray,
    val_embeddings: np.ndarray,
    test_embeddings: np.ndarray,
    hidden: int = 256,
    feature_schema_version: int = 1,
) -> list[FrontierRow]:
    """Train one router per lambda (shared seed/schema/features) and evaluate
    each on the test split, followed by oracle and fixed-model baseline rows."""
    import dataclasses

    rows: list[FrontierRow] = []
    for lam in lambdas:
        cfg = dataclasses.replace(config, lambda_=lam)
        params, _ = train_ranker(
            train_set, val_set,
            train_features, train_embeddings,
            val_features, val_embeddings,
            cfg, hidden=hidden, feature_schema_version=feature_schema_version,
        )
        decisions = route_dataset(params, test_set, test_features, test_embeddings)
        rows.append(_report_row("router", lam, evaluate(decisions, test_set, lam)))

    rows.append(_report_row("oracle", None, evaluate(oracle_decisions(test_set), test_set, 0.0)))
    rows.append(
        _report_row("best_single", None, evaluate(baseline_best_single(test_set), test_set, 0.0))
    )
    rows.append(
        _report_row("cheapest", None, evaluate(baseline_cheapest(test_set), test_set, 0.0))
    )
    return rows
