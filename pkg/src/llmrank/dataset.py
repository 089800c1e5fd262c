"""Dataset ingestion, validation, filtering, and stratified splitting.

File format (JSON-Lines, UTF-8, one object per line):

    {"sample_id": str, "prompt": str, "benchmark": str,
     "quality": [m floats in [0,1]], "cost": [m floats >= 0],
     "language": str (optional, default "en")}

A sidecar ``pool.json`` lists the m model names in canonical order; the
list index is the model index used everywhere downstream.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .hashing import fingerprint


@dataclass(frozen=True)
class ModelPool:
    """Ordered list of candidate model names; index j is canonical."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 2:
            raise ValidationError("model pool needs at least 2 models")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("model pool names must be unique")

    @property
    def size(self) -> int:
        return len(self.names)

    def fingerprint(self) -> str:
        return fingerprint("\n".join(self.names).encode("utf-8"))

    @classmethod
    def from_file(cls, path: str | Path) -> "ModelPool":
        with open(path, encoding="utf-8") as fh:
            names = json.load(fh)
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ValidationError(f"{path}: pool file must be a JSON array of model names")
        return cls(tuple(names))

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(list(self.names), fh, indent=2)
            fh.write("\n")


@dataclass(frozen=True)
class PromptRecord:
    """One prompt with per-model quality scores and per-model dollar costs."""

    sample_id: str
    prompt: str
    benchmark: str
    quality: tuple[float, ...]
    cost: tuple[float, ...]
    language: str = "en"

    def validate(self, m: int) -> None:
        if len(self.quality) != m:
            raise ValidationError(
                f"sample {self.sample_id!r}: quality vector has length "
                f"{len(self.quality)}, expected {m}"
            )
        if len(self.cost) != m:
            raise ValidationError(
                f"sample {self.sample_id!r}: cost vector has length "
                f"{len(self.cost)}, expected {m}"
            )
        for q in self.quality:
            if not math.isfinite(q) or q < 0.0 or q > 1.0:
                raise ValidationError(
                    f"sample {self.sample_id!r}: quality out of range [0,1]: {q!r}"
                )
        for c in self.cost:
            if not math.isfinite(c) or c < 0.0:
                raise ValidationError(
                    f"sample {self.sample_id!r}: cost must be finite and >= 0: {c!r}"
                )

    def to_json(self) -> str:
        obj = {
            "sample_id": self.sample_id,
            "prompt": self.prompt,
            "benchmark": self.benchmark,
            "quality": list(self.quality),
            "cost": list(self.cost),
            "language": self.language,
        }
        return json.dumps(obj, ensure_ascii=False)

    @classmethod
    def from_obj(cls, obj: dict) -> "PromptRecord":
        try:
            return cls(
                sample_id=str(obj["sample_id"]),
                prompt=str(obj["prompt"]),
                benchmark=str(obj["benchmark"]),
                quality=tuple(float(q) for q in obj["quality"]),
                cost=tuple(float(c) for c in obj["cost"]),
                language=str(obj.get("language", "en")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad record object: {exc}") from exc


@dataclass(frozen=True)
class Dataset:
    pool: ModelPool
    records: tuple[PromptRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        for rec in self.records:
            rec.validate(self.pool.size)
        ids = [r.sample_id for r in self.records]
        if len(set(ids)) != len(ids):
            dupe = next(s for s, k in Counter(ids).items() if k > 1)
            raise ValidationError(f"duplicate sample_id {dupe!r}")

    def __len__(self) -> int:
        return len(self.records)

    def quality_matrix(self) -> np.ndarray:
        return np.array([r.quality for r in self.records], dtype=np.float64)

    def cost_matrix(self) -> np.ndarray:
        return np.array([r.cost for r in self.records], dtype=np.float64)

    def benchmark_counts(self) -> dict[str, int]:
        return dict(Counter(r.benchmark for r in self.records))

    def fingerprint(self) -> str:
        body = "\n".join(r.to_json() for r in self.records)
        return fingerprint(self.pool.fingerprint().encode(), body.encode("utf-8"))


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0
    stratify_by: str = "benchmark"

    def __post_init__(self):
        for frac in (self.train_frac, self.val_frac, self.test_frac):
            if not 0.0 < frac < 1.0:
                raise ValidationError(f"split fraction {frac} outside (0,1)")
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"split fractions sum to {total}, expected 1.0")


def ingest_dataset(
    path: str | Path,
    pool: ModelPool,
    strict: bool = True,
    rejects_path: str | Path | None = None,
) -> Dataset:
    """Read a JSONL dataset file against a model pool.

    With ``strict`` (the default) the first invalid line raises a
    ValidationError naming the line number.  With ``strict=False`` invalid
    lines are skipped and logged with reasons to ``rejects_path`` (default
    ``<path>.rejects``) and all valid records are returned.
    """
    path = Path(path)
    records: list[PromptRecord] = []
    seen: set[str] = set()
    rejects: list[tuple[int, str]] = []

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = PromptRecord.from_obj(obj)
                rec.validate(pool.size)
                if rec.sample_id in seen:
                    raise ValidationError(f"duplicate sample_id {rec.sample_id!r}")
            except (json.JSONDecodeError, ValidationError) as exc:
                reason = f"line {lineno}: {exc}"
                if strict:
                    raise ValidationError(f"{path}: {reason}") from exc
                rejects.append((lineno, str(exc)))
                continue
            seen.add(rec.sample_id)
            records.append(rec)

    if rejects:
        out = Path(rejects_path) if rejects_path else path.with_suffix(path.suffix + ".rejects")
        with open(out, "w", encoding="utf-8") as fh:
            for lineno, reason in rejects:
                fh.write(f"line {lineno}\t{reason}\n")

    return Dataset(pool=pool, records=tuple(records), provenance=str(path))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back to JSONL; ingest(write(d)) round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            fh.write(rec.to_json() + "\n")


def filter_dataset(
    dataset: Dataset,
    min_category_samples: int = 50,
    drop_unsolved: bool = True,
    keep_languages: Iterable[str] = ("en",),
) -> Dataset:
    """Drop foreign-language, unsolved, and low-resource-category records.

    Filter order is fixed: language allowlist first, then records with
    max quality 0 across all models, then categories whose surviving count
    falls below ``min_category_samples``.
    """
    keep = set(keep_languages)
    records = [r for r in dataset.records if r.language in keep]
    if drop_unsolved:
        records = [r for r in records if max(r.quality) > 0.0]
    counts = Counter(r.benchmark for r in records)
    records = [r for r in records if counts[r.benchmark] >= min_category_samples]
    if not records:
        raise ValidationError("all records filtered")
    return replace(dataset, records=tuple(records))


def _split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    """Floor train, floor val, remainder to test; repair to keep all nonempty."""
    n_train = math.floor(n * spec.train_frac)
    n_val = math.floor(n * spec.val_frac)
    n_test = n - n_train - n_val
    sizes = [n_train, n_val, n_test]
    while min(sizes) < 1:
        sizes[sizes.index(min(sizes))] += 1
        sizes[sizes.index(max(sizes))] -= 1
    return sizes[0], sizes[1], sizes[2]


def stratified_split(
    dataset: Dataset, spec: SplitSpec
) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic per-category split into train/validation/test.

    Within each category the records are shuffled with a PRNG seeded by
    ``spec.seed`` and cut by the spec fractions (floor/floor/remainder,
    repaired so every category lands at least one record in each split).
    """
    if spec.stratify_by != "benchmark":
        raise ValidationError(f"unsupported stratification field {spec.stratify_by!r}")

    strata: dict[str, list[PromptRecord]] = {}
    for rec in dataset.records:
        strata.setdefault(rec.benchmark, []).append(rec)

    for name, recs in strata.items():
        if len(recs) < 3:
            raise ValidationError(
                f"stratum {name!r} has {len(recs)} records; needs >= 3 "
                "to give each split one record"
            )

    rng = np.random.default_rng(spec.seed)
    parts: tuple[list[PromptRecord], list[PromptRecord], list[PromptRecord]] = ([], [], [])
    for name in sorted(strata):
        recs = strata[name]
        order = rng.permutation(len(recs))
        shuffled = [recs[i] for i in order]
        n_train, n_val, _ = _split_sizes(len(recs), spec)
        parts[0].extend(shuffled[:n_train])
        parts[1].extend(shuffled[n_train : n_train + n_val])
        parts[2].extend(shuffled[n_train + n_val :])

    def _mk(recs: Sequence[PromptRecord], tag: str) -> Dataset:
        return Dataset(
            pool=dataset.pool,
            records=tuple(recs),
            provenance=f"{dataset.provenance}#{tag}(seed={spec.seed})",
        )

    return _mk(parts[0], "train"), _mk(parts[1], "val"), _mk(parts[2], "test")
