"""Interpretable prompt features and the proxy category classifier.

Every feature is deterministic, depends only on the prompt text (plus, for
the proxy block, frozen proxy parameters), and is bounded to a declared
[lo, hi] range.  The schema is versioned and ordered; artifacts record the
version so a feature matrix can never silently drift under a checkpoint.

Schema version 1, by group:

- difficulty: normalized char length (len/4000 capped), sentence count
  (/32 capped), mean word length (/12 capped), digit density, max
  paren/bracket nesting depth (/8 capped).
- task_type: binary cues for multiple-choice option lists, scenario
  completion ("what happens next", "most likely"), narrative openings,
  arithmetic, and code.
- knowledge: proper-noun density, temporal cues (years, before/after/when),
  and one indicator per domain lexicon (science, biology, law, history,
  medicine; shipped as one-keyword-per-line text files).
- output_format: single-character-answer directive, free-form (no options
  found), deterministic-output directive ("print only", "without
  explanation").
- scenario_complexity: option count (/8 capped), hedge-word fraction,
  normalized length of any passage preceding the question (a passage
  "counts" from 64 characters).
- routing_hints: reasoning_needed (math cue or step connectives),
  context_needed (passage present), knowledge_needed (any lexicon hit).
- quality_indicators: normalized prompt length and an is_english flag
  (nearly-all-ASCII letters, or mostly-ASCII letters plus at least one
  common English stopword).
- proxy: the proxy classifier's per-category probabilities, zero-filled
  when no proxy is supplied.
"""

from __future__ import annotations

import base64
import json
import re
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import FormatError, ValidationError
from .hashing import fingerprint, stable_bucket, tokenize
from .parallel import max_threads

FEATURE_MAGIC = b"LLMRFEAT"

GROUPS = (
    "difficulty",
    "task_type",
    "knowledge",
    "output_format",
    "scenario_complexity",
    "routing_hints",
    "quality_indicators",
    "proxy",
)

DOMAINS = ("science", "biology", "law", "history", "medicine")

_LEXICONS: dict[str, frozenset[str]] = {}


def _lexicon(domain: str) -> frozenset[str]:
    if domain not in _LEXICONS:
        text = resources.files("llmrank").joinpath(f"lexicons/{domain}.txt").read_text("utf-8")
        _LEXICONS[domain] = frozenset(w.strip() for w in text.splitlines() if w.strip())
    return _LEXICONS[domain]


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    group: str
    lo: float = 0.0
    hi: float = 1.0


@dataclass(frozen=True)
class FeatureSchema:
    version: int
    entries: tuple[FeatureEntry, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValidationError("feature entry names must be unique")
        for e in self.entries:
            if e.group not in GROUPS:
                raise ValidationError(f"unknown feature group {e.group!r}")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def index(self, name: str) -> int:
        for i, e in enumerate(self.entries):
            if e.name == name:
                return i
        raise KeyError(name)

    def groups(self) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.entries:
            if e.group not in seen:
                seen.append(e.group)
        return tuple(seen)

    def group_indices(self, group: str) -> list[int]:
        return [i for i, e in enumerate(self.entries) if e.group == group]

    def proxy_categories(self) -> tuple[str, ...]:
        prefix = "proxy_prob_"
        return tuple(
            e.name[len(prefix):] for e in self.entries if e.group == "proxy"
        )

    def to_file(self, path: str | Path) -> None:
        obj = {
            "version": self.version,
            "entries": [
                {"name": e.name, "group": e.group, "lo": e.lo, "hi": e.hi}
                for e in self.entries
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "FeatureSchema":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        entries = tuple(
            FeatureEntry(e["name"], e["group"], float(e["lo"]), float(e["hi"]))
            for e in obj["entries"]
        )
        return cls(version=int(obj["version"]), entries=entries)


def default_schema(proxy_categories: Sequence[str] = ()) -> FeatureSchema:
    """Schema version 1; one extra proxy entry per supplied category name."""
    entries = [
        FeatureEntry("char_len_norm", "difficulty"),
        FeatureEntry("sentence_count_norm", "difficulty"),
        FeatureEntry("mean_word_len_norm", "difficulty"),
        FeatureEntry("digit_density", "difficulty"),
        FeatureEntry("nesting_depth_norm", "difficulty"),
        FeatureEntry("multiple_choice", "task_type"),
        FeatureEntry("scenario_completion", "task_type"),
        FeatureEntry("narrative", "task_type"),
        FeatureEntry("math_cue", "task_type"),
        FeatureEntry("code_cue", "task_type"),
        FeatureEntry("proper_noun_density", "knowledge"),
        FeatureEntry("temporal_cue", "knowledge"),
        *(FeatureEntry(f"domain_{d}", "knowledge") for d in DOMAINS),
        FeatureEntry("single_char_answer", "output_format"),
        FeatureEntry("free_form", "output_format"),
        FeatureEntry("deterministic_output", "output_format"),
        FeatureEntry("option_count_norm", "scenario_complexity"),
        FeatureEntry("ambiguity_score", "scenario_complexity"),
        FeatureEntry("context_len_norm", "scenario_complexity"),
        FeatureEntry("reasoning_needed", "routing_hints"),
        FeatureEntry("context_needed", "routing_hints"),
        FeatureEntry("knowledge_needed", "routing_hints"),
        FeatureEntry("prompt_len_norm", "quality_indicators"),
        FeatureEntry("is_english", "quality_indicators"),
    ]
    entries.extend(FeatureEntry(f"proxy_prob_{c}", "proxy") for c in proxy_categories)
    return FeatureSchema(version=1, entries=tuple(entries))


@dataclass(frozen=True)
class FeatureVector:
    schema_version: int
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("feature vector contains NaN/Inf")


# --- extraction internals -------------------------------------------------

_SENTENCE_END_RE = re.compile(r"[.!?]+(?:\s|$)")
_OPTION_LINE_RE = re.compile(r"^\s*(?:\(([A-H])\)|([A-H])[).])\s+", re.MULTILINE)
_YEAR_RE = re.compile(r"\b(?:1[0-9]{3}|20[0-9]{2})\b")
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z']*")
_MATH_OP_RE = re.compile(r"[+*/=%×÷]|(?<=\d)\s*-\s*(?=\d)")

_HEDGES = frozenset({"might", "could", "probably", "perhaps", "possibly", "maybe"})
_TEMPORAL_WORDS = frozenset({"before", "after", "when"})
_STEP_WORDS = frozenset({"therefore", "thus", "hence", "step", "steps"})
_PRONOUNS = frozenset(
    {"he", "she", "they", "his", "her", "their", "him", "them", "i", "we", "my", "our"}
)
_IRREGULAR_PAST = frozenset(
    {"was", "were", "had", "said", "went", "did", "took", "came", "saw", "made",
     "got", "found", "thought", "told", "knew", "felt", "began", "left"}
)
# Two letters or longer: accented words split on the ASCII tokenizer can
# shed spurious single-letter fragments.
_ENGLISH_STOPWORDS = frozenset(
    {"the", "an", "is", "are", "was", "were", "of", "to", "in", "and",
     "or", "what", "which", "that", "this", "with", "for", "on", "by", "how",
     "why", "when", "who", "it", "as", "at", "be", "from", "not", "do", "does"}
)

_CONTEXT_MIN_CHARS = 64
_ASCII_STRICT = 0.97
_ASCII_LOOSE = 0.90


def _cap(value: float, scale: float) -> float:
    return min(value / scale, 1.0)


def _sentence_count(text: str) -> int:
    return max(1, len(_SENTENCE_END_RE.findall(text)))


def _nesting_depth(text: str) -> int:
    depth = best = 0
    for ch in text:
        if ch in "([":
            depth += 1
            best = max(best, depth)
        elif ch in ")]":
            depth = max(0, depth - 1)
    return best


def _option_labels(text: str) -> set[str]:
    return {a or b for a, b in _OPTION_LINE_RE.findall(text)}


def _is_past_tense(token: str) -> bool:
    return token in _IRREGULAR_PAST or (len(token) > 3 and token.endswith("ed"))


def _proper_noun_density(text: str, n_tokens: int) -> float:
    if n_tokens == 0:
        return 0.0
    count = 0
    for segment in re.split(r"[.!?\n]+", text):
        words = _WORD_RE.findall(segment)
        for w in words[1:]:
            if w[0].isupper():
                count += 1
    return min(count / n_tokens, 1.0)


def _context_chars(text: str) -> int:
    """Characters before the sentence that contains the first question mark."""
    qpos = text.find("?")
    if qpos < 0:
        return 0
    starts = [text.rfind(term, 0, qpos) for term in (".", "!", "\n")]
    return max(starts) + 1 if max(starts) >= 0 else 0


def _ascii_letter_ratio(text: str) -> float:
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return 1.0
    ascii_count = sum(1 for ch in letters if ord(ch) < 128)
    return ascii_count / len(letters)


def extract_features(
    prompt: str,
    schema: FeatureSchema,
    proxy: "ProxyModel | None" = None,
) -> FeatureVector:
    """Map one prompt to the schema's feature vector.  Pure and deterministic."""
    if not prompt.strip():
        raise ValidationError("empty prompt")

    lower = prompt.lower()
    tokens = tokenize(prompt)
    n_tok = len(tokens)
    token_set = set(tokens)

    labels = _option_labels(prompt)
    multiple_choice = 1.0 if len(labels) >= 2 else 0.0
    math_cue = 1.0 if len(_MATH_OP_RE.findall(prompt)) >= 2 or "how many" in lower else 0.0
    domain_hits = {d: 1.0 if token_set & _lexicon(d) else 0.0 for d in DOMAINS}
    context_chars = _context_chars(prompt)
    context_present = 1.0 if context_chars >= _CONTEXT_MIN_CHARS else 0.0

    opening = tokens[:30]
    narrative = 1.0 if (
        sum(1 for t in opening if t in _PRONOUNS) >= 2
        and any(_is_past_tense(t) for t in opening)
    ) else 0.0

    char_len_norm = _cap(len(prompt), 4000)

    values: dict[str, float] = {
        "char_len_norm": char_len_norm,
        "sentence_count_norm": _cap(_sentence_count(prompt), 32),
        "mean_word_len_norm": _cap(sum(map(len, tokens)) / n_tok, 12) if n_tok else 0.0,
        "digit_density": sum(ch.isdigit() for ch in prompt) / len(prompt),
        "nesting_depth_norm": _cap(_nesting_depth(prompt), 8),
        "multiple_choice": multiple_choice,
        "scenario_completion": 1.0 if "what happens next" in lower or "most likely" in lower else 0.0,
        "narrative": narrative,
        "math_cue": math_cue,
        "code_cue": 1.0 if ("def " in lower or "return" in lower or "`" in prompt or "function" in lower) else 0.0,
        "proper_noun_density": _proper_noun_density(prompt, n_tok),
        "temporal_cue": 1.0 if _YEAR_RE.search(prompt) or token_set & _TEMPORAL_WORDS else 0.0,
        **{f"domain_{d}": hit for d, hit in domain_hits.items()},
        "single_char_answer": 1.0 if (
            "single choice" in lower
            or "single letter" in lower
            or lower.rstrip().endswith("answer:")
        ) else 0.0,
        "free_form": 1.0 if not labels else 0.0,
        "deterministic_output": 1.0 if "print only" in lower or "without explanation" in lower else 0.0,
        "option_count_norm": _cap(len(labels), 8),
        "ambiguity_score": (sum(1 for t in tokens if t in _HEDGES) / n_tok) if n_tok else 0.0,
        "context_len_norm": _cap(context_chars, 2000),
        "reasoning_needed": 1.0 if math_cue or token_set & _STEP_WORDS else 0.0,
        "context_needed": context_present,
        "knowledge_needed": 1.0 if any(domain_hits.values()) else 0.0,
        "prompt_len_norm": char_len_norm,
        "is_english": 1.0 if (
            _ascii_letter_ratio(prompt) >= _ASCII_STRICT
            or (_ascii_letter_ratio(prompt) >= _ASCII_LOOSE and token_set & _ENGLISH_STOPWORDS)
        ) else 0.0,
    }

    proxy_cats = schema.proxy_categories()
    if proxy_cats:
        if proxy is None:
            probs = np.zeros(len(proxy_cats))
        else:
            if tuple(proxy.category_names) != proxy_cats:
                raise ValidationError(
                    "proxy categories do not match the schema's proxy block"
                )
            probs = proxy.predict_proba(prompt)
        for cat, p in zip(proxy_cats, probs):
            values[f"proxy_prob_{cat}"] = float(p)
    elif proxy is not None:
        raise ValidationError("schema has no proxy block but a proxy was supplied")

    out = np.empty(schema.dim, dtype=np.float64)
    for i, entry in enumerate(schema.entries):
        v = values[entry.name]
        if not (entry.lo <= v <= entry.hi):
            raise ValidationError(
                f"feature {entry.name!r} = {v} outside [{entry.lo}, {entry.hi}]"
            )
        out[i] = v
    return FeatureVector(schema_version=schema.version, values=out)


# --- proxy category classifier --------------------------------------------


@dataclass(frozen=True)
class ProxyModel:
    """Multinomial logistic classifier over hashed bag-of-words counts.

    Predicts the benchmark category of a prompt; its probability vector is
    the schema's proxy feature block.  Trained on the train split only; the
    split fingerprint it saw is recorded for leakage audits.
    """

    vocab_hash_dim: int
    weights: np.ndarray  # (num_categories, vocab_hash_dim)
    category_names: tuple[str, ...]
    train_split_hash: str = ""

    def _features(self, prompt: str) -> tuple[np.ndarray, np.ndarray]:
        tokens = tokenize(prompt)
        buckets: dict[int, float] = {}
        for t in tokens:
            b = stable_bucket(t, self.vocab_hash_dim)
            buckets[b] = buckets.get(b, 0.0) + 1.0
        idx = np.fromiter(buckets.keys(), dtype=np.int64, count=len(buckets))
        cnt = np.fromiter(buckets.values(), dtype=np.float64, count=len(buckets))
        total = cnt.sum()
        if total > 0:
            cnt /= total
        return idx, cnt

    def predict_proba(self, prompt: str) -> np.ndarray:
        idx, cnt = self._features(prompt)
        logits = self.weights[:, idx] @ cnt if len(idx) else np.zeros(len(self.category_names))
        logits = logits - logits.max()
        e = np.exp(logits)
        return e / e.sum()

    def fingerprint(self) -> str:
        return fingerprint(
            np.int64(self.vocab_hash_dim).tobytes(),
            "\n".join(self.category_names).encode("utf-8"),
            np.ascontiguousarray(self.weights, dtype=np.float64).tobytes(),
        )

    def to_file(self, path: str | Path) -> None:
        obj = {
            "vocab_hash_dim": self.vocab_hash_dim,
            "category_names": list(self.category_names),
            "train_split_hash": self.train_split_hash,
            "weights_b64": base64.b64encode(
                np.ascontiguousarray(self.weights, dtype=np.float64).tobytes()
            ).decode("ascii"),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh)
            fh.write("\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "ProxyModel":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        cats = tuple(obj["category_names"])
        raw = base64.b64decode(obj["weights_b64"])
        weights = np.frombuffer(raw, dtype=np.float64).reshape(
            len(cats), int(obj["vocab_hash_dim"])
        ).copy()
        return cls(
            vocab_hash_dim=int(obj["vocab_hash_dim"]),
            weights=weights,
            category_names=cats,
            train_split_hash=str(obj.get("train_split_hash", "")),
        )


def train_proxy(
    train: Dataset,
    hash_dim: int = 1024,
    epochs: int = 10,
    lr: float = 0.5,
) -> ProxyModel:
    """Fit the proxy classifier with per-sample gradient steps in dataset order."""
    if len(train) == 0:
        raise ValidationError("cannot train proxy on an empty dataset")
    if hash_dim < 64:
        raise ValidationError(f"hash_dim {hash_dim} < 64")
    categories = tuple(sorted({r.benchmark for r in train.records}))
    if len(categories) < 2:
        raise ValidationError("proxy needs at least 2 benchmark categories")
    cat_index = {c: i for i, c in enumerate(categories)}

    model = ProxyModel(
        vocab_hash_dim=hash_dim,
        weights=np.zeros((len(categories), hash_dim)),
        category_names=categories,
        train_split_hash=train.fingerprint(),
    )

    # Sparse SGD: only the hashed buckets present in a prompt get updated.
    cached = [model._features(r.prompt) for r in train.records]
    labels = [cat_index[r.benchmark] for r in train.records]
    W = model.weights
    for _ in range(epochs):
        for (idx, cnt), y in zip(cached, labels):
            if len(idx) == 0:
                continue
            logits = W[:, idx] @ cnt
            logits -= logits.max()
            p = np.exp(logits)
            p /= p.sum()
            p[y] -= 1.0
            W[:, idx] -= lr * np.outer(p, cnt)
    return model


# --- dataset featurization and the feature matrix file ---------------------


@dataclass(frozen=True)
class FeatureManifest:
    schema_version: int
    dim: int
    count: int
    dataset_hash: str
    proxy_fingerprint: str | None
    proxy_train_split_hash: str | None

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
            fh.write("\n")


def featurize_dataset(
    dataset: Dataset,
    schema: FeatureSchema,
    proxy: ProxyModel | None = None,
) -> tuple[np.ndarray, FeatureManifest]:
    """Row-wise extract_features over a dataset, preserving record order."""

    def _row(rec):
        try:
            return extract_features(rec.prompt, schema, proxy).values
        except ValidationError as exc:
            raise ValidationError(f"sample {rec.sample_id!r}: {exc}") from exc

    workers = max_threads()
    if workers > 1 and len(dataset) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, dataset.records))
    else:
        rows = [_row(rec) for rec in dataset.records]

    matrix = np.vstack(rows) if rows else np.zeros((0, schema.dim))
    manifest = FeatureManifest(
        schema_version=schema.version,
        dim=schema.dim,
        count=len(dataset),
        dataset_hash=dataset.fingerprint(),
        proxy_fingerprint=proxy.fingerprint() if proxy else None,
        proxy_train_split_hash=proxy.train_split_hash if proxy else None,
    )
    return matrix, manifest


def write_feature_matrix(
    path: str | Path,
    matrix: np.ndarray,
    sample_ids: Sequence[str],
    schema_version: int,
) -> None:
    """Binary layout: magic, u32 version, u32 n, u32 d, n*d little-endian f32
    rows, then one sample_id per line (UTF-8)."""
    n, d = matrix.shape
    if n != len(sample_ids):
        raise ValidationError("matrix rows and sample_ids disagree")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", schema_version, n, d))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
        fh.write("".join(f"{s}\n" for s in sample_ids).encode("utf-8"))


def read_feature_matrix(path: str | Path) -> tuple[np.ndarray, list[str], int]:
    """Returns (matrix as float64, sample_ids, schema_version)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != FEATURE_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        header = fh.read(12)
        if len(header) != 12:
            raise FormatError(f"{path}: truncated header")
        version, n, d = struct.unpack("<III", header)
        payload = fh.read(n * d * 4)
        if len(payload) != n * d * 4:
            raise FormatError(f"{path}: truncated payload")
        matrix = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)
        ids = fh.read().decode("utf-8").splitlines()
        if len(ids) != n:
            raise FormatError(f"{path}: expected {n} sample ids, found {len(ids)}")
    return matrix, ids, version
