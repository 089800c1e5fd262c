"""Command-line pipeline: ingest, split, featurize, train, evaluate, route, sweep.

Runs are reproducible and auditable: every command that writes artifacts
echoes its resolved configuration and the content hashes of its input files
into the output directory.  A JSON config file can provide flag defaults
(top-level keys, optionally overridden per command under a key named after
the command); explicit command-line flags always win.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    Dataset,
    ModelPool,
    SplitSpec,
    filter_dataset,
    ingest_dataset,
    stratified_split,
    write_dataset,
)
from .embeddings import HashEmbeddingProvider, StoreEmbeddingProvider, hash_embed, load_embeddings
from .errors import FormatError, LLMRankError, ValidationError
from .evaluation import evaluate, frontier_csv, sweep_lambda
from .features import (
    FeatureSchema,
    ProxyModel,
    default_schema,
    extract_features,
    featurize_dataset,
    read_feature_matrix,
    train_proxy,
    write_feature_matrix,
)
from .ranker import TrainConfig, load_checkpoint, save_checkpoint, train_ranker
from .routing import explain_route, route_dataset
from .ranker import forward


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_config(out_dir: Path, command: str, args: argparse.Namespace, inputs: list[str]) -> None:
    resolved = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config") and not k.startswith("_")
    }
    payload = {
        "tool_version": __version__,
        "command": command,
        "resolved": resolved,
        "input_hashes": {str(p): _sha256(p) for p in inputs if p and Path(p).is_file()},
    }
    with open(out_dir / "run_config.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_pool(args: argparse.Namespace) -> ModelPool:
    if not args.pool:
        raise ValidationError("--pool is required")
    return ModelPool.from_file(args.pool)


def _embedding_provider(args: argparse.Namespace, path_attr: str = "embeddings"):
    path = getattr(args, path_attr, None)
    if path:
        return StoreEmbeddingProvider(load_embeddings(path))
    return HashEmbeddingProvider(args.hash_dim)


def _features_for(
    dataset: Dataset, schema: FeatureSchema, proxy: ProxyModel | None,
    matrix_path: str | None,
) -> np.ndarray:
    if matrix_path:
        matrix, ids, version = read_feature_matrix(matrix_path)
        if version != schema.version:
            raise ValidationError(
                f"{matrix_path}: schema version {version} != expected {schema.version}"
            )
        if ids != [r.sample_id for r in dataset.records]:
            raise ValidationError(f"{matrix_path}: sample ids disagree with the dataset")
        return matrix
    matrix, _ = featurize_dataset(dataset, schema, proxy)
    return matrix


def _train_config(args: argparse.Namespace, lambda_: float) -> TrainConfig:
    return TrainConfig(
        lambda_=lambda_,
        lr=args.lr,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        batch_size=args.batch_size,
        patience=args.patience,
        clip_norm=args.clip_norm,
        dropout=args.dropout,
        tau=args.tau,
        seed=args.seed,
    )


# --- subcommands ------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    pool = _load_pool(args)
    out = _out_dir(args)
    dataset = ingest_dataset(
        args.data, pool,
        strict=not args.lenient,
        rejects_path=out / (Path(args.data).name + ".rejects"),
    )
    raw_count = len(dataset)
    if not args.no_filter:
        dataset = filter_dataset(
            dataset,
            min_category_samples=args.min_category_samples,
            drop_unsolved=not args.keep_unsolved,
            keep_languages=args.keep_languages.split(","),
        )
    write_dataset(dataset, out / "dataset.jsonl")
    pool.to_file(out / "pool.json")
    _write_run_config(out, "ingest", args, [args.data, args.pool])
    print(f"ingested {raw_count} records, kept {len(dataset)} after filtering")
    for bench, count in sorted(dataset.benchmark_counts().items()):
        print(f"  {bench}: {count}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    pool = _load_pool(args)
    out = _out_dir(args)
    fracs = [float(x) for x in args.fractions.split(",")]
    if len(fracs) != 3:
        raise ValidationError("--fractions needs three comma-separated values")
    spec = SplitSpec(train_frac=fracs[0], val_frac=fracs[1], test_frac=fracs[2], seed=args.seed)
    dataset = ingest_dataset(args.data, pool)
    train, val, test = stratified_split(dataset, spec)
    for name, part in (("train", train), ("val", val), ("test", test)):
        write_dataset(part, out / f"{name}.jsonl")
    _write_run_config(out, "split", args, [args.data, args.pool])
    print(f"split {len(dataset)} -> train {len(train)}, val {len(val)}, test {len(test)}")
    return 0


def cmd_featurize(args: argparse.Namespace) -> int:
    pool = _load_pool(args)
    out = _out_dir(args)
    dataset = ingest_dataset(args.data, pool)

    proxy = None
    if args.proxy_data:
        proxy_train = ingest_dataset(args.proxy_data, pool)
        proxy = train_proxy(proxy_train, hash_dim=args.proxy_hash_dim, epochs=args.proxy_epochs)
        proxy.to_file(out / "proxy.json")
        schema = default_schema(proxy.category_names)
    else:
        schema = default_schema()

    matrix, manifest = featurize_dataset(dataset, schema, proxy)
    write_feature_matrix(
        out / "features.bin", matrix, [r.sample_id for r in dataset.records], schema.version
    )
    schema.to_file(out / "schema.json")
    manifest.to_file(out / "manifest.json")
    _write_run_config(out, "featurize", args, [args.data, args.pool, args.proxy_data])
    print(f"featurized {len(dataset)} records into {matrix.shape[1]} features")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    pool = _load_pool(args)
    out = _out_dir(args)
    train_set = ingest_dataset(args.train, pool)
    val_set = ingest_dataset(args.val, pool)

    proxy = ProxyModel.from_file(args.proxy_file) if args.proxy_file else None
    schema = default_schema(proxy.category_names if proxy else ())
    train_features = _features_for(train_set, schema, proxy, args.features_train)
    val_features = _features_for(val_set, schema, proxy, args.features_val)

    train_provider = _embedding_provider(args, "embeddings_train")
    val_provider = _embedding_provider(args, "embeddings_val")
    if train_provider.dim != val_provider.dim:
        raise ValidationError("train/val embedding dims disagree")
    train_embeddings = train_provider.embed_dataset(train_set)
    val_embeddings = val_provider.embed_dataset(val_set)

    config = _train_config(args, args.lambda_)
    params, log = train_ranker(
        train_set, val_set,
        train_features, train_embeddings,
        val_features, val_embeddings,
        config, hidden=args.hidden, feature_schema_version=schema.version,
    )
    save_checkpoint(out / "checkpoint.bin", params, config)
    with open(out / "training_log.json", "w", encoding="utf-8") as fh:
        fh.write(log.to_json() + "\n")
    _write_run_config(
        out, "train", args,
        [args.train, args.val, args.pool, args.features_train, args.features_val,
         args.embeddings_train, args.embeddings_val, args.proxy_file],
    )
    print(
        f"trained {log.stopped_epoch} epochs (best {log.best_epoch}, "
        f"val loss {min(log.val_losses):.6f}) -> {out / 'checkpoint.bin'}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    pool = _load_pool(args)
    dataset = ingest_dataset(args.data, pool)
    params, meta = load_checkpoint(args.checkpoint)
    if params.pool_fingerprint and params.pool_fingerprint != pool.fingerprint():
        raise ValidationError("checkpoint was trained against a different model pool")

    proxy = ProxyModel.from_file(args.proxy_file) if args.proxy_file else None
    schema = default_schema(proxy.category_names if proxy else ())
    features = _features_for(dataset, schema, proxy, args.features)
    provider = _embedding_provider(args)
    if provider.dim != params.embedding_dim:
        raise ValidationError(
            f"embedding dim {provider.dim} != checkpoint's {params.embedding_dim}"
        )
    embeddings = provider.embed_dataset(dataset)

    lambda_ = meta.lambda_ if args.lambda_ is None else args.lambda_
    decisions = route_dataset(params, dataset, features, embeddings)
    report = evaluate(decisions, dataset, lambda_)

    if args.format == "json":
        print(report.to_json())
    else:
        print(report.format_table(), end="")
    if args.out:
        out = _out_dir(args)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
        with open(out / "report.txt", "w", encoding="utf-8") as fh:
            fh.write(report.format_table())
        _write_run_config(
            out, "evaluate", args,
            [args.data, args.pool, args.checkpoint, args.features, args.embeddings],
        )
    return 0


def cmd_route(args: argparse.Namespace) -> int:
    params, _ = load_checkpoint(args.checkpoint)
    pool = ModelPool.from_file(args.pool) if args.pool else None
    if pool and params.pool_fingerprint and params.pool_fingerprint != pool.fingerprint():
        raise ValidationError("checkpoint was trained against a different model pool")

    proxy = ProxyModel.from_file(args.proxy_file) if args.proxy_file else None
    schema = default_schema(proxy.category_names if proxy else ())
    if schema.dim != params.d_j:
        raise ValidationError(
            f"feature schema dim {schema.dim} != checkpoint's {params.d_j} "
            "(was the checkpoint trained with a proxy block?)"
        )
    dim = params.embedding_dim

    lines = open(args.data, encoding="utf-8") if args.data else sys.stdin
    try:
        for i, line in enumerate(lines):
            prompt = line.rstrip("\n")
            if not prompt.strip():
                continue
            x_j = extract_features(prompt, schema, proxy).values
            x_t = hash_embed(prompt, dim)
            scores = forward(params, x_j, x_t, train_mode=False)
            chosen = int(np.argmax(scores))
            decision = {
                "index": i,
                "chosen_index": chosen,
                "chosen_model": pool.names[chosen] if pool else None,
                "scores": [float(s) for s in scores],
            }
            if args.explain:
                decision["attributions"] = [
                    {"group": g, "score_drop": v}
                    for g, v in explain_route(params, x_j, x_t, schema)
                ]
            print(json.dumps(decision))
    finally:
        if args.data:
            lines.close()
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    pool = _load_pool(args)
    out = _out_dir(args)
    train_set = ingest_dataset(args.train, pool)
    val_set = ingest_dataset(args.val, pool)
    test_set = ingest_dataset(args.test, pool)
    lambdas = [float(x) for x in args.lambdas.split(",")]

    schema = default_schema()
    features = [featurize_dataset(s, schema)[0] for s in (train_set, val_set, test_set)]
    provider = _embedding_provider(args)
    embeddings = [provider.embed_dataset(s) for s in (train_set, val_set, test_set)]

    rows = sweep_lambda(
        train_set, val_set, test_set, lambdas,
        _train_config(args, lambdas[0]),
        *features, *embeddings,
        hidden=args.hidden, feature_schema_version=schema.version,
    )
    csv = frontier_csv(rows)
    with open(out / "frontier.csv", "w", encoding="utf-8") as fh:
        fh.write(csv)
    _write_run_config(out, "sweep", args, [args.train, args.val, args.test, args.pool])
    print(csv, end="")
    return 0


# --- parser -----------------------------------------------------------------


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--weight-decay", type=float, default=1e-2)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--clip-norm", type=float, default=1.0)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=256)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llmrank", description="cost-aware prompt-to-model routing toolkit"
    )
    parser.add_argument("--config", help="JSON file of flag defaults", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate, filter, and canonicalize a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-category-samples", type=int, default=50)
    p.add_argument("--keep-languages", default="en")
    p.add_argument("--keep-unsolved", action="store_true")
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--lenient", action="store_true",
                   help="log bad lines to a .rejects file instead of failing")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="stratified train/val/test split")
    p.add_argument("--data", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default="0.7,0.15,0.15")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("featurize", help="export the feature matrix for a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--proxy-data", default=None,
                   help="train split for the proxy classifier (enables the proxy block)")
    p.add_argument("--proxy-hash-dim", type=int, default=1024)
    p.add_argument("--proxy-epochs", type=int, default=10)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train a router checkpoint")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.0)
    p.add_argument("--hash-dim", type=int, default=256)
    p.add_argument("--embeddings-train", default=None)
    p.add_argument("--embeddings-val", default=None)
    p.add_argument("--features-train", default=None)
    p.add_argument("--features-val", default=None)
    p.add_argument("--proxy-file", default=None)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--hash-dim", type=int, default=256)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--features", default=None)
    p.add_argument("--proxy-file", default=None)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("route", help="route prompts from a file or stdin")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pool", default=None)
    p.add_argument("--data", default=None, help="prompt file, one per line (default stdin)")
    p.add_argument("--proxy-file", default=None)
    p.add_argument("--explain", action="store_true")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("sweep", help="train and evaluate one router per lambda")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambdas", default="0,1e3,1e5")
    p.add_argument("--hash-dim", type=int, default=256)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config JSON values in as parser defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    config_path = argv[idx + 1]
    with open(config_path, encoding="utf-8") as fh:
        config = json.load(fh)
    command = next((a for a in argv if not a.startswith("-") and a != config_path), None)
    defaults = {k: v for k, v in config.items() if not isinstance(v, dict)}
    if command and isinstance(config.get(command), dict):
        defaults.update(config[command])
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        if command in getattr(action, "choices", {}):
            action.choices[command].set_defaults(
                **{k.replace("-", "_"): v for k, v in defaults.items()}
            )
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except LLMRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
