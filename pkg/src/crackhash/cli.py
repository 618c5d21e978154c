"""Command-line entry point: ``crackhash <subcommand> ...``.

Every stochastic subcommand takes ``--seed`` (default 42) and records it in
its output. ``--threads`` (default: $CRACKHASH_THREADS or 1) never changes
results, only wall-clock time. ``--no-timestamp`` drops the only
non-reproducible field so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .classify import MODEL_KINDS, Forest, ForestParams, train_forest
from .dataset import (
    DatasetError,
    FeatureTable,
    default_workers,
    extract_table,
    scan,
    split,
    write_scatter,
)
from .evaluation import confusion, cross_validate, metrics, roc, sequential_forward_selection
from .hashing import FEATURE_NAMES, Algo, compute_hash
from .imaging import DEFAULT_OMEGA, load_rgb, to_grayscale

SCHEMA_VERSION = 1
DEFAULT_SEED = 42
DEFAULT_K = 10
DEFAULT_FRACTION = 0.7

log = logging.getLogger("crackhash")


def _fold_count(text: str) -> int:
    k = int(text)
    if k < 2:
        raise argparse.ArgumentTypeError(f"k must be at least 2, got {k}")
    return k


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"fraction must lie in (0, 1], got {v}")
    return v


def _nonempty_path(text: str) -> Path:
    if not text:
        raise argparse.ArgumentTypeError("path must not be empty")
    return Path(text)


def _add_common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    if seed:
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 42)")
    p.add_argument("--threads", type=_positive, default=None,
                   help="worker processes (default $CRACKHASH_THREADS or 1); never affects results")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamps from emitted files")


def _add_forest(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("random forest / tree parameters")
    g.add_argument("--trees", type=_positive, default=100)
    g.add_argument("--max-features", type=_positive, default=None,
                   help="features tried per split (default floor(sqrt(d)); all for dt)")
    g.add_argument("--max-depth", type=_positive, default=None)
    g.add_argument("--min-samples-leaf", type=_positive, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crackhash", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"crackhash {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("hash", help="print one perceptual hash of an image")
    p.add_argument("file", type=_nonempty_path)
    p.add_argument("--algo", choices=[a.value for a in Algo] + ["all"], default="phash")
    p.add_argument("--z", action="store_true", help="use the Z-transform reduction")
    p.add_argument("--omega", type=float, default=DEFAULT_OMEGA)

    p = sub.add_parser("extract", help="hash a Positive/Negative image folder into a feature table")
    p.add_argument("root", type=_nonempty_path)
    p.add_argument("--out", type=_nonempty_path, required=True, help="feature table CSV")
    p.add_argument("--manifest-out", type=_nonempty_path, help="also write the manifest CSV")
    p.add_argument("--scatter", type=_nonempty_path, help="also write the pairwise scatter CSV")
    _add_common(p)

    p = sub.add_parser("split", help="stratified split of a feature table")
    p.add_argument("table", type=_nonempty_path)
    p.add_argument("--fraction", type=_fraction, default=0.5, help="share of rows in the first output")
    p.add_argument("--train-out", type=_nonempty_path, required=True)
    p.add_argument("--test-out", type=_nonempty_path, required=True)
    _add_common(p)

    p = sub.add_parser("cv", help="k-fold cross-validation of one classifier")
    p.add_argument("table", type=_nonempty_path)
    p.add_argument("--model", choices=[k for k in MODEL_KINDS if k != "majority"], default="rf")
    p.add_argument("--k", type=_fold_count, default=DEFAULT_K)
    p.add_argument("--neighbors", type=_positive, default=5, help="k for the knn model")
    p.add_argument("--out", type=_nonempty_path, help="JSON report (default: stdout)")
    p.add_argument("--roc-out", type=_nonempty_path, help="per-fold ROC points CSV")
    _add_forest(p)
    _add_common(p)

    p = sub.add_parser("train", help="train a random forest on a stratified share of a table")
    p.add_argument("table", type=_nonempty_path)
    p.add_argument("--out", type=_nonempty_path, required=True, help="model file")
    p.add_argument("--fraction", type=_fraction, default=DEFAULT_FRACTION,
                   help="share of rows used for training (1 = all)")
    _add_forest(p)
    _add_common(p)

    p = sub.add_parser("evaluate", help="score a trained model on a feature table")
    p.add_argument("model", type=_nonempty_path)
    p.add_argument("table", type=_nonempty_path)
    p.add_argument("--out", type=_nonempty_path, help="JSON report (default: stdout)")
    _add_common(p, seed=False)

    p = sub.add_parser("roc", help="write ROC points of a trained model on a table")
    p.add_argument("model", type=_nonempty_path)
    p.add_argument("table", type=_nonempty_path)
    p.add_argument("--out", type=_nonempty_path, required=True, help="CSV threshold,fpr,tpr")
    _add_common(p, seed=False)

    p = sub.add_parser("select", help="sequential forward feature selection with the random forest")
    p.add_argument("table", type=_nonempty_path)
    p.add_argument("--k", type=_fold_count, default=DEFAULT_K)
    p.add_argument("--out", type=_nonempty_path, help="JSON report (default: stdout)")
    _add_forest(p)
    _add_common(p)

    p = sub.add_parser("compare", help="rank CV reports and externally computed accuracy files")
    p.add_argument("reports", type=_nonempty_path, nargs="+")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


# --- helpers ------------------------------------------------------------------

def _threads(args) -> int:
    return args.threads if args.threads is not None else default_workers()


def _report(args, command: str, body: dict, seed=None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "toolkit": "crackhash", "version": __version__,
           "command": command, "seed": seed}
    doc.update(body)
    if not getattr(args, "no_timestamp", False):
        doc["provenance"] = {"timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    return doc


def _emit_json(doc: dict, out: Path | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _write_roc_csv(path: Path, rows, header_extra=(), comment: dict | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*header_extra, "threshold", "fpr", "tpr"])
        w.writerows(rows)
    if comment is not None:
        path.with_name(path.name + ".provenance.json").write_text(
            json.dumps(comment, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _provenance(args, seed=None) -> dict:
    doc = {"toolkit": "crackhash", "version": __version__, "seed": seed}
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return doc


def _forest_params(args) -> dict:
    return {"n_trees": args.trees, "max_features": args.max_features,
            "max_depth": args.max_depth, "min_samples_leaf": args.min_samples_leaf}


def _model_params(args) -> dict | None:
    if args.model == "rf":
        return _forest_params(args)
    if args.model == "dt":
        return {"max_features": args.max_features, "max_depth": args.max_depth,
                "min_samples_leaf": args.min_samples_leaf}
    if args.model == "knn":
        return {"k": args.neighbors}
    return None


def _fmt(v: float) -> str:
    return repr(float(v))


# --- subcommands --------------------------------------------------------------

def cmd_hash(args) -> int:
    gray = to_grayscale(load_rgb(args.file))
    algos = list(Algo) if args.algo == "all" else [Algo(args.algo)]
    for algo in algos:
        h = compute_hash(gray, algo, args.z, args.omega)
        print(h.hex if len(algos) == 1 else f"{h.name}\t{h.hex}")
    return 0


def cmd_extract(args) -> int:
    manifest = scan(args.root)
    n1, n0 = manifest.counts
    log.info("found %d cracked and %d uncracked images", n1, n0)
    table = extract_table(manifest, _threads(args), seed=args.seed)
    table.save(args.out, timestamp=not args.no_timestamp)
    if args.manifest_out:
        manifest.save(args.manifest_out)
    if args.scatter:
        write_scatter(table, args.scatter)
    skipped = len(table.skipped.skipped) if table.skipped else 0
    print(f"wrote {len(table)} rows to {args.out} ({skipped} skipped)", file=sys.stderr)
    return 0


def cmd_split(args) -> int:
    table = FeatureTable.load(args.table)
    if args.fraction >= 1:
        raise DatasetError("split fraction must be below 1")
    first, second = split(table, args.fraction, args.seed)
    for part, out, role in ((first, args.train_out, "train"), (second, args.test_out, "test")):
        part.provenance = {**table.provenance, "seed": args.seed, "split_fraction": args.fraction,
                           "split_role": role, "split_source": args.table.name}
        part.save(out, timestamp=not args.no_timestamp)
    print(f"{len(first)} rows -> {args.train_out}, {len(second)} rows -> {args.test_out}", file=sys.stderr)
    return 0


def cmd_cv(args) -> int:
    table = FeatureTable.load(args.table)
    params = _model_params(args)
    result = cross_validate(args.model, params, table.features, table.labels, args.k, args.seed, _threads(args))
    body = {"model": args.model, "model_name": MODEL_KINDS[args.model], "params": params,
            "stratified": True, "n_samples": len(table), "cv": result.to_dict()}
    _emit_json(_report(args, "cv", body, args.seed), args.out)
    if args.roc_out:
        rows = [[f, _fmt(t), _fmt(x), _fmt(y)]
                for f, curve in enumerate(result.rocs) if curve is not None
                for t, x, y in curve.points()]
        _write_roc_csv(args.roc_out, rows, ("fold",), _provenance(args, args.seed))
    print(f"{MODEL_KINDS[args.model]}: mean accuracy {result.mean:.4f} +/- {result.std:.4f} "
          f"over {args.k} folds", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    table = FeatureTable.load(args.table)
    train = table if args.fraction >= 1 else split(table, args.fraction, args.seed)[0]
    params = ForestParams(**_forest_params(args))
    forest = train_forest(train.features, train.labels, params, args.seed, _threads(args))
    forest.meta = {"toolkit": "crackhash", "version": __version__, "train_rows": len(train),
                   "train_fraction": args.fraction, "feature_names": FEATURE_NAMES}
    forest.save(args.out)
    print(f"trained {params.n_trees} trees on {len(train)} rows -> {args.out}", file=sys.stderr)
    return 0


def _score(args):
    forest = Forest.load(args.model)
    table = FeatureTable.load(args.table)
    if table.features.shape[1] != forest.n_features:
        raise DatasetError(f"model expects {forest.n_features} features, table has {table.features.shape[1]}")
    return forest, table, forest.predict_proba(table.features)


def cmd_evaluate(args) -> int:
    forest, table, proba = _score(args)
    pred = (proba >= 0.5).astype(np.int64)
    cm = confusion(pred, table.labels)
    m = metrics(cm)
    body = {"model_file": args.model.name, "train_seed": forest.train_seed,
            "params": forest.to_dict()["params"], "n_samples": len(table),
            "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn, "matrix": cm.as_matrix()},
            "metrics": m.to_dict()}
    if 0 < table.labels.sum() < len(table):
        curve = roc(proba, table.labels)
        body["auc"] = curve.auc
        body["roc_points"] = len(curve.thresholds)
    else:
        body["auc"] = None
    _emit_json(_report(args, "evaluate", body, forest.train_seed), args.out)
    print(f"accuracy {m.accuracy:.4f}, AUC {body['auc']}", file=sys.stderr)
    return 0


def cmd_roc(args) -> int:
    forest, table, proba = _score(args)
    curve = roc(proba, table.labels)
    rows = [[_fmt(t), _fmt(x), _fmt(y)] for t, x, y in curve.points()]
    _write_roc_csv(args.out, rows, comment={**_provenance(args, forest.train_seed), "auc": curve.auc})
    print(f"AUC {curve.auc:.4f}; {len(rows)} points -> {args.out}", file=sys.stderr)
    return 0


def cmd_select(args) -> int:
    table = FeatureTable.load(args.table)
    params = _forest_params(args)
    result = sequential_forward_selection(table.features, table.labels, args.k, args.seed, "rf", params,
                                          workers=_threads(args), feature_names=FEATURE_NAMES)
    body = {"params": params, "k": args.k, "n_samples": len(table),
            "selected_names": [FEATURE_NAMES[i] for i in result.selected],
            "n_selected": len(result.selected), **result.to_dict()}
    _emit_json(_report(args, "select", body, args.seed), args.out)
    print(f"selected {len(result.selected)} of {len(FEATURE_NAMES)} features", file=sys.stderr)
    return 0


def _scores_from(path: Path) -> list[tuple[str, float]]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "cv" in doc:
        return [(doc.get("model_name", doc.get("model", path.stem)), float(doc["cv"]["mean_accuracy"]))]
    if "scores" in doc:
        return [(name, float(v)) for name, v in doc["scores"].items()]
    if "mean_accuracy" in doc:
        return [(doc.get("model", path.stem), float(doc["mean_accuracy"]))]
    raise DatasetError(f"{path}: no cv report, 'scores' mapping or 'mean_accuracy' field")


def cmd_compare(args) -> int:
    scores = [s for p in args.reports for s in _scores_from(p)]
    scores.sort(key=lambda s: (-s[1], s[0]))
    width = max(len(name) for name, _ in scores)
    for name, acc in scores:
        print(f"{name:<{width}}  {acc:.3f}")
    return 0


COMMANDS = {
    "hash": cmd_hash,
    "extract": cmd_extract,
    "split": cmd_split,
    "cv": cmd_cv,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
    "select": cmd_select,
    "compare": cmd_compare,
}


def execute(args: argparse.Namespace) -> int:
    return COMMANDS[args.command](args)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return execute(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"crackhash {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
