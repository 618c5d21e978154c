"""Dataset ingestion: Positive/Negative folders -> manifest -> feature table.

Manifest CSV: ``path,label`` with labels ``cracked``/``uncracked``.
Feature table CSV: ``path,label``, ten 16-digit hex hash columns, then the
same ten hashes as decimal doubles (shortest round-trip repr). Provenance
(toolkit version, seed, timestamp) goes to a JSON sidecar next to the CSV.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .hashing import FEATURE_NAMES, hash_all, hash_to_float
from .imaging import load_rgb

__all__ = [
    "CRACKED",
    "UNCRACKED",
    "Manifest",
    "FeatureTable",
    "SkipReport",
    "DatasetError",
    "scan",
    "extract_table",
    "stratified_split",
    "split",
    "write_scatter",
    "provenance",
]

log = logging.getLogger(__name__)

UNCRACKED = 0
CRACKED = 1
LABEL_NAMES = {UNCRACKED: "uncracked", CRACKED: "cracked"}
LABEL_VALUES = {v: k for k, v in LABEL_NAMES.items()}
CLASS_DIRS = {"Positive": CRACKED, "Negative": UNCRACKED}
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
SKIP_THRESHOLD = 0.01

HEX_COLUMNS = [f"{n}_hex" for n in FEATURE_NAMES]
TABLE_HEADER = ["path", "label", *HEX_COLUMNS, *FEATURE_NAMES]


class DatasetError(ValueError):
    pass


def provenance(seed: int | None = None, timestamp: bool = True, **extra) -> dict:
    doc = {"toolkit": "crackhash", "version": __version__, "seed": seed}
    doc.update(extra)
    if timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return doc


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".provenance.json")


def _write_sidecar(path: Path, prov: dict) -> None:
    _sidecar(path).write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Manifest:
    root: Path
    paths: tuple[str, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.paths) != len(self.labels):
            raise DatasetError("paths and labels differ in length")
        if len(set(self.paths)) != len(self.paths):
            raise DatasetError("manifest paths must be unique")
        if any(lab not in LABEL_NAMES for lab in self.labels):
            raise DatasetError("labels must be 0 (uncracked) or 1 (cracked)")

    def __len__(self):
        return len(self.paths)

    @property
    def counts(self) -> tuple[int, int]:
        """(cracked, uncracked)."""
        n1 = sum(self.labels)
        return n1, len(self.labels) - n1

    def subset(self, indices) -> "Manifest":
        indices = sorted(int(i) for i in indices)
        return Manifest(self.root, tuple(self.paths[i] for i in indices), tuple(self.labels[i] for i in indices))

    def save(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "label"])
            for p, lab in zip(self.paths, self.labels):
                w.writerow([p, LABEL_NAMES[lab]])

    @classmethod
    def load(cls, path, root=None) -> "Manifest":
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            labels = tuple(LABEL_VALUES[r["label"]] for r in rows)
        except KeyError as exc:
            raise DatasetError(f"{path}: bad label {exc}") from None
        return cls(Path(root) if root else path.parent, tuple(r["path"] for r in rows), labels)


def scan(root) -> Manifest:
    """Collect images under ``root/Positive`` (cracked) and ``root/Negative``.

    Entries are sorted lexicographically by relative POSIX path; files whose
    suffix is not .png/.jpg/.jpeg (any case) are ignored.
    """
    root = Path(root)
    entries = []
    for dirname, label in CLASS_DIRS.items():
        folder = root / dirname
        if not folder.is_dir():
            raise DatasetError(f"missing class folder {folder}")
        found = [
            p.relative_to(root).as_posix()
            for p in folder.rglob("*")
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        ]
        if not found:
            raise DatasetError(f"class folder {folder} contains no images")
        entries.extend((p, label) for p in found)
    entries.sort()
    return Manifest(root, tuple(p for p, _ in entries), tuple(lab for _, lab in entries))


@dataclass(frozen=True)
class SkipReport:
    skipped: tuple[tuple[str, str], ...]  # (path, error message)
    total: int

    @property
    def fraction(self) -> float:
        return len(self.skipped) / self.total if self.total else 0.0


@dataclass(eq=False)
class FeatureTable:
    paths: list[str]
    labels: np.ndarray    # (n,) int64
    hashes: list[list[int]]  # (n, 10) raw 64-bit values
    features: np.ndarray  # (n, 10) float64
    provenance: dict = field(default_factory=dict)
    skipped: SkipReport | None = None

    def __len__(self):
        return len(self.paths)

    def subset(self, indices) -> "FeatureTable":
        idx = sorted(int(i) for i in indices)
        return FeatureTable(
            [self.paths[i] for i in idx],
            self.labels[idx],
            [self.hashes[i] for i in idx],
            self.features[idx],
            dict(self.provenance),
        )

    def rows(self):
        for p, lab, hs, fv in zip(self.paths, self.labels.tolist(), self.hashes, self.features.tolist()):
            yield [p, LABEL_NAMES[lab], *(f"{h:016x}" for h in hs), *(repr(v) for v in fv)]

    def save(self, path, timestamp: bool = True) -> None:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_HEADER)
            w.writerows(self.rows())
        prov = {k: v for k, v in self.provenance.items() if k != "timestamp"}
        prov.setdefault("toolkit", "crackhash")
        prov.setdefault("version", __version__)
        if timestamp:
            prov["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        if self.skipped is not None and self.skipped.skipped:
            prov["skipped"] = [list(s) for s in self.skipped.skipped]
        _write_sidecar(path, prov)

    @classmethod
    def load(cls, path) -> "FeatureTable":
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != TABLE_HEADER:
                raise DatasetError(f"{path}: unexpected feature table header")
            rows = list(reader)
        if not rows:
            raise DatasetError(f"{path}: feature table has no rows")
        n = len(FEATURE_NAMES)
        paths = [r[0] for r in rows]
        try:
            labels = np.array([LABEL_VALUES[r[1]] for r in rows], dtype=np.int64)
        except KeyError as exc:
            raise DatasetError(f"{path}: bad label {exc}") from None
        hashes = [[int(h, 16) for h in r[2:2 + n]] for r in rows]
        features = np.array([[float(v) for v in r[2 + n:2 + 2 * n]] for r in rows], dtype=np.float64)
        prov = {}
        if _sidecar(path).exists():
            prov = json.loads(_sidecar(path).read_text(encoding="utf-8"))
        return cls(paths, labels, hashes, features, prov)


def _hash_file(path: str):
    try:
        return [h.bits for h in hash_all(load_rgb(path))], None
    except Exception as exc:  # any decode failure is reported per file
        return None, f"{type(exc).__name__}: {exc}"


def extract_table(manifest: Manifest, workers: int = 1, seed: int | None = None,
                  skip_threshold: float = SKIP_THRESHOLD) -> FeatureTable:
    """Hash every manifest entry; row order follows the manifest for any worker count.

    Undecodable files are skipped and listed in ``table.skipped``; the run
    fails if more than ``skip_threshold`` of the files were skipped.
    """
    if len(manifest) == 0:
        raise DatasetError("cannot extract features from an empty manifest")
    files = [str(manifest.root / p) for p in manifest.paths]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_hash_file, files, chunksize=max(1, len(files) // (8 * workers))))
    else:
        results = [_hash_file(f) for f in files]

    paths, labels, hashes, skipped = [], [], [], []
    for rel, lab, (hs, err) in zip(manifest.paths, manifest.labels, results):
        if err is not None:
            skipped.append((rel, err))
            log.warning("skipping %s: %s", rel, err)
            continue
        paths.append(rel)
        labels.append(lab)
        hashes.append(hs)
    report = SkipReport(tuple(skipped), len(manifest))
    if report.fraction > skip_threshold:
        raise DatasetError(
            f"{len(skipped)} of {len(manifest)} files could not be decoded "
            f"(limit {skip_threshold:.0%}); first: {skipped[0][0]}: {skipped[0][1]}"
        )
    if not paths:
        raise DatasetError("no decodable images in manifest")
    features = np.array([[hash_to_float(h) for h in hs] for hs in hashes], dtype=np.float64)
    prov = {"toolkit": "crackhash", "version": __version__, "seed": seed, "manifest_entries": len(manifest)}
    return FeatureTable(paths, np.array(labels, dtype=np.int64), hashes, features, prov, report)


def stratified_split(labels, train_fraction: float, seed: int):
    """Sorted (train, test) index arrays keeping each class's share of ``train_fraction``.

    Class c contributes round-half-up(train_fraction * n_c) samples to train.
    """
    if not 0 < train_fraction < 1:
        raise DatasetError(f"train fraction must lie strictly between 0 and 1, got {train_fraction}")
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    train = []
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            continue
        n_train = int(np.floor(train_fraction * idx.size + 0.5))
        train.append(rng.permutation(idx)[:n_train])
    train = np.sort(np.concatenate(train)) if train else np.empty(0, dtype=np.int64)
    test = np.setdiff1d(np.arange(labels.size), train, assume_unique=True)
    return train, test


def split(data, train_fraction: float, seed: int):
    """Stratified seeded split of a Manifest or FeatureTable into (train, test)."""
    labels = data.labels
    train, test = stratified_split(labels, train_fraction, seed)
    return data.subset(train), data.subset(test)


def write_scatter(table: FeatureTable, path) -> None:
    """Pairwise scatter data: ``file,label,f1..f10`` with decimal feature values."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "label", *(f"f{i + 1}" for i in range(len(FEATURE_NAMES)))])
        for p, lab, fv in zip(table.paths, table.labels.tolist(), table.features.tolist()):
            w.writerow([p, LABEL_NAMES[lab], *(repr(v) for v in fv)])


def default_workers() -> int:
    env = os.environ.get("CRACKHASH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DatasetError(f"CRACKHASH_THREADS must be an integer, got {env!r}") from None
    return 1
