"""On-disk hand-offs between pipeline stages: CSV tables and manifests.

Each output directory holds a ``manifest.json`` with the producing command,
its resolved configuration, the package version and the SHA-256 of every
input and output file. Consumers re-hash the files a manifest lists before
trusting them. Nothing time-dependent is recorded, so identical runs write
identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import __version__
from .dataset import next_event_labels
from .errors import InsufficientRows, ManifestMismatch, MalformedRecord
from .features import N_FEATURES, FeatureTable, check_layout, layout_manifest

MANIFEST = "manifest.json"
FEATURES_CSV = "features.csv"
FEATURE_COLUMNS = ["ts_ns", "session", "mid"] + [f"f{i}" for i in range(N_FEATURES)] + ["label"]
PathLike = Union[str, Path]


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    columns = list(columns or (rows[0].keys() if rows else []))
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return out.getvalue()


def write_csv(path: PathLike, rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(rows, columns))
    return path


# -- manifests ------------------------------------------------------------

def write_manifest(
    out_dir: PathLike,
    command: str,
    config: dict,
    outputs: Iterable[PathLike],
    inputs: Iterable[PathLike] = (),
    **extra,
) -> Path:
    out_dir = Path(out_dir)
    doc = {
        "tool": "lobrnn",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    doc.update(extra)
    path = out_dir / MANIFEST
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return path


def read_manifest(directory: PathLike, verify: bool = True) -> dict:
    """Load a directory's manifest and check every listed output's hash."""
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.is_file():
        raise ManifestMismatch(f"no {MANIFEST} in {directory}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestMismatch(f"unreadable manifest {path}: {exc}") from exc
    if verify:
        for name, digest in doc.get("outputs", {}).items():
            f = directory / name
            if not f.is_file():
                raise ManifestMismatch(f"{f} listed in manifest but missing")
            if sha256_file(f) != digest:
                raise ManifestMismatch(f"{f} does not match its manifest hash")
    return doc


# -- feature tables -------------------------------------------------------

def features_to_csv(table: FeatureTable) -> str:
    labels, valid = next_event_labels(table)
    out = io.StringIO()
    out.write(",".join(FEATURE_COLUMNS) + "\n")
    for i in range(len(table)):
        cells = [str(int(table.ts_ns[i])), str(int(table.session[i])), str(int(table.mid[i]))]
        cells += [repr(float(v)) for v in table.x[i]]
        cells.append(str(int(labels[i])) if valid[i] else "")
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def parse_features_csv(text: str, window_length: int) -> FeatureTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != FEATURE_COLUMNS:
        raise MalformedRecord(1, "header", "unexpected feature columns")
    ts, sess, mid, rows = [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(FEATURE_COLUMNS):
            raise MalformedRecord(lineno, "row", f"expected {len(FEATURE_COLUMNS)} fields")
        try:
            ts.append(int(row[0]))
            sess.append(int(row[1]))
            mid.append(int(row[2]))
            rows.append([float(v) for v in row[3 : 3 + N_FEATURES]])
        except ValueError as exc:
            raise MalformedRecord(lineno, "value", str(exc)) from None
    if not rows:
        raise InsufficientRows("feature file has no rows")
    return FeatureTable(
        np.array(ts, dtype=np.int64),
        np.array(rows, dtype=np.float64),
        np.array(mid, dtype=np.int64),
        np.array(sess, dtype=np.int64),
        window_length,
    )


def write_features(out_dir: PathLike, table: FeatureTable, config: dict, inputs: Iterable[PathLike] = ()) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / FEATURES_CSV
    path.write_text(features_to_csv(table))
    layout = layout_manifest(table.window_length, sessions=table.session_ids)
    return write_manifest(out_dir, "featurize", config, [path], inputs, layout=layout)


def load_features(directory: PathLike) -> tuple[FeatureTable, dict]:
    directory = Path(directory)
    doc = read_manifest(directory)
    layout = doc.get("layout")
    if layout is None:
        raise ManifestMismatch(f"{directory} is not a features directory")
    check_layout(layout)
    table = parse_features_csv((directory / FEATURES_CSV).read_text(), int(layout["window_length"]))
    return table, doc
