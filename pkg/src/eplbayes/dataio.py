"""CSV/JSON input and output for datasets, summaries and recovery studies."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._fileutil import atomic_write
from .diagnostics import PosteriorSummary
from .experiments import RecoveryReport
from .model import Dataset
from .perm import ranking_to_ordering

FORMATS = ("ordering", "ranking")


class DataError(ValueError):
    """Malformed input file."""


@dataclass
class RunManifest:
    """Everything needed to rerun a job; echoed into every JSON output."""

    command: str
    config: dict
    chains: int = 1
    data: str | None = None
    simulation: dict | None = None
    output: str | None = None
    data_format: str = "ordering"
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.chains < 1:
            raise ValueError("chains must be at least 1")
        if self.data_format not in FORMATS:
            raise ValueError(f"data format must be one of {FORMATS}")

    def to_dict(self) -> dict:
        return asdict(self)


def _parse_int(token: str) -> int | None:
    try:
        return int(token.strip())
    except ValueError:
        return None


def load_dataset(path, format: str = "ordering") -> Dataset:
    """Read an N x K CSV of orderings (or rankings, converted row by row).

    A first line that is not all integers is treated as a header. Errors
    name the offending data row (1-based, header excluded).
    """
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            raw = [row for row in csv.reader(fh) if row and any(tok.strip() for tok in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if raw and any(_parse_int(tok) is None for tok in raw[0]):
        raw = raw[1:]
    if not raw:
        raise DataError(f"{path}: no data rows")
    k = len(raw[0])
    rows = []
    for s, row in enumerate(raw, start=1):
        if len(row) != k:
            raise DataError(f"{path}: row {s} has {len(row)} columns, expected {k}")
        values = [_parse_int(tok) for tok in row]
        if any(v is None for v in values):
            bad = row[values.index(None)]
            raise DataError(f"{path}: row {s} has non-integer value {bad!r}")
        seen = set()
        for v in values:
            if not 1 <= v <= k or v in seen:
                raise DataError(f"{path}: row {s} is not a permutation of 1..{k} (offending value {v})")
            seen.add(v)
        rows.append(ranking_to_ordering(values) if format == "ranking" else tuple(values))
    return Dataset(np.asarray(rows, dtype=np.int64))


def save_dataset(dataset: Dataset, path, format: str = "ordering", header: bool = False) -> Path:
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    rows = dataset.orderings
    if format == "ranking":
        rows = np.argsort(rows, axis=1) + 1

    def write(fh):
        out = csv.writer(fh, lineterminator="\n")
        if header:
            label = "rank" if format == "ordering" else "item"
            out.writerow([f"{label}_{j}" for j in range(1, dataset.K + 1)])
        out.writerows(rows.tolist())

    return atomic_write(path, write)


def _dump_json(obj, path) -> Path:
    # json writes floats with repr, i.e. 17 significant digits at most and lossless
    return atomic_write(path, lambda fh: (json.dump(obj, fh, indent=2, allow_nan=True), fh.write("\n")))


def write_summary(summary: PosteriorSummary, path, manifest: RunManifest | dict | None = None,
                  top: int | None = None) -> Path:
    """Write the posterior summary as JSON.

    ``top`` truncates the reference-order table (e.g. ``top=5``) in the
    written file only; the probabilities of the kept rows are unchanged.
    """
    d = summary.to_dict()
    if top is not None:
        d["rho_table"] = d["rho_table"][:top]
    if manifest is not None:
        m = manifest.to_dict() if isinstance(manifest, RunManifest) else dict(manifest)
        d["config"] = m.get("config")
        d["seed"] = (m.get("config") or {}).get("seed")
        d["manifest"] = m
    return _dump_json(d, path)


def read_summary(path) -> PosteriorSummary:
    with open(path) as fh:
        return PosteriorSummary.from_dict(json.load(fh))


def format_rho_table(summary: PosteriorSummary, top: int = 5) -> str:
    """Plain-text top-``top`` table of reference orders and their posterior probabilities."""
    rows = [(",".join(map(str, r)), pr) for r, pr in summary.top(top)]
    width = max(len(r) for r, _ in rows) + 2
    lines = [f"{'rho':<{width}}  prob", "-" * (width + 8)]
    lines += [f"({r}){' ' * (width - len(r) - 2)}  {pr:.4f}" for r, pr in rows]
    return "\n".join(lines)


_CELL_FIELDS = ["K", "N", "replications", "percent_recovered", "mean_mode_mass",
                "mean_normalized_kendall"]
_DETAIL_FIELDS = ["K", "N", "replication", "true_rho", "estimated_rho", "mode_mass",
                  "normalized_kendall", "recovered", "accept_tjm", "accept_swap"]


def write_recovery(reports: Sequence[RecoveryReport], directory,
                   manifest: RunManifest | dict | None = None) -> dict[str, Path]:
    """Write ``recovery.json``, ``recovery.csv`` (one row per cell) and ``recovery_detail.csv``."""
    directory = Path(directory)
    m = manifest.to_dict() if isinstance(manifest, RunManifest) else manifest
    paths = {
        "json": directory / "recovery.json",
        "csv": directory / "recovery.csv",
        "detail": directory / "recovery_detail.csv",
    }
    _dump_json({"manifest": m, "cells": [r.to_dict() for r in reports]}, paths["json"])

    def write_cells(fh):
        out = csv.DictWriter(fh, _CELL_FIELDS, lineterminator="\n")
        out.writeheader()
        for r in reports:
            out.writerow({k: v for k, v in r.to_dict(with_records=False).items() if k in _CELL_FIELDS})

    def write_detail(fh):
        out = csv.DictWriter(fh, _DETAIL_FIELDS, lineterminator="\n")
        out.writeheader()
        for r in reports:
            for rec in r.records:
                row = asdict(rec)
                row.update(K=r.K, N=r.N,
                           true_rho=" ".join(map(str, rec.true_rho)),
                           estimated_rho=" ".join(map(str, rec.estimated_rho)),
                           recovered=int(rec.recovered))
                out.writerow(row)

    atomic_write(paths["csv"], write_cells)
    atomic_write(paths["detail"], write_detail)
    return paths


def read_recovery(path) -> list[dict]:
    with open(path) as fh:
        return json.load(fh)["cells"]


def write_json(obj, path) -> Path:
    return _dump_json(obj, path)
