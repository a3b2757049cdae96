"""CSV ingestion and serialization.

Dataset files are UTF-8 CSV with a header row.  The first column must be
``time``, the second ``event`` (0 or 1), and every remaining column is a
covariate.  Occupational-cohort files with raw columns AFE, YFE and EXP can
be loaded through ``read_transformed_cohort_csv``, which applies the
standard transforms log(AFE - 10), (YFE - 1915) / 10, -(YFE - 1915)^2 / 100
and log(EXP + 1); the third transform is negative-valued, so such data can
only be analysed on the flat-prior path and is loaded with the positivity
check disabled.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .data_model import SurvivalDataset
from .errors import DatasetFormatError

__all__ = [
    "read_dataset_csv",
    "write_dataset_csv",
    "read_transformed_cohort_csv",
    "COHORT_COLUMNS",
]

COHORT_COLUMNS = ("AFE", "YFE", "EXP")
COHORT_COVARIATE_NAMES = (
    "log_afe_minus_10",
    "yfe_decade",
    "neg_yfe_decade_sq",
    "log_exp_plus_1",
)


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetFormatError(f"row {row}: column {col!r} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise DatasetFormatError(f"row {row}: column {col!r} is not finite")
    return value


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    return [h.strip() for h in header], rows


def read_dataset_csv(path, *, allow_signed: bool = False):
    """Load a dataset file; returns (SurvivalDataset, covariate names)."""
    header, rows = _read_rows(path)
    if len(header) < 3 or header[0].lower() != "time" or header[1].lower() != "event":
        raise DatasetFormatError(
            f"{path}: header must be time,event,<covariate columns>"
        )
    names = header[2:]
    times, events, covs = [], [], []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DatasetFormatError(f"row {i}: expected {len(header)} fields")
        times.append(_parse_float(row[0], i, "time"))
        flag = row[1].strip()
        if flag not in ("0", "1"):
            raise DatasetFormatError(f"row {i}: event must be 0 or 1, got {flag!r}")
        events.append(flag == "1")
        covs.append([_parse_float(v, i, names[j]) for j, v in enumerate(row[2:])])
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    ds = SurvivalDataset(times, events, covs, allow_signed=allow_signed)
    return ds, tuple(names)


def write_dataset_csv(ds: SurvivalDataset, path, names=None) -> None:
    """Write a dataset in the documented layout, full float precision."""
    if names is None:
        names = tuple(f"z{i + 1}" for i in range(ds.k))
    if len(names) != ds.k:
        raise DatasetFormatError("one name per covariate column is required")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("time", "event") + tuple(names))
        for t, e, z in zip(ds.times, ds.events, ds.covariates):
            writer.writerow([repr(float(t)), "1" if e else "0"] + [repr(float(v)) for v in z])


def read_transformed_cohort_csv(path):
    """Load a raw cohort file (time, event, AFE, YFE, EXP) and transform it.

    Returns (SurvivalDataset, covariate names) with the four standard
    transformed covariates; the dataset is built with signed covariates
    allowed, since the third transform is always <= 0.
    """
    header, rows = _read_rows(path)
    lowered = [h.lower() for h in header]
    required = ["time", "event"] + [c.lower() for c in COHORT_COLUMNS]
    try:
        positions = [lowered.index(c) for c in required]
    except ValueError:
        raise DatasetFormatError(
            f"{path}: cohort files need columns time, event, AFE, YFE, EXP"
        ) from None
    times, events, covs = [], [], []
    for i, row in enumerate(rows, start=2):
        if len(row) < len(header):
            raise DatasetFormatError(f"row {i}: expected {len(header)} fields")
        times.append(_parse_float(row[positions[0]], i, "time"))
        flag = row[positions[1]].strip()
        if flag not in ("0", "1"):
            raise DatasetFormatError(f"row {i}: event must be 0 or 1, got {flag!r}")
        events.append(flag == "1")
        afe = _parse_float(row[positions[2]], i, "AFE")
        yfe = _parse_float(row[positions[3]], i, "YFE")
        exposure = _parse_float(row[positions[4]], i, "EXP")
        if afe <= 10.0:
            raise DatasetFormatError(f"row {i}: AFE must exceed 10")
        if exposure < 0.0:
            raise DatasetFormatError(f"row {i}: EXP must be >= 0")
        decade = (yfe - 1915.0) / 10.0
        covs.append(
            [
                math.log(afe - 10.0),
                decade,
                -(decade * decade),
                math.log(exposure + 1.0),
            ]
        )
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    ds = SurvivalDataset(times, events, covs, allow_signed=True)
    return ds, COHORT_COVARIATE_NAMES
