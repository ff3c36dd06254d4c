"""JSON and CSV persistence for the model types.

JSON floats are written with ``repr`` precision and CSV floats with 17
significant digits, so finite values survive a round trip exactly.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import typing

import numpy as np

from . import model
from .datagen import GeneratorSpec
from .evaluation import REParameters
from .experiment import ExperimentSpec, ResultRow

_TYPES = {cls.__name__: cls for cls in (
    model.CovarianceSpec, model.GroundTruth, model.Dataset, model.TrimmedSurrogates,
    model.StepPolicy, model.SolverConfig, model.Solution, REParameters,
    GeneratorSpec, ExperimentSpec, ResultRow,
)}


def to_dict(obj):
    """Plain-data form of a model dataclass, tagged with its type name."""
    if dataclasses.is_dataclass(obj):
        out = {"__type__": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = to_dict(getattr(obj, f.name))
        return out
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.dtype.str, "shape": list(obj.shape), "data": obj.ravel().tolist()}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def from_dict(data):
    if isinstance(data, dict):
        if "__array__" in data:
            return np.array(data["data"], dtype=np.dtype(data["__array__"])).reshape(data["shape"])
        if "__type__" in data:
            cls = _TYPES[data["__type__"]]
            kwargs = {k: from_dict(v) for k, v in data.items() if k != "__type__"}
            return cls(**kwargs)
    return data


def dumps(obj) -> str:
    return json.dumps(to_dict(obj), allow_nan=True)


def loads(text: str):
    return from_dict(json.loads(text))


def save(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def write_dataset_csv(data: model.Dataset, path) -> None:
    """Covariates ``x0..x{p-1}``, response ``y`` and an ``outlier`` flag column.

    The flag is empty when the dataset has no ground truth.
    """
    flags = [""] * data.n_rows
    if data.truth is not None:
        flags = ["0"] * data.n_rows
        for r in data.truth.outlier_rows:
            flags[r] = "1"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j}" for j in range(data.p)] + ["y", "outlier"])
        for row, y, flag in zip(data.covariates, data.responses, flags):
            writer.writerow([format(v, ".17g") for v in row] + [format(y, ".17g"), flag])


def read_dataset_csv(path, n_outliers: typing.Optional[int] = None) -> model.Dataset:
    """Load covariates and responses; ground truth is not reconstructed.

    ``n_outliers`` defaults to the number of flagged rows (zero if unflagged).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        records = list(reader)
    p = header.index("y")
    values = np.array([[float(v) for v in r[: p + 1]] for r in records]).reshape(len(records), p + 1)
    if n_outliers is None:
        n_outliers = sum(r[p + 1] == "1" for r in records) if len(header) > p + 1 else 0
    return model.Dataset(values[:, :p], values[:, p], n_authentic=len(records) - n_outliers,
                         n_outliers=n_outliers)
