"""Sweeps over outlier fraction, alpha and seed, with deterministic CSV output."""
from __future__ import annotations

import csv
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .datagen import GeneratorSpec, generate_dataset
from .evaluation import l2_recovery_error, refine, support_recovery_count
from .model import SolverConfig, StepPolicy
from .solver import pgd_solve
from .trimming import build_surrogates

CSV_HEADER = (
    "seed,alpha,outlier_fraction,n,p,k,recovered_support,l2_error,"
    "refined_l2_error,iterations,runtime_ms,converged,status"
).split(",")


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep grid plus the templates each cell is instantiated from.

    ``trim_count`` and ``radius`` of ``None`` mean "oracle": the true
    outlier count and ``||beta*||_1``. ``timing`` adds wall-clock runtimes,
    which makes the CSV non-reproducible byte for byte.
    """

    generator: GeneratorSpec
    outlier_fractions: Sequence[float]
    alphas: Sequence[float]
    seeds: Sequence[int]
    refine: bool = True
    trim_count: Optional[int] = None
    radius: Optional[float] = None
    tol: float = 1e-8
    max_iters: int = 5000
    step: StepPolicy = field(default_factory=StepPolicy)
    timing: bool = False

    def __post_init__(self):
        for name, kind in (("outlier_fractions", float), ("alphas", float), ("seeds", int)):
            values = tuple(kind(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, values)
        if any(not 0.0 <= f < 1.0 for f in self.outlier_fractions):
            raise ValueError("outlier fractions must lie in [0, 1)")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 1]")
        if self.trim_count is not None and self.trim_count < 0:
            raise ValueError("trim_count must be non-negative")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class ResultRow:
    seed: int
    alpha: float
    outlier_fraction: float
    n: int
    p: int
    k: int
    recovered_support: Optional[int] = None
    l2_error: Optional[float] = None
    refined_l2_error: Optional[float] = None
    iterations: Optional[int] = None
    runtime_ms: Optional[float] = None
    converged: Optional[bool] = None
    status: str = "ok"


def _run_dataset(spec: ExperimentSpec, fraction: float, seed: int) -> list[ResultRow]:
    """All alpha cells sharing one generated dataset."""
    gen = replace(spec.generator, outlier_fraction=fraction, seed=seed)
    base = dict(seed=seed, outlier_fraction=fraction, n=gen.n, p=gen.p, k=gen.k)
    try:
        data = generate_dataset(gen)
    except Exception as exc:  # recorded per cell; the sweep goes on
        return [ResultRow(alpha=a, status=f"generation_error:{type(exc).__name__}", **base)
                for a in spec.alphas]
    truth = data.truth
    trim = data.n_outliers if spec.trim_count is None else spec.trim_count
    radius = float(np.abs(truth.beta_star).sum()) if spec.radius is None else spec.radius
    rows = []
    for alpha in spec.alphas:
        start = time.perf_counter()
        try:
            surrogates = build_surrogates(data, alpha, trim)
            config = SolverConfig(alpha=alpha, radius=radius, step=spec.step, tol=spec.tol,
                                  max_iters=spec.max_iters, history=0)
            sol = pgd_solve(surrogates, config)
        except Exception as exc:
            rows.append(ResultRow(alpha=alpha, status=f"solve_error:{type(exc).__name__}", **base))
            continue
        elapsed = (time.perf_counter() - start) * 1e3
        status = "ok"
        refined = None
        if spec.refine:
            try:
                refined = l2_recovery_error(refine(surrogates, sol.beta_hat, truth.k), truth)
            except np.linalg.LinAlgError:
                status = "refine_error"
        rows.append(ResultRow(
            alpha=alpha,
            recovered_support=support_recovery_count(sol.beta_hat, truth),
            l2_error=l2_recovery_error(sol.beta_hat, truth),
            refined_l2_error=refined,
            iterations=sol.iterations,
            runtime_ms=elapsed if spec.timing else None,
            converged=sol.converged,
            status=status,
            **base,
        ))
    return rows


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[ResultRow]:
    """Evaluate every (fraction, alpha, seed) cell, ordered in that nesting."""
    tasks = [(f, s) for f in spec.outlier_fractions for s in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_dataset, [spec] * len(tasks), *zip(*tasks)))
    else:
        results = [_run_dataset(spec, f, s) for f, s in tasks]
    by_cell = {}
    for (f, s), rows in zip(tasks, results):
        for a, row in zip(spec.alphas, rows):
            by_cell[(f, a, s)] = row
    return [by_cell[(f, a, s)] for f in spec.outlier_fractions for a in spec.alphas for s in spec.seeds]


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _parse(kind, text: str):
    if text == "":
        return None
    if kind is bool:
        return text == "true"
    return kind(text)


_ROW_TYPES = {
    "seed": int, "alpha": float, "outlier_fraction": float, "n": int, "p": int, "k": int,
    "recovered_support": int, "l2_error": float, "refined_l2_error": float, "iterations": int,
    "runtime_ms": float, "converged": bool, "status": str,
}


def write_rows(rows: Sequence[ResultRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_format(getattr(row, name)) for name in CSV_HEADER])


def emit_csv(rows: Sequence[ResultRow], path) -> None:
    """Write rows under the fixed header; floats use 17 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            write_rows(rows, fh)
    except OSError as exc:
        raise OSError(f"cannot write results to {os.fspath(path)!r}: {exc}") from exc


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{os.fspath(path)!r} does not carry the result header")
        rows = []
        for record in reader:
            values = {name: _parse(_ROW_TYPES[name], text) for name, text in zip(header, record)}
            if values["status"] is None:
                values["status"] = ""
            rows.append(ResultRow(**values))
    return rows


@dataclass(frozen=True)
class SummaryRow:
    outlier_fraction: float
    alpha: float
    cells: int
    ok_cells: int
    median_recovered_support: Optional[float]
    mean_recovered_support: Optional[float]
    median_l2_error: Optional[float]
    mean_l2_error: Optional[float]
    median_refined_l2_error: Optional[float]
    mean_refined_l2_error: Optional[float]


def _stats(values):
    values = [v for v in values if v is not None]
    if not values:
        return None, None
    return float(statistics.median(values)), float(statistics.fmean(values))


def summarize(rows: Sequence[ResultRow]) -> list[SummaryRow]:
    """Median and mean metrics across seeds for each (fraction, alpha) cell."""
    if not rows:
        raise ValueError("nothing to summarize")
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.outlier_fraction, row.alpha), []).append(row)
    out = []
    for (fraction, alpha), members in groups.items():
        support = _stats([r.recovered_support for r in members])
        l2 = _stats([r.l2_error for r in members])
        refined = _stats([r.refined_l2_error for r in members])
        out.append(SummaryRow(
            outlier_fraction=fraction,
            alpha=alpha,
            cells=len(members),
            ok_cells=sum(r.status == "ok" for r in members),
            median_recovered_support=support[0],
            mean_recovered_support=support[1],
            median_l2_error=l2[0],
            mean_l2_error=l2[1],
            median_refined_l2_error=refined[0],
            mean_refined_l2_error=refined[1],
        ))
    return out


def emit_summary_csv(summary: Sequence[SummaryRow], path) -> None:
    names = [f.name for f in fields(SummaryRow)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in summary:
            writer.writerow([_format(v) for v in asdict(row).values()])
