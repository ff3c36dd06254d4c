"""Command-line sweep runner.

Options may come from a ``key = value`` config file (``--config``); keys
are the long flag names without the leading dashes, lists are comma
separated, and flags given on the command line win over file values.
"""
from __future__ import annotations

import argparse
import sys

from .datagen import GeneratorSpec
from .experiment import ExperimentSpec, emit_csv, emit_summary_csv, run_experiment, summarize, write_rows
from .model import CovarianceSpec, StepPolicy

DEFAULTS = {
    "p": "200",
    "n": "150",
    "k": "5",
    "design": "independent",
    "rho": "0.4",
    "outlier-fractions": "0,0.1,0.2,0.3",
    "alphas": "0,0.2,0.4,0.6,0.8,1",
    "seeds": "0,1,2,3,4",
    "refine": "true",
    "radius": "oracle",
    "trim-count": "oracle",
    "tol": "1e-8",
    "max-iters": "5000",
    "power-iters": "20000",
    "workers": "1",
    "timing": "false",
}
# sigma-eps defaults to 2 (independent) or 1 (correlated)
SIGMA_EPS_DEFAULT = {"independent": "2", "correlated": "1"}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_config(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(text: str, kind) -> list:
    return [kind(v) for v in text.split(",") if v.strip()]


def _oracle_or(text: str, kind):
    return None if text.strip().lower() == "oracle" else kind(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="renet",
        description="Run robust elastic net sweeps on synthetic data with decoy outliers.",
    )
    add = ap.add_argument
    add("--config", help="key = value file with defaults for any option below")
    add("--p", help="number of covariates (default 200)")
    add("--n", help="number of authentic rows (default 150)")
    add("--k", help="support size (default 5)")
    add("--sigma-eps", help="noise level (default 2 independent, 1 correlated)")
    add("--design", choices=["independent", "correlated"])
    add("--rho", help="off-diagonal correlation of the correlated design (default 0.4)")
    add("--outlier-fractions", help="comma-separated outlier fractions n_o/n")
    add("--alphas", help="comma-separated mixing values in [0, 1]")
    add("--seeds", help="comma-separated root seeds")
    add("--refine", nargs="?", const="true", help="refit on the recovered support (default true)")
    add("--radius", help="'oracle' (||beta*||_1) or a positive number")
    add("--trim-count", help="'oracle' (true outlier count) or an integer")
    add("--tol", help="relative change stopping threshold")
    add("--max-iters", help="iteration cap")
    add("--power-iters", help="power iteration cap for the step size")
    add("--workers", help="parallel worker processes")
    add("--timing", nargs="?", const="true", help="record runtime_ms (breaks byte reproducibility)")
    add("--out", help="results CSV path (stdout if omitted)")
    add("--summary", help="optional per-cell aggregate CSV path")
    return ap


def resolve_options(args: argparse.Namespace) -> dict[str, str]:
    options = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            options.update(parse_config(fh.read()))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "out", "summary"):
            options[key.replace("_", "-")] = value
    options.setdefault("sigma-eps", SIGMA_EPS_DEFAULT[options["design"]])
    return options


def spec_from_options(options: dict[str, str]) -> tuple[ExperimentSpec, int]:
    design = options["design"]
    if design == "independent":
        covariance = CovarianceSpec()
    elif design == "correlated":
        covariance = CovarianceSpec("equicorrelated", float(options["rho"]))
    else:
        raise ValueError(f"unknown design {design!r}")
    generator = GeneratorSpec(
        p=int(options["p"]), n=int(options["n"]), k=int(options["k"]),
        sigma_eps=float(options["sigma-eps"]), covariance=covariance,
    )
    spec = ExperimentSpec(
        generator=generator,
        outlier_fractions=_list(options["outlier-fractions"], float),
        alphas=_list(options["alphas"], float),
        seeds=_list(options["seeds"], int),
        refine=_bool(options["refine"]),
        trim_count=_oracle_or(options["trim-count"], int),
        radius=_oracle_or(options["radius"], float),
        tol=float(options["tol"]),
        max_iters=int(options["max-iters"]),
        step=StepPolicy(power_iters=int(options["power-iters"])),
        timing=_bool(options["timing"]),
    )
    return spec, int(options["workers"])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec, workers = spec_from_options(resolve_options(args))
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    rows = run_experiment(spec, workers=workers)
    if args.out:
        emit_csv(rows, args.out)
    else:
        write_rows(rows, sys.stdout)
    if args.summary:
        emit_summary_csv(summarize(rows), args.summary)
    failed = sum(r.status != "ok" for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} cells reported errors", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
