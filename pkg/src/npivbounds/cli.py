"""Command-line front end: estimate envelopes from a CSV, simulate synthetic
data, and run the discrete-population oracles.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 empty
(infeasible) identified set, 5 numerical failure.  Output documents carry a
``schema`` version field and are emitted with sorted keys so that identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import bounds, firststage, oracle, shapes, splines, synth
from .errors import (
    DataFormatError,
    EmptyIdentifiedSetError,
    InvalidConfigurationError,
    InvalidInputError,
    NpivBoundsError,
    SingularDesignError,
    SolverFailureError,
)

__all__ = ["main", "entrypoint", "build_parser", "read_sample_csv"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_NUMERICAL = 5

# Stock defaults: cubic splines, 10-dim regressor basis, 6-dim instrument
# basis, 100-point grids, 0.5% instrument trimming, and the 3x3 sweep of
# moment bounds versus curvature bounds.
DEFAULT_B_SWEEP = (0.005, 0.02, 0.05)
DEFAULT_C_SWEEP = (1.0, 2.0, 5.0)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npivbounds",
        description="Envelope estimation for NPIV models with mildly invalid instruments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate envelope bands from a CSV of (y, x, z)")
    est.add_argument("--input", required=True, help="CSV with header columns y, x, z")
    est.add_argument("--b", type=float, default=None, help="moment deviation bound")
    est.add_argument("--b-sweep", type=_float_list, default=None, help="comma-separated b values")
    est.add_argument("--c", type=float, default=None, help="second-derivative bound")
    est.add_argument("--c-sweep", type=_float_list, default=None, help="comma-separated c values")
    est.add_argument("--shape-config", default=None, help="JSON shape spec replacing the c sweep")
    est.add_argument("--k-dim", type=int, default=10, help="regressor basis dimension")
    est.add_argument("--l-dim", type=int, default=6, help="instrument basis dimension")
    est.add_argument("--x-grid", type=int, default=100, help="regressor grid size")
    est.add_argument("--z-grid", type=int, default=100, help="instrument grid size")
    est.add_argument("--trim", type=float, default=0.005, help="instrument quantile trim")
    est.add_argument("--seed", type=int, default=0, help="echoed into the output document")
    est.add_argument("--output", default="-", help="output JSON path ('-' for stdout)")

    sim = sub.add_parser("simulate", help="draw a synthetic sample to CSV")
    sim.add_argument("--dgp", required=True, choices=sorted(synth.H0_CATALOGUE))
    sim.add_argument("--rho", type=float, default=0.6, help="instrument strength in (0, 1]")
    sim.add_argument("--u0-kind", default="zero", choices=synth.U0_KINDS)
    sim.add_argument("--u0-amplitude", type=float, default=0.0)
    sim.add_argument("--u0-frequency", type=float, default=3.0)
    sim.add_argument("--noise-sd", type=float, default=0.1)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output", default="-", help="output CSV path ('-' for stdout)")

    orc = sub.add_parser("oracle", help="exact envelopes for a discrete model")
    orc.add_argument("--model", required=True, help="JSON model {x_support, z_support, joint_pmf, g0}")
    orc.add_argument("--b", type=float, required=True)
    orc.add_argument("--h-lo", type=float, default=0.0)
    orc.add_argument("--h-hi", type=float, default=1.0)
    orc.add_argument("--c", type=float, default=None, help="discrete second-difference bound")
    orc.add_argument("--output", default="-")

    bia = sub.add_parser("bias", help="worst-case bias of a linear functional")
    bia.add_argument("--model", required=True)
    bia.add_argument("--w", type=_float_list, required=True, help="weights, one per support point")
    bia.add_argument("--b", type=float, required=True)
    bia.add_argument("--output", default="-")

    red = sub.add_parser("reduced-form", help="first-stage regression with +-b bands")
    red.add_argument("--input", required=True)
    red.add_argument("--b", type=float, default=None)
    red.add_argument("--b-sweep", type=_float_list, default=None)
    red.add_argument("--l-dim", type=int, default=6)
    red.add_argument("--z-grid", type=int, default=100)
    red.add_argument("--trim", type=float, default=0.005)
    red.add_argument("--output", default="-")
    return parser


def read_sample_csv(path: str, min_rows: int = 1) -> firststage.Sample:
    """Read a sample from a UTF-8 CSV with named columns y, x, z.

    Raises DataFormatError naming the offending data row (1-based, header
    excluded) on non-numeric cells.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path} is empty; expected a header row with y, x, z")
        names = [h.strip() for h in header]
        missing = [c for c in ("y", "x", "z") if c not in names]
        if missing:
            raise DataFormatError(
                f"{path} is missing column(s) {', '.join(missing)}; found {names}"
            )
        cols = {c: names.index(c) for c in ("y", "x", "z")}
        data = {"y": [], "x": [], "z": []}
        for row_idx, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            for name, pos in cols.items():
                if pos >= len(row):
                    raise DataFormatError(f"{path}: row {row_idx} has too few fields")
                cell = row[pos].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric value {cell!r} in column {name}, row {row_idx}"
                    )
                if not math.isfinite(value):
                    raise DataFormatError(
                        f"{path}: non-finite value in column {name}, row {row_idx}"
                    )
                data[name].append(value)
    n = len(data["y"])
    if n == 0:
        raise DataFormatError(f"{path} contains a header but no data rows")
    if n < min_rows:
        raise DataFormatError(f"{path} has {n} rows; at least {min_rows} required")
    return firststage.Sample(
        y=np.array(data["y"]), x=np.array(data["x"]), z=np.array(data["z"])
    )


def _emit_json(doc: dict, path: str) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_csv_sample(sample: firststage.Sample, path: str) -> None:
    lines = ["y,x,z"]
    lines += [
        f"{repr(float(y))},{repr(float(x))},{repr(float(z))}"
        for y, x, z in zip(sample.y, sample.x, sample.z)
    ]
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _band_to_dict(band: bounds.EnvelopeBand) -> dict:
    return {
        "feasible": band.feasible,
        "x_grid": band.x_grid.tolist(),
        "lower": band.lower.tolist(),
        "upper": band.upper.tolist(),
        "central": band.central.tolist(),
        "diagnostics": {
            "d1_grid_gap": band.diagnostics.d1_grid_gap,
            "d2_grid_gap": band.diagnostics.d2_grid_gap,
            "gram_condition": band.diagnostics.gram_condition,
            "n_constraints": band.diagnostics.n_constraints,
        },
    }


def _resolve_sweeps(args) -> tuple[list[float], list[float] | None, shapes.ShapeSpec | None]:
    if args.b is not None and args.b_sweep is not None:
        raise InvalidConfigurationError("give either --b or --b-sweep, not both")
    if args.c is not None and args.c_sweep is not None:
        raise InvalidConfigurationError("give either --c or --c-sweep, not both")
    b_values = args.b_sweep if args.b_sweep is not None else (
        [args.b] if args.b is not None else list(DEFAULT_B_SWEEP)
    )
    custom = getattr(args, "shape_config", None)
    if custom is not None:
        if args.c is not None or args.c_sweep is not None:
            raise InvalidConfigurationError(
                "--shape-config replaces the curvature bound; do not combine with --c/--c-sweep"
            )
        try:
            spec = shapes.load_shape_spec(custom)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"cannot read shape config {custom}: {exc}") from exc
        return b_values, None, spec
    c_values = args.c_sweep if args.c_sweep is not None else (
        [args.c] if args.c is not None else list(DEFAULT_C_SWEEP)
    )
    return b_values, c_values, None


def _cmd_estimate(args) -> int:
    b_values, c_values, custom_spec = _resolve_sweeps(args)
    sample = read_sample_csv(args.input, min_rows=args.l_dim)

    if custom_spec is not None:
        specs = [custom_spec]
        c_echo: list[float | None] = [None]
    else:
        specs = [shapes.default_engel_spec(c) for c in c_values]
        c_echo = list(c_values)

    config = bounds.BoundsConfig(
        b=b_values[0],
        shape=specs[0],
        k_dim=args.k_dim,
        l_dim=args.l_dim,
        x_grid_size=args.x_grid,
        z_grid_size=args.z_grid,
        z_quantile_trim=args.trim,
    )
    sweep = bounds.estimate_envelope_sweep(sample, config, b_values, specs)

    cells = []
    for i_b, b in enumerate(b_values):
        for i_c, c in enumerate(c_echo):
            cell = {"b": b, "c": c}
            cell.update(_band_to_dict(sweep.bands[i_b][i_c]))
            cells.append(cell)

    g_hat, _ = firststage.predict_grid(sweep.fit, sweep.z_grid)
    reduced = {
        "z_grid": sweep.z_grid.tolist(),
        "g_hat": g_hat.tolist(),
        "bands": [
            {"b": b, "lower": (g_hat - b).tolist(), "upper": (g_hat + b).tolist()}
            for b in b_values
        ],
    }

    doc = {
        "schema": SCHEMA_VERSION,
        "command": "estimate",
        "config": {
            "input": args.input,
            "b_values": list(b_values),
            "c_values": c_echo,
            "shape_config": shapes.shape_spec_to_config(custom_spec) if custom_spec else None,
            "k_dim": args.k_dim,
            "l_dim": args.l_dim,
            "x_grid": args.x_grid,
            "z_grid": args.z_grid,
            "trim": args.trim,
            "seed": args.seed,
            "n": sample.n,
        },
        "cells": cells,
        "reduced_form": reduced,
    }
    _emit_json(doc, args.output)
    if all(not cell["feasible"] for cell in cells):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_simulate(args) -> int:
    dgp = synth.make_dgp(
        args.dgp,
        rho=args.rho,
        u0_kind=args.u0_kind,
        u0_amplitude=args.u0_amplitude,
        u0_frequency=args.u0_frequency,
        noise_sd=args.noise_sd,
    )
    sample = synth.generate(dgp, args.n, args.seed)
    _emit_csv_sample(sample, args.output)
    return EXIT_OK


def _load_model(path: str) -> oracle.DiscreteModel:
    try:
        return oracle.load_discrete_model(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from exc


def _cmd_oracle(args) -> int:
    model = _load_model(args.model)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": "oracle",
        "b": args.b,
        "h_lo": args.h_lo,
        "h_hi": args.h_hi,
        "second_diff_bound": args.c,
        "x_support": model.x_support.tolist(),
    }
    try:
        lower, upper = oracle.discrete_envelopes(
            model, args.b, (args.h_lo, args.h_hi), args.c
        )
    except EmptyIdentifiedSetError:
        doc.update({"feasible": False, "lower": [], "upper": []})
        _emit_json(doc, args.output)
        return EXIT_INFEASIBLE
    doc.update({"feasible": True, "lower": lower.tolist(), "upper": upper.tolist()})
    _emit_json(doc, args.output)
    return EXIT_OK


def _cmd_bias(args) -> int:
    model = _load_model(args.model)
    value = oracle.functional_bias(model, np.array(args.w), args.b)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": "bias",
        "b": args.b,
        "w": list(args.w),
        "representer_exists": math.isfinite(value),
        "bias": value if math.isfinite(value) else None,
    }
    _emit_json(doc, args.output)
    return EXIT_OK


def _cmd_reduced_form(args) -> int:
    if args.b is not None and args.b_sweep is not None:
        raise InvalidConfigurationError("give either --b or --b-sweep, not both")
    b_values = args.b_sweep if args.b_sweep is not None else (
        [args.b] if args.b is not None else list(DEFAULT_B_SWEEP)
    )
    sample = read_sample_csv(args.input, min_rows=args.l_dim)
    z_basis = splines.build_basis(float(sample.z.min()), float(sample.z.max()), 4, args.l_dim)
    x_basis = splines.build_basis(float(sample.x.min()), float(sample.x.max()), 4, 4)
    fit = firststage.fit_first_stage(sample, z_basis=z_basis, x_basis=x_basis)
    z_grid = np.linspace(
        float(np.quantile(sample.z, args.trim)),
        float(np.quantile(sample.z, 1.0 - args.trim)),
        args.z_grid,
    )
    g_hat, _ = firststage.predict_grid(fit, z_grid)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": "reduced-form",
        "config": {
            "input": args.input,
            "l_dim": args.l_dim,
            "z_grid": args.z_grid,
            "trim": args.trim,
            "b_values": list(b_values),
            "n": sample.n,
        },
        "z_grid": z_grid.tolist(),
        "g_hat": g_hat.tolist(),
        "bands": [
            {"b": b, "lower": (g_hat - b).tolist(), "upper": (g_hat + b).tolist()}
            for b in b_values
        ],
    }
    _emit_json(doc, args.output)
    return EXIT_OK


_HANDLERS = {
    "estimate": _cmd_estimate,
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "bias": _cmd_bias,
    "reduced-form": _cmd_reduced_form,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidConfigurationError,) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyIdentifiedSetError as exc:
        print(f"empty identified set: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverFailureError, SingularDesignError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidInputError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NpivBoundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
