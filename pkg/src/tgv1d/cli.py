"""Batch command-line front end: config in, solution and plot data out.

Four subcommands cover the library's entry points:

* ``solve`` runs the conditional-gradient solver on a JSON experiment
  config and writes ``solution.json``, ``history.csv``, ``duals.csv``,
  ``reconstruction.csv`` and ``report.json`` into the output directory;
* ``tgv-eval`` evaluates the regularizer of a sparse function against the
  certified grid oracle (with the closed form when one exists);
* ``counterexample`` builds the two-kink fixture whose exact regularizer
  value stays strictly below the atom subproblem's weight sum;
* ``dump-duals`` recomputes the dual pair (p, P) of a stored solution.

All CSV output uses '.' decimals and 17 significant digits so values
round-trip through float64 exactly.  ``TGV1D_THREADS`` caps the kernel
thread count and ``TGV1D_BACKEND`` selects the numba/numpy backend (both
read at import by :mod:`tgv1d.kernels`).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft7Validator

from tgv1d.atoms import JUMP, KINK, ExtremalAtom, SparseFunction
from tgv1d.duals import dual_pair
from tgv1d.fourier import FourierFidelity, MeasurementSetup, synthesize
from tgv1d.oracles import L2Fidelity, build_counterexample
from tgv1d.solver import RunResult, SolverConfig, merge_clusters, run, write_history_csv
from tgv1d.tgv import TgvParams, tgv_grid_oracle, tgv_scaled_atom
from tgv1d.weights import solve_weights

__all__ = ["CONFIG_SCHEMA", "main"]

_ATOM_ENTRY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["x", "sign", "weight"],
    "properties": {
        "x": {"type": "number"},
        "sign": {"enum": [-1, 1]},
        "weight": {"type": "number", "minimum": 0},
    },
}

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "tgv1d experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "measurements"],
    "oneOf": [{"required": ["ground_truth"]}, {"required": ["data"]}],
    "allOf": [
        {
            "if": {"required": ["data"]},
            "then": {"not": {"required": ["noise"]}},
        }
    ],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T", "alpha", "beta"],
            "properties": {"T": _POSITIVE, "alpha": _POSITIVE, "beta": _POSITIVE},
        },
        "measurements": {
            "type": "object",
            "additionalProperties": False,
            "oneOf": [{"required": ["frequencies"]}, {"required": ["generator"]}],
            "properties": {
                "frequencies": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 1,
                },
                "generator": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["count", "rule", "spacing"],
                    "properties": {
                        "count": {"type": "integer", "minimum": 1},
                        "rule": {"const": "equispaced"},
                        "spacing": _POSITIVE,
                    },
                },
            },
        },
        "ground_truth": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": _POSITIVE,
                "alpha": _POSITIVE,
                "beta": _POSITIVE,
                "a": {"type": "number"},
                "b": {"type": "number"},
                "jumps": {"type": "array", "items": _ATOM_ENTRY},
                "kinks": {"type": "array", "items": _ATOM_ENTRY},
            },
        },
        "data": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["re", "im"],
                "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "required": ["level", "seed"],
            "properties": {
                "level": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol_psi": _POSITIVE,
                "max_iter": {"type": "integer", "minimum": 1},
                "newton_starts": {"type": "integer", "minimum": 2},
                "newton_tol": _POSITIVE,
                "kkt_tol": _POSITIVE,
                "max_fista_iter": {"type": "integer", "minimum": 1},
                "cluster_tol": {"type": "number", "minimum": 0},
                "cert_tol": _POSITIVE,
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "sample_points": {"type": "integer", "minimum": 2},
            },
        },
    },
}


class ConfigError(ValueError):
    """The experiment config failed validation."""


def load_config(path) -> dict:
    """Read and schema-validate an experiment config; raises ConfigError."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    errors = sorted(
        Draft7Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: list(e.path)
    )
    if errors:
        lines = [f"config {path} violates the schema:"]
        for err in errors:
            where = "/".join(str(p) for p in err.path) or "<root>"
            lines.append(f"  at {where}: {err.message}")
        raise ConfigError("\n".join(lines))
    return cfg


def _frequencies(cfg: dict) -> list:
    meas = cfg["measurements"]
    if "frequencies" in meas:
        return [float(z) for z in meas["frequencies"]]
    gen = meas["generator"]
    return [j * float(gen["spacing"]) for j in range(1, int(gen["count"]) + 1)]


def _ground_truth(cfg: dict) -> SparseFunction:
    prob = cfg["problem"]
    gt = dict(cfg["ground_truth"])
    for key in ("T", "alpha", "beta"):
        if key in gt and float(gt[key]) != float(prob[key]):
            raise ConfigError(
                f"ground_truth.{key} = {gt[key]} contradicts problem.{key} = {prob[key]}"
            )
        gt[key] = float(prob[key])
    try:
        return SparseFunction.from_json_dict(gt)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid ground_truth: {exc}") from exc


def build_setup(cfg: dict) -> MeasurementSetup:
    """Measurement setup (frequencies + data) described by a valid config."""
    prob = cfg["problem"]
    freqs = _frequencies(cfg)
    if "data" in cfg:
        data = tuple(complex(e["re"], e["im"]) for e in cfg["data"])
        if len(data) != len(freqs):
            raise ConfigError(
                f"{len(data)} data entries for {len(freqs)} frequencies"
            )
        try:
            return MeasurementSetup(
                frequencies=tuple(freqs), data=data, T=float(prob["T"])
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    truth = _ground_truth(cfg)
    noise = cfg.get("noise", {"level": 0.0, "seed": 0})
    try:
        return synthesize(
            truth, freqs, noise_level=float(noise["level"]), seed=int(noise["seed"])
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_solver_config(cfg: dict) -> SolverConfig:
    prob = cfg["problem"]
    try:
        return SolverConfig(
            alpha=float(prob["alpha"]),
            beta=float(prob["beta"]),
            T=float(prob["T"]),
            **cfg.get("solver", {}),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_xy_csv(path, header, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for values in zip(*columns):
            writer.writerow([f"{v:.17g}" for v in values])


def _clustered_entry(kind, entries):
    return [
        {"kind": kind, "x": x, "sign": s, "weight": w} for x, s, w in entries
    ]


def write_outputs(result: RunResult, fidelity, config: SolverConfig, out_dir,
                  sample_points: int) -> dict:
    """Write the five output artifacts of a solve; returns the report dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    u = result.u
    with open(out / "solution.json", "w") as fh:
        fh.write(u.to_json(indent=2))
        fh.write("\n")
    write_history_csv(result.history, out / "history.csv")

    xs = np.linspace(0.0, config.T, sample_points)
    dp = result.duals
    _write_xy_csv(out / "duals.csv", ("x", "p", "P"), (xs, dp.p(xs), dp.P(xs)))
    _write_xy_csv(out / "reconstruction.csv", ("x", "u"), (xs, u(xs)))

    clustered = merge_clusters(u, config.cluster_tol)
    objective = result.objective
    clustered_objective = fidelity.value(clustered) + sum(
        w for _, _, w in clustered.jumps + clustered.kinks
    )
    n_measurements = len(fidelity.setup.frequencies)
    bound = 2 * n_measurements - 2
    report = {
        "stationary": result.stationary,
        "iterations": result.iterations,
        "psi": result.history[-1].psi,
        "misfit": fidelity.value(u),
        "sum_lambda": float(np.sum(result.solution.lam)),
        "objective": objective,
        "certificate": {
            "bounds_ok": result.report.bounds_ok,
            "boundary_ok": result.report.boundary_ok,
            "support_ok": result.report.support_ok,
            "stationary": result.report.stationary,
            "tol": result.report.tol,
            "sup_p": {"x": result.report.sup_p[0], "value": result.report.sup_p[1]},
            "sup_P": {"x": result.report.sup_P[0], "value": result.report.sup_P[1]},
            "p_end": result.report.p_end,
            "P_end": result.report.P_end,
        },
        "atoms": {
            "count": len(result.atoms),
            "bound_2M_minus_2": bound,
            "within_bound": len(result.atoms) <= bound,
        },
        "clustered": {
            "cluster_tol": config.cluster_tol,
            "atoms": _clustered_entry("jump", clustered.jumps)
            + _clustered_entry("kink", clustered.kinks),
            "relative_objective_change": abs(clustered_objective - objective)
            / max(objective, np.finfo(float).tiny),
        },
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report


def cmd_solve(args) -> int:
    try:
        cfg = load_config(args.config)
        setup = build_setup(cfg)
        solver_config = build_solver_config(cfg)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    outputs = cfg.get("outputs", {})
    out_dir = args.out or outputs.get("dir", ".")
    sample_points = int(outputs.get("sample_points", 2001))
    fidelity = FourierFidelity(setup)
    result = run(fidelity, solver_config)
    report = write_outputs(result, fidelity, solver_config, out_dir, sample_points)
    status = "stationary" if report["stationary"] else "NOT stationary (flagged)"
    print(
        f"{status}: {report['iterations']} iterations, "
        f"psi = {report['psi']:.3e}, objective = {report['objective']:.12g}, "
        f"{report['atoms']['count']} atoms -> {out_dir}"
    )
    return 0


def _closed_form(u: SparseFunction, params: TgvParams):
    """Exact regularizer value when the structure admits one, else None.

    Affine functions cost exactly 0; a single atom plus an affine part costs
    its weight times the unit-atom value (the regularizer is one-homogeneous
    and blind to affine shifts).  Anything richer needs the oracle.
    """
    atoms = u.jumps + u.kinks
    if not atoms:
        return 0.0
    if len(atoms) == 1:
        kind = JUMP if u.jumps else KINK
        x, sign, weight = atoms[0]
        return weight * tgv_scaled_atom(ExtremalAtom(kind, x, sign), params)
    return None


def cmd_tgv_eval(args) -> int:
    try:
        with open(args.function) as fh:
            u = SparseFunction.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot load function: {exc}", file=sys.stderr)
        return 2
    params = TgvParams(alpha=u.alpha, beta=u.beta, T=u.T)
    value, info = tgv_grid_oracle(
        u, params, n=args.grid, tol=args.tol, full_output=True
    )
    closed = _closed_form(u, params)
    out = {
        "closed_form": closed,
        "oracle": value,
        "gap": info["gap"],
        "grid_cells": info["grid_cells"],
        "backend": info["backend"],
    }
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0


def cmd_counterexample(args) -> int:
    fx = build_counterexample(lam1=args.lam1, lam2=args.lam2)
    fidelity = L2Fidelity(fx.u_data)
    params = TgvParams(alpha=fx.alpha, beta=fx.beta, T=fx.T)
    atoms = (
        ExtremalAtom(KINK, fx.x1, 1),
        ExtremalAtom(KINK, fx.x2, -1),
    )
    sol = solve_weights(atoms, fidelity, params)
    pa_objective = sol.objective
    tgv_value = tgv_grid_oracle(fx.u_bar, params, tol=1e-8)
    tgv_objective = fidelity.value(fx.u_bar) + tgv_value
    out = {
        "lam": [fx.lam1, fx.lam2],
        "solved_weights": [float(v) for v in sol.lam],
        "orthogonality_residuals": [float(r) for r in fx.ortho_residuals],
        "atom_objective": pa_objective,
        "tgv_of_ubar": tgv_value,
        "tgv_objective": tgv_objective,
        "gap": pa_objective - tgv_objective,
    }
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0


def cmd_dump_duals(args) -> int:
    try:
        cfg = load_config(args.config)
        setup = build_setup(cfg)
        with open(args.solution) as fh:
            u = SparseFunction.from_json(fh.read())
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(exc, file=sys.stderr)
        return 2
    solver_config = build_solver_config(cfg)
    fidelity = FourierFidelity(setup)
    dp = dual_pair(
        fidelity.gradient(u),
        solver_config.T,
        starts=solver_config.newton_starts,
        newton_tol=solver_config.newton_tol,
    )
    xs = np.linspace(0.0, solver_config.T, args.points)
    writer = csv.writer(sys.stdout)
    writer.writerow(("x", "p", "P"))
    for x, p, P in zip(xs, dp.p(xs), dp.P(xs)):
        writer.writerow([f"{x:.17g}", f"{p:.17g}", f"{P:.17g}"])
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tgv1d",
        description="Grid-free solver for 1D TGV-regularized inverse problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the solver on an experiment config")
    p_solve.add_argument("--config", required=True, help="experiment config JSON")
    p_solve.add_argument("--out", help="output directory (overrides config)")
    p_solve.set_defaults(func=cmd_solve)

    p_eval = sub.add_parser("tgv-eval", help="evaluate the regularizer of a function")
    p_eval.add_argument(
        "--function", required=True, help="SparseFunction JSON file"
    )
    p_eval.add_argument("--grid", type=int, default=20000, help="oracle grid cells")
    p_eval.add_argument("--tol", type=float, default=1e-6, help="certified gap")
    p_eval.set_defaults(func=cmd_tgv_eval)

    p_cx = sub.add_parser(
        "counterexample",
        help="build the two-kink fixture separating the atom objective from TGV",
    )
    p_cx.add_argument("--lam1", type=float, default=2.0)
    p_cx.add_argument("--lam2", type=float, default=2.0)
    p_cx.set_defaults(func=cmd_counterexample)

    p_dd = sub.add_parser("dump-duals", help="dual pair (p, P) of a stored solution")
    p_dd.add_argument("--solution", required=True, help="solution.json path")
    p_dd.add_argument("--config", required=True, help="experiment config JSON")
    p_dd.add_argument("--points", type=int, default=2001, help="sample count")
    p_dd.set_defaults(func=cmd_dump_duals)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # propagate wrapped errors as a nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
