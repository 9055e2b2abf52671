"""Command-line interface: ``simulate``, ``equilibrium`` and ``verify``.

Exit codes: 0 success, 1 a verification property failed, 2 bad config or
arguments, 3 singular configuration during integration, 4 step underflow.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

import jsonschema
import numpy as np

from . import __version__
from .analysis import (
    elliptic_hyperbolic_run_spec,
    lemma1_drift,
    mass_kernel,
    run_reference,
    theorem1_residuals,
    wedge_lemma_mismatch,
)
from .dynamics import IntegratorOptions, Trajectory, integrate
from .equilibria import (
    EquilibriumProblem,
    XF_THRESHOLD_SQ,
    monotonicity_report,
    solve_equilibrium,
    xf_derivative,
)
from .errors import ConfigError, CurvedNBodyError, SingularConfiguration, StepUnderflow
from .geometry import BIVECTOR_LABELS, CurvatureSign
from .rotopulsator import RotopulsatorClass, RotopulsatorSpec, build

log = logging.getLogger("curvednbody")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SINGULAR, EXIT_UNDERFLOW = 0, 1, 2, 3, 4

_num = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["sigma", "class", "n", "integrator"],
    "additionalProperties": False,
    "properties": {
        "sigma": {"enum": [1, -1]},
        "class": {"enum": [c.value for c in RotopulsatorClass]},
        "n": {"type": "integer", "minimum": 2},
        "masses": {
            "oneOf": [
                {"type": "number", "exclusiveMinimum": 0},
                {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            ]
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                **{k: _num for k in ("r0", "rdot0", "theta0", "thetadot0", "z1_0", "z1dot0",
                                     "rho0", "rhodot0", "phi0", "phidot0")},
                "z2_sign": {"enum": [1, -1]},
                "alpha": {"type": "array", "items": _num},
                "beta": {"type": "array", "items": _num},
            },
        },
        "integrator": {
            "type": "object",
            "required": ["t_end"],
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["rk45", "rk4"]},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "h0": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "sample_dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "min_step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "collision_eps": {"type": "number", "exclusiveMinimum": 0},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "string"} for k in ("trajectory", "diagnostics", "report")},
        },
    },
}


def load_config(path) -> tuple[RotopulsatorSpec, IntegratorOptions, float, dict]:
    """Read, validate and convert a JSON run config.

    Returns ``(spec, options, t_end, output_names)``.  Every failure,
    including a spec whose initial state cannot be built, raises ConfigError.
    """
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from exc
    kind = RotopulsatorClass(cfg["class"])
    if int(kind.sigma) != cfg["sigma"]:
        raise ConfigError(f"class {kind.value} requires sigma={int(kind.sigma)}")
    initial = dict(cfg.get("initial", {}))
    for key in ("alpha", "beta"):
        if key in initial:
            initial[key] = tuple(initial[key])
    integ = dict(cfg["integrator"])
    t_end = float(integ.pop("t_end"))
    try:
        spec = RotopulsatorSpec(kind, cfg["n"], masses=cfg.get("masses", 1.0), **initial)
        build(spec)
        opts = IntegratorOptions(collision_eps=cfg.get("collision_eps", 1e-12), **integ)
    except (ValueError, CurvedNBodyError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    outputs = {"trajectory": "trajectory.csv", "diagnostics": "diagnostics.csv", "report": "report.json"}
    outputs.update(cfg.get("output", {}))
    return spec, opts, t_end, outputs


def _fmt(x: float) -> str:
    return f"{x:.16e}"


DIAGNOSTICS_HEADER = ["t", "max_constraint_residual", "max_tangency_residual"] + [
    f"wedge_{lab}" for lab in BIVECTOR_LABELS
] + ["shape_deviation", "rho_sq_phi_dot"]


def trajectory_header(n: int) -> list:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"q{i}_{k}" for k in range(1, 5)]
        cols += [f"v{i}_{k}" for k in range(1, 5)]
    return cols


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj.states[0].n))
        for st in traj.states:
            row = [_fmt(st.t)]
            for q, v in zip(st.positions, st.velocities):
                row += [_fmt(x) for x in q] + [_fmt(x) for x in v]
            w.writerow(row)


def write_diagnostics_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTICS_HEADER)
        for st, d in traj:
            row = [_fmt(st.t), _fmt(d.max_constraint_residual), _fmt(d.max_tangency_residual)]
            row += [_fmt(x) for x in d.wedge]
            row += [_fmt(d.shape_deviation), "" if d.rho_sq_phi_dot is None else _fmt(d.rho_sq_phi_dot)]
            w.writerow(row)


def _report(command: str, inputs: dict, results: dict, verdicts: dict, seed=None) -> dict:
    return {
        "tool": "curvednbody",
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "results": results,
        "verdicts": verdicts,
        "seed": seed,
    }


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def cmd_simulate(args) -> int:
    try:
        spec, opts, t_end, outputs = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        traj = integrate(build(spec), t_end, opts, spec)
    except SingularConfiguration as exc:
        print(f"singular configuration: bodies {exc.i + 1} and {exc.j + 1} ({exc})", file=sys.stderr)
        return EXIT_SINGULAR
    except StepUnderflow as exc:
        print(f"step underflow: {exc}", file=sys.stderr)
        return EXIT_UNDERFLOW
    write_trajectory_csv(traj, out_dir / outputs["trajectory"])
    write_diagnostics_csv(traj, out_dir / outputs["diagnostics"])
    w = np.array([d.wedge for d in traj.diagnostics])
    results = {
        "samples": len(traj),
        "steps_accepted": traj.stats.steps_accepted,
        "steps_rejected": traj.stats.steps_rejected,
        "max_constraint_residual": max(d.max_constraint_residual for d in traj.diagnostics),
        "max_tangency_residual": max(d.max_tangency_residual for d in traj.diagnostics),
        "max_wedge_drift": float(np.abs(w - w[0]).max()),
        "max_shape_deviation": max(d.shape_deviation for d in traj.diagnostics),
    }
    inputs = {"config": json.loads(Path(args.config).read_text())}
    _write_json(_report("simulate", inputs, results, {}), out_dir / outputs["report"])
    print(
        f"simulate: {results['samples']} samples to t={t_end:g}, "
        f"{results['steps_accepted']} steps, constraint {results['max_constraint_residual']:.2e}, "
        f"wedge drift {results['max_wedge_drift']:.2e}, shape {results['max_shape_deviation']:.2e}"
    )
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    masses = args.masses if args.masses else [args.mass]
    if args.angular_speed is None:
        print("equilibrium: --angular-speed is required", file=sys.stderr)
        return EXIT_CONFIG
    r_range = None
    if args.r_min is not None or args.r_max is not None:
        lo, hi = EquilibriumProblem.default_range(args.sigma)
        r_range = (args.r_min if args.r_min is not None else lo, args.r_max if args.r_max is not None else hi)
    try:
        prob = EquilibriumProblem(args.n, masses, args.sigma, args.angular_speed, r_range, args.diagnostic)
        report = solve_equilibrium(prob)
    except (ValueError, CurvedNBodyError) as exc:
        print(f"equilibrium: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    inputs = {
        "sigma": int(prob.sigma),
        "n": prob.n,
        "masses": list(prob.masses),
        "angular_speed": prob.A,
        "angular_speed_squared": prob.A * prob.A,
        "r_range": list(prob.r_range),
        "diagnostic": prob.diagnostic,
    }
    doc = _report("equilibrium", inputs, report.to_dict(), {})
    text = json.dumps(doc, indent=2, default=_json_default)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- verify suites

def _check(name, value, threshold, passed, detail=None) -> dict:
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed), "detail": detail}


def suite_lemma1(seed: int) -> list:
    traj = run_reference(elliptic_hyperbolic_run_spec(), 10.0)
    drift = lemma1_drift(traj)
    mismatch = wedge_lemma_mismatch(traj)
    return [
        _check("lemma1_drift", drift, 1e-8, drift <= 1e-8),
        _check("wedge34_vs_rho2phidot", mismatch, 1e-10, mismatch <= 1e-10),
    ]


def suite_theorem1(seed: int, trials: int = 1000) -> list:
    rows = []
    for n in range(2, 9):
        res = theorem1_residuals(n, trials, seed + n)
        rows.append(_check(f"theorem1_n{n}", float(res.min()), 1e-12, bool(np.all(res > 1e-12)), f"{trials} trials"))
    return rows


def suite_theorem2(seed: int) -> list:
    rows = []
    for sigma in (CurvatureSign.SPHERE, CurvatureSign.HYPERBOLOID):
        for n in range(3, 9):
            expected = 1 if n % 2 else 2
            for with_b, exp in ((False, expected), (True, 1)):
                rep = mass_kernel(n, sigma, include_b_equality=with_b)
                gap = rep.second_smallest_sv / rep.largest_sv
                ok = rep.kernel_dim == exp and gap > 1e-6
                ones = np.ones(n) / math.sqrt(n)
                ok = ok and np.linalg.norm(rep.kernel_basis @ ones) > 1 - 1e-9
                tag = "tangential+b" if with_b else "tangential"
                rows.append(
                    _check(f"mass_kernel_s{int(sigma):+d}_n{n}_{tag}", rep.kernel_dim, exp, ok, f"sv gap {gap:.3e}")
                )
    return rows


def suite_monotonicity(seed: int) -> list:
    xs = np.linspace(0.0, 10.0, 10_001)[1:]
    worst = float(np.max(xf_derivative(xs, CurvatureSign.HYPERBOLOID)))
    rep = monotonicity_report()
    one = rep["sphere_sign_changes"] == 1
    rows = [
        _check("xf_decreasing_hyperboloid", worst, 0.0, worst < 0),
        _check("sphere_single_sign_change", rep["sphere_sign_changes"], 1, one),
    ]
    if one:
        lo, hi = rep["bracket"]
        rows.append(
            _check(
                "sphere_threshold_sq",
                rep["threshold_sq"],
                XF_THRESHOLD_SQ,
                hi - lo <= 1e-6 and rep["matches"]["8/5"],
                {"matches_5/8": rep["matches"]["5/8"], "matches_8/5": rep["matches"]["8/5"], "r_bounds": rep["r_bounds"]},
            )
        )
    return rows


SUITES: dict[str, Callable[[int], list]] = {
    "lemma1": suite_lemma1,
    "theorem1": suite_theorem1,
    "theorem2": suite_theorem2,
    "monotonicity": suite_monotonicity,
}


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    rows = []
    for name in names:
        for row in SUITES[name](args.seed):
            rows.append({"suite": name, **row})
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        value = r["value"]
        shown = f"{value:.3e}" if isinstance(value, float) else str(value)
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['suite']:<12} {r['name']:<{width}}  {shown}")
    verdicts = {r["name"]: r["passed"] for r in rows}
    all_ok = all(verdicts.values())
    print(f"verify {args.suite}: {'all passed' if all_ok else 'FAILURES'}")
    if args.json:
        _write_json(_report("verify", {"suite": args.suite}, {"checks": rows}, verdicts, args.seed), args.json)
    return EXIT_OK if all_ok else EXIT_FAIL


def _sigma_arg(text: str) -> int:
    try:
        value = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"sigma must be +1 or -1, got {text!r}") from None
    if value not in (1, -1) or float(text) != value:
        raise argparse.ArgumentTypeError(f"sigma must be +1 or -1, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvednbody", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a rotopulsator config and write CSV output")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equilibrium", help="solve for polygonal relative equilibria")
    p.add_argument("--sigma", type=_sigma_arg, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mass", type=float, default=1.0, help="common mass of all bodies")
    p.add_argument("--masses", type=lambda s: [float(x) for x in s.split(",")],
                   help="comma-separated masses (diagnostic mode only)")
    p.add_argument("--angular-speed", type=float, help="angular speed A (not squared)")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--diagnostic", action="store_true")
    p.add_argument("--json")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("verify", help="run a certification suite")
    p.add_argument("suite", choices=[*SUITES, "all"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--json")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    code = args.func(args)
    log.debug("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
