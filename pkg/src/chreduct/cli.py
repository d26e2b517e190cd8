"""Command-line entry point.

Subcommands: simulate, check-related, check-orbit, check-equiv, check-hj,
invariants, list-systems.  Trajectories go to CSV, check results to JSON
(stable field order, 17 significant digits), and optional figures are
rendered next to the delimited outputs.

Exit codes: 0 all checks pass, 1 a check failed, 2 unknown system or case
name, 3 malformed JSON input, 4 unwritable output path.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import __version__
from .equivalence import (
    ConfigDiffeo,
    MatchingReport,
    VerticalityError,
    closed_loop_check,
    matching_residual,
    synthesized_law,
)
from .hamjac import load_case_json, run_case
from .liealg import bracket, kks_form, lie_poisson_vf, se3, so3
from .phasespace import PhasePoint, PhaseSpaceChart
from .rch import ControlLaw, ControlSubset, RCHSystem
from .reduction import (
    check_orbit_invariance,
    check_point_related,
    euler_rigid_body_full,
    integrate_reduced,
    kks_consistency,
)
from .systems import SYSTEM_REGISTRY, build_system, free_rigid_body, RigidBodyParams

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_UNKNOWN_SYSTEM = 2
EXIT_BAD_JSON = 3
EXIT_BAD_PATH = 4

log = logging.getLogger("chreduct")


def _json17(obj, indent: int = 0) -> str:
    """Serialize with stable key order and floats at 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {_json17(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_json17(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    return json.dumps(str(obj))


def emit_report(results: dict, config_echo: dict, path=None) -> str:
    """Wrap results with version and config echo and write/print them."""
    doc = {"tool": "chreduct", "version": __version__, "config": config_echo}
    doc.update(results)
    text = _json17(doc) + "\n"
    if path:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise _PathError(str(exc)) from exc
    else:
        sys.stdout.write(text)
    return text


class _PathError(RuntimeError):
    pass


def _parse_params(items) -> dict:
    """key=v[,v...] pairs into a parameter dictionary."""
    params: dict = {}
    for item in items or []:
        for chunk in item.split(";"):
            if not chunk:
                continue
            key, _, value = chunk.partition("=")
            if not value:
                raise ValueError(f"malformed parameter {chunk!r}; expected key=value")
            vals = value.split(",")
            if len(vals) == 1:
                try:
                    params[key] = float(vals[0])
                except ValueError:
                    params[key] = vals[0]
            else:
                params[key] = [float(v) for v in vals]
    return params


def _vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _halton(dim: int, n: int, seed: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return lo + (hi - lo) * sampler.random(n)


def _write_csv_guarded(traj, path):
    try:
        traj.to_csv(path)
    except OSError as exc:
        raise _PathError(str(exc)) from exc


def _cmd_simulate(args) -> int:
    params = _parse_params(args.params)
    system = build_system(args.system, params)
    state = _vector(args.state)
    n, k = system.algebra.dim, system.rotor_dim
    if state.size != n + 2 * k:
        raise ValueError(
            f"state needs {n + 2 * k} components (mu[{n}], theta[{k}], l[{k}])"
        )
    s0 = system.state_from_vector(state)
    traj = integrate_reduced(system, None, s0, args.t_end, args.dt)
    if args.out:
        _write_csv_guarded(traj, args.out)
    if args.plot:
        from .plots import render_trajectory

        render_trajectory(traj, args.plot, title=args.system)
    report = check_orbit_invariance(system, traj, tolerance=args.tolerance)
    results = {"check": "simulate", "orbit_invariance": report.to_dict(),
               "pass": report.passed}
    emit_report(results, _echo(args), args.report)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_check_related(args) -> int:
    params = _parse_params(args.params)
    inertia = np.asarray(params.get("I", [1.0, 2.0, 3.0]), dtype=float)
    full, proj = euler_rigid_body_full(inertia)
    reduced = free_rigid_body(RigidBodyParams(inertia))
    cloud = _halton(6, args.n_samples, args.seed)
    samples = []
    for row in cloud:
        # keep the middle Euler angle clear of the chart singularity
        q = np.array([row[0] * np.pi, 0.4 + 0.55 * (row[1] + 1.0), row[2] * np.pi])
        p = row[3:] * 2.0
        samples.append(PhasePoint(q, p))
    report = check_point_related(full, reduced, proj, samples, tolerance=args.tolerance)
    results = {"check": "point-related", **report.to_dict(), "seed": args.seed}
    emit_report(results, _echo(args), args.out)
    if args.plot:
        from .plots import render_report

        render_report(report.to_dict(), args.plot, title="point relatedness")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_check_orbit(args) -> int:
    params = _parse_params(args.params)
    system = build_system(args.system, params)
    state = _vector(args.state)
    s0 = system.state_from_vector(state)
    traj = integrate_reduced(system, None, s0, args.t_end, args.dt)
    report = check_orbit_invariance(system, traj, tolerance=args.tolerance)
    results = {"check": "orbit-invariance", **report.to_dict(), "seed": args.seed}
    emit_report(results, _echo(args), args.out)
    if args.plot:
        from .plots import render_report

        render_report(report.to_dict(), args.plot, title="orbit invariance")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _oscillator_pair():
    """Harmonic oscillator and its rescaling through phi(q) = 2q."""
    chart = PhaseSpaceChart(1, "osc")

    def H1(z):
        return 0.5 * float(z.p[0] ** 2 + z.q[0] ** 2)

    def grad_H1(z):
        return z.q.copy(), z.p.copy()

    def H2(z):
        return 0.5 * float((2.0 * z.p[0]) ** 2 + (z.q[0] / 2.0) ** 2)

    def grad_H2(z):
        return z.q / 4.0, 4.0 * z.p

    sys1 = RCHSystem(chart, H1, grad_H=grad_H1, W=ControlSubset.full(1), label="osc")
    sys2 = RCHSystem(chart, H2, grad_H=grad_H2, W=ControlSubset.full(1), label="osc-rescaled")
    phi = ConfigDiffeo.linear(np.array([[2.0]]), label="q->2q")
    return sys1, sys2, phi


def _random_linear_pair(rng: np.random.Generator, dim: int = 2):
    """A random quadratic system and its pullback through a random linear map."""
    A = rng.standard_normal((dim, dim))
    A = A + dim * np.eye(dim)  # keep it well conditioned
    M = rng.standard_normal((dim, dim))
    K = M @ M.T + dim * np.eye(dim)
    chart = PhaseSpaceChart(dim, f"lin{dim}")

    def H2(z):
        return 0.5 * float(z.p @ K @ z.p + z.q @ z.q)

    def grad_H2(z):
        return z.q.copy(), K @ z.p

    Ainv = np.linalg.inv(A)

    def H1(z):
        # H1 = H2 o (lift of phi)^-1 so the pair matches exactly
        q2 = A @ z.q
        p2 = Ainv.T @ z.p
        return 0.5 * float(p2 @ K @ p2 + q2 @ q2)

    def grad_H1(z):
        q2 = A @ z.q
        p2 = Ainv.T @ z.p
        return A.T @ q2, Ainv @ (K @ p2)

    sys1 = RCHSystem(chart, H1, grad_H=grad_H1, W=ControlSubset.full(dim), label="pulled")
    sys2 = RCHSystem(chart, H2, grad_H=grad_H2, W=ControlSubset.full(dim), label="source")
    phi = ConfigDiffeo.linear(A, label="random-linear")
    return sys1, sys2, phi


def _run_pair(sys1, sys2, phi, n_samples: int, seed: int, tolerance: float) -> dict:
    dim = sys1.chart.config_dim
    cloud1 = _halton(2 * dim, n_samples, seed)
    samples1 = [PhasePoint(row[:dim], row[dim:]) for row in cloud1]
    match = matching_residual(sys1, sys2, phi, samples1, tolerance=tolerance)

    def damping(z):
        return -z.p

    u2 = ControlLaw(sys2.W, vertical_field=damping, label="damping")
    u1 = synthesized_law(sys1, sys2, phi, u2)
    cloud2 = _halton(2 * dim, n_samples, seed + 1)
    samples2 = [PhasePoint(row[:dim], row[dim:]) for row in cloud2]
    loop = closed_loop_check(sys1, u1, sys2, u2, phi, samples2, tolerance=tolerance)
    merged = match.to_dict()
    merged["closed_loop_residual"] = loop.closed_loop_residual
    merged["pass"] = match.passed and loop.passed
    return merged


def _cmd_check_equiv(args) -> int:
    rows = []
    if args.pair == "rescaled-oscillator":
        rows.append({"pair": "rescaled-oscillator",
                     **_run_pair(*_oscillator_pair(), args.n_samples, args.seed,
                                 args.tolerance)})
    elif args.pair == "random-linear":
        rng = np.random.default_rng(args.seed)
        for i in range(args.n_pairs):
            sys1, sys2, phi = _random_linear_pair(rng)
            rows.append({"pair": f"random-linear-{i}",
                         **_run_pair(sys1, sys2, phi, args.n_samples,
                                     args.seed + 10 * i, args.tolerance)})
    else:
        raise KeyError(f"unknown pair {args.pair!r}; known: rescaled-oscillator, random-linear")
    ok = all(r["pass"] for r in rows)
    emit_report({"checks": rows, "pass": ok}, _echo(args), args.out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_check_hj(args) -> int:
    try:
        with open(args.case) as fh:
            case = load_case_json(fh)
    except FileNotFoundError as exc:
        raise _PathError(str(exc)) from exc
    results = run_case(case)
    emit_report(results, _echo(args), args.out)
    if args.plot:
        from .plots import render_report

        render_report(results, args.plot, title=case.get("label", "hj-case"))
    return EXIT_OK if results["pass"] else EXIT_CHECK_FAILED


def _cmd_invariants(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for alg in (so3(), se3()):
        pairing = 0.0
        anti = 0.0
        for _ in range(args.n_samples):
            xi = alg.vector(rng.standard_normal(alg.dim))
            eta = alg.vector(rng.standard_normal(alg.dim))
            mu = alg.covector(rng.standard_normal(alg.dim))
            from .liealg import ad_star

            lhs = float(np.dot(ad_star(xi, mu).coords, eta.coords))
            rhs = float(np.dot(mu.coords, bracket(xi, eta).coords))
            pairing = max(pairing, abs(lhs - rhs))
            anti = max(anti, abs(kks_form(mu, xi, eta) + kks_form(mu, eta, xi)))
        rows.append({"check": f"{alg.name}-pairing", "max_residual": pairing,
                     "tolerance": args.tolerance, "pass": pairing < args.tolerance})
        rows.append({"check": f"{alg.name}-kks-antisymmetry", "max_residual": anti,
                     "tolerance": args.tolerance, "pass": anti < args.tolerance})
    mu0 = so3().covector([1.0, 2.0, 3.0])
    I = np.array([1.0, 2.0, 3.0])
    kks = kks_consistency(
        so3(), lambda m: 0.5 * float(np.dot(m, m / I)), mu0,
        [rng.standard_normal(3) for _ in range(50)],
        grad_h=lambda m: m / I,
    )
    rows.append(kks.to_dict())
    ok = all(r["pass"] for r in rows)
    emit_report({"checks": rows, "pass": ok}, _echo(args), args.out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_list_systems(args) -> int:
    for name in sorted(SYSTEM_REGISTRY):
        print(name)
    return EXIT_OK


def _echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_common(p, with_system=False):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")
    p.add_argument("--plot", default=None, help="optional figure path (PNG)")
    p.add_argument("--config", default=None, help="JSON file overriding flags")
    if with_system:
        p.add_argument("--system", required=True)
        p.add_argument("--params", action="append", default=None,
                       help="key=v[,v...] parameter assignments (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chreduct", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a reduced system and emit CSV")
    _add_common(p, with_system=True)
    p.add_argument("--state", required=True, help="comma-separated initial state")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--report", default=None, help="JSON report path")
    p.set_defaults(func=_cmd_simulate, default_tolerance=1e-7)

    p = sub.add_parser("check-related", help="full vs reduced rigid-body relatedness")
    _add_common(p)
    p.add_argument("--params", action="append", default=None)
    p.add_argument("--n-samples", type=int, default=200)
    p.set_defaults(func=_cmd_check_related, default_tolerance=1e-10)

    p = sub.add_parser("check-orbit", help="Casimir drift of a reduced flow")
    _add_common(p, with_system=True)
    p.add_argument("--state", required=True)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.set_defaults(func=_cmd_check_orbit, default_tolerance=1e-7)

    p = sub.add_parser("check-equiv", help="matching and control synthesis checks")
    _add_common(p)
    p.add_argument("--pair", default="rescaled-oscillator")
    p.add_argument("--n-samples", type=int, default=200)
    p.add_argument("--n-pairs", type=int, default=10)
    p.set_defaults(func=_cmd_check_equiv, default_tolerance=1e-6)

    p = sub.add_parser("check-hj", help="Hamilton-Jacobi case file checks")
    _add_common(p)
    p.add_argument("--case", required=True, help="JSON case file")
    p.set_defaults(func=_cmd_check_hj, default_tolerance=1e-8)

    p = sub.add_parser("invariants", help="algebra residual sweeps")
    _add_common(p)
    p.add_argument("--n-samples", type=int, default=100)
    p.set_defaults(func=_cmd_invariants, default_tolerance=1e-12)

    p = sub.add_parser("list-systems", help="print the system registry")
    p.set_defaults(func=_cmd_list_systems)
    return parser


def _apply_config_file(args):
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                overrides = json.load(fh)
        except FileNotFoundError as exc:
            raise _PathError(str(exc)) from exc
        for key, value in overrides.items():
            setattr(args, key.replace("-", "_"), value)


def run(argv=None) -> int:
    level = os.environ.get("CHREDUCT_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        if getattr(args, "tolerance", None) is None:
            setattr(args, "tolerance", getattr(args, "default_tolerance", 1e-8))
        return args.func(args)
    except KeyError as exc:
        log.error("%s", exc)
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_UNKNOWN_SYSTEM
    except (json.JSONDecodeError, ValueError, VerticalityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_JSON
    except _PathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PATH


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
