"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 solver non-convergence (the best
result found is still written).
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys

import numpy as np

from . import binary, finite, gaussian, simulate
from .errors import InputError
from .probability import Channel, DistortionMatrix, JointDistribution, ProbVector
from .transport import CostMatrix

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3
LOG2 = np.log(2.0)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return json.dumps([float("%.12g" % x) for x in np.ravel(v)])
    return str(v)


def write_csv(header, rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def write_json(obj, out) -> None:
    out.write(json.dumps(_jsonable(obj), indent=2) + "\n")


def _jsonable(o):
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating, float)):
        return float(o)
    return o


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _range(start, stop, step) -> list[float]:
    if step <= 0:
        raise InputError("step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(n, 0))]


def _d_values(args) -> list[float]:
    if args.D is not None:
        return _floats(args.D)
    return _range(args.D_start, args.D_stop, args.D_step)


def _load_json(src: str):
    try:
        if src == "-":
            return json.load(sys.stdin)
        text = src.strip()
        if text.startswith("{") or text.startswith("["):
            return json.loads(text)
        with open(src) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc
    except OSError as exc:
        raise InputError(str(exc)) from exc


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_binary_curve(args) -> int:
    Ds = _d_values(args)
    if args.P is not None and args.P_factors is not None:
        raise InputError("give --P or --P-factors, not both")
    factors = _floats(args.P_factors) if args.P_factors is not None else None
    Ps = _floats(args.P) if args.P is not None else None
    if Ps is None and factors is None:
        factors = [0.0, 1.0]
    for v in Ds + (Ps or []) + (factors or []):
        if not 0.0 <= v <= 1.0:
            raise InputError(f"value {v} outside [0, 1]")
    env = binary.build_envelope(args.grid_n)
    rows = []
    for D in Ds:
        for P in (Ps if Ps is not None else [f * D for f in factors]):
            h = float(binary.hbar(D, P))
            e = float(env(D, P))
            r = float(binary.rate_binary(D, P, env))
            rows.append((D, P, h, e, r, r / LOG2, "envelope"))
    with _open_out(args.out) as out:
        write_csv(["D", "P", "hbar", "envelope", "rate_nats", "rate_bits", "method"], rows, out)
    return EXIT_OK


def _gaussian_inputs(args):
    spec = _load_json(args.spec) if args.spec else {}
    eig = spec.get("eigenvalues")
    if args.eigenvalues is not None:
        eig = _floats(args.eigenvalues)
    if eig is None:
        raise InputError("eigenvalues required (--eigenvalues or --spec)")
    D = args.D if args.D is not None else spec.get("D")
    P = args.P if args.P is not None else spec.get("P")
    return gaussian.GaussianVectorSource(eig), D, P


def cmd_gaussian(args) -> int:
    src, D, P = _gaussian_inputs(args)
    if P is None:
        raise InputError("P required")
    P = float(P)
    if args.curve:
        Ds = _range(args.D_start, args.D_stop, args.D_step)
        rows = []
        for d in Ds:
            s = gaussian.waterfill(src, d, P)
            rows.append((d, P, s.rate, s.rate / LOG2, "closed-form", s.D_star, s.omega, s.alpha,
                         s.omega_l, s.gamma_star_l, s.gamma_hat_star_l, s.D_l, s.P_l))
        with _open_out(args.out) as out:
            write_csv(["D", "P", "rate_nats", "rate_bits", "method", "D_star", "omega", "alpha",
                       "omega_l", "gamma", "gamma_hat", "D_l", "P_l"], rows, out)
        return EXIT_OK
    if D is None:
        raise InputError("D required")
    s = gaussian.waterfill(src, float(D), P)
    obj = s.to_dict()
    obj["rate_bits"] = s.rate / LOG2
    with _open_out(args.out) as out:
        write_json(obj, out)
    return EXIT_OK


def _config(args) -> finite.SolverConfig:
    return finite.SolverConfig(restarts=args.restarts)


def cmd_finite_solve(args) -> int:
    prob = finite.RdpProblem.from_dict(_load_json(args.problem))
    sol = finite.solve_rdp(prob, _config(args))
    with _open_out(args.out) as out:
        write_json({"problem": prob.to_dict(), "solution": sol.to_dict()}, out)
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_finite_curve(args) -> int:
    prob = finite.RdpProblem.from_dict(_load_json(args.problem))
    Ds = _d_values(args)
    kw = {"P_factors": _floats(args.P_factors)} if args.P_factors is not None else {"P_values": _floats(args.P or "0")}
    pts = finite.rdp_curve(prob, Ds, config=_config(args), **kw)
    rows = [(p.D, p.P, p.rate, p.rate / LOG2, p.method, p.converged, p.achieved_D, p.achieved_P, p.monotone)
            for p in pts]
    with _open_out(args.out) as out:
        write_csv(["D", "P", "rate_nats", "rate_bits", "method", "converged", "achieved_D", "achieved_P",
                   "monotone"], rows, out)
    ok = all(p.converged and p.monotone for p in pts)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _finite_joint(spec):
    try:
        src = ProbVector(spec["source"]["probs"] if isinstance(spec["source"], dict) else spec["source"])
        enc = Channel(spec["encoder"]["rows"] if isinstance(spec["encoder"], dict) else spec["encoder"])
        dec = Channel(spec["decoder"]["rows"] if isinstance(spec["decoder"], dict) else spec["decoder"])
        n = dec.n_out
        d = DistortionMatrix(spec["distortion"]) if "distortion" in spec else DistortionMatrix.hamming(n)
        c = CostMatrix(spec["cost"]) if "cost" in spec else CostMatrix.hamming(n)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed construction: {exc}") from exc
    return JointDistribution.compose(src, enc, dec), c, d


def cmd_simulate(args) -> int:
    spec = _load_json(args.construction)
    kind = spec.get("kind", "finite")
    status = EXIT_OK
    if kind == "gaussian":
        src = gaussian.GaussianVectorSource(spec["eigenvalues"])
        cons = gaussian.achieving_joint(src, gaussian.waterfill(src, float(spec["D"]), float(spec["P"])))
        rep = simulate.simulate_gaussian(cons, args.samples, args.seed)
    elif kind == "binary":
        prob = finite.binary_problem(float(spec["D"]), float(spec["P"]), float(spec.get("a", 0.5)))
        sol = finite.solve_rdp(prob, finite.SolverConfig(restarts=args.restarts))
        joint = JointDistribution.compose(prob.source, sol.encoder, sol.decoder)
        rep = simulate.simulate_finite(joint, prob.cost, prob.distortion, args.samples, args.seed)
        status = EXIT_OK if sol.converged else EXIT_NONCONVERGED
    elif kind == "finite":
        joint, c, d = _finite_joint(spec)
        rep = simulate.simulate_finite(joint, c, d, args.samples, args.seed)
    else:
        raise InputError(f"unknown construction kind {kind!r}")
    with _open_out(args.out) as out:
        write_json(rep.to_dict(), out)
    return status


def cmd_compare(args) -> int:
    Ds = _d_values(args)
    Ps = _floats(args.P) if args.P is not None else None
    factors = _floats(args.P_factors) if args.P_factors is not None else None
    if Ps is None and factors is None:
        factors = [1.0]
    rows = []
    status = EXIT_OK
    if args.kind == "gaussian":
        if args.eigenvalues is None:
            raise InputError("--eigenvalues required for gaussian compare")
        src = gaussian.GaussianVectorSource(_floats(args.eigenvalues))
        for D in Ds:
            for P in (Ps if Ps is not None else [f * D for f in factors]):
                cf = gaussian.waterfill(src, D, P).rate
                lb = max(gaussian.shannon_lower_bound(src.entropy(), src.eigenvalues, D, P), 0.0)
                rows.append({"D": D, "P": P, "closed_form": cf, "lower_bound": lb, "gap": abs(cf - lb)})
    else:
        env = binary.build_envelope(args.grid_n)
        cfg = finite.SolverConfig(restarts=args.restarts)
        for D in Ds:
            for P in (Ps if Ps is not None else [f * D for f in factors]):
                cf = float(binary.rate_binary(D, P, env))
                sol = finite.solve_rdp(finite.binary_problem(D, P), cfg)
                if not sol.converged:
                    status = EXIT_NONCONVERGED
                rows.append({"D": D, "P": P, "closed_form": cf, "solver": sol.rate,
                             "converged": sol.converged, "gap": abs(sol.rate - cf)})
    summary = {"kind": args.kind, "rows": rows, "max_gap": max((r["gap"] for r in rows), default=0.0)}
    with _open_out(args.out) as out:
        write_json(summary, out)
    return status


def _add_d_range(p):
    p.add_argument("--D", help="comma-separated distortion budgets")
    p.add_argument("--D-start", type=float, default=0.05)
    p.add_argument("--D-stop", type=float, default=0.5)
    p.add_argument("--D-step", type=float, default=0.05)


def _add_p(p):
    p.add_argument("--P", help="comma-separated perception budgets")
    p.add_argument("--P-factors", help="comma-separated multipliers: P = factor * D")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="condrdp", description="Conditional rate-distortion-perception computations (nats).")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("binary-curve", help="Bernoulli(1/2) rate from the concave envelope, CSV")
    _add_d_range(p)
    _add_p(p)
    p.add_argument("--grid-n", type=int, default=binary.DEFAULT_GRID)
    p.add_argument("--out")
    p.set_defaults(func=cmd_binary_curve)

    p = sub.add_parser("gaussian-waterfill", help="Gaussian vector water-filling, JSON (or CSV with --curve)")
    p.add_argument("--eigenvalues", help="comma-separated covariance eigenvalues")
    p.add_argument("--spec", help='JSON file or inline: {"eigenvalues": [...], "D": .., "P": ..}')
    p.add_argument("--D", type=float)
    p.add_argument("--P", type=float)
    p.add_argument("--curve", action="store_true", help="sweep D at fixed P")
    p.add_argument("--D-start", type=float, default=0.05)
    p.add_argument("--D-stop", type=float, default=1.0)
    p.add_argument("--D-step", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gaussian)

    p = sub.add_parser("finite-solve", help="solve a finite-alphabet problem JSON")
    p.add_argument("--problem", required=True, help="problem JSON file, inline JSON, or - for stdin")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_finite_solve)

    p = sub.add_parser("finite-curve", help="solver sweep over budgets, CSV")
    p.add_argument("--problem", required=True)
    _add_d_range(p)
    _add_p(p)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_finite_curve)

    p = sub.add_parser("simulate", help="Monte Carlo check of a construction, JSON")
    p.add_argument("--construction", required=True,
                   help='JSON file or inline; kind "gaussian" {eigenvalues, D, P}, "binary" {D, P}, '
                        'or "finite" {source, encoder, decoder, distortion, cost}')
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="solver or lower bound vs closed form, JSON summary")
    p.add_argument("--kind", choices=["binary", "gaussian"], default="binary")
    p.add_argument("--eigenvalues")
    _add_d_range(p)
    _add_p(p)
    p.add_argument("--grid-n", type=int, default=binary.DEFAULT_GRID)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
