"""Command-line interface binding all modules.

Exit codes: 0 success, 2 input or parse error, 3 precondition violation,
4 numeric failure.  Identical invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import CONVENTIONS, __version__
from . import compat, invariants, symtensor, webtrace
from .e2core import IsometrySE2, KillingTensorE2, Point2, act_on_params, evaluate
from .errors import InputError, KtError, NumericError, PreconditionError

EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_NUMERIC = 4


@dataclass
class Config:
    tol_exact: float = 1e-12
    tol_float: float = 1e-9
    rng_seed: int = 0
    fd_step: float = 1e-5
    output_format: str = "text"


def _parse_scalar(text: str) -> float | Fraction:
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return Fraction(int(text))
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError as exc:
        raise InputError(f"bad numeric literal {text!r}") from exc


def _parse_vector(text: str, expected: int, name: str) -> list[float | Fraction]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != expected:
        raise InputError(f"--{name} needs {expected} comma-separated values, got {len(parts)}")
    return [_parse_scalar(p) for p in parts]


def _tensor_from(text: str | None, payload: dict, key: str) -> KillingTensorE2:
    if text is not None:
        values = _parse_vector(text, 6, key)
    elif key in payload:
        values = payload[key]
        if len(values) != 6:
            raise InputError(f"JSON key {key!r} needs 6 entries")
    else:
        raise InputError(f"missing tensor: pass --{key} or a JSON file with {key!r}")
    if all(isinstance(v, (int, Fraction)) for v in values):
        return KillingTensorE2.from_rational(values)
    return KillingTensorE2(tuple(float(v) for v in values))


def _point_from(text: str | None, payload: dict, key: str, default=None) -> Point2:
    if text is not None:
        values = _parse_vector(text, 2, key)
    elif key in payload:
        values = payload[key]
    elif default is not None:
        return default
    else:
        raise InputError(f"missing point: pass --{key} or a JSON file with {key!r}")
    return Point2(float(values[0]), float(values[1]))


def _potential_from(text: str | None, payload: dict) -> compat.Potential:
    if text is None:
        text = payload.get("expr")
    if text is None:
        raise InputError("missing potential: pass --potential or a JSON file with 'expr'")
    return compat.parse_potential(text)


def _load_payload(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise InputError(f"top-level JSON value in {path} must be an object")
    return payload


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _emit_result(args, obj, text_value=None) -> None:
    if args.format == "json":
        _emit(args, json.dumps(obj))
    else:
        _emit(args, str(obj) if text_value is None else text_value)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_dim(args, config: Config) -> None:
    value = symtensor.npe_dimension(args.m, args.n, args.p)
    _emit_result(args, {"dimension": value}, str(value))


def _signature_from(text: str | None, m: int) -> tuple[int, ...]:
    if text is None:
        return (1,) * m
    mapping = {"+": 1, "-": -1}
    try:
        signature = tuple(mapping[c] for c in text.strip())
    except KeyError as exc:
        raise InputError("signature must be a string of '+' and '-'") from exc
    if len(signature) != m:
        raise InputError(f"signature needs {m} entries")
    return signature


def _cmd_gkt(args, config: Config) -> None:
    solution = symtensor.solve_gkt(
        args.m, args.n, args.p,
        signature=_signature_from(args.signature, args.m),
        degree_bound=args.degree_bound)
    obj = {
        "m": solution.m, "n": solution.n, "p": solution.p,
        "signature": list(solution.metric.signature),
        "dimension": solution.dimension,
        "basis": [t.to_json_dict() for t in solution.basis],
    }
    if args.format == "json":
        _emit(args, json.dumps(obj))
    else:
        lines = [f"dimension {solution.dimension}"]
        for tensor in solution.basis:
            comps = ";  ".join(f"{k}: {v}" for k, v in tensor.to_json_dict()["components"].items())
            lines.append(f"  {comps}")
        _emit(args, "\n".join(lines))


def _cmd_invariants(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    triple = invariants.fundamental_invariants(k)
    _emit_result(args, triple.to_json_dict(),
                 f"{triple.d1!r} {triple.d2!r} {triple.d3!r}")


def _cmd_classify(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    cls = invariants.classify(k, tol=config.tol_exact)
    _emit_result(args, {"class": cls.value}, cls.value)


def _cmd_k2(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    value = invariants.k_squared(k)
    _emit_result(args, {"k2": value}, repr(value))


def _cmd_foci(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    pair = invariants.foci(k)
    _emit_result(args, pair.to_json_dict(),
                 f"({pair.f1.x1!r}, {pair.f1.x2!r}) ({pair.f2.x1!r}, {pair.f2.x2!r})")


def _pair_from(args, payload: dict) -> tuple[KillingTensorE2, KillingTensorE2]:
    return (_tensor_from(args.beta, payload, "beta"),
            _tensor_from(args.alpha, payload, "alpha"))


def _cmd_joint(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k1, k2 = _pair_from(args, payload)
    jv = invariants.joint_invariants(k1, k2)
    _emit_result(args, jv.to_json_dict(),
                 " ".join(repr(v) for v in jv.as_tuple()))


def _cmd_resultant(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k1, k2 = _pair_from(args, payload)
    value, vanishing = invariants.resultant(k1, k2, tol=config.tol_float)
    _emit_result(args, {"value": float(value), "vanishing": bool(vanishing)},
                 f"{value!r} {'vanishing' if vanishing else 'nonvanishing'}")


def _cmd_angle(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k1, k2 = _pair_from(args, payload)
    value = invariants.angle_invariant(k1, k2, tol=config.tol_float)
    _emit_result(args, {"cos_angle": value}, repr(value))


def _cmd_canonical(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    kc, g = invariants.canonical_form(k)
    _emit_result(args, {"kc": kc.to_json_dict(), "g": g.to_json_dict()},
                 f"kc {list(kc.beta)!r}\ng {[g.p1, g.p2, g.p3]!r}")


def _cmd_frame(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    x = _point_from(args.x, payload, "x")
    fi = invariants.frame_invariants(k, x, h=args.h)
    _emit_result(args, fi.to_json_dict(), f"{fi.delta1!r} {fi.delta2!r}")


def _cmd_rank(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k1, k2 = _pair_from(args, payload)
    rank = invariants.independence_rank(k1, k2, h=args.h or config.fd_step)
    _emit_result(args, {"rank": rank}, str(rank))


def _cmd_bd(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    v = _potential_from(args.potential, payload)
    x = _point_from(args.x, payload, "x")
    value = compat.bd_residual(k, v, x)
    _emit_result(args, {"residual": value}, repr(value))


def _cmd_compat_basis(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    v = _potential_from(args.potential, payload)
    sub = compat.compatible_subspace(v, rng_seed=config.rng_seed)
    obj = {"dimension": sub.dimension,
           "basis": [list(t.beta) for t in sub.basis]}
    if args.format == "json":
        _emit(args, json.dumps(obj))
    else:
        lines = [f"dimension {sub.dimension}"]
        lines.extend("  " + " ".join(f"{v:+.12f}" for v in t.beta) for t in sub.basis)
        _emit(args, "\n".join(lines))


def _cmd_kepler_verify(args, config: Config) -> None:
    report = compat.verify_kepler_theorem()
    if args.format == "json":
        _emit(args, json.dumps(report.to_json_dict()))
    else:
        lines = []
        for check in report.checks:
            status = "PASS" if check.passed else "FAIL"
            lines.append(f"{status} {check.name}: {check.detail}")
        lines.append("all checks passed" if report.all_passed else "SOME CHECKS FAILED")
        _emit(args, "\n".join(lines))


def _cmd_pde_check(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    v = _potential_from(args.potential, payload)
    x = _point_from(args.x, payload, "x")
    residuals = compat.pde_residuals(v, x)
    _emit_result(args, {"residuals": list(residuals)},
                 " ".join(repr(r) for r in residuals))


def _cmd_integrate(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    v = _potential_from(args.potential, payload)
    x0 = _point_from(args.x0, payload, "x0")
    p0_vals = _parse_vector(args.p0, 2, "p0") if args.p0 else payload.get("p0")
    if p0_vals is None:
        raise InputError("missing momentum: pass --p0 or a JSON file with 'p0'")
    integrals = []
    for i, text in enumerate(args.integral_beta or [], start=1):
        k = KillingTensorE2(tuple(float(v) for v in _parse_vector(text, 6, "integral-beta")))
        integrals.append(compat.FirstIntegral(k, label=f"F{i}"))
    report = compat.hamiltonian_flow(
        v, x0, (float(p0_vals[0]), float(p0_vals[1])),
        step=args.step, horizon=args.horizon,
        integrals=integrals, record_every=args.record_every)
    if args.csv:
        from .report import write_trajectory_csv
        write_trajectory_csv(report, args.csv)
    if args.plot:
        from .report import render_trajectory_figure
        render_trajectory_figure(report, args.plot, potential_label=v.expr.to_text())
    if args.format == "json":
        _emit(args, json.dumps(report.to_json_dict()))
    else:
        lines = [f"steps {len(report.times) - 1} aborted {report.aborted}",
                 f"drift_H {report.drift_h!r}"]
        for label, drift in zip(report.integral_labels, report.drift_f):
            lines.append(f"drift_{label} {drift!r}")
        _emit(args, "\n".join(lines))


def _cmd_web(args, config: Config) -> None:
    payload = _load_payload(args.infile)
    k = _tensor_from(args.beta, payload, "beta")
    bounds_vals = (_parse_vector(args.bounds, 4, "bounds") if args.bounds
                   else payload.get("bounds", [-3, 3, -3, 3]))
    bounds = webtrace.Viewport(*(float(v) for v in bounds_vals))
    figure = webtrace.build_web(k, bounds, density=args.density, step=args.step)
    fmt = args.format if args.format != "text" else "svg"
    if fmt == "json":
        _emit(args, webtrace.figure_json(figure))
    else:
        _emit(args, webtrace.render_svg(figure, args.width, args.height))


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _global_options(for_subparser: bool) -> argparse.ArgumentParser:
    """Global flags, valid both before and after the subcommand.

    The subparser copies use SUPPRESS defaults so they only override the
    top-level values when actually given.
    """
    parent = argparse.ArgumentParser(add_help=False)

    def default(value):
        return argparse.SUPPRESS if for_subparser else value

    parent.add_argument("--format", choices=("json", "text", "svg"),
                        default=default("text"))
    parent.add_argument("--out", default=default(None),
                        help="write output to this file instead of stdout")
    parent.add_argument("--tol-exact", type=float, default=default(1e-12))
    parent.add_argument("--tol-float", type=float, default=default(1e-9))
    parent.add_argument("--seed", type=int, default=default(None),
                        help="RNG seed (overridden by KT_SEED)")
    parent.add_argument("--fd-step", type=float, default=default(1e-5))
    return parent


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ktweb",
        parents=[_global_options(False)],
        description="Killing two-tensors on the Euclidean plane: invariants, "
                    "webs, resultants, Bertrand-Darboux compatibility.")
    parser.add_argument("--version", action="store_true",
                        help="print version and convention ledger, then exit")

    sub = parser.add_subparsers(dest="command")
    globals_after = _global_options(True)

    def add(name, handler, **kwargs):
        p = sub.add_parser(name, parents=[globals_after], **kwargs)
        p.set_defaults(handler=handler)
        p.add_argument("--in", dest="infile", help="JSON input file")
        return p

    p = add("dim", _cmd_dim, help="dimension of the generalized solution space")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)

    p = add("gkt", _cmd_gkt, help="exact solver: basis of the solution space")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--signature", help="e.g. '++-' (default all +)")
    p.add_argument("--degree-bound", type=int, default=None)

    p = add("invariants", _cmd_invariants, help="fundamental invariant triple")
    p.add_argument("--beta")

    p = add("classify", _cmd_classify, help="orthogonal web class")
    p.add_argument("--beta")

    p = add("k2", _cmd_k2, help="squared half focal distance")
    p.add_argument("--beta")

    p = add("foci", _cmd_foci, help="foci of an elliptic-hyperbolic web")
    p.add_argument("--beta")

    p = add("joint", _cmd_joint, help="ten joint quantities of a tensor pair")
    p.add_argument("--beta")
    p.add_argument("--alpha")

    p = add("resultant", _cmd_resultant, help="common-focus resultant of a pair")
    p.add_argument("--beta")
    p.add_argument("--alpha")

    p = add("angle", _cmd_angle, help="angle invariant of the focus quadrilateral")
    p.add_argument("--beta")
    p.add_argument("--alpha")

    p = add("canonical", _cmd_canonical, help="orbit representative and the move to it")
    p.add_argument("--beta")

    p = add("frame", _cmd_frame, help="frame connection invariants at a point")
    p.add_argument("--beta")
    p.add_argument("--x")
    p.add_argument("--h", type=float, default=None)

    p = add("rank", _cmd_rank, help="rank of the joint-invariant Jacobian")
    p.add_argument("--beta")
    p.add_argument("--alpha")
    p.add_argument("--h", type=float, default=None)

    p = add("bd", _cmd_bd, help="compatibility residual of (tensor, potential) at a point")
    p.add_argument("--beta")
    p.add_argument("--potential")
    p.add_argument("--x")

    p = add("compat-basis", _cmd_compat_basis, help="compatible tensor subspace of a potential")
    p.add_argument("--potential")

    add("kepler-verify", _cmd_kepler_verify, help="run the attracting-center characterization checks")

    p = add("pde-check", _cmd_pde_check, help="scalar compatibility conditions at a point")
    p.add_argument("--potential")
    p.add_argument("--x")

    p = add("integrate", _cmd_integrate, help="RK4 flow with conservation drifts")
    p.add_argument("--potential")
    p.add_argument("--x0")
    p.add_argument("--p0")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--integral-beta", action="append",
                   help="track F = K p.p + U for this tensor (repeatable)")
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--csv", help="write the recorded states to a CSV file")
    p.add_argument("--plot", help="render orbit and drift figure to this image file")

    p = add("web", _cmd_web, help="trace the coordinate web, emit SVG or JSON")
    p.add_argument("--beta")
    p.add_argument("--bounds", help="xmin,xmax,ymin,ymax (default -3,3,-3,3)")
    p.add_argument("--density", type=int, default=6)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=640)

    return parser


_VALUE_OPTIONS = frozenset({
    "--format", "--out", "--tol-exact", "--tol-float", "--seed", "--fd-step",
    "--in", "--m", "--n", "--p", "--signature", "--degree-bound", "--beta",
    "--alpha", "--x", "--x0", "--p0", "--h", "--potential", "--step",
    "--horizon", "--integral-beta", "--record-every", "--csv", "--plot",
    "--bounds", "--density", "--width", "--height",
})


def _merge_dashed_values(argv: list[str]) -> list[str]:
    """Join option values that start with '-' (negative numbers, '-1/...')
    into --opt=value form so argparse does not read them as flags."""
    out = []
    i = 0
    while i < len(argv):
        token = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (token in _VALUE_OPTIONS and nxt is not None
                and nxt.startswith("-") and nxt not in _VALUE_OPTIONS
                and nxt != "--version"):
            out.append(f"{token}={nxt}")
            i += 2
        else:
            out.append(token)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_dashed_values(list(argv)))

    if args.version:
        print(f"ktweb {__version__}")
        for line in CONVENTIONS:
            print(f"  {line}")
        return 0
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_INPUT

    seed = args.seed
    env_seed = os.environ.get("KT_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            print(f"ktweb: bad KT_SEED {env_seed!r}", file=sys.stderr)
            return EXIT_INPUT
    config = Config(tol_exact=args.tol_exact, tol_float=args.tol_float,
                    rng_seed=seed if seed is not None else 0,
                    fd_step=args.fd_step, output_format=args.format)
    try:
        args.handler(args, config)
    except PreconditionError as exc:
        print(f"ktweb: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except InputError as exc:
        print(f"ktweb: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"ktweb: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except KtError as exc:
        print(f"ktweb: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
