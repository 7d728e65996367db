"""Command-line interface.

Exit codes: 0 pass, 1 tolerance failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .coalgebra import CoalgebraError, check_coalgebra, load_coalgebra
from .cobar import DEFAULT_TRUNCATION, Truncation, cobar_to_dict, verify_cobar_identities
from .connection import THREADS_ENV, load_connection, transport_pair, transport_pair_with_error, twisted_residual
from .forms import MembershipError
from .holonomy import RNG_NAME, Morphism3, battery_passed, hol1, hol2, hol3, lemma_battery
from .iterated import QuadratureBudgetError, QuadratureSpec
from .pathspec import PathSpecError, parse_path
from .paths import PathError
from .presets import PresetError, parse_preset_name, preset, signature_preset

SCHEMA_VERSION = "1"
ENGINE_CAPS = Truncation(8, 8)


class InputError(Exception):
    pass


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--out", help="write JSON here instead of stdout")
    parser.add_argument("--L-max", dest="l_max", type=int, default=DEFAULT_TRUNCATION.l_max, help="maximum word length")
    parser.add_argument("--D-max", dest="d_max", type=int, default=DEFAULT_TRUNCATION.d_max, help="maximum word degree")
    parser.add_argument("--q", type=int, default=8, help="Gauss-Legendre nodes per panel")
    parser.add_argument("--P", type=int, default=4, help="panels per axis")
    parser.add_argument("--tol", type=float, default=None, help="pass/fail tolerance")
    parser.add_argument("--seed", type=int, default=0, help="seed for numpy.random.default_rng")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chen-holonomy", description="Higher holonomy of formal power series connections.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-coalgebra", help="validate a coalgebra spec file or preset")
    p.add_argument("spec", help="coalgebra JSON file or preset name")
    _common(p)

    p = sub.add_parser("twisted-check", help="twisted cochain residual of a connection")
    p.add_argument("connection", help="connection JSON file or preset name")
    p.add_argument("--samples", type=int, default=50, help="number of random configurations")
    _common(p)

    p = sub.add_parser("hol", help="holonomy of a path, 2-path or 3-path")
    p.add_argument("--level", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--connection", required=True, help="connection JSON file or preset name")
    p.add_argument("--path", required=True, help="path spec file, JSON literal or family:params")
    p.add_argument("--error", action="store_true", help="include the panel-halving error estimate")
    _common(p)

    p = sub.add_parser("lemmas", help="randomized lemma battery for a preset")
    p.add_argument("--preset", required=True)
    p.add_argument("--levels", default="1,2,3", help="comma-separated levels to run")
    _common(p)

    p = sub.add_parser("signature", help="truncated path signature of a path in R^d")
    p.add_argument("--path", required=True)
    p.add_argument("--depth", type=int, default=4)
    _common(p)
    return parser


def _truncation(args) -> Truncation:
    if args.l_max < 0 or args.d_max < 0:
        raise InputError("truncation bounds must be nonnegative")
    if args.l_max > ENGINE_CAPS.l_max or args.d_max > ENGINE_CAPS.d_max:
        raise InputError(f"truncation exceeds engine caps L_max <= {ENGINE_CAPS.l_max}, D_max <= {ENGINE_CAPS.d_max}")
    return Truncation(args.l_max, args.d_max)


def _quad(args) -> QuadratureSpec:
    if args.q < 1 or args.P < 1:
        raise InputError("q and P must be positive")
    return QuadratureSpec(args.q, args.P)


def _tol(args, default: float) -> float:
    tol = default if args.tol is None else args.tol
    if not tol > 0:
        raise InputError("tolerance must be positive")
    return tol


def _is_file(text: str) -> bool:
    return text.endswith(".json") or Path(text).is_file()


def _load_connection(text: str):
    """Returns (connection, preset-or-None)."""
    if _is_file(text):
        path = Path(text)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read connection {text}: {exc}") from exc
        if "preset" in data:
            pre = preset(data["preset"])
            return pre.connection, pre
        return load_connection(json.dumps(data), path.parent), None
    pre = preset(text)
    return pre.connection, pre


def _meta(args, **extra) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": args.command}
    if hasattr(args, "l_max"):
        out["truncation"] = {"L_max": args.l_max, "D_max": args.d_max}
        out["quadrature"] = {"q": args.q, "P": args.P}
    out.update(extra)
    return out


def _morphism_dict(M) -> dict:
    if isinstance(M, Morphism3):
        return {
            "kind": "3-morphism",
            "value": cobar_to_dict(M.value),
            "raw": cobar_to_dict(M.raw),
            "source": _morphism_dict(M.source),
            "target": _morphism_dict(M.target),
            "quotient_rank": M.quotient.rank,
            "boundary_residual": M.boundary_residual,
            "boundary_ok": M.boundary_ok,
        }
    return {
        "kind": "2-morphism" if M.quotient is not None else "laminated 2-morphism",
        "value": cobar_to_dict(M.value),
        "raw": cobar_to_dict(M.raw),
        "source": cobar_to_dict(M.source),
        "target": cobar_to_dict(M.target),
        "quotient_rank": None if M.quotient is None else M.quotient.rank,
        "boundary_residual": M.boundary_residual,
        "boundary_ok": M.boundary_ok,
    }


def cmd_check_coalgebra(args):
    if _is_file(args.spec):
        try:
            spec = load_coalgebra(Path(args.spec).read_text(), validate=False)
        except OSError as exc:
            raise InputError(str(exc)) from exc
        source = args.spec
    else:
        spec = preset(args.spec).coalgebra
        source = f"preset {args.spec}"
    report = check_coalgebra(spec)
    trunc = _truncation(args)
    out = _meta(args, source=source, coalgebra=report.to_dict())
    ok = report.passed
    if ok:
        identities = verify_cobar_identities(spec, trunc)
        out["cobar"] = identities
        ok = identities["pass"]
    out["pass"] = ok
    return out, ok


def cmd_twisted_check(args):
    conn, pre = _load_connection(args.connection)
    trunc = _truncation(args)
    tol = _tol(args, pre.tolerance if pre is not None and pre.tolerance > 0 else 1e-6)
    rng = np.random.default_rng(args.seed)
    if pre is not None:
        pts = pre.sample_points(rng, args.samples)
    else:
        pts = rng.normal(size=(args.samples, conn.ambient.dim))
        pts = pts[conn.ambient.contains(pts)] if conn.ambient.contains is not None else pts
    resid = twisted_residual(conn, pts, trunc)
    exact = pre is not None and pre.tolerance == 0
    ok = resid == 0.0 if exact and args.tol is None else resid <= tol
    out = _meta(args, connection=conn.name, samples=int(len(pts)), seed=args.seed, rng=RNG_NAME,
                residual=resid, tolerance=0.0 if exact and args.tol is None else tol, **{"pass": bool(ok)})
    return out, ok


def cmd_hol(args):
    conn, _ = _load_connection(args.connection)
    trunc, quad = _truncation(args), _quad(args)
    path = parse_path(args.path)
    if path.dim != conn.ambient.dim:
        raise InputError(f"path lives in R^{path.dim}, connection in {conn.ambient.name}")
    if path.ambient.contains is None and conn.ambient.contains is not None:
        path.ambient = conn.ambient
    level = args.level
    if level == 1:
        if path.arity != 1:
            raise InputError("--level 1 needs a 1-path")
        if args.error:
            value, err = transport_pair_with_error(conn, path, quad, trunc)
        else:
            value, err = hol1(conn, path, quad, trunc), None
        out = _meta(args, level=1, connection=conn.name, value=cobar_to_dict(value))
        if err is not None:
            out["error_estimate"] = err
        out["pass"] = True
        return out, True
    if level == 2:
        if path.arity != 2:
            raise InputError("--level 2 needs a 2-path")
        M = hol2(conn, path, quad, trunc, _tol(args, 1e-6))
    else:
        if path.arity not in (2, 3):
            raise InputError("--level 3 needs a 2-path or a 3-path")
        M = hol3(conn, path, quad, trunc, _tol(args, 1e-6))
    out = _meta(args, level=level, connection=conn.name, result=_morphism_dict(M))
    if args.error:
        coarse = transport_pair(conn, path, quad.coarsened(), trunc)
        out["error_estimate"] = (M.raw - coarse).max_abs()
    out["pass"] = bool(M.boundary_ok)
    return out, M.boundary_ok


def cmd_lemmas(args):
    parse_preset_name(args.preset)
    pre = preset(args.preset)
    try:
        levels = tuple(int(x) for x in args.levels.split(","))
    except ValueError as exc:
        raise InputError("--levels must be a comma-separated list of 1, 2, 3") from exc
    if not set(levels) <= {1, 2, 3}:
        raise InputError("--levels must be drawn from 1, 2, 3")
    report = lemma_battery(pre, args.seed, _quad(args), _truncation(args), levels=levels)
    ok = battery_passed(report)
    out = _meta(args, preset=pre.name, seed=args.seed, rng=RNG_NAME, lemmas=report, **{"pass": ok})
    return out, ok


def cmd_signature(args):
    path = parse_path(args.path)
    if path.arity != 1:
        raise InputError("signature needs a 1-path")
    if args.depth < 0 or args.depth > ENGINE_CAPS.l_max:
        raise InputError(f"depth must lie in [0, {ENGINE_CAPS.l_max}]")
    pre = signature_preset(path.dim)
    trunc = Truncation(args.depth, 0)
    value = hol1(pre.connection, path, _quad(args), trunc)
    out = _meta(args, dimension=path.dim, depth=args.depth, signature=cobar_to_dict(value), **{"pass": True})
    return out, True


COMMANDS = {
    "check-coalgebra": cmd_check_coalgebra,
    "twisted-check": cmd_twisted_check,
    "hol": cmd_hol,
    "lemmas": cmd_lemmas,
    "signature": cmd_signature,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        out, ok = COMMANDS[args.command](args)
    except (InputError, CoalgebraError, PresetError, PathSpecError, PathError, MembershipError, QuadratureBudgetError,
            KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    text = json.dumps(out, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("tolerance check failed", file=sys.stderr)
    return 0 if ok else 1


__all__ = ["main", "build_parser", "THREADS_ENV"]
