"""
Command-line front end.

Every subcommand prints one JSON report (or a CSV dump) and exits with 0 when
all checks pass, 2 when some check fails and 1 on usage or evaluation errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .domains import parse_domain
from .errors import SchwarzlabError
from .expr_lang import evaluate, is_constant, parse_expression
from .extension import extension_report
from .harmonic import HarmonicMap
from .norms import Check, extended_affine_audit, hyperbolic_norm, inequality_audit, schwarzian_norm, univalence_scan, _num
from .quasi_geom import INFINITY, Circle, CurveSample, Level, Line, cross_ratio, quasicircle_constant, reflect

DEFAULT_SEED = 24301

HELP_EPILOG = """\
expressions: numbers (1, 2.5, 1e-3, i), the variable z, + - * / ^int,
  exp(.), log(.), sqrt(.) (principal branches) and powc[c](.) for a constant c.
  Example: "0.5*log((1+z)/(1-z))".
domains: disk | halfplane | annulus:RHO | quasidisk:EXPR (EXPR univalent near the closed disk).
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _complex(text: str) -> complex:
    e = parse_expression(text)
    if not is_constant(e):
        raise UsageError(f"expected a constant, got {text!r}")
    return complex(evaluate(e, 0j))


def _point_list(text: str) -> list:
    pts = []
    for item in text.split(";"):
        item = item.strip()
        if item.lower() in ("inf", "infinity"):
            pts.append(INFINITY)
            continue
        parts = item.split(",")
        if len(parts) != 2:
            raise UsageError(f"bad point {item!r}; use x,y or inf")
        pts.append(complex(float(parts[0]), float(parts[1])))
    return pts


def _grid_n(text: str) -> int:
    n = int(text)
    if not 8 <= n <= 1024:
        raise argparse.ArgumentTypeError("N must lie in [8, 1024]")
    return n


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schwarzlab", description="Schwarzian-derivative laboratory", epilog=HELP_EPILOG,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, map_=True, grid=True):
        sp.add_argument("--domain", default="disk")
        sp.add_argument("--margin", type=_positive, default=1e-3)
        if map_:
            sp.add_argument("--h", default="z")
            sp.add_argument("--g", default="0")
        if grid:
            sp.add_argument("--N", type=_grid_n, default=64)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--output", "-o")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        return sp

    s = common(sub.add_parser("schwarzian", help="harmonic Schwarzian at a point"), grid=False)
    s.add_argument("--at", required=True)
    common(sub.add_parser("norm", help="Schwarzian norm estimate"))
    s = common(sub.add_parser("hypnorm", help="hyperbolic norm of a dilatation"))
    s.add_argument("--omega", help="analytic self-map of the disk (default: dilatation of h, g)")
    common(sub.add_parser("audit", help="inequality audit"))
    s = common(sub.add_parser("univalence", help="collision search"), grid=False)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--eps-sep", type=_positive, default=1e-6)
    s = common(sub.add_parser("crossratio", help="cross-ratio of four points"), map_=False, grid=False)
    s.add_argument("--points", required=True, help='"x,y;x,y;x,y;x,y", a point may be "inf"')
    s = common(sub.add_parser("qcircle", help="quasicircle constant of a curve"), grid=False)
    s.add_argument("--curve", help="CSV with header t,x,y")
    s.add_argument("--r", type=float, default=0.9, help="level of the image curve when no --curve is given")
    s.add_argument("--quadruples", type=int, default=100_000)
    s = common(sub.add_parser("reflect", help="reflection across a circle, line or level curve"), map_=False, grid=False)
    s.add_argument("--target", default="level", help="circle:C,R | line:P,DIR | level (uses --domain and --rho)")
    s.add_argument("--rho", type=float, default=0.9)
    s.add_argument("--at", required=True)
    s = common(sub.add_parser("extend", help="extension across level curves"))
    s.add_argument("--r", default="0.5,0.7,0.9")
    s.add_argument("--delta-c", type=_positive)
    s.add_argument("--depth", type=_positive, default=0.004)
    s = common(sub.add_parser("affine-audit", help="extended affine family audit"))
    s.add_argument("--a", required=True)
    s.add_argument("--delta", type=_positive, required=True)
    s.add_argument("--d", type=_positive, required=True)
    return p


# ---------------------------------------------------------------------------


def _map(args) -> HarmonicMap:
    return HarmonicMap.from_text(args.h, args.g)


def _domain(args):
    return parse_domain(args.domain, args.margin)


def _cx(z) -> list:
    return [_num(z.real), _num(z.imag)]


def _run(args) -> tuple[dict, list[dict] | None]:
    """Return the JSON payload and optional CSV rows."""
    cmd = args.command
    out: dict = {}
    rows = None
    if cmd == "schwarzian":
        f = _map(args)
        z = _complex(args.at)
        val = complex(f.schwarzian(z))
        out = {"value": _cx(val), "checks": [], "skipped_points": 0}
    elif cmd in ("norm", "hypnorm", "audit"):
        dom = _domain(args)
        if cmd == "norm":
            rep = schwarzian_norm(_map(args), dom, args.N)
        elif cmd == "hypnorm":
            src = parse_expression(args.omega) if args.omega else _map(args)
            rep = hyperbolic_norm(src, dom, args.N)
        else:
            rep = inequality_audit(_map(args), dom, args.N)
            if rep.points:
                pts = rep.points
                rows = [
                    {"x": float(z.real), "y": float(z.imag),
                     **{k: float(np.real(v[i])) for k, v in pts.items() if k != "z"}}
                    for i, z in enumerate(pts["z"])
                ]
        out = rep.to_dict()
    elif cmd == "univalence":
        v = univalence_scan(_map(args), _domain(args), args.samples, args.eps_sep)
        out = v.to_dict()
        gap = 1.0 if v.found else 0.0
        out["checks"] = [Check("no_collision", gap, 0.0, -gap, not v.found).to_dict()]
        out["skipped_points"] = 0
    elif cmd == "crossratio":
        pts = _point_list(args.points)
        if len(pts) != 4:
            raise UsageError("crossratio needs exactly four points")
        val = complex(cross_ratio(*pts))
        out = {"value": _cx(val), "abs": _num(abs(val)), "checks": [], "skipped_points": 0}
    elif cmd == "qcircle":
        if args.curve:
            curve = CurveSample.from_csv(args.curve)
        else:
            from .extension import _image_curve

            curve = _image_curve(_map(args), _domain(args), args.r)[1]
        rep = quasicircle_constant(curve, args.quadruples, seed=args.seed)
        out = rep.to_dict()
    elif cmd == "reflect":
        z = _complex(args.at)
        target = _target(args)
        w = complex(reflect(target, z))
        back = complex(reflect(target, w))
        res = abs(back - z)
        out = {
            "value": _cx(w),
            "checks": [Check("involution", res, 1e-9, 1e-9 - res, res <= 1e-9).to_dict()],
            "skipped_points": 0,
        }
    elif cmd == "extend":
        rs = [float(x) for x in args.r.split(",")]
        f = _map(args)
        rep = extension_report(f, _domain(args), rs, args.N, args.delta_c, args.depth, args.seed)
        out = rep.to_dict()
        d = rep.sup_omega
        kd = (1 + d) / (1 - d)
        defect = max(m.defect for m in rep.rows)
        jac = min(min(m.min_jacobian_inner, m.min_jacobian_outer) for m in rep.rows)
        ik = max(m.interior_K for m in rep.rows)
        checks = [
            Check("continuity", defect, 1e-8, 1e-8 - defect, defect < 1e-8),
            Check("jacobian_positive", 0.0, jac, jac, jac > 0),
            Check("interior_K", ik, kd, kd - ik, ik <= kd + 1e-9),
            Check("K_variation", rep.k_variation, 0.25, 0.25 - rep.k_variation, rep.k_bounded),
        ]
        out["checks"] = [c.to_dict() for c in checks]
        out["skipped_points"] = 0
        rows = rep.csv_rows()
    elif cmd == "affine-audit":
        rep = extended_affine_audit(_map(args), _domain(args), _complex(args.a), args.delta, args.d, args.N)
        out = rep.to_dict()
        pts = rep.points
        rows = [
            {"x": float(z.real), "y": float(z.imag), "residual": float(pts["residual"][i]),
             "moebius_factor": float(pts["moebius_factor"][i]), "tail_factor": float(pts["tail_factor"][i])}
            for i, z in enumerate(pts["z"])
        ]
    return out, rows


def _target(args):
    spec = args.target
    if spec == "level":
        return Level(_domain(args), args.rho)
    kind, _, rest = spec.partition(":")
    parts = [s.strip() for s in rest.split(",")]
    if kind == "circle" and len(parts) == 2:
        return Circle(_complex(parts[0]), float(parts[1]))
    if kind == "line" and len(parts) == 2:
        return Line(_complex(parts[0]), _complex(parts[1]))
    raise UsageError(f"bad reflection target {spec!r}")


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "command")}
    return cfg


def _render(args, payload: dict, rows) -> str:
    if args.format == "csv":
        if rows is None:
            raise UsageError(f"csv output is only available for per-point dumps (audit, affine-audit, extend)")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["x", "y"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()
    doc = {"command": args.command, "config": _config(args)}
    doc.update(payload)
    doc["version"] = __version__
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        payload, rows = _run(args)
        text = _render(args, payload, rows)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        print(parser.format_usage() + "\n" + HELP_EPILOG, file=sys.stderr)
        return 1
    except (SchwarzlabError, ValueError, ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = any(not c["pass"] for c in payload.get("checks", []))
    return 2 if failed else 0


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
