"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 input/parse error. Errors are
printed to stderr as ``error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import math
import os
import sys

import numpy as np

from . import fixtures, kernels
from .audit import AuditConfig, audit_fixture, summarize, validate_frame
from .coulomb import SIN, coulomb_fix, connection_form, functional, trace_monotone
from .decomposition import (
    DecompConfig,
    certify,
    clipped,
    decompose_ball,
    refine_cover,
    zbar,
)
from .errors import FormatError, GaugeLabError, ShapeError
from .io import SCHEMA_VERSION, dumps, jsonable, read_field, write_field
from .lattice import Lattice, ScalarField
from .radius import comparability_audit, norm_report, radius_field
from .regularity import (
    ScaleConfig,
    a0_radius_field,
    curvature_radius_field,
    degree_report,
    regularity_radius_field,
    singular_set,
    SphereShell,
)
from .su2 import GaugeField, curvature_density, gauge_transform

RNG_NAME = "PCG64 (numpy default_rng)"
# options that affect speed only and stay out of reports
_UNREPORTED = {"threads", "report", "format", "func"}


class UsageError(FormatError):
    code = "E_USAGE"


def _ints(text, n=None):
    vals = [int(v) for v in text.split(",")]
    if n is not None and len(vals) == 1:
        vals = vals * n
    return tuple(vals)


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _lattice(args):
    dims = _ints(args.grid, 4)
    if len(dims) != 4:
        raise UsageError("--grid takes one extent or four comma-separated extents")
    spacing = args.spacing if args.spacing is not None else 1.0 / dims[0]
    return Lattice(dims, spacing, args.geometry)


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNREPORTED}


def _emit(args, report, rows=None):
    """Write the report as JSON, or ``rows`` as CSV when ``--format csv``."""
    if args.format == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for r in rows if rows is not None else _flatten(report):
            w.writerow([_cell(v) for v in r])
        text = buf.getvalue()
    else:
        text = dumps(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cell(v):
    v = jsonable(v)
    return repr(v) if isinstance(v, float) else v


def _flatten(obj, prefix=""):
    """``(dotted.key, scalar)`` rows; lists of scalars stay in one cell."""
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], (dict, list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield (prefix.rstrip("."), dumps(obj).strip() if isinstance(obj, (list, tuple)) else obj)


def _base(args, kind):
    return {"schema": SCHEMA_VERSION, "command": kind, "config": _config(args), "rng": RNG_NAME}


def _load_links(path):
    return read_field(path, "links")


def _load_frame(path, lattice=None):
    g = read_field(path, "frame")
    validate_frame(g)
    if lattice is not None and g.lattice != lattice:
        raise ShapeError("frame and links live on different lattices")
    return g


def _connection(args):
    U = _load_links(args.input)
    g = _load_frame(args.frame, U.lattice) if args.frame else None
    V = gauge_transform(U, g) if g is not None else U
    return U, g, connection_form(V, SIN)


def _density(path):
    """Curvature density from a links file, or a scalar file taken as the density."""
    f = read_field(path)
    if isinstance(f, GaugeField):
        return curvature_density(f)
    if isinstance(f, ScalarField):
        return f
    raise FormatError("expected a links or scalar file")


# --- subcommands ----------------------------------------------------------------


def cmd_gen(args):
    lat = _lattice(args) if args.grid else fixtures.default_lattice(args.fixture)
    center = _floats(args.center) if args.center else None
    U, frame = fixtures.make(args.fixture, lat, args.seed, args.beta, center)
    write_field(args.out, U)
    written = [args.out]
    if frame is not None and args.frame_out:
        write_field(args.frame_out, frame)
        written.append(args.frame_out)
    rep = _base(args, "gen")
    rep.update({"fixture": args.fixture, "dims": list(lat.dims), "spacing": lat.spacing,
                "geometry": lat.geometry, "files": written,
                "total_curvature": curvature_density(U).integral()})
    _emit(args, rep)


def cmd_fix(args):
    U = _load_links(args.input)
    g, fr = coulomb_fix(U, args.omega, args.tol, args.max_sweeps, seed=args.start_seed)
    if args.out:
        write_field(args.out, g)
    rep = _base(args, "fix")
    rep.update({
        "residual": fr.residual,
        "sweeps": fr.sweeps,
        "converged": fr.converged,
        "functional": functional(U, g),
        "trace_max_increase": trace_monotone(fr.trace),
        "max_local_increase": fr.max_local_increase,
    })
    rows = [("sweep", "functional")] + list(enumerate(fr.trace))
    _emit(args, rep, rows)
    return 0 if fr.converged else 1


def cmd_norms(args):
    _, _, A = _connection(args)
    u = A.magnitude()
    nr = norm_report(u, eps=tuple(args.eps))
    s = radius_field(u)
    rep = _base(args, "norms")
    rep.update(nr.as_dict())
    rep["s_min"] = s.min()
    rep["comparability_excess"] = (comparability_audit(u, s=s)
                                   if np.isfinite(s.values).any() else math.nan)
    _emit(args, rep)


def cmd_radii(args):
    U, _, A = _connection(args)
    e = curvature_density(U)
    cfg = ScaleConfig(args.eps0, args.eta, args.theta1, args.s_min)
    a0 = a0_radius_field(A, e, cfg.eps0)
    rf = regularity_radius_field(A, e, cfg)
    cr = curvature_radius_field(e, cfg.eps0)
    sing = singular_set(A, cfg, e)
    rep = _base(args, "radii")
    rep.update({
        "scale_config": cfg.as_dict(),
        "a0_min": a0.min(),
        "regularity_min": rf.min(),
        "curvature_min": cr.min(),
        "singular_set": [list(s) for s in sing],
        "singular_count": len(sing),
    })
    rows = [("site", "a0", "regularity", "curvature")]
    for site in np.ndindex(U.lattice.dims):
        rows.append(("-".join(map(str, site)), a0.values[site], rf.values[site], cr.values[site]))
    _emit(args, rep, rows)


def cmd_degree(args):
    g = _load_frame(args.input)
    if args.lo and args.hi:
        shell = SphereShell(_ints(args.lo, 4), _ints(args.hi, 4))
    elif args.center and args.radius is not None:
        shell = SphereShell.around(_floats(args.center), args.radius)
    else:
        raise UsageError("degree needs --lo/--hi or --center/--radius")
    rep = _base(args, "degree")
    rep.update(degree_report(g, shell, args.seed, args.targets))
    _emit(args, rep)


def _decomp_config(args):
    kw = dict(gamma=args.gamma, K0=args.k0, eps0=args.eps0, Lambda=args.budget,
              n_override=args.n_override, c_override=args.c_override)
    if args.test_mode:
        kw = {k: v for k, v in kw.items() if v is not None}
        return DecompConfig.testing(**kw)
    return DecompConfig(**kw)


def cmd_decompose(args):
    e = clipped(_density(args.input))
    lat = e.lattice
    center = _ints(args.center, 4) if args.center else tuple(n // 2 for n in lat.dims)
    radius = args.radius if args.radius is not None else (min(lat.dims) // 2 - 1) * lat.spacing
    cfg = _decomp_config(args)
    d = decompose_ball(e, center, radius, cfg)
    cert = certify(e, d, cfg)
    refined = refine_cover(d, e)
    cert_ref = certify(e, refined, cfg)
    rep = _base(args, "decompose")
    rep.update({
        "decomposition": d.as_dict(),
        "certify": cert.as_dict(),
        "refined_certify": cert_ref.as_dict(),
        "counts": {"annular": d.counts[0], "bubble": d.counts[1]},
        "depth": d.depth,
    })
    rows = [("index", "tag", "stage", "center", "outer_radius", "zbar")]
    for i, reg in enumerate(d.regions):
        rows.append((i, reg.tag, reg.stage, "-".join(map(str, reg.center)), reg.outer,
                     zbar(e, reg.center, reg.outer)))
    _emit(args, rep, rows)
    return 0 if cert.ok and cert_ref.ok else 1


def cmd_audit(args):
    cfg = AuditConfig(args.omega, args.tol, args.max_sweeps, seed=args.seed)
    rows = []
    if args.input:
        U = _load_links(args.input)
        g = _load_frame(args.frame, U.lattice) if args.frame else None
        rows += audit_fixture("input", U, g, cfg)[0]
    else:
        names = args.fixtures.split(",") if args.fixtures else list(fixtures.NAMES)
        for name in names:
            seeds = range(args.seeds) if name in ("random", "pure_gauge", "smooth_random") else [0]
            for s in seeds:
                lat = _lattice(args) if args.grid else fixtures.default_lattice(name)
                U, g = fixtures.make(name, lat, s, args.beta)
                label = f"{name}[{s}]" if len(seeds) > 1 else name
                rows += audit_fixture(label, U, g, cfg)[0]
    rep = _base(args, "audit")
    rep.update(summarize(rows))
    table = [("fixture", "audit", "value", "bound", "passed", "hard")]
    table += [(r.fixture, r.audit, r.value, r.bound, r.passed, r.hard) for r in rows]
    _emit(args, rep, table)
    return 0 if rep["passed"] else 1


# --- parser ---------------------------------------------------------------------


def _common(p, lattice=False):
    if lattice:
        p.add_argument("--grid", help="extent per axis: N or N0,N1,N2,N3")
        p.add_argument("--spacing", type=float, help="lattice spacing h (default 1/N)")
        p.add_argument("--geometry", choices=("torus", "box"), default="torus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, help="kernel threads (default: GRL_THREADS or all cores)")
    p.add_argument("--report", help="report path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    ap = argparse.ArgumentParser(prog="gaugelab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a named fixture as GRF1")
    p.add_argument("--fixture", required=True, choices=fixtures.NAMES)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--center", help="hedgehog centre in length units, comma-separated")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-out")
    _common(p, lattice=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fix", help="Coulomb gauge fixing of a links file")
    p.add_argument("input")
    p.add_argument("--omega", type=float, default=1.7)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-sweeps", type=int, default=5000)
    p.add_argument("--start-seed", type=int, help="start from a seeded random frame")
    p.add_argument("--out", help="frame output path")
    _common(p)
    p.set_defaults(func=cmd_fix)

    p = sub.add_parser("norms", help="norms of |A| for links (optionally gauge-fixed)")
    p.add_argument("input")
    p.add_argument("--frame")
    p.add_argument("--eps", type=float, nargs="+", default=[0.5])
    _common(p)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("radii", help="scale fields and singular set")
    p.add_argument("input")
    p.add_argument("--frame")
    p.add_argument("--eps0", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--theta1", type=float, default=0.01)
    p.add_argument("--s-min", type=float)
    _common(p)
    p.set_defaults(func=cmd_radii)

    p = sub.add_parser("degree", help="degree of a frame on a lattice box shell")
    p.add_argument("input")
    p.add_argument("--lo")
    p.add_argument("--hi")
    p.add_argument("--center", help="shell centre in index units")
    p.add_argument("--radius", type=float, help="shell half-width in index units")
    p.add_argument("--targets", type=int, default=20)
    _common(p)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("decompose", help="annular/bubble cover of a ball")
    p.add_argument("input", help="links file (curvature density) or scalar density file")
    p.add_argument("--center", help="site index, comma-separated (default: middle site)")
    p.add_argument("--radius", type=float)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--k0", type=int, default=3)
    p.add_argument("--eps0", type=float)
    p.add_argument("--budget", type=float, help="energy budget Lambda (default: total + gamma^K0)")
    p.add_argument("--test-mode", action="store_true")
    p.add_argument("--n-override", type=int)
    p.add_argument("--c-override", type=float)
    _common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("audit", help="run the audit suite on fixtures or an input file")
    p.add_argument("input", nargs="?")
    p.add_argument("--frame")
    p.add_argument("--fixtures", help="comma-separated fixture names (default: all)")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.7)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-sweeps", type=int, default=5000)
    _common(p, lattice=True)
    p.set_defaults(func=cmd_audit)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "eps0", 0) is None and args.command == "decompose":
        args.eps0 = 1.0 if args.test_mode else 0.1
    threads = args.threads or os.environ.get("GRL_THREADS")
    if threads:
        kernels.set_threads(int(threads))
    try:
        code = args.func(args)
    except (FormatError, ShapeError) as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[E_IO]: {exc}", file=sys.stderr)
        return 2
    except GaugeLabError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
