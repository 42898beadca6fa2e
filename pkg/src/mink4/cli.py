"""Command-line interface.

    mink4 meridian    build a meridian surface and tabulate its invariants
    mink4 analyze     invariants and point classes of a sampled surface (CSV)
    mink4 verify      profile, frame and integrability residuals of a meridian surface
    mink4 reconstruct rebuild a surface from an invariant CSV
    mink4 roundtrip   measure, rebuild and compare a meridian surface

Exit status: 0 success, 2 a verification failed beyond tolerance, 1 error.
MINK4_THREADS caps the number of BLAS/OpenMP threads.
"""

import os

_threads = os.environ.get("MINK4_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import logging  # noqa: E402
import sys  # noqa: E402
from dataclasses import dataclass, field  # noqa: E402
from typing import Optional  # noqa: E402

import numpy as np  # noqa: E402

from . import constants  # noqa: E402
from .errors import CompatibilityTooLarge, ConfigError, GeometryError  # noqa: E402
from .io import dumps_json, write_csv, write_json, write_obj  # noqa: E402
from .lorentz import CausalClass, causal_character, inner  # noqa: E402

log = logging.getLogger("mink4")

COMMANDS = ("meridian", "analyze", "verify", "reconstruct", "roundtrip")
FORMATS = ("csv", "obj", "json")
MESH_HEADER = ["u", "v", "x1", "x2", "x3", "x4", "E", "F", "G",
               "k", "kappa", "K", "nu", "lambda", "mu", "H2"]


@dataclass
class RunConfig:
    command: str
    spec: Optional[object] = None
    input: Optional[str] = None
    initial: Optional[str] = None
    grid: tuple = (41, 41)
    width: float = 0.4
    base: Optional[tuple] = None
    fd_step: float = 5e-3
    fd_order: int = 8
    reortho: int = constants.REORTHO_EVERY
    mt_tol: float = constants.MT_TOL
    verify_tol: float = 1e-8
    position_tol: float = 1e-6
    compat_refuse: float = constants.COMPAT_REFUSE
    perturb: float = 0.0
    out: Optional[str] = None
    fmt: Optional[str] = None
    report: Optional[str] = None
    extra: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _range(text, name):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except (ValueError, AttributeError):
        raise ConfigError(name, f"expected lo:hi, got {text!r}") from None
    if not lo < hi:
        raise ConfigError(name, "range must be increasing")
    return lo, hi


def _grid(text):
    try:
        parts = [int(x) for x in str(text).lower().split("x")]
    except ValueError:
        raise ConfigError("grid", f"expected NxM, got {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 2:
        raise ConfigError("grid", "need two resolutions, each at least 2")
    return tuple(parts)


def _pair(text, name):
    try:
        a, b = (float(x) for x in str(text).split(","))
    except ValueError:
        raise ConfigError(name, f"expected a,b, got {text!r}") from None
    return a, b


def build_parser():
    p = _Parser(prog="mink4", description="Marginally trapped surfaces in R^4_1.")
    sub = p.add_subparsers(dest="command")

    def spec_args(sp):
        g = sp.add_argument_group("surface")
        g.add_argument("--spec", help="MeridianSpec JSON file (instead of the flags below)")
        g.add_argument("--axis", choices=["timelike", "spacelike"])
        g.add_argument("--a", type=float)
        g.add_argument("--c", type=float)
        g.add_argument("--b", type=float, default=0.0)
        g.add_argument("--sign", choices=["+", "-"], default="+")
        g.add_argument("--u", help="u range lo:hi")
        g.add_argument("--v", help="v range lo:hi")

    def out_args(sp, default_grid):
        sp.add_argument("--grid", default=default_grid, help="resolution NxM")
        sp.add_argument("--out", help="output path ('-' or omitted: stdout for json)")
        sp.add_argument("--format", dest="fmt", choices=FORMATS)

    sp = sub.add_parser("meridian", help="build a meridian surface")
    spec_args(sp)
    out_args(sp, "41x41")
    sp.add_argument("--mt-tol", type=float, default=constants.MT_TOL)

    sp = sub.add_parser("analyze", help="analyze a sampled surface")
    sp.add_argument("--input", required=False)
    out_args(sp, "0x0")

    sp = sub.add_parser("verify", help="verify residuals of a meridian surface")
    spec_args(sp)
    out_args(sp, "9x9")
    sp.add_argument("--tol", dest="verify_tol", type=float, default=1e-8)
    sp.add_argument("--width", type=float, default=0.4)
    sp.add_argument("--perturb-profile", dest="perturb", type=float, default=0.0,
                    help="add DELTA*u^2 to the profile g before checking it")

    sp = sub.add_parser("reconstruct", help="rebuild a surface from invariants")
    sp.add_argument("--input")
    sp.add_argument("--initial", help="JSON with x, y, n1, n2, z of the base frame")
    sp.add_argument("--base", help="base node parameters u,v (default: centre node)")
    sp.add_argument("--reortho", type=int, default=constants.REORTHO_EVERY)
    sp.add_argument("--compat-refuse", type=float, default=constants.COMPAT_REFUSE)
    sp.add_argument("--report", help="JSON diagnostics path")
    out_args(sp, "0x0")

    sp = sub.add_parser("roundtrip", help="measure, rebuild and compare")
    spec_args(sp)
    out_args(sp, "101x101")
    sp.add_argument("--width", type=float, default=0.4)
    sp.add_argument("--base", help="base point u,v (default: middle of the meridian ranges)")
    sp.add_argument("--fd-step", type=float, default=5e-3)
    sp.add_argument("--fd-order", type=int, default=8, choices=[2, 4, 6, 8])
    sp.add_argument("--reortho", type=int, default=constants.REORTHO_EVERY)
    sp.add_argument("--tol", dest="position_tol", type=float, default=1e-6)
    return p


def _spec_from(ns_or_doc):
    from .meridian import MeridianSpec

    get = (ns_or_doc.get if isinstance(ns_or_doc, dict)
           else lambda k, d=None: getattr(ns_or_doc, k, d))
    path = get("spec")
    if isinstance(path, dict):
        doc = path
    elif path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError("spec", str(exc)) from None
    else:
        for name in ("axis", "a", "c"):
            if get(name) is None:
                raise ConfigError(name, "required")
        doc = {"axis": get("axis"), "a": get("a"), "c": get("c"),
               "b": get("b", 0.0) if get("b", 0.0) is not None else 0.0,
               "sign": get("sign", "+") or "+"}
        for name in ("u", "v"):
            r = get(name)
            if r is not None:
                doc[name] = list(_range(r, name)) if isinstance(r, str) else list(r)
    try:
        return MeridianSpec.from_dict(doc)
    except GeometryError as exc:
        raise ConfigError(_field_of(exc, doc), str(exc)) from None
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(_field_of(exc, doc), str(exc)) from None


def _field_of(exc, doc):
    """Best guess at the option an invalid MeridianSpec complains about."""
    msg = str(exc)
    if "|a|" in msg or msg.startswith("a ") or "a = 0" in msg:
        return "a"
    for key, name in (("u_range", "u"), ("v_range", "v"), ("validity", "u")):
        if key in msg:
            return name
    for name in ("sign", "c", "b"):
        if msg.startswith(name + " ") or msg.startswith(f"'{name}'"):
            return name
    if "Axis" in msg or "axis" in msg:
        return "axis"
    return "spec"


_DOC_KEYS = {"command", "spec", "input", "initial", "grid", "width", "base", "fd_step",
             "fd_order", "reortho", "mt_tol", "verify_tol", "position_tol",
             "compat_refuse", "perturb", "out", "format", "report"}


def parse_config(args):
    """RunConfig from a list of CLI arguments or a JSON-like dict."""
    if isinstance(args, dict):
        return _config_from_doc(args)
    ns = build_parser().parse_args(list(args))
    if ns.command is None:
        raise ConfigError("command", f"one of {', '.join(COMMANDS)} is required")
    cfg = RunConfig(command=ns.command)
    if ns.command in ("meridian", "verify", "roundtrip"):
        cfg.spec = _spec_from(ns)
    if ns.command in ("analyze", "reconstruct"):
        if not ns.input:
            raise ConfigError("input", "required")
        cfg.input = ns.input
    grid = getattr(ns, "grid", None)
    if grid and grid != "0x0":
        cfg.grid = _grid(grid)
    for name in ("width", "fd_step", "fd_order", "reortho", "mt_tol", "verify_tol",
                 "position_tol", "compat_refuse", "perturb", "out", "fmt", "report",
                 "initial"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if getattr(ns, "base", None):
        cfg.base = _pair(ns.base, "base")
    return _validate(cfg)


def _config_from_doc(doc):
    unknown = set(doc) - _DOC_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    if doc.get("command") not in COMMANDS:
        raise ConfigError("command", f"one of {', '.join(COMMANDS)} is required")
    cfg = RunConfig(command=doc["command"])
    if cfg.command in ("meridian", "verify", "roundtrip"):
        if "spec" not in doc:
            raise ConfigError("spec", "required")
        cfg.spec = _spec_from({"spec": doc["spec"]})
    if cfg.command in ("analyze", "reconstruct"):
        if not doc.get("input"):
            raise ConfigError("input", "required")
    for key, value in doc.items():
        if key in ("command", "spec"):
            continue
        if key == "grid":
            value = _grid(value if isinstance(value, str) else "x".join(map(str, value)))
        if key == "base" and value is not None:
            value = tuple(float(x) for x in value)
        setattr(cfg, "fmt" if key == "format" else key, value)
    return _validate(cfg)


def _validate(cfg):
    if cfg.fmt is None and cfg.out and cfg.out != "-":
        ext = os.path.splitext(cfg.out)[1].lstrip(".").lower()
        cfg.fmt = ext if ext in FORMATS else None
        if cfg.fmt is None:
            raise ConfigError("format", f"cannot infer format from {cfg.out!r}")
    cfg.fmt = cfg.fmt or "json"
    if cfg.fmt not in FORMATS:
        raise ConfigError("format", f"one of {', '.join(FORMATS)}")
    if cfg.fmt in ("csv", "obj") and not cfg.out:
        raise ConfigError("out", f"{cfg.fmt} output needs a file path")
    if cfg.fmt == "obj" and cfg.command not in ("meridian", "reconstruct"):
        raise ConfigError("format", f"{cfg.command} writes csv or json")
    if min(cfg.grid) < 2:
        raise ConfigError("grid", "resolutions must be at least 2")
    for name in ("width", "fd_step", "mt_tol", "verify_tol", "position_tol", "compat_refuse"):
        if not float(getattr(cfg, name)) > 0:
            raise ConfigError(name, "must be positive")
    return cfg


# ---------------------------------------------------------------------------
# commands

def export_mesh(path, u_nodes, v_nodes, positions, scalars=None, fmt="csv", header=None):
    """Write a lattice of positions (nu, nv, 4) plus per-node scalars.

    csv: one row per node, v varying fastest; obj: quad mesh of (x1, x2, x3)
    with an x4 sidecar; json: lists keyed by column name.
    """
    u_nodes = np.asarray(u_nodes, dtype=float)
    v_nodes = np.asarray(v_nodes, dtype=float)
    positions = np.asarray(positions, dtype=float)
    scalars = dict(scalars or {})
    U, V = np.meshgrid(u_nodes, v_nodes, indexing="ij")
    cols = {"u": U, "v": V}
    for i in range(4):
        cols[f"x{i + 1}"] = positions[..., i]
    cols.update(scalars)
    header = header or list(cols)
    if fmt == "obj":
        return write_obj(path, positions)
    table = np.stack([np.asarray(cols[h], dtype=float).ravel() for h in header], axis=-1)
    if fmt == "csv":
        write_csv(path, header, table)
        return path
    return write_json(path, {"columns": header, "rows": table})


def _surface_table(patch, u_nodes, v_nodes, mt_tol):
    from .invariants import mt_normal_frame, sigma_decomposition
    from .surface import (curvature_invariants, first_form, mean_curvature_vector,
                          orthonormal_normal_frame, second_coeffs)

    U, V = np.meshgrid(u_nodes, v_nodes, indexing="ij")
    jet = patch.jet(U, V)
    ff = first_form(jet)
    fi = curvature_invariants(ff, second_coeffs(jet, orthonormal_normal_frame(jet)))
    H = mean_curvature_vector(jet, ff)
    frame = mt_normal_frame(jet, mt_tol)
    nu, lam, mu = sigma_decomposition(jet, frame)
    scal = {"E": ff.E, "F": ff.F, "G": ff.G, "k": fi.k, "kappa": fi.kappa, "K": fi.K,
            "nu": nu, "lambda": lam, "mu": mu, "H2": inner(H, H)}
    return jet.z, scal


def cmd_meridian(cfg):
    from .meridian import build_meridian_surface

    spec = cfg.spec
    patch = build_meridian_surface(spec)
    u_nodes = np.linspace(*spec.u_range, cfg.grid[0])
    v_nodes = np.linspace(*spec.v_range, cfg.grid[1])
    pos, scal = _surface_table(patch, u_nodes, v_nodes, cfg.mt_tol)
    if cfg.fmt == "json":
        report = {
            "command": "meridian",
            "spec": spec.to_dict(),
            "grid": list(cfg.grid),
            "max_abs_H2": float(np.max(np.abs(scal["H2"]))),
            "columns": MESH_HEADER,
            "rows": _rows(u_nodes, v_nodes, pos, scal),
        }
        return 0, _emit(cfg, report)
    export_mesh(cfg.out, u_nodes, v_nodes, pos, scal, cfg.fmt, MESH_HEADER)
    return 0, None


def _rows(u_nodes, v_nodes, pos, scal):
    U, V = np.meshgrid(u_nodes, v_nodes, indexing="ij")
    cols = [U, V] + [pos[..., i] for i in range(4)] + [scal[h] for h in MESH_HEADER[6:]]
    return np.stack([np.asarray(c, float).ravel() for c in cols], -1)


def _emit(cfg, report):
    text = dumps_json(report)
    if cfg.out and cfg.out != "-":
        write_json(cfg.out, report)
    else:
        sys.stdout.write(text)
    return report


def cmd_analyze(cfg):
    from .invariants import PointClass, classify, mt_normal_frame, sigma_decomposition
    from .surface import (GridPatch, curvature_invariants, first_form,
                          mean_curvature_vector, orthonormal_normal_frame, second_coeffs)

    patch = GridPatch.from_csv(cfg.input)
    jets = patch.jet_grid()
    rows = []
    classes = {}
    ii, jj = np.nonzero(patch.available)
    for i, j in zip(ii, jj):
        jet = jets[i, j]
        ff = first_form(jet)
        fi = curvature_invariants(ff, second_coeffs(jet, orthonormal_normal_frame(jet)))
        H = mean_curvature_vector(jet, ff)
        hclass = causal_character(H, tol=cfg.mt_tol) if np.linalg.norm(H) > \
            constants.H_ZERO_TOL else CausalClass.ZERO
        nu = lam = mu = np.nan
        if hclass is CausalClass.LIGHTLIKE:
            try:
                nu, lam, mu = (float(x) for x in sigma_decomposition(jet, mt_normal_frame(jet, cfg.mt_tol)))
            except GeometryError:
                pass
        flags = classify(fi, None if np.isnan(nu) else nu, None if np.isnan(lam) else lam, hclass)
        names = sorted(f.name for f in PointClass if f in flags and f.name != "NONE")
        label = "|".join(names) or "NONE"
        classes[label] = classes.get(label, 0) + 1
        rows.append([patch.u_nodes[i], patch.v_nodes[j], ff.E, ff.F, ff.G, fi.L, fi.M, fi.N,
                     fi.k, fi.kappa, fi.K, inner(H, H), nu, lam, mu, label])
    header = ["u", "v", "E", "F", "G", "L", "M", "N", "k", "kappa", "K", "H2",
              "nu", "lambda", "mu", "class"]
    if cfg.fmt == "csv":
        from .io import fmt

        with open(cfg.out, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join([fmt(x) for x in r[:-1]] + [r[-1]]) + "\n")
        return 0, None
    report = {
        "command": "analyze",
        "input": os.path.basename(cfg.input),
        "points": len(rows),
        "class_counts": dict(sorted(classes.items())),
        "columns": header[:-1],
        "rows": [r[:-1] for r in rows],
        "classes": [r[-1] for r in rows],
    }
    return 0, _emit(cfg, report)


def _perturbed_profile(profile, delta):
    from .meridian import ProfileCurve

    return ProfileCurve(
        g=lambda u: profile.g(u) + delta * np.asarray(u) ** 2,
        gdot=lambda u: profile.gdot(u) + 2 * delta * np.asarray(u),
        gddot=lambda u: profile.gddot(u) + 2 * delta,
        interval=profile.interval, axis=profile.axis, a=profile.a, sign=profile.sign,
    )


def cmd_verify(cfg):
    from .invariants import MeasuredInvariantField, frenet_residuals, integrability_residuals
    from .meridian import mt_condition, ode_residual, principal_reparametrize, profile_curve

    spec = cfg.spec
    prof = profile_curve(spec)
    if cfg.perturb:
        prof = _perturbed_profile(prof, cfg.perturb)
    us = np.linspace(*spec.u_range, 50)
    checks = {
        "ode_residual": float(np.max(np.abs(ode_residual(prof, us)))),
        "mt_condition": float(np.max(np.abs(mt_condition(prof, us)))),
    }
    tols = {"ode_residual": cfg.verify_tol, "mt_condition": cfg.verify_tol}
    if not cfg.perturb:
        base = (0.5 * sum(spec.u_range), 0.5 * sum(spec.v_range))
        w = 0.5 * cfg.width
        patch = principal_reparametrize(spec, (-w, w), (-w, w), base=base)
        n = cfg.grid[0]
        s = np.linspace(-0.8 * w, 0.8 * w, n)
        P, Q = np.meshgrid(s, s, indexing="ij")
        _, fr = frenet_residuals(patch, P, Q)
        field = MeasuredInvariantField(patch)
        sq = field.metric(P, Q)
        integ = integrability_residuals(field, P, Q, *sq)
        checks["frenet_residual"] = fr
        checks["integrability_residual"] = float(np.max(np.abs(integ)))
        tols["frenet_residual"] = 1e-6
        tols["integrability_residual"] = 1e-5
    failing = sorted(k for k, val in checks.items() if not val <= tols[k])
    report = {
        "command": "verify",
        "spec": spec.to_dict(),
        "perturb_profile": cfg.perturb,
        "residuals": checks,
        "tolerances": tols,
        "failing": failing,
        "passed": not failing,
    }
    if cfg.fmt != "json":
        raise ConfigError("format", "verify writes json")
    _emit(cfg, report)
    return (2 if failing else 0), report


def _default_initial():
    s = 1.0 / np.sqrt(2.0)
    from .bonnet import FrameState

    return FrameState(np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0]),
                      np.array([0, 0, s, s]), np.array([0, 0, -s, s]), np.zeros(4))


def cmd_reconstruct(cfg):
    from .bonnet import FrameState, integrate
    from .invariants import LatticeInvariantField
    from .lorentz import NULL_PAIR_GRAM, LorentzFrame

    field = LatticeInvariantField.from_csv(cfg.input)
    if cfg.initial:
        with open(cfg.initial) as fh:
            d = json.load(fh)
        try:
            initial = FrameState(*(np.asarray(d[k], float) for k in ("x", "y", "n1", "n2", "z")))
        except KeyError as exc:
            raise ConfigError("initial", f"missing {exc}") from None
    else:
        initial = _default_initial()
    LorentzFrame(initial.as_array()[:4], NULL_PAIR_GRAM, initial.z).check()
    u_nodes, v_nodes = field.u_nodes, field.v_nodes
    if cfg.base is None:
        base = (len(u_nodes) // 2, len(v_nodes) // 2)
    else:
        base = (int(np.argmin(np.abs(u_nodes - cfg.base[0]))),
                int(np.argmin(np.abs(v_nodes - cfg.base[1]))))
    try:
        res = integrate(field, initial, u_nodes, v_nodes, base,
                        reortho_every=cfg.reortho, refuse=cfg.compat_refuse)
    except CompatibilityTooLarge as exc:
        report = {"command": "reconstruct", "error": str(exc), "failing": ["compatibility"]}
        if cfg.report:
            write_json(cfg.report, report)
        log.error("%s", exc)
        return 2, report
    report = {
        "command": "reconstruct",
        "input": os.path.basename(cfg.input),
        "grid": [len(u_nodes), len(v_nodes)],
        "base_index": list(base),
        "diagnostics": res.diagnostics,
    }
    if cfg.out:
        if cfg.fmt == "json":
            export_mesh(cfg.out, u_nodes, v_nodes, res.positions, fmt="json")
        else:
            export_mesh(cfg.out, u_nodes, v_nodes, res.positions, fmt=cfg.fmt)
    if cfg.report:
        write_json(cfg.report, report)
    elif not cfg.out or cfg.fmt != "json":
        sys.stdout.write(dumps_json(report))
    return 0, report


def cmd_roundtrip(cfg):
    from .bonnet import roundtrip

    n = cfg.grid[0]
    if cfg.grid[0] != cfg.grid[1]:
        raise ConfigError("grid", "roundtrip uses a square principal grid")
    report, _ = roundtrip(cfg.spec, width=cfg.width, n=n, base_uv=cfg.base,
                          reortho_every=cfg.reortho, fd_step=cfg.fd_step,
                          fd_order=cfg.fd_order)
    report = {"command": "roundtrip", **report,
              "position_tolerance": cfg.position_tol,
              "passed": report["max_position_error"] < cfg.position_tol}
    if cfg.fmt != "json":
        raise ConfigError("format", "roundtrip writes json")
    _emit(cfg, report)
    return (0 if report["passed"] else 2), report


_COMMANDS = {
    "meridian": cmd_meridian,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "reconstruct": cmd_reconstruct,
    "roundtrip": cmd_roundtrip,
}


def run(cfg):
    """Execute a RunConfig; returns the exit status."""
    try:
        status, _ = _COMMANDS[cfg.command](cfg)
        return status
    except (GeometryError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
