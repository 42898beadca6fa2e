"""Marginally trapped meridian surfaces on rotational hypersurfaces of R^4_1.

A meridian surface is z(u, v) = f(u) l(v) + g(u) e_axis with f(u) = u:

* timelike axis e4, l(v) an arc-length curve on the unit sphere S^2 in
  span{e1, e2, e3};
* spacelike axis e1, l(v) an arc-length spacelike curve on the de Sitter
  space S^2_1 in span{e2, e3, e4}.

It is marginally trapped exactly when l has constant spherical curvature
a != 0 and g solves the profile equation of the family; both profile
families are available in closed form and are built here.
"""

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate, optimize

from .errors import (
    CurvatureOutOfRange,
    OutOfValidity,
    QuadratureFailure,
    ZeroCurvature,
)
from .surface import AnalyticPatch, SecondOrderJet

__all__ = [
    "Axis",
    "MeridianSpec",
    "SphericalCurve",
    "ProfileCurve",
    "MeridianInvariants",
    "PrincipalMeridianPatch",
    "spherical_curve",
    "profile_curve",
    "validity_interval",
    "build_meridian_surface",
    "closed_form_invariants",
    "mt_condition",
    "mt_defect",
    "ode_residual",
    "principal_reparametrize",
]


class Axis(enum.Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class MeridianSpec:
    """One explicit marginally trapped meridian surface.

    ``sign`` is the +/- branch of the profile equation (+1 or -1).
    ``u_range`` / ``v_range`` default to a patch well inside the validity
    interval when left as None.
    """

    axis: Axis
    a: float
    c: float
    b: float = 0.0
    sign: int = 1
    u_range: Optional[Tuple[float, float]] = None
    v_range: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "sign", _parse_sign(self.sign))
        for name in ("a", "c", "b"):
            x = float(getattr(self, name))
            if not np.isfinite(x):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, x)
        if self.a == 0:
            raise ZeroCurvature("a = 0 gives a minimal surface, not a marginally trapped one")
        if self.c == 0:
            raise ValueError("c must be nonzero")
        if self.axis is Axis.SPACELIKE and abs(self.a) >= 1:
            raise CurvatureOutOfRange("spacelike axis needs |a| < 1")
        lo, hi = validity_interval(self)
        if self.u_range is None:
            object.__setattr__(self, "u_range", (lo + 0.5, lo + 2.0))
        if self.v_range is None:
            object.__setattr__(self, "v_range", (0.0, 3.0))
        for name in ("u_range", "v_range"):
            r = tuple(float(x) for x in getattr(self, name))
            if len(r) != 2 or not r[0] < r[1]:
                raise ValueError(f"{name} must be an increasing pair")
            object.__setattr__(self, name, r)
        if self.u_range[0] <= lo:
            raise OutOfValidity(f"u_range must lie in ({lo:.6g}, inf)")

    @property
    def carrier(self):
        return "S2" if self.axis is Axis.TIMELIKE else "S2_1"

    def to_dict(self):
        return {
            "axis": self.axis.value,
            "a": self.a,
            "c": self.c,
            "b": self.b,
            "sign": "+" if self.sign > 0 else "-",
            "u": list(self.u_range),
            "v": list(self.v_range),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"axis", "a", "c", "b", "sign", "u", "v"}
        if unknown:
            raise ValueError(f"unknown keys: {sorted(unknown)}")
        return cls(
            axis=d["axis"],
            a=d["a"],
            c=d["c"],
            b=d.get("b", 0.0),
            sign=d.get("sign", "+"),
            u_range=tuple(d["u"]) if "u" in d else None,
            v_range=tuple(d["v"]) if "v" in d else None,
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _parse_sign(s):
    if s in ("+", 1, 1.0, "+1"):
        return 1
    if s in ("-", -1, -1.0, "-1"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {s!r}")


# ---------------------------------------------------------------------------
# generating curves

@dataclass(frozen=True)
class SphericalCurve:
    """Arc-length curve l(v) of constant spherical curvature ``a``.

    ``t = l'``, ``dt = t'`` and ``n`` completes {l, t, n} with <n, n> = +1 on
    S2 and -1 on S2_1.
    """

    carrier: str
    a: float
    l: Callable
    t: Callable
    n: Callable
    dt: Callable


def spherical_curve(carrier, a):
    a = float(a)
    if a == 0:
        raise ZeroCurvature("spherical curvature must be nonzero")
    if carrier == "S2":
        rho = np.arctan2(1.0, a)  # arccot(a) in (0, pi)
        sr, cr = np.sin(rho), np.cos(rho)

        def l(v):
            th = np.asarray(v, float) / sr
            z = np.zeros_like(th)
            return np.stack([sr * np.cos(th), sr * np.sin(th), cr + z, z], -1)

        def t(v):
            th = np.asarray(v, float) / sr
            z = np.zeros_like(th)
            return np.stack([-np.sin(th), np.cos(th), z, z], -1)

        def n(v):
            th = np.asarray(v, float) / sr
            z = np.zeros_like(th)
            return np.stack([-cr * np.cos(th), -cr * np.sin(th), sr + z, z], -1)

        def dt(v):
            th = np.asarray(v, float) / sr
            z = np.zeros_like(th)
            return np.stack([-np.cos(th) / sr, -np.sin(th) / sr, z, z], -1)

    elif carrier == "S2_1":
        if abs(a) >= 1:
            raise CurvatureOutOfRange("curves on S2_1 need |a| < 1")
        s = a / np.sqrt(1.0 - a * a)
        R = np.sqrt(1.0 + s * s)

        def l(v):
            th = np.asarray(v, float) / R
            z = np.zeros_like(th)
            return np.stack([z, R * np.cos(th), R * np.sin(th), s + z], -1)

        def t(v):
            th = np.asarray(v, float) / R
            z = np.zeros_like(th)
            return np.stack([z, -np.sin(th), np.cos(th), z], -1)

        def n(v):
            th = np.asarray(v, float) / R
            z = np.zeros_like(th)
            return np.stack([z, -s * np.cos(th), -s * np.sin(th), -R + z], -1)

        def dt(v):
            th = np.asarray(v, float) / R
            z = np.zeros_like(th)
            return np.stack([z, -np.cos(th) / R, -np.sin(th) / R, z], -1)

    else:
        raise ValueError(f"unknown carrier {carrier!r}")
    return SphericalCurve(carrier, a, l, t, n, dt)


# ---------------------------------------------------------------------------
# meridian profiles

@dataclass(frozen=True)
class ProfileCurve:
    """Meridian profile g(u) (with f(u) = u) and its first two derivatives."""

    g: Callable
    gdot: Callable
    gddot: Callable
    interval: Tuple[float, float]
    axis: Axis
    a: float
    sign: int = 1

    def check(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.interval
        if np.any(u <= lo) or np.any(u >= hi) or not np.all(np.isfinite(u)):
            raise OutOfValidity(f"u outside the validity interval ({lo:.6g}, {hi:.6g})")
        return u

    def metric_E(self, u):
        """E = 1 - gdot^2 (timelike axis) or 1 + gdot^2 (spacelike axis)."""
        gd = self.gdot(u)
        return 1.0 - gd * gd if self.axis is Axis.TIMELIKE else 1.0 + gd * gd


def validity_interval(spec):
    """Open u-interval on which the profile of ``spec`` is defined."""
    if spec.axis is Axis.TIMELIKE:
        return 0.0, np.inf
    a, c, s = spec.a, spec.c, spec.sign
    # u^2 - (s a u + c)^2 > 0  <=>  u > (s a c + |c|) / (1 - a^2)
    return (s * a * c + abs(c)) / (1.0 - a * a), np.inf


def profile_curve(spec):
    a, c, s, b = spec.a, spec.c, spec.sign, spec.b

    if spec.axis is Axis.TIMELIKE:
        al2 = a * a + 1.0
        al = np.sqrt(al2)

        def radicand(u):
            w = s * a * u + c
            return w * w + u * u

        def g(u):
            q = np.sqrt(radicand(u))
            return (
                s * a / al2 * q
                + c / al**3 * np.log(al * u + s * a * c / al + q)
                + b
            )

    else:
        be2 = 1.0 - a * a
        be = np.sqrt(be2)

        def radicand(u):
            w = s * a * u + c
            return u * u - w * w

        def g(u):
            q = np.sqrt(radicand(u))
            return (
                s * a / be2 * q
                + c / be**3 * np.log(be * u - s * a * c / be + q)
                + b
            )

    def gdot(u):
        u = np.asarray(u, float)
        return (s * a * u + c) / np.sqrt(radicand(u))

    def gddot(u):
        u = np.asarray(u, float)
        return -c * u / radicand(u) ** 1.5

    return ProfileCurve(g, gdot, gddot, validity_interval(spec), spec.axis, a, s)


def mt_defect(kappa, f, fdot, fddot, gdot, gddot, axis):
    """kappa^2 - (kappa_m f sqrt(E) + gdot)^2 / E for a general meridian.

    Zero exactly when the meridian surface is marginally trapped.
    """
    axis = Axis(axis)
    E = fdot**2 - gdot**2 if axis is Axis.TIMELIKE else fdot**2 + gdot**2
    if np.any(E <= 0):
        raise OutOfValidity("meridian is not spacelike-generating here")
    kappa_m = (fdot * gddot - gdot * fddot) / E**1.5
    return kappa**2 - (kappa_m * f * np.sqrt(E) + gdot) ** 2 / E


def mt_condition(profile, u, kappa=None):
    """Signed marginally-trapped defect of a profile at ``u`` (f = u)."""
    u = profile.check(u)
    kappa = profile.a if kappa is None else kappa
    return mt_defect(kappa, u, 1.0, 0.0, profile.gdot(u), profile.gddot(u), profile.axis)


def ode_residual(profile, u):
    """Residual of the profile equation of the family at ``u``.

    timelike:  u g'' + g' - g'^3 - s a (1 - g'^2)^(3/2)
    spacelike: u g'' + g' + g'^3 - s a (1 + g'^2)^(3/2)
    """
    u = profile.check(u)
    gd, gdd = profile.gdot(u), profile.gddot(u)
    sa = profile.sign * profile.a
    if profile.axis is Axis.TIMELIKE:
        return u * gdd + gd - gd**3 - sa * (1.0 - gd * gd) ** 1.5
    return u * gdd + gd + gd**3 - sa * (1.0 + gd * gd) ** 1.5


# ---------------------------------------------------------------------------
# surfaces

def _axis_vector(axis):
    e = np.zeros(4)
    e[3 if axis is Axis.TIMELIKE else 0] = 1.0
    return e


def _meridian_jet_fn(spec):
    curve = spherical_curve(spec.carrier, spec.a)
    prof = profile_curve(spec)
    e = _axis_vector(spec.axis)

    def jet(u, v):
        u = prof.check(u)
        u, v = np.broadcast_arrays(u, np.asarray(v, float))
        l, t, dt = curve.l(v), curve.t(v), curve.dt(v)
        uu = u[..., None]
        g = prof.g(u)[..., None]
        gd = prof.gdot(u)[..., None]
        gdd = prof.gddot(u)[..., None]
        return SecondOrderJet(
            z=uu * l + g * e,
            zu=l + gd * e,
            zv=uu * t,
            zuu=gdd * e + 0.0 * l,
            zuv=t + 0.0 * uu,
            zvv=uu * dt,
        )

    return jet, curve, prof


def build_meridian_surface(spec, u_range=None, v_range=None):
    """Analytic patch z(u, v) = u l(v) + g(u) e_axis of ``spec``."""
    u_range = tuple(u_range or spec.u_range)
    v_range = tuple(v_range or spec.v_range)
    lo, _ = validity_interval(spec)
    if u_range[0] <= lo:
        raise OutOfValidity(f"u_range must lie in ({lo:.6g}, inf)")
    jet, curve, prof = _meridian_jet_fn(spec)
    patch = AnalyticPatch(jet, (u_range, v_range), metadata={"spec": spec.to_dict()})
    patch.spec = spec
    patch.curve = curve
    patch.profile = prof
    return patch


@dataclass(frozen=True)
class MeridianInvariants:
    k: np.ndarray
    kappa: np.ndarray
    K: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray


def closed_form_invariants(spec, u):
    """Invariants of the marginally trapped meridian surface at ``u``.

    nu, lambda, mu, gamma and beta refer to the geometric frame
    X = (x + y)/sqrt2, Y = (x - y)/sqrt2, with x = z_u/|z_u|, y = z_v/|z_v|,
    N1 = H and N2 the lightlike partner of H.  That is the frame produced by
    principal_reparametrize().

    With w = s a u + c:

    timelike axis, Q = w^2 + u^2::

        k = -a^2 c^2 / u^6, kappa = 0, K = c w / u^4, nu = 0,
        lambda = -(a u + s c)/(a u), mu = -s a c / (2 u^3),
        gamma1 = gamma2 = beta1 = beta2 = -sqrt(Q) / (sqrt2 u^2)

    spacelike axis, Q = u^2 - w^2::

        k = -a^2 c^2 / u^6, kappa = 0, K = -c w / u^4, nu = 0,
        lambda = -(a u + s c)/(a u), mu = s a c / (2 u^3),
        gamma1 = gamma2 = beta1 = beta2 = -sqrt(Q) / (sqrt2 u^2)
    """
    prof = profile_curve(spec)
    u = prof.check(u)
    a, c, s = spec.a, spec.c, spec.sign
    w = s * a * u + c
    zero = np.zeros_like(u)
    k = -(a * a) * c * c / u**6
    lam = -(a * u + s * c) / (a * u)
    if spec.axis is Axis.TIMELIKE:
        q = np.sqrt(w * w + u * u)
        K = c * w / u**4
        mu = -s * a * c / (2 * u**3)
        gamma = -q / (np.sqrt(2.0) * u * u)
        beta = gamma
    else:
        q = np.sqrt(u * u - w * w)
        K = -c * w / u**4
        mu = s * a * c / (2 * u**3)
        gamma = -q / (np.sqrt(2.0) * u * u)
        beta = gamma
    return MeridianInvariants(k, zero, K, zero, lam, mu, gamma, gamma, beta, beta)


class PrincipalMeridianPatch(AnalyticPatch):
    """A meridian surface re-parametrised by principal lines.

    With psi(u) = int_{u0}^{u} sqrt(E)/f du the new parameters are
    p = psi(u) + (v - v0), q = psi(u) - (v - v0); z_p and z_q point along the
    principal directions (x + y)/sqrt2 and (x - y)/sqrt2.
    """

    source = "analytic-principal"

    def __init__(self, spec, p_range, q_range, base):
        self.spec = spec
        self.u0, self.v0 = float(base[0]), float(base[1])
        jet_uv, self.curve, self.profile = _meridian_jet_fn(spec)
        self._jet_uv = jet_uv
        prof = self.profile
        lo, _ = prof.interval
        if not (self.u0 > lo and np.isfinite(self.u0)):
            raise OutOfValidity("base point outside the validity interval")
        (p0, p1), (q0, q1) = p_range, q_range
        if not (p1 > p0 and q1 > q0):
            raise QuadratureFailure("degenerate parameter interval")
        s_lo, s_hi = 0.5 * (p0 + q0), 0.5 * (p1 + q1)
        pad = 0.05 * (s_hi - s_lo) + 0.02
        self._u_lo = self._invert_scalar(s_lo - pad)
        self._u_hi = self._invert_scalar(s_hi + pad)
        if not self._u_hi > self._u_lo:
            raise QuadratureFailure("degenerate quadrature interval")
        self._build_table()
        super().__init__(self._principal_jet, (p_range, q_range),
                         metadata={"spec": spec.to_dict(), "base": [self.u0, self.v0]})

    # psi and its derivatives ------------------------------------------------
    def dpsi(self, u):
        return np.sqrt(self.profile.metric_E(u)) / u

    def d2psi(self, u):
        prof = self.profile
        sE = np.sqrt(prof.metric_E(u))
        sgn = -1.0 if prof.axis is Axis.TIMELIKE else 1.0
        dsE = sgn * prof.gdot(u) * prof.gddot(u) / sE
        return dsE / u - sE / u**2

    def _psi_quad(self, u):
        val, err = integrate.quad(
            self.dpsi, self.u0, float(u), epsabs=1e-13, epsrel=1e-13, limit=200
        )
        if not np.isfinite(val) or err > 1e-10:
            raise QuadratureFailure(f"quadrature of psi failed at u={u}")
        return val

    def _invert_scalar(self, target):
        lo, _ = self.profile.interval
        a = self.u0
        f0 = -target
        step = 0.1 * max(self.u0 - lo, 0.1) if np.isfinite(lo) else 0.1
        b = a
        for _ in range(200):
            b = b + step if target > 0 else max(lo + (b - lo) * 0.5, b - step)
            if target < 0 and b - lo < 1e-9:
                break
            if (self._psi_quad(b) - target) * f0 <= 0 or f0 == 0:
                return optimize.brentq(
                    lambda x: self._psi_quad(x) - target, min(a, b), max(a, b),
                    xtol=1e-14, rtol=1e-14,
                )
            step *= 1.5
        raise OutOfValidity("principal parameter range leaves the validity interval")

    def _build_table(self):
        psi_vec = np.vectorize(self._psi_quad)
        dom = [self._u_lo, self._u_hi]
        for deg in (24, 48, 96, 192):
            cheb = chebyshev.Chebyshev.interpolate(psi_vec, deg, domain=dom)
            tail = np.max(np.abs(cheb.coef[-4:]))
            if tail < 1e-15:
                break
        self._cheb = cheb
        grid = np.linspace(self._u_lo, self._u_hi, 513)
        self._table_u = grid
        self._table_psi = cheb(grid)
        if np.any(np.diff(self._table_psi) <= 0):
            raise QuadratureFailure("psi is not monotone on the interval")

    def psi(self, u):
        return self._cheb(np.asarray(u, float))

    def u_of(self, s):
        """Invert psi by safeguarded Newton iteration (vectorised)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < self._table_psi[0]) or np.any(s > self._table_psi[-1]):
            raise OutOfValidity("principal parameter outside the tabulated range")
        u = np.interp(s, self._table_psi, self._table_u)
        lo = np.full_like(u, self._u_lo)
        hi = np.full_like(u, self._u_hi)
        for _ in range(60):
            r = self.psi(u) - s
            lo = np.where(r < 0, u, lo)
            hi = np.where(r > 0, u, hi)
            un = u - r / self.dpsi(u)
            bad = (un < lo) | (un > hi)
            un = np.where(bad, 0.5 * (lo + hi), un)
            # stop once the update is at roundoff level everywhere
            done = np.all(np.abs(un - u) <= 8 * np.finfo(float).eps * np.abs(u))
            u = un
            if done:
                break
        return u

    def to_uv(self, p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        return self.u_of(0.5 * (p + q)), self.v0 + 0.5 * (p - q)

    def from_uv(self, u, v):
        s = self.psi(u)
        dv = np.asarray(v, float) - self.v0
        return s + dv, s - dv

    def _principal_jet(self, p, q):
        u, v = self.to_uv(p, q)
        J = self._jet_uv(u, v)
        d1 = self.dpsi(u)
        d2 = self.d2psi(u)
        up = (0.5 / d1)[..., None]
        upp = (-0.25 * d2 / d1**3)[..., None]
        vp, vq = 0.5, -0.5
        zp = J.zu * up + J.zv * vp
        zq = J.zu * up + J.zv * vq
        zpp = J.zuu * up**2 + 2 * J.zuv * up * vp + J.zvv * vp**2 + J.zu * upp
        zpq = J.zuu * up**2 + J.zuv * up * (vp + vq) + J.zvv * vp * vq + J.zu * upp
        zqq = J.zuu * up**2 + 2 * J.zuv * up * vq + J.zvv * vq**2 + J.zu * upp
        return SecondOrderJet(J.z, zp, zq, zpp, zpq, zqq)


def principal_reparametrize(spec, p_range=(-0.2, 0.2), q_range=(-0.2, 0.2), base=None):
    """Principal-line parametrisation of the meridian surface of ``spec``.

    ``base`` = (u0, v0) is the point mapped to (p, q) = (0, 0); by default the
    middle of ``spec.u_range`` and ``spec.v_range``.
    """
    if base is None:
        base = (0.5 * sum(spec.u_range), 0.5 * sum(spec.v_range))
    return PrincipalMeridianPatch(spec, p_range, q_range, base)
