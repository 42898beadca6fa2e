"""Shared builders for the test suite."""

import numpy as np

from mink4.invariants import FunctionInvariantField, InvariantField
from mink4.lorentz import ETA
from mink4.meridian import MeridianSpec, closed_form_invariants
from mink4.surface import SecondOrderJet

S0 = MeridianSpec("timelike", 1.0, 1.0, 0.0, "+")
S1 = MeridianSpec("spacelike", 0.5, 1.0, 0.0, "+")

# one "PASS"/"FAIL" line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def random_lorentz(rng, max_rapidity=2.0):
    """Proper orthochronous Lorentz matrix: spatial rotation times a boost."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    rot = np.eye(4)
    rot[:3, :3] = q
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    phi = rng.uniform(-max_rapidity, max_rapidity)
    boost = np.eye(4)
    boost[:3, :3] += (np.cosh(phi) - 1.0) * np.outer(n, n)
    boost[:3, 3] = boost[3, :3] = np.sinh(phi) * n
    boost[3, 3] = np.cosh(phi)
    return rot @ boost


def null_frame_from(lam):
    """Rows x, y, n1, n2 obtained by mapping the standard null frame by lam."""
    s = 1.0 / np.sqrt(2.0)
    std = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, s, s], [0, 0, -s, s]])
    return std @ lam.T


def closed_form_field(spec, patch, domain, step=1e-3, order=8):
    """Seven invariants of a principal meridian patch from the closed forms."""

    def fn(p, q):
        u, _ = patch.to_uv(p, q)
        c = closed_form_invariants(spec, u)
        return np.stack(
            np.broadcast_arrays(c.gamma1, c.gamma2, c.nu, c.lam, c.mu, c.beta1, c.beta2),
            axis=-1,
        )

    return FunctionInvariantField(fn, domain, step=step, order=order)


class CachedField(InvariantField):
    """Memoises values and partials of an expensive field by sample points."""

    def __init__(self, base):
        super().__init__(base.domain)
        self.base = base
        self.step, self.order = base.step, base.order
        self._memo = {}

    def _h(self, u, v):
        return self.base._h(u, v)

    def _get(self, kind, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        key = (kind, u.shape, u.tobytes(), v.tobytes())
        if key not in self._memo:
            self._memo[key] = getattr(self.base, kind)(u, v)
        return self._memo[key]

    def values(self, u, v):
        return self._get("values", u, v)

    def partials(self, u, v):
        return self._get("partials", u, v)

    def mu_partials(self, u, v):
        return self._get("mu_partials", u, v)


def sphere_jet(u, v):
    """Unit sphere in {x4 = 0}: z = (cos u cos v, cos u sin v, sin u, 0)."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    z0 = np.zeros_like(u * v)

    def s(a, b, c):
        return np.stack(np.broadcast_arrays(a, b, c, z0), -1)

    return SecondOrderJet(
        s(cu * cv, cu * sv, su),
        s(-su * cv, -su * sv, cu),
        s(-cu * sv, cu * cv, z0),
        s(-cu * cv, -cu * sv, -su),
        s(su * sv, -su * cv, z0),
        s(-cu * cv, -cu * sv, z0),
    )


def sphere_position(u, v):
    return sphere_jet(u, v).z


def plane_jet(u, v):
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    z0 = np.zeros_like(u * v)
    one = np.ones_like(z0)

    def s(a, b):
        return np.stack(np.broadcast_arrays(a, b, z0, z0), -1)

    return SecondOrderJet(s(u, v), s(one, z0), s(z0, one), s(z0, z0), s(z0, z0), s(z0, z0))


def generic_jet(u, v):
    """A spacelike surface near 0 with nonzero k and kappa."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    z0 = np.zeros_like(u * v)
    one = np.ones_like(z0)

    def s(a, b, c, d):
        return np.stack(np.broadcast_arrays(a, b, c, d), -1)

    return SecondOrderJet(
        s(u, v, u * u + 0.3 * v * v, 0.5 * u * v + 0.2 * u * u),
        s(one, z0, 2 * u, 0.5 * v + 0.4 * u),
        s(z0, one, 0.6 * v, 0.5 * u),
        s(z0, z0, 2 * one, 0.4 * one),
        s(z0, z0, z0, 0.5 * one),
        s(z0, z0, 0.6 * one, z0),
    )


def minimal_jet(u, v):
    """Maximal (H = 0) spacelike surface Re of an isotropic holomorphic curve.

    With A = f1 + i f2, B = f1 - i f2, C = f4 + f3, D = f4 - f3 and AB = CD
    the curve f is isotropic for the Minkowski bilinear form.
    """
    z = np.asarray(u, float) + 1j * np.asarray(v, float)

    def comp(A, B, C, D):
        return np.stack([(A + B) / 2, (A - B) / 2j, (C - D) / 2, (C + D) / 2], -1)

    one = np.ones_like(z)
    F = comp(z, z**3 / 3, z**2, z**2 / 4)
    f = comp(one, z**2, 2 * z, z / 2)
    fp = comp(0 * z, 2 * z, 2 * one, 0.5 * one)
    return SecondOrderJet(F.real, f.real, -f.imag, fp.real, -fp.imag, -fp.real)


def lorentz_gram(frames):
    return frames @ ETA @ np.swapaxes(frames, -1, -2)
