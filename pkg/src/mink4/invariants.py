"""Geometric frame and the seven invariants of a marginally trapped surface.

On a spacelike surface with lightlike mean curvature vector H the geometric
frame is {x, y, n1, n2}: x, y unit principal tangents, n1 = H and n2 the
lightlike normal with <n1, n2> = -1.  Along it the frame moves by

    Z_u = A Z,  Z_v = B Z,   Z = (x, y, n1, n2)

in principal parameters, where A and B are built from seven functions
gamma1, gamma2, nu, lambda, mu, beta1, beta2 and the metric coefficients
sqrt(E), sqrt(G) (see frenet_matrices).
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import constants, fd
from .errors import (
    DegenerateMetricRecovery,
    NotMarginallyTrapped,
    NotMarginallyTrappedData,
    OutOfDomain,
    PrincipalFrameDefect,
)
from .lorentz import CausalClass, inner, null_partner
from .surface import (
    GridPatch,
    curvature_invariants,
    first_form,
    mean_curvature_vector,
    orthonormal_normal_frame,
    principal_directions,
    second_coeffs,
    sigma,
)

__all__ = [
    "NAMES",
    "MTFrame",
    "SevenInvariants",
    "PointClass",
    "mt_normal_frame",
    "frame_at",
    "sigma_decomposition",
    "invariants_from_curvatures",
    "frame_connection",
    "measure_invariants",
    "frenet_matrices",
    "frenet_residuals",
    "integrability_residuals",
    "recover_metric",
    "null_allied_mcv",
    "classify",
    "InvariantField",
    "FunctionInvariantField",
    "LatticeInvariantField",
    "MeasuredInvariantField",
]

#: order of the seven functions in every array of shape (..., 7)
NAMES = ("gamma1", "gamma2", "nu", "lambda", "mu", "beta1", "beta2")
_IDX = {name: i for i, name in enumerate(NAMES)}


@dataclass(frozen=True)
class MTFrame:
    """Geometric frame {x, y, n1, n2} at ``point`` (arrays of shape (..., 4))."""

    x: np.ndarray
    y: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    point: np.ndarray

    def vectors(self):
        """Frame as an array (..., 4, 4) with rows x, y, n1, n2."""
        return np.stack([self.x, self.y, self.n1, self.n2], axis=-2)

    def gram_residual(self):
        """Largest of the ten deviations from the pseudo-orthonormal Gram matrix."""
        return np.max(np.abs(phi_values(self.vectors())), axis=-1)

    def orientation(self):
        """Sign of det(x, y, n1, n2); reported, not normalised."""
        return np.sign(np.linalg.det(self.vectors())).astype(int)

    def swapped(self):
        """The same frame with x and y exchanged."""
        return MTFrame(self.y, self.x, self.n1, self.n2, self.point)

    def __getitem__(self, idx):
        return MTFrame(*(np.asarray(a)[idx] for a in
                         (self.x, self.y, self.n1, self.n2, self.point)))


def phi_values(frames):
    """The ten Gram deviations of frames (..., 4, 4) with rows x, y, n1, n2.

    Order: <x,x>-1, <y,y>-1, <n1,n1>, <n2,n2>, <x,y>, <x,n1>, <x,n2>,
    <y,n1>, <y,n2>, <n1,n2>+1.
    """
    x, y, n1, n2 = (frames[..., i, :] for i in range(4))
    return np.stack(
        [
            inner(x, x) - 1.0,
            inner(y, y) - 1.0,
            inner(n1, n1),
            inner(n2, n2),
            inner(x, y),
            inner(x, n1),
            inner(x, n2),
            inner(y, n1),
            inner(y, n2),
            inner(n1, n2) + 1.0,
        ],
        axis=-1,
    )


@dataclass(frozen=True)
class SevenInvariants:
    gamma1: np.ndarray
    gamma2: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray

    def as_array(self):
        return np.stack(np.broadcast_arrays(*self.astuple()), axis=-1)

    def astuple(self):
        return (self.gamma1, self.gamma2, self.nu, self.lam, self.mu, self.beta1, self.beta2)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(*(arr[..., i] for i in range(7)))


class PointClass(enum.Flag):
    NONE = 0
    FLAT_POINT = enum.auto()
    FLAT_GAUSS = enum.auto()
    FLAT_NORMAL_CONNECTION = enum.auto()
    PARABOLIC = enum.auto()
    MINIMAL = enum.auto()
    MARGINALLY_TRAPPED = enum.auto()
    PARALLEL_H_CANDIDATE = enum.auto()


# ---------------------------------------------------------------------------
# frame and pointwise invariants

def _tangent_coeffs(jet, ff, w):
    """(a, b) with w = a z_u + b z_v for a tangent vector w."""
    a1 = inner(w, jet.zu)
    a2 = inner(w, jet.zv)
    det = ff.E * ff.G - ff.F**2
    return (ff.G * a1 - ff.F * a2) / det, (ff.E * a2 - ff.F * a1) / det


def _combine(jet, c):
    return c[0][..., None] * jet.zu + c[1][..., None] * jet.zv


def mt_normal_frame(jet, tol=constants.MT_TOL):
    """Geometric frame of a marginally trapped surface at every jet point.

    Raises NotMarginallyTrapped when H is zero or not lightlike (relative
    test |<H,H>| <= tol |H|^2), FlatPoint when L = M = N = 0.
    """
    ff = first_form(jet)
    H = mean_curvature_vector(jet, ff)
    hn = np.linalg.norm(H, axis=-1)
    if np.any(hn <= constants.H_ZERO_TOL):
        raise NotMarginallyTrapped("mean curvature vector vanishes")
    if np.any(np.abs(inner(H, H)) > tol * hn**2):
        raise NotMarginallyTrapped("mean curvature vector is not lightlike")
    normals = orthonormal_normal_frame(jet)
    fi = curvature_invariants(ff, second_coeffs(jet, normals))
    d1, d2 = principal_directions(ff, fi)
    x = _combine(jet, (d1[..., 0], d1[..., 1]))
    y = _combine(jet, (d2[..., 0], d2[..., 1]))
    n2 = null_partner(H, normals, tol=tol)
    return MTFrame(x, y, H, n2, np.asarray(jet.z, dtype=float))


def frame_at(patch, u, v, tol=constants.MT_TOL):
    """Geometric frame of ``patch`` at parameter values (u, v)."""
    return mt_normal_frame(patch.jet(u, v), tol)


def sigma_decomposition(jet, frame, tol=constants.PRINCIPAL_TOL, return_defect=False):
    """nu, lambda, mu of the decomposition of sigma in the frame.

    nu = -<(sigma(x,x) - sigma(y,y))/2, n2>, lambda = -<sigma(x,y), n2>,
    mu = -<sigma(x,y), n1>.  The defect is the largest Euclidean norm of
    sigma(x,x) - (1+nu) n1 and sigma(y,y) - (1-nu) n1, relative to |n1|.
    """
    ff = first_form(jet)
    cx = _tangent_coeffs(jet, ff, frame.x)
    cy = _tangent_coeffs(jet, ff, frame.y)
    sxx = sigma(jet, ff, cx, cx)
    sxy = sigma(jet, ff, cx, cy)
    syy = sigma(jet, ff, cy, cy)
    n1, n2 = frame.n1, frame.n2
    nu = -inner(0.5 * (sxx - syy), n2)
    lam = -inner(sxy, n2)
    mu = -inner(sxy, n1)
    scale = np.linalg.norm(n1, axis=-1)
    defect = np.maximum(
        np.linalg.norm(sxx - (1 + nu)[..., None] * n1, axis=-1),
        np.linalg.norm(syy - (1 - nu)[..., None] * n1, axis=-1),
    ) / scale
    if np.any(defect > tol):
        raise PrincipalFrameDefect(
            f"sigma(x,x) or sigma(y,y) leaves the n1 direction by {np.max(defect):.3g}"
        )
    if return_defect:
        return nu, lam, mu, defect
    return nu, lam, mu


def invariants_from_curvatures(k, kappa, K):
    """(mu^2, lambda, nu) from k, kappa, K.

    4 mu^2 = kappa^2 - k, lambda = K / sqrt(kappa^2 - k),
    nu = -kappa / sqrt(kappa^2 - k).  The signs of lambda and nu correspond to
    choosing mu > 0.
    """
    k, kappa, K = (np.asarray(a, dtype=float) for a in (k, kappa, K))
    d = kappa**2 - k
    if np.any(d <= 0):
        raise NotMarginallyTrappedData("kappa^2 - k must be positive")
    r = np.sqrt(d)
    return d / 4.0, K / r, -kappa / r


def _steps(patch, u, v, step):
    if isinstance(patch, GridPatch):
        return np.full_like(u, patch.du), np.full_like(v, patch.dv)
    return step * np.maximum(1.0, np.abs(u)), step * np.maximum(1.0, np.abs(v))


def _check_inside(patch, u, v):
    if not np.all(patch.contains(u, v)):
        raise OutOfDomain("point (or a finite-difference neighbour) leaves the patch")


def _frame_derivatives(patch, u, v, step, order, tol, center, frame_fn=None, with_mu=False):
    """d/du and d/dv of x, y, n1 by central differences of re-evaluated frames.

    With ``with_mu`` the partials of mu are formed from the same neighbours.
    """
    hu, hv = _steps(patch, u, v, step)
    offs = fd.first_offsets(order)
    names = ("x", "y", "n1", "mu") if with_mu else ("x", "y", "n1")
    du = {n: [] for n in names}
    dv = {n: [] for n in names}
    for k in offs:
        for uu, vv, out in ((u + k * hu, v, du), (u, v + k * hv, dv)):
            if isinstance(patch, GridPatch):
                _check_inside(patch, uu, vv)
            if frame_fn is None:
                jet = patch.jet(uu, vv)
                f = mt_normal_frame(jet, tol)
                if with_mu:
                    out["mu"].append(sigma_decomposition(jet, f)[2][..., None])
            else:
                f = frame_fn(uu, vv)
            # principal directions carry a sign convention; keep it continuous
            for name in ("x", "y"):
                w = getattr(f, name)
                s = np.sign(np.sum(w * getattr(center, name), axis=-1))
                out[name].append(w * np.where(s < 0, -1.0, 1.0)[..., None])
            out["n1"].append(f.n1)
    hu4, hv4 = hu[..., None], hv[..., None]
    d_u = {k: fd.first_derivative(s, hu4, order) for k, s in du.items()}
    d_v = {k: fd.first_derivative(s, hv4, order) for k, s in dv.items()}
    return d_u, d_v


def frame_connection(patch, u, v, step=5e-3, order=8, tol=constants.MT_TOL, frame_field=None):
    """gamma1, gamma2, beta1, beta2 at (u, v) by differentiating the frame.

    gamma1 = <D_x x, y>, gamma2 = <D_y y, x>, beta1 = -<D_x n1, n2>,
    beta2 = -<D_y n1, n2>, where D_w for w = a z_u + b z_v is a d/du + b d/dv
    applied to the frame field.  Central differences of the given ``order``
    with step ``step * max(1, |u|)`` (lattice spacing on grid patches).

    ``frame_field(u, v) -> MTFrame`` replaces the geometric frame of the
    patch when given.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    _check_inside(patch, u, v)
    jet = patch.jet(u, v)
    frame = mt_normal_frame(jet, tol) if frame_field is None else frame_field(u, v)
    return _connection(patch, u, v, jet, frame, step, order, tol, frame_field)


def _connection(patch, u, v, jet, frame, step, order, tol, frame_fn=None, with_mu=False):
    ff = first_form(jet)
    ax, bx = _tangent_coeffs(jet, ff, frame.x)
    ay, by = _tangent_coeffs(jet, ff, frame.y)
    d_u, d_v = _frame_derivatives(patch, u, v, step, order, tol, frame, frame_fn, with_mu)

    def along(a, b, name):
        return a[..., None] * d_u[name] + b[..., None] * d_v[name]

    gamma1 = inner(along(ax, bx, "x"), frame.y)
    gamma2 = inner(along(ay, by, "y"), frame.x)
    beta1 = -inner(along(ax, bx, "n1"), frame.n2)
    beta2 = -inner(along(ay, by, "n1"), frame.n2)
    if with_mu:
        return gamma1, gamma2, beta1, beta2, d_u["mu"][..., 0], d_v["mu"][..., 0]
    return gamma1, gamma2, beta1, beta2


def measure_invariants(patch, u, v, step=5e-3, order=8, tol=constants.MT_TOL,
                       with_mu_partials=False):
    """The seven invariants of ``patch`` at (u, v) as an array (..., 7).

    With ``with_mu_partials`` also returns mu_u and mu_v, differenced from
    the same neighbouring frames.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    jet = patch.jet(u, v)
    frame = mt_normal_frame(jet, tol)
    nu, lam, mu = sigma_decomposition(jet, frame)
    out = _connection(patch, u, v, jet, frame, step, order, tol, with_mu=with_mu_partials)
    g1, g2, b1, b2 = out[:4]
    vals = np.stack([g1, g2, nu, lam, mu, b1, b2], axis=-1)
    if with_mu_partials:
        return vals, out[4], out[5]
    return vals


def frenet_matrices(inv, sqrtE, sqrtG):
    """A and B (..., 4, 4) with Z_u = A Z, Z_v = B Z, Z = (x, y, n1, n2)."""
    inv = np.asarray(inv, dtype=float)
    g1, g2, nu, lam, mu, b1, b2 = (inv[..., i] for i in range(7))
    z = np.zeros_like(g1)
    A = np.stack(
        [
            np.stack([z, g1, 1 + nu, z], -1),
            np.stack([-g1, z, lam, mu], -1),
            np.stack([z, mu, b1, z], -1),
            np.stack([1 + nu, lam, z, -b1], -1),
        ],
        -2,
    )
    B = np.stack(
        [
            np.stack([z, -g2, lam, mu], -1),
            np.stack([g2, z, 1 - nu, z], -1),
            np.stack([mu, z, b2, z], -1),
            np.stack([lam, 1 - nu, z, -b2], -1),
        ],
        -2,
    )
    return (np.asarray(sqrtE)[..., None, None] * A,
            np.asarray(sqrtG)[..., None, None] * B)


def frenet_residuals(patch, u, v, inv=None, step=5e-3, order=8, tol=constants.MT_TOL):
    """Residuals of the eight derivative formulas of the geometric frame.

    Left sides D_x Z, D_y Z are measured by differentiating the frame field;
    right sides use ``inv`` (array (..., 7); measured when None).  Returns
    (residuals (..., 8, 4), max Euclidean norm); the rows are D_x x, D_x y,
    D_x n1, D_x n2, D_y x, D_y y, D_y n1, D_y n2.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    _check_inside(patch, u, v)
    jet = patch.jet(u, v)
    frame = mt_normal_frame(jet, tol)
    if inv is None:
        inv = measure_invariants(patch, u, v, step, order, tol)
    ff = first_form(jet)
    ax, bx = _tangent_coeffs(jet, ff, frame.x)
    ay, by = _tangent_coeffs(jet, ff, frame.y)
    d_u, d_v = _frame_derivatives(patch, u, v, step, order, tol, frame)
    # n2 is not among the differentiated fields above; add it
    hu, hv = _steps(patch, u, v, step)
    offs = fd.first_offsets(order)
    n2u = fd.first_derivative(
        [frame_at(patch, u + k * hu, v, tol).n2 for k in offs], hu[..., None], order)
    n2v = fd.first_derivative(
        [frame_at(patch, u, v + k * hv, tol).n2 for k in offs], hv[..., None], order)
    d_u["n2"], d_v["n2"] = n2u, n2v

    Z = frame.vectors()
    one = np.ones_like(u)
    A, B = frenet_matrices(inv, one, one)
    lhs_x = np.stack(
        [ax[..., None] * d_u[n] + bx[..., None] * d_v[n] for n in ("x", "y", "n1", "n2")], -2)
    lhs_y = np.stack(
        [ay[..., None] * d_u[n] + by[..., None] * d_v[n] for n in ("x", "y", "n1", "n2")], -2)
    res = np.concatenate([lhs_x - A @ Z, lhs_y - B @ Z], axis=-2)
    return res, float(np.max(np.linalg.norm(res, axis=-1)))


def recover_metric(inv, mu_u, mu_v):
    """sqrt(E) = mu_u / (mu (2 gamma2 + beta1)), sqrt(G) = mu_v / (mu (2 gamma1 + beta2)).

    Raises DegenerateMetricRecovery on vanishing denominators or numerators
    and on nonpositive results.
    """
    inv = np.asarray(inv, dtype=float)
    g1, g2, mu, b1, b2 = (inv[..., _IDX[n]] for n in ("gamma1", "gamma2", "mu", "beta1", "beta2"))
    den_e = mu * (2 * g2 + b1)
    den_g = mu * (2 * g1 + b2)
    tiny = 1e-14
    if (np.any(np.abs(den_e) <= tiny) or np.any(np.abs(den_g) <= tiny)
            or np.any(np.abs(mu_u) <= tiny) or np.any(np.abs(mu_v) <= tiny)):
        raise DegenerateMetricRecovery("mu_u mu_v = 0 or vanishing denominator")
    sE = mu_u / den_e
    sG = mu_v / den_g
    if not (np.all(sE > 0) and np.all(sG > 0)):
        raise DegenerateMetricRecovery("recovered metric coefficient is not positive")
    return sE, sG


def integrability_residuals(field, u, v, sqrtE=None, sqrtG=None):
    """The six integrability conditions of the frame system at (u, v).

    x = (1/sqrtE) d/du, y = (1/sqrtG) d/dv.  The metric coefficients default
    to the ones recovered from mu (then the first two conditions hold by
    construction).  Returns an array (..., 6) of signed residuals.
    """
    vals = field.values(u, v)
    pu, pv = field.partials(u, v)
    if sqrtE is None or sqrtG is None:
        sE, sG = recover_metric(vals, pu[..., _IDX["mu"]], pv[..., _IDX["mu"]])
        sqrtE = sE if sqrtE is None else sqrtE
        sqrtG = sG if sqrtG is None else sqrtG
    sqrtE = np.asarray(sqrtE, dtype=float)
    sqrtG = np.asarray(sqrtG, dtype=float)
    if not (np.all(sqrtE > 0) and np.all(sqrtG > 0)):
        raise DegenerateMetricRecovery("metric coefficients must be positive")
    g1, g2, nu, lam, mu, b1, b2 = (vals[..., i] for i in range(7))

    def X(name):
        return pu[..., _IDX[name]] / sqrtE

    def Y(name):
        return pv[..., _IDX[name]] / sqrtG

    return np.stack(
        [
            X("mu") - 2 * mu * g2 - mu * b1,
            Y("mu") - 2 * mu * g1 - mu * b2,
            X("gamma2") + Y("gamma1") - (g1**2 + g2**2) - 2 * lam * mu,
            X("lambda") - Y("nu") - 2 * lam * g2 + 2 * nu * g1 + lam * b1 - (1 + nu) * b2,
            X("nu") + Y("lambda") - 2 * lam * g1 - 2 * nu * g2 - (1 - nu) * b1 + lam * b2,
            X("beta2") - Y("beta1") + 2 * nu * mu + g1 * b1 - g2 * b2,
        ],
        axis=-1,
    )


def null_allied_mcv(frame, nu, lam, mu):
    """a(H) = 1/2 tr(A_H o A_{H-perp}) H-perp with H-perp = n2.

    In the principal basis A_H = [[0, -mu], [-mu, 0]] and
    A_{H-perp} = [[-(1+nu), -lam], [-lam, -(1-nu)]], so a(H) = lam mu n2.
    """
    nu, lam, mu = (np.asarray(a, dtype=float) for a in (nu, lam, mu))
    z = np.zeros_like(mu)
    a_h = np.stack([np.stack([z, -mu], -1), np.stack([-mu, z], -1)], -2)
    a_perp = np.stack(
        [np.stack([-(1 + nu), -lam], -1), np.stack([-lam, -(1 - nu)], -1)], -2
    )
    half_trace = 0.5 * np.trace(a_h @ a_perp, axis1=-2, axis2=-1)
    return half_trace[..., None] * np.asarray(frame.n2, dtype=float)


def classify(fi, nu, lam, h_class, beta=None, tol=constants.CLASSIFY_TOL):
    """PointClass flags of a single point.

    ``fi`` supplies L, M, N; ``h_class`` is the CausalClass of H (ZERO for
    a vanishing H); ``beta`` = (beta1, beta2) when known.
    """
    flags = PointClass.NONE
    if max(abs(float(fi.L)), abs(float(fi.M)), abs(float(fi.N))) <= tol:
        flags |= PointClass.FLAT_POINT
    h_class = CausalClass(h_class)
    if h_class is CausalClass.ZERO:
        flags |= PointClass.MINIMAL
    elif h_class is CausalClass.LIGHTLIKE:
        flags |= PointClass.MARGINALLY_TRAPPED
    if nu is not None and lam is not None:
        if abs(float(lam)) <= tol:
            flags |= PointClass.FLAT_GAUSS
        if abs(float(nu)) <= tol:
            flags |= PointClass.FLAT_NORMAL_CONNECTION
        if abs(abs(float(nu)) - 1.0) <= tol:
            flags |= PointClass.PARABOLIC
    if beta is not None and max(abs(float(b)) for b in beta) <= tol:
        flags |= PointClass.PARALLEL_H_CANDIDATE
    return flags


# ---------------------------------------------------------------------------
# invariant fields

class InvariantField:
    """Seven functions of (u, v) on a rectangle.

    Subclasses implement ``values``; partials default to central differences
    of ``order`` with step ``step``.
    """

    step = constants.FIELD_FD_STEP
    order = 2

    def __init__(self, domain):
        (u0, u1), (v0, v1) = domain
        self.domain = ((float(u0), float(u1)), (float(v0), float(v1)))

    def values(self, u, v):
        raise NotImplementedError

    def _h(self, u, v):
        return np.full_like(u, self.step), np.full_like(v, self.step)

    def _fd(self, fn, u, v):
        """Central differences of ``fn(u, v) -> (..., m)`` in u and in v."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        hu, hv = self._h(u, v)
        offs = fd.first_offsets(self.order)
        du = fd.first_derivative([fn(u + k * hu, v) for k in offs], hu[..., None], self.order)
        dv = fd.first_derivative([fn(u, v + k * hv) for k in offs], hv[..., None], self.order)
        return du, dv

    def partials(self, u, v):
        """(d/du, d/dv) of all seven functions, arrays (..., 7)."""
        return self._fd(self.values, u, v)

    def mu_partials(self, u, v):
        du, dv = self.partials(u, v)
        return du[..., _IDX["mu"]], dv[..., _IDX["mu"]]

    def coefficients(self, u, v):
        """(invariants (..., 7), sqrtE, sqrtG) with the recovered metric."""
        vals = self.values(u, v)
        mu_u, mu_v = self.mu_partials(u, v)
        sE, sG = recover_metric(vals, mu_u, mu_v)
        return vals, sE, sG

    def metric_partials(self, u, v):
        """d/du and d/dv of (sqrtE, sqrtG), each an array (..., 2)."""

        def metric(uu, vv):
            _, sE, sG = self.coefficients(uu, vv)
            return np.stack([sE, sG], axis=-1)

        return self._fd(metric, u, v)

    def perturbed(self, name, delta):
        """This field with ``delta`` added to one function."""
        return _PerturbedField(self, _IDX[name], delta)


class _PerturbedField(InvariantField):
    def __init__(self, base, index, delta):
        super().__init__(base.domain)
        self.base, self.index, self.delta = base, index, delta
        self.step, self.order = base.step, base.order

    def _shift(self, u, v):
        d = self.delta(u, v) if callable(self.delta) else self.delta
        out = np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape + (7,))
        out[..., self.index] = d
        return out

    def values(self, u, v):
        return self.base.values(u, v) + self._shift(u, v)

    def partials(self, u, v):
        du, dv = self.base.partials(u, v)
        if callable(self.delta):
            return InvariantField.partials(self, u, v)
        return du, dv

    def mu_partials(self, u, v):
        if callable(self.delta) and self.index == _IDX["mu"]:
            return InvariantField.mu_partials(self, u, v)
        return self.base.mu_partials(u, v)


class FunctionInvariantField(InvariantField):
    """Field from a vectorised function ``fn(u, v) -> (..., 7)``.

    ``partials_fn(u, v) -> (du, dv)`` may be supplied; otherwise central
    differences with step ``step`` are used.
    """

    def __init__(self, fn, domain, partials_fn=None, step=constants.FIELD_FD_STEP, order=2):
        super().__init__(domain)
        self._fn = fn
        self._partials_fn = partials_fn
        self.step, self.order = step, order

    def values(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.asarray(self._fn(u, v), dtype=float)

    def partials(self, u, v):
        if self._partials_fn is not None:
            du, dv = self._partials_fn(np.asarray(u, float), np.asarray(v, float))
            return np.asarray(du, float), np.asarray(dv, float)
        return super().partials(u, v)


class LatticeInvariantField(InvariantField):
    """Field sampled on a rectangular lattice, interpolated by quintic splines."""

    def __init__(self, u_nodes, v_nodes, samples):
        from scipy.interpolate import RectBivariateSpline

        u_nodes = np.asarray(u_nodes, dtype=float)
        v_nodes = np.asarray(v_nodes, dtype=float)
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (len(u_nodes), len(v_nodes), 7):
            raise ValueError("samples must have shape (len(u), len(v), 7)")
        super().__init__(((u_nodes[0], u_nodes[-1]), (v_nodes[0], v_nodes[-1])))
        deg = min(5, len(u_nodes) - 1, len(v_nodes) - 1)
        if deg < 1:
            raise ValueError("need at least two nodes per direction")
        self.u_nodes, self.v_nodes, self.samples = u_nodes, v_nodes, samples
        self._splines = [
            RectBivariateSpline(u_nodes, v_nodes, samples[..., i], kx=deg, ky=deg, s=0)
            for i in range(7)
        ]

    def _eval(self, u, v, dx=0, dy=0):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        (u0, u1), (v0, v1) = self.domain
        eps = 1e-12 * max(1.0, abs(u1 - u0), abs(v1 - v0))
        if np.any(u < u0 - eps) or np.any(u > u1 + eps) or np.any(v < v0 - eps) or np.any(v > v1 + eps):
            raise OutOfDomain("point outside the sampled lattice")
        out = [s.ev(u.ravel(), v.ravel(), dx=dx, dy=dy).reshape(u.shape) for s in self._splines]
        return np.stack(out, axis=-1)

    def values(self, u, v):
        return self._eval(u, v)

    def partials(self, u, v):
        return self._eval(u, v, dx=1), self._eval(u, v, dy=1)

    @classmethod
    def from_csv(cls, path):
        import csv

        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            want = ["u", "v", *NAMES]
            if header != want:
                raise ValueError(f"expected header {','.join(want)}")
            rows = np.array([[float(x) for x in r] for r in reader if r])
        u_vals = np.unique(rows[:, 0])
        v_vals = np.unique(rows[:, 1])
        if len(u_vals) * len(v_vals) != len(rows):
            raise ValueError("samples do not form a rectangular lattice")
        order = np.lexsort((rows[:, 1], rows[:, 0]))
        rows = rows[order]
        return cls(u_vals, v_vals, rows[:, 2:].reshape(len(u_vals), len(v_vals), 7))

    def to_csv(self, path):
        from .io import write_csv

        U, V = np.meshgrid(self.u_nodes, self.v_nodes, indexing="ij")
        cols = np.concatenate([U[..., None], V[..., None], self.samples], axis=-1)
        write_csv(path, ["u", "v", *NAMES], cols.reshape(-1, 9))


class MeasuredInvariantField(InvariantField):
    """The invariants of a marginally trapped patch, measured on demand.

    Frame derivatives and the partials of the invariants both use central
    differences of ``order`` with step ``step * max(1, |u|)``.
    """

    def __init__(self, patch, step=5e-3, order=8, tol=constants.MT_TOL):
        super().__init__(patch.domain)
        self.patch = patch
        self.step, self.order, self.tol = step, order, tol

    def values(self, u, v):
        return measure_invariants(self.patch, u, v, self.step, self.order, self.tol)

    def _h(self, u, v):
        return _steps(self.patch, u, v, self.step)

    def _mu(self, u, v):
        jet = self.patch.jet(u, v)
        frame = mt_normal_frame(jet, self.tol)
        return sigma_decomposition(jet, frame)[2][..., None]

    def mu_partials(self, u, v):
        du, dv = self._fd(self._mu, u, v)
        return du[..., 0], dv[..., 0]

    def coefficients(self, u, v):
        vals, mu_u, mu_v = measure_invariants(
            self.patch, u, v, self.step, self.order, self.tol, with_mu_partials=True)
        sE, sG = recover_metric(vals, mu_u, mu_v)
        return vals, sE, sG

    def metric(self, u, v):
        """sqrt(E), sqrt(G) read off the patch itself (for comparisons)."""
        jet = self.patch.jet(u, v)
        ff = first_form(jet)
        return np.sqrt(ff.E), np.sqrt(ff.G)
