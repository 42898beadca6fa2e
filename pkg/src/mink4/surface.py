"""Spacelike parametric surfaces z(u, v) in R^4_1 and their local invariants.

All per-point routines broadcast: a SecondOrderJet may hold arrays of shape
(..., 4) and the results then carry the leading shape.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import constants, fd
from .errors import (
    DegenerateSpan,
    FlatPoint,
    GramMismatch,
    NormalsNotNormal,
    NotSpacelike,
    OutOfDomain,
)
from .lorentz import inner

__all__ = [
    "SecondOrderJet",
    "FirstForm",
    "SecondCoeffs",
    "FormInvariants",
    "SurfacePatch",
    "AnalyticPatch",
    "FiniteDifferencePatch",
    "GridPatch",
    "evaluate_jet",
    "first_form",
    "orthonormal_normal_frame",
    "second_coeffs",
    "curvature_invariants",
    "mean_curvature_vector",
    "principal_directions",
    "sigma",
    "load_grid_csv",
]


@dataclass(frozen=True)
class SecondOrderJet:
    z: np.ndarray
    zu: np.ndarray
    zv: np.ndarray
    zuu: np.ndarray
    zuv: np.ndarray
    zvv: np.ndarray

    @property
    def shape(self):
        return self.z.shape[:-1]

    def __getitem__(self, idx):
        return SecondOrderJet(*(np.asarray(a)[idx] for a in self.astuple()))

    def astuple(self):
        return (self.z, self.zu, self.zv, self.zuu, self.zuv, self.zvv)

    def scaled(self, s):
        """Jet of the reparametrised map (u, v) -> z(u/s, v/s)."""
        return SecondOrderJet(
            self.z, self.zu / s, self.zv / s,
            self.zuu / s**2, self.zuv / s**2, self.zvv / s**2,
        )


@dataclass(frozen=True)
class FirstForm:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    W: np.ndarray


@dataclass(frozen=True)
class SecondCoeffs:
    """c_ij^k = <z_ij, n_k> for the normal pair (n1, n2).

    ``gram`` is "orthonormal" (<n1,n1> = 1, <n2,n2> = -1) or "lightlike"
    (<n1,n1> = <n2,n2> = 0, <n1,n2> = -1).
    """

    c11_1: np.ndarray
    c12_1: np.ndarray
    c22_1: np.ndarray
    c11_2: np.ndarray
    c12_2: np.ndarray
    c22_2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    gram: str = "orthonormal"


@dataclass(frozen=True)
class FormInvariants:
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    k: np.ndarray
    kappa: np.ndarray
    K: np.ndarray


_NORMAL_GRAMS = {
    "orthonormal": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "lightlike": np.array([[0.0, -1.0], [-1.0, 0.0]]),
}


# ---------------------------------------------------------------------------
# patches

class SurfacePatch:
    """A map z(u, v) on a rectangle that can produce second-order jets."""

    source = "analytic"

    def __init__(self, domain):
        (u0, u1), (v0, v1) = domain
        if not (u0 < u1 and v0 < v1):
            raise ValueError("empty domain")
        self.domain = ((float(u0), float(u1)), (float(v0), float(v1)))

    def margin(self, u, v):
        return 0.0, 0.0

    def contains(self, u, v):
        (u0, u1), (v0, v1) = self.domain
        mu, mv = self.margin(u, v)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return (u - mu >= u0) & (u + mu <= u1) & (v - mv >= v0) & (v + mv <= v1)

    def jet(self, u, v):
        raise NotImplementedError

    def position(self, u, v):
        return self.jet(u, v).z


class AnalyticPatch(SurfacePatch):
    """Patch whose jet comes from a user function ``jet_fn(u, v)``."""

    def __init__(self, jet_fn, domain, metadata=None):
        super().__init__(domain)
        self._jet_fn = jet_fn
        self.metadata = dict(metadata or {})

    def jet(self, u, v):
        return self._jet_fn(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


class FiniteDifferencePatch(SurfacePatch):
    """Jets by central differences of a vectorised position function.

    First derivatives use h1 = 1e-5 max(1, |u|), second and mixed derivatives
    h2 = 1e-4 max(1, |u|) (and likewise in v); truncation error is O(h^2).
    ``step`` overrides both.
    """

    source = "finite-difference"

    def __init__(self, position_fn, domain, step=None):
        super().__init__(domain)
        self._pos = position_fn
        self.step = step

    def _steps(self, x):
        scale = np.maximum(1.0, np.abs(x))
        if self.step is not None:
            return self.step * scale, self.step * scale
        return constants.FD_FIRST_STEP * scale, constants.FD_SECOND_STEP * scale

    def margin(self, u, v):
        return 2 * self._steps(u)[1], 2 * self._steps(v)[1]

    def position(self, u, v):
        return np.asarray(self._pos(np.asarray(u, float), np.asarray(v, float)), float)

    def jet(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        p = self.position
        h1u, h2u = (h[..., None] for h in self._steps(u))
        h1v, h2v = (h[..., None] for h in self._steps(v))
        a1u, a2u = self._steps(u)
        a1v, a2v = self._steps(v)
        z = p(u, v)
        zu = (p(u + a1u, v) - p(u - a1u, v)) / (2 * h1u)
        zv = (p(u, v + a1v) - p(u, v - a1v)) / (2 * h1v)
        zuu = (p(u + a2u, v) - 2 * z + p(u - a2u, v)) / h2u**2
        zvv = (p(u, v + a2v) - 2 * z + p(u, v - a2v)) / h2v**2
        zuv = (
            p(u + a2u, v + a2v) - p(u + a2u, v - a2v)
            - p(u - a2u, v + a2v) + p(u - a2u, v - a2v)
        ) / (4 * h2u * h2v)
        return SecondOrderJet(z, zu, zv, zuu, zuv, zvv)


class GridPatch(SurfacePatch):
    """Surface sampled on a uniform rectangular (u, v) lattice.

    Jets use fourth-order central differences on the lattice, so the two
    outermost rows and columns have no jet and are reported as unavailable.
    """

    source = "grid"

    def __init__(self, u_nodes, v_nodes, positions):
        u_nodes = np.asarray(u_nodes, dtype=float)
        v_nodes = np.asarray(v_nodes, dtype=float)
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (len(u_nodes), len(v_nodes), 4):
            raise ValueError("positions must have shape (len(u), len(v), 4)")
        if len(u_nodes) < 5 or len(v_nodes) < 5:
            raise ValueError("need at least 5 nodes per direction")
        du = np.diff(u_nodes)
        dv = np.diff(v_nodes)
        if np.ptp(du) > 1e-9 * abs(du[0]) or np.ptp(dv) > 1e-9 * abs(dv[0]):
            raise ValueError("lattice must be uniform")
        super().__init__(((u_nodes[0], u_nodes[-1]), (v_nodes[0], v_nodes[-1])))
        self.u_nodes, self.v_nodes, self.positions = u_nodes, v_nodes, positions
        self.du, self.dv = float(du[0]), float(dv[0])
        zu = fd.lattice_first(positions, self.du, 0)
        zv = fd.lattice_first(positions, self.dv, 1)
        self._jets = SecondOrderJet(
            positions,
            zu,
            zv,
            fd.lattice_second(positions, self.du, 0),
            fd.lattice_first(zu, self.dv, 1),
            fd.lattice_second(positions, self.dv, 1),
        )
        avail = np.zeros(positions.shape[:2], dtype=bool)
        avail[2:-2, 2:-2] = True
        self.available = avail

    @classmethod
    def from_csv(cls, path):
        return load_grid_csv(path)

    def node_index(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        i = np.rint((u - self.u_nodes[0]) / self.du).astype(int)
        j = np.rint((v - self.v_nodes[0]) / self.dv).astype(int)
        inside = (i >= 0) & (i < len(self.u_nodes)) & (j >= 0) & (j < len(self.v_nodes))
        ic = np.clip(i, 0, len(self.u_nodes) - 1)
        jc = np.clip(j, 0, len(self.v_nodes) - 1)
        on_node = (
            inside
            & (np.abs(self.u_nodes[ic] - u) <= 1e-9 * abs(self.du))
            & (np.abs(self.v_nodes[jc] - v) <= 1e-9 * abs(self.dv))
        )
        return ic, jc, on_node

    def contains(self, u, v):
        i, j, ok = self.node_index(u, v)
        return ok & self.available[i, j]

    def jet(self, u, v):
        i, j, _ = self.node_index(u, v)
        return self._jets[i, j]

    def jet_grid(self):
        """Jets at every lattice node (NaN where unavailable)."""
        return self._jets


def load_grid_csv(path):
    """Read ``u,v,x1,x2,x3,x4`` rows (v varying fastest) into a GridPatch."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        cols = ["u", "v", "x1", "x2", "x3", "x4"]
        if header[:6] != cols:
            raise ValueError(f"expected header starting with {','.join(cols)}")
        rows = np.array([[float(x) for x in r[:6]] for r in reader if r])
    u_vals = np.unique(rows[:, 0])
    v_vals = np.unique(rows[:, 1])
    nu, nv = len(u_vals), len(v_vals)
    if nu * nv != len(rows):
        raise ValueError("samples do not form a rectangular lattice")
    u_grid = rows[:, 0].reshape(nu, nv)
    v_grid = rows[:, 1].reshape(nu, nv)
    if not (np.allclose(u_grid, u_vals[:, None]) and np.allclose(v_grid, v_vals[None, :])):
        raise ValueError("rows must be in row-major order with v varying fastest")
    return GridPatch(u_vals, v_vals, rows[:, 2:6].reshape(nu, nv, 4))


def evaluate_jet(patch, u, v):
    """Second-order jet of ``patch`` at (u, v); OutOfDomain outside it."""
    if not np.all(patch.contains(u, v)):
        raise OutOfDomain(f"({u}, {v}) outside the usable domain of the patch")
    return patch.jet(u, v)


# ---------------------------------------------------------------------------
# per-point geometry

def first_form(jet, check=True):
    E = inner(jet.zu, jet.zu)
    F = inner(jet.zu, jet.zv)
    G = inner(jet.zv, jet.zv)
    det = E * G - F * F
    if check and (np.any(E <= 0) or np.any(det <= 0)):
        raise NotSpacelike("induced metric is not positive definite")
    return FirstForm(E, F, G, np.sqrt(np.maximum(det, 0.0)))


def _normal_part(jet, ff, w):
    a1 = inner(w, jet.zu)
    a2 = inner(w, jet.zv)
    det = ff.E * ff.G - ff.F**2
    cu = (ff.G * a1 - ff.F * a2) / det
    cv = (ff.E * a2 - ff.F * a1) / det
    return w - cu[..., None] * jet.zu - cv[..., None] * jet.zv


def sigma(jet, ff, c1, c2):
    """Second fundamental tensor on tangent vectors given by coefficients.

    ``c1``, ``c2`` are pairs (a, b) meaning a z_u + b z_v.
    """
    s11 = _normal_part(jet, ff, jet.zuu)
    s12 = _normal_part(jet, ff, jet.zuv)
    s22 = _normal_part(jet, ff, jet.zvv)
    a1, b1 = (np.asarray(c)[..., None] for c in c1)
    a2, b2 = (np.asarray(c)[..., None] for c in c2)
    return a1 * a2 * s11 + (a1 * b2 + b1 * a2) * s12 + b1 * b2 * s22


def _tangent_basis(ff, angle=0.0):
    """Coefficients of an orthonormal tangent basis rotated by ``angle``."""
    sE = np.sqrt(ff.E)
    x = (1.0 / sE, np.zeros_like(sE))
    y = (-ff.F / (sE * ff.W), sE / ff.W)
    c, s = np.cos(angle), np.sin(angle)
    xr = (c * x[0] + s * y[0], c * x[1] + s * y[1])
    yr = (-s * x[0] + c * y[0], -s * x[1] + c * y[1])
    return xr, yr


def mean_curvature_vector(jet, ff, angle=0.0):
    """H = (sigma(x,x) + sigma(y,y)) / 2 for an orthonormal tangent basis.

    The basis is the Gram-Schmidt basis of (z_u, z_v) rotated by ``angle``;
    the result does not depend on the angle.
    """
    x, y = _tangent_basis(ff, angle)
    return 0.5 * (sigma(jet, ff, x, x) + sigma(jet, ff, y, y))


def _null_space_pairs(jet):
    zu = np.asarray(jet.zu, dtype=float)
    zv = np.asarray(jet.zv, dtype=float)
    sgn = np.array([1.0, 1.0, 1.0, -1.0])
    rows = np.stack([zu * sgn, zv * sgn], axis=-2)
    _, _, vh = np.linalg.svd(rows)
    return vh[..., 2, :], vh[..., 3, :]


def _split_normal_plane(b1, b2, tol=constants.LIGHTLIKE_TOL):
    """Unit spacelike and unit timelike vectors spanning span{b1, b2}.

    b1, b2 must be Euclidean-orthonormal.  Raises DegenerateSpan unless the
    induced metric on the plane has signature (1, 1).
    """
    g = np.stack(
        [
            np.stack([inner(b1, b1), inner(b1, b2)], axis=-1),
            np.stack([inner(b2, b1), inner(b2, b2)], axis=-1),
        ],
        axis=-2,
    )
    w, c = np.linalg.eigh(g)
    if np.any(w[..., 0] >= -tol) or np.any(w[..., 1] <= tol):
        raise DegenerateSpan("normal plane is not Lorentzian")
    timelike = c[..., 0, 0, None] * b1 + c[..., 1, 0, None] * b2
    spacelike = c[..., 0, 1, None] * b1 + c[..., 1, 1, None] * b2
    n1 = spacelike / np.sqrt(w[..., 1])[..., None]
    n2 = timelike / np.sqrt(-w[..., 0])[..., None]
    return n1, n2


def orthonormal_normal_frame(jet):
    """Normals n1 (unit spacelike) and n2 (unit timelike) at each point.

    n1 is signed so that its largest coordinate is positive; n2 is then
    signed so that (z_u, z_v, n1, n2) is positively oriented.
    """
    first_form(jet)
    b1, b2 = _null_space_pairs(jet)
    n1, n2 = _split_normal_plane(b1, b2)
    k = np.argmax(np.abs(n1), axis=-1)
    s = np.sign(np.take_along_axis(n1, k[..., None], axis=-1))
    n1 = n1 * s
    det = np.linalg.det(np.stack([jet.zu, jet.zv, n1, n2], axis=-2))
    n2 = n2 * np.where(det < 0, -1.0, 1.0)[..., None]
    return n1, n2


def second_coeffs(jet, normals, gram="orthonormal", tol=constants.NORMAL_TOL):
    """The six numbers c_ij^k = <z_ij, n_k> for the given normal pair."""
    n1, n2 = (np.asarray(n, dtype=float) for n in normals)
    if gram not in _NORMAL_GRAMS:
        raise ValueError(f"unknown normal Gram type {gram!r}")
    for n in (n1, n2):
        nn = np.linalg.norm(n, axis=-1)
        for t in (jet.zu, jet.zv):
            scale = np.linalg.norm(t, axis=-1) * nn
            if np.any(np.abs(inner(t, n)) > tol * scale):
                raise NormalsNotNormal("supplied normal is not orthogonal to the surface")
    g = _NORMAL_GRAMS[gram]
    actual = np.stack([inner(n1, n1), inner(n1, n2), inner(n2, n2)], axis=-1)
    want = np.array([g[0, 0], g[0, 1], g[1, 1]])
    if np.any(np.abs(actual - want) > 1e3 * constants.FRAME_TOL):
        raise GramMismatch(f"normal pair is not {gram}")
    return SecondCoeffs(
        inner(jet.zuu, n1), inner(jet.zuv, n1), inner(jet.zvv, n1),
        inner(jet.zuu, n2), inner(jet.zuv, n2), inner(jet.zvv, n2),
        n1, n2, gram,
    )


def curvature_invariants(ff, sc, jet=None):
    """L, M, N from the 2x2 determinants of the c_ij^k, then k, kappa and K.

    K comes from the Gauss equation: the normal components of z_ij are
    recovered from the covariant coefficients and the Gram type of the
    normal pair.
    """
    W = ff.W
    L = 2.0 / W * (sc.c11_1 * sc.c12_2 - sc.c12_1 * sc.c11_2)
    M = 1.0 / W * (sc.c11_1 * sc.c22_2 - sc.c22_1 * sc.c11_2)
    N = 2.0 / W * (sc.c12_1 * sc.c22_2 - sc.c22_1 * sc.c12_2)
    det = ff.E * ff.G - ff.F**2
    k = (L * N - M * M) / det
    kappa = (ff.E * N + ff.G * L - 2.0 * ff.F * M) / (2.0 * det)

    ginv = np.linalg.inv(_NORMAL_GRAMS[sc.gram])

    def dot(a1, a2, b1, b2):
        return (
            ginv[0, 0] * a1 * b1 + ginv[0, 1] * (a1 * b2 + a2 * b1) + ginv[1, 1] * a2 * b2
        )

    K = (
        dot(sc.c11_1, sc.c11_2, sc.c22_1, sc.c22_2)
        - dot(sc.c12_1, sc.c12_2, sc.c12_1, sc.c12_2)
    ) / det
    return FormInvariants(L, M, N, k, kappa, K)


def principal_directions(ff, fi, tol=constants.CLASSIFY_TOL):
    """Unit principal directions as coefficient pairs on (z_u, z_v).

    These diagonalise II = [[L, M], [M, N]] against I = [[E, F], [F, G]],
    i.e. they are the roots of
    (EM - FL) a^2 + (EN - GL) a b + (FN - GM) b^2 = 0 for a z_u + b z_v.

    Each direction is signed so that its z_u coefficient is nonnegative (the
    z_v coefficient decides when the z_u coefficient vanishes), and the pair
    is ordered so that det[[a1, b1], [a2, b2]] > 0.
    """
    L, M, N = (np.asarray(a, dtype=float) for a in (fi.L, fi.M, fi.N))
    if np.any(np.maximum(np.maximum(np.abs(L), np.abs(M)), np.abs(N)) <= tol):
        raise FlatPoint("L = M = N = 0: every direction is principal")
    sE = np.sqrt(ff.E)
    r12 = ff.F / sE
    r22 = ff.W / sE
    # C = R^-T II R^-1 with I = R^T R, R = [[sE, r12], [0, r22]]
    c11 = L / ff.E
    c12 = (M - r12 * c11 * sE) / (sE * r22)
    c22 = (N - 2 * r12 * c12 * r22 - r12**2 * c11) / r22**2
    cmat = np.stack([np.stack([c11, c12], -1), np.stack([c12, c22], -1)], -2)
    if not np.all(np.isfinite(cmat)):
        raise FlatPoint("non-finite second fundamental form")
    _, w = np.linalg.eigh(cmat)
    dirs = []
    for col in (0, 1):
        w1, w2 = w[..., 0, col], w[..., 1, col]
        b = w2 / r22
        a = (w1 - r12 * b) / sE
        size = np.hypot(a, b)
        flip = (a < -1e-9 * size) | ((np.abs(a) <= 1e-9 * size) & (b < 0))
        s = np.where(flip, -1.0, 1.0)
        dirs.append(np.stack([a * s, b * s], axis=-1))
    d1, d2 = dirs
    det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    swap = (det < 0)[..., None]
    return np.where(swap, d2, d1), np.where(swap, d1, d2)
