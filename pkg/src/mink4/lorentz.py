"""Vector algebra in Minkowski space R^4_1.

Vectors are plain numpy arrays whose last axis has length 4, holding the
coordinates in the fixed basis e1, e2, e3, e4 with e4 timelike.  Every
function broadcasts over leading axes unless noted otherwise.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .errors import (
    DegeneratePlane,
    DegenerateSpan,
    GramMismatch,
    NonFiniteInput,
    NotLightlike,
)

__all__ = [
    "ETA",
    "ORTHONORMAL_GRAM",
    "NULL_PAIR_GRAM",
    "CausalClass",
    "LorentzFrame",
    "vec",
    "basis",
    "inner",
    "euclid_norm",
    "causal_character",
    "orthonormalize",
    "null_partner",
    "align_frames",
    "lorentz_residual",
]

ETA = np.diag([1.0, 1.0, 1.0, -1.0])

#: Gram matrix of an orthonormal frame (e1, e2, e3, e4).
ORTHONORMAL_GRAM = ETA.copy()

#: Gram matrix of a frame {x, y, n1, n2}: x, y unit spacelike, n1, n2
#: lightlike with <n1, n2> = -1.
NULL_PAIR_GRAM = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)

_SIGN = np.array([1.0, 1.0, 1.0, -1.0])


def vec(x1, x2, x3, x4):
    """Build a Lorentz vector from its four coordinates."""
    return _finite(np.array([x1, x2, x3, x4], dtype=float))


def basis(i):
    """Return the standard basis vector e_i, i in 1..4."""
    out = np.zeros(4)
    out[i - 1] = 1.0
    return out


def _finite(v):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("non-finite coordinates")
    return v


def inner(u, v):
    """Minkowski inner product u1 v1 + u2 v2 + u3 v3 - u4 v4."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(u * v * _SIGN, axis=-1)


def euclid_norm(v):
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


class CausalClass(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    ZERO = "zero"


def causal_character(v, tol=constants.LIGHTLIKE_TOL):
    """Classify a single vector.

    The lightlike test is relative, |<v,v>| <= tol * |v|^2 with the Euclidean
    norm on the right, so that rescaling v does not change the answer.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = _finite(v)
    n2 = float(np.dot(v, v))
    if np.sqrt(n2) <= tol:
        return CausalClass.ZERO
    q = float(inner(v, v))
    if abs(q) <= tol * n2:
        return CausalClass.LIGHTLIKE
    return CausalClass.SPACELIKE if q > 0 else CausalClass.TIMELIKE


def orthonormalize(vectors, signature, tol=constants.LIGHTLIKE_TOL):
    """Gram-Schmidt with respect to the Minkowski product.

    ``signature[i]`` (+1 or -1) is the requested value of <w_i, w_i>.  The
    first output is a positive multiple of the first input.  Raises
    DegenerateSpan when an intermediate vector is lightlike or zero, or has
    the wrong causal character for the requested signature.
    """
    vectors = [_finite(v) for v in vectors]
    if len(vectors) != len(signature):
        raise ValueError("need one signature entry per vector")
    out = []
    for i, (v, sig) in enumerate(zip(vectors, signature)):
        w = v.copy()
        for e, s in zip(out, signature):
            w = w - s * inner(w, e) * e
        q = inner(w, w)
        scale = float(np.dot(w, w))
        if scale <= tol**2 or abs(q) <= tol * scale:
            raise DegenerateSpan(f"vector {i} is lightlike or zero after projection")
        if np.sign(q) != np.sign(sig):
            raise DegenerateSpan(f"vector {i} cannot reach signature {sig:+d}")
        out.append(w / np.sqrt(abs(q)))
    return out


def null_partner(n1, plane, tol=constants.LIGHTLIKE_TOL):
    """The lightlike n2 in ``plane`` with <n1, n2> = -1.

    ``plane`` is a pair of vectors spanning a Lorentzian 2-plane that contains
    the lightlike vector n1.  Broadcasts over leading axes.

    Pick a plane vector m with <n1, m> != 0; then w = m - <m,m>/(2<n1,m>) n1
    is lightlike and n2 = -w / <n1, m>.
    """
    n1 = _finite(n1)
    p, q = (_finite(w) for w in plane)
    n1p = np.sqrt(np.sum(n1 * n1, axis=-1))
    if np.any(n1p <= tol) or np.any(np.abs(inner(n1, n1)) > tol * n1p**2):
        raise NotLightlike("n1 is not a nonzero lightlike vector")

    gpp, gpq, gqq = inner(p, p), inner(p, q), inner(q, q)
    det = gpp * gqq - gpq**2
    scale = np.sum(p * p, axis=-1) * np.sum(q * q, axis=-1)
    if np.any(det >= -tol * scale):
        raise DegeneratePlane("plane is not of signature (1,1)")
    # n1 must lie in the plane
    a = (gqq * inner(n1, p) - gpq * inner(n1, q)) / det
    b = (gpp * inner(n1, q) - gpq * inner(n1, p)) / det
    resid = n1 - a[..., None] * p - b[..., None] * q
    if np.any(np.linalg.norm(resid, axis=-1) > 1e3 * tol * n1p):
        raise DegeneratePlane("n1 does not lie in the plane")

    sp, sq = inner(n1, p), inner(n1, q)
    use_p = (np.abs(sp) >= np.abs(sq))[..., None]
    m = np.where(use_p, p, q)
    nm = np.where(use_p[..., 0], sp, sq)
    w = m - (inner(m, m) / (2.0 * nm))[..., None] * n1
    return -w / nm[..., None]


@dataclass(frozen=True)
class LorentzFrame:
    """Four vectors (rows of ``vectors``) with a declared Gram matrix.

    ``origin`` is the base point.  ``gram`` is ORTHONORMAL_GRAM or
    NULL_PAIR_GRAM in practice, but any symmetric nondegenerate matrix works.
    """

    vectors: np.ndarray
    gram: np.ndarray = field(default_factory=lambda: NULL_PAIR_GRAM.copy())
    origin: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        object.__setattr__(self, "vectors", _finite(self.vectors).reshape(4, 4))
        object.__setattr__(self, "gram", np.asarray(self.gram, dtype=float))
        object.__setattr__(self, "origin", _finite(self.origin).reshape(4))

    def actual_gram(self):
        return self.vectors @ ETA @ self.vectors.T

    def gram_residual(self):
        return float(np.max(np.abs(self.actual_gram() - self.gram)))

    def orientation(self):
        """Sign of det of the coordinate matrix (rows = frame vectors)."""
        return int(np.sign(np.linalg.det(self.vectors)))

    def check(self, tol=constants.FRAME_TOL):
        r = self.gram_residual()
        if r > tol:
            raise GramMismatch(f"frame violates its declared Gram matrix by {r:.3g}")
        return self


def align_frames(source, target, tol=constants.FRAME_TOL):
    """Motion (lam, t) taking ``source`` onto ``target``.

    ``lam`` maps every source frame vector onto the matching target vector and
    ``lam @ source.origin + t == target.origin``.  Because both frames satisfy
    the same Gram matrix, lam preserves the Minkowski metric.
    """
    if source.gram.shape != target.gram.shape or np.max(
        np.abs(source.gram - target.gram)
    ) > tol:
        raise GramMismatch("frames declare different Gram matrices")
    source.check(tol)
    target.check(tol)
    lam = target.vectors.T @ np.linalg.inv(source.vectors.T)
    t = target.origin - lam @ source.origin
    return lam, t


def lorentz_residual(lam):
    """max |lam^T eta lam - eta|."""
    lam = np.asarray(lam, dtype=float)
    return float(np.max(np.abs(lam.T @ ETA @ lam - ETA)))
