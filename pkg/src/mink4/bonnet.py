"""Reconstruction of a marginally trapped surface from its seven invariants.

Given the seven functions on a rectangle and an initial geometric frame,
the frame Z = (x, y, n1, n2) solves Z_u = A Z, Z_v = B Z and the position
solves z_u = sqrt(E) x, z_v = sqrt(G) y.  Both are integrated together as one
5x4 linear system with the classical fourth-order Runge-Kutta method: first
along the line v = v0 through the base node, then along every line u = u_i.
"""

import logging
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import constants
from .errors import CompatibilityTooLarge, StepFailure
from .invariants import (
    NAMES,
    MeasuredInvariantField,
    frame_at,
    frenet_matrices,
    measure_invariants,
    mt_normal_frame,
    phi_values,
    sigma_decomposition,
)
from .lorentz import NULL_PAIR_GRAM, ETA, LorentzFrame, align_frames, inner
from .surface import GridPatch, first_form, mean_curvature_vector

__all__ = [
    "FrameState",
    "ReconstructionResult",
    "derived_metric_coeffs",
    "compatibility_residuals",
    "integrate",
    "gram_correct",
    "phi_drift",
    "roundtrip",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameState:
    """Frame vectors x, y, n1, n2 and the position z (arrays (..., 4))."""

    x: np.ndarray
    y: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    z: np.ndarray

    def as_array(self):
        """Rows x, y, n1, n2, z stacked into (..., 5, 4)."""
        return np.stack([self.x, self.y, self.n1, self.n2, self.z], axis=-2)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(*(arr[..., i, :] for i in range(5)))

    @classmethod
    def from_frame(cls, frame):
        return cls(frame.x, frame.y, frame.n1, frame.n2, frame.point)

    def lorentz_frame(self):
        return LorentzFrame(self.as_array()[:4], NULL_PAIR_GRAM, self.z)

    def phi(self):
        return phi_values(self.as_array()[..., :4, :])


@dataclass
class ReconstructionResult:
    """Frames and positions on the lattice u_nodes x v_nodes."""

    u_nodes: np.ndarray
    v_nodes: np.ndarray
    states: np.ndarray  # (nu, nv, 5, 4)
    base_index: tuple
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def positions(self):
        return self.states[..., 4, :]

    @property
    def frames(self):
        return self.states[..., :4, :]

    def state(self, i, j):
        return FrameState.from_array(self.states[i, j])


def derived_metric_coeffs(field, u, v):
    """sqrt(E), sqrt(G) recovered from mu and the connection functions."""
    _, sE, sG = field.coefficients(u, v)
    return sE, sG


def compatibility_residuals(field, u, v):
    """The six compatibility conditions of the seven functions.

    Returns (residuals (..., 6), max-norm per condition).  The conditions,
    each written as left side minus right side:

        -gamma1 sqrtE sqrtG - (sqrtE)_v
        -gamma2 sqrtE sqrtG - (sqrtG)_u
        2 lam mu - (gamma2)_u / sqrtE - (gamma1)_v / sqrtG + gamma1^2 + gamma2^2
        2 lam gamma2 - 2 nu gamma1 - lam beta1 + (1+nu) beta2 - lam_u / sqrtE + nu_v / sqrtG
        2 lam gamma1 + 2 nu gamma2 + (1-nu) beta1 - lam beta2 - nu_u / sqrtE - lam_v / sqrtG
        gamma1 beta1 - gamma2 beta2 + 2 nu mu + (beta2)_u / sqrtE - (beta1)_v / sqrtG

    with sqrtE, sqrtG from derived_metric_coeffs.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    vals, sE, sG = field.coefficients(u, v)
    pu, pv = field.partials(u, v)
    mu_u, mu_v = field.metric_partials(u, v)
    g1, g2, nu, lam, mu, b1, b2 = (vals[..., i] for i in range(7))
    i = {n: k for k, n in enumerate(NAMES)}
    res = np.stack(
        [
            -g1 * sE * sG - mu_v[..., 0],
            -g2 * sE * sG - mu_u[..., 1],
            2 * lam * mu - pu[..., i["gamma2"]] / sE - pv[..., i["gamma1"]] / sG
            + g1**2 + g2**2,
            2 * lam * g2 - 2 * nu * g1 - lam * b1 + (1 + nu) * b2
            - pu[..., i["lambda"]] / sE + pv[..., i["nu"]] / sG,
            2 * lam * g1 + 2 * nu * g2 + (1 - nu) * b1 - lam * b2
            - pu[..., i["nu"]] / sE - pv[..., i["lambda"]] / sG,
            g1 * b1 - g2 * b2 + 2 * nu * mu
            + pu[..., i["beta2"]] / sE - pv[..., i["beta1"]] / sG,
        ],
        axis=-1,
    )
    return res, np.max(np.abs(res.reshape(-1, 6)), axis=0)


def gram_correct(frames):
    """One Newton step towards the pseudo-orthonormal Gram matrix.

    F <- F - 1/2 (G - G0) G0^-1 F with G = F eta F^T, G0 = NULL_PAIR_GRAM.
    """
    G = frames @ ETA @ np.swapaxes(frames, -1, -2)
    return frames - 0.5 * (G - NULL_PAIR_GRAM) @ NULL_PAIR_GRAM @ frames


def _augmented(inv, sE, sG, direction):
    """5x5 matrices of the combined frame/position system along one direction."""
    A, B = frenet_matrices(inv, sE, sG)
    M = A if direction == "u" else B
    out = np.zeros(M.shape[:-2] + (5, 5))
    out[..., :4, :4] = M
    if direction == "u":
        out[..., 4, 0] = sE
    else:
        out[..., 4, 1] = sG
    return out


def _rk4_sweep(Y0, mats, h, reortho_every):
    """Integrate Y' = M Y along lines.

    Y0: (L, 5, 4) initial states; mats: (L, 2 n + 1, 5, 5) matrices at the
    half-step nodes in the direction of travel; h: signed step.  Returns
    states (L, n + 1, 5, 4).
    """
    n = (mats.shape[1] - 1) // 2
    out = np.empty((Y0.shape[0], n + 1, 5, 4))
    out[:, 0] = Y = Y0
    for s in range(n):
        M0, Mh, M1 = mats[:, 2 * s], mats[:, 2 * s + 1], mats[:, 2 * s + 2]
        k1 = M0 @ Y
        k2 = Mh @ (Y + 0.5 * h * k1)
        k3 = Mh @ (Y + 0.5 * h * k2)
        k4 = M1 @ (Y + h * k3)
        Y = Y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if reortho_every and (s + 1) % reortho_every == 0:
            Y = Y.copy()
            Y[:, :4] = gram_correct(Y[:, :4])
        if not np.all(np.isfinite(Y)):
            raise StepFailure(f"non-finite state after step {s + 1}")
        out[:, s + 1] = Y
    return out


def _half_nodes(nodes):
    half = np.empty(2 * len(nodes) - 1)
    half[0::2] = nodes
    half[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    return half


def _line(Y0, mats_half, base, h, reortho_every):
    """States along a full line of nodes from the node ``base`` outwards."""
    n_nodes = (mats_half.shape[1] + 1) // 2
    out = np.empty((Y0.shape[0], n_nodes, 5, 4))
    out[:, base] = Y0
    if base < n_nodes - 1:
        out[:, base:] = _rk4_sweep(Y0, mats_half[:, 2 * base:], h, reortho_every)
    if base > 0:
        back = mats_half[:, : 2 * base + 1][:, ::-1]
        out[:, : base + 1] = _rk4_sweep(Y0, back, -h, reortho_every)[:, ::-1]
    return out


def _uniform_step(nodes, name):
    d = np.diff(nodes)
    if np.any(d <= 0) or np.ptp(d) > 1e-9 * abs(d[0]):
        raise ValueError(f"{name} nodes must be uniform and increasing")
    return float(d[0])


def _compat_summary(field, u_nodes, v_nodes, n):
    """Max-norm of the compatibility residuals on an n x n interior subgrid."""
    (u0, u1), (v0, v1) = (u_nodes[0], u_nodes[-1]), (v_nodes[0], v_nodes[-1])
    iu = 0.02 * (u1 - u0)
    iv = 0.02 * (v1 - v0)
    us = np.linspace(u0 + iu, u1 - iu, n)
    vs = np.linspace(v0 + iv, v1 - iv, n)
    U, V = np.meshgrid(us, vs, indexing="ij")
    _, per = compatibility_residuals(field, U, V)
    return per


def integrate(field, initial, u_nodes, v_nodes, base=(0, 0),
              reortho_every=constants.REORTHO_EVERY, sweep="uv",
              check_compat=True, compat_points=9,
              refuse=constants.COMPAT_REFUSE, warn=constants.COMPAT_WARN):
    """Integrate the frame and position systems over the lattice.

    ``initial`` is the FrameState at node ``base`` = (i0, j0).  ``sweep`` "uv"
    integrates along u on v = v0 and then along v on every u-line; "vu" does
    the opposite.  Before integrating, the compatibility residuals are
    evaluated on a compat_points x compat_points subgrid; above ``refuse`` the
    call raises CompatibilityTooLarge, above ``warn`` it logs a warning.
    ``reortho_every`` = 0 or None disables the Gram correction.
    """
    u_nodes = np.atleast_1d(np.asarray(u_nodes, dtype=float))
    v_nodes = np.atleast_1d(np.asarray(v_nodes, dtype=float))
    i0, j0 = base
    Y0 = initial.as_array()
    nu_, nv_ = len(u_nodes), len(v_nodes)
    diag = {"reortho_every": reortho_every or 0, "sweep": sweep}

    compat = None
    if check_compat and nu_ > 1 and nv_ > 1:
        compat = _compat_summary(field, u_nodes, v_nodes, compat_points)
        worst = float(np.max(compat))
        if worst > refuse:
            raise CompatibilityTooLarge(
                f"compatibility residual {worst:.3g} exceeds {refuse:.3g}")
        if worst > warn:
            log.warning("compatibility residual %.3g exceeds %.3g", worst, warn)
    diag["compatibility_max"] = None if compat is None else [float(c) for c in compat]

    states = np.empty((nu_, nv_, 5, 4))
    if nu_ == 1 and nv_ == 1:
        states[0, 0] = Y0
        return _finish(u_nodes, v_nodes, states, base, diag)

    def mats_along(direction, fixed, moving_half):
        """Matrices at (fixed_k, moving_half_m) for every fixed k."""
        if direction == "v":
            U, V = np.meshgrid(fixed, moving_half, indexing="ij")
        else:
            V, U = np.meshgrid(fixed, moving_half, indexing="ij")
        inv, sE, sG = field.coefficients(U, V)
        return _augmented(inv, sE, sG, direction)

    if sweep == "uv":
        first, second = ("u", u_nodes, i0, v_nodes[j0]), ("v", v_nodes, j0)
    elif sweep == "vu":
        first, second = ("v", v_nodes, j0, u_nodes[i0]), ("u", u_nodes, i0)
    else:
        raise ValueError("sweep must be 'uv' or 'vu'")

    d1, nodes1, b1, fixed1 = first
    d2, nodes2, b2 = second
    if len(nodes1) > 1:
        h1 = _uniform_step(nodes1, d1)
        m1 = mats_along(d1, np.array([fixed1]), _half_nodes(nodes1))
        line = _line(Y0[None], m1, b1, h1, reortho_every)[0]
    else:
        line = Y0[None]
    if len(nodes2) > 1:
        h2 = _uniform_step(nodes2, d2)
        m2 = mats_along(d2, nodes1, _half_nodes(nodes2))
        sheet = _line(line, m2, b2, h2, reortho_every)
    else:
        sheet = line[:, None]
    states[:] = sheet if sweep == "uv" else np.swapaxes(sheet, 0, 1)
    return _finish(u_nodes, v_nodes, states, base, diag)


def _finish(u_nodes, v_nodes, states, base, diag):
    res = ReconstructionResult(u_nodes, v_nodes, states, tuple(base), diag)
    per, worst = phi_drift(res)
    diag["phi_max"] = [float(p) for p in per]
    diag["phi_drift_max"] = float(worst)
    return res


def phi_drift(result):
    """Per-function max |phi_i| over the lattice, and the overall max."""
    phi = phi_values(result.frames)
    per = np.max(np.abs(phi.reshape(-1, 10)), axis=0)
    return per, float(np.max(per))


def path_independence(field, initial, u_nodes, v_nodes, base=(0, 0), **kw):
    """Max difference of positions between the 'uv' and 'vu' sweep orders."""
    a = integrate(field, initial, u_nodes, v_nodes, base, sweep="uv", **kw)
    b = integrate(field, initial, u_nodes, v_nodes, base, sweep="vu", check_compat=False, **kw)
    return float(np.max(np.abs(a.positions - b.positions))), a, b


def roundtrip(spec, width=0.4, n=101, base_uv=None, corner=True,
              reortho_every=constants.REORTHO_EVERY, fd_step=5e-3, fd_order=8,
              remeasure=True, compat_points=9):
    """Reconstruct a meridian surface from its own measured invariants.

    The principal rectangle [0, width]^2 (``corner``) or
    [-width/2, width/2]^2 is sampled with n x n nodes; (p, q) = (0, 0) maps
    to ``base_uv`` (default: the middle of the meridian ranges).  The surface is
    rebuilt from the measured invariants and the true geometric frame at the
    base node, aligned to the true surface by the motion of the base frames,
    and compared node by node.
    """
    from .meridian import principal_reparametrize

    if base_uv is None:
        base_uv = (0.5 * sum(spec.u_range), 0.5 * sum(spec.v_range))
    lo, hi = (0.0, width) if corner else (-0.5 * width, 0.5 * width)
    patch = principal_reparametrize(spec, (lo, hi), (lo, hi), base=base_uv)
    nodes = np.linspace(lo, hi, n)
    b = int(np.argmin(np.abs(nodes)))
    field = MeasuredInvariantField(patch, step=fd_step, order=fd_order)

    true_frame = frame_at(patch, nodes[b], nodes[b])
    initial = FrameState.from_frame(true_frame)
    result = integrate(field, initial, nodes, nodes, (b, b),
                       reortho_every=reortho_every, compat_points=compat_points)

    P, Q = np.meshgrid(nodes, nodes, indexing="ij")
    truth = patch.position(P, Q)
    lam, t = align_frames(result.state(b, b).lorentz_frame(), initial.lorentz_frame())
    rebuilt = result.positions @ lam.T + t
    err = np.linalg.norm(rebuilt - truth, axis=-1)

    report = {
        "spec": spec.to_dict(),
        "grid": {"n": n, "width": width, "step": float(nodes[1] - nodes[0]),
                 "corner": bool(corner), "base_uv": [float(x) for x in base_uv]},
        "max_position_error": float(np.max(err)),
        "phi_drift_max": result.diagnostics["phi_drift_max"],
        "phi_max": result.diagnostics["phi_max"],
        "compatibility_max": result.diagnostics["compatibility_max"],
        "base_frame_orientation": int(true_frame.orientation()),
    }
    if remeasure:
        report.update(_remeasure(result, field, nodes))
    return report, result


def _remeasure(result, field, nodes):
    """Invariants and <H,H> of the rebuilt lattice compared with the inputs."""
    grid = GridPatch(nodes, nodes, result.positions)
    jets = grid.jet_grid()[2:-2, 2:-2]
    ff = first_form(jets)
    H = mean_curvature_vector(jets, ff)
    hh = np.abs(inner(H, H))
    frame = mt_normal_frame(jets, tol=1e-3)
    nu, lam, mu = sigma_decomposition(jets, frame, tol=1e-3)
    inner_nodes = nodes[2:-2]
    U, V = np.meshgrid(inner_nodes, inner_nodes, indexing="ij")
    ref = field.values(U, V)
    disc = np.max(np.abs(np.stack([nu, lam, mu], -1) - ref[..., 2:5]))
    return {
        "remeasured_HH_max": float(np.max(hh)),
        "remeasured_nu_lambda_mu_max_error": float(disc),
    }
