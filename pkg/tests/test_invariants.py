import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import S0, S1, closed_form_field, plane_jet, sphere_jet
from mink4.errors import (
    DegenerateMetricRecovery,
    NotMarginallyTrapped,
    NotMarginallyTrappedData,
    OutOfDomain,
)
from mink4.invariants import (
    NAMES,
    FunctionInvariantField,
    LatticeInvariantField,
    MTFrame,
    PointClass,
    SevenInvariants,
    classify,
    frame_at,
    frame_connection,
    frenet_matrices,
    frenet_residuals,
    integrability_residuals,
    invariants_from_curvatures,
    measure_invariants,
    mt_normal_frame,
    null_allied_mcv,
    phi_values,
    recover_metric,
    sigma_decomposition,
)
from mink4.lorentz import CausalClass, inner
from mink4.meridian import MeridianSpec, build_meridian_surface, closed_form_invariants
from mink4.surface import (
    AnalyticPatch,
    FormInvariants,
    curvature_invariants,
    first_form,
    orthonormal_normal_frame,
    second_coeffs,
)

GAMMA_U1 = -np.sqrt(5) / np.sqrt(2)  # -1.581139


def meridian_grid(spec, n=21):
    patch = build_meridian_surface(spec)
    u = np.linspace(*spec.u_range, n)
    v = np.linspace(*spec.v_range, n)
    U, V = np.meshgrid(u, v, indexing="ij")
    jet = patch.jet(U, V)
    ff = first_form(jet)
    fi = curvature_invariants(ff, second_coeffs(jet, orthonormal_normal_frame(jet)))
    return U, jet, fi


# --- frames ---------------------------------------------------------------------------

def test_mt_frame_s0_at_u1(s0_patch):
    f = frame_at(s0_patch, 1.0, 0.0)
    for val in (inner(f.n1, f.n1), inner(f.n2, f.n2), inner(f.n1, f.n2) + 1):
        assert abs(val) < 1e-9
    assert f.gram_residual() < 1e-12


def test_mt_frame_rejects_sphere_and_plane():
    with pytest.raises(NotMarginallyTrapped):
        mt_normal_frame(sphere_jet(0.2, 0.3))
    with pytest.raises(NotMarginallyTrapped):
        mt_normal_frame(plane_jet(0.2, 0.3))


@pytest.mark.parametrize("spec", [S0, S1], ids=["S0", "S1"])
def test_phi_residuals_on_meridian_grids(spec):
    _, jet, _ = meridian_grid(spec)
    f = mt_normal_frame(jet)
    assert np.max(np.abs(phi_values(f.vectors()))) < 1e-9
    # n1 is H itself
    from mink4.surface import mean_curvature_vector

    assert np.array_equal(f.n1, mean_curvature_vector(jet, first_form(jet)))


def test_orientation_reported(s0_principal):
    f = frame_at(s0_principal, 0.0, 0.0)
    assert int(f.orientation()) in (-1, 1)
    assert int(f.swapped().orientation()) == -int(f.orientation())


# --- sigma decomposition -------------------------------------------------------------

def test_sigma_decomposition_s0_u1(s0_principal_at_1):
    jet = s0_principal_at_1.jet(0.0, 0.0)
    frame = mt_normal_frame(jet)
    nu, lam, mu, defect = sigma_decomposition(jet, frame, return_defect=True)
    assert abs(nu) < 1e-12 and abs(lam + 2) < 1e-12 and abs(mu + 0.5) < 1e-12
    assert defect < 1e-12
    assert abs(2 * lam * mu - 2) < 1e-12
    nu2, lam2, mu2 = sigma_decomposition(jet, frame.swapped())
    assert abs(nu2 + nu) < 1e-12 and abs(lam2 - lam) < 1e-12 and abs(mu2 - mu) < 1e-12


def test_invariants_from_curvatures_examples():
    mu2, lam, nu = invariants_from_curvatures(-1.0, 0.0, 2.0)
    assert (mu2, lam, nu) == (0.25, 2.0, 0.0)
    with pytest.raises(NotMarginallyTrappedData):
        invariants_from_curvatures(0.0, 0.0, 0.0)
    assert invariants_from_curvatures(-4.0, 0.0, 0.0) == (1.0, 0.0, 0.0)


@pytest.mark.parametrize("spec", [S0, S1], ids=["S0", "S1"])
def test_sigma_agrees_with_curvatures_on_grids(spec):
    _, jet, fi = meridian_grid(spec)
    nu, lam, mu = sigma_decomposition(jet, mt_normal_frame(jet))
    mu2, lam_c, nu_c = invariants_from_curvatures(fi.k, fi.kappa, fi.K)
    assert np.max(np.abs(np.abs(mu) - np.sqrt(mu2))) < 1e-6
    assert np.max(np.abs(np.abs(lam) - np.abs(lam_c))) < 1e-6
    assert np.max(np.abs(np.abs(nu) - np.abs(nu_c))) < 1e-6


@pytest.mark.parametrize("spec", [S0, S1], ids=["S0", "S1"])
def test_curvature_identities_and_null_allied_on_grids(spec):
    _, jet, fi = meridian_grid(spec)
    frame = mt_normal_frame(jet)
    nu, lam, mu = sigma_decomposition(jet, frame)
    assert np.max(np.abs(fi.k - 4 * mu**2 * (nu**2 - 1))) < 1e-8
    assert np.max(np.abs(fi.kappa + 2 * mu * nu)) < 1e-8
    assert np.max(np.abs(fi.K - 2 * lam * mu)) < 1e-8
    a = null_allied_mcv(frame, nu, lam, mu)
    assert np.max(np.abs(a - 0.5 * fi.K[..., None] * frame.n2)) < 1e-8


def test_classify_s0_everywhere_flat_normal_connection():
    _, jet, fi = meridian_grid(S0)
    frame = mt_normal_frame(jet)
    nu, lam, mu = sigma_decomposition(jet, frame)
    for idx in np.ndindex(nu.shape):
        f = classify(FormInvariants(*(getattr(fi, n)[idx] for n in "LMN"), 0, 0, 0),
                     nu[idx], lam[idx], CausalClass.LIGHTLIKE)
        assert PointClass.FLAT_NORMAL_CONNECTION in f and PointClass.MARGINALLY_TRAPPED in f
        assert PointClass.FLAT_GAUSS not in f


def test_flat_gauss_on_real_surface():
    # sign '-' with a = c = 1: lambda = -(u - 1)/u and K = (1 - u)/u^4 vanish at u = 1
    spec = MeridianSpec("timelike", 1.0, 1.0, sign="-")
    patch = build_meridian_surface(spec)
    for u, flat in ((1.0, True), (1.3, False)):
        jet = patch.jet(u, 0.7)
        ff = first_form(jet)
        fi = curvature_invariants(ff, second_coeffs(jet, orthonormal_normal_frame(jet)))
        frame = mt_normal_frame(jet)
        nu, lam, mu = sigma_decomposition(jet, frame)
        assert (abs(lam) < 1e-12) == flat and (abs(fi.K) < 1e-12) == flat
        assert (PointClass.FLAT_GAUSS in classify(fi, nu, lam, CausalClass.LIGHTLIKE)) == flat
        a = null_allied_mcv(frame, nu, lam, mu)
        assert (np.max(np.abs(a)) < 1e-12) == flat


# --- synthetic data ---------------------------------------------------------------------

nus = st.floats(-2, 2)
lams = st.floats(-3, 3)
mus = st.floats(0.05, 3).flatmap(lambda m: st.sampled_from([m, -m]))


@settings(max_examples=200)
@given(nus, lams, mus)
def test_synthetic_zero_sets(nu, lam, mu):
    k = 4 * mu**2 * (nu**2 - 1)
    kappa = -2 * mu * nu
    K = 2 * lam * mu
    mu2, lam_c, nu_c = invariants_from_curvatures(k, kappa, K)
    s = np.sign(mu)
    assert abs(mu2 - mu**2) < 1e-12 * max(1, mu**2) * 10
    assert abs(lam_c - s * lam) < 1e-10 and abs(nu_c - s * nu) < 1e-10
    tol = 1e-9
    # lambda = 0 iff K = 0, nu = 0 iff kappa = 0, nu = +-1 iff k = 0
    assert (abs(lam_c) <= tol) == (abs(K) <= tol * abs(mu) * 2)
    assert (abs(nu_c) <= tol) == (abs(kappa) <= tol * abs(mu) * 2)
    assert (abs(abs(nu_c) - 1) <= tol) == (abs(k) <= 4 * mu**2 * tol * abs(abs(nu) + 1))


def test_synthetic_zero_set_edges():
    for nu in (1.0, -1.0):
        k = 4 * 0.7**2 * (nu**2 - 1)
        assert k == 0
        _, _, nu_c = invariants_from_curvatures(k, -2 * 0.7 * nu, 0.3)
        fl = classify(FormInvariants(1, 0, 0, k, 0, 0), nu_c, 0.3, CausalClass.LIGHTLIKE)
        assert PointClass.PARABOLIC in fl
    fl = classify(FormInvariants(1, 0, 0, 0, 0, 0), 0.2, 0.0, CausalClass.LIGHTLIKE)
    assert PointClass.FLAT_GAUSS in fl and PointClass.PARABOLIC not in fl


def test_null_allied_examples(s0_principal_at_1):
    frame = frame_at(s0_principal_at_1, 0.0, 0.0)
    a = null_allied_mcv(frame, 0.0, -2.0, -0.5)
    assert np.allclose(a, frame.n2, atol=1e-15)
    assert np.allclose(null_allied_mcv(frame, 0.3, 0.0, 1.7), 0)
    for nu in (-1.3, 0.0, 0.4):
        assert np.allclose(null_allied_mcv(frame, nu, 1.0, 2.0), 2 * frame.n2)


def test_classify_examples():
    fi = FormInvariants(0.3, 0.0, -0.1, -1, 0, 2)
    assert classify(fi, 0.0, -2.0, CausalClass.LIGHTLIKE) == (
        PointClass.MARGINALLY_TRAPPED | PointClass.FLAT_NORMAL_CONNECTION)
    flat = FormInvariants(0.0, 0.0, 0.0, 0, 0, 1)
    f = classify(flat, None, None, CausalClass.SPACELIKE)
    assert f == PointClass.FLAT_POINT
    f = classify(flat, None, None, CausalClass.ZERO)
    assert PointClass.MINIMAL in f and PointClass.MARGINALLY_TRAPPED not in f
    f = classify(fi, 0.0, -2.0, CausalClass.LIGHTLIKE, beta=(GAMMA_U1, GAMMA_U1))
    assert PointClass.PARALLEL_H_CANDIDATE not in f
    f = classify(fi, 0.0, -2.0, CausalClass.LIGHTLIKE, beta=(0.0, 1e-9))
    assert PointClass.PARALLEL_H_CANDIDATE in f


# --- connection and Frenet residuals ----------------------------------------------------

def test_frame_connection_s0_u1(s0_principal_at_1):
    g1, g2, b1, b2 = frame_connection(s0_principal_at_1, 0.0, 0.0)
    for val in (g1, g2, b1, b2):
        assert abs(val - GAMMA_U1) < 1e-9
    assert abs(GAMMA_U1 + 1.581139) < 1e-6


def test_frame_connection_constant_frame_on_plane():
    patch = AnalyticPatch(plane_jet, ((-1, 1), (-1, 1)))
    s = 1 / np.sqrt(2)
    const = MTFrame(np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0]),
                    np.array([0, 0, s, s]), np.array([0, 0, -s, s]), np.zeros(4))
    out = frame_connection(patch, 0.2, 0.1, frame_field=lambda u, v: const)
    assert np.allclose(out, 0, atol=1e-15)
    with pytest.raises(NotMarginallyTrapped):
        frame_connection(patch, 0.2, 0.1)


def test_frame_connection_grid_points(s0_principal):
    s = np.linspace(-0.15, 0.15, 4)
    P, Q = np.meshgrid(s, s, indexing="ij")
    g1, g2, b1, b2 = frame_connection(s0_principal, P, Q)
    u, _ = s0_principal.to_uv(P, Q)
    cf = closed_form_invariants(S0, u)
    for val, want in ((g1, cf.gamma1), (g2, cf.gamma2), (b1, cf.beta1), (b2, cf.beta2)):
        assert np.max(np.abs(val - want)) < 1e-4


def test_frenet_residuals_s0(s0_principal):
    s = np.linspace(-0.15, 0.15, 4)
    P, Q = np.meshgrid(s, s, indexing="ij")
    _, worst = frenet_residuals(s0_principal, P, Q)
    assert worst < 1e-4
    inv = measure_invariants(s0_principal, P, Q)
    bumped = inv.copy()
    bumped[..., NAMES.index("mu")] += 0.1
    _, worst = frenet_residuals(s0_principal, P, Q, inv=bumped)
    assert worst > 0.05


def test_frenet_residuals_plane():
    patch = AnalyticPatch(plane_jet, ((-1, 1), (-1, 1)))
    with pytest.raises(NotMarginallyTrapped):
        frenet_residuals(patch, 0.0, 0.0)


def test_frenet_matrices_keep_gram(s0_principal):
    # d/du of the Gram matrix vanishes: A G0 + G0 A^T = 0 for the null-pair Gram G0
    from mink4.lorentz import NULL_PAIR_GRAM

    inv = measure_invariants(s0_principal, 0.05, -0.05)
    A, B = frenet_matrices(inv, 1.3, 0.7)
    for M in (A, B):
        assert np.max(np.abs(M @ NULL_PAIR_GRAM + NULL_PAIR_GRAM @ M.T)) < 1e-15


def test_out_of_domain(s0_principal):
    with pytest.raises(OutOfDomain):
        frame_connection(s0_principal, 0.25, 0.0)


# --- integrability -------------------------------------------------------------------

def test_integrability_s0(s0_principal, s0_measured):
    s = np.linspace(-0.15, 0.15, 3)
    P, Q = np.meshgrid(s, s, indexing="ij")
    sq = s0_measured.metric(P, Q)
    res = integrability_residuals(s0_measured, P, Q, *sq)
    assert res.shape == (3, 3, 6) and np.max(np.abs(res)) < 1e-5
    bumped = integrability_residuals(s0_measured.perturbed("beta2", 0.1), P, Q, *sq)
    assert np.max(np.abs(bumped[..., 5])) > 0.05


def test_integrability_closed_form_field(s0_principal):
    dom = ((-0.2, 0.2), (-0.2, 0.2))
    field = closed_form_field(S0, s0_principal, dom)
    s = np.linspace(-0.15, 0.15, 5)
    P, Q = np.meshgrid(s, s, indexing="ij")
    jet = s0_principal.jet(P, Q)
    ff = first_form(jet)
    res = integrability_residuals(field, P, Q, np.sqrt(ff.E), np.sqrt(ff.G))
    assert np.max(np.abs(res)) < 1e-8
    # recovered metric equals |z_p|, |z_q|
    _, sE, sG = field.coefficients(P, Q)
    assert np.max(np.abs(sE - np.sqrt(ff.E))) < 1e-8
    assert np.max(np.abs(sG - np.sqrt(ff.G))) < 1e-8


def test_constant_mu_degenerate():
    vals = np.array([0.3, 0.2, 0.0, 1.0, -0.5, 0.1, 0.2])
    field = FunctionInvariantField(
        lambda u, v: np.broadcast_to(vals, np.shape(u) + (7,)), ((0, 1), (0, 1)))
    with pytest.raises(DegenerateMetricRecovery):
        integrability_residuals(field, 0.5, 0.5)
    with pytest.raises(DegenerateMetricRecovery):
        recover_metric(vals, 0.0, 1.0)
    with pytest.raises(DegenerateMetricRecovery):
        integrability_residuals(field, 0.5, 0.5, -1.0, 1.0)


def test_seven_invariants_array_round_trip():
    arr = np.arange(14.0).reshape(2, 7)
    si = SevenInvariants.from_array(arr)
    assert np.array_equal(si.as_array(), arr) and np.array_equal(si.lam, arr[:, 3])


# --- fields -------------------------------------------------------------------------

def test_lattice_field_csv_round_trip(tmp_path, s0_principal):
    dom = ((-0.2, 0.2), (-0.2, 0.2))
    field = closed_form_field(S0, s0_principal, dom)
    nodes = np.linspace(-0.2, 0.2, 21)
    P, Q = np.meshgrid(nodes, nodes, indexing="ij")
    lat = LatticeInvariantField(nodes, nodes, field.values(P, Q))
    path = tmp_path / "inv.csv"
    lat.to_csv(path)
    assert path.read_text().splitlines()[0] == "u,v,gamma1,gamma2,nu,lambda,mu,beta1,beta2"
    back = LatticeInvariantField.from_csv(path)
    assert np.array_equal(back.samples, lat.samples)
    # spline interpolation and partials between the nodes
    s = np.linspace(-0.15, 0.15, 4)
    P2, Q2 = np.meshgrid(s, s, indexing="ij")
    assert np.max(np.abs(back.values(P2, Q2) - field.values(P2, Q2))) < 1e-8
    du, _ = back.partials(P2, Q2)
    du_ref, _ = field.partials(P2, Q2)
    assert np.max(np.abs(du - du_ref)) < 1e-6
    with pytest.raises(OutOfDomain):
        back.values(0.3, 0.0)


def test_lattice_field_rejects_bad_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("u,v,gamma1\n0,0,1\n")
    with pytest.raises(ValueError):
        LatticeInvariantField.from_csv(path)


def test_perturbed_field():
    field = FunctionInvariantField(
        lambda u, v: np.stack(np.broadcast_arrays(*(u * (i + 1) + v for i in range(7))), -1),
        ((0, 1), (0, 1)))
    p = field.perturbed("lambda", 0.1)
    assert np.allclose(p.values(0.3, 0.4) - field.values(0.3, 0.4), [0, 0, 0, 0.1, 0, 0, 0])
    q = field.perturbed("mu", lambda u, v: 0.1 * u)
    du, _ = q.partials(0.3, 0.4)
    assert abs(du[4] - 5.1) < 1e-8
    assert abs(q.mu_partials(0.3, 0.4)[0] - 5.1) < 1e-8
