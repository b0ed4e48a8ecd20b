"""Fractional powers, heat objects, velocity, dissipation, cutoffs, commutator."""
import numpy as np
import pytest

from sqgbounds.errors import (ConfigurationError, DomainError, NumericError,
                              PreconditionError)
from sqgbounds.geometry import build_square_geometry
from sqgbounds import operators as op
from sqgbounds import spectral as sp


@pytest.fixture(scope="module")
def geom():
    return build_square_geometry(128)


# ---------------------------------------------------------------------------
# apply_lambda_power / heat_semigroup
# ---------------------------------------------------------------------------

def test_lambda_power_on_modes(geom):
    w11 = sp.mode_field(geom, 1, 1)
    out = op.apply_lambda_power(w11, 1.0)
    assert np.isclose(out.coeffs[0, 0], np.sqrt(2.0), rtol=1e-14)
    w23 = sp.mode_field(geom, 2, 3)
    out = op.apply_lambda_power(w23, -1.0)
    assert np.isclose(out.coeffs[1, 2], 13.0 ** -0.5, rtol=1e-14)


def test_lambda_power_semigroup_property(geom):
    rng = np.random.default_rng(0)
    f = sp.SpectralField(rng.standard_normal((geom.n_interior,) * 2), geom)
    twice = op.apply_lambda_power(op.apply_lambda_power(f, 0.5), 0.5)
    once = op.apply_lambda_power(f, 1.0)
    assert np.abs(twice.coeffs - once.coeffs).max() < 1e-12 * np.abs(once.coeffs).max()


def test_lambda_power_monotone_positive(geom):
    f = sp.SpectralField(np.ones((geom.n_interior,) * 2), geom)
    out = op.apply_lambda_power(f, 1.0).coeffs
    assert (out > 0).all()
    assert (np.diff(out, axis=0) > 0).all() and (np.diff(out, axis=1) > 0).all()


@pytest.mark.parametrize("s", [-1.5, 2.5])
def test_lambda_power_range_check(geom, s):
    with pytest.raises(ConfigurationError):
        op.apply_lambda_power(sp.mode_field(geom, 1, 1), s)


def test_heat_semigroup_basics(geom):
    f = sp.mode_field(geom, 3, 4)
    t = 0.2
    out = op.heat_semigroup(f, t)
    assert np.isclose(out.coeffs[2, 3], np.exp(-t * 25.0), rtol=1e-14)
    ident = op.heat_semigroup(f, 0.0)
    assert np.array_equal(ident.coeffs, f.coeffs)
    with pytest.raises(DomainError):
        op.heat_semigroup(f, -0.1)


def test_heat_semigroup_law(geom):
    rng = np.random.default_rng(1)
    f = sp.SpectralField(rng.standard_normal((geom.n_interior,) * 2), geom)
    a = op.heat_semigroup(op.heat_semigroup(f, 0.3), 0.4)
    b = op.heat_semigroup(f, 0.7)
    assert np.abs(a.coeffs - b.coeffs).max() < 1e-12


# ---------------------------------------------------------------------------
# lambda_via_heat
# ---------------------------------------------------------------------------

def test_lambda_via_heat_single_mode(geom):
    w11 = sp.mode_field(geom, 1, 1)
    out = op.lambda_via_heat(w11, 1.0)
    assert abs(out.coeffs[0, 0] - np.sqrt(2.0)) < 1e-8
    off = out.coeffs.copy()
    off[0, 0] = 0.0
    assert np.abs(off).max() < 1e-12


def test_lambda_via_heat_mixed_field(geom):
    f = sp.mode_field(geom, 1, 1)
    f.coeffs[2, 1] = 0.5
    for s in (0.5, 1.0, 1.5):
        got = op.lambda_via_heat(f, s)
        want = op.apply_lambda_power(f, s)
        err = np.abs(got.coeffs - want.coeffs).max() / np.abs(want.coeffs).max()
        assert err < 1e-8, f"s={s}: {err}"


def test_lambda_via_heat_zero_and_range(geom):
    z = sp.SpectralField(np.zeros((geom.n_interior,) * 2), geom)
    assert np.abs(op.lambda_via_heat(z, 1.0).coeffs).max() == 0.0
    with pytest.raises(ConfigurationError):
        op.lambda_via_heat(z, 2.0)
    with pytest.raises(ConfigurationError):
        op.lambda_via_heat(z, 0.0)


def test_lambda_via_heat_reports_quadrature_failure(geom):
    f = sp.mode_field(geom, 1, 1)
    bad = op.QuadratureConfig(panels=2, nodes_per_panel=2, tol=1e-12)
    with pytest.raises(NumericError):
        op.lambda_via_heat(f, 1.0, quadrature=bad)


# ---------------------------------------------------------------------------
# heat kernel
# ---------------------------------------------------------------------------

def test_heat_kernel_symmetry_and_domain(geom):
    x, y = (1.0, 1.2), (2.0, 0.7)
    a = op.heat_kernel(geom, x, y, 0.3)
    b = op.heat_kernel(geom, y, x, 0.3)
    assert a.value == b.value
    with pytest.raises(DomainError):
        op.heat_kernel(geom, x, y, 0.0)


def test_heat_kernel_mass_at_most_one(geom):
    """int H_D(t, x, y) dy <= 1: computed from the factorized eigensum with
    the closed-form mode integrals int_0^L sin(k_m y) dy."""
    L = geom.side_length
    m = geom.modes
    k = m * np.pi / L
    intw = (L / (m * np.pi)) * (1.0 - (-1.0) ** m)
    for t in (0.01, 0.1, 1.0):
        for x in [(0.3, 1.5), (1.6, 1.6), (2.9, 0.4)]:
            decay = np.exp(-t * k ** 2)
            f1 = float((decay * (2.0 / L) * np.sin(k * x[0]) * intw).sum())
            f2 = float((decay * (2.0 / L) * np.sin(k * x[1]) * intw).sum())
            assert f1 * f2 <= 1.0 + 1e-8
            assert f1 * f2 > 0.0


def test_heat_kernel_long_time_leading_mode(geom):
    t = 5.0
    x, y = (1.0, 1.2), (2.0, 0.7)
    s = op.heat_kernel(geom, x, y, t)
    w1 = lambda p: (2.0 / np.pi) * np.sin(p[0]) * np.sin(p[1])
    assert abs(s.value * np.exp(geom.lam1 * t) - w1(x) * w1(y)) < 1e-6


def test_heat_kernel_truncation_warning(geom):
    s = op.heat_kernel(geom, (1.0, 1.0), (1.0, 1.0), 1e-4, modes=8)
    assert s.truncation_warning
    ok = op.heat_kernel(geom, (1.0, 1.0), (1.0, 1.0), 0.5, modes=64)
    assert not ok.truncation_warning
    assert ok.value >= -ok.tail_bound


def test_heat_of_one_images(geom):
    """Method-of-images e^{t Delta} 1 matches the sine eigensum."""
    L = geom.side_length
    x = geom.x
    t = 0.05
    m = geom.modes
    k = m * np.pi / L
    coeff = (2.0 / (m * np.pi)) * (1.0 - (-1.0) ** m) * np.exp(-t * k ** 2)
    series = np.sin(np.outer(x, k)) @ coeff
    assert np.abs(op.heat_of_one_1d(t, x, L) - series).max() < 1e-10
    # derivative against a centered difference of the images formula
    eps = 1e-6
    fd = (op.heat_of_one_1d(t, x + eps, L) - op.heat_of_one_1d(t, x - eps, L)) / (2 * eps)
    assert np.abs(op.heat_of_one_1d_dx(t, x, L) - fd).max() < 1e-5


# ---------------------------------------------------------------------------
# velocity
# ---------------------------------------------------------------------------

def test_riesz_velocity_ground_mode_closed_form(geom):
    u = op.riesz_velocity(sp.mode_field(geom, 1, 1))
    X, Y = geom.meshgrid()
    c = (2.0 / np.pi) / np.sqrt(2.0)
    assert np.abs(u.u_x.values + c * np.sin(X) * np.cos(Y)).max() < 1e-12
    assert np.abs(u.u_y.values - c * np.cos(X) * np.sin(Y)).max() < 1e-12


def test_riesz_velocity_zero_and_sign(geom):
    z = sp.SpectralField(np.zeros((geom.n_interior,) * 2), geom)
    u = op.riesz_velocity(z)
    assert u.sup_norm() == 0.0
    w = sp.mode_field(geom, 2, 1)
    plus = op.riesz_velocity(w, j_sign=1.0)
    minus = op.riesz_velocity(w, j_sign=-1.0)
    assert np.abs(plus.u_x.values + minus.u_x.values).max() < 1e-15


def test_riesz_velocity_isometry_divergence_trace(geom):
    rng = np.random.default_rng(2)
    for m, n in [(1, 1), (4, 7), (20, 3)]:
        u = op.riesz_velocity(sp.mode_field(geom, m, n, amp=rng.uniform(0.5, 2)))
        theta_norm = abs(u.stream.coeffs[m - 1, n - 1]) * np.sqrt(
            geom.eigenvalues[m - 1, n - 1])
        assert abs(u.l2_norm() - theta_norm) < 1e-12
    f = sp.SpectralField(rng.standard_normal((geom.n_interior,) * 2), geom)
    u = op.riesz_velocity(f)
    scale = f.l2_norm()
    assert np.abs(u.divergence().values).max() < 1e-10 * scale
    assert u.normal_trace < 1e-10 * scale


def test_short_time_velocity_limits(geom):
    w11 = sp.mode_field(geom, 1, 1)
    full = op.riesz_velocity(w11)
    late = op.short_time_velocity(w11, 50.0)
    assert np.abs(late.u_x.values - full.u_x.values).max() < 1e-8
    sups = [op.short_time_velocity(w11, tau).sup_norm()
            for tau in (1e-6, 1e-4, 1e-2, 1.0)]
    assert sups[0] < 1e-2
    assert all(a <= b + 1e-15 for a, b in zip(sups, sups[1:]))
    with pytest.raises(DomainError):
        op.short_time_velocity(w11, 0.0)


# ---------------------------------------------------------------------------
# nonlinear dissipation
# ---------------------------------------------------------------------------

def test_dissipation_ground_mode_boundary_repulsion(geom):
    w11 = sp.mode_field(geom, 1, 1)
    D = op.nonlinear_dissipation(w11)
    fv = sp.inverse(w11).values
    keep = geom.unmasked(min_distance=4 * geom.spacing)
    gamma1 = float((geom.distance[keep] * D.values[keep] / fv[keep] ** 2).min())
    assert gamma1 > 0.0
    assert gamma1 > 0.5    # frozen from the N=128 evaluation (0.563)


def test_dissipation_zero_scaling_positivity(geom):
    z = sp.SpectralField(np.zeros((geom.n_interior,) * 2), geom)
    assert np.abs(op.nonlinear_dissipation(z).values).max() == 0.0
    rng = np.random.default_rng(3)
    c = np.zeros((geom.n_interior,) * 2)
    c[:6, :6] = rng.standard_normal((6, 6))
    f = sp.SpectralField(c, geom)
    D1 = op.nonlinear_dissipation(f)
    D3 = op.nonlinear_dissipation(sp.SpectralField(3.0 * c, geom))
    scale = np.abs(D3.values).max()
    assert np.abs(D3.values - 9.0 * D1.values).max() < 1e-12 * scale
    sup = sp.inverse(f).sup_norm()
    assert D1.values.min() >= -1e-8 * sup ** 2
    assert geom.quad(D1.values) >= -1e-12


# ---------------------------------------------------------------------------
# weighted convexity identity
# ---------------------------------------------------------------------------

def test_weighted_convexity_linear_is_equality_case(geom):
    w11 = sp.mode_field(geom, 1, 1)
    bv = sp.inverse(sp.mode_field(geom, 1, 2)).values / sp.inverse(w11).values
    lhs, rhs_core, defect = op.weighted_convexity_terms(
        sp.GridField(bv, geom), w11, op.PHI_LINEAR)
    assert np.abs(defect.values).max() < 1e-10
    assert np.abs(rhs_core.values).max() < 1e-10


def test_weighted_convexity_constant_ratio(geom):
    w11 = sp.mode_field(geom, 1, 1)
    ones = sp.GridField(np.ones((geom.n_interior,) * 2), geom)
    lhs, rhs_core, defect = op.weighted_convexity_terms(ones, w11, op.PHI_SQUARE)
    assert np.abs(defect.values).max() < 1e-10
    assert np.abs(lhs.values - np.sqrt(2.0) * geom.ground_state).max() < 1e-10


def test_weighted_convexity_defect_nonnegative(geom):
    w11 = sp.mode_field(geom, 1, 1)
    bv = sp.inverse(sp.mode_field(geom, 1, 2)).values / sp.inverse(w11).values
    b = sp.GridField(bv, geom)
    for phi in (op.PHI_SQUARE, op.softplus_hinge(0.5)):
        lhs, rhs_core, defect = op.weighted_convexity_terms(b, w11, phi)
        scale = np.abs(lhs.values).max()
        assert defect.values.min() >= -1e-8 * scale
        assert np.abs(lhs.values - rhs_core.values - defect.values).max() < 1e-10 * scale


def test_weighted_convexity_rejects_bad_inputs(geom):
    w11 = sp.mode_field(geom, 1, 1)
    ones = sp.GridField(np.ones((geom.n_interior,) * 2), geom)
    concave = op.ConvexFn(lambda z: -z * z, lambda z: -2.0 * z, "concave")
    with pytest.raises(PreconditionError):
        op.weighted_convexity_terms(ones, w11, concave)
    signed = sp.mode_field(geom, 2, 1)    # changes sign on the interior
    with pytest.raises(DomainError):
        op.weighted_convexity_terms(ones, signed, op.PHI_SQUARE)


def test_softplus_hinge_shape():
    phi = op.softplus_hinge(1.0, sharpness=0.05)
    assert abs(phi(0.0)) < 1e-12
    assert phi(2.0) > 0.9
    z = np.linspace(-1.0, 3.0, 200)
    assert (np.diff(phi.deriv(z)) >= 0).all()


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

def test_standard_cutoff_values_and_nesting(geom):
    x0 = (np.pi / 2, np.pi / 2)
    ell = np.pi / 4
    cut = op.standard_cutoff(geom, x0, ell)
    i = geom.grid_size // 2 - 1   # node at the exact center
    assert cut.phi.values[i, i] == 1.0
    assert cut.chi.values[i, i] == 1.0
    assert (cut.phi.values >= 0).all() and (cut.chi.values <= 1).all()
    assert (cut.chi.values >= cut.phi.values).all()
    assert np.abs(cut.chi.values * cut.phi.values - cut.phi.values).max() == 0.0
    X, Y = geom.meshgrid()
    r = np.hypot(X - x0[0], Y - x0[1])
    assert np.abs(cut.phi.values[r >= 0.5 * ell]).max() == 0.0
    assert np.abs(cut.phi.values[r > (7.0 / 16.0) * ell]).max() == 0.0
    # chi is identically 1 wherever phi is supported (gradients disjoint)
    assert (cut.chi.values[cut.phi.values > 0] == 1.0).all()


def test_standard_cutoff_preconditions(geom):
    with pytest.raises(PreconditionError):
        op.standard_cutoff(geom, (0.3, np.pi / 2), 0.5)       # d(x0) < 2 ell
    with pytest.raises(PreconditionError):
        op.standard_cutoff(geom, (np.pi / 2, np.pi / 2), np.pi)  # ell > L/4
    with pytest.raises(PreconditionError):
        op.standard_cutoff(geom, (np.pi / 2, np.pi / 2), 0.0)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def test_finite_difference_zero_and_linear(geom):
    X, Y = geom.meshgrid()
    f = sp.GridField(2.0 * X - 0.5 * Y, geom)
    dx = geom.spacing
    zero = op.finite_difference(f, (0.0, 0.0))
    assert np.abs(zero.values).max() == 0.0
    d = op.finite_difference(f, (3 * dx, -2 * dx))
    expect = 2.0 * (3 * dx) - 0.5 * (-2 * dx)
    assert np.abs(d.values[d.valid] - expect).max() < 1e-12
    assert not d.valid.all() and d.valid.any()


def test_finite_difference_antisymmetry(geom):
    rng = np.random.default_rng(4)
    f = sp.GridField(rng.standard_normal((geom.n_interior,) * 2), geom)
    dx = geom.spacing
    fwd = op.finite_difference(f, (2 * dx, dx))
    bwd = op.finite_difference(f, (-2 * dx, -dx))
    # delta_{-h} f(x + h) = -delta_h f(x)
    inner = fwd.valid & np.roll(bwd.valid, (-2, -1), axis=(0, 1))
    shifted = np.roll(bwd.values, (-2, -1), axis=(0, 1))
    assert np.abs(shifted[inner] + fwd.values[inner]).max() < 1e-14


def test_finite_difference_requires_commensurate_step(geom):
    f = sp.GridField(np.zeros((geom.n_interior,) * 2), geom)
    with pytest.raises(ConfigurationError):
        op.finite_difference(f, (0.5 * geom.spacing, 0.0))


def test_finite_difference_accepts_spectral_input(geom):
    w11 = sp.mode_field(geom, 1, 1)
    dx = geom.spacing
    d = op.finite_difference(w11, (dx, 0.0))
    vals = sp.inverse(w11).values
    assert np.abs(d.values[:-1, :] - (vals[1:, :] - vals[:-1, :])).max() < 1e-14


# ---------------------------------------------------------------------------
# commutator
# ---------------------------------------------------------------------------

def test_commutator_zero_displacement(geom):
    C = op.commutator(sp.mode_field(geom, 1, 1), (np.pi / 2, np.pi / 2),
                      np.pi / 4, (0.0, 0.0))
    assert C.sup_norm() == 0.0


def test_commutator_precondition(geom):
    with pytest.raises(PreconditionError):
        op.commutator(sp.mode_field(geom, 1, 1), (np.pi / 2, np.pi / 2),
                      np.pi / 4, (np.pi / 8, 0.0))


def test_commutator_cancels_for_interior_supported_field(geom):
    """theta supported in {chi = 1} makes the two terms nearly cancel."""
    x0 = (np.pi / 2, np.pi / 2)
    ell = np.pi / 4
    X, Y = geom.meshgrid()
    r2 = (X - x0[0]) ** 2 + (Y - x0[1]) ** 2
    theta = sp.forward(sp.GridField(np.exp(-r2 / (2 * 0.08 ** 2)), geom))
    h = (geom.spacing, 0.0)
    C = op.commutator(theta, x0, ell, h)
    uncut = op.finite_difference(
        sp.inverse(op.apply_lambda_power(theta, 1.0)), h)
    assert C.sup_norm() / uncut.sup_norm() < 0.1


def test_commutator_dyadic_stability(geom):
    """Gamma_0 = ||C_h|| d(x0) / |h| stays within 20% under h -> h/2."""
    x0 = (np.pi / 2, np.pi / 2)
    ell = np.pi / 4
    dx = geom.spacing
    w11 = sp.mode_field(geom, 1, 1)
    gammas = []
    for h in (2 * dx, dx):
        C = op.commutator(w11, x0, ell, (h, 0.0))
        gammas.append(C.sup_norm() * (np.pi / 2) / h)
    assert abs(gammas[1] - gammas[0]) / gammas[0] < 0.2
