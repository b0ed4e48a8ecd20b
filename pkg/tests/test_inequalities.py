"""Verification harness: fitted constants, margins, and report plumbing."""
import numpy as np
import pytest

from sqgbounds.errors import ConfigurationError, PreconditionError
from sqgbounds.geometry import build_square_geometry
from sqgbounds.diagnostics import boundary_ratio, ratio_quad
from sqgbounds.operators import PHI_LINEAR, PHI_SQUARE, ConvexFn, softplus_hinge
from sqgbounds import inequalities as iq
from sqgbounds import solver as sv
from sqgbounds import spectral as sp


@pytest.fixture(scope="module")
def geom():
    return build_square_geometry(128)


@pytest.fixture(scope="module")
def mix(geom):
    f = sp.mode_field(geom, 1, 1)
    f.coeffs[1, 2] = 0.4
    f.coeffs[3, 1] = -0.2
    return sp.SpectralField(f.coeffs, geom, tag="mix")


@pytest.fixture(scope="module")
def short_run():
    g = build_square_geometry(64)
    theta0 = sp.mode_field(g, 1, 1, amp=0.5)
    theta0.coeffs[1, 1] = 0.15
    cfg = sv.SolverConfig(dt=2e-3, t_end=0.4, drift_mode="sqg",
                          output_interval=0.1)
    return sv.run(theta0, cfg), cfg, theta0


def test_fit_line_recovers_exact_line():
    x = np.linspace(0, 1, 7)
    slope, intercept, r2 = iq.fit_line(x, 3.0 * x - 2.0)
    assert abs(slope - 3.0) < 1e-12 and abs(intercept + 2.0) < 1e-12
    assert r2 == 1.0


def test_cordoba_seeded_family(geom):
    fields = iq.seeded_family(geom, 4, 12, seed=1)
    rep = iq.verify_cordoba(geom, fields, PHI_SQUARE)
    assert rep.passed and rep.fitted_constants["gamma1"] > 0


def test_cordoba_scale_invariant(geom, mix):
    r1 = iq.verify_cordoba(geom, [mix], PHI_SQUARE)
    big = sp.SpectralField(10.0 * mix.coeffs, geom)
    r2 = iq.verify_cordoba(geom, [big], PHI_SQUARE)
    assert abs(r1.fitted_constants["gamma1"]
               - r2.fitted_constants["gamma1"]) < 1e-9


def test_cordoba_linear_profile_degenerate(geom):
    rep = iq.verify_cordoba(geom, [sp.mode_field(geom, 1, 1)], PHI_LINEAR)
    assert rep.passed and rep.min_margin == 0.0
    assert "degenerate" in rep.notes


def test_cordoba_rejects_offset_profile(geom):
    shifted = ConvexFn(lambda z: z * z + 1.0, lambda z: 2.0 * z, "shifted")
    with pytest.raises(PreconditionError):
        iq.verify_cordoba(geom, [sp.mode_field(geom, 1, 1)], shifted)


def test_weighted_identity_defect_sign(geom, mix):
    w1 = sp.mode_field(geom, 1, 1)
    rep = iq.verify_weighted_identity([boundary_ratio(mix)], w1,
                                      [PHI_SQUARE, softplus_hinge(0.3)])
    assert rep.passed
    assert rep.fitted_constants["reflection_residual"] < 1e-10


def test_weighted_identity_hinge_above_range(geom, mix):
    w1 = sp.mode_field(geom, 1, 1)
    b = boundary_ratio(mix)
    high = softplus_hinge(float(np.abs(b.values).max()) + 5.0)
    rep = iq.verify_weighted_identity([b], w1, [high])
    # profile vanishes identically on the ratio's range
    assert rep.passed and abs(rep.min_margin) < 1e-10


def test_lambda_one_lower(geom):
    rep = iq.verify_lambda_one_lower(geom)
    assert rep.passed
    assert rep.fitted_constants["c0"] > 0
    assert rep.fitted_constants["symmetry_residual"] < 1e-10
    assert rep.fitted_constants["quadrature_residual"] < 1e-8


def test_lambda_one_duality_oracle(geom):
    # int w_11 (Lambda 1) = sqrt(lam_11) int w_11 = sqrt(2) * 8 / pi
    vals = iq.lambda_one_values(geom)
    got = ratio_quad(geom, vals * geom.ground_state)
    want = np.sqrt(2.0) * 8.0 / np.pi
    assert abs(got - want) / want < 5e-5


def test_lambda_one_refinement_consistent(geom):
    coarse = iq.lambda_one_values(geom)
    fine = iq.lambda_one_values(build_square_geometry(256))
    assert np.abs(fine[1::2, 1::2] - coarse).max() < 1e-12


def test_decay_envelope_ground_state_exact():
    g = build_square_geometry(64)
    cfg = sv.SolverConfig(dt=1e-3, t_end=0.5, drift_mode="sqg",
                          output_interval=0.25)
    res = sv.run(sp.mode_field(g, 1, 1), cfg)
    rep = iq.verify_decay_envelope(res, cfg, B=1.0)
    assert rep.passed
    # single mode decays exactly: envelope is tight at every output time
    assert max(rep.margins) < 1e-7


def test_decay_envelope_perturbed(short_run):
    res, cfg, theta0 = short_run
    g = theta0.geometry
    B = float(np.abs(sp.inverse(theta0).values / g.ground_state).max()) + 1e-9
    rep = iq.verify_decay_envelope(res, cfg, B)
    assert rep.passed


def test_decay_envelope_rejects_small_B(short_run):
    res, cfg, theta0 = short_run
    with pytest.raises(PreconditionError):
        iq.verify_decay_envelope(res, cfg, B=1e-6)


def test_weighted_lp_control(short_run):
    res, cfg, theta0 = short_run
    rep = iq.verify_weighted_lp_control(res, m=2)
    assert rep.passed and rep.min_margin >= -0.05


def test_weighted_lp_control_rejects_large_drift(short_run):
    res, cfg, theta0 = short_run
    with pytest.raises(PreconditionError):
        iq.verify_weighted_lp_control(res, m=2, v_s_sup=1e6)


def test_bridge_ground_state_closed_forms(geom):
    # b = 1: ||b||_p = (pi^2)^{1/p}, weighted norm = (8/pi)^{1/2m}
    w1 = sp.mode_field(geom, 1, 1)
    rep = iq.verify_weight_norm_bridge(w1, m=2, p=1.5)
    assert rep.passed
    A = ratio_quad(geom, geom.ground_state ** (-1.5 / 2.5))
    assert abs(rep.fitted_constants["A_mp"] - A) < 1e-12
    lhs = np.pi ** (2.0 / 1.5)
    rhs = rep.fitted_constants["C_mp"] * (8.0 / np.pi) ** 0.25
    # the weighted factor uses grid quadrature of w_1: accurate to ~1e-4
    assert abs(rep.margins[0] - (rhs - lhs) / rhs) < 5e-4


def test_bridge_random_both_directions(geom, mix):
    assert iq.verify_weight_norm_bridge(mix, m=4, p=3.0).passed
    assert iq.verify_weight_norm_bridge(mix, m=2, p=3.0).passed


def test_bridge_homogeneous(geom, mix):
    r1 = iq.verify_weight_norm_bridge(mix, m=2, p=1.5)
    big = sp.SpectralField(10.0 * mix.coeffs, geom)
    r2 = iq.verify_weight_norm_bridge(big, m=2, p=1.5)
    assert abs(r1.margins[0] - r2.margins[0]) < 1e-10


def test_bridge_rejects_inapplicable_exponents(geom, mix):
    with pytest.raises(ConfigurationError):
        iq.verify_weight_norm_bridge(mix, m=3, p=4.0)


def test_velocity_log_bound_dichotomy(geom):
    grow = iq.verify_velocity_log_bound(iq.constant_field(geom))
    assert grow.passed
    assert grow.regression[2] >= 0.9 and grow.fitted_constants["B"] > 0
    flat = iq.verify_velocity_log_bound(sp.mode_field(geom, 1, 1),
                                        expect_log_growth=False)
    assert flat.passed
    assert flat.fitted_constants["B"] <= 0.1 * grow.fitted_constants["B"]
    assert np.isfinite(flat.fitted_constants["u_sup"])
    assert np.isfinite(grow.fitted_constants["exp_integral"])


def test_velocity_conditional_bound(geom):
    rep = iq.verify_velocity_conditional_bound(iq.conditional_family(geom),
                                               p=4.0)
    assert rep.passed and np.isfinite(rep.fitted_constants["C"])


def test_velocity_conditional_linearity(geom):
    fam = iq.conditional_family(geom)
    doubled = [sp.SpectralField(2.0 * f.coeffs, geom) for f in fam]
    from sqgbounds.operators import riesz_velocity
    u1 = riesz_velocity(fam[2]).sup_norm()
    u2 = riesz_velocity(doubled[2]).sup_norm()
    assert abs(u2 - 2.0 * u1) < 1e-12


def test_short_time_smallness(geom, mix):
    rep = iq.verify_short_time_smallness(mix, c_r=0.05)
    assert rep.passed and rep.fitted_constants["tau"] > 0
    small = iq.verify_short_time_smallness(mix, c_r=0.02)
    assert small.fitted_constants["tau"] <= rep.fitted_constants["tau"]
    easy = iq.verify_short_time_smallness(mix, c_r=1e9)
    assert easy.passed and "unconstrained" in easy.notes
    with pytest.raises(ConfigurationError):
        iq.verify_short_time_smallness(mix, c_r=0.0)


def test_finite_difference_velocity(geom, mix):
    L = geom.side_length
    rep = iq.verify_finite_difference_velocity(mix, (L / 2, L / 2), L / 8,
                                               p=4.0)
    assert rep.passed
    assert np.isfinite(rep.fitted_constants["C_eps"])
    deltas = [rep.fitted_constants[f"delta_eps_{e:g}"]
              for e in (0.025, 0.05, 0.1)]
    assert deltas[0] <= deltas[1] <= deltas[2]


def test_normal_velocity_rate(geom, mix):
    rep = iq.verify_normal_velocity_rate(mix, p=4.0, alpha=0.4)
    assert rep.passed
    assert rep.fitted_constants["slope"] >= rep.fitted_constants["target"]
    assert np.isfinite(rep.fitted_constants["grad_T_sup"])


def test_commutator_scaling_ground_state():
    g = build_square_geometry(2048)
    w1 = sp.mode_field(g, 1, 1)
    rep = iq.verify_commutator_scaling(w1, p=np.inf)
    assert rep.passed
    assert -1.3 <= rep.fitted_constants["slope"] <= 0.0
    assert rep.regression[2] >= 0.85
    doubled = iq.verify_commutator_scaling(
        sp.SpectralField(2.0 * w1.coeffs, g), p=np.inf)
    assert abs(doubled.fitted_constants["Gamma0"]
               - rep.fitted_constants["Gamma0"]) < 1e-9


def test_commutator_scaling_needs_fine_grid(geom, mix):
    with pytest.raises(ConfigurationError):
        iq.verify_commutator_scaling(mix, p=np.inf)


def test_kernel_bounds(geom):
    rep = iq.verify_kernel_bounds(geom, n_samples=1200, seed=3)
    assert rep.passed
    assert rep.samples >= 500
    assert 1.0 <= rep.fitted_constants["K"] <= 16.0
    assert rep.fitted_constants["c"] > 0
    assert rep.fitted_constants["cancel_ratio"] <= 1e-6
    again = iq.verify_kernel_bounds(geom, n_samples=1200, seed=3)
    assert again.fitted_constants == rep.fitted_constants


def test_report_round_trip(tmp_path, geom):
    rep = iq.verify_lambda_one_lower(geom)
    text_path, csv_path = iq.write_report(rep, tmp_path)
    body = open(text_path).read()
    assert "pass: True" in body and "constant c0:" in body
    lines = open(csv_path).read().strip().splitlines()
    assert lines[0] == "index,margin"
    assert len(lines) == len(rep.margins) + 1
