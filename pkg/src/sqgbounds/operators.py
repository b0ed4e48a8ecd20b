"""Nonlocal operators of the Dirichlet square-root Laplacian calculus.

Everything is built on the eigenfunction expansion: fractional powers and the
heat semigroup are mode multipliers, the Riesz velocity is a rotated gradient
of the inverse square root, and the heat kernel is a factorized eigensum.
The quadrature route to Lambda^s integrates the heat representation

    Lambda^s f = c_s * int_0^inf [f - e^{t Delta} f] t^{-1-s/2} dt

after the substitution t = e^u, with an analytic tail and a refinement
self-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf, gamma

from .errors import (ConfigurationError, DomainError, NumericError,
                     PreconditionError, ShapeError)
from .geometry import Geometry
from .spectral import (GridField, SpectralField, cos_eval, forward, inverse,
                       dealiased_product, sin_analyze, sin_eval)

MAX_CUTOFF_SCALE_FRAC = 0.25    # ell0 = L/4


# ---------------------------------------------------------------------------
# Mode multipliers
# ---------------------------------------------------------------------------

def apply_lambda_power(f: SpectralField, s: float) -> SpectralField:
    """Lambda^s as the mode multiplier lam^{s/2} (s in [-1, 2])."""
    if not -1.0 <= s <= 2.0:
        raise ConfigurationError(f"power s must lie in [-1, 2], got {s}")
    mult = f.geometry.eigenvalues ** (s / 2.0)
    return SpectralField(mult * f.coeffs, f.geometry, tag=f.tag)


def heat_semigroup(f: SpectralField, t: float) -> SpectralField:
    """e^{t Delta} as the mode multiplier e^{-t lam}."""
    if t < 0:
        raise DomainError(f"heat semigroup requires t >= 0, got {t}")
    mult = np.exp(-t * f.geometry.eigenvalues)
    return SpectralField(mult * f.coeffs, f.geometry, tag=f.tag)


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite Gauss-Legendre rule in u = log t for the heat representation."""

    panels: int = 48
    nodes_per_panel: int = 12
    t_max_over_lam1: float = 40.0
    tol: float = 1e-9


def _heat_multiplier(lam: np.ndarray, s: float, quad: QuadratureConfig,
                     panels: int) -> np.ndarray:
    """c_s * int (1 - e^{-t lam}) t^{-1-s/2} dt on the truncated interval."""
    c_s = (s / 2.0) / gamma(1.0 - s / 2.0)
    lam_max = float(lam.max())
    lam_min = float(lam.min())
    # head below t_min contributes < tol relatively via 1 - e^{-t lam} <= t lam
    expo = 1.0 - s / 2.0
    t_min = min((quad.tol * expo / c_s) ** (1.0 / expo) / lam_max, 1e-6 / lam_max)
    t_max = quad.t_max_over_lam1 / lam_min
    u_lo, u_hi = np.log(t_min), np.log(t_max)
    edges = np.linspace(u_lo, u_hi, panels + 1)
    xg, wg = leggauss(quad.nodes_per_panel)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    t = np.exp(u)
    # after t = e^u the integrand is (1 - e^{-t lam}) t^{-s/2}
    integrand = -np.expm1(-np.outer(lam, t)) * t[None, :] ** (-s / 2.0)
    core = integrand @ w
    tail = (2.0 / s) * t_max ** (-s / 2.0)
    return c_s * (core + tail)


def lambda_via_heat(f: SpectralField, s: float,
                    quadrature: QuadratureConfig | None = None) -> SpectralField:
    """Lambda^s through the heat-semigroup integral representation.

    Quadrature is checked by panel doubling; disagreement beyond the
    configured tolerance raises ``NumericError`` with the residual.
    """
    if not 0.0 < s < 2.0:
        raise ConfigurationError(f"heat representation needs s in (0, 2), got {s}")
    quad = quadrature or QuadratureConfig()
    lam, idx = np.unique(f.geometry.eigenvalues, return_inverse=True)
    coarse = _heat_multiplier(lam, s, quad, quad.panels)
    fine = _heat_multiplier(lam, s, quad, 2 * quad.panels)
    residual = float(np.abs(fine - coarse).max() / np.abs(fine).max())
    if residual > quad.tol:
        raise NumericError(
            f"heat-representation quadrature did not converge: "
            f"refinement residual {residual:.3e} exceeds tol {quad.tol:.1e}")
    mult = fine[idx].reshape(f.coeffs.shape)
    return SpectralField(mult * f.coeffs, f.geometry, tag=f.tag)


# ---------------------------------------------------------------------------
# Heat kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeatKernelSample:
    """One evaluation of the Dirichlet heat kernel H_D(t, x, y)."""

    x: tuple[float, float]
    y: tuple[float, float]
    t: float
    value: float
    modes: int
    tail_bound: float
    truncation_warning: bool


def _kernel_sum_1d(t: float, a: float, b: float, L: float,
                   modes: int) -> float:
    m = np.arange(1, modes + 1)
    k = m * np.pi / L
    return float((2.0 / L) * np.sum(
        np.exp(-t * k ** 2) * np.sin(k * a) * np.sin(k * b)))


def heat_kernel(geometry: Geometry, x, y, t: float,
                modes: int | None = None,
                tail_tolerance: float = 1e-10) -> HeatKernelSample:
    """Factorized eigensum for the Dirichlet heat kernel on the square.

    The 2d sum over a square mode truncation is the product of two 1d sums.
    A geometric bound on the omitted modes is attached; if it exceeds
    ``tail_tolerance`` the sample carries a warning flag.
    """
    if t <= 0:
        raise DomainError(f"heat kernel requires t > 0, got {t}")
    M = geometry.n_interior if modes is None else int(modes)
    if not 1 <= M <= geometry.n_interior:
        raise ConfigurationError(
            f"modes must lie in [1, {geometry.n_interior}], got {M}")
    L = geometry.side_length
    h1 = _kernel_sum_1d(t, x[0], y[0], L, M)
    h2 = _kernel_sum_1d(t, x[1], y[1], L, M)
    # 1d tail: sum_{m>M} e^{-t k_m^2} <= e^{-t k_{M+1}^2} / (1 - ratio)
    kk = (np.pi / L) ** 2
    ratio = np.exp(-t * kk * (2 * M + 3))
    tail1 = (2.0 / L) * np.exp(-t * kk * (M + 1) ** 2) / max(1.0 - ratio, 1e-300)
    tail = tail1 * (abs(h1) + abs(h2)) + tail1 ** 2
    return HeatKernelSample(
        x=(float(x[0]), float(x[1])), y=(float(y[0]), float(y[1])),
        t=float(t), value=h1 * h2, modes=M, tail_bound=float(tail),
        truncation_warning=bool(tail > tail_tolerance))


def heat_of_one_1d(t: float, x: np.ndarray, L: float,
                   n_images: int = 6) -> np.ndarray:
    """e^{t Delta} 1 on the interval (0, L), by the method of images."""
    s = 2.0 * np.sqrt(t)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for n in range(-n_images, n_images + 1):
        out += (erf((x - 2 * n * L) / s)
                - 0.5 * erf((x - (2 * n + 1) * L) / s)
                - 0.5 * erf((x - (2 * n - 1) * L) / s))
    return out


def heat_of_one_1d_dx(t: float, x: np.ndarray, L: float,
                      n_images: int = 6) -> np.ndarray:
    """Spatial derivative of :func:`heat_of_one_1d`."""
    s = 2.0 * np.sqrt(t)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    c = 2.0 / (s * np.sqrt(np.pi))
    for n in range(-n_images, n_images + 1):
        out += c * (np.exp(-((x - 2 * n * L) / s) ** 2)
                    - 0.5 * np.exp(-((x - (2 * n + 1) * L) / s) ** 2)
                    - 0.5 * np.exp(-((x - (2 * n - 1) * L) / s) ** 2))
    return out


# ---------------------------------------------------------------------------
# Velocity
# ---------------------------------------------------------------------------

@dataclass
class VelocityField:
    """Divergence-free velocity sampled at the interior nodes.

    ``u_x`` carries a cosine factor in y and ``u_y`` in x, so both components
    vanish on the side they are normal to; ``normal_trace`` records the
    residual of an explicit boundary evaluation.
    """

    u_x: GridField
    u_y: GridField
    stream: SpectralField
    normal_trace: float

    @property
    def geometry(self) -> Geometry:
        return self.stream.geometry

    def sup_norm(self) -> float:
        return float(np.sqrt(self.u_x.values ** 2 + self.u_y.values ** 2).max())

    def l2_norm(self) -> float:
        """||u||_{L^2} = ||grad psi||_{L^2}, exact via Parseval on the stream."""
        lam = self.geometry.eigenvalues
        return float(np.sqrt((lam * self.stream.coeffs ** 2).sum()))

    def divergence(self) -> GridField:
        """du_x/dx + du_y/dy via independent per-axis transforms."""
        g = self.geometry
        k = g.modes * np.pi / g.side_length
        cx = sin_analyze(self.u_x.values, axis=0)
        dux = cos_eval(cx * k[:, None], axis=0)
        cy = sin_analyze(self.u_y.values, axis=1)
        duy = cos_eval(cy * k[None, :], axis=1)
        return GridField(dux + duy, g)


def _perp_gradient(stream_coeffs: np.ndarray, geometry: Geometry,
                   j_sign: float) -> tuple[np.ndarray, np.ndarray]:
    """(u_x, u_y) = j_sign * (-d_y psi, d_x psi) at the interior nodes."""
    k = geometry.modes * np.pi / geometry.side_length
    scale = 2.0 / geometry.side_length
    psi_y = scale * cos_eval(sin_eval(stream_coeffs * k[None, :], axis=0), axis=1)
    psi_x = scale * cos_eval(sin_eval(stream_coeffs * k[:, None], axis=1), axis=0)
    return -j_sign * psi_y, j_sign * psi_x


def _boundary_trace(stream_coeffs: np.ndarray, geometry: Geometry) -> float:
    """Max |u . n| over the four sides, from the explicit eigensum."""
    # u_x on x in {0, L} carries sin(k_m x); evaluate that factor directly
    ends = np.abs(np.sin(geometry.modes * np.pi))  # |sin(k m L)|, sin(0) = 0
    k = geometry.modes * np.pi / geometry.side_length
    amp = (2.0 / geometry.side_length) * np.abs(stream_coeffs)
    tx = float((amp * k[None, :]).sum(axis=1).max() * ends.max())
    ty = float((amp * k[:, None]).sum(axis=0).max() * ends.max())
    return max(tx, ty)


def riesz_velocity(theta: SpectralField, j_sign: float = 1.0) -> VelocityField:
    """u = J grad Lambda^{-1} theta with J = rotation by +pi/2 (sign flippable)."""
    psi = apply_lambda_power(theta, -1.0)
    ux, uy = _perp_gradient(psi.coeffs, theta.geometry, j_sign)
    trace = _boundary_trace(psi.coeffs, theta.geometry)
    return VelocityField(GridField(ux, theta.geometry),
                         GridField(uy, theta.geometry),
                         psi, normal_trace=trace)


def short_time_velocity(theta: SpectralField, tau: float,
                        j_sign: float = 1.0) -> VelocityField:
    """Heat-smoothed part of the Riesz velocity, u_s.

    The mode multiplier is c * int_0^tau t^{-1/2} e^{-t lam} dt
    = lam^{-1/2} erf(sqrt(lam tau)) with c = pi^{-1/2}, so u_s recovers the
    full velocity as tau grows.
    """
    if tau <= 0:
        raise DomainError(f"short-time velocity requires tau > 0, got {tau}")
    lam = theta.geometry.eigenvalues
    mult = lam ** -0.5 * erf(np.sqrt(lam * tau))
    coeffs = mult * theta.coeffs
    ux, uy = _perp_gradient(coeffs, theta.geometry, j_sign)
    trace = _boundary_trace(coeffs, theta.geometry)
    return VelocityField(GridField(ux, theta.geometry),
                         GridField(uy, theta.geometry),
                         SpectralField(coeffs, theta.geometry),
                         normal_trace=trace)


# ---------------------------------------------------------------------------
# Nonlinear dissipation and the weighted convexity identity
# ---------------------------------------------------------------------------

def nonlinear_dissipation(f: SpectralField) -> GridField:
    """D(f) = f * Lambda f - (1/2) Lambda(f^2) at the interior nodes."""
    fv = inverse(f).values
    lam_f = inverse(apply_lambda_power(f, 1.0)).values
    f_sq = dealiased_product(f, f)
    lam_fsq = inverse(apply_lambda_power(f_sq, 1.0)).values
    return GridField(fv * lam_f - 0.5 * lam_fsq, f.geometry)


@dataclass(frozen=True)
class ConvexFn:
    """Scalar convex function with Phi(0) = 0 and an explicit derivative."""

    fn: callable
    deriv: callable
    name: str = ""

    def __call__(self, z):
        return self.fn(z)


PHI_SQUARE = ConvexFn(lambda z: z * z, lambda z: 2.0 * z, "square")
PHI_LINEAR = ConvexFn(lambda z: z, lambda z: np.ones_like(np.asarray(z, float)),
                      "linear")


def softplus_hinge(threshold: float, sharpness: float = 0.05) -> ConvexFn:
    """Smooth convex hinge vanishing at 0, growing past ``threshold``."""
    B, s = float(threshold), float(sharpness)

    def softplus(x):
        # overflow-safe: log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
        x = np.asarray(x, float)
        return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))

    off = s * softplus(-B / s)

    def fn(z):
        return s * softplus((np.asarray(z, float) - B) / s) - off

    def deriv(z):
        x = (np.asarray(z, float) - B) / s
        t = np.exp(-np.abs(x))
        return np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))

    return ConvexFn(fn, deriv, f"hinge(B={B})")


def _check_convex(phi: ConvexFn, lo: float, hi: float) -> None:
    pad = 0.1 * (hi - lo) + 1e-3 * max(1.0, abs(lo), abs(hi))
    z = np.linspace(lo - pad, hi + pad, 513)
    d = phi.deriv(z)
    scale = np.abs(d).max() + 1e-300
    if np.any(np.diff(d) < -1e-10 * scale):
        raise PreconditionError(
            f"function {phi.name or 'phi'} is not convex on the sampled "
            f"range [{lo:.3g}, {hi:.3g}]")


def weighted_convexity_terms(b: GridField, w: SpectralField, phi: ConvexFn
                             ) -> tuple[GridField, GridField, GridField]:
    """Terms of the weighted convexity identity for the ratio b = theta / w.

    Returns (lhs, rhs_core, defect) with
        lhs      = Phi'(b) Lambda(w b) - Lambda(w Phi(b)),
        rhs_core = (Lambda w) (b Phi'(b) - Phi(b)),
        defect   = lhs - rhs_core,
    and the defect is nonnegative (up to discretization) for convex Phi.
    """
    g = w.geometry
    wv = inverse(w).values
    if wv.min() <= 0:
        raise DomainError("weight must be positive at every interior node")
    if not np.isfinite(b.values).all():
        raise NumericError("ratio field has non-finite values")
    bv = b.values
    _check_convex(phi, float(bv.min()), float(bv.max()))

    def lam_of(values):
        return inverse(apply_lambda_power(forward(GridField(values, g)), 1.0)).values

    phib = np.asarray(phi(bv), dtype=float)
    dphib = np.asarray(phi.deriv(bv), dtype=float)
    lhs = dphib * lam_of(wv * bv) - lam_of(wv * phib)
    lam_w = inverse(apply_lambda_power(w, 1.0)).values
    rhs_core = lam_w * (bv * dphib - phib)
    return (GridField(lhs, g), GridField(rhs_core, g),
            GridField(lhs - rhs_core, g))


# ---------------------------------------------------------------------------
# Cutoffs, finite differences, commutator
# ---------------------------------------------------------------------------

def smoothstep_profile(z: np.ndarray) -> np.ndarray:
    """Nonincreasing C^2 profile: 1 for z <= 5/16, 0 for z >= 7/16."""
    z = np.asarray(z, dtype=float)
    t = np.clip((7.0 / 16.0 - z) / (2.0 / 16.0), 0.0, 1.0)
    return np.clip(t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2), 0.0, 1.0)


@dataclass(frozen=True)
class CutoffPair:
    """Nested bump pair: phi at scale ell inside chi at scale 2 ell."""

    center: tuple[float, float]
    scale: float
    phi: GridField
    chi: GridField


def standard_cutoff(geometry: Geometry, x0, ell: float) -> CutoffPair:
    """phi = profile(|x - x0| / ell), chi = profile(|x - x0| / (2 ell)).

    Requires the doubled bump to stay inside the domain: d(x0) >= 2 ell,
    and ell below the fixed largest admissible scale L/4.
    """
    cx, cy = float(x0[0]), float(x0[1])
    L = geometry.side_length
    d0 = min(cx, L - cx, cy, L - cy)
    if ell <= 0:
        raise PreconditionError(f"cutoff scale must be positive, got {ell}")
    if ell > MAX_CUTOFF_SCALE_FRAC * L:
        raise PreconditionError(
            f"cutoff scale {ell} exceeds the admissible maximum {L / 4}")
    if d0 < 2.0 * ell:
        raise PreconditionError(
            f"cutoff center too close to the boundary: d(x0) = {d0:.4g} "
            f"< 2 ell = {2 * ell:.4g}")
    X, Y = geometry.meshgrid()
    r = np.hypot(X - cx, Y - cy)
    phi = smoothstep_profile(r / ell)
    chi = smoothstep_profile(r / (2.0 * ell))
    return CutoffPair(center=(cx, cy), scale=float(ell),
                      phi=GridField(phi, geometry),
                      chi=GridField(chi, geometry))


def _commensurate_steps(h, geometry: Geometry) -> tuple[int, int]:
    dx = geometry.spacing
    steps = []
    for comp in h:
        ratio = comp / dx
        p = round(ratio)
        if abs(ratio - p) > 1e-9 * max(1.0, abs(ratio)):
            raise ConfigurationError(
                f"displacement component {comp} is not an integer multiple "
                f"of the grid spacing {dx}")
        steps.append(int(p))
    return steps[0], steps[1]


def finite_difference(f, h) -> GridField:
    """delta_h f(x) = f(x + h) - f(x) for a grid-commensurate displacement.

    Nodes whose shifted position leaves the open interior are flagged out in
    the result's ``valid`` mask and carry value 0.
    """
    if isinstance(f, SpectralField):
        f = inverse(f)
    g = f.geometry
    p, q = _commensurate_steps(h, g)
    n = g.n_interior
    vals = f.values
    out = np.zeros_like(vals)
    valid = np.zeros_like(vals, dtype=bool)
    i0, i1 = max(0, -p), min(n, n - p)
    j0, j1 = max(0, -q), min(n, n - q)
    if i0 < i1 and j0 < j1:
        out[i0:i1, j0:j1] = vals[i0 + p:i1 + p, j0 + q:j1 + q] - vals[i0:i1, j0:j1]
        valid[i0:i1, j0:j1] = True
    if f.valid is not None:
        valid &= f.valid
        shifted = np.zeros_like(valid)
        shifted[i0:i1, j0:j1] = f.valid[i0 + p:i1 + p, j0 + q:j1 + q]
        valid &= shifted
    out[~valid] = 0.0
    return GridField(out, g, valid=valid)


def commutator(theta: SpectralField, x0, ell: float, h) -> GridField:
    """Localized commutator of the finite difference with Lambda.

    C_h(theta) = phi * (delta_h Lambda theta) - phi * Lambda(chi * delta_h theta),
    where (phi, chi) is the standard cutoff pair at (x0, ell).
    """
    hv = np.hypot(float(h[0]), float(h[1]))
    if hv > ell / 16.0 + 1e-12 * ell:
        raise PreconditionError(
            f"|h| = {hv:.4g} exceeds ell/16 = {ell / 16:.4g}")
    g = theta.geometry
    cut = standard_cutoff(g, x0, ell)
    lam_theta = apply_lambda_power(theta, 1.0)
    d_lam = finite_difference(inverse(lam_theta), h)
    d_theta = finite_difference(inverse(theta), h)
    localized = cut.chi.values * d_theta.values
    lam_loc = inverse(apply_lambda_power(forward(GridField(localized, g)), 1.0))
    vals = cut.phi.values * (d_lam.values - lam_loc.values)
    # the chi support sits >= 9 ell / 8 from the boundary, so every node that
    # matters has a valid shifted neighbor; outside the phi support C_h = 0
    valid = d_lam.valid | (cut.phi.values == 0.0)
    vals[~valid] = 0.0
    return GridField(vals, g, valid=valid)
