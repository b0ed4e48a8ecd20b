"""Regularity functionals: ratio norms, interior Lipschitz, Hölder seminorm.

Everything here is a pure function of a state; ``record`` aggregates one
time slice into a ``DiagnosticsRecord`` and ``append_csv`` serializes rows
with a fixed column order.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .geometry import Geometry
from .operators import riesz_velocity
from .spectral import GridField, SpectralField, gradient, inverse
from .solver import SolverState, half_norm_sq

SPACE_DIMENSION = 2    # d in the d/p exponents

DEFAULT_PS = (2.0, 4.0)
DEFAULT_MS = (2,)
DEFAULT_ALPHAS = (0.4,)


def boundary_ratio(theta: SpectralField) -> GridField:
    """b_1 = theta / w_1 at the interior nodes (w_1 > 0 there)."""
    g = theta.geometry
    return GridField(inverse(theta).values / g.ground_state, g)


def ratio_quad(geometry: Geometry, values: np.ndarray) -> float:
    """Integral of a ratio-type field that need not vanish on the boundary.

    The nodes nearest each side absorb the boundary half-cells, so constants
    integrate exactly (plain rectangle weights lose the boundary strip).
    """
    w = np.full(geometry.n_interior, geometry.spacing)
    w[0] += 0.5 * geometry.spacing
    w[-1] += 0.5 * geometry.spacing
    return float(w @ values @ w)


def ratio_lp_norm(b1: GridField, p: float) -> float:
    """||b_1||_{L^p} by boundary-extended grid quadrature (p = inf: sup)."""
    if np.isinf(p):
        return b1.sup_norm()
    if p < 1:
        raise ConfigurationError(f"Lebesgue exponent must be >= 1, got {p}")
    return float(ratio_quad(b1.geometry, np.abs(b1.values) ** p) ** (1.0 / p))


def weighted_ratio_norm(theta: SpectralField, m: int) -> float:
    """(int w_1 b_1^{2m})^{1/2m} by boundary-extended grid quadrature."""
    if m < 1:
        raise ConfigurationError(f"moment index must be >= 1, got {m}")
    g = theta.geometry
    b1 = boundary_ratio(theta).values
    return float(ratio_quad(g, g.ground_state * b1 ** (2 * m)) ** (1.0 / (2 * m)))


def interior_lipschitz(theta: SpectralField) -> float:
    """M = sup_x d(x) |grad theta(x)| with the spectral gradient."""
    dx, dy = gradient(theta)
    mag = np.hypot(dx.values, dy.values)
    return float((theta.geometry.distance * mag).max())


class HolderSeminorm(NamedTuple):
    value: float
    skipped_nodes: int


_DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1))


def holder_seminorm(theta: SpectralField, alpha: float,
                    h_budget: float = 1.0 / 32.0) -> HolderSeminorm:
    """sup |delta_h theta| / |h|^alpha over dyadic grid displacements.

    Displacements run along both axes and diagonals with dyadic magnitudes
    from one grid spacing up, restricted to |h| <= h_budget * d(x).  Nodes
    too close to the boundary to admit any displacement are skipped and
    counted.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"Hölder exponent must be in (0, 1), got {alpha}")
    g = theta.geometry
    vals = inverse(theta).values
    dx = g.spacing
    n = g.n_interior
    best = 0.0
    admissible = np.zeros((n, n), dtype=bool)
    steps = 1
    while steps * dx <= h_budget * g.distance.max():
        for ex, ey in _DIRECTIONS:
            p, q = steps * ex, steps * ey
            hlen = np.hypot(p * dx, q * dx)
            i0, i1 = max(0, -p), min(n, n - p)
            j0, j1 = max(0, -q), min(n, n - q)
            if i0 >= i1 or j0 >= j1:
                continue
            diff = np.abs(vals[i0 + p:i1 + p, j0 + q:j1 + q] - vals[i0:i1, j0:j1])
            ok = g.distance[i0:i1, j0:j1] * h_budget >= hlen
            if ok.any():
                best = max(best, float((diff * ok).max()) / hlen ** alpha)
                admissible[i0:i1, j0:j1] |= ok
        steps *= 2
    return HolderSeminorm(best, int((~admissible).sum()))


def normal_velocity_slope(u, geometry: Geometry, shells: int = 4
                          ) -> tuple[float, float]:
    """Slope (and r^2) of log sup-shell |u . n| against log shell distance.

    n is the inward normal of the nearest side; shells are dyadic in the
    boundary distance below L/8.
    """
    X, Y = geometry.meshgrid()
    L = geometry.side_length
    near_x = np.minimum(X, L - X) <= np.minimum(Y, L - Y)
    un = np.where(near_x, np.abs(u.u_x.values), np.abs(u.u_y.values))
    d = geometry.distance
    tops = (L / 8.0) * 0.5 ** np.arange(shells)
    logs_d, logs_u = [], []
    for top in tops:
        sel = (d <= top) & (d > 0.5 * top)
        if sel.any() and un[sel].max() > 0:
            logs_d.append(np.log(top))
            logs_u.append(np.log(un[sel].max()))
    if len(logs_d) < 2:
        return 0.0, 0.0
    slope, intercept = np.polyfit(logs_d, logs_u, 1)
    fit = slope * np.asarray(logs_d) + intercept
    ss_res = float(((np.asarray(logs_u) - fit) ** 2).sum())
    ss_tot = float(((np.asarray(logs_u) - np.mean(logs_u)) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


@dataclass
class DiagnosticsRecord:
    """One time slice of every monitored regularity functional."""

    t: float
    sup_norm: float
    energy: float
    half_norm: float
    lipschitz: float
    b1_lp: dict[float, float]
    weighted_norm: dict[int, float]
    holder: dict[float, float]
    u_sup: float
    normal_rate: float


def record(state: SolverState,
           ps=DEFAULT_PS, ms=DEFAULT_MS, alphas=DEFAULT_ALPHAS
           ) -> DiagnosticsRecord:
    """Aggregate all functionals for one state (one velocity solve if uncached)."""
    theta = state.theta
    u = state.u if state.u is not None else riesz_velocity(theta)
    b1 = boundary_ratio(theta)
    slope, _ = normal_velocity_slope(u, theta.geometry)
    return DiagnosticsRecord(
        t=state.t,
        sup_norm=inverse(theta).sup_norm(),
        energy=theta.l2_norm() ** 2,
        half_norm=half_norm_sq(theta),
        lipschitz=interior_lipschitz(theta),
        b1_lp={p: ratio_lp_norm(b1, p) for p in ps},
        weighted_norm={m: weighted_ratio_norm(theta, m) for m in ms},
        holder={a: holder_seminorm(theta, a).value for a in alphas},
        u_sup=u.sup_norm(),
        normal_rate=slope,
    )


def csv_columns(rec: DiagnosticsRecord) -> list[str]:
    cols = ["t[1]", "sup_norm[1]", "energy[1]", "half_norm[1]", "lipschitz[1]"]
    cols += [f"b1_l{p:g}[1]" for p in sorted(rec.b1_lp)]
    cols += [f"weighted_m{m}[1]" for m in sorted(rec.weighted_norm)]
    cols += [f"holder_a{a:g}[1]" for a in sorted(rec.holder)]
    cols += ["u_sup[1]", "normal_rate[1]"]
    return cols


def csv_row(rec: DiagnosticsRecord) -> list[float]:
    row = [rec.t, rec.sup_norm, rec.energy, rec.half_norm, rec.lipschitz]
    row += [rec.b1_lp[p] for p in sorted(rec.b1_lp)]
    row += [rec.weighted_norm[m] for m in sorted(rec.weighted_norm)]
    row += [rec.holder[a] for a in sorted(rec.holder)]
    row += [rec.u_sup, rec.normal_rate]
    return row


def append_csv(path, rec: DiagnosticsRecord) -> None:
    """Append one record; writes the unit-annotated header on first use."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a") as fh:
        if new:
            fh.write(",".join(csv_columns(rec)) + "\n")
        fh.write(",".join(repr(float(v)) for v in csv_row(rec)) + "\n")
