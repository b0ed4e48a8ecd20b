"""Square-domain geometry: collocation grid, Dirichlet eigenpairs, ground state.

The domain is the open square (0, L)^2 discretized at the interior nodes of
the type-I discrete sine transform, x_i = i*L/N for i = 1..N-1 per axis.
Eigenfunctions of the Dirichlet Laplacian are

    w_{m,n}(x, y) = (2/L) sin(m pi x / L) sin(n pi y / L),  m, n = 1..N-1,

with eigenvalues lam_{m,n} = (m^2 + n^2) (pi/L)^2.  The ground state w_1 is
comparable to the boundary distance d(x) away from the corners; nodes within
``corner_radius`` of a corner are masked out of every comparison that relies
on that equivalence (w_1 vanishes quadratically at the corners).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_CORNER_RADIUS_FRAC = 0.05


@dataclass(frozen=True)
class Geometry:
    """Immutable description of the discretized square domain."""

    side_length: float
    grid_size: int                 # N; interior nodes are i*L/N, i=1..N-1
    corner_radius: float
    x: np.ndarray                  # (N-1,) interior coordinates (shared per axis)
    modes: np.ndarray              # (N-1,) mode indices 1..N-1
    eigenvalues: np.ndarray        # (N-1, N-1) lam_{m,n}
    ground_state: np.ndarray       # (N-1, N-1) samples of w_1
    distance: np.ndarray           # (N-1, N-1) d(x) = min distance to the sides
    corner_mask: np.ndarray        # (N-1, N-1) bool, True near a corner
    c0: float | None = None        # fitted lower constant of w_1/d
    C0: float | None = None        # fitted upper constant of w_1/d

    @property
    def spacing(self) -> float:
        return self.side_length / self.grid_size

    @property
    def n_interior(self) -> int:
        return self.grid_size - 1

    @property
    def lam1(self) -> float:
        return float(self.eigenvalues[0, 0])

    @property
    def area(self) -> float:
        return self.side_length ** 2

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates X[i,j] = x_i, Y[i,j] = y_j."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    def quad(self, values: np.ndarray) -> float:
        """Rectangle-rule integral over the domain (exact for the sine basis)."""
        return float(self.spacing ** 2 * values.sum())

    def unmasked(self, min_distance: float = 0.0) -> np.ndarray:
        """Boolean node selector: away from corners and at least min_distance inside."""
        keep = ~self.corner_mask
        if min_distance > 0.0:
            keep = keep & (self.distance >= min_distance)
        return keep

    def compatible(self, other: "Geometry") -> bool:
        return (
            self.grid_size == other.grid_size
            and self.side_length == other.side_length
        )


def build_square_geometry(
    N: int,
    side_length: float = np.pi,
    corner_radius: float | None = None,
) -> Geometry:
    """Build the square geometry with N-1 interior nodes per axis."""
    if N < 8:
        raise ConfigurationError(f"grid size N must be >= 8, got {N}")
    if side_length <= 0:
        raise ConfigurationError(f"side_length must be positive, got {side_length}")
    if corner_radius is None:
        corner_radius = DEFAULT_CORNER_RADIUS_FRAC * side_length
    if not 0 <= corner_radius < side_length / 4:
        raise ConfigurationError(
            f"corner_radius must lie in [0, side_length/4), got {corner_radius}"
        )

    L = float(side_length)
    x = L * np.arange(1, N) / N
    modes = np.arange(1, N)
    k = modes * np.pi / L
    eigenvalues = k[:, None] ** 2 + k[None, :] ** 2

    X, Y = np.meshgrid(x, x, indexing="ij")
    ground_state = (2.0 / L) * np.sin(np.pi * X / L) * np.sin(np.pi * Y / L)
    distance = np.minimum.reduce([X, L - X, Y, L - Y])

    corners = [(0.0, 0.0), (0.0, L), (L, 0.0), (L, L)]
    corner_mask = np.zeros_like(distance, dtype=bool)
    for cx, cy in corners:
        corner_mask |= np.hypot(X - cx, Y - cy) < corner_radius

    return Geometry(
        side_length=L,
        grid_size=int(N),
        corner_radius=float(corner_radius),
        x=x,
        modes=modes,
        eigenvalues=eigenvalues,
        ground_state=ground_state,
        distance=distance,
        corner_mask=corner_mask,
    )


def fit_ground_state_equivalence(geometry: Geometry) -> tuple[float, float]:
    """Fit c0, C0 with c0*d(x) <= w_1(x) <= C0*d(x) on unmasked interior nodes.

    The constants are stored on the geometry and returned.
    """
    keep = geometry.unmasked()
    if not keep.any():
        raise ConfigurationError("corner mask leaves no interior nodes to fit")
    ratio = geometry.ground_state[keep] / geometry.distance[keep]
    c0 = float(ratio.min())
    C0 = float(ratio.max())
    object.__setattr__(geometry, "c0", c0)
    object.__setattr__(geometry, "C0", C0)
    return c0, C0
