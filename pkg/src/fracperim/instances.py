"""Built-in spaces and problem instances for the verification battery.

Generators are deterministic given their arguments (random ones take an
explicit generator), small enough for dense kernels, and chosen so
every inequality in the battery is exercised away from its degenerate
cases.
"""

from __future__ import annotations

import math

import numpy as np

from .space import Space, build_euclidean, mask_from_ids, power_weights


def two_point(gap: float = 1.0) -> Space:
    return build_euclidean([[0.0], [float(gap)]], label="two-point")


def collinear_three() -> Space:
    return build_euclidean([[0.0], [1.0], [2.0]], label="collinear-3")


def chain(n: int, spacing: float = 1.0) -> Space:
    pts = [[i * spacing] for i in range(n)]
    return build_euclidean(pts, label=f"chain-{n}")


def unit_square_grid(m: int) -> Space:
    """m x m cell-centered grid on the unit square with mass 1/m^2 per cell."""
    h = 1.0 / m
    pts = [[(i + 0.5) * h, (j + 0.5) * h] for i in range(m) for j in range(m)]
    return build_euclidean(pts, cell_volume=h * h, label=f"grid-{m}x{m}")


def grid_point_id(m: int, i: int, j: int) -> int:
    return i * m + j


def nearest_grid_point(space: Space, xy) -> int:
    target = np.asarray(xy, dtype=np.float64)
    return int(np.argmin(np.linalg.norm(space.coords - target[None, :], axis=1)))


def weighted_square_grid(m: int, delta: float, half_width: float = 1.0) -> Space:
    """Odd m x m grid on [-w, w]^2 carrying the radial power weight.

    The origin sits on the grid and receives its cell-averaged mass.
    """
    if m % 2 == 0:
        raise ValueError("use an odd grid so the origin is a grid point")
    h = 2.0 * half_width / (m - 1)
    axis = np.linspace(-half_width, half_width, m)
    axis[m // 2] = 0.0
    pts = [[float(a), float(b)] for a in axis for b in axis]
    return build_euclidean(
        pts, weight_exponent=delta, cell_volume=h * h, label=f"weighted-grid-{m}-d{delta}"
    )


def dyadic_shell_cloud(
    delta: float,
    shells: int,
    per_ring: int = 8,
    outer_radius: float = 1.0,
    axis_points: bool = True,
) -> Space:
    """Radially graded planar cloud: rings at dyadic radii plus the origin.

    Each ring point represents its annular sector, so its mass is the
    radial power density times the sector area; the origin cell is a
    disk of half the innermost ring radius, integrated in closed form.
    The measure of a ball around the origin then scales like
    r^(2 + delta), matching the continuum weight.
    """
    if shells < 2:
        raise ValueError("need at least two shells")
    radii = [outer_radius * 2.0 ** (-m) for m in range(shells)]
    pts = [np.zeros(2)]
    masses = [_disk_mass(delta, radii[-1] / 2.0)]
    for m, rho in enumerate(radii):
        sector_area = math.pi * ((1.5 * rho) ** 2 - (0.75 * rho) ** 2) / per_ring
        for t in range(per_ring):
            # stagger alternate rings so points never align radially
            angle = 2.0 * math.pi * (t + 0.5 * (m % 2)) / per_ring
            pts.append(rho * np.array([math.cos(angle), math.sin(angle)]))
            masses.append(rho**delta * sector_area)
    coords = np.array(pts)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dist, 0.0)
    return Space(
        dist=dist,
        mu=np.array(masses),
        label=f"shell-cloud-{shells}x{per_ring}-d{delta}",
        coords=coords,
    )


def _disk_mass(delta: float, radius: float) -> float:
    """Integral of |x|^delta over the disk of the given radius (2-D)."""
    return 2.0 * math.pi * radius ** (2.0 + delta) / (2.0 + delta)


def with_probe_points(space: Space, probe_coords, probe_masses) -> tuple[Space, np.ndarray]:
    """Append near-massless probe points to a planar cloud.

    Probes realize a sequence of distinguished sites whose continuum
    counterparts are null sets: they sit at prescribed locations but
    carry a vanishing share of the mass, so ball measures and doubling
    behaviour are essentially unchanged while their isolation costs can
    be made as small as desired.  Returns the enlarged space and the
    mask of probe ids.
    """
    probe_coords = np.atleast_2d(np.asarray(probe_coords, dtype=np.float64))
    probe_masses = np.asarray(probe_masses, dtype=np.float64)
    coords = np.vstack([space.coords, probe_coords])
    mu = np.concatenate([space.mu, probe_masses])
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dist, 0.0)
    enlarged = Space(dist=dist, mu=mu, label=space.label + "+probes", coords=coords)
    mask = np.zeros(enlarged.n, dtype=bool)
    mask[space.n :] = True
    return enlarged, mask


def geometric_sequence_mask(space: Space, ratio: float = 0.5, count: int = 4, start: float = 0.5):
    """Points closest to (start * ratio^i, 0): a sequence marching to the origin."""
    ids = []
    for i in range(count):
        target = [start * ratio**i, 0.0]
        pid = nearest_grid_point(space, target)
        if space.coords[pid, 0] == 0.0 and space.coords[pid, 1] == 0.0:
            continue  # never include the origin itself
        ids.append(pid)
    return mask_from_ids(space.n, sorted(set(ids)))


def random_cloud(rng: np.random.Generator, n: int, dim: int = 2) -> Space:
    """Random points in the unit cube with random masses in [0.5, 1.5]."""
    pts = rng.random((n, dim))
    while np.unique(pts, axis=0).shape[0] != n:
        pts = rng.random((n, dim))
    mu = 0.5 + rng.random(n)
    base = build_euclidean(pts, label=f"random-{n}")
    return Space(dist=base.dist, mu=mu, label=base.label, coords=base.coords)


def random_mask(rng: np.random.Generator, n: int, nonempty: bool = False, proper: bool = False):
    m = rng.random(n) < rng.uniform(0.2, 0.8)
    if nonempty and not m.any():
        m[int(rng.integers(n))] = True
    if proper and m.all():
        m[int(rng.integers(n))] = False
    return m


def random_field(rng: np.random.Generator, n: int, levels: int | None = None) -> np.ndarray:
    if levels is None:
        return rng.normal(size=n)
    return rng.integers(0, levels, size=n).astype(np.float64)
