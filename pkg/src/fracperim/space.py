"""Finite metric measure spaces.

A space is a finite point set with a symmetric distance matrix and a
strictly positive mass per point.  Everything downstream (kernels,
energies, cut solvers) reads only ``dist`` and ``mu``, so those two
arrays define the space; coordinates are kept, when known, purely for
provenance and for weight construction.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

# A subset of points is a boolean vector over the point ids.
Mask = np.ndarray


class SpaceValidationError(ValueError):
    """A distance matrix or weight vector violates a space invariant."""


def mask_from_ids(n: int, ids) -> Mask:
    m = np.zeros(n, dtype=bool)
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= n):
        raise SpaceValidationError(f"point id out of range 0..{n - 1}")
    m[ids] = True
    return m


def ids_from_mask(mask: Mask) -> list[int]:
    return [int(i) for i in np.flatnonzero(mask)]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Space:
    """Point set with a symmetric metric and positive point masses.

    Immutable after construction; safe for concurrent reads.
    """

    dist: np.ndarray
    mu: np.ndarray
    label: str = ""
    coords: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=np.float64)
        m = np.asarray(self.mu, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise SpaceValidationError("dist must be a square matrix")
        n = d.shape[0]
        if n == 0:
            raise SpaceValidationError("space must contain at least one point")
        if m.shape != (n,):
            raise SpaceValidationError("mu length must match point count")
        if not (d.T == d).all():
            i, j = np.argwhere(d.T != d)[0]
            raise SpaceValidationError(f"dist not symmetric at pair ({i}, {j})")
        if (np.diag(d) != 0.0).any():
            i = int(np.flatnonzero(np.diag(d))[0])
            raise SpaceValidationError(f"dist({i},{i}) must be zero")
        off = d + np.eye(n)
        if not np.isfinite(d).all() or (off <= 0.0).any():
            i, j = np.argwhere((off <= 0.0) | ~np.isfinite(d))[0]
            raise SpaceValidationError(f"dist({i},{j}) must be positive and finite")
        if not np.isfinite(m).all() or (m <= 0.0).any():
            i = int(np.flatnonzero(~np.isfinite(m) | (m <= 0.0))[0])
            raise SpaceValidationError(f"mu({i}) must be positive and finite")
        object.__setattr__(self, "dist", _freeze(d))
        object.__setattr__(self, "mu", _freeze(m))
        if self.coords is not None:
            object.__setattr__(self, "coords", _freeze(np.atleast_2d(self.coords)))

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def ball(self, x: int, r: float) -> Mask:
        """Open ball {y : d(x,y) < r}; always contains x for r > 0."""
        if r <= 0:
            raise ValueError("ball radius must be positive")
        return self.dist[x] < r

    def closed_ball(self, x: int, r: float) -> Mask:
        """Closed ball {y : d(x,y) <= r}."""
        if r < 0:
            raise ValueError("closed ball radius must be nonnegative")
        return self.dist[x] <= r

    def measure(self, mask: Mask | None = None) -> float:
        """Total mass of a subset (of the whole space when mask is None)."""
        vals = self.mu if mask is None else self.mu[mask]
        return math.fsum(vals)

    def diameter(self) -> float:
        return float(self.dist.max())

    def min_gap(self) -> float:
        """Smallest positive pairwise distance."""
        n = self.n
        if n == 1:
            return 0.0
        return float(self.dist[~np.eye(n, dtype=bool)].min())

    def validate_triangle(self, rtol: float = 1e-12):
        """Return the first triple (x, y, z) violating d(x,z) <= d(x,y)+d(y,z).

        O(n^3); opt in.  Returns None when the triangle inequality holds
        up to the relative slack ``rtol``.
        """
        d = self.dist
        for y in range(self.n):
            bound = d[:, y][:, None] + d[y][None, :]
            bad = d > bound + rtol * np.maximum(bound, 1.0)
            if bad.any():
                x, z = np.argwhere(bad)[0]
                return int(x), int(y), int(z)
        return None

    def content_hash(self) -> str:
        """Hash of (dist, mu); identifies the space for kernel caching."""
        h = hashlib.sha256()
        h.update(self.dist.tobytes())
        h.update(self.mu.tobytes())
        return h.hexdigest()


def _origin_cell_weight(delta: float, cell_volume: float, dim: int) -> float:
    """Mass of the cell around the origin under the |x|^delta density.

    The density is singular at 0, so the cell integral is approximated by
    a midpoint rule refined three dyadic levels (8 subcells per axis);
    no quadrature node lands on the singularity.
    """
    h = cell_volume ** (1.0 / dim)
    m = 8
    axis = (np.arange(m) + 0.5) / m * h - h / 2.0
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    radii = np.sqrt(sum(g * g for g in grids))
    subvol = (h / m) ** dim
    return float(np.sum(radii**delta) * subvol)


def power_weights(coords: np.ndarray, delta: float, cell_volume: float) -> np.ndarray:
    """Per-point masses |x|^delta * cell_volume, with a cell-averaged origin."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    dim = coords.shape[1]
    radii = np.linalg.norm(coords, axis=1)
    if delta == 0.0:
        return np.full(coords.shape[0], float(cell_volume))
    if delta <= -dim:
        warnings.warn(
            f"weight exponent {delta} <= -{dim}: total mass near the origin "
            "diverges under grid refinement",
            stacklevel=2,
        )
    mu = np.empty(coords.shape[0])
    at_origin = radii == 0.0
    mu[~at_origin] = radii[~at_origin] ** delta * cell_volume
    if at_origin.any():
        mu[at_origin] = _origin_cell_weight(delta, cell_volume, dim)
    return mu


def build_euclidean(
    points,
    weight_exponent: float = 0.0,
    cell_volume: float = 1.0,
    label: str = "",
) -> Space:
    """Euclidean point cloud with the radial power weight |x|^delta * vol.

    Points must be pairwise distinct.  A point sitting exactly at the
    origin gets the cell-averaged mass of its surrounding cell, since the
    pointwise density is singular (delta < 0) or vanishes (delta > 0)
    there.
    """
    coords = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if cell_volume <= 0:
        raise ValueError("cell_volume must be positive")
    uniq = np.unique(coords, axis=0)
    if uniq.shape[0] != coords.shape[0]:
        raise SpaceValidationError("duplicate points in euclidean input")
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dist, 0.0)
    mu = power_weights(coords, weight_exponent, cell_volume)
    return Space(dist=dist, mu=mu, label=label, coords=coords)


@dataclass(frozen=True)
class DoublingProfile:
    """Sampled doubling behaviour: ratios mu(B(x,2r)) / mu(B(x,r)).

    ``c_mu`` is the worst sampled ratio and ``q = log2(c_mu)`` the implied
    dimension; callers may work with a smaller dimension where they know
    one.
    """

    c_mu: float
    q: float
    samples: tuple

    def with_dimension(self, q: float) -> "DoublingProfile":
        return DoublingProfile(self.c_mu, float(q), self.samples)


def doubling_profile(space: Space, sample_radii, sample_centers) -> DoublingProfile:
    radii = [float(r) for r in sample_radii]
    centers = [int(x) for x in sample_centers]
    if not radii or not centers:
        raise ValueError("doubling profile needs at least one center and radius")
    if any(r <= 0 for r in radii):
        raise ValueError("doubling radii must be positive")
    samples = []
    for x in centers:
        for r in radii:
            small = space.measure(space.ball(x, r))
            big = space.measure(space.ball(x, 2.0 * r))
            samples.append((x, r, big / small))
    c_mu = max(s[2] for s in samples)
    return DoublingProfile(c_mu=c_mu, q=math.log2(c_mu) if c_mu > 1 else 0.0, samples=tuple(samples))


def to_json_dict(space: Space) -> dict:
    doc = {"label": space.label, "mu": [float(v) for v in space.mu]}
    if space.coords is not None:
        doc["dist"] = {"type": "euclidean", "coords": [[float(c) for c in row] for row in space.coords]}
    else:
        doc["dist"] = {"type": "matrix", "data": [[float(v) for v in row] for row in space.dist]}
    return doc


def from_json_dict(doc: dict, check_triangle: bool = True) -> Space:
    label = doc.get("label", "")
    dist_spec = doc.get("dist")
    if not isinstance(dist_spec, dict) or "type" not in dist_spec:
        raise SpaceValidationError("space file must carry a dist object with a type")
    coords = None
    if dist_spec["type"] == "euclidean":
        coords = np.atleast_2d(np.asarray(dist_spec["coords"], dtype=np.float64))
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.fill_diagonal(dist, 0.0)
        n = coords.shape[0]
    elif dist_spec["type"] == "matrix":
        dist = np.asarray(dist_spec["data"], dtype=np.float64)
        n = dist.shape[0]
    else:
        raise SpaceValidationError(f"unknown dist type {dist_spec['type']!r}")

    if "mu" in doc and doc["mu"] is not None:
        mu = np.asarray(doc["mu"], dtype=np.float64)
    else:
        w = doc.get("weight")
        if not isinstance(w, dict):
            raise SpaceValidationError("space file needs either mu or a weight rule")
        if w["type"] == "constant":
            mu = np.full(n, float(w.get("cell_volume", 1.0)))
        elif w["type"] == "power":
            if coords is None:
                raise SpaceValidationError("power weights require euclidean coordinates")
            mu = power_weights(coords, float(w["delta"]), float(w.get("cell_volume", 1.0)))
        else:
            raise SpaceValidationError(f"unknown weight type {w['type']!r}")

    space = Space(dist=dist, mu=mu, label=label, coords=coords)
    if check_triangle and dist_spec["type"] == "matrix":
        bad = space.validate_triangle()
        if bad is not None:
            raise SpaceValidationError(
                f"triangle inequality violated at triple {bad}: "
                f"d({bad[0]},{bad[2]}) > d({bad[0]},{bad[1]}) + d({bad[1]},{bad[2]})"
            )
    return space


def load_space(path, check_triangle: bool = True) -> Space:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh), check_triangle=check_triangle)


def save_space(space: Space, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(space), fh, sort_keys=True)
        fh.write("\n")
