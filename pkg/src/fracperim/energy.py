"""Nonlocal interaction kernel and the energies built from it.

The kernel weight of an ordered pair is

    W(x,y) = mu(x) mu(y) / ( mu(B_xy) d(x,y)^s ),      x != y,

where ``B_xy`` is the union of the two open balls centered at x and y
with radius d(x,y).  Both centers belong to the union, so the
normalizing measure is at least mu(x) + mu(y) and every weight is
finite.  All double sums run over ordered pairs with the diagonal
excluded; perimeter and interaction are single-orientation sums, and
the factor-2 bookkeeping between the two conventions lives entirely in
this module.

Energy evaluations accumulate with exact (correctly rounded) summation,
which is what makes the structural identities below hold to the last
bit: halving a correctly rounded sum of doubled terms is exact, so
``seminorm(1_E) == 2 * perimeter(E)`` and brute-force cut enumeration
reproduces solver energies bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .space import Mask, Space


def exact_sum(values) -> float:
    """Correctly rounded sum of an array of doubles."""
    return math.fsum(np.asarray(values, dtype=np.float64).ravel())


@dataclass(frozen=True)
class Kernel:
    """Symmetric pairwise weights for a fixed exponent s in (0,1).

    Immutable; evaluation helpers are pure and safe to share across
    threads.
    """

    space: Space
    s: float
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.space.n

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def assemble(space: Space, s: float) -> Kernel:
    """Build the dense kernel matrix for the given exponent.

    Weights are computed once per unordered pair and mirrored, so the
    matrix is symmetric bit for bit.  Cost is O(n^3) time and O(n^2)
    memory; the design envelope is a few thousand points.
    """
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie strictly between 0 and 1, got {s}")
    d = space.dist
    mu = space.mu
    n = space.n
    w = np.zeros((n, n))
    for i in range(n - 1):
        dij = d[i, i + 1 :]                      # distances to j > i
        radius = dij[:, None]                    # pair radius, one row per j
        in_ball_i = d[i][None, :] < radius       # z in B(i, d_ij)
        in_ball_j = d[i + 1 :, :] < radius       # z in B(j, d_ij)
        union_mass = (in_ball_i | in_ball_j).astype(np.float64) @ mu
        w[i, i + 1 :] = mu[i] * mu[i + 1 :] / (union_mass * dij**s)
    w = w + w.T
    return Kernel(space=space, s=float(s), weights=w)


def _require_finite(u: np.ndarray, mask: Mask | None, what: str):
    sel = u if mask is None else u[mask]
    if not np.isfinite(sel).all():
        raise ValueError(f"{what} must be finite on the evaluation domain")


def _as_field(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (n,):
        raise ValueError(f"field must have length {n}")
    return u


def seminorm(kernel: Kernel, u, omega: Mask | None = None) -> float:
    """Double sum of |u(x)-u(y)| W(x,y) over ordered pairs of the window."""
    u = _as_field(u, kernel.n)
    _require_finite(u, omega, "field")
    idx = np.arange(kernel.n) if omega is None else np.flatnonzero(omega)
    if idx.size < 2:
        return 0.0
    uo = u[idx]
    w = kernel.weights[np.ix_(idx, idx)]
    return exact_sum(np.abs(uo[:, None] - uo[None, :]) * w)


def total_norm(kernel: Kernel, u) -> float:
    """L1 mass plus the seminorm, both over the whole space."""
    u = _as_field(u, kernel.n)
    _require_finite(u, None, "field")
    return exact_sum(np.abs(u) * kernel.space.mu) + seminorm(kernel, u)


def energy_gap(kernel: Kernel, u, v, omega: Mask | None = None) -> float:
    """Window energy of u minus window energy of v.

    The window sums the ordered pairs inside omega plus twice the pairs
    from omega to its complement; it is finite for any pair of finite
    fields even when neither full energy is.  Nonpositive gaps against
    all admissible competitors characterize sub/superminimizers.
    """
    n = kernel.n
    u = _as_field(u, n)
    v = _as_field(v, n)
    _require_finite(u, None, "field u")
    _require_finite(v, None, "field v")
    om = np.ones(n, dtype=bool) if omega is None else np.asarray(omega, dtype=bool)
    i = np.flatnonzero(om)
    c = np.flatnonzero(~om)
    w = kernel.weights
    inner = 0.0
    if i.size >= 2:
        du = np.abs(u[i][:, None] - u[i][None, :])
        dv = np.abs(v[i][:, None] - v[i][None, :])
        inner = float(np.sum((du - dv) * w[np.ix_(i, i)]))
    cross = 0.0
    if i.size and c.size:
        du = np.abs(u[i][:, None] - u[c][None, :])
        dv = np.abs(v[i][:, None] - v[c][None, :])
        cross = float(np.sum((du - dv) * w[np.ix_(i, c)]))
    return inner + 2.0 * cross


def interaction(kernel: Kernel, e: Mask, f: Mask) -> float:
    """Sum of W(x,y) over x in e, y in f; the masks must be disjoint."""
    e = np.asarray(e, dtype=bool)
    f = np.asarray(f, dtype=bool)
    if (e & f).any():
        raise ValueError("interaction masks must be disjoint")
    ei = np.flatnonzero(e)
    fi = np.flatnonzero(f)
    if not ei.size or not fi.size:
        return 0.0
    return exact_sum(kernel.weights[np.ix_(ei, fi)])


def perimeter(kernel: Kernel, e: Mask, omega: Mask | None = None) -> float:
    """Interaction between e and its complement inside the window.

    Equals half the seminorm of the indicator of e over the window,
    exactly.
    """
    e = np.asarray(e, dtype=bool)
    om = np.ones(kernel.n, dtype=bool) if omega is None else np.asarray(omega, dtype=bool)
    return interaction(kernel, e & om, om & ~e)


class CoareaLayer(NamedTuple):
    threshold: float
    weight: float
    layer_seminorm: float


def coarea_decompose(kernel: Kernel, u, omega: Mask | None = None) -> list[CoareaLayer]:
    """Layer-cake decomposition of the seminorm of u over the window.

    Thresholds are the sorted distinct values of u on the window; the
    seminorm of u equals the weight-by-layer sum of indicator seminorms
    identically (discrete coarea).
    """
    u = _as_field(u, kernel.n)
    _require_finite(u, omega, "field")
    om = np.ones(kernel.n, dtype=bool) if omega is None else np.asarray(omega, dtype=bool)
    values = np.unique(u[om])
    layers = []
    for lo, hi in zip(values[:-1], values[1:]):
        ind = (u > lo).astype(np.float64)
        layers.append(CoareaLayer(float(lo), float(hi - lo), seminorm(kernel, ind, om)))
    return layers


def coarea_total(layers: list[CoareaLayer]) -> float:
    return math.fsum(layer.weight * layer.layer_seminorm for layer in layers)


def annular_potential(kernel: Kernel, y: int, m: Mask) -> float:
    """Potential sum_{x in m} mu(x) / (mu(B_xy) d(x,y)^s) at the point y.

    The point y itself contributes zero when it lies in m.
    """
    idx = np.flatnonzero(np.asarray(m, dtype=bool))
    if not idx.size:
        return 0.0
    return exact_sum(kernel.weights[y, idx]) / kernel.space.mu[y]


def save_kernel(kernel: Kernel, path):
    """Cache the upper triangle keyed by a content hash of the space."""
    n = kernel.n
    iu = np.triu_indices(n, k=1)
    np.savez_compressed(
        path,
        s=np.float64(kernel.s),
        n=np.int64(n),
        upper=kernel.weights[iu],
        space_hash=np.bytes_(kernel.space.content_hash().encode()),
    )


def load_kernel(space: Space, s: float, path) -> Kernel | None:
    """Load a cached kernel; None when the cache does not match."""
    try:
        data = np.load(path)
    except (OSError, ValueError):
        return None
    if bytes(data["space_hash"]).decode() != space.content_hash():
        return None
    if int(data["n"]) != space.n or float(data["s"]) != float(s):
        return None
    n = space.n
    w = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    w[iu] = data["upper"]
    w = w + w.T
    return Kernel(space=space, s=float(s), weights=w)
