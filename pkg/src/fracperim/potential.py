"""Finite-scale potential-theory diagnostics.

Everything in the continuum theory that takes a limit r -> 0 becomes a
profile over a caller-supplied ladder of radii here: approximate limits,
density classification, thinness ratios, and Lebesgue-point averages.
The module reports trends at the scanned scales and never claims a
limit, because a finite space has a smallest positive scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import Kernel
from .space import Mask, Space
from . import solver

INTERIOR = "interior-like"
EXTERIOR = "exterior-like"
BOUNDARY = "boundary-like"


@dataclass(frozen=True)
class ScaleProfile:
    """Per-radius values of one quantity around one center point."""

    center: int
    radii: tuple
    values: tuple
    kind: str
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        if any(b >= a for a, b in zip(r[:-1], r[1:])) or any(v <= 0 for v in r):
            raise ValueError("radii must be positive and strictly decreasing")
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(r):
            raise ValueError("one value per radius required")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", vals)

    def to_json_dict(self) -> dict:
        return {
            "center": self.center,
            "radii": list(self.radii),
            "values": list(self.values),
            "kind": self.kind,
            "notes": self.notes,
        }


def approx_limits(space: Space, u, x: int, r: float, theta: float = 0.0) -> tuple[float, float]:
    """Density-trimmed lower and upper values of u on the ball B(x, r).

    The lower value is the largest t whose sublevel mass inside the ball
    stays within the fraction theta of the ball mass; the upper value is
    the mirrored quantity.  theta = 0 gives the plain min and max over
    the ball.
    """
    if not (0.0 <= theta < 1.0):
        raise ValueError("density tolerance must lie in [0, 1)")
    u = np.asarray(u, dtype=np.float64)
    ball = space.ball(x, r)
    vals = u[ball]
    weights = space.mu[ball]
    return _trimmed_low(vals, weights, theta), -_trimmed_low(-vals, weights, theta)


def _trimmed_low(vals: np.ndarray, weights: np.ndarray, theta: float) -> float:
    """sup { t : mass(vals < t) <= theta * total }."""
    order = np.argsort(vals, kind="stable")
    v = vals[order]
    w = weights[order]
    total = math.fsum(w)
    budget = theta * total
    distinct, start = np.unique(v, return_index=True)
    below = np.concatenate([np.cumsum(w)[start[1:] - 1], [math.fsum(w)]]) if distinct.size > 1 else np.array([total])
    # below[k] = mass of {vals <= distinct[k]}; mass strictly below
    # distinct[k] is below[k-1] (0 for k = 0).
    strictly_below = np.concatenate([[0.0], below[:-1]])
    ok = strictly_below <= budget
    k = int(np.flatnonzero(ok)[-1])
    return float(distinct[k])


def density_profile(space: Space, e: Mask, x: int, radii) -> ScaleProfile:
    """Mass fraction of e inside B(x, r) for each radius."""
    e = np.asarray(e, dtype=bool)
    radii = sorted((float(r) for r in radii), reverse=True)
    values = []
    for r in radii:
        ball = space.ball(x, r)
        values.append(space.measure(ball & e) / space.measure(ball))
    return ScaleProfile(center=x, radii=tuple(radii), values=tuple(values), kind="density")


def classify_density(value: float, theta0: float = 0.01) -> str:
    if value >= 1.0 - theta0:
        return INTERIOR
    if value <= theta0:
        return EXTERIOR
    return BOUNDARY


def density_classify(
    space: Space, e: Mask, x: int, radii, theta0: float = 0.01
) -> tuple[ScaleProfile, str]:
    """Density profile plus the class read off at the smallest radius."""
    profile = density_profile(space, e, x, radii)
    label = classify_density(profile.values[-1], theta0)
    return ScaleProfile(
        center=profile.center,
        radii=profile.radii,
        values=profile.values,
        kind="density",
        notes={"class": label, "theta0": theta0},
    ), label


def classify_all(space: Space, e: Mask, radius: float, theta0: float = 0.01) -> dict:
    """Interior / exterior / boundary masks of e at one fixed scale.

    The three masks partition the space.
    """
    e = np.asarray(e, dtype=bool)
    n = space.n
    dens = np.empty(n)
    for x in range(n):
        ball = space.ball(x, radius)
        dens[x] = space.measure(ball & e) / space.measure(ball)
    interior = dens >= 1.0 - theta0
    exterior = (dens <= theta0) & ~interior
    return {
        "interior": interior,
        "exterior": exterior,
        "boundary": ~interior & ~exterior,
    }


def thinness_scan(kernel: Kernel, a: Mask, x: int, radii) -> ScaleProfile:
    """Capacity-density ratios of a set along a radius ladder.

    Per radius r: cap(a in B(x,r) -> B(x,2r)) over cap(B(x,r) -> B(x,2r)).
    Radii whose doubled ball swallows the whole space have no condenser
    and are skipped (recorded in the notes).
    """
    space = kernel.space
    a = np.asarray(a, dtype=bool)
    radii = sorted((float(r) for r in radii), reverse=True)
    kept, values, skipped = [], [], []
    for r in radii:
        inner = space.ball(x, r)
        outer = space.ball(x, 2.0 * r)
        if outer.all():
            skipped.append(r)
            continue
        num, _ = solver.condenser_capacity(kernel, a & inner, outer)
        den, _ = solver.condenser_capacity(kernel, inner, outer)
        kept.append(r)
        values.append(num / den)
    return ScaleProfile(
        center=x,
        radii=tuple(kept),
        values=tuple(values),
        kind="thinness",
        notes={"skipped_radii": skipped, "dyadic": _is_dyadic_ladder(kept)},
    )


def _is_dyadic_ladder(radii) -> bool:
    if len(radii) < 2:
        return False
    ratios = [radii[i + 1] / radii[i] for i in range(len(radii) - 1)]
    return all(abs(q - 0.5) < 1e-9 for q in ratios)


def lebesgue_profile(space: Space, u, x: int, radii) -> ScaleProfile:
    """Mean deviation of u from u(x) over B(x, r), per radius."""
    u = np.asarray(u, dtype=np.float64)
    radii = sorted((float(r) for r in radii), reverse=True)
    values = []
    for r in radii:
        ball = space.ball(x, r)
        dev = math.fsum(np.abs(u[ball] - u[x]) * space.mu[ball])
        values.append(dev / space.measure(ball))
    return ScaleProfile(center=x, radii=tuple(radii), values=tuple(values), kind="lebesgue")


@dataclass(frozen=True)
class BallCover:
    """A cover of a target set by balls, with its content value."""

    value: float
    balls: tuple  # (center, radius, cost) triples
    mode: str

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "balls": [list(b) for b in self.balls],
            "mode": self.mode,
        }


def _candidate_balls(space: Space, s: float, radius_cap: float):
    """All distinct balls centered at points with radii off the distance list.

    For each center, the useful radii are the distinct pairwise distances
    (each is the largest radius before the ball gains its next point)
    plus the cap itself.  Cost of a ball is mu(B) / r^s.
    """
    cands = []
    for c in range(space.n):
        ds = np.unique(space.dist[c])
        radii = [float(r) for r in ds if 0.0 < r <= radius_cap]
        if radius_cap not in radii:
            radii.append(float(radius_cap))
        prev_mask = None
        for r in sorted(radii):
            mask = space.ball(c, r)
            if prev_mask is not None and (mask == prev_mask).all():
                # same set, larger radius: strictly cheaper, replace
                cands[-1] = (c, r, space.measure(mask) / r**s, mask)
                continue
            cands.append((c, r, space.measure(mask) / r**s, mask))
            prev_mask = mask
    return cands


def hausdorff_content(
    space: Space,
    a: Mask,
    radius_cap: float,
    s: float,
    mode: str = "greedy",
    exact_limit: int = 22,
) -> BallCover:
    """Upper bound on the codimension-s content of a set at a radius cap.

    Covers the set by balls of radius at most the cap, summing
    mu(B)/r^s.  Greedy picks the cheapest mass-per-cost ball each round;
    exact searches all covers built from the same candidate family.
    """
    a = np.asarray(a, dtype=bool)
    if not a.any():
        return BallCover(value=0.0, balls=(), mode=mode)
    if radius_cap <= 0:
        raise ValueError("radius cap must be positive")
    cands = _candidate_balls(space, s, radius_cap)

    if mode == "greedy":
        chosen = []
        uncovered = a.copy()
        while uncovered.any():
            best, best_score = None, -1.0
            for c, r, cost, mask in cands:
                gain = space.measure(mask & uncovered)
                if gain <= 0:
                    continue
                score = gain / cost
                if score > best_score:
                    best, best_score = (c, r, cost, mask), score
            c, r, cost, mask = best
            chosen.append((c, r, cost))
            uncovered &= ~mask
        return BallCover(
            value=math.fsum(b[2] for b in chosen), balls=tuple(chosen), mode="greedy"
        )

    if mode == "exact":
        targets = np.flatnonzero(a)
        if len(cands) > exact_limit and targets.size > exact_limit:
            raise ValueError(
                f"exact cover envelope exceeded: {len(cands)} candidate balls"
            )
        best_value = math.inf
        best_cover: tuple = ()

        def search(uncovered: Mask, cost_so_far: float, picked: list):
            nonlocal best_value, best_cover
            if cost_so_far >= best_value:
                return
            rest = np.flatnonzero(uncovered)
            if not rest.size:
                best_value = cost_so_far
                best_cover = tuple(picked)
                return
            pivot = rest[0]
            for c, r, cost, mask in cands:
                if mask[pivot]:
                    picked.append((c, r, cost))
                    search(uncovered & ~mask, cost_so_far + cost, picked)
                    picked.pop()

        search(a.copy(), 0.0, [])
        return BallCover(value=best_value, balls=best_cover, mode="exact")

    raise ValueError(f"unknown mode {mode!r}")
