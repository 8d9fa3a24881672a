"""Numerical verification of the structural inequalities of the theory.

None of the comparison constants of the continuum theory are numeric,
so every check measures the empirical constant (left side over right
side with the structural factors divided out) and leaves judgements
about stability across refinements or radius scans to the caller.  A
``bound`` argument, when given, sets the pass flag.

Each report's trace carries the raw ingredients of both sides so the
numbers can be replayed exactly; ``replay`` recomputes (lhs, rhs) from
the trace alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import Kernel, annular_potential, exact_sum, perimeter, seminorm
from .potential import classify_all
from .space import Mask
from . import solver


@dataclass(frozen=True)
class Report:
    """Outcome of one inequality check: both sides, the measured constant,
    and enough trace to replay the computation."""

    check: str
    inputs: dict
    lhs: float
    rhs: float
    empirical_constant: float
    passed: bool
    trace: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "inputs": self.inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "empirical_constant": self.empirical_constant,
            "pass": self.passed,
            "trace": self.trace,
        }


def _constant(lhs: float, rhs: float) -> float:
    if rhs > 0.0:
        return lhs / rhs
    return 0.0 if lhs <= 0.0 else math.inf


def _passed(constant: float, bound: float | None) -> bool:
    if not math.isfinite(constant):
        return False
    return True if bound is None else constant <= bound


def mean_over_ball(kernel_or_space, mask: Mask, values: np.ndarray) -> float:
    space = getattr(kernel_or_space, "space", kernel_or_space)
    return exact_sum(values[mask] * space.mu[mask]) / space.measure(mask)


def harnack_check(
    kernel: Kernel,
    u,
    x0: int,
    r: float,
    big_r: float,
    k0: float,
    q: float,
    bound: float | None = None,
    hypothesis: str = "unverified",
) -> Report:
    """Sup of (u - k0) on the small ball against the mean of the positive
    part on the large ball, scaled by (R/(R-r))^Q.

    With atoms the essential sup is the plain max.  A zero right side
    with a positive left side marks a violated hypothesis (the field is
    not a subminimizer or constrained solution on the window).
    """
    if not (0.0 < r < big_r):
        raise ValueError("need 0 < r < R")
    u = np.asarray(u, dtype=np.float64)
    space = kernel.space
    small = space.ball(x0, r)
    large = space.ball(x0, big_r)
    sup_excess = float(np.max(u[small] - k0))
    mean_excess = mean_over_ball(space, large, np.maximum(u - k0, 0.0))
    shape = (big_r / (big_r - r)) ** q
    lhs = sup_excess
    rhs = shape * mean_excess
    constant = _constant(lhs, rhs)
    hypothesis_flag = rhs == 0.0 and lhs > 0.0
    return Report(
        check="harnack",
        inputs={"x0": x0, "r": r, "R": big_r, "k0": k0, "Q": q, "hypothesis": hypothesis},
        lhs=lhs,
        rhs=rhs,
        empirical_constant=constant,
        passed=not hypothesis_flag and _passed(constant, bound),
        trace={
            "sup_excess": sup_excess,
            "mean_excess": mean_excess,
            "shape_factor": shape,
            "hypothesis_violated": hypothesis_flag,
        },
    )


def caccioppoli_check(
    kernel: Kernel,
    u,
    k: float,
    x0: int,
    rho: float,
    big_r: float,
    bound: float | None = None,
) -> Report:
    """Energy of the cut-off truncation against the local mass of the
    positive part.

    The cutoff is the distance cone: 1 on B(x0, rho), 0 outside
    B(x0, (R+rho)/2), linear in between.
    """
    if not (0.0 < rho < big_r):
        raise ValueError("need 0 < rho < R")
    u = np.asarray(u, dtype=np.float64)
    space = kernel.space
    r_mid = 0.5 * (big_r + rho)
    phi = np.clip((r_mid - space.dist[x0]) / (r_mid - rho), 0.0, 1.0)
    truncated = np.maximum(u - k, 0.0) * phi
    lhs = seminorm(kernel, truncated)
    large = space.ball(x0, big_r)
    mass = exact_sum(np.maximum(u - k, 0.0)[large] * space.mu[large])
    s = kernel.s
    factor = 1.0 / (s * (1.0 - s) * (big_r - rho) ** s)
    rhs = factor * mass
    constant = _constant(lhs, rhs)
    return Report(
        check="caccioppoli",
        inputs={"x0": x0, "rho": rho, "R": big_r, "k": k},
        lhs=lhs,
        rhs=rhs,
        empirical_constant=constant,
        passed=_passed(constant, bound),
        trace={"truncated_energy": lhs, "positive_mass": mass, "factor": factor},
    )


def degiorgi_iterate(
    kernel: Kernel,
    u,
    x0: int,
    r: float,
    big_r: float,
    k0: float,
    q: float,
    c: float | None = None,
    max_steps: int = 60,
) -> Report:
    """Geometric level/radius iteration behind the sup bound.

    Radii shrink as rho_n = r + 2^-n (R - r) while levels climb as
    k_n = k0 + d (1 - 2^-n) with the gap d determined by the constant;
    the check is that each mean excess u(k_n, rho_n) decays at least
    like 2^(-n(1+Q)).  When no constant is supplied, the minimal one
    making every available iterate pass is found by bisection and
    reported.  The iteration truncates once the shrinking balls stop
    changing (scale floor).
    """
    if not (0.0 < r < big_r):
        raise ValueError("need 0 < r < R")
    u = np.asarray(u, dtype=np.float64)
    space = kernel.space
    s = kernel.s

    floor_mask = space.closed_ball(x0, r)
    masks = []
    for n in range(max_steps + 1):
        rho_n = r + 2.0 ** (-n) * (big_r - r)
        mask = space.ball(x0, rho_n)
        masks.append((rho_n, mask))
        if (mask == floor_mask).all():
            break
    scale_floor = len(masks) <= max_steps

    def mean_excess(kk: float, mask: Mask) -> float:
        return mean_over_ball(space, mask, np.maximum(u - kk, 0.0))

    base = mean_excess(k0, masks[0][1])

    def run(cc: float):
        d = (cc / s * (big_r / (big_r - r)) ** s * 2.0 ** (1.0 + s + q + s / q)) ** (q / s) * base
        rows = []
        ok = True
        for n, (rho_n, mask) in enumerate(masks):
            k_n = k0 + d * (1.0 - 2.0 ** (-n))
            val = mean_excess(k_n, mask)
            target = 2.0 ** (-n * (1.0 + q)) * base
            rows.append({"n": n, "rho": rho_n, "k": k_n, "value": val, "target": target})
            ok = ok and val <= target
        return ok, d, rows

    if base == 0.0:
        c_used = 0.0 if c is None else c
        ok, d, rows = True, 0.0, [
            {"n": n, "rho": rho_n, "k": k0, "value": 0.0, "target": 0.0}
            for n, (rho_n, _) in enumerate(masks)
        ]
        bisected = c is None
    elif c is not None:
        ok, d, rows = run(c)
        c_used = c
        bisected = False
    else:
        hi = 1.0
        for _ in range(80):
            if run(hi)[0]:
                break
            hi *= 2.0
        else:
            raise RuntimeError("no constant makes the iteration pass")
        lo = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if run(mid)[0]:
                hi = mid
            else:
                lo = mid
        c_used = hi
        ok, d, rows = run(c_used)
        bisected = True

    return Report(
        check="degiorgi",
        inputs={"x0": x0, "r": r, "R": big_r, "k0": k0, "Q": q, "C": c_used},
        lhs=max((row["value"] / row["target"] if row["target"] > 0 else 0.0) for row in rows),
        rhs=1.0,
        empirical_constant=c_used,
        passed=ok,
        trace={
            "iterates": rows,
            "gap": d,
            "base_mean": base,
            "scale_floor": scale_floor,
            "bisected": bisected,
        },
    )


def poincare_check(kernel: Kernel, ball_mask: Mask, r: float, u, bound: float | None = None) -> Report:
    """Mean oscillation over a ball against its scaled window seminorm."""
    u = np.asarray(u, dtype=np.float64)
    space = kernel.space
    mask = np.asarray(ball_mask, dtype=bool)
    mean = mean_over_ball(space, mask, u)
    lhs = mean_over_ball(space, mask, np.abs(u - mean))
    sem = seminorm(kernel, u, mask)
    mass = space.measure(mask)
    rhs = r**kernel.s / mass * sem
    constant = _constant(lhs, rhs)
    return Report(
        check="poincare",
        inputs={"r": r, "ball_size": int(mask.sum())},
        lhs=lhs,
        rhs=rhs,
        empirical_constant=constant,
        passed=_passed(constant, bound),
        trace={
            "mean_deviation": lhs,
            "window_seminorm": sem,
            "ball_mass": mass,
            "radius_power": r**kernel.s,
        },
    )


def isoperimetric_check(
    kernel: Kernel, e: Mask, x: int, r: float, bound: float | None = None
) -> Report:
    """Mass of a set supported in a ball against its scaled indicator energy."""
    e = np.asarray(e, dtype=bool)
    space = kernel.space
    if (e & ~space.ball(x, r)).any():
        raise ValueError("the set must carry no mass outside the ball")
    mass = space.measure(e)
    sem = seminorm(kernel, e.astype(np.float64))
    lhs = mass
    rhs = r**kernel.s * sem
    constant = _constant(lhs, rhs)
    return Report(
        check="isoperimetric",
        inputs={"x": x, "r": r, "set_size": int(e.sum())},
        lhs=lhs,
        rhs=rhs,
        empirical_constant=constant,
        passed=_passed(constant, bound),
        trace={"set_mass": mass, "indicator_energy": sem, "radius_power": r**kernel.s},
    )


def ball_capacity_check(
    kernel: Kernel,
    x: int,
    r: float,
    big_r: float,
    theta: float = 0.5,
    bound: float | None = None,
) -> Report:
    """Condenser capacity of nested balls against mu(B)/r^s, both directions."""
    if not (theta * big_r <= 2.0 * r <= big_r):
        raise ValueError("radii must satisfy theta R <= 2r <= R")
    space = kernel.space
    inner = space.ball(x, r)
    outer = space.ball(x, big_r)
    if outer.all():
        raise ValueError("outer ball must be a proper subset of the space")
    cap, _ = solver.condenser_capacity(kernel, inner, outer)
    reference = space.measure(inner) / r**kernel.s
    ratio = cap / reference
    constant = max(ratio, 1.0 / ratio) if ratio > 0 else math.inf
    return Report(
        check="ball-capacity",
        inputs={"x": x, "r": r, "R": big_r, "theta": theta},
        lhs=cap,
        rhs=reference,
        empirical_constant=constant,
        passed=_passed(constant, bound),
        trace={"capacity": cap, "reference": reference, "ratio": ratio},
    )


def capacity_comparisons(
    kernel: Kernel,
    a: Mask,
    x: int,
    r: float,
    r1: float,
    r2: float,
    bound: float | None = None,
) -> Report:
    """Monotonicity and two-sided comparisons between condenser capacities
    at nested outer radii, and against the total capacity.

    Requires a inside B(x, r) and r < r1 < r2 with B(x, r2) proper.
    """
    if not (0.0 < r < r1 < r2):
        raise ValueError("need 0 < r < r1 < r2")
    space = kernel.space
    a = np.asarray(a, dtype=bool)
    if (a & ~space.ball(x, r)).any():
        raise ValueError("the set must lie inside the inner ball")
    b1 = space.ball(x, r1)
    b2 = space.ball(x, r2)
    if b2.all():
        raise ValueError("the outer ball must be a proper subset of the space")
    s = kernel.s
    cap1, _ = solver.condenser_capacity(kernel, a, b1)
    cap2, _ = solver.condenser_capacity(kernel, a, b2)
    monotone = cap2 <= cap1
    widen_factor = 1.0 + r2**s / (r1 - r) ** s
    widen_constant = cap1 / (widen_factor * cap2) if cap2 > 0 else (0.0 if cap1 == 0 else math.inf)

    total, _ = solver.total_capacity(kernel, a)
    two_r = space.ball(x, 2.0 * r)
    cap_2r = None
    lower_c = upper_c = None
    if not two_r.all():
        cap_2r, _ = solver.condenser_capacity(kernel, a, two_r)
        if cap_2r > 0:
            lower_c = (total / (1.0 + r**s)) / cap_2r
            upper_c = cap_2r / ((1.0 + 1.0 / r**s) * total) if total > 0 else math.inf
    constant = widen_constant
    return Report(
        check="capacity-comparisons",
        inputs={"x": x, "r": r, "r1": r1, "r2": r2, "set_size": int(a.sum())},
        lhs=cap1,
        rhs=cap2,
        empirical_constant=constant,
        passed=monotone and _passed(constant, bound),
        trace={
            "cap_r1": cap1,
            "cap_r2": cap2,
            "monotone": bool(monotone),
            "widen_factor": widen_factor,
            "widen_constant": widen_constant,
            "total_capacity": total,
            "cap_2r": cap_2r,
            "total_vs_condenser_lower": lower_c,
            "total_vs_condenser_upper": upper_c,
        },
    )


def perimeter_radius_scan(kernel: Kernel, z: int, radii) -> Report:
    """Perimeter of balls along a radius scan, flagging the atom radii.

    Discretely every ball has finite perimeter; the scan records where
    the perimeter jumps, namely at radii realized by the distance
    multiset (the discrete shadow of the almost-every caveat).
    """
    space = kernel.space
    dist_values = np.unique(space.dist[z])
    rows = []
    for r in sorted((float(v) for v in radii), reverse=True):
        if r <= 0:
            raise ValueError("radii must be positive")
        mask = space.ball(z, r)
        value = perimeter(kernel, mask)
        is_atom = bool((dist_values == r).any())
        rows.append({"r": r, "perimeter": value, "atom": is_atom})
    worst = max(row["perimeter"] for row in rows)
    return Report(
        check="perimeter-radius-scan",
        inputs={"z": z, "radii": [row["r"] for row in rows]},
        lhs=worst,
        rhs=math.inf,
        empirical_constant=0.0,
        passed=True,
        trace={"rows": rows},
    )


def boundary_capacity_check(
    kernel: Kernel,
    e: Mask,
    x: int,
    r: float,
    scale: float,
    c_mu: float,
    theta0: float = 0.01,
    bound: float | None = None,
) -> Report:
    """Capacity of the non-exterior part of a sparse set against its energy.

    Requires the density hypothesis
    mu(E in B(x,2r)) / mu(B(x,2r)) <= 1 / (2 c_mu^ceil(log2 50)),
    then compares the condenser capacity of the interior-or-boundary
    points (classified at the given scale) inside B(x, r) with the
    indicator seminorm of the set.
    """
    space = kernel.space
    e = np.asarray(e, dtype=bool)
    double = space.ball(x, 2.0 * r)
    density = space.measure(e & double) / space.measure(double)
    threshold = 1.0 / (2.0 * c_mu ** math.ceil(math.log2(50.0)))
    if density > threshold:
        raise ValueError(
            f"density hypothesis violated: {density:.3g} > {threshold:.3g}"
        )
    if double.all():
        raise ValueError("the doubled ball must be a proper subset of the space")
    classes = classify_all(space, e, scale, theta0)
    core = (classes["interior"] | classes["boundary"]) & space.ball(x, r)
    lhs, _ = solver.condenser_capacity(kernel, core, double)
    rhs = seminorm(kernel, e.astype(np.float64))
    constant = _constant(lhs, rhs)
    return Report(
        check="boundary-capacity",
        inputs={"x": x, "r": r, "scale": scale, "theta0": theta0, "set_size": int(e.sum())},
        lhs=lhs,
        rhs=rhs,
        empirical_constant=constant,
        passed=_passed(constant, bound),
        trace={
            "density": density,
            "density_threshold": threshold,
            "core_size": int(core.sum()),
            "capacity": lhs,
            "indicator_energy": rhs,
        },
    )


def coarea_check(kernel: Kernel, u, omega: Mask | None = None, tol: float = 1e-10) -> Report:
    """Layer-cake identity for the seminorm of one field."""
    from .energy import coarea_decompose, coarea_total

    direct = seminorm(kernel, u, omega)
    layers = coarea_decompose(kernel, u, omega)
    stacked = coarea_total(layers)
    scale = max(1.0, abs(direct))
    err = abs(direct - stacked) / scale
    return Report(
        check="coarea",
        inputs={"tol": tol, "layers": len(layers)},
        lhs=direct,
        rhs=stacked,
        empirical_constant=err,
        passed=err <= tol,
        trace={"direct": direct, "stacked": stacked, "relative_error": err},
    )


_REPLAY = {
    "harnack": lambda t: (t["sup_excess"], t["shape_factor"] * t["mean_excess"]),
    "caccioppoli": lambda t: (t["truncated_energy"], t["factor"] * t["positive_mass"]),
    "poincare": lambda t: (
        t["mean_deviation"],
        t["radius_power"] / t["ball_mass"] * t["window_seminorm"],
    ),
    "isoperimetric": lambda t: (t["set_mass"], t["radius_power"] * t["indicator_energy"]),
    "ball-capacity": lambda t: (t["capacity"], t["reference"]),
    "capacity-comparisons": lambda t: (t["cap_r1"], t["cap_r2"]),
    "boundary-capacity": lambda t: (t["capacity"], t["indicator_energy"]),
    "coarea": lambda t: (t["direct"], t["stacked"]),
}


def replay(report: Report) -> tuple[float, float]:
    """Recompute (lhs, rhs) from a report's trace alone."""
    try:
        rule = _REPLAY[report.check]
    except KeyError:
        raise KeyError(f"no replay rule for check {report.check!r}") from None
    return rule(report.trace)
