"""Exact solvers for the variational problems of the theory.

Every problem here minimizes the nonlocal seminorm (or the full norm)
over a lattice of admissible sets or fields, and the coarea formula
turns each one into minimum cuts: per-unordered-pair capacities are
twice the kernel weights, so a cut value *is* the indicator seminorm.
Set problems are single cuts; the general obstacle problem decomposes
into one cut per inter-breakpoint level, whose inclusion-minimal
solutions nest and reassemble into the optimal field.

Ties are broken toward the inclusion-minimal optimal mask (the
source-reachable residual side), making every output deterministic.
An LP oracle over the absolute-value splitting provides an independent
verification path for the general problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .energy import Kernel, energy_gap, exact_sum, seminorm
from .mincut import CutResult, min_cut_dense
from .space import Mask, ids_from_mask

LP_ORACLE_MAX_POINTS = 60


@dataclass(frozen=True)
class CutSolution:
    """Result of one variational solve.

    ``mask`` carries set-valued solutions, ``values`` field-valued ones.
    ``certificate`` is the max-flow value for cut problems and the
    duality gap for the LP oracle; ``energy`` is always recomputed from
    the solution itself.
    """

    energy: float
    certificate: float
    certificate_kind: str
    mask: Mask | None = None
    values: np.ndarray | None = None
    degenerate: bool = False
    trace: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "energy": self.energy,
            "certificate": self.certificate,
            "certificate_kind": self.certificate_kind,
            "mask": None if self.mask is None else ids_from_mask(self.mask),
            "values": None if self.values is None else [float(v) for v in self.values],
            "degenerate": self.degenerate,
            "trace": self.trace,
        }


class InfeasibleProblem(ValueError):
    """The admissible class of the requested problem is empty."""


NEG_INF = float("-inf")


@dataclass(frozen=True)
class ObstacleSpec:
    """Constraint data (omega, psi, f): stay above psi inside omega,
    agree with f outside.

    ``psi`` may be -inf at unconstrained points of omega; ``f`` must be
    finite off omega.  Entries of each field outside its own domain are
    ignored.
    """

    omega: Mask
    psi: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=bool)
        psi = np.asarray(self.psi, dtype=np.float64)
        f = np.asarray(self.f, dtype=np.float64)
        n = om.size
        if psi.shape != (n,) or f.shape != (n,):
            raise ValueError("psi and f must match the mask length")
        if not om.any():
            raise InfeasibleProblem("omega must be nonempty")
        if om.all():
            raise InfeasibleProblem("the complement of omega must be nonempty")
        if np.isnan(psi[om]).any() or (psi[om] == np.inf).any():
            raise InfeasibleProblem("psi must be < +inf on omega")
        if not np.isfinite(f[~om]).all():
            raise InfeasibleProblem("boundary data f must be finite off omega")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "f", f)
        # Feasibility witness: the boundary data extended by max(psi, min f).
        floor = float(f[~om].min())
        witness = f.copy()
        witness[om] = np.maximum(np.where(np.isfinite(psi[om]), psi[om], floor), floor)
        object.__setattr__(self, "_witness", witness)

    @property
    def witness(self) -> np.ndarray:
        return self._witness

    def breakpoints(self) -> np.ndarray:
        vals = np.concatenate([self.psi[self.omega], self.f[~self.omega]])
        return np.unique(vals[np.isfinite(vals)])


def min_cut(capacities: np.ndarray, source: Mask, sink: Mask) -> tuple[Mask, float]:
    """Inclusion-minimal minimum cut separating two forced groups.

    Returns the source side (a superset of ``source`` disjoint from
    ``sink``) and the cut value.
    """
    res = min_cut_dense(capacities, source, sink)
    return res.source_side, res.value


def _cut_solution(res: CutResult, trace: dict | None = None) -> CutSolution:
    return CutSolution(
        energy=res.value,
        certificate=res.max_flow,
        certificate_kind="max_flow",
        mask=res.source_side,
        degenerate=res.degenerate,
        trace=trace or {},
    )


def solve_set_obstacle(kernel: Kernel, obstacle: Mask, omega: Mask) -> CutSolution:
    """Smallest-seminorm set pinched between the obstacle and the window.

    Minimizes the indicator seminorm over sets E with
    obstacle <= E <= omega; the reported energy is the full-space
    seminorm of the solution's indicator.
    """
    a = np.asarray(obstacle, dtype=bool)
    om = np.asarray(omega, dtype=bool)
    if (a & ~om).any():
        raise InfeasibleProblem("obstacle set must be contained in the window")
    if om.all():
        raise InfeasibleProblem("the complement of the window must be nonempty")
    if not a.any():
        empty = np.zeros(kernel.n, dtype=bool)
        return CutSolution(energy=0.0, certificate=0.0, certificate_kind="max_flow", mask=empty)
    res = min_cut_dense(2.0 * kernel.weights, a, ~om)
    return _cut_solution(res)


def condenser_capacity(kernel: Kernel, inner: Mask, outer: Mask) -> tuple[float, Mask]:
    """Condenser capacity between a core set and a surrounding open set.

    Minimum indicator seminorm over sets E with inner <= E <= outer;
    returns the value and the extremal (inclusion-minimal) set.
    """
    a = np.asarray(inner, dtype=bool)
    f = np.asarray(outer, dtype=bool)
    if (a & ~f).any():
        raise InfeasibleProblem("the core must be contained in the surrounding set")
    if f.all():
        raise InfeasibleProblem("the complement of the surrounding set must be nonempty")
    if not a.any():
        return 0.0, np.zeros(kernel.n, dtype=bool)
    res = min_cut_dense(2.0 * kernel.weights, a, ~f)
    return res.value, res.source_side


def total_capacity(kernel: Kernel, core: Mask) -> tuple[float, Mask]:
    """Minimum of mass plus indicator seminorm over sets containing the core.

    The mass term enters the cut as a per-node sink capacity, so a single
    max flow solves the problem exactly.
    """
    a = np.asarray(core, dtype=bool)
    if not a.any():
        return 0.0, np.zeros(kernel.n, dtype=bool)
    res = min_cut_dense(
        2.0 * kernel.weights,
        a,
        np.zeros(kernel.n, dtype=bool),
        sink_unary=kernel.space.mu,
    )
    return res.value, res.source_side


def _level_cut(
    kernel: Kernel, spec: ObstacleSpec, level: float
) -> tuple[Mask, float, float, bool]:
    """Superlevel cut at a threshold strictly between two breakpoints."""
    om = spec.omega
    forced_in = (om & (spec.psi > level)) | (~om & (spec.f > level))
    forced_out = ~om & (spec.f <= level)
    n = kernel.n
    if not forced_in.any():
        return np.zeros(n, dtype=bool), 0.0, 0.0, False
    if not forced_out.any():
        return np.ones(n, dtype=bool), 0.0, 0.0, False
    res = min_cut_dense(2.0 * kernel.weights, forced_in, forced_out)
    return res.source_side, res.value, res.max_flow, res.degenerate


def solve_general_obstacle(kernel: Kernel, spec: ObstacleSpec) -> CutSolution:
    """Minimize the seminorm over fields above psi in omega, equal to f off it.

    The optimum takes values among the breakpoints (the objective is
    piecewise linear in every level), so one cut per inter-breakpoint
    level suffices; the minimal level sets nest and the field is their
    layer-cake sum.
    """
    bps = spec.breakpoints()
    n = kernel.n
    if bps.size == 0:
        raise InfeasibleProblem("no finite breakpoints: psi and f carry no values")
    # Count per point how many level sets contain it; nested level sets
    # make the field exactly bps[count], with no accumulated rounding.
    counts = np.zeros(n, dtype=np.int64)
    levels = []
    flow_total = 0.0
    degenerate = False
    prev: Mask | None = None
    for lo, hi in zip(bps[:-1], bps[1:]):
        level = 0.5 * (lo + hi)
        side, value, flow, degen = _level_cut(kernel, spec, level)
        if prev is not None and (side & ~prev).any():
            raise RuntimeError(
                "level solutions failed to nest; submodular structure violated"
            )
        prev = side
        counts[side] += 1
        flow_total += (hi - lo) * flow
        degenerate = degenerate or degen
        levels.append(
            {
                "threshold": float(level),
                "weight": float(hi - lo),
                "cut_value": value,
                "set_size": int(side.sum()),
            }
        )
    u = bps[counts]
    energy = seminorm(kernel, u)
    return CutSolution(
        energy=energy,
        certificate=flow_total,
        certificate_kind="max_flow",
        values=u,
        degenerate=degenerate,
        trace={"breakpoints": [float(b) for b in bps], "levels": levels},
    )


def lp_oracle(kernel: Kernel, spec: ObstacleSpec, max_points: int = LP_ORACLE_MAX_POINTS) -> CutSolution:
    """Independent linear-programming solve of the same obstacle problem.

    One nonnegative slack per unordered pair bounds |u(x) - u(y)|; the
    objective weighs slacks by twice the kernel.  Reports the duality
    gap reconstructed from the solver's marginals as the certificate.
    """
    n = kernel.n
    if n > max_points:
        raise ValueError(f"LP oracle envelope exceeded: {n} > {max_points} points")
    om = spec.omega
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    p = len(pairs)
    cost = np.zeros(n + p)
    for k, (i, j) in enumerate(pairs):
        cost[n + k] = 2.0 * kernel.weights[i, j]

    rows, cols, vals = [], [], []
    for k, (i, j) in enumerate(pairs):
        r = 2 * k
        rows += [r, r, r]
        cols += [i, j, n + k]
        vals += [1.0, -1.0, -1.0]
        r = 2 * k + 1
        rows += [r, r, r]
        cols += [i, j, n + k]
        vals += [-1.0, 1.0, -1.0]
    from scipy.sparse import coo_matrix

    a_ub = coo_matrix((vals, (rows, cols)), shape=(2 * p, n + p))
    b_ub = np.zeros(2 * p)

    bounds = []
    for i in range(n):
        if om[i]:
            lo = spec.psi[i] if np.isfinite(spec.psi[i]) else None
            bounds.append((lo, None))
        else:
            bounds.append((spec.f[i], spec.f[i]))
    bounds += [(0, None)] * p

    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"LP oracle failed: {res.message}")

    u = res.x[:n].copy()
    gap = _duality_gap(res, cost, bounds)
    return CutSolution(
        energy=float(res.fun),
        certificate=gap,
        certificate_kind="duality_gap",
        values=u,
        trace={"lp_status": int(res.status), "iterations": int(res.nit)},
    )


def _duality_gap(res, cost, bounds) -> float:
    """|primal - dual| assembled from the HiGHS marginals.

    The inequality right-hand sides are all zero, so the dual objective
    reduces to the bound terms.
    """
    dual = 0.0
    lower = res.lower.marginals
    upper = res.upper.marginals
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None and lower[j] != 0.0:
            dual += lo * lower[j]
        if hi is not None and upper[j] != 0.0:
            dual += hi * upper[j]
    return abs(float(res.fun) - float(dual))


@dataclass(frozen=True)
class CertificateReport:
    """Sampled necessary-condition check for minimality.

    Samples nonnegative perturbations supported in the window and
    records the worst energy gap; a genuine minimizer never produces a
    positive gap.  This is a falsifier, not a proof; the max-flow
    certificate is the proof.
    """

    trials: int
    violations: int
    worst_gap: float
    tolerance: float
    seed: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "worst_gap": self.worst_gap,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "pass": self.passed,
        }


def superminimizer_certificate(
    kernel: Kernel,
    u,
    omega: Mask,
    trials: int = 1000,
    seed: int = 0,
    tol_scale: float = 1e-9,
) -> CertificateReport:
    """Check energy_gap(u, u + eta) <= tol for random admissible bumps eta.

    Perturbations mix scaled indicator bumps on random subsets of the
    window with smooth nonnegative noise, all supported in the window.
    """
    u = np.asarray(u, dtype=np.float64)
    om = np.asarray(omega, dtype=bool)
    rng = np.random.default_rng(seed)
    n = kernel.n
    idx = np.flatnonzero(om)
    spread = float(np.max(np.abs(u))) if u.size else 1.0
    amp_choices = np.array([0.01, 0.1, 1.0, 10.0]) * max(spread, 1.0)
    tol = tol_scale * max(1.0, seminorm(kernel, u))

    worst = 0.0
    violations = 0
    for _ in range(trials):
        eta = np.zeros(n)
        amp = rng.choice(amp_choices)
        if rng.random() < 0.5:
            take = rng.random(idx.size) < rng.uniform(0.1, 0.9)
            if not take.any():
                take[rng.integers(idx.size)] = True
            eta[idx[take]] = amp
        else:
            eta[idx] = rng.random(idx.size) * amp
        gap = energy_gap(kernel, u, u + eta, om)
        if gap > worst:
            worst = gap
        if gap > tol:
            violations += 1
    return CertificateReport(
        trials=trials, violations=violations, worst_gap=worst, tolerance=tol, seed=seed
    )
