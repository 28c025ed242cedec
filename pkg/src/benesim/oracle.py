"""Independent reference computations used to judge simulation output.

Holds the utility-optimum solver over the supportable rate region, the
deterministic per-queue bound checker applied by the simulator's
invariant mode, and a single-queue stability probe for the
arrival-slack-implies-bounded-queue argument. Nothing here shares
decision logic with the controller; the solver works directly on the
constraint geometry so it can disagree with the simulator if either is
wrong.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .controller import GbpParams, UtilitySpec
from .queueing import QueueState


# -- utility optimum over the supportable region --------------------------


@dataclass
class OptimumResult:
    r_star: np.ndarray
    utility: float
    iterations: int
    residual: float


def solve_optimum(utility: UtilitySpec, n: int, eta: float = 0.0,
                  tol: float = 1e-8, max_iter: int = 100_000) -> OptimumResult:
    """Maximize total utility over row sums <= 1 and column sums <= 1 - eta.

    Projected gradient ascent with an exact projection onto the polytope,
    computed by alternating corrected projections onto the row-capped and
    column-capped simplices. Stops when the infinity norm of the gradient
    mapping falls below tol; raises if the iteration cap is hit.

    For the uniform log utility the solution has the closed form
    (1 - eta) / 2^n in every coordinate, which the test suite uses as an
    independent check.
    """
    size = 2 ** n
    w = utility.weights
    if w.shape != (size, size):
        raise ValueError(f"utility weights must be {size}x{size}, got {w.shape}")
    _require_concave(utility)

    row_cap = np.ones(size)
    col_cap = np.full(size, 1.0 - eta)
    lip = _max_curvature(utility)
    step = 1.0 / lip

    r = np.zeros((size, size))
    residual = np.inf
    for it in range(1, max_iter + 1):
        g = _gradient(utility, r)
        r_next = _project_polytope(r + step * g, row_cap, col_cap)
        residual = float(np.abs(r_next - r).max()) / step
        r = r_next
        if residual < tol:
            return OptimumResult(r_star=r, utility=utility.total(r),
                                 iterations=it, residual=residual)
    raise RuntimeError(f"optimum solver did not converge: residual {residual:.3e} "
                       f"after {max_iter} iterations")


def _gradient(utility: UtilitySpec, r: np.ndarray) -> np.ndarray:
    if utility.base is None:
        return utility.weights / (1.0 + r)
    h = 1e-7
    return utility.weights * (utility.base(r + h) - utility.base(np.maximum(r - h, 0.0))) \
        / (h + np.minimum(r, h))


def _max_curvature(utility: UtilitySpec) -> float:
    w_max = float(utility.weights.max())
    if w_max <= 0:
        raise ValueError("utility must have at least one positive weight")
    if utility.base is None:
        return w_max  # |d2/dx2 log(1+x)| peaks at x = 0
    xs = np.linspace(0.0, 1.0, 201)
    h = 1e-4
    second = (utility.base(xs + h) - 2 * utility.base(xs) + utility.base(np.abs(xs - h))) / h ** 2
    return w_max * max(float(np.abs(second).max()), 1e-6)


def _require_concave(utility: UtilitySpec) -> None:
    if utility.base is None:
        return
    xs = np.linspace(0.0, 2.0, 101)
    vals = utility.base(xs)
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    if (second > 1e-10).any():
        raise ValueError("utility base must be concave")
    if (np.diff(vals) < -1e-12).any():
        raise ValueError("utility base must be increasing")


def _project_capped_rows(x: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto {y >= 0, sum(y) <= cap}."""
    y = np.maximum(x, 0.0)
    over = y.sum(axis=1) > caps
    if not over.any():
        return y
    x_over = x[over]
    caps_over = caps[over]
    u = np.sort(x_over, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, x_over.shape[1] + 1)
    theta_cand = (css - caps_over[:, None]) / ks
    valid = u > theta_cand
    k_star = valid.shape[1] - 1 - np.argmax(valid[:, ::-1], axis=1)
    theta = theta_cand[np.arange(len(k_star)), k_star]
    y[over] = np.maximum(x_over - theta[:, None], 0.0)
    return y


def _project_polytope(x: np.ndarray, row_cap: np.ndarray, col_cap: np.ndarray,
                      tol: float = 1e-18, max_iter: int = 5000) -> np.ndarray:
    # Dykstra's alternating projections between the two capped-simplex
    # products; converges to the exact projection onto their intersection.
    # The stopping rule watches the change in the correction terms, not the
    # iterate movement: iterates can sit on long false plateaus while the
    # corrections are still rotating (Birgin and Raydan's criterion).
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y = x
    for _ in range(max_iter):
        z = _project_capped_rows(y + p, row_cap)
        p_next = y + p - z
        y_next = _project_capped_rows((z + q).T, col_cap).T
        q_next = z + q - y_next
        drift = ((p_next - p) ** 2).sum() + ((q_next - q) ** 2).sum()
        p, q, y = p_next, q_next, y_next
        if drift < tol and _feasible(y, row_cap, col_cap, 1e-12):
            return y
    return y


def _feasible(y, row_cap, col_cap, tol):
    return (y.sum(axis=1) <= row_cap + tol).all() and (y.sum(axis=0) <= col_cap + tol).all()


def kkt_residual(result: OptimumResult, utility: UtilitySpec, eta: float,
                 active_tol: float = 1e-6, rate_tol: float = 1e-6) -> float:
    """Stationarity defect of a solution: marginal utility minus dual prices.

    Recovers one nonnegative price per tight row and per tight column by
    least squares over the positive-rate flows, then reports the largest
    absolute gap between a positive flow's marginal utility and the sum of
    its two prices. Near zero certifies optimality.
    """
    r = result.r_star
    size = r.shape[0]
    g = _gradient(utility, r)
    row_active = r.sum(axis=1) >= 1.0 - active_tol
    col_active = r.sum(axis=0) >= 1.0 - eta - active_tol
    pos = np.argwhere(r > rate_tol)
    if len(pos) == 0:
        return 0.0
    row_ids = {s: k for k, s in enumerate(np.flatnonzero(row_active))}
    col_ids = {d: len(row_ids) + k for k, d in enumerate(np.flatnonzero(col_active))}
    num_vars = len(row_ids) + len(col_ids)
    if num_vars == 0:
        return float(np.abs(g[r > rate_tol]).max())
    a = np.zeros((len(pos), num_vars))
    b = np.empty(len(pos))
    for k, (s, d) in enumerate(pos):
        if s in row_ids:
            a[k, row_ids[s]] = 1.0
        if d in col_ids:
            a[k, col_ids[d]] = 1.0
        b[k] = g[s, d]
    prices, *_ = np.linalg.lstsq(a, b, rcond=None)
    prices = np.maximum(prices, 0.0)
    return float(np.abs(a @ prices - b).max())


# -- deterministic per-queue bounds ---------------------------------------


def queue_bound_table(params: GbpParams, n: int) -> Dict[str, float]:
    """Worst-case counter levels implied by the control rules.

    The admission counter stops growing once it reaches v * beta, the
    source counters once they exceed the admission counter, and each
    deeper column can at most double its feeder's level plus the slot's
    arrivals; regulation counters are capped by admission plus one slot of
    fabric-wide arrivals.
    """
    vb = params.v * params.beta
    k = (2 ** (n - 1) + 1) * params.a_max
    bounds = {
        "admission": vb + params.a_max,
        "source": vb + k,
        "regulation": vb + (2 ** n + 1) * params.a_max,
        "partition": 2 ** n * (vb + k) + 2 ** (n + 1) - 2,
    }
    for col in range(1, n):
        bounds[f"switch_col{col}"] = 2 ** col * (vb + k) + 2 ** (col + 1) - 2
    return bounds


@dataclass
class BoundViolation:
    family: str
    index: Tuple[int, ...]
    value: float
    bound: float

    def __str__(self) -> str:
        return f"{self.family}{list(self.index)}: {self.value} > {self.bound}"


def check_queue_bounds(state: QueueState, params: GbpParams, n: int) -> List[BoundViolation]:
    """All deterministic bound violations in a queue snapshot (empty = clean).

    Checks the admission, source, regulation and partition counters and the
    per-column pair sums of the four-way switch counters, each against its
    exact bound with no tolerance.
    """
    bounds = queue_bound_table(params, n)
    out: List[BoundViolation] = []

    def scan(family: str, values: np.ndarray, bound: float):
        values = np.atleast_1d(values)
        for idx in np.argwhere(values > bound):
            out.append(BoundViolation(family, tuple(int(i) + 1 for i in idx),
                                      float(values[tuple(idx)]), bound))

    scan("admission", state.admission, bounds["admission"])
    scan("source_upper", state.src_upper, bounds["source"])
    scan("source_lower", state.src_lower, bounds["source"])
    scan("regulation", state.regulation, bounds["regulation"])
    for col in range(1, n):
        b = bounds[f"switch_col{col}"]
        scan(f"switch_col{col}_upper", state.sw_uu[col - 1] + state.sw_ul[col - 1], b)
        scan(f"switch_col{col}_lower", state.sw_lu[col - 1] + state.sw_ll[col - 1], b)
    scan("partition_upper", state.part_upper, bounds["partition"])
    scan("partition_lower", state.part_lower, bounds["partition"])
    return out


# -- single-queue stability probe ------------------------------------------


@dataclass
class SingleQueueResult:
    max_queue: float
    first_half_max: float
    last_half_max: float
    bounded: bool
    level_estimate: float


def single_queue_stability_probe(arrivals: np.ndarray, eta: float) -> SingleQueueResult:
    """Trace max(Q - 1, 0) + R through an arrival sequence and judge stability.

    The bounded flag compares the two halves of the trajectory: a stable
    queue's running maximum stops growing, so the second-half maximum may
    exceed the first-half one by at most a single slot's arrivals. Also
    reports a worst-level estimate a_max * T_c, where T_c is the shortest
    window length (scanned on a geometric grid) beyond which every window's
    mean rate stays below 1 - eta/2. Meaningful only when the long-run
    arrival rate actually leaves slack; feeding a rate-1 sequence reports
    whatever the trace shows.
    """
    r = np.asarray(arrivals, dtype=float)
    t_total = len(r)
    if t_total < 2:
        raise ValueError("need at least two slots of arrivals")
    a_max = float(r.max())

    # Q(t) = max(0, S(t) - min_{j<t} S(j) + 1) with S the drifted prefix sum;
    # equivalent to iterating the recursion from an empty queue.
    s = np.concatenate(([0.0], np.cumsum(r - 1.0)))
    run_min = np.minimum.accumulate(s)
    q = np.maximum(s[1:] - run_min[:-1] + 1.0, 0.0)
    q = np.concatenate(([0.0], q))

    half = t_total // 2
    first_half_max = float(q[: half + 1].max())
    last_half_max = float(q[half:].max())
    bounded = last_half_max <= first_half_max + a_max

    level_estimate = np.inf
    css = np.concatenate(([0.0], np.cumsum(r)))
    window = 1
    while window <= t_total:
        worst_mean = float((css[window:] - css[:-window]).max()) / window
        if worst_mean <= 1.0 - eta / 2.0:
            level_estimate = a_max * window
            break
        window *= 2
    return SingleQueueResult(max_queue=float(q.max()),
                             first_half_max=first_half_max,
                             last_half_max=last_half_max,
                             bounded=bool(bounded),
                             level_estimate=level_estimate)
