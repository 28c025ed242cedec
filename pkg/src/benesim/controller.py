"""Per-slot decision rules of the grouped-backpressure controller.

All functions are pure maps from counter snapshots to decisions. Scalar
forms state the rule for one flow or one link; the engine applies the
vector forms, which are the same law elementwise (tested against the
scalar forms). Traffic is grouped into an upper and a lower division by
destination half, and each link schedules at most one packet per slot to
whichever division shows the larger positive backlog differential.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class UtilitySpec:
    """Concave increasing per-flow utilities.

    Flow (s, d) earns weights[s-1, d-1] * base(rate). base defaults to
    log(1 + x); a custom base must be a numpy-compatible concave increasing
    callable with base(0) = 0.
    """

    weights: np.ndarray
    base: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if (w < 0).any():
            raise ValueError("utility weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform_log(cls, n: int, weight: float = 1.0) -> "UtilitySpec":
        size = 2 ** n
        return cls(weights=np.full((size, size), float(weight)))

    def value(self, rates: np.ndarray) -> np.ndarray:
        rates = np.asarray(rates, dtype=float)
        if self.base is None:
            return self.weights * np.log1p(rates)
        return self.weights * self.base(rates)

    def total(self, rates: np.ndarray) -> float:
        return float(self.value(rates).sum())

    @property
    def beta(self) -> float:
        """Largest marginal utility at rate zero over all flows."""
        w_max = float(self.weights.max())
        if self.base is None:
            return w_max
        h = 1e-7
        return w_max * float(self.base(np.array(h)) - self.base(np.array(0.0))) / h


@dataclass(frozen=True)
class GbpParams:
    """Control knobs: utility emphasis v, regulation slack eta, arrival cap."""

    v: float
    eta: float
    a_max: int
    beta: float

    def __post_init__(self):
        if self.v < 1:
            raise ValueError(f"v must be >= 1, got {self.v}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.a_max < 0:
            raise ValueError(f"a_max must be >= 0, got {self.a_max}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def params_for(v: float, eta: float, a_max: int, utility: UtilitySpec) -> GbpParams:
    """Build params with beta taken from the utility spec."""
    return GbpParams(v=float(v), eta=float(eta), a_max=int(a_max), beta=utility.beta)


# -- admission side -----------------------------------------------------


def select_auxiliary(h: float, weight: float, params: GbpParams,
                     base: Optional[Callable] = None) -> float:
    """Target admission rate for one flow.

    Maximizes v * weight * base(g) - h * g over g in [0, a_max]. For the
    log base the stationary point is v * weight / h - 1; an empty admission
    counter makes the objective strictly increasing, so the cap is chosen.
    Other concave bases are solved by golden-section search.
    """
    a = float(params.a_max)
    if weight <= 0.0:
        return 0.0
    if base is None:
        if h <= 0.0:
            return a
        return float(np.clip(params.v * weight / h - 1.0, 0.0, a))
    f = lambda g: params.v * weight * base(g) - h * g
    return _argmax_concave(f, 0.0, a)


def _argmax_concave(f: Callable[[float], float], lo: float, hi: float,
                    iters: int = 60) -> float:
    # bisection on the slope sign; a plain comparison search cannot place a
    # flat maximum better than sqrt(machine epsilon). The difference window
    # is clamped to the domain, not the shrinking bracket, so the sign test
    # stays well conditioned.
    if hi <= lo:
        return lo
    step = 1e-5 * max(hi - lo, 1.0)
    dom_lo, dom_hi = lo, hi

    def slope(x):
        a = max(x - step, dom_lo)
        b = min(x + step, dom_hi)
        return (f(b) - f(a)) / (b - a)

    if slope(lo) <= 0.0:
        return lo
    if slope(hi) >= 0.0:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def auxiliary_rates(h: np.ndarray, utility: UtilitySpec, params: GbpParams) -> np.ndarray:
    """Vector form of select_auxiliary over the whole flow matrix."""
    w = utility.weights
    a = float(params.a_max)
    if utility.base is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(h > 0.0, params.v * w / np.maximum(h, 1e-300) - 1.0, a)
        g = np.where(w > 0.0, g, 0.0)
        return np.clip(g, 0.0, a)
    # slope-sign bisection on the full matrix at once; concavity keeps it exact
    obj = lambda g: params.v * w * utility.base(g) - h * g
    step = 1e-6 * max(a, 1.0)

    def slope(x):
        lo_x = np.maximum(x - step, 0.0)
        hi_x = np.minimum(x + step, a)
        return (obj(hi_x) - obj(lo_x)) / (hi_x - lo_x)

    lo = np.zeros_like(h)
    hi = np.full_like(h, a)
    at_lo = slope(lo) <= 0.0
    at_hi = slope(hi) >= 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        rising = slope(mid) > 0.0
        lo = np.where(rising, mid, lo)
        hi = np.where(rising, hi, mid)
    g = 0.5 * (lo + hi)
    g = np.where(at_lo, 0.0, np.where(at_hi, a, g))
    return np.where(w > 0.0, g, 0.0)


def admission_decide(h: float, q_port: float, q_division: float, arrivals: int) -> int:
    """All-or-nothing admission for one flow in one slot.

    Admits the slot's arrivals exactly when the admission counter strictly
    exceeds the regulation view plus the source's division backlog; ties
    reject.
    """
    return int(arrivals) if h - q_port - q_division > 0.0 else 0


def admissions(h: np.ndarray, q_view: np.ndarray, src_upper: np.ndarray,
               src_lower: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    """Vector form of admission_decide; returns the admitted-count matrix."""
    size = h.shape[0]
    half = size // 2
    q_div = np.empty_like(h)
    q_div[:, :half] = src_upper[:, None]
    q_div[:, half:] = src_lower[:, None]
    mask = (h - q_view[None, :] - q_div) > 0.0
    return arrivals * mask


# -- link scheduling ----------------------------------------------------


def link_weights(own_upper: float, own_lower: float, downstream: Tuple[float, ...],
                 partition_next: bool) -> Tuple[float, float]:
    """Backlog differentials of one outgoing link, per division.

    own_upper/own_lower are the two counters this link serves. downstream
    is the next node's four counters (uu, ul, lu, ll), compared against
    their per-division half sums, or its two sink counters when the next
    node sits in the partition column. Any bias terms are added by the
    caller before this point.
    """
    if partition_next:
        cmp_upper, cmp_lower = downstream
    else:
        uu, ul, lu, ll = downstream
        cmp_upper = 0.5 * (uu + ul)
        cmp_lower = 0.5 * (lu + ll)
    return max(own_upper - cmp_upper, 0.0), max(own_lower - cmp_lower, 0.0)


def schedule_link(w_upper: float, w_lower: float) -> Tuple[int, int]:
    """Unit grant to the division with the larger positive weight.

    A tie between positive weights goes to the upper division so that runs
    are reproducible; the random batch splitting already provides the
    symmetry the balanced-load argument needs. Both weights zero means the
    link idles.
    """
    if w_upper >= w_lower and w_upper > 0.0:
        return 1, 0
    if w_lower > w_upper and w_lower > 0.0:
        return 0, 1
    return 0, 0


def max_weight_pair_grants(own_a: np.ndarray, own_b: np.ndarray,
                           cmp_a: np.ndarray, cmp_b: np.ndarray,
                           bias: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Vector form of link_weights + schedule_link for a batch of links.

    bias is the constant differential added under destination-biased
    scheduling (own column's remaining hop count minus the next column's,
    which is always one).
    """
    w_a = np.maximum(own_a - cmp_a + bias, 0.0)
    w_b = np.maximum(own_b - cmp_b + bias, 0.0)
    grant_a = (w_a >= w_b) & (w_a > 0.0)
    grant_b = (w_b > w_a) & (w_b > 0.0)
    return grant_a, grant_b


def partition_service(q_upper: float, q_lower: float) -> Tuple[int, int]:
    """Sink-link grants of one partition node: each serves when backed up."""
    return int(q_upper > 0.0), int(q_lower > 0.0)


def partition_grants(part_upper: np.ndarray, part_lower: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return part_upper > 0.0, part_lower > 0.0


def free_flow_grants() -> Tuple[int, int]:
    """Second-half policy: both FIFO links serve one packet every slot."""
    return 1, 1


# -- one slot, all decisions ---------------------------------------------


@dataclass(frozen=True)
class ControlAction:
    """Every decision of one slot, taken from one counter snapshot.

    link_grants holds one (uu, ul, lu, ll) tuple of boolean grant arrays per
    four-queue column; server grants are per input server; partition grants
    are per partition node and apply to the counter plane only.
    """

    gamma: np.ndarray
    admit: np.ndarray
    server_upper: np.ndarray
    server_lower: np.ndarray
    link_grants: Tuple[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray], ...]
    partition_upper: np.ndarray
    partition_lower: np.ndarray


def decide_slot(*, admission: np.ndarray, q_view: np.ndarray, src_upper: np.ndarray,
                src_lower: np.ndarray, sw_uu: np.ndarray, sw_ul: np.ndarray,
                sw_lu: np.ndarray, sw_ll: np.ndarray, part_upper: np.ndarray,
                part_lower: np.ndarray, arrivals: np.ndarray, utility: UtilitySpec,
                params: GbpParams, c1_of_server: np.ndarray,
                up_next: Sequence[np.ndarray], low_next: Sequence[np.ndarray],
                bias: float = 0.0) -> ControlAction:
    """Pure map from a counter snapshot to the slot's ControlAction.

    Comparators follow the column structure: a link into another four-queue
    column is weighed against the per-division half sums there, a link into
    the partition column against the matching sink counter. The free-flow
    second half needs no decision (its grants are constant).
    """
    gamma = auxiliary_rates(admission, utility, params)
    admit = admissions(admission, q_view, src_upper, src_lower, arrivals)

    fh = len(sw_uu)
    if fh:
        cmp_u = 0.5 * (sw_uu[0] + sw_ul[0])
        cmp_l = 0.5 * (sw_lu[0] + sw_ll[0])
    else:
        cmp_u, cmp_l = part_upper, part_lower
    gs_u, gs_l = max_weight_pair_grants(src_upper, src_lower,
                                        cmp_u[c1_of_server], cmp_l[c1_of_server], bias)

    link_grants: List[Tuple[np.ndarray, ...]] = []
    for j in range(fh):
        if j + 1 < fh:
            nu = 0.5 * (sw_uu[j + 1] + sw_ul[j + 1])
            nl = 0.5 * (sw_lu[j + 1] + sw_ll[j + 1])
        else:
            nu, nl = part_upper, part_lower
        up, lo = up_next[j], low_next[j]
        g_uu, g_lu = max_weight_pair_grants(sw_uu[j], sw_lu[j], nu[up], nl[up], bias)
        g_ul, g_ll = max_weight_pair_grants(sw_ul[j], sw_ll[j], nu[lo], nl[lo], bias)
        link_grants.append((g_uu, g_ul, g_lu, g_ll))

    g_d1, g_d2 = partition_grants(part_upper, part_lower)
    return ControlAction(gamma=gamma, admit=admit, server_upper=gs_u, server_lower=gs_l,
                         link_grants=tuple(link_grants), partition_upper=g_d1,
                         partition_lower=g_d2)


# -- analytic constants -------------------------------------------------


def drift_bound_constant(n: int, a_max: int) -> float:
    """Slack constant of the one-slot drift inequality for the order-n fabric."""
    return 0.5 * (2 ** n * (10 * n - 2)
                  + a_max ** 2 * (2 ** (3 * n - 1) + 2 ** (2 * n + 1) + 2 ** (3 * n)))


def utility_lower_bound(u_opt: float, params: GbpParams, n: int) -> float:
    """Analytic floor on achieved utility: optimum minus the v and eta penalties.

    Vacuous at desk scale but reported for completeness; it tightens as v
    grows and eta shrinks.
    """
    return u_opt - drift_bound_constant(n, params.a_max) / params.v \
        - (2 ** n) * params.beta * params.eta
