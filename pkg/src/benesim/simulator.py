"""Slotted-time engine coupling the counter plane to the packet plane.

Each slot: observe arrivals and the counter snapshot, take every control
decision from that snapshot, execute departures against slot-start queue
contents, then land all arrivals at slot end. Counter queues are charged
with granted rates; packet queues move at most one packet per link per
slot and only what they actually hold. The first half of the fabric
mirrors the counter-plane grants; from the partition column onward every
FIFO serves each outgoing link at full rate and packets follow their
unique destination path.

Runs are deterministic for a given config: one master seed feeds separate
named streams for arrivals, batch splitting, and weight redraws, so
toggling a variant never perturbs unrelated draws.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import controller, oracle
from .controller import GbpParams, UtilitySpec, params_for
from .queueing import Packet, QueueState, transfer_packets
from .topology import Node, build_benes

VARIANTS = ("exact", "delayed_1x", "delayed_5x", "sparse_5x")


class InvariantViolation(RuntimeError):
    """A runtime check that should never fire under correct control logic."""


@dataclass(frozen=True)
class TrafficConfig:
    """Arrival model per flow.

    "constant" offers the arrival cap to every flow every slot. "iid"
    draws independent binomial counts with the given per-flow mean
    (scalar or full matrix), bounded by the cap.
    """

    kind: str = "constant"
    mean: object = None

    def __post_init__(self):
        if self.kind not in ("constant", "iid"):
            raise ValueError(f"unknown traffic kind {self.kind!r}")
        if self.kind == "iid" and self.mean is None:
            raise ValueError("iid traffic needs a mean")


@dataclass(frozen=True)
class UtilitySwitch:
    """Mid-run utility change: explicit new weights, or a seeded redraw."""

    slot: int
    weights: Optional[np.ndarray] = None
    redraw_choices: Tuple[float, ...] = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class SimConfig:
    n: int
    params: GbpParams
    utility: UtilitySpec
    traffic: TrafficConfig
    slots: int
    seed: int = 1
    variant: str = "exact"
    bias_enhanced: bool = False
    utility_switch: Optional[UtilitySwitch] = None
    check_invariants: bool = False
    fifo_check_interval: int = 1000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"fabric order must be >= 1, got {self.n}")
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        size = 2 ** self.n
        if self.utility.weights.shape != (size, size):
            raise ValueError("utility weight matrix does not match the fabric order")
        if abs(self.params.beta - self.utility.beta) > 1e-9 * max(1.0, self.utility.beta):
            raise ValueError("params.beta is inconsistent with the utility spec")
        if self.utility_switch is not None and not 0 < self.utility_switch.slot < self.slots:
            raise ValueError("utility switch slot must lie strictly inside the run")


def make_config(n: int = 4, v: float = 10.0, eta: float = 0.01, a_max: int = 2,
                slots: int = 100_000, seed: int = 1, variant: str = "exact",
                bias_enhanced: bool = False, weight: float = 1.0,
                utility: Optional[UtilitySpec] = None,
                traffic: Optional[TrafficConfig] = None,
                utility_switch: Optional[UtilitySwitch] = None,
                check_invariants: bool = False) -> SimConfig:
    """Convenience constructor wiring the defaults used by the experiments."""
    if utility is None:
        utility = UtilitySpec.uniform_log(n, weight)
    if traffic is None:
        traffic = TrafficConfig()
    return SimConfig(n=n, params=params_for(v, eta, a_max, utility), utility=utility,
                     traffic=traffic, slots=slots, seed=seed, variant=variant,
                     bias_enhanced=bias_enhanced, utility_switch=utility_switch,
                     check_invariants=check_invariants)


def regulation_lag_slot(variant: str, t: int, n: int) -> int:
    """Slot index whose regulation values admission control reads at slot t.

    The exact variant reads the current slot. The delayed variants read one
    or five fabric traversal times back. The sparse variant models values
    shipped every five traversal times arriving after the same delay, so it
    reads the newest batch that has already landed (never before slot 1).
    Negative results mean "before the run started"; callers substitute
    zeros there.
    """
    period = 2 * n - 1
    if variant == "exact":
        return t
    if variant == "delayed_1x":
        return t - period
    if variant == "delayed_5x":
        return t - 5 * period
    if variant == "sparse_5x":
        return max((t // (5 * period) - 1) * (5 * period), 1)
    raise ValueError(f"unknown variant {variant!r}")


def regulation_view(history: np.ndarray, variant: str, t: int, n: int) -> np.ndarray:
    """Per-port regulation values the admission step reads at slot t.

    history[tau] must hold the regulation vector at slot tau for every tau
    up to t. Lags that reach before the run started read zeros.
    """
    tau = min(regulation_lag_slot(variant, t, n), t)
    if tau < 0:
        return np.zeros(history.shape[1])
    return history[tau]


@dataclass
class PhaseMetrics:
    """Admission statistics of one utility regime."""

    start: int
    end: int
    rates: np.ndarray
    utility: float
    per_flow_utility: np.ndarray
    weights: np.ndarray


@dataclass
class MetricsReport:
    n: int
    v: float
    eta: float
    a_max: int
    slots: int
    seed: int
    variant: str
    bias_enhanced: bool
    admitted: np.ndarray
    delivered: np.ndarray
    rates: np.ndarray
    utility: float
    phases: List[PhaseMetrics]
    admitted_total: int
    delivered_total: int
    delivery_fraction: float
    avg_delay: float
    series_total_physical: np.ndarray
    series_total_fictitious: np.ndarray
    series_admitted_cum: np.ndarray
    series_delivered_cum: np.ndarray
    min_slack: Dict[str, float]
    max_observed: Dict[str, float]
    transfer_rates: Dict[str, np.ndarray]
    partition_flow_rates: np.ndarray
    runtime_seconds: float

    @property
    def per_flow_utility(self) -> np.ndarray:
        """Utility earned by each flow at its final-phase rates and weights."""
        return self.phases[-1].per_flow_utility

    def rates_by_weight(self, phase: int = -1) -> Dict[float, float]:
        """Mean admitted rate per weight class within one phase."""
        ph = self.phases[phase]
        out: Dict[float, float] = {}
        for w in np.unique(ph.weights):
            out[float(w)] = float(ph.rates[ph.weights == w].mean())
        return out


def run(config: SimConfig) -> MetricsReport:
    """Execute one seeded run and collect its metrics."""
    return _Engine(config).run()


def run_utility_switch(config: SimConfig) -> MetricsReport:
    """Run a config whose utility changes mid-flight; phases are split out."""
    if config.utility_switch is None:
        raise ValueError("config has no utility switch")
    return run(config)


def run_scaling_experiment(n_values: Sequence[int], v: float = 10.0, slots: int = 30_000,
                           eta: float = 0.01, a_max: int = 2, seed: int = 1,
                           mapper: Callable[..., Iterable] = map) -> List[Dict[str, float]]:
    """Average delay versus fabric order, plain and destination-biased.

    Returns one row per order with the delay, its ratio to the squared
    order, and the biased variant's numbers for comparison.
    """
    configs = []
    for nv in n_values:
        for bias in (False, True):
            configs.append(make_config(n=nv, v=v, eta=eta, a_max=a_max, slots=slots,
                                       seed=seed, bias_enhanced=bias))
    reports = list(mapper(run, configs))
    rows = []
    for idx, nv in enumerate(n_values):
        plain, biased = reports[2 * idx], reports[2 * idx + 1]
        rows.append({
            "n": nv,
            "avg_delay": plain.avg_delay,
            "avg_delay_over_n2": plain.avg_delay / nv ** 2,
            "enhanced_delay": biased.avg_delay,
            "enhanced_delay_over_n2": biased.avg_delay / nv ** 2,
        })
    return rows


_SLACK_FAMILIES = ("admission", "regulation", "source", "switch", "partition")


class _Engine:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        n = cfg.n
        self.n = n
        self.topo = build_benes(n)
        self.N = self.topo.num_servers
        self.R = self.topo.rows
        self.FH = n - 1
        self.C = self.topo.cols
        self.half = self.N // 2

        ss = np.random.SeedSequence(cfg.seed)
        kids = ss.spawn(3)
        self.rng_arrivals = np.random.default_rng(kids[0])
        self.rng_split = np.random.default_rng(kids[1])
        self.rng_weights = np.random.default_rng(kids[2])

        # flattened adjacency, 0-based rows; index c of these lists is column c+1
        self.up_next: List[np.ndarray] = []
        self.low_next: List[np.ndarray] = []
        for col in range(1, self.C):
            ua = np.empty(self.R, dtype=np.intp)
            la = np.empty(self.R, dtype=np.intp)
            for row in range(1, self.R + 1):
                a, b = self.topo.next_hops(Node(col, row))
                ua[row - 1] = a.row - 1
                la[row - 1] = b.row - 1
            self.up_next.append(ua)
            self.low_next.append(la)
        self.c1row = np.arange(self.N, dtype=np.intp) // 2
        # largest destination served by link "a" of each second-half node
        self.a_cut = [np.array([self.topo.reachable_outputs(Node(n + k, i), "a")[-1]
                                for i in range(1, self.R + 1)], dtype=np.intp)
                      for k in range(n)]

        self.state = QueueState(self.topo)
        self.utility_now = cfg.utility
        self.params_now = cfg.params
        self.bounds = oracle.queue_bound_table(self.params_now, n)

        self.admitted = np.zeros((self.N, self.N), dtype=np.int64)
        self.delivered = np.zeros((self.N, self.N), dtype=np.int64)
        self.admitted_total = 0
        self.delivered_total = 0
        self.delay_sum = 0
        self.xfer = {key: np.zeros((self.FH, self.R), dtype=np.int64)
                     for key in ("uu", "ul", "lu", "ll")}
        self.part_counts = np.zeros((self.N, self.N, self.R), dtype=np.int64)
        self.min_slack = {k: np.inf for k in _SLACK_FAMILIES}
        self.max_observed = {k: 0.0 for k in _SLACK_FAMILIES}

        self._arrivals_buf = np.full((self.N, self.N), cfg.params.a_max, dtype=np.int64)
        self._zeros_n = np.zeros(self.N)
        self._iid_p = None
        if cfg.traffic.kind == "iid":
            mean = np.asarray(cfg.traffic.mean, dtype=float)
            mean = np.broadcast_to(mean, (self.N, self.N))
            if (mean < 0).any() or (mean > cfg.params.a_max).any():
                raise ValueError("iid traffic mean must lie in [0, a_max]")
            self._iid_p = mean / cfg.params.a_max if cfg.params.a_max > 0 else np.zeros_like(mean)

    # -- helpers ----------------------------------------------------------

    def _draw_arrivals(self) -> np.ndarray:
        if self.cfg.traffic.kind == "constant":
            return self._arrivals_buf
        return self.rng_arrivals.binomial(self.cfg.params.a_max, self._iid_p)

    def _apply_switch(self, sw: UtilitySwitch) -> None:
        if sw.weights is not None:
            weights = np.asarray(sw.weights, dtype=float).copy()
        else:
            weights = self.rng_weights.choice(np.asarray(sw.redraw_choices, dtype=float),
                                              size=(self.N, self.N))
        self.utility_now = UtilitySpec(weights=weights, base=self.cfg.utility.base)
        self.params_now = replace(self.params_now, beta=self.utility_now.beta)
        self.bounds = oracle.queue_bound_table(self.params_now, self.n)

    def _slack_now(self) -> Dict[str, float]:
        st = self.state
        b = self.bounds
        peaks = {
            "admission": float(st.admission.max()),
            "regulation": float(st.regulation.max()),
            "source": max(float(st.src_upper.max()), float(st.src_lower.max())),
            "partition": max(float(st.part_upper.max()), float(st.part_lower.max())),
        }
        out = {key: b[key] - val for key, val in peaks.items()}
        sw_slack = np.inf
        sw_peak = 0.0
        for col in range(1, self.n):
            bound = b[f"switch_col{col}"]
            pair_hi = max(float((st.sw_uu[col - 1] + st.sw_ul[col - 1]).max()),
                          float((st.sw_lu[col - 1] + st.sw_ll[col - 1]).max()))
            sw_slack = min(sw_slack, bound - pair_hi)
            sw_peak = max(sw_peak, pair_hi)
        out["switch"] = sw_slack
        peaks["switch"] = sw_peak
        for key, val in peaks.items():
            if val > self.max_observed[key]:
                self.max_observed[key] = val
        return out

    def _check_invariants(self, t: int, slack: Dict[str, float]) -> None:
        st = self.state
        if min(slack.values()) < 0:
            details = oracle.check_queue_bounds(st, self.params_now, self.n)
            raise InvariantViolation(
                f"slot {t}: deterministic queue bound violated: "
                + "; ".join(str(d) for d in details[:5]))
        cu, cl = st.server_packet_counts()
        if (cu > st.src_upper + 1e-9).any() or (cl > st.src_lower + 1e-9).any():
            raise InvariantViolation(f"slot {t}: a source packet queue exceeds its counter")
        if self.FH:
            uu, ul, lu, ll = st.switch_packet_counts()
            for counts, counter in ((uu, st.sw_uu), (ul, st.sw_ul),
                                    (lu, st.sw_lu), (ll, st.sw_ll)):
                if (counts > counter + 1e-9).any():
                    raise InvariantViolation(
                        f"slot {t}: a switch packet queue exceeds its counter")
        if st.total_packets() != self.admitted_total - self.delivered_total:
            raise InvariantViolation(f"slot {t}: packet conservation broken")
        if t % self.cfg.fifo_check_interval == 0:
            self._check_fifo_placement(t)

    def _check_fifo_placement(self, t: int) -> None:
        st = self.state
        for k in range(self.n):
            cut = self.a_cut[k]
            for i0 in range(self.R):
                for pkt in st.fifo_a[k][i0]:
                    if pkt.dest > cut[i0]:
                        raise InvariantViolation(
                            f"slot {t}: packet for {pkt.dest} misplaced in an a-queue")
                for pkt in st.fifo_b[k][i0]:
                    if pkt.dest <= cut[i0]:
                        raise InvariantViolation(
                            f"slot {t}: packet for {pkt.dest} misplaced in a b-queue")

    # -- main loop ----------------------------------------------------------

    def run(self) -> MetricsReport:
        started = time.perf_counter()
        cfg = self.cfg
        n, N, R, FH = self.n, self.N, self.R, self.FH
        st = self.state
        half = self.half
        bias = 1.0 if cfg.bias_enhanced else 0.0
        eta = cfg.params.eta
        exact_feed = cfg.variant == "exact"

        period = 2 * n - 1
        ring_len = 10 * period + 1  # covers the sparse variant's worst lag
        q_ring = np.zeros((ring_len, N))

        ser_phys: List[int] = []
        ser_fict: List[float] = []
        ser_adm: List[int] = []
        ser_del: List[int] = []

        phase_start = 0
        phase_admit_base = np.zeros((N, N), dtype=np.int64)
        phases_raw: List[Tuple[int, int, np.ndarray, UtilitySpec]] = []
        switch = cfg.utility_switch

        for t in range(cfg.slots):
            if switch is not None and t == switch.slot:
                phases_raw.append((phase_start, t, self.admitted - phase_admit_base,
                                   self.utility_now))
                phase_start = t
                phase_admit_base = self.admitted.copy()
                self._apply_switch(switch)

            arrivals = self._draw_arrivals()
            tau = min(regulation_lag_slot(cfg.variant, t, n), t)
            q_view = q_ring[tau % ring_len] if tau >= 0 else self._zeros_n

            # -- every decision comes from the slot-start snapshot --
            act = controller.decide_slot(
                admission=st.admission, q_view=q_view, src_upper=st.src_upper,
                src_lower=st.src_lower, sw_uu=st.sw_uu, sw_ul=st.sw_ul,
                sw_lu=st.sw_lu, sw_ll=st.sw_ll, part_upper=st.part_upper,
                part_lower=st.part_lower, arrivals=arrivals,
                utility=self.utility_now, params=self.params_now,
                c1_of_server=self.c1row, up_next=self.up_next,
                low_next=self.low_next, bias=bias)
            gamma, admit = act.gamma, act.admit
            gs_u, gs_l = act.server_upper, act.server_lower
            g4 = act.link_grants
            g_d1, g_d2 = act.partition_upper, act.partition_lower
            bits = self.rng_split.integers(0, 2, size=(2, FH, R)) if FH else None

            # -- physical departures against slot-start contents --
            arr_up = [[[] for _ in range(R)] for _ in range(FH)]
            arr_low = [[[] for _ in range(R)] for _ in range(FH)]
            fifo_in = [[[] for _ in range(R)] for _ in range(n)]
            deliver_d = np.zeros(N, dtype=np.int64)

            first_stage = arr_up[0] if FH else fifo_in[0]
            for s0 in np.flatnonzero(gs_u):
                transfer_packets(st.pkt_src_upper[s0], 1,
                                 first_stage[self.c1row[s0]].append)
            first_stage = arr_low[0] if FH else fifo_in[0]
            for s0 in np.flatnonzero(gs_l):
                transfer_packets(st.pkt_src_lower[s0], 1,
                                 first_stage[self.c1row[s0]].append)

            for j in range(FH):
                g_uu, g_ul, g_lu, g_ll = g4[j]
                up, lo = self.up_next[j], self.low_next[j]
                to_up_div = arr_up[j + 1] if j + 1 < FH else fifo_in[0]
                to_low_div = arr_low[j + 1] if j + 1 < FH else fifo_in[0]
                x_uu = self.xfer["uu"]
                for i0 in np.flatnonzero(g_uu):
                    x_uu[j, i0] += transfer_packets(st.pkt_uu[j][i0], 1,
                                                    to_up_div[up[i0]].append)
                x_ul = self.xfer["ul"]
                for i0 in np.flatnonzero(g_ul):
                    x_ul[j, i0] += transfer_packets(st.pkt_ul[j][i0], 1,
                                                    to_up_div[lo[i0]].append)
                x_lu = self.xfer["lu"]
                for i0 in np.flatnonzero(g_lu):
                    x_lu[j, i0] += transfer_packets(st.pkt_lu[j][i0], 1,
                                                    to_low_div[up[i0]].append)
                x_ll = self.xfer["ll"]
                for i0 in np.flatnonzero(g_ll):
                    x_ll[j, i0] += transfer_packets(st.pkt_ll[j][i0], 1,
                                                    to_low_div[lo[i0]].append)

            for k in range(n):  # free flow through columns n..2n-1
                col0 = n - 1 + k
                last = k == n - 1
                fa, fb = st.fifo_a[k], st.fifo_b[k]
                if not last:
                    up, lo = self.up_next[col0], self.low_next[col0]
                    nxt = fifo_in[k + 1]
                for i0 in range(R):
                    dq = fa[i0]
                    if dq:
                        pkt = dq.popleft()
                        if k == 0:
                            self.part_counts[pkt.source - 1, pkt.dest - 1, i0] += 1
                        if last:
                            self._deliver(pkt, 2 * i0 + 1, t, deliver_d)
                        else:
                            nxt[up[i0]].append(pkt)
                    dq = fb[i0]
                    if dq:
                        pkt = dq.popleft()
                        if k == 0:
                            self.part_counts[pkt.source - 1, pkt.dest - 1, i0] += 1
                        if last:
                            self._deliver(pkt, 2 * i0 + 2, t, deliver_d)
                        else:
                            nxt[lo[i0]].append(pkt)

            # -- counter updates (granted rates, not actual transfers) --
            adm_up = admit[:, :half].sum(axis=1)
            adm_low = admit[:, half:].sum(axis=1)
            st.src_upper = np.maximum(st.src_upper - gs_u, 0.0) + adm_up
            st.src_lower = np.maximum(st.src_lower - gs_l, 0.0) + adm_low
            in_u = np.bincount(self.c1row[gs_u], minlength=R).astype(float)
            in_l = np.bincount(self.c1row[gs_l], minlength=R).astype(float)
            for j in range(FH):
                g_uu, g_ul, g_lu, g_ll = g4[j]
                x, y = bits[0, j], bits[1, j]
                st.sw_uu[j] = np.maximum(st.sw_uu[j] - g_uu, 0.0) + x * in_u
                st.sw_ul[j] = np.maximum(st.sw_ul[j] - g_ul, 0.0) + (1 - x) * in_u
                st.sw_lu[j] = np.maximum(st.sw_lu[j] - g_lu, 0.0) + y * in_l
                st.sw_ll[j] = np.maximum(st.sw_ll[j] - g_ll, 0.0) + (1 - y) * in_l
                up, lo = self.up_next[j], self.low_next[j]
                in_u = (np.bincount(up[g_uu], minlength=R)
                        + np.bincount(lo[g_ul], minlength=R)).astype(float)
                in_l = (np.bincount(up[g_lu], minlength=R)
                        + np.bincount(lo[g_ll], minlength=R)).astype(float)
            st.part_upper = np.maximum(st.part_upper - g_d1, 0.0) + in_u
            st.part_lower = np.maximum(st.part_lower - g_d2, 0.0) + in_l
            st.admission = np.maximum(st.admission - admit, 0.0) + gamma
            feed = admit.sum(axis=0) if exact_feed else deliver_d
            st.regulation = np.maximum(st.regulation - (1.0 - eta), 0.0) + feed
            q_ring[(t + 1) % ring_len] = st.regulation

            # -- arrivals land at slot end --
            for j in range(FH):
                x, y = bits[0, j], bits[1, j]
                pkt_uu, pkt_ul = st.pkt_uu[j], st.pkt_ul[j]
                pkt_lu, pkt_ll = st.pkt_lu[j], st.pkt_ll[j]
                a_up, a_low = arr_up[j], arr_low[j]
                for i0 in range(R):
                    ps = a_up[i0]
                    if ps:
                        (pkt_uu[i0] if x[i0] else pkt_ul[i0]).extend(ps)
                    ps = a_low[i0]
                    if ps:
                        (pkt_lu[i0] if y[i0] else pkt_ll[i0]).extend(ps)
            for k in range(n):
                cut = self.a_cut[k]
                fa, fb = st.fifo_a[k], st.fifo_b[k]
                fin = fifo_in[k]
                for i0 in range(R):
                    ps = fin[i0]
                    if ps:
                        c = cut[i0]
                        for pkt in ps:
                            (fa[i0] if pkt.dest <= c else fb[i0]).append(pkt)
            if admit.any():
                for s0, d0 in np.argwhere(admit):
                    pkt = Packet(int(s0) + 1, int(d0) + 1, t)
                    tgt = st.pkt_src_upper[s0] if d0 < half else st.pkt_src_lower[s0]
                    for _ in range(admit[s0, d0]):
                        tgt.append(pkt)

            # -- bookkeeping --
            self.admitted += admit
            self.admitted_total += int(adm_up.sum() + adm_low.sum())
            self.delivered_total += int(deliver_d.sum())
            ser_phys.append(self.admitted_total - self.delivered_total)
            ser_fict.append(st.total_fictitious())
            ser_adm.append(self.admitted_total)
            ser_del.append(self.delivered_total)
            slack = self._slack_now()
            for key, val in slack.items():
                if val < self.min_slack[key]:
                    self.min_slack[key] = val
            if cfg.check_invariants:
                self._check_invariants(t, slack)

        phases_raw.append((phase_start, cfg.slots, self.admitted - phase_admit_base,
                           self.utility_now))
        return self._finalize(started, phases_raw, ser_phys, ser_fict, ser_adm, ser_del)

    def _deliver(self, pkt: Packet, server_row: int, t: int, deliver_d: np.ndarray) -> None:
        if pkt.dest != server_row:
            raise InvariantViolation(
                f"slot {t}: packet for output {pkt.dest} left the fabric at {server_row}")
        self.delivered[pkt.source - 1, pkt.dest - 1] += 1
        self.delay_sum += t - pkt.admit_slot
        deliver_d[pkt.dest - 1] += 1

    def _finalize(self, started, phases_raw, ser_phys, ser_fict, ser_adm, ser_del):
        cfg = self.cfg
        slots = cfg.slots
        phases = []
        for start, end, admitted, spec in phases_raw:
            if end <= start:
                continue
            rates = admitted / (end - start)
            per_flow = spec.value(rates)
            phases.append(PhaseMetrics(start=start, end=end, rates=rates,
                                       utility=float(per_flow.sum()),
                                       per_flow_utility=per_flow,
                                       weights=spec.weights.copy()))
        rates = self.admitted / slots
        delivered_total = self.delivered_total
        admitted_total = self.admitted_total
        return MetricsReport(
            n=cfg.n, v=cfg.params.v, eta=cfg.params.eta, a_max=cfg.params.a_max,
            slots=slots, seed=cfg.seed, variant=cfg.variant,
            bias_enhanced=cfg.bias_enhanced,
            admitted=self.admitted, delivered=self.delivered, rates=rates,
            utility=phases[-1].utility if phases else 0.0,
            phases=phases,
            admitted_total=admitted_total, delivered_total=delivered_total,
            delivery_fraction=(delivered_total / admitted_total) if admitted_total else 1.0,
            avg_delay=(self.delay_sum / delivered_total) if delivered_total else 0.0,
            series_total_physical=np.asarray(ser_phys, dtype=np.int64),
            series_total_fictitious=np.asarray(ser_fict),
            series_admitted_cum=np.asarray(ser_adm, dtype=np.int64),
            series_delivered_cum=np.asarray(ser_del, dtype=np.int64),
            min_slack=dict(self.min_slack),
            max_observed=dict(self.max_observed),
            transfer_rates={k: v / slots for k, v in self.xfer.items()},
            partition_flow_rates=self.part_counts / slots,
            runtime_seconds=time.perf_counter() - started,
        )
