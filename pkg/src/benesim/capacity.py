"""Supportable rate regions and balanced per-link rate assignments.

A rate matrix r[s][d] (packets/slot from input server s to output server d)
is supportable by the fabric exactly when every row sum and every column
sum is at most one. For any such matrix there exists an assignment of
upper/lower division rates to the links of the first-half overlay (input
servers through the partition column, plus one aggregate sink per
division) that covers the sources, conserves flow at every module,
respects unit link capacities, and splits each module's traffic of either
division equally between its two next hops. The constructive proof of
that fact doubles as the builder here: assign the input column, fold the
rate matrix onto the two half-size sub-fabrics, and recurse down to an
explicit 4x4 base case.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Tuple, Union

import numpy as np

from .topology import BenesTopology, InputServer, Node


class Sink(NamedTuple):
    """Aggregate destination for one traffic division in the overlay."""

    division: str

    def __str__(self) -> str:
        return f"sink[{self.division}]"


UPPER_SINK = Sink("upper")
LOWER_SINK = Sink("lower")

LinkKey = Tuple[Union[InputServer, Node], Union[Node, Sink]]


def in_capacity_region(r: np.ndarray, n: int, slack: float = 0.0, tol: float = 1e-9) -> bool:
    """True when r is nonnegative with row sums <= 1 and column sums <= 1 - slack.

    slack=0 tests the supportable region itself; a positive slack tests the
    tightened region used by output-port regulation.
    """
    r = np.asarray(r, dtype=float)
    size = 2 ** n
    if r.shape != (size, size):
        raise ValueError(f"rate matrix must be {size}x{size}, got {r.shape}")
    if (r < -tol).any():
        return False
    if (r.sum(axis=1) > 1.0 + tol).any():
        return False
    return bool((r.sum(axis=0) <= 1.0 - slack + tol).all())


@dataclass
class RateProfile:
    """Per-link (upper, lower) division rates on the first-half overlay."""

    n: int
    rates: Dict[LinkKey, Tuple[float, float]] = field(default_factory=dict)

    def link(self, src, dst) -> Tuple[float, float]:
        return self.rates[(src, dst)]

    def items(self):
        return self.rates.items()

    def __len__(self) -> int:
        return len(self.rates)


def sample_interior_rates(n: int, rng: np.random.Generator, margin: float = 1.05) -> np.ndarray:
    """Random rate matrix strictly inside the supportable region.

    Draws a uniform nonnegative matrix and rescales it by the worst
    row/column sum times a margin factor, which lands every sample in the
    interior at negligible cost.
    """
    size = 2 ** n
    u = rng.random((size, size))
    scale = max(u.sum(axis=0).max(), u.sum(axis=1).max()) * margin
    return u / scale


def build_stabilizing_profile(r: np.ndarray, topo: BenesTopology) -> RateProfile:
    """Constructive balanced rate assignment for a supportable rate matrix.

    The returned profile satisfies all feasibility constraints checked by
    verify_profile, with equal flow conservation at every module, and is
    linear in r. Rejects matrices outside the supportable region.
    """
    n = topo.n
    r = np.asarray(r, dtype=float)
    if not in_capacity_region(r, n, 0.0):
        raise ValueError("rate matrix is outside the supportable region")
    profile = RateProfile(n=n)
    half = 2 ** (n - 1)
    for s in range(1, topo.num_servers + 1):
        m = topo.input_module_of(s)
        upper = float(r[s - 1, :half].sum())
        lower = float(r[s - 1, half:].sum())
        profile.rates[(InputServer(s), m)] = (upper, lower)
    _assign_region(profile, r, topo, n, col0=0, row0=0)
    return profile


def _assign_region(profile: RateProfile, r: np.ndarray, topo: BenesTopology,
                   k: int, col0: int, row0: int) -> None:
    # r is the local rate matrix of the order-k sub-fabric whose switch
    # columns start at global column col0+1 and rows at row0+1. Only the
    # first k of its columns belong to the overlay.
    if k == 1:
        node = Node(col0 + 1, row0 + 1)
        profile.rates[(node, UPPER_SINK)] = (float(r[:, 0].sum()), 0.0)
        profile.rates[(node, LOWER_SINK)] = (0.0, float(r[:, 1].sum()))
        return

    rows_here = 2 ** (k - 1)
    half = rows_here  # destinations 1..2^(k-1) are the local upper division
    for i in range(1, rows_here + 1):
        m = Node(col0 + 1, row0 + i)
        a, b = topo.next_hops(m)
        block = r[2 * i - 2: 2 * i, :]
        upper = 0.5 * float(block[:, :half].sum())
        lower = 0.5 * float(block[:, half:].sum())
        profile.rates[(m, a)] = (upper, lower)
        profile.rates[(m, b)] = (upper, lower)

    if k == 2:
        # both partition nodes carry half of each division's total
        up_total = 0.5 * float(r[:, :half].sum())
        low_total = 0.5 * float(r[:, half:].sum())
        for i in range(1, 3):
            p = Node(col0 + 2, row0 + i)
            profile.rates[(p, UPPER_SINK)] = (up_total, 0.0)
            profile.rates[(p, LOWER_SINK)] = (0.0, low_total)
        return

    # fold source pairs and destination pairs; the halving above makes the
    # folded matrix the exact offered load of each sub-fabric
    r_sub = 0.5 * (r[0::2, 0::2] + r[0::2, 1::2] + r[1::2, 0::2] + r[1::2, 1::2])
    _assign_region(profile, r_sub, topo, k - 1, col0 + 1, row0)
    _assign_region(profile, r_sub, topo, k - 1, col0 + 1, row0 + rows_here // 2)


def verify_profile(profile: RateProfile, r: np.ndarray, topo: BenesTopology,
                   tol: float = 1e-9) -> List[str]:
    """Check a profile against every feasibility constraint.

    Returns one message per violated constraint; an empty list means the
    profile is valid. Checks: link presence, nonnegativity, unit capacity
    per link, sink purity (no lower-division rate toward the upper sink and
    vice versa), source coverage at the input servers, flow conservation at
    every module in columns 1..n, and the equal-split symmetry on columns
    1..n-1.
    """
    n = topo.n
    r = np.asarray(r, dtype=float)
    half = 2 ** (n - 1)
    bad: List[str] = []

    expected: List[LinkKey] = []
    for s in range(1, topo.num_servers + 1):
        expected.append((InputServer(s), topo.input_module_of(s)))
    for col in range(1, n):
        for row in range(1, topo.rows + 1):
            m = Node(col, row)
            a, b = topo.next_hops(m)
            expected.append((m, a))
            expected.append((m, b))
    for p in topo.partition_nodes():
        expected.append((p, UPPER_SINK))
        expected.append((p, LOWER_SINK))

    for key in expected:
        if key not in profile.rates:
            bad.append(f"missing link {key[0]}->{key[1]}")
    if bad:
        return bad

    for (src, dst), (up, low) in profile.items():
        if up < -tol or low < -tol:
            bad.append(f"negative rate on {src}->{dst}: ({up}, {low})")
        if up + low > 1.0 + tol:
            bad.append(f"capacity exceeded on {src}->{dst}: {up + low} > 1")
    for p in topo.partition_nodes():
        if abs(profile.link(p, UPPER_SINK)[1]) > tol:
            bad.append(f"lower-division rate on {p}->{UPPER_SINK}")
        if abs(profile.link(p, LOWER_SINK)[0]) > tol:
            bad.append(f"upper-division rate on {p}->{LOWER_SINK}")

    for s in range(1, topo.num_servers + 1):
        up, low = profile.link(InputServer(s), topo.input_module_of(s))
        need_up = float(r[s - 1, :half].sum())
        need_low = float(r[s - 1, half:].sum())
        if need_up > up + tol:
            bad.append(f"upper source coverage short at server {s}: {need_up} > {up}")
        if need_low > low + tol:
            bad.append(f"lower source coverage short at server {s}: {need_low} > {low}")

    for col in range(1, n + 1):
        for row in range(1, topo.rows + 1):
            m = Node(col, row)
            if col == 1:
                feeders = [(InputServer(s), m) for s in topo.servers_of(m)]
            else:
                feeders = [(p, m) for p in topo.prev_hops(m)]
            in_up = sum(profile.link(*f)[0] for f in feeders)
            in_low = sum(profile.link(*f)[1] for f in feeders)
            if col == n:
                out_up = profile.link(m, UPPER_SINK)[0] + profile.link(m, LOWER_SINK)[0]
                out_low = profile.link(m, UPPER_SINK)[1] + profile.link(m, LOWER_SINK)[1]
            else:
                a, b = topo.next_hops(m)
                out_up = profile.link(m, a)[0] + profile.link(m, b)[0]
                out_low = profile.link(m, a)[1] + profile.link(m, b)[1]
            if in_up > out_up + tol:
                bad.append(f"upper flow not conserved at {m}: in {in_up} > out {out_up}")
            if in_low > out_low + tol:
                bad.append(f"lower flow not conserved at {m}: in {in_low} > out {out_low}")

    for col in range(1, n):
        for row in range(1, topo.rows + 1):
            m = Node(col, row)
            a, b = topo.next_hops(m)
            ua, la = profile.link(m, a)
            ub, lb = profile.link(m, b)
            if abs(ua - ub) > tol or abs(la - lb) > tol:
                bad.append(f"unequal split at {m}: ({ua}, {la}) vs ({ub}, {lb})")

    return bad
