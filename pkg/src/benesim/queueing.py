"""Queue families and the slot-level update primitives they share.

Two bookkeeping planes coexist. Real-valued counters drive all control
decisions: two per input server, four per switch module in columns
1..n-1, two per partition node, one admission counter per flow and one
regulation counter per output port. The packet plane holds actual
traffic: deques mirroring the counter queues up to the partition column,
then destination-keyed FIFO pairs through the second half. Counter
queues are charged with granted rates while packet queues can only move
what they hold, so a counter always dominates its packet count.
"""
from __future__ import annotations

from collections import deque
from typing import Callable, Deque, List, NamedTuple, Tuple

import numpy as np

from .topology import BenesTopology


class Packet(NamedTuple):
    source: int      # input server row, 1-based
    dest: int        # output server row, 1-based
    admit_slot: int


def step_counter_queue(q: float, service: float, arrivals: float) -> float:
    """One slot of the canonical counter update: serve first, then admit.

    Service applied to an empty queue is simply wasted; arrivals always
    land. Every counter queue in the system evolves by this law.
    """
    return max(q - service, 0.0) + arrivals


def transfer_packets(src: Deque[Packet], grant: int, classify: Callable[[Packet], None]) -> int:
    """Move up to `grant` head packets out of a queue.

    Each moved packet is handed to `classify`, which places it at the
    receiver. Returns the number actually moved, which is smaller than the
    grant when the queue runs dry.
    """
    moved = min(int(grant), len(src))
    for _ in range(moved):
        classify(src.popleft())
    return moved


def split_draw(rng: np.random.Generator) -> Tuple[int, int]:
    """Fair independent bits (upper-division, lower-division) for one node."""
    x, y = rng.integers(0, 2, size=2)
    return int(x), int(y)


def draw_split_bits(rng: np.random.Generator, count: int) -> np.ndarray:
    """Batch form of split_draw: shape (2, count) of fair bits.

    Row 0 routes the slot's upper-division arrival batch, row 1 the
    lower-division batch. A single draw per node per division per slot
    moves the whole batch together.
    """
    return rng.integers(0, 2, size=(2, count))


class QueueState:
    """Every queue in one simulation: counters, packet deques, virtual queues.

    Counter arrays are float64 and 0-indexed; `sw_*[j]` belongs to column
    j+1. Deques hold Packet tuples with 1-based rows.
    """

    def __init__(self, topo: BenesTopology):
        n = topo.n
        self.n = n
        self.num_servers = topo.num_servers
        self.rows = topo.rows
        self.first_half_cols = n - 1

        N, R, FH = self.num_servers, self.rows, self.first_half_cols
        self.src_upper = np.zeros(N)
        self.src_lower = np.zeros(N)
        self.sw_uu = np.zeros((FH, R))
        self.sw_ul = np.zeros((FH, R))
        self.sw_lu = np.zeros((FH, R))
        self.sw_ll = np.zeros((FH, R))
        self.part_upper = np.zeros(R)   # partition counters toward the upper sink
        self.part_lower = np.zeros(R)
        self.admission = np.zeros((N, N))   # per-flow admission counter
        self.regulation = np.zeros(N)       # per-output-port regulation counter

        self.pkt_src_upper: List[Deque[Packet]] = [deque() for _ in range(N)]
        self.pkt_src_lower: List[Deque[Packet]] = [deque() for _ in range(N)]
        self.pkt_uu = [[deque() for _ in range(R)] for _ in range(FH)]
        self.pkt_ul = [[deque() for _ in range(R)] for _ in range(FH)]
        self.pkt_lu = [[deque() for _ in range(R)] for _ in range(FH)]
        self.pkt_ll = [[deque() for _ in range(R)] for _ in range(FH)]
        # FIFO pairs for columns n..2n-1; index 0 is the partition column
        self.fifo_a = [[deque() for _ in range(R)] for _ in range(n)]
        self.fifo_b = [[deque() for _ in range(R)] for _ in range(n)]

    # -- packet-plane tallies -------------------------------------------

    def switch_packet_counts(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        def counts(plane):
            return np.array([[len(q) for q in col] for col in plane], dtype=float)
        return counts(self.pkt_uu), counts(self.pkt_ul), counts(self.pkt_lu), counts(self.pkt_ll)

    def server_packet_counts(self) -> Tuple[np.ndarray, np.ndarray]:
        up = np.array([len(q) for q in self.pkt_src_upper], dtype=float)
        low = np.array([len(q) for q in self.pkt_src_lower], dtype=float)
        return up, low

    def total_packets(self) -> int:
        total = sum(len(q) for q in self.pkt_src_upper)
        total += sum(len(q) for q in self.pkt_src_lower)
        for plane in (self.pkt_uu, self.pkt_ul, self.pkt_lu, self.pkt_ll):
            for col in plane:
                total += sum(len(q) for q in col)
        for plane in (self.fifo_a, self.fifo_b):
            for col in plane:
                total += sum(len(q) for q in col)
        return total

    def total_fictitious(self) -> float:
        return float(
            self.src_upper.sum() + self.src_lower.sum()
            + self.sw_uu.sum() + self.sw_ul.sum() + self.sw_lu.sum() + self.sw_ll.sum()
            + self.part_upper.sum() + self.part_lower.sum()
        )
