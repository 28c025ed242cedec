"""Construction and queries for 2^n x 2^n Benes switching fabrics.

The fabric is a grid of 2x2 switch modules with 2^(n-1) rows and 2n-1
columns, assembled recursively: a column of input modules, two half-size
fabrics stacked vertically, and a column of output modules. Column n is
the partition column. From any partition node every output server is
reachable by exactly one path, and the sets of outputs served by the two
outgoing links of a node in columns n..2n-1 are contiguous ranges with a
closed form.

The recursion is flattened into explicit adjacency maps at build time so
that per-slot lookups are dictionary reads. All public row and column
labels are 1-based.
"""
from __future__ import annotations

from typing import Dict, Iterator, List, NamedTuple, Tuple, Union


class Node(NamedTuple):
    """A switch module addressed by (column, row)."""

    col: int
    row: int

    def __str__(self) -> str:
        return f"C{self.col}r{self.row}"


class InputServer(NamedTuple):
    row: int

    def __str__(self) -> str:
        return f"S{self.row}"


class OutputServer(NamedTuple):
    row: int

    def __str__(self) -> str:
        return f"D{self.row}"


NodeRef = Union[Node, InputServer, OutputServer]

# Outputs reachable over one link form a contiguous run of server rows.
ReachSet = range


def build_benes(n: int) -> "BenesTopology":
    """Build the 2^n x 2^n fabric. n must be at least 1."""
    return BenesTopology(n)


class BenesTopology:
    """Immutable wiring of a 2^n x 2^n Benes fabric.

    Link naming: every module has two outgoing links, "a" to the next hop
    with the smaller row number and "b" to the other one. The recursive
    construction routes the upper physical output to the smaller-row
    neighbor, so "a" is also the upper output link.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"fabric order must be >= 1, got {n}")
        self.n = n
        self.rows = 2 ** (n - 1)
        self.cols = 2 * n - 1
        self.num_servers = 2 ** n

        self._next_a: Dict[Node, NodeRef] = {}
        self._next_b: Dict[Node, NodeRef] = {}
        in_ports, out_ports = self._wire(n, 0, 0)
        for p, node in enumerate(out_ports):
            target = OutputServer(p + 1)
            if p % 2 == 0:
                self._next_a[node] = target
            else:
                self._next_b[node] = target
        self._input_module = {s + 1: in_ports[s] for s in range(self.num_servers)}

        self._prev: Dict[Node, List[Node]] = {}
        for src, dst in list(self._next_a.items()) + list(self._next_b.items()):
            if isinstance(dst, Node):
                self._prev.setdefault(dst, []).append(src)
        for lst in self._prev.values():
            lst.sort()

    # -- construction ---------------------------------------------------

    def _wire(self, k: int, col0: int, row0: int):
        # Wires the sub-fabric of order k whose switch columns occupy
        # global columns col0+1 .. col0+2k-1 and rows row0+1 .. row0+2^(k-1).
        # Returns (in_ports, out_ports): port p (0-based) -> attached Node.
        if k == 1:
            node = Node(col0 + 1, row0 + 1)
            return [node, node], [node, node]
        rows_here = 2 ** (k - 1)
        first = [Node(col0 + 1, row0 + i) for i in range(1, rows_here + 1)]
        last = [Node(col0 + 2 * k - 1, row0 + i) for i in range(1, rows_here + 1)]
        up_in, up_out = self._wire(k - 1, col0 + 1, row0)
        low_in, low_out = self._wire(k - 1, col0 + 1, row0 + rows_here // 2)
        for i in range(rows_here):
            # input module row i+1: upper output feeds input link i+1 of the
            # upper sub-fabric, lower output the same link of the lower one
            self._next_a[first[i]] = up_in[i]
            self._next_b[first[i]] = low_in[i]
        for p in range(rows_here):
            # output link p+1 of the upper (lower) sub-fabric feeds the
            # upper (lower) input of output module row p+1
            self._attach_out(up_out, p, last[p])
            self._attach_out(low_out, p, last[p])
        in_ports = [first[p // 2] for p in range(2 * rows_here)]
        out_ports = [last[p // 2] for p in range(2 * rows_here)]
        return in_ports, out_ports

    def _attach_out(self, sub_out: List[Node], p: int, target: Node) -> None:
        node = sub_out[p]
        if p % 2 == 0:
            self._next_a[node] = target
        else:
            self._next_b[node] = target

    # -- basic queries ---------------------------------------------------

    @property
    def partition_column(self) -> int:
        return self.n

    def nodes(self) -> Iterator[Node]:
        for col in range(1, self.cols + 1):
            for row in range(1, self.rows + 1):
                yield Node(col, row)

    def partition_nodes(self) -> List[Node]:
        return [Node(self.n, i) for i in range(1, self.rows + 1)]

    def next_hops(self, node: Node) -> Tuple[NodeRef, NodeRef]:
        """(a, b) targets of the node's outgoing links; a has the smaller row."""
        return self._next_a[node], self._next_b[node]

    def prev_hops(self, node: Node) -> Tuple[NodeRef, ...]:
        """Nodes (or input servers, for column 1) feeding this node."""
        if node.col == 1:
            return (InputServer(2 * node.row - 1), InputServer(2 * node.row))
        return tuple(self._prev[node])

    def input_module_of(self, s: int) -> Node:
        """Column-1 module an input server attaches to."""
        if not 1 <= s <= self.num_servers:
            raise ValueError(f"input server {s} out of range 1..{self.num_servers}")
        return self._input_module[s]

    def servers_of(self, node: Node) -> Tuple[int, int]:
        """Input servers attached to a column-1 module."""
        if node.col != 1:
            raise ValueError("only column-1 modules have attached input servers")
        return 2 * node.row - 1, 2 * node.row

    # -- second-half structure --------------------------------------------

    def reachable_outputs(self, node: Node, link: str) -> ReachSet:
        """Output-server rows reachable over one outgoing link.

        Defined for nodes in columns n..2n-1. For a node in column n+l the
        outputs split into two runs of length 2^(n-l)/2 determined by the
        row index modulo 2^l; link "a" serves the lower-numbered run.
        """
        level = node.col - self.n
        if level < 0:
            raise ValueError(
                f"reachable output sets are defined for columns {self.n}..{self.cols}, "
                f"got column {node.col}"
            )
        span = 2 ** (self.n - level)
        kappa = (node.row - 1) % (2 ** level)
        lo = kappa * span
        mid = lo + span // 2
        if link == "a":
            return range(lo + 1, mid + 1)
        if link == "b":
            return range(mid + 1, lo + span + 1)
        raise ValueError(f"link must be 'a' or 'b', got {link!r}")

    def unique_path(self, node: Node, dest: int) -> List[NodeRef]:
        """The single path from a partition node to an output server.

        Returns the visited refs starting at the partition node and ending
        with the output server; each hop takes the link whose reachable set
        contains the destination.
        """
        if node.col != self.n:
            raise ValueError(f"unique paths start at partition nodes (column {self.n})")
        if not 1 <= dest <= self.num_servers:
            raise ValueError(f"output server {dest} out of range 1..{self.num_servers}")
        path: List[NodeRef] = [node]
        cur: NodeRef = node
        while isinstance(cur, Node):
            link = "a" if dest in self.reachable_outputs(cur, "a") else "b"
            cur = self._next_a[cur] if link == "a" else self._next_b[cur]
            path.append(cur)
        assert cur == OutputServer(dest)
        return path

    # -- export -----------------------------------------------------------

    def export_edge_list(self) -> str:
        """Directed links as text, one per line: from-col from-row to-col to-row.

        Input servers are written with pseudo-column 0 and output servers
        with pseudo-column 2n; both carry their server row.
        """
        lines = []
        for s in range(1, self.num_servers + 1):
            m = self._input_module[s]
            lines.append(f"0 {s} {m.col} {m.row}")
        for src in self.nodes():
            for dst in self.next_hops(src):
                if isinstance(dst, Node):
                    lines.append(f"{src.col} {src.row} {dst.col} {dst.row}")
                else:
                    lines.append(f"{src.col} {src.row} {2 * self.n} {dst.row}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return f"BenesTopology(n={self.n}, {self.num_servers}x{self.num_servers})"
