"""Balanced n-way tier partitioning by simulated annealing.

Cost is the edge cut of the circuit graph (cross-tier edge multiplicity),
used as the proxy for the number of TSVs. Moves are pairwise swaps of two
vertices in different tiers, so tier sizes never change after the random
balanced start.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from .errors import SameTier, TooFewVertices
from .netlist import CircuitGraph
from .sa import AnnealStats, SaSchedule, anneal


@dataclass
class Partition:
    tier_of: List[int]
    tiers: int

    @property
    def tier_sizes(self) -> List[int]:
        sizes = [0] * self.tiers
        for t in self.tier_of:
            sizes[t] += 1
        return sizes

    def members(self, tier: int) -> List[int]:
        return [v for v, t in enumerate(self.tier_of) if t == tier]

    def copy(self) -> "Partition":
        return Partition(list(self.tier_of), self.tiers)


@dataclass
class GainTable:
    """Per-vertex external/internal edge cost and gain ``D = E - I``.

    ``conn[v][t]`` is the edge multiplicity from ``v`` into tier ``t``; it is
    what makes the delta cost exact for more than two tiers.
    """
    external: List[int]
    internal: List[int]
    conn: List[List[int]] = field(repr=False)

    @property
    def gain(self) -> List[int]:
        return [e - i for e, i in zip(self.external, self.internal)]

    def copy(self) -> "GainTable":
        return GainTable(list(self.external), list(self.internal), [list(c) for c in self.conn])


@dataclass(frozen=True)
class SwapMove:
    v_i: int
    v_j: int
    delta_cost: int


def random_balanced_partition(graph: CircuitGraph, n: int, seed: int) -> Partition:
    """Uniformly random assignment with tier sizes differing by at most one."""
    if n < 1:
        raise ValueError("tier count must be >= 1")
    if graph.vertex_count < n:
        raise TooFewVertices(f"{graph.vertex_count} vertices for {n} tiers")
    rng = random.Random(seed)
    order = list(graph.vertices)
    rng.shuffle(order)
    tier_of = [0] * graph.vertex_count
    for k, v in enumerate(order):
        tier_of[v] = k % n
    return Partition(tier_of, n)


def setup_gains(graph: CircuitGraph, p: Partition) -> GainTable:
    n = graph.vertex_count
    conn = [[0] * p.tiers for _ in range(n)]
    for v in range(n):
        row = conn[v]
        for u, m in graph.adjacency[v].items():
            row[p.tier_of[u]] += m
    internal = [conn[v][p.tier_of[v]] for v in range(n)]
    external = [graph.weighted_degree(v) - internal[v] for v in range(n)]
    return GainTable(external, internal, conn)


def cut_size(graph: CircuitGraph, p: Partition) -> int:
    return sum(m for u, v, m in graph.edges if p.tier_of[u] != p.tier_of[v])


def swap_delta_cost(graph: CircuitGraph, gains: GainTable, p: Partition,
                    v_i: int, v_j: int) -> int:
    """Cut-size change from exchanging the tiers of ``v_i`` and ``v_j``.

    For two tiers this is ``(I_i + I_j) - (E_i + E_j) + 2*C_ij``. With more
    tiers the external terms only count edges into the partner's tier, since
    edges into a third tier stay cut either way.
    """
    a, b = p.tier_of[v_i], p.tier_of[v_j]
    if a == b:
        raise SameTier(f"vertices {v_i} and {v_j} are both in tier {a}")
    c_ij = graph.adjacency[v_i].get(v_j, 0)
    if p.tiers == 2:
        e_i, e_j = gains.external[v_i], gains.external[v_j]
    else:
        e_i, e_j = gains.conn[v_i][b], gains.conn[v_j][a]
    return (gains.internal[v_i] + gains.internal[v_j]) - (e_i + e_j) + 2 * c_ij


def _move_vertex(graph: CircuitGraph, p: Partition, gains: GainTable, v: int, dst: int):
    src = p.tier_of[v]
    p.tier_of[v] = dst
    conn, ext, itn = gains.conn, gains.external, gains.internal
    for u, m in graph.adjacency[v].items():
        row = conn[u]
        row[src] -= m
        row[dst] += m
        tu = p.tier_of[u]
        if tu == src:
            itn[u] -= m
            ext[u] += m
        elif tu == dst:
            itn[u] += m
            ext[u] -= m
    itn[v] = conn[v][dst]
    ext[v] = sum(conn[v]) - itn[v]


def apply_swap(graph: CircuitGraph, p: Partition, gains: GainTable, move: SwapMove) -> None:
    """Exchange the tiers of the two vertices and update gains in place."""
    a, b = p.tier_of[move.v_i], p.tier_of[move.v_j]
    if a == b:
        raise SameTier(f"vertices {move.v_i} and {move.v_j} are both in tier {a}")
    _move_vertex(graph, p, gains, move.v_i, b)
    _move_vertex(graph, p, gains, move.v_j, a)


class _PartitionProblem:
    def __init__(self, graph: CircuitGraph, p: Partition, gains: GainTable):
        self.graph = graph
        self.p = p
        self.gains = gains
        self.members = [p.members(t) for t in range(p.tiers)]
        self.pos = [0] * graph.vertex_count
        for t, mem in enumerate(self.members):
            for k, v in enumerate(mem):
                self.pos[v] = k
        self.best: Optional[List[int]] = None
        self.tier_pool = list(range(p.tiers))

    def propose(self, rng: random.Random):
        ta, tb = rng.sample(self.tier_pool, 2)
        ma, mb = self.members[ta], self.members[tb]
        if not ma or not mb:
            return None
        vi = ma[rng.randrange(len(ma))]
        vj = mb[rng.randrange(len(mb))]
        delta = swap_delta_cost(self.graph, self.gains, self.p, vi, vj)
        return SwapMove(vi, vj, delta), delta

    def apply(self, move: SwapMove) -> None:
        vi, vj = move.v_i, move.v_j
        ta, tb = self.p.tier_of[vi], self.p.tier_of[vj]
        apply_swap(self.graph, self.p, self.gains, move)
        ki, kj = self.pos[vi], self.pos[vj]
        self.members[ta][ki] = vj
        self.members[tb][kj] = vi
        self.pos[vi], self.pos[vj] = kj, ki

    def save_best(self) -> None:
        self.best = list(self.p.tier_of)


@dataclass
class PartitionResult:
    partition: Partition
    cut: int
    initial_cut: int
    stats: AnnealStats


def anneal_partition(graph: CircuitGraph, n: int, schedule: Optional[SaSchedule] = None,
                     on_accept: Optional[Callable] = None) -> PartitionResult:
    """Simulated-annealing partitioning into ``n`` balanced tiers.

    Starts from :func:`random_balanced_partition` seeded by
    ``schedule.seed`` with ``T0`` equal to the initial cut, and returns the
    lowest-cut partition seen. ``on_accept(partition, gains, cost)`` is
    called after every accepted move.
    """
    schedule = schedule or SaSchedule()
    p = random_balanced_partition(graph, n, schedule.seed)
    gains = setup_gains(graph, p)
    initial = cut_size(graph, p)
    if n == 1:
        stats = AnnealStats(initial, initial, initial, 0.0, stop_reason="single-tier")
        return PartitionResult(p, initial, initial, stats)

    problem = _PartitionProblem(graph, p, gains)
    rng = random.Random(schedule.seed ^ 0x5EED)
    hook = None
    if on_accept is not None:
        def hook(cost):
            on_accept(p, gains, cost)
    stats = anneal(problem, initial, graph.vertex_count, schedule, rng, hook)
    best = Partition(problem.best, n)
    return PartitionResult(best, int(stats.best_cost), initial, stats)


def dump_partition(p: Partition, cut: int, seed: int) -> str:
    lines = [f"# partition tiers {p.tiers} cut_size {cut} seed {seed}"]
    lines += [f"{v} {t}" for v, t in enumerate(p.tier_of)]
    return "\n".join(lines) + "\n"


def read_partition(text: str) -> tuple:
    """Parse a partition dump; returns ``(Partition, cut_size, seed)``."""
    header = None
    tier_of = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = line[1:].split()
            continue
        v, t = line.split()
        tier_of[int(v)] = int(t)
    if header is None:
        raise ValueError("partition dump has no header")
    meta = dict(zip(header[1::2], header[2::2]))
    tiers = int(meta["tiers"])
    p = Partition([tier_of[v] for v in range(len(tier_of))], tiers)
    return p, int(meta["cut_size"]), int(meta["seed"])
