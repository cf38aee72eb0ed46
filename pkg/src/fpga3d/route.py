"""Negotiated-congestion routing over the 3D routing-resource graph.

Iteration 1 routes every net with plain shortest paths (congestion
ignored). Later iterations rip up the nets that touch an over-used node and
re-route them with node cost

    crit * delay / delay_norm + (1 - crit) * base * hist * present

where ``present = 1 + max(0, usage + 1 - capacity) * pres_fac`` and
``hist`` accumulates over-use from earlier iterations. Searches are A* with
an admissible lower bound, so costs match an uninformed Dijkstra exactly.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .arch import Arch3D
from .errors import DisconnectedRrg, Unroutable, UnroutableAtMax
from .netlist import BlockNetlist
from .place import Placement
from .rrg import CHANX, CHANY, CHANZ, IPIN, SINK, Rrg, build_rrg

logger = logging.getLogger(__name__)


@dataclass
class RouterParams:
    max_iterations: int = 50
    pres_fac_first: float = 0.5
    pres_fac_mult: float = 1.8
    hist_fac: float = 1.0
    max_criticality: float = 0.99
    astar_fac: float = 1.0
    rip_up_all: bool = False
    # give up early when the best over-use has not improved for this many
    # iterations (None: always run to max_iterations)
    stagnation_limit: Optional[int] = None
    tsv_base_cost: float = 1.0


@dataclass
class NetRequest:
    net_id: int
    name: str
    source: int
    sinks: List[int]
    crit: List[float] = field(default_factory=list)


@dataclass
class RouteTree:
    """Route of one net: nodes in insertion order with parent links."""
    nodes: List[int] = field(default_factory=list)
    parent: Dict[int, int] = field(default_factory=dict)
    edge_delay: Dict[int, float] = field(default_factory=dict)

    def add(self, node: int, parent: int, delay: float) -> None:
        self.nodes.append(node)
        self.parent[node] = parent
        self.edge_delay[node] = delay


@dataclass
class RoutingResult:
    width: int
    success: bool
    iterations: int
    overuse: int
    trees: Dict[int, RouteTree]
    requests: List[NetRequest]
    connection_delay: Dict[Tuple[int, int], float]
    overuse_history: List[int] = field(default_factory=list)
    first_iteration_cost: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def used_nodes(self) -> List[int]:
        seen = set()
        for tree in self.trees.values():
            seen.update(tree.nodes)
        return sorted(seen)


class CongestionState:
    def __init__(self, rrg: Rrg):
        n = rrg.num_nodes
        self.rrg = rrg
        self.usage = [0] * n
        self.hist = [1.0] * n
        self.pres_fac = 0.0
        self.cong = list(rrg.base_cost)

    def refresh(self, node: int) -> None:
        over = self.usage[node] + 1 - self.rrg.capacity[node]
        p = 1.0 + over * self.pres_fac if over > 0 else 1.0
        self.cong[node] = self.rrg.base_cost[node] * self.hist[node] * p

    def refresh_all(self) -> None:
        for n in range(self.rrg.num_nodes):
            self.refresh(n)

    def overused(self) -> List[int]:
        cap = self.rrg.capacity
        return [n for n, u in enumerate(self.usage) if u > cap[n]]

    def total_overuse(self) -> int:
        cap = self.rrg.capacity
        return sum(u - cap[n] for n, u in enumerate(self.usage) if u > cap[n])


def node_cost(rrg: Rrg, state: CongestionState, node: int, edge_delay: float,
              crit: float) -> float:
    """Cost of entering ``node`` over an edge with ``edge_delay``."""
    return (crit * (edge_delay + rrg.delay[node]) / rrg.delay_norm
            + (1.0 - crit) * state.cong[node])


def _search(rrg: Rrg, state: CongestionState, tree: RouteTree, target: int, crit: float,
            astar_fac: float):
    """Cheapest path from any tree node to ``target``; returns ``(cost, path)``."""
    kind = rrg.kind
    adj_dst, adj_delay = rrg.adj_dst, rrg.adj_delay
    ndelay, cong = rrg.delay, state.cong
    norm = rrg.delay_norm
    ncrit = 1.0 - crit
    cdel = crit / norm
    tx, ty, tz = rrg.x[target], rrg.y[target], rrg.z[target]
    use_h = rrg.has_geometry and astar_fac > 0
    box = rrg.box
    unit = astar_fac * (ncrit + cdel * rrg.min_wire_delay_per_unit)
    zunit = astar_fac * (ncrit * rrg.min_tsv_base + cdel * rrg.min_tsv_delay)

    g = {}
    prev = {}
    heap = []
    for n in tree.nodes:
        g[n] = 0.0
        heap.append((0.0, n, 0.0))
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    found = False
    while heap:
        _, n, gn = pop(heap)
        if gn > g[n]:
            continue
        if n == target:
            found = True
            break
        for d, ed in zip(adj_dst[n], adj_delay[n]):
            k = kind[d]
            if k == IPIN or k == SINK:
                if k == SINK and d != target:
                    continue
                if k == IPIN and (rrg.x[d] != tx or rrg.y[d] != ty or rrg.z[d] != tz):
                    continue
            c = gn + cdel * (ed + ndelay[d]) + ncrit * cong[d]
            old = g.get(d)
            if old is not None and c >= old:
                continue
            g[d] = c
            prev[d] = (n, ed)
            if use_h and k >= CHANX:
                x0, x1, y0, y1, z0, z1 = box[d]
                dist = (x0 - tx if tx < x0 else (tx - x1 if tx > x1 else 0)) + \
                       (y0 - ty if ty < y0 else (ty - y1 if ty > y1 else 0))
                dz = z0 - tz if tz < z0 else (tz - z1 if tz > z1 else 0)
                push(heap, (c + dist * unit + dz * zunit, d, c))
            else:
                push(heap, (c, d, c))
    if not found:
        return None, None
    path = []
    n = target
    while n not in tree.parent:
        p, ed = prev[n]
        path.append((n, p, ed))
        n = p
    path.reverse()
    return g[target], path


def _connection_delays(rrg: Rrg, req: NetRequest, tree: RouteTree) -> List[float]:
    out = []
    for s in req.sinks:
        total = 0.0
        n = s
        while tree.parent[n] != -1:
            total += tree.edge_delay[n] + rrg.delay[n]
            n = tree.parent[n]
        out.append(total)
    return out


def route_connections(rrg: Rrg, requests: Sequence[NetRequest],
                      params: Optional[RouterParams] = None) -> RoutingResult:
    """Negotiated-congestion routing of pre-resolved source/sink requests."""
    params = params or RouterParams()
    state = CongestionState(rrg)
    trees: Dict[int, RouteTree] = {}
    first_cost: Dict[Tuple[int, int], float] = {}
    history: List[int] = []
    best_over = None
    best_iter = 0
    to_route = list(requests)
    success = False
    it = 0
    overuse = 0

    def rip(req):
        tree = trees.pop(req.net_id, None)
        if tree is None:
            return
        for n in tree.nodes:
            state.usage[n] -= 1
            state.refresh(n)

    def route_one(req, record_costs):
        tree = RouteTree()
        tree.add(req.source, -1, 0.0)
        crits = req.crit or [0.0] * len(req.sinks)
        order = sorted(range(len(req.sinks)), key=lambda i: (-crits[i], i))
        for i in order:
            sink = req.sinks[i]
            if sink in tree.parent:
                if record_costs:
                    first_cost[(req.net_id, i)] = 0.0
                continue
            crit = min(max(crits[i], 0.0), params.max_criticality)
            cost, path = _search(rrg, state, tree, sink, crit, params.astar_fac)
            if path is None:
                raise DisconnectedRrg(req.name, sink)
            if record_costs:
                first_cost[(req.net_id, i)] = cost
            for n, p, ed in path:
                tree.add(n, p, ed)
        for n in tree.nodes:
            state.usage[n] += 1
            state.refresh(n)
        trees[req.net_id] = tree

    by_id = {r.net_id: r for r in requests}
    for it in range(1, params.max_iterations + 1):
        if it == 2:
            state.pres_fac = params.pres_fac_first
            state.refresh_all()
        elif it > 2:
            state.pres_fac *= params.pres_fac_mult
            state.refresh_all()
        for req in to_route:
            rip(req)
            route_one(req, it == 1)
        over_nodes = state.overused()
        overuse = sum(state.usage[n] - rrg.capacity[n] for n in over_nodes)
        history.append(overuse)
        logger.debug("iteration %d: %d nets routed, overuse %d", it, len(to_route), overuse)
        if overuse == 0:
            success = True
            break
        for n in over_nodes:
            state.hist[n] += params.hist_fac * (state.usage[n] - rrg.capacity[n])
        if best_over is None or overuse < best_over:
            best_over, best_iter = overuse, it
        elif params.stagnation_limit and it - best_iter >= params.stagnation_limit:
            break
        if params.rip_up_all:
            to_route = list(requests)
        else:
            bad = set(over_nodes)
            to_route = [by_id[nid] for nid in sorted(trees)
                        if any(n in bad for n in trees[nid].nodes)]

    delays = {}
    for req in requests:
        for i, dly in enumerate(_connection_delays(rrg, req, trees[req.net_id])):
            delays[(req.net_id, i)] = dly
    return RoutingResult(rrg.width, success, it, overuse, trees, list(requests), delays,
                         history, first_cost)


def net_requests(rrg: Rrg, pl: Placement, blocks: BlockNetlist,
                 criticalities: Optional[Mapping[Tuple[int, int], float]] = None
                 ) -> List[NetRequest]:
    crit = criticalities or {}
    reqs = []
    for net in blocks.routed_nets():
        src_tile = rrg.tiles[pl.location_of[net.driver[0]]]
        sinks = [rrg.tiles[pl.location_of[b]].sink for b, _ in net.sinks]
        crits = [crit.get((net.id, i), 0.0) for i in range(len(net.sinks))]
        reqs.append(NetRequest(net.id, net.name, src_tile.source, sinks, crits))
    return reqs


def route_nets(rrg: Rrg, pl: Placement, blocks: BlockNetlist,
               params: Optional[RouterParams] = None,
               criticalities: Optional[Mapping[Tuple[int, int], float]] = None
               ) -> RoutingResult:
    """Route every non-clock net of ``blocks`` placed by ``pl`` on ``rrg``.

    Nets are routed in net-id order; each net's sinks in decreasing
    criticality. Raises :class:`Unroutable` (carrying the partial result)
    when over-use remains after ``params.max_iterations``.
    """
    res = route_connections(rrg, net_requests(rrg, pl, blocks, criticalities), params)
    if not res.success:
        raise Unroutable(res.iterations, res.overuse, res)
    return res


@dataclass
class WminResult:
    w_min: int
    result: RoutingResult
    probes: Dict[int, bool]


def find_wmin(arch: Arch3D, pl: Placement, blocks: BlockNetlist,
              params: Optional[RouterParams] = None,
              criticalities: Optional[Mapping[Tuple[int, int], float]] = None,
              w_max: int = 128) -> WminResult:
    """Smallest even channel width at which routing succeeds.

    Widths are probed upward by doubling from 2 until one routes, then the
    bracket is bisected over even widths. The returned width ``w`` routed,
    ``w - 2`` was probed and failed (unless ``w == 2``), and ``w + 2`` is
    checked as well; if it fails the search resumes above it.
    """
    params = params or RouterParams()
    arch = arch.with_grid(pl.grid_x, pl.grid_y).with_tiers(pl.tiers)
    probes: Dict[int, bool] = {}
    results: Dict[int, RoutingResult] = {}

    def probe(w):
        if w not in probes:
            rrg = build_rrg(arch, w, tsv_base_cost=params.tsv_base_cost)
            reqs = net_requests(rrg, pl, blocks, criticalities)
            res = route_connections(rrg, reqs, params)
            probes[w] = res.success
            results[w] = res
            logger.info("W=%d: %s after %d iterations (overuse %d)", w,
                        "routed" if res.success else "failed", res.iterations, res.overuse)
        return probes[w]

    fail = 0
    while True:
        # grow until a routable width is found
        step = 2
        w = fail + 2
        while not probe(w):
            fail = w
            if w >= w_max:
                raise UnroutableAtMax(w_max)
            step *= 2
            w = min(fail + step, w_max)
        ok = w
        while ok - fail > 2:
            mid = fail + ((ok - fail) // 4) * 2
            if probe(mid):
                ok = mid
            else:
                fail = mid
        if probe(ok + 2):
            return WminResult(ok, results[ok], dict(probes))
        fail = ok + 2
        if fail >= w_max:
            raise UnroutableAtMax(w_max)


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def planar_wirelength(rrg: Rrg, result: RoutingResult) -> int:
    total = 0
    for tree in result.trees.values():
        for n in tree.nodes:
            if rrg.kind[n] in (CHANX, CHANY):
                total += rrg.length[n]
    return total


def tsv_nodes_used(rrg: Rrg, result: RoutingResult) -> List[int]:
    return [n for n in result.used_nodes() if rrg.kind[n] == CHANZ]


def dump_routing(rrg: Rrg, result: RoutingResult) -> str:
    """Text dump: header, then per net its tree as ``index parent descriptor``."""
    wl = planar_wirelength(rrg, result)
    lines = [f"# routing w {result.width} iterations {result.iterations} "
             f"overuse {result.overuse} wirelength {wl} success {int(result.success)}"]
    for req in result.requests:
        tree = result.trees[req.net_id]
        index = {n: i for i, n in enumerate(tree.nodes)}
        lines.append(f"net {req.net_id} {req.name}")
        for i, n in enumerate(tree.nodes):
            p = tree.parent[n]
            lines.append(f"  {i} {index[p] if p != -1 else -1} {rrg.descriptor(n)}")
    return "\n".join(lines) + "\n"


def routing_summary(rrg: Rrg, result: RoutingResult) -> dict:
    tsv = tsv_nodes_used(rrg, result)
    nets = []
    for req in result.requests:
        nets.append({
            "id": req.net_id,
            "name": req.name,
            "delays": [result.connection_delay[(req.net_id, i)] for i in range(len(req.sinks))],
            "wire_z": sum(1 for n in result.trees[req.net_id].nodes if rrg.kind[n] == CHANZ),
        })
    return {
        "w": result.width,
        "success": result.success,
        "iterations": result.iterations,
        "overuse": result.overuse,
        "wirelength": planar_wirelength(rrg, result),
        "tsv_used": len(tsv),
        "tsv_per_boundary": _tsv_per_boundary(rrg, tsv),
        "wirelength_per_tier": _wirelength_per_tier(rrg, result),
        "nets": nets,
    }


def _tier_count(rrg: Rrg) -> int:
    return 1 + max(rrg.z, default=0)


def _wirelength_per_tier(rrg: Rrg, result: RoutingResult) -> List[int]:
    out = [0] * _tier_count(rrg)
    for tree in result.trees.values():
        for n in tree.nodes:
            if rrg.kind[n] in (CHANX, CHANY):
                out[rrg.z[n]] += rrg.length[n]
    return out


def _tsv_per_boundary(rrg: Rrg, tsv: List[int]) -> List[int]:
    out = [0] * max(_tier_count(rrg) - 1, 0)
    for n in tsv:
        out[rrg.z[n]] += 1
    return out


def write_routing_summary(summary: dict) -> str:
    return json.dumps(summary, indent=1, sort_keys=True) + "\n"
