"""Static timing analysis on the packed, placed and routed design.

Single clock domain. Latch outputs launch paths (clk-to-q) and latch inputs
capture them (setup added). Primary inputs launch at time zero and primary
outputs are endpoints. Connections leaving an input pad carry no delay;
every other inter-block connection carries its routed delay, or an HPWL
based estimate before routing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Dict, List, Mapping, Optional, Tuple

from .arch import Arch3D, DelayModel
from .errors import CombinationalLoop
from .netlist import CLB, PAD_IN, BlockNetlist
from .place import Placement, net_hpwl3d

Connection = Tuple[int, int]  # (net id, sink index)


@dataclass
class TimingGraph:
    names: List[str] = field(default_factory=list)
    edges: List[Tuple[int, int, float]] = field(default_factory=list)
    # timing edge index for every routed connection
    connection_edge: Dict[Connection, int] = field(default_factory=dict)
    _index: Dict[str, int] = field(default_factory=dict, repr=False)

    def node(self, name: str) -> int:
        n = self._index.get(name)
        if n is None:
            n = self._index[name] = len(self.names)
            self.names.append(name)
        return n

    def add_edge(self, u: int, v: int, delay: float) -> int:
        if delay < 0:
            raise ValueError("timing edge delay must be nonnegative")
        self.edges.append((u, v, delay))
        return len(self.edges) - 1

    @classmethod
    def from_edges(cls, n: int, edges) -> "TimingGraph":
        tg = cls()
        for i in range(n):
            tg.node(str(i))
        for u, v, d in edges:
            tg.add_edge(u, v, d)
        return tg

    @property
    def num_nodes(self) -> int:
        return len(self.names)


@dataclass
class PathReport:
    cpd: float
    path: List[int]
    arrival: List[float]
    required: List[float]
    edge_slack: List[float]
    edge_criticality: List[float]
    names: List[str] = field(default_factory=list)

    def path_names(self) -> List[str]:
        return [self.names[n] for n in self.path]


def _criticality(slack: float, cpd: float) -> float:
    if cpd <= 0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - slack / cpd))


def critical_path(tg: TimingGraph) -> PathReport:
    """Longest-path analysis: arrival, required time, slack and criticality."""
    n = tg.num_nodes
    succ: List[List[int]] = [[] for _ in range(n)]
    pred: List[List[int]] = [[] for _ in range(n)]
    for k, (u, v, _) in enumerate(tg.edges):
        succ[u].append(k)
        pred[v].append(k)
    order = _topo_order(tg, pred)

    arrival = [0.0] * n
    best_in: List[Optional[int]] = [None] * n
    for v in order:
        for k in pred[v]:
            u, _, d = tg.edges[k]
            a = arrival[u] + d
            if best_in[v] is None or a > arrival[v]:
                arrival[v] = a
                best_in[v] = k
    sinks = [v for v in range(n) if not succ[v]]
    cpd = max((arrival[v] for v in sinks), default=0.0)

    required = [cpd] * n
    for u in reversed(order):
        for k in succ[u]:
            _, v, d = tg.edges[k]
            r = required[v] - d
            if r < required[u]:
                required[u] = r
    slack = []
    crit = []
    # rounding noise on critical edges is snapped to exactly zero
    eps = 1e-9 * cpd
    for u, v, d in tg.edges:
        s = required[v] - arrival[u] - d
        if s <= eps:
            s = 0.0
        slack.append(s)
        crit.append(_criticality(s, cpd))

    path = []
    if sinks:
        end = max(sinks, key=lambda v: (arrival[v], -v))
        path = [end]
        while best_in[path[-1]] is not None:
            path.append(tg.edges[best_in[path[-1]]][0])
        path.reverse()
    return PathReport(cpd, path, arrival, required, slack, crit, list(tg.names))


def _topo_order(tg: TimingGraph, pred) -> List[int]:
    ts = TopologicalSorter()
    for v in range(tg.num_nodes):
        ts.add(v, *(tg.edges[k][0] for k in pred[v]))
    try:
        return list(ts.static_order())
    except CycleError as exc:
        cycle = exc.args[1]
        raise CombinationalLoop([tg.names[v] for v in cycle]) from None


def build_timing_graph(blocks: BlockNetlist, delays: DelayModel,
                       connection_delay: Mapping[Connection, float],
                       pad_input_delay: bool = False) -> TimingGraph:
    """Timing graph of the packed netlist.

    ``connection_delay[(net id, sink index)]`` gives each inter-block
    connection's delay; missing entries count as zero. Connections driven
    by an input pad are forced to zero unless ``pad_input_delay`` is set.
    """
    nl = blocks.netlist
    if nl is None:
        raise ValueError("block netlist has no source netlist attached")
    tg = TimingGraph()
    owner: Dict[str, int] = {}
    for blk in blocks.blocks:
        if blk.kind != CLB:
            continue
        for prim in blk.primitives:
            owner[prim] = blk.id

    # signal sources
    for s in nl.primary_inputs:
        tg.node(f"pi:{s}")
    for latch in nl.latches:
        launch = tg.node(f"launch:{latch.output}")
        tg.add_edge(launch, tg.node(f"sig:{latch.output}"), delays.t_ff_clk_to_q)

    def driver_node(s: str) -> int:
        return tg.node(f"pi:{s}") if s in pi_set else tg.node(f"sig:{s}")

    pi_set = set(nl.primary_inputs)
    produced_in = {}
    for lut in nl.luts:
        produced_in[lut.output] = owner[f"lut:{lut.output}"]
    for latch in nl.latches:
        produced_in[latch.output] = owner[f"latch:{latch.output}"]
    for s in nl.primary_inputs:
        produced_in[s] = next(b.id for b in blocks.blocks
                              if b.kind == PAD_IN and b.outputs == [s])

    # inter-block connections: driver signal -> block input pin
    pin_node: Dict[Tuple[int, str], int] = {}
    for net in blocks.nets:
        drv_blk = net.driver[0]
        src = driver_node(net.name)
        from_pad = blocks.blocks[drv_blk].kind == PAD_IN
        for i, (b, pin) in enumerate(net.sinks):
            dst = tg.node(f"in:{blocks.blocks[b].name}:{net.name}")
            pin_node[(b, net.name)] = dst
            d = connection_delay.get((net.id, i), 0.0)
            if from_pad and not pad_input_delay:
                d = 0.0
            tg.connection_edge[(net.id, i)] = tg.add_edge(src, dst, d)

    def input_of(blk_id: int, s: str) -> int:
        if produced_in.get(s) == blk_id:
            return driver_node(s)
        return pin_node[(blk_id, s)]

    for lut in nl.luts:
        b = owner[f"lut:{lut.output}"]
        out = tg.node(f"sig:{lut.output}")
        if not lut.inputs:
            continue
        for s in dict.fromkeys(lut.inputs):
            tg.add_edge(input_of(b, s), out, delays.t_lut)
    for latch in nl.latches:
        b = owner[f"latch:{latch.output}"]
        cap = tg.node(f"capture:{latch.output}")
        tg.add_edge(input_of(b, latch.input), cap, delays.t_ff_setup)
    for blk in blocks.blocks:
        if blk.kind == CLB or blk.kind == PAD_IN:
            continue
        s = blk.inputs[0]
        endpoint = tg.node(f"po:{s}")
        src = pin_node.get((blk.id, s))
        if src is None:
            # primary output driven directly by a primary input on the same pad
            src = driver_node(s)
        tg.add_edge(src, endpoint, 0.0)
    return tg


def estimated_connection_delays(blocks: BlockNetlist, pl: Placement,
                                arch: Arch3D) -> Dict[Connection, float]:
    """Pre-route estimate: each connection of a net gets ``HPWL3D * t_seg(1)``."""
    unit = arch.delays.seg(1)
    out = {}
    for net in blocks.routed_nets():
        d = net_hpwl3d(net, pl, arch) * unit
        for i in range(len(net.sinks)):
            out[(net.id, i)] = d
    return out


def connection_criticalities(tg: TimingGraph, report: PathReport) -> Dict[Connection, float]:
    return {c: report.edge_criticality[k] for c, k in tg.connection_edge.items()}


def timing_summary(tg: TimingGraph, report: PathReport) -> dict:
    return {
        "cpd": report.cpd,
        "path": report.path,
        "path_names": report.path_names(),
        "connections": [
            {"net": net, "sink": i, "delay": tg.edges[k][2],
             "slack": report.edge_slack[k], "criticality": report.edge_criticality[k]}
            for (net, i), k in sorted(tg.connection_edge.items())
        ],
    }


def timing_report_text(tg: TimingGraph, report: PathReport) -> str:
    lines = [f"# timing cpd {report.cpd * 1e9:.6f} ns", "critical path:"]
    for n in report.path:
        lines.append(f"  {report.arrival[n] * 1e9:10.6f} ns  {tg.names[n]}")
    return "\n".join(lines) + "\n"


def write_timing_summary(summary: dict) -> str:
    return json.dumps(summary, indent=1, sort_keys=True) + "\n"
