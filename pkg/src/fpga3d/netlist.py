"""BLIF ingestion, BLE/CLB packing and circuit-graph construction.

Only the technology-mapped subset of BLIF is accepted: ``.model``,
``.inputs``, ``.outputs``, ``.names``, ``.latch`` and ``.end``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (DanglingSignal, DuplicateDriver, LutTooWide,
                     MalformedTruthTableRow, UnknownDirective, BlifError)

PAD_IN = "pad_in"
PAD_OUT = "pad_out"
CLB = "clb"

# sink pin index used for latch clock connections
CLOCK_PIN = -1

_LATCH_TYPES = {"fe", "re", "ah", "al", "as"}


@dataclass(frozen=True)
class Lut:
    output: str
    inputs: Tuple[str, ...]
    rows: Tuple[str, ...]


@dataclass(frozen=True)
class Latch:
    input: str
    output: str
    clock: Optional[str] = None
    trigger: Optional[str] = None
    init: Optional[str] = None


@dataclass
class Netlist:
    model_name: str
    primary_inputs: List[str]
    primary_outputs: List[str]
    luts: List[Lut] = field(default_factory=list)
    latches: List[Latch] = field(default_factory=list)

    def drivers(self) -> Dict[str, Tuple[str, int]]:
        """Map each driven signal to ``(source kind, index)``."""
        drv = {}
        for i, s in enumerate(self.primary_inputs):
            drv[s] = ("pi", i)
        for i, lut in enumerate(self.luts):
            drv[lut.output] = ("lut", i)
        for i, latch in enumerate(self.latches):
            drv[latch.output] = ("latch", i)
        return drv

    @property
    def clock_signals(self) -> List[str]:
        seen = []
        for latch in self.latches:
            if latch.clock is not None and latch.clock not in seen:
                seen.append(latch.clock)
        return seen


def _logical_lines(text: str):
    """Yield ``(line_number, tokens)`` with comments and continuations resolved."""
    pending: List[str] = []
    start = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        cont = line.endswith("\\")
        if cont:
            line = line[:-1]
        if start is None:
            start = lineno
        pending.append(line)
        if cont:
            continue
        tokens = " ".join(pending).split()
        if tokens:
            yield start, tokens
        pending = []
        start = None
    if pending:
        tokens = " ".join(pending).split()
        if tokens:
            yield start, tokens


def _check_row(row: List[str], n_inputs: int, lineno: int) -> str:
    if n_inputs == 0:
        if len(row) != 1 or row[0] not in ("0", "1"):
            raise MalformedTruthTableRow(f"bad constant row {' '.join(row)!r}", lineno)
    else:
        if (len(row) != 2 or len(row[0]) != n_inputs
                or any(c not in "01-" for c in row[0]) or row[1] not in ("0", "1")):
            raise MalformedTruthTableRow(
                f"bad row {' '.join(row)!r} for {n_inputs}-input LUT", lineno)
    return " ".join(row)


def parse_blif(text: str, lut_size: int = 6) -> Netlist:
    """Parse a technology-mapped BLIF model into a :class:`Netlist`.

    Raises :class:`UnknownDirective`, :class:`DuplicateDriver`,
    :class:`LutTooWide`, :class:`DanglingSignal` or
    :class:`MalformedTruthTableRow`.
    """
    model = None
    pis: List[str] = []
    pos: List[str] = []
    luts: List[Lut] = []
    latches: List[Latch] = []
    driven: Dict[str, int] = {}

    cur = None  # (output, inputs, rows, lineno) of the open .names block

    def close_names():
        nonlocal cur
        if cur is not None:
            out, ins, rows, _ = cur
            luts.append(Lut(out, tuple(ins), tuple(rows)))
            cur = None

    def drive(sig, lineno):
        if sig in driven:
            raise DuplicateDriver(
                f"signal {sig!r} already driven (line {driven[sig]})", lineno)
        driven[sig] = lineno

    for lineno, tokens in _logical_lines(text):
        head = tokens[0]
        if not head.startswith("."):
            if cur is None:
                raise MalformedTruthTableRow(
                    f"truth-table row outside .names: {' '.join(tokens)!r}", lineno)
            cur[2].append(_check_row(tokens, len(cur[1]), lineno))
            continue
        close_names()
        if head == ".model":
            if model is not None:
                # only the first model is read
                break
            model = tokens[1] if len(tokens) > 1 else "top"
        elif head == ".inputs":
            for s in tokens[1:]:
                drive(s, lineno)
                pis.append(s)
        elif head == ".outputs":
            pos.extend(tokens[1:])
        elif head == ".names":
            if len(tokens) < 2:
                raise BlifError(".names without output signal", lineno)
            *ins, out = tokens[1:]
            if len(ins) > lut_size:
                raise LutTooWide(out, len(ins), lut_size, lineno)
            drive(out, lineno)
            cur = (out, ins, [], lineno)
        elif head == ".latch":
            args = tokens[1:]
            if len(args) < 2 or len(args) > 5:
                raise BlifError(f"malformed .latch: {' '.join(tokens)!r}", lineno)
            d, q = args[0], args[1]
            rest = args[2:]
            trigger = clock = init = None
            if len(rest) >= 2:
                trigger, clock = rest[0], rest[1]
                if trigger not in _LATCH_TYPES:
                    raise BlifError(f"unknown latch type {trigger!r}", lineno)
                if clock == "NIL":
                    clock = None
                rest = rest[2:]
            if rest:
                init = rest[0]
            drive(q, lineno)
            latches.append(Latch(d, q, clock, trigger, init))
        elif head == ".end":
            break
        else:
            raise UnknownDirective(f"unsupported directive {head!r}", lineno)
    close_names()
    if model is None:
        raise BlifError("no .model found")

    used = []
    for lut in luts:
        used.extend(lut.inputs)
    for latch in latches:
        used.append(latch.input)
        if latch.clock is not None:
            used.append(latch.clock)
    used.extend(pos)
    for s in used:
        if s not in driven:
            raise DanglingSignal(f"signal {s!r} is used but never driven")
    return Netlist(model, pis, pos, luts, latches)


def emit_blif(netlist: Netlist) -> str:
    """Write a :class:`Netlist` back to BLIF text."""
    out = [f".model {netlist.model_name}"]
    if netlist.primary_inputs:
        out.append(".inputs " + " ".join(netlist.primary_inputs))
    if netlist.primary_outputs:
        out.append(".outputs " + " ".join(netlist.primary_outputs))
    for latch in netlist.latches:
        parts = [".latch", latch.input, latch.output]
        if latch.trigger is not None or latch.clock is not None:
            parts += [latch.trigger or "re", latch.clock or "NIL"]
        if latch.init is not None:
            parts.append(latch.init)
        out.append(" ".join(parts))
    for lut in netlist.luts:
        out.append(" ".join([".names", *lut.inputs, lut.output]))
        out.extend(lut.rows)
    out.append(".end")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------

@dataclass
class LogicBlock:
    id: int
    name: str
    kind: str
    primitives: List[str]
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    clocks: List[str] = field(default_factory=list)


@dataclass
class Net:
    id: int
    name: str
    driver: Tuple[int, int]
    sinks: List[Tuple[int, int]]
    clock_sinks: List[int] = field(default_factory=list)

    @property
    def is_clock(self) -> bool:
        return bool(self.clock_sinks) and not self.sinks

    def terminals(self) -> List[int]:
        """Distinct blocks on the routed (non-clock) part of the net."""
        seen = [self.driver[0]]
        for b, _ in self.sinks:
            if b not in seen:
                seen.append(b)
        return seen


@dataclass
class BlockNetlist:
    blocks: List[LogicBlock]
    nets: List[Net]
    netlist: Optional[Netlist] = None

    def clb_ids(self) -> List[int]:
        return [b.id for b in self.blocks if b.kind == CLB]

    def nets_of_block(self) -> List[List[int]]:
        """For every block, the ids of routed nets touching it."""
        per = [[] for _ in self.blocks]
        for net in self.nets:
            if not net.sinks:
                continue
            for b in net.terminals():
                per[b].append(net.id)
        return per

    def routed_nets(self) -> List[Net]:
        return [n for n in self.nets if n.sinks]


@dataclass
class _Ble:
    lut: Optional[int]
    latch: Optional[int]
    consumed: List[str]
    produced: List[str]
    clock: Optional[str]


def _form_bles(nl: Netlist) -> List[_Ble]:
    consumers = defaultdict(list)
    for i, lut in enumerate(nl.luts):
        for s in lut.inputs:
            consumers[s].append(("lut", i))
    for i, latch in enumerate(nl.latches):
        consumers[latch.input].append(("latch", i))
    clocks = set(nl.clock_signals)
    po = set(nl.primary_outputs)

    paired_latch = {}
    for i, lut in enumerate(nl.luts):
        c = consumers.get(lut.output, [])
        if (len(c) == 1 and c[0][0] == "latch" and lut.output not in po
                and lut.output not in clocks and c[0][1] not in paired_latch.values()):
            paired_latch[i] = c[0][1]

    bles = []
    for i, lut in enumerate(nl.luts):
        j = paired_latch.get(i)
        consumed = list(dict.fromkeys(lut.inputs))
        produced = [lut.output]
        clock = None
        if j is not None:
            latch = nl.latches[j]
            produced.append(latch.output)
            clock = latch.clock
        bles.append(_Ble(i, j, consumed, produced, clock))
    used = set(paired_latch.values())
    for j, latch in enumerate(nl.latches):
        if j not in used:
            bles.append(_Ble(None, j, [latch.input], [latch.output], latch.clock))
    return bles


def _ble_signals(ble: _Ble) -> set:
    return set(ble.consumed) | set(ble.produced)


def _cluster(bles: List[_Ble], cluster_size: int) -> List[List[int]]:
    if cluster_size <= 1:
        return [[i] for i in range(len(bles))]
    sigs = [_ble_signals(b) for b in bles]
    users = defaultdict(list)
    for i, s in enumerate(sigs):
        for x in s:
            users[x].append(i)
    free = set(range(len(bles)))
    clusters = []
    for seed in range(len(bles)):
        if seed not in free:
            continue
        free.discard(seed)
        members = [seed]
        cluster_sigs = set(sigs[seed])
        while len(members) < cluster_size and free:
            score = defaultdict(int)
            for x in cluster_sigs:
                for u in users[x]:
                    if u in free:
                        score[u] += 1
            if score:
                best = min(score, key=lambda u: (-score[u], u))
            else:
                best = min(free)
            free.discard(best)
            members.append(best)
            cluster_sigs |= sigs[best]
        clusters.append(members)
    return clusters


def pack_blocks(netlist: Netlist, cluster_size: int = 1) -> BlockNetlist:
    """Pair LUTs with the latch they feed into BLEs and cluster BLEs into CLBs.

    A LUT and a latch form one BLE when the latch is the LUT's only
    consumer. BLEs are grouped greedily: each CLB is seeded with the first
    unclustered BLE and filled with the BLE sharing the most signals with it.
    """
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    nl = netlist
    bles = _form_bles(nl)
    clusters = _cluster(bles, cluster_size)
    po = set(nl.primary_outputs)

    blocks: List[LogicBlock] = []
    for s in nl.primary_inputs:
        blocks.append(LogicBlock(len(blocks), f"in:{s}", PAD_IN, [f"in:{s}"],
                                 outputs=[s]))
    clb_members = []
    for members in clusters:
        prims = []
        for i in members:
            b = bles[i]
            if b.lut is not None:
                prims.append(f"lut:{nl.luts[b.lut].output}")
            if b.latch is not None:
                prims.append(f"latch:{nl.latches[b.latch].output}")
        blk = LogicBlock(len(blocks), f"clb{len(clb_members)}", CLB, prims)
        blocks.append(blk)
        clb_members.append(members)
    for s in nl.primary_outputs:
        blocks.append(LogicBlock(len(blocks), f"out:{s}", PAD_OUT, [f"out:{s}"],
                                 inputs=[s]))

    first_clb = len(nl.primary_inputs)
    produced_by = {}
    for k, members in enumerate(clb_members):
        blk = blocks[first_clb + k]
        produced, consumed = [], []
        for i in members:
            b = bles[i]
            produced.extend(b.produced)
            consumed.extend(b.consumed)
            if b.clock is not None and b.clock not in blk.clocks:
                blk.clocks.append(b.clock)
        pset = set(produced)
        blk.inputs = [s for s in dict.fromkeys(consumed) if s not in pset]
        produced_by[blk.id] = produced

    external_use = defaultdict(set)
    for blk in blocks:
        for s in blk.inputs:
            external_use[s].add(blk.id)
    for bid, produced in produced_by.items():
        blocks[bid].outputs = [s for s in produced if s in po or external_use[s] - {bid}]

    clock_users = defaultdict(list)
    for blk in blocks:
        for c in blk.clocks:
            clock_users[c].append(blk.id)

    input_pin = {}
    for blk in blocks:
        for p, s in enumerate(blk.inputs):
            input_pin[(blk.id, s)] = p

    nets: List[Net] = []
    for blk in blocks:
        for pin, s in enumerate(blk.outputs):
            sinks = sorted((b, input_pin[(b, s)]) for b in external_use[s] if b != blk.id)
            csinks = clock_users.get(s, [])
            if not sinks and not csinks:
                continue
            nets.append(Net(len(nets), s, (blk.id, pin), sinks, list(csinks)))
    return BlockNetlist(blocks, nets, nl)


def dump_blocks(bn: BlockNetlist) -> str:
    """Line-oriented dump: ``id kind primitive-list`` per block, then nets."""
    lines = []
    for b in bn.blocks:
        lines.append(f"{b.id} {b.kind} {','.join(b.primitives)}")
    for n in bn.nets:
        sinks = " ".join(f"{b}:{p}" for b, p in n.sinks)
        clk = " ".join(f"{b}:clk" for b in n.clock_sinks)
        lines.append(f"net {n.id} {n.name} {n.driver[0]}:{n.driver[1]} -> {sinks} {clk}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# circuit graph
# ---------------------------------------------------------------------------

@dataclass
class CircuitGraph:
    vertex_count: int
    edges: List[Tuple[int, int, int]]
    adjacency: List[Dict[int, int]]

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Tuple[int, int, int]]) -> "CircuitGraph":
        adj: List[Dict[int, int]] = [dict() for _ in range(n)]
        for u, v, m in edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            if m < 1:
                raise ValueError("multiplicity must be >= 1")
            adj[u][v] = adj[u].get(v, 0) + m
            adj[v][u] = adj[v].get(u, 0) + m
        merged = sorted((u, v, m) for u in range(n) for v, m in adj[u].items() if u < v)
        return cls(n, merged, adj)

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)

    def weighted_degree(self, v: int) -> int:
        return sum(self.adjacency[v].values())

    def multiplicity(self, u: int, v: int) -> int:
        return self.adjacency[u].get(v, 0)


def build_graph(blocks: BlockNetlist) -> CircuitGraph:
    """Star-expand every net (driver to each sink) into a weighted graph.

    Clock connections and driver-to-self connections contribute no edge.
    """
    pairs = defaultdict(int)
    for net in blocks.nets:
        d = net.driver[0]
        for b, _ in net.sinks:
            if b == d:
                continue
            key = (d, b) if d < b else (b, d)
            pairs[key] += 1
    return CircuitGraph.from_edges(len(blocks.blocks), [(u, v, m) for (u, v), m in pairs.items()])
