"""Routing-resource graph for the mixed 2D/3D switch-box fabric.

Coordinates follow the usual island-style convention. CLB tiles occupy
``1..X x 1..Y``, pad tiles the perimeter. Horizontal channel ``chanx(x, y)``
runs between tile rows ``y`` and ``y+1`` (``x`` in ``1..X``, ``y`` in
``0..Y``); vertical channel ``chany(x, y)`` runs between tile columns ``x``
and ``x+1``. Switch box ``(i, j)`` sits where ``chanx`` row ``j`` meets
``chany`` column ``i``, so the switch-box grid is ``(X+1) x (Y+1)``.

Wire segments of length 2 and 4 are single nodes spanning several tiles,
staggered per track, with switch-box access only at their two ends. Switch
boxes use the subset pattern (track ``t`` meets track ``t`` on the other
three sides, F_s = 3). At 3D switch-box sites every adjacent tier pair gets
``ceil(r_z * W)`` TSV nodes; TSV ``k`` meets the wire ends of tracks
``t = k (mod n_tsv)`` on both tiers and the TSV above/below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .arch import Arch3D, is_3d_sb, track_allocation, tsv_tracks
from .errors import InvalidWidth, InvariantViolation

SOURCE, SINK, OPIN, IPIN, CHANX, CHANY, CHANZ = range(7)
KIND_NAMES = ("source", "sink", "opin", "ipin", "wire_x", "wire_y", "wire_z")
WIRE_KINDS = (CHANX, CHANY, CHANZ)


@dataclass
class Tile:
    source: int
    sink: int
    opins: List[int]
    ipins: List[int]


@dataclass
class Rrg:
    """Directed routing-resource graph stored as flat per-node lists."""
    kind: List[int] = field(default_factory=list)
    x: List[int] = field(default_factory=list)
    y: List[int] = field(default_factory=list)
    z: List[int] = field(default_factory=list)
    track: List[int] = field(default_factory=list)
    length: List[int] = field(default_factory=list)
    capacity: List[int] = field(default_factory=list)
    base_cost: List[float] = field(default_factory=list)
    delay: List[float] = field(default_factory=list)
    # reach box used by the A* lower bound: tiles x0..x1, y0..y1, tiers z0..z1
    box: List[Tuple[int, int, int, int, int, int]] = field(default_factory=list)
    adj_dst: List[List[int]] = field(default_factory=list)
    adj_delay: List[List[float]] = field(default_factory=list)
    tiles: Dict[Tuple[int, int, int], Tile] = field(default_factory=dict)
    width: int = 0
    tsv_per_site: int = 0
    has_geometry: bool = False
    # lower-bound constants filled by build_rrg
    min_wire_delay_per_unit: float = 0.0
    min_tsv_delay: float = 0.0
    min_tsv_base: float = 0.0
    delay_norm: float = 1.0

    @property
    def num_nodes(self) -> int:
        return len(self.kind)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj_dst)

    def add_node(self, kind, x=0, y=0, z=0, track=0, length=0, capacity=1,
                 base_cost=1.0, delay=0.0, box=None) -> int:
        n = len(self.kind)
        self.kind.append(kind)
        self.x.append(x)
        self.y.append(y)
        self.z.append(z)
        self.track.append(track)
        self.length.append(length)
        self.capacity.append(capacity)
        self.base_cost.append(base_cost)
        self.delay.append(delay)
        self.box.append(box if box is not None else (x, x, y, y, z, z))
        self.adj_dst.append([])
        self.adj_delay.append([])
        return n

    def add_edge(self, src: int, dst: int, delay: float = 0.0) -> None:
        self.adj_dst[src].append(dst)
        self.adj_delay[src].append(delay)

    def add_bidir(self, a: int, b: int, delay: float) -> None:
        self.add_edge(a, b, delay)
        self.add_edge(b, a, delay)

    def descriptor(self, n: int) -> str:
        """``kind x y z track length`` for node ``n``."""
        return (f"{KIND_NAMES[self.kind[n]]} {self.x[n]} {self.y[n]} {self.z[n]} "
                f"{self.track[n]} {self.length[n]}")

    def count(self, kind: int) -> int:
        return sum(1 for k in self.kind if k == kind)


def _segments(n_pos: int, length: int, offset: int) -> List[Tuple[int, int]]:
    """Split channel positions ``1..n_pos`` into staggered segments."""
    segs = []
    start = 1
    for p in range(2, n_pos + 1):
        if (p - 1 - offset) % length == 0:
            segs.append((start, p - 1))
            start = p
    if n_pos >= 1:
        segs.append((start, n_pos))
    return segs


def _track_lengths(arch: Arch3D, w: int) -> List[Tuple[int, int]]:
    """``(nominal length, stagger offset)`` for every track index."""
    alloc = track_allocation(arch, w)
    out = []
    for L in (1, 2, 4):
        for g in range(alloc[L]):
            out.append((L, g % L))
    return out


def build_rrg(arch: Arch3D, w: int, tsv_base_cost: float = 1.0,
              pin_base_cost: float = 1.0) -> Rrg:
    """Build the routing-resource graph of the whole stack at channel width ``w``."""
    if w < 2 or w % 2:
        raise InvalidWidth(f"channel width must be even and >= 2, got {w}")
    if arch.fs != 3:
        raise InvariantViolation("fs", "the subset switch box realises F_s = 3 only")
    X, Y, n_tiers = arch.grid_x, arch.grid_y, arch.tiers
    d = arch.delays
    g = Rrg(width=w, has_geometry=True)
    tracks = _track_lengths(arch, w)
    n_tsv = tsv_tracks(arch, w) if n_tiers > 1 else 0
    g.tsv_per_site = n_tsv
    e_min = min(d.t_sb_switch, d.t_cb)
    g.min_wire_delay_per_unit = min((d.seg(L) + e_min) / L for L in {L for L, _ in tracks})
    g.min_tsv_delay = d.t_sb_switch + d.t_tsv
    g.min_tsv_base = tsv_base_cost
    g.delay_norm = d.seg(1) if d.seg(1) > 0 else 1.0

    # chanx[z][y][t][x-1] / chany[z][x][t][y-1] -> node id covering that position
    chanx = [[[None] * w for _ in range(Y + 1)] for _ in range(n_tiers)]
    chany = [[[None] * w for _ in range(X + 1)] for _ in range(n_tiers)]

    for z in range(n_tiers):
        # tiles
        for x in range(0, X + 2):
            for y in range(0, Y + 2):
                interior = 1 <= x <= X and 1 <= y <= Y
                perimeter = (x in (0, X + 1)) != (y in (0, Y + 1))
                if not (interior or perimeter):
                    continue
                n_out = arch.cluster_size if interior else 1
                n_in = arch.lut_size * arch.cluster_size if interior else 1
                src = g.add_node(SOURCE, x, y, z, 0, 0, n_out, 0.0)
                snk = g.add_node(SINK, x, y, z, 0, 0, n_in, 0.0)
                opins = [g.add_node(OPIN, x, y, z, k, 0, 1, pin_base_cost) for k in range(n_out)]
                ipins = [g.add_node(IPIN, x, y, z, k, 0, 1, pin_base_cost) for k in range(n_in)]
                for o in opins:
                    g.add_edge(src, o)
                for i in ipins:
                    g.add_edge(i, snk)
                if interior:
                    # local feedback inside the cluster
                    for o in opins:
                        for i in ipins:
                            g.add_edge(o, i)
                g.tiles[(x, y, z)] = Tile(src, snk, opins, ipins)
        # wires
        for t, (L, off) in enumerate(tracks):
            for y in range(Y + 1):
                segs = chanx[z][y][t] = [None] * X
                for a, b in _segments(X, L, off):
                    n = g.add_node(CHANX, a, y, z, t, b - a + 1, 1, float(b - a + 1),
                                   d.seg(L), (a, b, y, y + 1, z, z))
                    for p in range(a, b + 1):
                        segs[p - 1] = n
            for x in range(X + 1):
                segs = chany[z][x][t] = [None] * Y
                for a, b in _segments(Y, L, off):
                    n = g.add_node(CHANY, x, a, z, t, b - a + 1, 1, float(b - a + 1),
                                   d.seg(L), (x, x + 1, a, b, z, z))
                    for p in range(a, b + 1):
                        segs[p - 1] = n

    def sb_ends(z, i, j, t):
        ends = []
        if i >= 1:
            n = chanx[z][j][t][i - 1]
            if g.x[n] + g.length[n] - 1 == i:
                ends.append(n)
        if i + 1 <= X:
            n = chanx[z][j][t][i]
            if g.x[n] == i + 1:
                ends.append(n)
        if j >= 1:
            n = chany[z][i][t][j - 1]
            if g.y[n] + g.length[n] - 1 == j:
                ends.append(n)
        if j + 1 <= Y:
            n = chany[z][i][t][j]
            if g.y[n] == j + 1:
                ends.append(n)
        return ends

    for z in range(n_tiers):
        # switch boxes (subset pattern)
        for i in range(X + 1):
            for j in range(Y + 1):
                for t in range(w):
                    ends = sb_ends(z, i, j, t)
                    for a in range(len(ends)):
                        for b in range(a + 1, len(ends)):
                            g.add_bidir(ends[a], ends[b], d.t_sb_switch)
        # connection blocks, F_c = 1 on the side each pin faces
        for (x, y, tz), tile in list(g.tiles.items()):
            if tz != z:
                continue
            sides = _tile_sides(x, y, X, Y)
            side_nodes = []
            for kind, cx, cy in sides:
                if kind == CHANX:
                    side_nodes.append([chanx[z][cy][t][cx - 1] for t in range(w)])
                else:
                    side_nodes.append([chany[z][cx][t][cy - 1] for t in range(w)])
            for o in tile.opins:
                for nodes in side_nodes:
                    for n in nodes:
                        g.add_edge(o, n, d.t_cb)
            for k, ip in enumerate(tile.ipins):
                for n in side_nodes[k % len(side_nodes)]:
                    g.add_edge(n, ip, d.t_cb)

    # TSVs at 3D switch-box sites
    if n_tsv:
        for i in range(X + 1):
            for j in range(Y + 1):
                if not is_3d_sb(i, j, arch):
                    continue
                below = [None] * n_tsv
                for z in range(n_tiers - 1):
                    here = []
                    for k in range(n_tsv):
                        v = g.add_node(CHANZ, i, j, z, k, 0, 1, tsv_base_cost, d.t_tsv,
                                       (i, i + 1, j, j + 1, z, z + 1))
                        here.append(v)
                        if below[k] is not None:
                            g.add_bidir(below[k], v, d.t_sb_switch)
                    for tier in (z, z + 1):
                        for t in range(w):
                            v = here[t % n_tsv]
                            for e in sb_ends(tier, i, j, t):
                                g.add_bidir(e, v, d.t_sb_switch)
                    below = here
    return g


def _tile_sides(x, y, X, Y):
    """Adjacent channel positions of tile ``(x, y)``: ``(kind, x, y)`` triples.

    CLB order is bottom, right, top, left; pads have their single side.
    """
    if y == 0:
        return [(CHANX, x, 0)]
    if y == Y + 1:
        return [(CHANX, x, Y)]
    if x == 0:
        return [(CHANY, 0, y)]
    if x == X + 1:
        return [(CHANY, X, y)]
    return [(CHANX, x, y - 1), (CHANY, x, y), (CHANX, x, y), (CHANY, x - 1, y)]


def sb_planar_fanout(g: Rrg, node: int) -> Dict[int, int]:
    """Planar wire neighbours of ``node`` grouped by kind (diagnostics/tests)."""
    out: Dict[int, int] = {}
    for dst in g.adj_dst[node]:
        k = g.kind[dst]
        if k in (CHANX, CHANY):
            out[k] = out.get(k, 0) + 1
    return out


def tile_of_location(g: Rrg, loc: Tuple[int, int, int]) -> Optional[Tile]:
    return g.tiles.get(loc)
