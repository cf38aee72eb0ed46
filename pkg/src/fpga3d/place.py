"""Simulated-annealing placement of each tier's blocks on the CLB grid.

Tier assignment comes from the partitioner and never changes here. CLBs sit
on interior sites ``1..X x 1..Y``; pads sit on perimeter sites (corners
excluded). The cost is the 3D half-perimeter wirelength: bounding-box width
plus height plus tier span times the TSV height in grid units.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from .arch import Arch3D
from .errors import GridTooSmall
from .netlist import CLB, BlockNetlist, Net
from .partition import Partition
from .sa import AnnealStats, SaSchedule, anneal

Location = Tuple[int, int, int]


def clb_sites(grid_x: int, grid_y: int) -> List[Tuple[int, int]]:
    return [(x, y) for x in range(1, grid_x + 1) for y in range(1, grid_y + 1)]


def pad_sites(grid_x: int, grid_y: int) -> List[Tuple[int, int]]:
    sites = [(x, 0) for x in range(1, grid_x + 1)]
    sites += [(x, grid_y + 1) for x in range(1, grid_x + 1)]
    sites += [(0, y) for y in range(1, grid_y + 1)]
    sites += [(grid_x + 1, y) for y in range(1, grid_y + 1)]
    return sites


@dataclass
class Placement:
    location_of: List[Location]
    grid_x: int
    grid_y: int
    tiers: int

    def occupancy(self) -> Dict[Location, int]:
        return {loc: b for b, loc in enumerate(self.location_of)}

    def copy(self) -> "Placement":
        return Placement(list(self.location_of), self.grid_x, self.grid_y, self.tiers)


def _bbox_terms(terminals: List[int], xs, ys, zs) -> Tuple[int, int]:
    if len(terminals) == 2:
        a, b = terminals
        return abs(xs[a] - xs[b]) + abs(ys[a] - ys[b]), abs(zs[a] - zs[b])
    bx = [xs[t] for t in terminals]
    by = [ys[t] for t in terminals]
    bz = [zs[t] for t in terminals]
    return (max(bx) - min(bx)) + (max(by) - min(by)), max(bz) - min(bz)


def net_hpwl3d(net: Net, pl: Placement, arch: Arch3D) -> float:
    """``(bbox width + bbox height) + tier span * h_tsv`` for one net."""
    terms = net.terminals()
    locs = pl.location_of
    xs = [locs[t][0] for t in terms]
    ys = [locs[t][1] for t in terms]
    zs = [locs[t][2] for t in terms]
    return (max(xs) - min(xs)) + (max(ys) - min(ys)) + (max(zs) - min(zs)) * arch.h_tsv_grid


def placement_cost(blocks: BlockNetlist, pl: Placement, arch: Arch3D) -> float:
    return sum(net_hpwl3d(n, pl, arch) for n in blocks.routed_nets())


def grid_capacity_needed(blocks: BlockNetlist, p: Partition) -> Tuple[int, int]:
    """Largest per-tier CLB count and pad count."""
    clbs = [0] * p.tiers
    pads = [0] * p.tiers
    for b in blocks.blocks:
        if b.kind == CLB:
            clbs[p.tier_of[b.id]] += 1
        else:
            pads[p.tier_of[b.id]] += 1
    return max(clbs), max(pads)


def auto_grid(blocks: BlockNetlist, p: Partition) -> int:
    """Smallest square grid side fitting every tier's CLBs and pads."""
    clbs, pads = grid_capacity_needed(blocks, p)
    s = 1
    while s * s < clbs or 4 * s < pads:
        s += 1
    return s


def random_placement(blocks: BlockNetlist, p: Partition, arch: Arch3D, seed: int) -> Placement:
    rng = random.Random(seed)
    csites = clb_sites(arch.grid_x, arch.grid_y)
    psites = pad_sites(arch.grid_x, arch.grid_y)
    loc: List[Optional[Location]] = [None] * len(blocks.blocks)
    for z in range(p.tiers):
        clbs = [b.id for b in blocks.blocks if p.tier_of[b.id] == z and b.kind == CLB]
        pads = [b.id for b in blocks.blocks if p.tier_of[b.id] == z and b.kind != CLB]
        if len(clbs) > len(csites):
            raise GridTooSmall(z, len(clbs), len(csites), "clb")
        if len(pads) > len(psites):
            raise GridTooSmall(z, len(pads), len(psites), "pad")
        for b, (x, y) in zip(clbs, rng.sample(csites, len(clbs))):
            loc[b] = (x, y, z)
        for b, (x, y) in zip(pads, rng.sample(psites, len(pads))):
            loc[b] = (x, y, z)
    return Placement(loc, arch.grid_x, arch.grid_y, p.tiers)


def _bbox(terminals: List[int], xs, ys) -> List[int]:
    bx = [xs[t] for t in terminals]
    by = [ys[t] for t in terminals]
    return [min(bx), max(bx), min(by), max(by)]


class _PlacementProblem:
    """Incremental placement state.

    Tiers never change during placement, so each net's tier span is fixed
    and only the planar bounding boxes are tracked. A box is updated in
    O(1) when the moved terminal was strictly inside it and rescanned
    otherwise.
    """

    def __init__(self, blocks: BlockNetlist, pl: Placement, arch: Arch3D):
        self.h = arch.h_tsv_grid
        self.pl = pl
        self.xs = [l[0] for l in pl.location_of]
        self.ys = [l[1] for l in pl.location_of]
        self.zs = [l[2] for l in pl.location_of]
        self.is_clb = [b.kind == CLB for b in blocks.blocks]
        nets = blocks.routed_nets()
        self.net_terms = {n.id: n.terminals() for n in nets}
        self.nets_of = blocks.nets_of_block()
        self.bb = {}
        self.planar = {}
        self.span = {}
        for nid, terms in self.net_terms.items():
            self.planar[nid], self.span[nid] = _bbox_terms(terms, self.xs, self.ys, self.zs)
            self.bb[nid] = _bbox(terms, self.xs, self.ys)
        self.span_total = sum(self.span.values())
        self.occ = {loc: b for b, loc in enumerate(pl.location_of)}
        self.csites = clb_sites(pl.grid_x, pl.grid_y)
        self.psites = pad_sites(pl.grid_x, pl.grid_y)
        self.n_blocks = len(pl.location_of)
        self.best: Optional[List[Location]] = None

    def total(self) -> Tuple[int, int]:
        return sum(self.planar.values()), self.span_total

    def cost(self) -> float:
        p, s = self.total()
        return p + s * self.h

    def _moved_bbox(self, nid, ox, oy, nx, ny):
        x0, x1, y0, y1 = self.bb[nid]
        if x0 < ox < x1 or x0 == x1:
            if nx < x0:
                x0 = nx
            elif nx > x1:
                x1 = nx
        else:
            xs = self.xs
            vals = [xs[t] for t in self.net_terms[nid]]
            x0, x1 = min(vals), max(vals)
        if y0 < oy < y1 or y0 == y1:
            if ny < y0:
                y0 = ny
            elif ny > y1:
                y1 = ny
        else:
            ys = self.ys
            vals = [ys[t] for t in self.net_terms[nid]]
            y0, y1 = min(vals), max(vals)
        return [x0, x1, y0, y1]

    def propose(self, rng: random.Random):
        b = rng.randrange(self.n_blocks)
        sites = self.csites if self.is_clb[b] else self.psites
        sx, sy = sites[rng.randrange(len(sites))]
        xs, ys = self.xs, self.ys
        bx, by = xs[b], ys[b]
        if sx == bx and sy == by:
            return None
        other = self.occ.get((sx, sy, self.zs[b]))
        xs[b], ys[b] = sx, sy
        if other is not None:
            xs[other], ys[other] = bx, by
        planar = self.planar
        dp = 0
        new_terms = []
        if other is None:
            for nid in self.nets_of[b]:
                box = self._moved_bbox(nid, bx, by, sx, sy)
                p = box[1] - box[0] + box[3] - box[2]
                dp += p - planar[nid]
                new_terms.append((nid, p, box))
        else:
            nb, no = self.nets_of[b], self.nets_of[other]
            both = set(nb).intersection(no) if nb and no else ()
            for nid in nb:
                if nid in both:
                    box = _bbox(self.net_terms[nid], xs, ys)
                else:
                    box = self._moved_bbox(nid, bx, by, sx, sy)
                p = box[1] - box[0] + box[3] - box[2]
                dp += p - planar[nid]
                new_terms.append((nid, p, box))
            for nid in no:
                if nid in both:
                    continue
                box = self._moved_bbox(nid, sx, sy, bx, by)
                p = box[1] - box[0] + box[3] - box[2]
                dp += p - planar[nid]
                new_terms.append((nid, p, box))
        xs[b], ys[b] = bx, by
        if other is not None:
            xs[other], ys[other] = sx, sy
        return (b, other, (bx, by), (sx, sy), new_terms), dp

    def apply(self, move) -> None:
        b, other, (bx, by), (sx, sy), new_terms = move
        z = self.zs[b]
        self.xs[b], self.ys[b] = sx, sy
        del self.occ[(bx, by, z)]
        if other is not None:
            self.xs[other], self.ys[other] = bx, by
            self.occ[(bx, by, z)] = other
        self.occ[(sx, sy, z)] = b
        for nid, p, box in new_terms:
            self.planar[nid] = p
            self.bb[nid] = box

    def locations(self) -> List[Location]:
        return list(zip(self.xs, self.ys, self.zs))

    def save_best(self) -> None:
        self.best = self.locations()


@dataclass
class PlacementResult:
    placement: Placement
    cost: float
    initial_cost: float
    stats: AnnealStats


def anneal_placement(blocks: BlockNetlist, p: Partition, arch: Arch3D,
                     schedule: Optional[SaSchedule] = None,
                     on_accept: Optional[Callable] = None,
                     initial: Optional[Placement] = None) -> PlacementResult:
    """Anneal from a random placement seeded by ``schedule.seed``.

    ``N`` defaults to ``moves_factor`` times the largest tier's block count.
    Moves relocate one block to a random same-tier site of its kind,
    swapping with the occupant if there is one. Returns the lowest-cost
    placement seen. ``on_accept(problem, cost)`` runs after every accepted
    move (used by consistency tests).
    """
    schedule = schedule or SaSchedule()
    pl = initial.copy() if initial is not None else random_placement(
        blocks, p, arch, schedule.seed)
    problem = _PlacementProblem(blocks, pl, arch)
    init_cost = problem.cost()
    rng = random.Random(schedule.seed ^ 0x91ACE)
    hook = None
    if on_accept is not None:
        def hook(cost):
            on_accept(problem, cost)
    per_tier = max(p.tier_sizes)
    stats = anneal(problem, init_cost, per_tier, schedule, rng, hook)
    best = Placement(problem.best, pl.grid_x, pl.grid_y, pl.tiers)
    return PlacementResult(best, stats.best_cost, init_cost, stats)


def dump_placement(pl: Placement, cost: float, seed: int) -> str:
    lines = [f"# placement grid_x {pl.grid_x} grid_y {pl.grid_y} tiers {pl.tiers} "
             f"cost {cost:g} seed {seed}"]
    lines += [f"{b} {x} {y} {z}" for b, (x, y, z) in enumerate(pl.location_of)]
    return "\n".join(lines) + "\n"


def read_placement(text: str) -> Tuple[Placement, float, int]:
    header = None
    locs = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = line[1:].split()
            continue
        b, x, y, z = map(int, line.split())
        locs[b] = (x, y, z)
    if header is None:
        raise ValueError("placement dump has no header")
    meta = dict(zip(header[1::2], header[2::2]))
    pl = Placement([locs[b] for b in range(len(locs))], int(meta["grid_x"]),
                   int(meta["grid_y"]), int(meta["tiers"]))
    return pl, float(meta["cost"]), int(meta["seed"])
