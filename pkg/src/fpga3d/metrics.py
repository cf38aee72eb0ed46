"""Flow metrics: TSV usage, wirelength, channel width, CPD and transistor area.

Area is a transistor count summed over every tier: switch boxes (1.5W or
2.5W pass transistors each), CLBs, and connection-block tracks.

Machine-readable report schema (JSON object, one per design)::

    circuit            str    design name
    tiers              int    tier count
    grid_x, grid_y     int    CLB grid per tier
    tsv_cut            int    partition cut size
    tsv_used           int    wire_z nodes occupied by routes
    wmin               int    channel width routed at
    cpd                float  critical-path delay, seconds
    total_wirelength   int    sum of planar segment lengths of all routes
    transistor_total   int    area proxy
    clbs_per_tier      [int]  occupied CLB sites per tier
    wirelength_per_tier[int]
    tsv_per_boundary   [int]  wire_z nodes used between tier z and z+1
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Optional, Sequence

from .arch import Arch3D, is_3d_sb, sb_switch_count
from .errors import StageMissing
from .netlist import CLB, BlockNetlist
from .partition import Partition
from .place import Placement
from .route import RoutingResult
from .rrg import CHANX, CHANY, CHANZ, Rrg
from .timing import PathReport


@dataclass
class FlowMetrics:
    circuit: str = ""
    tiers: int = 1
    grid_x: int = 0
    grid_y: int = 0
    tsv_cut: int = 0
    tsv_used: int = 0
    wmin: int = 0
    cpd: float = 0.0
    total_wirelength: int = 0
    transistor_total: int = 0
    clbs_per_tier: List[int] = field(default_factory=list)
    wirelength_per_tier: List[int] = field(default_factory=list)
    tsv_per_boundary: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "FlowMetrics":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in names})


def channel_segments_per_tier(arch: Arch3D) -> int:
    """Unit channel positions (horizontal plus vertical) in one tier."""
    X, Y = arch.grid_x, arch.grid_y
    return X * (Y + 1) + (X + 1) * Y


def transistor_count(arch: Arch3D, w: int) -> int:
    """Transistor-count area of the whole stack at channel width ``w``.

    Switch boxes sit on the ``(X+1) x (Y+1)`` grid of every tier and count as
    3D only when there is more than one tier. CLBs are the ``X*Y`` interior
    sites; each unit channel position holds ``w`` connection-block tracks.
    """
    if w < 1:
        raise ValueError("channel width must be >= 1")
    stacked = arch.tiers > 1
    sb = 0
    for x in range(arch.grid_x + 1):
        for y in range(arch.grid_y + 1):
            sb += sb_switch_count(w, stacked and is_3d_sb(x, y, arch))
    clb = arch.grid_x * arch.grid_y * arch.area.transistors_per_clb
    cb = channel_segments_per_tier(arch) * w * arch.area.transistors_per_cb_per_track
    return arch.tiers * (sb + clb + cb)


def collect_metrics(partition: Optional[Partition], cut: Optional[int],
                    placement: Optional[Placement], rrg: Optional[Rrg],
                    routing: Optional[RoutingResult], timing: Optional[PathReport],
                    arch: Arch3D, blocks: BlockNetlist, circuit: str = "") -> FlowMetrics:
    for stage, value in (("partition", partition), ("place", placement),
                         ("route", routing), ("sta", timing)):
        if value is None:
            raise StageMissing(stage)
    if rrg is None:
        raise StageMissing("route")
    tiers = placement.tiers
    arch = arch.with_grid(placement.grid_x, placement.grid_y).with_tiers(tiers)
    clbs = [0] * tiers
    for b in blocks.blocks:
        if b.kind == CLB:
            clbs[placement.location_of[b.id][2]] += 1
    wl = [0] * tiers
    for tree in routing.trees.values():
        for n in tree.nodes:
            if rrg.kind[n] in (CHANX, CHANY):
                wl[rrg.z[n]] += rrg.length[n]
    tsv = [0] * max(tiers - 1, 0)
    for n in routing.used_nodes():
        if rrg.kind[n] == CHANZ:
            tsv[rrg.z[n]] += 1
    return FlowMetrics(
        circuit=circuit,
        tiers=tiers,
        grid_x=placement.grid_x,
        grid_y=placement.grid_y,
        tsv_cut=int(cut or 0),
        tsv_used=sum(tsv),
        wmin=routing.width,
        cpd=timing.cpd,
        total_wirelength=sum(wl),
        transistor_total=transistor_count(arch, routing.width),
        clbs_per_tier=clbs,
        wirelength_per_tier=wl,
        tsv_per_boundary=tsv,
    )


def metrics_from_artifacts(blocks: BlockNetlist, placement: Optional[Placement],
                           cut: Optional[int], routing: Optional[dict], timing: Optional[dict],
                           arch: Arch3D, circuit: str = "") -> FlowMetrics:
    """Same as :func:`collect_metrics`, from the routing and timing summaries on disk."""
    for stage, value in (("partition", cut), ("place", placement), ("route", routing),
                         ("sta", timing)):
        if value is None:
            raise StageMissing(stage)
    tiers = placement.tiers
    arch = arch.with_grid(placement.grid_x, placement.grid_y).with_tiers(tiers)
    clbs = [0] * tiers
    for b in blocks.blocks:
        if b.kind == CLB:
            clbs[placement.location_of[b.id][2]] += 1
    return FlowMetrics(
        circuit=circuit,
        tiers=tiers,
        grid_x=placement.grid_x,
        grid_y=placement.grid_y,
        tsv_cut=int(cut),
        tsv_used=int(routing["tsv_used"]),
        wmin=int(routing["w"]),
        cpd=float(timing["cpd"]),
        total_wirelength=int(routing["wirelength"]),
        transistor_total=transistor_count(arch, int(routing["w"])),
        clbs_per_tier=clbs,
        wirelength_per_tier=list(routing["wirelength_per_tier"]),
        tsv_per_boundary=list(routing["tsv_per_boundary"]),
    )


def _fmt_cpd(cpd: float) -> str:
    return f"{cpd * 1e9:.4g}"


_COLUMNS = ("design", "tiers", "CPD(ns)", "W_min", "Area(x10^6)", "TSV#", "TSV_cut", "WL")


def _row(m: FlowMetrics) -> List[str]:
    return [m.circuit or "-", str(m.tiers), _fmt_cpd(m.cpd), str(m.wmin),
            f"{m.transistor_total / 1e6:.4f}", str(m.tsv_used), str(m.tsv_cut),
            str(m.total_wirelength)]


def text_table(rows: Sequence[FlowMetrics]) -> str:
    cells = [list(_COLUMNS)] + [_row(m) for m in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(_COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"


def emit_report(metrics: FlowMetrics, fmt: str = "text") -> str:
    """Render one design's metrics as a text table or a JSON document."""
    if fmt == "text":
        return text_table([metrics])
    if fmt == "machine":
        return json.dumps(metrics.to_dict(), indent=1, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_machine_report(text: str) -> FlowMetrics:
    return FlowMetrics.from_dict(json.loads(text))


def percent_delta(base: float, new: float) -> float:
    """Signed change ``(new - base) / base * 100``; positive means ``new`` is larger."""
    if base == 0:
        return 0.0
    return (new - base) / base * 100.0


def comparison_table(base: Sequence[FlowMetrics], other: Sequence[FlowMetrics]) -> str:
    """Per-design rows plus an average-change line (positive = increase)."""
    out = [text_table(list(base) + list(other)).rstrip()]
    if base and other:
        pairs = list(zip(base, other))
        avg = {
            "CPD": sum(percent_delta(a.cpd, b.cpd) for a, b in pairs) / len(pairs),
            "W_min": sum(percent_delta(a.wmin, b.wmin) for a, b in pairs) / len(pairs),
            "Area": sum(percent_delta(a.transistor_total, b.transistor_total)
                        for a, b in pairs) / len(pairs),
        }
        out.append("change (%): " + "  ".join(f"{k} {v:+.2f}" for k, v in avg.items()))
    return "\n".join(out) + "\n"


CHART_METRICS = ("tsv_used", "total_wirelength", "cpd", "wmin", "transistor_total")


def chart_series(rows: Iterable[FlowMetrics], metrics: Sequence[str] = CHART_METRICS) -> str:
    """Flat CSV ``circuit,metric,tiers,value`` suitable for grouped bar charts."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["circuit", "metric", "tiers", "value"])
    for m in rows:
        for name in metrics:
            wr.writerow([m.circuit, name, m.tiers, repr(getattr(m, name))])
    return buf.getvalue()


def summary_by_tiers(rows: Iterable[FlowMetrics]) -> Dict[int, Dict[str, float]]:
    """Mean of each chart metric grouped by tier count."""
    groups: Dict[int, List[FlowMetrics]] = {}
    for m in rows:
        groups.setdefault(m.tiers, []).append(m)
    return {t: {k: sum(getattr(m, k) for m in ms) / len(ms) for k in CHART_METRICS}
            for t, ms in sorted(groups.items())}
