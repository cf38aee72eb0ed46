"""Command-line flow: parse, partition, place, route, time and report.

Every stage reads its prerequisites from and writes its results to the
output directory, and ``flow`` simply runs the stages in order, so a staged
run reproduces an end-to-end run file for file.

Stage seeds are derived from the single ``--seed``: the first 8 bytes of
``sha256(f"{seed}:{ordinal}")`` with ordinals partition=1, place=2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .arch import Arch3D, load_arch_file, reference_arch_text
from .errors import ArchError, FlowError, MissingPrerequisite, Unroutable
from .metrics import FlowMetrics, emit_report, metrics_from_artifacts
from .netlist import BlockNetlist, build_graph, dump_blocks, pack_blocks, parse_blif
from .partition import anneal_partition, dump_partition, read_partition
from .place import anneal_placement, auto_grid, dump_placement, read_placement
from .route import (RouterParams, dump_routing, find_wmin, net_requests, route_connections,
                    routing_summary, write_routing_summary)
from .rrg import build_rrg
from .sa import SaSchedule
from .synth import synthetic_blif
from .timing import (build_timing_graph, connection_criticalities, critical_path,
                     estimated_connection_delays, timing_report_text, timing_summary,
                     write_timing_summary)

logger = logging.getLogger("fpga3d")

STAGES = ("partition", "place", "route", "sta", "report")
STAGE_ORDINAL = {name: i + 1 for i, name in enumerate(STAGES)}

BLOCKS_FILE = "blocks.txt"
PARTITION_FILE = "partition.txt"
PLACEMENT_FILE = "placement.txt"
ROUTING_FILE = "routing.txt"
ROUTING_JSON = "routing.json"
TIMING_FILE = "timing.txt"
TIMING_JSON = "timing.json"
REPORT_FILE = "report.txt"
REPORT_JSON = "report.json"
ARTIFACTS = (BLOCKS_FILE, PARTITION_FILE, PLACEMENT_FILE, ROUTING_FILE, ROUTING_JSON,
             TIMING_FILE, TIMING_JSON, REPORT_FILE, REPORT_JSON)


class ConfigError(FlowError):
    pass


@dataclass
class FlowConfig:
    arch: str
    blif: str
    out_dir: str = "fpga3d_out"
    tiers: int = 2
    seed: int = 1
    width: Optional[int] = None       # None: search the minimum width
    moves_per_temp: Optional[int] = None
    max_route_iters: int = 50
    auto_grid: bool = False
    w_max: int = 128
    fmt: str = "text"

    def validate(self) -> None:
        if self.tiers < 1:
            raise ConfigError("--tiers must be >= 1")
        if self.width is not None and (self.width < 2 or self.width % 2):
            raise ConfigError("--width must be an even number >= 2")
        if self.max_route_iters < 1:
            raise ConfigError("--max-route-iters must be >= 1")
        for label, path in (("arch", self.arch), ("blif", self.blif)):
            if not Path(path).is_file():
                raise ConfigError(f"{label} file not found: {path}")


def stage_seed(seed: int, ordinal: int) -> int:
    digest = hashlib.sha256(f"{seed}:{ordinal}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _out(cfg: FlowConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


def _write(cfg: FlowConfig, name: str, text: str) -> None:
    path = _out(cfg, name)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _require(cfg: FlowConfig, stage: str, name: str) -> str:
    path = _out(cfg, name)
    if not path.is_file():
        raise MissingPrerequisite(stage, str(path))
    return path.read_text()


def _schedule(cfg: FlowConfig, stage: str) -> SaSchedule:
    return SaSchedule(seed=stage_seed(cfg.seed, STAGE_ORDINAL[stage]),
                      moves_per_temperature=cfg.moves_per_temp)


def load_design(cfg: FlowConfig):
    arch = load_arch_file(cfg.arch).with_tiers(cfg.tiers)
    nl = parse_blif(Path(cfg.blif).read_text(), arch.lut_size)
    return arch, pack_blocks(nl, arch.cluster_size)


def run_partition(cfg: FlowConfig) -> None:
    arch, blocks = load_design(cfg)
    graph = build_graph(blocks)
    res = anneal_partition(graph, cfg.tiers, _schedule(cfg, "partition"))
    logger.info("partition: cut %d -> %d (%s)", res.initial_cut, res.cut, res.stats.stop_reason)
    _write(cfg, BLOCKS_FILE, dump_blocks(blocks))
    _write(cfg, PARTITION_FILE, dump_partition(res.partition, res.cut, cfg.seed))


def _grid_arch(cfg: FlowConfig, arch: Arch3D, blocks: BlockNetlist, p) -> Arch3D:
    if cfg.auto_grid:
        s = auto_grid(blocks, p)
        return arch.with_grid(s, s)
    return arch


def run_place(cfg: FlowConfig) -> None:
    arch, blocks = load_design(cfg)
    p, _, _ = read_partition(_require(cfg, "partition", PARTITION_FILE))
    if p.tiers != cfg.tiers or len(p.tier_of) != len(blocks.blocks):
        raise MissingPrerequisite("partition", "partition file does not match this design")
    arch = _grid_arch(cfg, arch, blocks, p)
    res = anneal_placement(blocks, p, arch, _schedule(cfg, "place"))
    logger.info("place: %dx%d grid, cost %g -> %g (%s)", arch.grid_x, arch.grid_y,
                res.initial_cost, res.cost, res.stats.stop_reason)
    _write(cfg, PLACEMENT_FILE, dump_placement(res.placement, res.cost, cfg.seed))


def _placed_design(cfg: FlowConfig, stage: str):
    arch, blocks = load_design(cfg)
    pl, _, _ = read_placement(_require(cfg, stage, PLACEMENT_FILE))
    if len(pl.location_of) != len(blocks.blocks):
        raise MissingPrerequisite("place", "placement file does not match this design")
    arch = arch.with_grid(pl.grid_x, pl.grid_y).with_tiers(pl.tiers)
    return arch, blocks, pl


def run_route(cfg: FlowConfig) -> None:
    arch, blocks, pl = _placed_design(cfg, "place")
    # router criticalities come from a pre-route timing estimate
    est = estimated_connection_delays(blocks, pl, arch)
    tg = build_timing_graph(blocks, arch.delays, est)
    crit = connection_criticalities(tg, critical_path(tg))
    params = RouterParams(max_iterations=cfg.max_route_iters)
    if cfg.width is not None:
        rrg = build_rrg(arch, cfg.width, tsv_base_cost=params.tsv_base_cost)
        result = route_connections(rrg, net_requests(rrg, pl, blocks, crit), params)
    else:
        wr = find_wmin(arch, pl, blocks, params, crit, w_max=cfg.w_max)
        result = wr.result
        rrg = build_rrg(arch, wr.w_min, tsv_base_cost=params.tsv_base_cost)
        logger.info("route: W_min %d (probes %s)", wr.w_min,
                    ", ".join(f"{w}:{'ok' if ok else 'fail'}" for w, ok in sorted(wr.probes.items())))
    _write(cfg, ROUTING_FILE, dump_routing(rrg, result))
    _write(cfg, ROUTING_JSON, write_routing_summary(routing_summary(rrg, result)))
    if not result.success:
        raise Unroutable(result.iterations, result.overuse, result)


def run_sta(cfg: FlowConfig) -> None:
    arch, blocks = load_design(cfg)
    summary = json.loads(_require(cfg, "route", ROUTING_JSON))
    delays = {}
    for net in summary["nets"]:
        for i, d in enumerate(net["delays"]):
            delays[(net["id"], i)] = d
    tg = build_timing_graph(blocks, arch.delays, delays)
    rep = critical_path(tg)
    logger.info("sta: CPD %.4f ns", rep.cpd * 1e9)
    _write(cfg, TIMING_FILE, timing_report_text(tg, rep))
    _write(cfg, TIMING_JSON, write_timing_summary(timing_summary(tg, rep)))


def run_report(cfg: FlowConfig) -> FlowMetrics:
    arch, blocks = load_design(cfg)
    _, cut, _ = read_partition(_require(cfg, "partition", PARTITION_FILE))
    pl, _, _ = read_placement(_require(cfg, "place", PLACEMENT_FILE))
    routing = json.loads(_require(cfg, "route", ROUTING_JSON))
    timing = json.loads(_require(cfg, "sta", TIMING_JSON))
    m = metrics_from_artifacts(blocks, pl, cut, routing, timing, arch,
                               blocks.netlist.model_name)
    _write(cfg, REPORT_FILE, emit_report(m, "text"))
    _write(cfg, REPORT_JSON, emit_report(m, "machine"))
    return m


STAGE_FUNCS = {
    "partition": run_partition,
    "place": run_place,
    "route": run_route,
    "sta": run_sta,
    "report": run_report,
}


def run_flow(cfg: FlowConfig) -> FlowMetrics:
    """Run every stage in order; a failing stage's error carries ``.stage``."""
    cfg.validate()
    out = None
    for name in STAGES:
        try:
            out = STAGE_FUNCS[name](cfg)
        except FlowError as exc:
            exc.stage = name
            raise
    return out


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_flow_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arch", required=True, help="architecture TOML file")
    p.add_argument("--blif", required=True, help="technology-mapped BLIF netlist")
    p.add_argument("--tiers", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--width", type=int, help="route at this fixed channel width")
    g.add_argument("--wmin-search", action="store_true",
                   help="search the minimum channel width (default)")
    p.add_argument("--out-dir", default="fpga3d_out")
    p.add_argument("--moves-per-temp", type=int, default=None)
    p.add_argument("--max-route-iters", type=int, default=50)
    p.add_argument("--auto-grid", action="store_true",
                   help="size each tier to the smallest square grid that fits")
    p.add_argument("--w-max", type=int, default=128)
    p.add_argument("--format", choices=("text", "machine"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpga3d", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("flow",) + STAGES:
        _add_flow_args(sub.add_parser(name, help=f"run {'the whole flow' if name == 'flow' else 'the ' + name + ' stage'}"))
    sp = sub.add_parser("synth", help="write a random LUT circuit as BLIF")
    sp.add_argument("--luts", type=int, default=100)
    sp.add_argument("--inputs", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output", default="-")
    sub.add_parser("ref-arch", help="print the reference architecture file")
    return parser


def config_from_args(args) -> FlowConfig:
    return FlowConfig(arch=args.arch, blif=args.blif, out_dir=args.out_dir, tiers=args.tiers,
                      seed=args.seed, width=args.width, moves_per_temp=args.moves_per_temp,
                      max_route_iters=args.max_route_iters, auto_grid=args.auto_grid,
                      w_max=args.w_max, fmt=args.format)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "ref-arch":
        sys.stdout.write(reference_arch_text())
        return 0
    if args.command == "synth":
        text = synthetic_blif(args.luts, args.inputs, seed=args.seed)
        if args.output == "-":
            sys.stdout.write(text)
        else:
            Path(args.output).write_text(text)
        return 0

    cfg = config_from_args(args)
    try:
        cfg.validate()
        load_arch_file(cfg.arch)
    except (ConfigError, ArchError) as exc:
        print(f"fpga3d: config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "flow":
            metrics = run_flow(cfg)
        else:
            metrics = STAGE_FUNCS[args.command](cfg)
    except FlowError as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"fpga3d: {stage} failed: {exc}", file=sys.stderr)
        return 1
    if metrics is not None:
        sys.stdout.write(emit_report(metrics, cfg.fmt))
    return 0


if __name__ == "__main__":
    sys.exit(main())
