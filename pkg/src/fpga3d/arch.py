"""3D FPGA architecture description: geometry, TSV electrical model, delays, area.

The architecture is read from a TOML file (see ``data/reference_arch.toml``
for the full schema with every key documented).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Dict, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvariantViolation, MissingField, OutOfGrid, UnknownKey

SEGMENT_LENGTHS = (1, 2, 4)


@dataclass(frozen=True)
class TsvParams:
    resistance: float      # ohms
    capacitance: float     # farads
    diameter: float        # um
    pitch: float           # um
    height: float          # um

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise InvariantViolation(f"tsv.{f.name}", "must be strictly positive")


@dataclass(frozen=True)
class DelayModel:
    t_lut: float
    t_ff_clk_to_q: float
    t_ff_setup: float
    t_seg: Mapping[int, float]
    t_sb_switch: float
    t_cb: float
    t_tsv: float

    def __post_init__(self):
        for name in ("t_lut", "t_ff_clk_to_q", "t_ff_setup", "t_sb_switch", "t_cb", "t_tsv"):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"delays.{name}", "must be nonnegative")
        for length, d in self.t_seg.items():
            if length not in SEGMENT_LENGTHS:
                raise InvariantViolation("delays.t_seg", f"unsupported segment length {length}")
            if d < 0:
                raise InvariantViolation("delays.t_seg", "must be nonnegative")
        if 1 not in self.t_seg:
            raise InvariantViolation("delays.t_seg", "length-1 delay is required")

    def seg(self, length: int) -> float:
        return self.t_seg[length]


@dataclass(frozen=True)
class AreaModel:
    transistors_per_clb: int = 1700
    transistors_per_cb_per_track: int = 6

    def __post_init__(self):
        if self.transistors_per_clb <= 0 or self.transistors_per_cb_per_track <= 0:
            raise InvariantViolation("area", "transistor constants must be positive")


@dataclass(frozen=True)
class Arch3D:
    tiers: int
    grid_x: int
    grid_y: int
    lut_size: int
    fs: int
    segment_mix: Mapping[int, float]
    tsv: TsvParams
    delays: DelayModel
    area: AreaModel = field(default_factory=AreaModel)
    cluster_size: int = 1
    sb3d_fraction: float = 1.0 / 3.0
    vertical_track_ratio: float = 0.5
    grid_units_per_um: float = 0.1
    tsv_area_overhead: float = 0.0

    def __post_init__(self):
        if self.tiers < 1:
            raise InvariantViolation("tiers", "must be >= 1")
        if self.grid_x < 0 or self.grid_y < 0:
            raise InvariantViolation("grid", "grid dimensions must be >= 0")
        if self.lut_size < 2:
            raise InvariantViolation("lut_size", "K must be >= 2")
        if self.fs < 1:
            raise InvariantViolation("fs", "F_s must be >= 1")
        if self.cluster_size < 1:
            raise InvariantViolation("cluster_size", "must be >= 1")
        for length, frac in self.segment_mix.items():
            if length not in SEGMENT_LENGTHS:
                raise InvariantViolation("segment_mix", f"unsupported length {length}")
            if frac < 0:
                raise InvariantViolation("segment_mix", "fractions must be nonnegative")
            if frac > 0 and length not in self.delays.t_seg:
                raise InvariantViolation("delays.t_seg", f"no delay for length {length}")
        if abs(sum(self.segment_mix.values()) - 1.0) > 1e-9:
            raise InvariantViolation("segment_mix", "fractions must sum to 1")
        if not 0 < self.sb3d_fraction <= 1:
            raise InvariantViolation("sb3d_fraction", "must lie in (0, 1]")
        if not 0 < self.vertical_track_ratio <= 1:
            raise InvariantViolation("vertical_track_ratio", "must lie in (0, 1]")
        if self.grid_units_per_um <= 0:
            raise InvariantViolation("grid_units_per_um", "must be positive")
        if self.tsv_area_overhead < 0:
            raise InvariantViolation("tsv_area_overhead", "must be nonnegative")

    @property
    def h_tsv_grid(self) -> float:
        """TSV height converted to grid-length units."""
        h = self.tsv.height * self.grid_units_per_um
        r = round(h)
        return r if abs(h - r) < 1e-9 else h

    @property
    def sb3d_period(self) -> int:
        return max(1, round(1.0 / self.sb3d_fraction))

    def with_grid(self, grid_x: int, grid_y: int) -> "Arch3D":
        return replace(self, grid_x=grid_x, grid_y=grid_y)

    def with_tiers(self, tiers: int) -> "Arch3D":
        return replace(self, tiers=tiers)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

_TOP_REQUIRED = ("tiers", "grid_x", "grid_y", "lut_size", "fs", "segment_mix",
                 "tsv", "grid_units_per_um", "delays")
_TOP_OPTIONAL = ("cluster_size", "sb3d_fraction", "vertical_track_ratio",
                 "tsv_area_overhead", "area")
_TSV_KEYS = {"r": "resistance", "c": "capacitance", "diameter": "diameter",
             "pitch": "pitch", "height": "height"}
_DELAY_KEYS = ("t_lut", "t_ff_clk_to_q", "t_ff_setup", "t_seg", "t_sb_switch", "t_cb", "t_tsv")
_AREA_KEYS = ("transistors_per_clb", "transistors_per_cb_per_track")


def _length_table(raw, name) -> Dict[int, float]:
    if not isinstance(raw, dict):
        raise InvariantViolation(name, "must be a table keyed by segment length")
    out = {}
    for k, v in raw.items():
        try:
            length = int(k)
        except ValueError:
            raise UnknownKey(f"{name}.{k}") from None
        if length not in SEGMENT_LENGTHS:
            raise UnknownKey(f"{name}.{k}")
        out[length] = float(v)
    return out


def _section(raw, name, keys):
    if not isinstance(raw, dict):
        raise InvariantViolation(name, "must be a table")
    for k in raw:
        if k not in keys:
            raise UnknownKey(f"{name}.{k}")
    for k in keys:
        if k not in raw:
            raise MissingField(f"{name}.{k}")
    return raw


def arch_from_dict(doc: dict) -> Arch3D:
    """Validate a parsed architecture document and build an :class:`Arch3D`."""
    for k in doc:
        if k not in _TOP_REQUIRED and k not in _TOP_OPTIONAL:
            raise UnknownKey(k)
    for k in _TOP_REQUIRED:
        if k not in doc:
            raise MissingField(k)

    tsv_raw = _section(doc["tsv"], "tsv", _TSV_KEYS)
    tsv = TsvParams(**{_TSV_KEYS[k]: float(v) for k, v in tsv_raw.items()})

    d = _section(doc["delays"], "delays", _DELAY_KEYS)
    delays = DelayModel(
        t_lut=float(d["t_lut"]), t_ff_clk_to_q=float(d["t_ff_clk_to_q"]),
        t_ff_setup=float(d["t_ff_setup"]), t_seg=_length_table(d["t_seg"], "delays.t_seg"),
        t_sb_switch=float(d["t_sb_switch"]), t_cb=float(d["t_cb"]), t_tsv=float(d["t_tsv"]))

    area = AreaModel()
    if "area" in doc:
        a = _section(doc["area"], "area", _AREA_KEYS)
        area = AreaModel(int(a["transistors_per_clb"]), int(a["transistors_per_cb_per_track"]))

    mix = _length_table(doc["segment_mix"], "segment_mix")
    kwargs = {k: doc[k] for k in _TOP_OPTIONAL if k in doc and k != "area"}
    return Arch3D(
        tiers=int(doc["tiers"]), grid_x=int(doc["grid_x"]), grid_y=int(doc["grid_y"]),
        lut_size=int(doc["lut_size"]), fs=int(doc["fs"]), segment_mix=mix, tsv=tsv,
        delays=delays, area=area, grid_units_per_um=float(doc["grid_units_per_um"]),
        **kwargs)


def load_arch(text: str) -> Arch3D:
    """Parse architecture TOML text. Omitted optional fields take their defaults
    (``vertical_track_ratio=0.5``, ``cluster_size=1``, ``sb3d_fraction=1/3``)."""
    return arch_from_dict(tomllib.loads(text))


def load_arch_file(path) -> Arch3D:
    return load_arch(Path(path).read_text())


def reference_arch_text() -> str:
    return resources.files("fpga3d").joinpath("data/reference_arch.toml").read_text()


def reference_arch() -> Arch3D:
    return load_arch(reference_arch_text())


# ---------------------------------------------------------------------------
# geometry and electrical models
# ---------------------------------------------------------------------------

def is_3d_sb(x: int, y: int, arch: Arch3D) -> bool:
    """True when the switch box at ``(x, y)`` hosts TSV tracks.

    Sites follow the diagonal pattern ``(x + y) mod p == 0`` with
    ``p = round(1 / sb3d_fraction)``; the same sites are used on every tier.
    """
    if not (0 <= x <= arch.grid_x and 0 <= y <= arch.grid_y):
        raise OutOfGrid(f"switch box ({x}, {y}) outside {arch.grid_x + 1}x{arch.grid_y + 1} grid")
    return (x + y) % arch.sb3d_period == 0


def manhattan_dmax(x: float, y: float, tiers: int, h_tsv: float) -> float:
    return (x + y) + (tiers - 1) * h_tsv


def dmax(arch: Arch3D) -> float:
    """Maximum Manhattan distance across the stack, in grid units."""
    return manhattan_dmax(arch.grid_x, arch.grid_y, arch.tiers, arch.h_tsv_grid)


def sb_switch_count(w: int, is_3d: bool) -> int:
    """Pass transistors in one switch box: 1.5*w (2D) or 2.5*w (3D), half rounded up."""
    if w < 1:
        raise ValueError("channel width must be >= 1")
    return (5 * w + 1) // 2 if is_3d else (3 * w + 1) // 2


def tsv_rc_delay(tsv: TsvParams) -> float:
    """Single-pole R*C estimate of one TSV."""
    return tsv.resistance * tsv.capacitance


def track_allocation(arch: Arch3D, w: int) -> Dict[int, int]:
    """Number of planar tracks of each segment length at channel width ``w``.

    Lengths 2 and 4 get ``round(mix * w)`` tracks, the remainder is length 1.
    """
    alloc = {L: 0 for L in SEGMENT_LENGTHS}
    for L in (4, 2):
        alloc[L] = int(math.floor(arch.segment_mix.get(L, 0.0) * w + 0.5))
    excess = alloc[2] + alloc[4] - w
    for L in (4, 2):
        take = min(max(excess, 0), alloc[L])
        alloc[L] -= take
        excess -= take
    alloc[1] = w - alloc[2] - alloc[4]
    return alloc


def tsv_tracks(arch: Arch3D, w: int) -> int:
    """TSV tracks per tier pair at each 3D switch box: ceil(r_z * w)."""
    return max(1, math.ceil(arch.vertical_track_ratio * w - 1e-9))
