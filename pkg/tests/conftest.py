import random

import pytest

from fpga3d.arch import AreaModel, Arch3D, DelayModel, TsvParams, reference_arch

SQUARE_TSV = TsvParams(resistance=0.35, capacitance=3e-15, diameter=2.0, pitch=4.0, height=20.0)

CHAIN3_BLIF = """\
.model chain3
.inputs a
.outputs y
.names a n1
1 1
.names n1 n2
0 1
.names n2 y
1 1
.end
"""

LATCH_BLIF = """\
# three gates and one flip-flop
.model seq
.inputs a b clk
.outputs q z
.names a b n1
11 1
.names n1 d
0 1
.latch d q re clk 0
.names q b z
1- 1
-1 1
.end
"""


def make_arch(**kw) -> Arch3D:
    base = dict(
        tiers=1, grid_x=4, grid_y=4, lut_size=6, fs=3,
        segment_mix={1: 1.0}, tsv=SQUARE_TSV,
        delays=DelayModel(t_lut=2e-10, t_ff_clk_to_q=1e-10, t_ff_setup=5e-11,
                          t_seg={1: 1e-10, 2: 1.5e-10, 4: 2.5e-10},
                          t_sb_switch=5e-11, t_cb=5e-11, t_tsv=2e-11),
        area=AreaModel(), grid_units_per_um=0.1,
    )
    base.update(kw)
    return Arch3D(**base)


@pytest.fixture
def ref_arch():
    return reference_arch()


@pytest.fixture
def rng():
    return random.Random(1234)
