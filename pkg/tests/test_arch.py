import math

import pytest
from hypothesis import given, strategies as st

from fpga3d.arch import (SEGMENT_LENGTHS, TsvParams, dmax, is_3d_sb, load_arch,
                         manhattan_dmax, reference_arch_text, sb_switch_count, track_allocation,
                         tsv_rc_delay, tsv_tracks)
from fpga3d.errors import InvariantViolation, MissingField, OutOfGrid, UnknownKey

from .conftest import make_arch


def test_reference_file(ref_arch):
    a = ref_arch
    assert (a.tiers, a.grid_x, a.grid_y, a.lut_size, a.fs) == (2, 8, 8, 6, 3)
    assert dict(a.segment_mix) == {1: 0.5, 2: 0.3, 4: 0.2}
    assert a.tsv == TsvParams(0.35, 3e-15, 2.0, 4.0, 20.0)
    assert a.h_tsv_grid == 2


def test_defaults_for_optional_fields():
    text = "\n".join(l for l in reference_arch_text().splitlines()
                     if not l.startswith(("cluster_size", "sb3d_fraction", "vertical_track_ratio")))
    a = load_arch(text)
    assert a.cluster_size == 1
    assert a.vertical_track_ratio == 0.5
    assert a.sb3d_fraction == pytest.approx(1 / 3)


def _edit(old, new):
    text = reference_arch_text()
    assert old in text
    return text.replace(old, new)


def test_bad_mix():
    with pytest.raises(InvariantViolation) as exc:
        load_arch(_edit("4 = 0.2", "4 = 0.1"))
    assert exc.value.field == "segment_mix"


def test_missing_and_unknown():
    with pytest.raises(MissingField):
        load_arch(_edit("lut_size = 6", ""))
    with pytest.raises(UnknownKey):
        load_arch(_edit("lut_size = 6", "lut_size = 6\nlut_sise = 6"))
    with pytest.raises(MissingField):
        load_arch(_edit("t_tsv = 2.0e-11", ""))
    with pytest.raises(InvariantViolation):
        load_arch(_edit("lut_size = 6", "lut_size = 1"))
    with pytest.raises(InvariantViolation):
        load_arch(_edit("r = 0.35", "r = 0.0"))
    with pytest.raises(InvariantViolation):
        load_arch(_edit("vertical_track_ratio = 0.5", "vertical_track_ratio = 1.5"))


def test_is_3d_sb_examples():
    a = make_arch(grid_x=8, grid_y=8)
    assert is_3d_sb(0, 0, a)
    assert not is_3d_sb(1, 0, a)
    with pytest.raises(OutOfGrid):
        is_3d_sb(9, 0, a)
    with pytest.raises(OutOfGrid):
        is_3d_sb(-1, 0, a)
    # 9x9 switch-box grid
    frac = sum(is_3d_sb(x, y, a) for x in range(9) for y in range(9)) / 81
    assert 0.30 <= frac <= 0.37


@given(st.integers(6, 40), st.integers(6, 40))
def test_3d_fraction_property(gx, gy):
    a = make_arch(grid_x=gx - 1, grid_y=gy - 1)
    frac = sum(is_3d_sb(x, y, a) for x in range(gx) for y in range(gy)) / (gx * gy)
    assert 0.30 <= frac <= 0.37


def test_dmax_examples():
    assert manhattan_dmax(10, 10, 1, 20) == 20
    assert manhattan_dmax(10, 10, 4, 20) == 80
    X, delta = 18, 1
    half_grid_bound = 2 * (X / 2 + delta) + 3 * 20
    assert half_grid_bound == 80 == manhattan_dmax(X / 2 + delta, X / 2 + delta, 4, 20)
    assert dmax(make_arch(grid_x=10, grid_y=10, tiers=4)) == 20 + 3 * 2


@given(st.integers(0, 50), st.integers(0, 50), st.integers(1, 8), st.integers(0, 50))
def test_dmax_monotone(x, y, n, h):
    d = manhattan_dmax(x, y, n, h)
    assert manhattan_dmax(x + 1, y, n, h) >= d
    assert manhattan_dmax(x, y + 1, n, h) >= d
    assert manhattan_dmax(x, y, n + 1, h) >= d
    assert manhattan_dmax(x, y, n, h + 1) >= d
    assert manhattan_dmax(x, y, 1, h) == x + y


def test_sb_switch_count_examples():
    assert sb_switch_count(24, False) == 36
    assert sb_switch_count(24, True) == 60
    assert sb_switch_count(1, False) == 2


@given(st.integers(1, 10_000))
def test_sb_switch_count_formula(w):
    assert sb_switch_count(w, False) == math.floor(1.5 * w + 0.5)
    assert sb_switch_count(w, True) == math.floor(2.5 * w + 0.5)
    assert sb_switch_count(w, True) - sb_switch_count(w, False) == w


def test_tsv_rc_delay():
    assert tsv_rc_delay(TsvParams(0.35, 3e-15, 2, 4, 20)) == 1.05e-15
    assert tsv_rc_delay(TsvParams(1.0, 1e-15, 2, 4, 20)) == 1e-15


def test_track_allocation(ref_arch):
    assert track_allocation(ref_arch, 10) == {1: 5, 2: 3, 4: 2}
    for w in range(2, 60, 2):
        alloc = track_allocation(ref_arch, w)
        assert sum(alloc.values()) == w
        assert set(alloc) == set(SEGMENT_LENGTHS)
        assert all(v >= 0 for v in alloc.values())


def test_tsv_tracks():
    a = make_arch(vertical_track_ratio=0.5)
    assert tsv_tracks(a, 4) == 2
    assert tsv_tracks(a, 6) == 3
    assert tsv_tracks(make_arch(vertical_track_ratio=0.3), 10) == 3
