import json

import pytest
from hypothesis import given, strategies as st

from fpga3d.arch import is_3d_sb, sb_switch_count
from fpga3d.errors import StageMissing
from fpga3d.metrics import (FlowMetrics, channel_segments_per_tier, chart_series,
                            collect_metrics, comparison_table, emit_report,
                            metrics_from_artifacts, parse_machine_report, percent_delta,
                            summary_by_tiers, transistor_count)
from fpga3d.netlist import build_graph, pack_blocks, parse_blif
from fpga3d.partition import anneal_partition
from fpga3d.place import anneal_placement, auto_grid
from fpga3d.route import dump_routing, route_nets, routing_summary
from fpga3d.rrg import build_rrg
from fpga3d.sa import SaSchedule
from fpga3d.synth import synthetic_blif
from fpga3d.timing import build_timing_graph, critical_path, timing_summary

from .conftest import make_arch


def small_flow(tiers=2, n_luts=25, seed=4, w=8):
    bn = pack_blocks(parse_blif(synthetic_blif(n_luts, seed=seed)))
    pr = anneal_partition(build_graph(bn), tiers, SaSchedule(seed=seed))
    side = auto_grid(bn, pr.partition)
    arch = make_arch(tiers=tiers, grid_x=side, grid_y=side)
    pl = anneal_placement(bn, pr.partition, arch, SaSchedule(seed=seed)).placement
    rrg = build_rrg(arch, w)
    res = route_nets(rrg, pl, bn)
    tg = build_timing_graph(bn, arch.delays, res.connection_delay)
    rep = critical_path(tg)
    return bn, pr, arch, pl, rrg, res, tg, rep


def test_single_sb_no_clb():
    assert transistor_count(make_arch(grid_x=0, grid_y=0), 24) == 36


def test_site_by_site_sum():
    a = make_arch(tiers=2, grid_x=2, grid_y=2)
    # 3x3 switch-box grid; only (0,0) and the anti-diagonal sites with x+y = 3 are 3D
    sites = [(x, y) for x in range(3) for y in range(3)]
    n3d = [s for s in sites if is_3d_sb(*s, a)]
    assert n3d == [(0, 0), (1, 2), (2, 1)]
    sb = 3 * sb_switch_count(10, True) + 6 * sb_switch_count(10, False)
    assert sb == 3 * 25 + 6 * 15
    clb = 4 * 1700
    cb = channel_segments_per_tier(a) * 10 * 6
    assert channel_segments_per_tier(a) == 12
    assert transistor_count(a, 10) == 2 * (sb + clb + cb)


def test_two_tier_additivity():
    one = make_arch(tiers=1, grid_x=5, grid_y=5)
    two = make_arch(tiers=2, grid_x=5, grid_y=5)
    w = 12
    extra = sum(sb_switch_count(w, True) - sb_switch_count(w, False)
                for x in range(6) for y in range(6) if is_3d_sb(x, y, two))
    assert transistor_count(two, w) == 2 * transistor_count(one, w) + 2 * extra


@given(st.integers(1, 60), st.integers(1, 4), st.integers(1, 8))
def test_strictly_increasing(w, tiers, side):
    a = make_arch(tiers=tiers, grid_x=side, grid_y=side)
    assert transistor_count(a, w + 1) > transistor_count(a, w)
    assert transistor_count(a.with_tiers(tiers + 1), w) > transistor_count(a, w)


def test_bad_width():
    with pytest.raises(ValueError):
        transistor_count(make_arch(), 0)


def test_report_row_values():
    m = FlowMetrics(circuit="ex5p", tiers=2, cpd=2.58e-9, wmin=18)
    text = emit_report(m, "text")
    row = text.splitlines()[1].split()
    assert row[:4] == ["ex5p", "2", "2.58", "18"]


def test_empty_metrics():
    text = emit_report(FlowMetrics(), "text")
    assert text.splitlines()[1].split() == ["-", "1", "0", "0", "0.0000", "0", "0", "0"]
    assert parse_machine_report(emit_report(FlowMetrics(), "machine")) == FlowMetrics()


def test_machine_round_trip():
    m = FlowMetrics("c", 2, 5, 5, 7, 9, 12, 1.234e-9, 300, 123456, [10, 11], [150, 150], [9])
    assert parse_machine_report(emit_report(m, "machine")) == m
    with pytest.raises(ValueError):
        emit_report(m, "xml")


def test_collect_metrics_flow():
    bn, pr, arch, pl, rrg, res, tg, rep = small_flow()
    m = collect_metrics(pr.partition, pr.cut, pl, rrg, res, rep, arch, bn, "syn")
    assert m.tsv_cut == pr.cut
    assert m.cpd == rep.cpd and m.wmin == 8
    assert sum(m.clbs_per_tier) == len(bn.clb_ids())
    assert m.tsv_used == sum(m.tsv_per_boundary)
    # each tier-crossing net needs at least its tier span in TSV nodes
    spans = 0
    for net in bn.routed_nets():
        zs = [pl.location_of[b][2] for b in net.terminals()]
        spans += max(zs) - min(zs)
    assert m.tsv_used >= spans
    # re-walk of the routing dump: sum the length column of planar wire lines
    wl = 0
    for line in dump_routing(rrg, res).splitlines():
        parts = line.split()
        if len(parts) == 8 and parts[2] in ("wire_x", "wire_y"):
            wl += int(parts[7])
    assert m.total_wirelength == wl
    # the on-disk path gives the same metrics
    again = metrics_from_artifacts(bn, pl, pr.cut, json.loads(json.dumps(routing_summary(rrg, res))),
                                   timing_summary(tg, rep), arch, "syn")
    assert again == m


def test_single_tier_flow_has_no_tsvs():
    bn, pr, arch, pl, rrg, res, tg, rep = small_flow(tiers=1)
    m = collect_metrics(pr.partition, pr.cut, pl, rrg, res, rep, arch, bn)
    assert m.tsv_used == 0 and m.tsv_cut == 0


def test_stage_missing():
    bn, pr, arch, pl, rrg, res, tg, rep = small_flow(tiers=1, n_luts=8)
    with pytest.raises(StageMissing):
        collect_metrics(pr.partition, pr.cut, pl, rrg, res, None, arch, bn)
    with pytest.raises(StageMissing):
        metrics_from_artifacts(bn, pl, pr.cut, None, {}, arch)


def test_percent_delta_sign():
    assert percent_delta(100, 110) == pytest.approx(10.0)
    assert percent_delta(100, 90) == pytest.approx(-10.0)
    assert percent_delta(0, 5) == 0.0


def test_comparison_and_charts():
    a = [FlowMetrics("c1", 2, cpd=2e-9, wmin=10, transistor_total=100)]
    b = [FlowMetrics("c1", 4, cpd=1e-9, wmin=12, transistor_total=110)]
    table = comparison_table(a, b)
    assert "CPD -50.00" in table and "W_min +20.00" in table and "Area +10.00" in table
    csv_text = chart_series(a + b)
    assert csv_text.splitlines()[0] == "circuit,metric,tiers,value"
    assert "c1,wmin,4,12" in csv_text
    summ = summary_by_tiers(a + b)
    assert summ[2]["wmin"] == 10 and summ[4]["cpd"] == 1e-9
