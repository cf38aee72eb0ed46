import random

import pytest
from hypothesis import given, settings, strategies as st

from fpga3d.arch import DelayModel
from fpga3d.errors import CombinationalLoop
from fpga3d.netlist import pack_blocks, parse_blif
from fpga3d.timing import (TimingGraph, build_timing_graph, connection_criticalities,
                           critical_path, timing_report_text, timing_summary)

from .conftest import CHAIN3_BLIF, LATCH_BLIF
from .oracles import all_path_delays, longest_path_enumeration, random_dag

NS = 1e-9
CHAIN_DELAYS = DelayModel(t_lut=0.2 * NS, t_ff_clk_to_q=0.1 * NS, t_ff_setup=0.05 * NS,
                          t_seg={1: 0.1 * NS, 2: 0.15 * NS, 4: 0.25 * NS},
                          t_sb_switch=0.0, t_cb=0.0, t_tsv=0.0)


def every_connection(blocks, d):
    return {(n.id, i): d for n in blocks.nets for i in range(len(n.sinks))}


def test_single_edge():
    rep = critical_path(TimingGraph.from_edges(2, [(0, 1, 3e-10)]))
    assert rep.cpd == 3e-10
    assert rep.edge_slack == [0.0] and rep.edge_criticality == [1.0]
    assert rep.path == [0, 1]


def test_single_lut_between_pads():
    bn = pack_blocks(parse_blif(".model c\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n"))
    tg = build_timing_graph(bn, CHAIN_DELAYS, {})
    assert critical_path(tg).cpd == CHAIN_DELAYS.t_lut


def test_three_lut_chain():
    bn = pack_blocks(parse_blif(CHAIN3_BLIF))
    tg = build_timing_graph(bn, CHAIN_DELAYS, every_connection(bn, CHAIN_DELAYS.seg(1)))
    rep = critical_path(tg)
    assert rep.cpd == pytest.approx(0.9 * NS, abs=1e-21)
    assert rep.path_names()[0] == "pi:a" and rep.path_names()[-1] == "po:y"
    # the pad-driven connection is zeroed even when a delay is supplied
    with_pad = build_timing_graph(bn, CHAIN_DELAYS, every_connection(bn, CHAIN_DELAYS.seg(1)),
                                  pad_input_delay=True)
    assert critical_path(with_pad).cpd == pytest.approx(1.0 * NS, abs=1e-21)


def test_parallel_paths():
    # 0 -> 1 -> 3 is 0.9 ns, 0 -> 2 -> 3 is 0.5 ns
    tg = TimingGraph.from_edges(4, [(0, 1, 0.4 * NS), (1, 3, 0.5 * NS),
                                    (0, 2, 0.2 * NS), (2, 3, 0.3 * NS)])
    rep = critical_path(tg)
    assert rep.cpd == pytest.approx(0.9 * NS)
    assert rep.edge_slack[2] == pytest.approx(0.4 * NS)
    assert rep.edge_criticality[2] == pytest.approx(1 - 0.4 / 0.9)
    assert round(rep.edge_criticality[2], 3) == 0.556
    assert rep.edge_criticality[0] == rep.edge_criticality[1] == 1.0


def test_combinational_loop():
    text = ".model c\n.inputs a\n.outputs y\n.names a z x\n11 1\n.names x z\n1 1\n" \
           ".names z y\n1 1\n.end\n"
    bn = pack_blocks(parse_blif(text))
    with pytest.raises(CombinationalLoop) as exc:
        critical_path(build_timing_graph(bn, CHAIN_DELAYS, {}))
    assert any("x" in n for n in exc.value.cycle)


def test_latch_splits_paths():
    bn = pack_blocks(parse_blif(LATCH_BLIF))
    d = CHAIN_DELAYS
    rep = critical_path(build_timing_graph(bn, d, every_connection(bn, 0.0)))
    # a,b -> n1 -> d -> capture: 2 LUTs + setup; q -> z: clk-to-q + 1 LUT
    assert rep.cpd == pytest.approx(max(2 * d.t_lut + d.t_ff_setup, d.t_ff_clk_to_q + d.t_lut))
    names = build_timing_graph(bn, d, {}).names
    assert "launch:q" in names and "capture:q" in names


@pytest.mark.parametrize("seed", range(50))
def test_cpd_matches_enumeration(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 15)
    edges = random_dag(rng, n)
    rep = critical_path(TimingGraph.from_edges(n, edges))
    assert abs(rep.cpd - longest_path_enumeration(n, edges)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 12))
def test_slack_invariants(seed, n):
    rng = random.Random(seed)
    edges = random_dag(rng, n, 0.4)
    tg = TimingGraph.from_edges(n, edges)
    rep = critical_path(tg)
    assert all(s >= 0 for s in rep.edge_slack)
    assert all(0.0 <= c <= 1.0 for c in rep.edge_criticality)
    if not edges or rep.cpd == 0:
        return
    # some complete path has zero slack on every edge
    paths = all_path_delays(n, edges)
    index = {(u, v): k for k, (u, v, _) in enumerate(edges)}
    tol = 1e-21
    assert any(all(rep.edge_slack[index[(a, b)]] <= tol for a, b in zip(p, p[1:]))
               for _, p in paths if len(p) > 1)
    # criticality is nonincreasing in slack
    pairs = sorted(zip(rep.edge_slack, rep.edge_criticality))
    assert all(c1 >= c2 - 1e-12 for (_, c1), (_, c2) in zip(pairs, pairs[1:]))
    # lengthening a critical edge lengthens the critical path
    k = next(k for k in range(len(edges)) if rep.edge_slack[k] <= tol and edges[k][2] >= 0)
    bumped = list(edges)
    u, v, d = bumped[k]
    bumped[k] = (u, v, d + 1e-10)
    assert critical_path(TimingGraph.from_edges(n, bumped)).cpd > rep.cpd


def test_summary_and_text():
    bn = pack_blocks(parse_blif(CHAIN3_BLIF))
    tg = build_timing_graph(bn, CHAIN_DELAYS, every_connection(bn, CHAIN_DELAYS.seg(1)))
    rep = critical_path(tg)
    s = timing_summary(tg, rep)
    assert s["cpd"] == rep.cpd
    assert len(s["connections"]) == len(tg.connection_edge)
    crit = connection_criticalities(tg, rep)
    assert set(crit.values()) == {1.0}
    assert timing_report_text(tg, rep).startswith("# timing cpd 0.900000 ns")
