import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctcfuse.windowing import Mode, WindowConfig, coverage, plan


def spans(windows):
    return [(w.start, w.end) for w in windows]


def test_offline_paper_setup():
    # 20 s window, 18 s stride at 25 frames/s
    assert spans(plan(WindowConfig(500, 450), 1000)) == [(0, 500), (450, 950), (900, 1400)]


def test_disjoint_tiling():
    assert spans(plan(WindowConfig(4, 4), 8)) == [(0, 4), (4, 8)]


def test_streaming_plan():
    ws = plan(WindowConfig(4, 2, Mode.STREAMING), 5)
    assert spans(ws) == [(-4, 0), (-2, 2), (0, 4), (2, 6), (4, 8)]
    assert [w.index for w in ws] == [1, 2, 3, 4, 5]


def test_empty_input():
    assert plan(WindowConfig(4, 2), 0) == []


@pytest.mark.parametrize("bad", [(0, 1), (4, 0), (4, 5)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        WindowConfig(*bad)


def test_coverage_examples():
    cfg = WindowConfig(500, 450)
    ws = plan(cfg, 1000)
    c = coverage(cfg, ws, 475)
    assert c.windows == (1, 2) and c.rels == (475, 25)
    c = coverage(cfg, ws, 100)
    assert c.windows == (1,) and c.rels == (100,)


def test_coverage_disjoint():
    cfg = WindowConfig(6, 6)
    ws = plan(cfg, 30)
    assert all(len(coverage(cfg, ws, t).windows) == 1 for t in range(30))


def brute_cover(ws, t):
    return tuple(w.index for w in ws if w.start <= t < w.end)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 40), st.data(), st.integers(0, 200), st.sampled_from(list(Mode)))
def test_coverage_properties(W, data, T, mode):
    S = data.draw(st.integers(1, W))
    cfg = WindowConfig(W, S, mode)
    ws = plan(cfg, T)
    for t in range(T):
        c = coverage(cfg, ws, t)
        assert c.windows == brute_cover(ws, t)  # exact set, contiguous
        assert len(c.windows) >= 1
        assert all(0 <= r < W for r in c.rels)
        assert all(a - b == S for a, b in zip(c.rels, c.rels[1:]))
        # interior frames: every window around t exists on both sides
        if c.windows[0] > 1 and c.windows[-1] < len(ws):
            assert len(c.windows) in (W // S, math.ceil(W / S))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.data(), st.integers(0, 150))
def test_streaming_matches_shifted_offline(W, data, T):
    S = data.draw(st.integers(1, W))
    stream = plan(WindowConfig(W, S, Mode.STREAMING), T)
    offline = plan(WindowConfig(W, S), T + W)
    # streaming windows on the original timeline == offline windows on a W-padded timeline
    assert [(w.start + W, w.end + W) for w in stream] == spans(offline)[: len(stream)]
    inside = [(w.start, w.end) for w in stream if w.start >= 0 and w.end <= T]
    if W % S == 0:
        assert inside == [s for s in spans(plan(WindowConfig(W, S), T)) if s[1] <= T]
