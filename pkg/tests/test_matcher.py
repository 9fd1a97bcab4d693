import numpy as np
import pytest

from ccwsim.errors import DimensionError, EmptyInputError, StructureError
from ccwsim.grid import CategoricalGrid, HardDataSet
from ccwsim.matcher import (
    CandidateSet,
    ScoreMap,
    ccw_score_map,
    multichannel_score_map,
    select_conditional,
    select_unconditional,
    top_k,
)


def quadruple_loop(ti, tpl, mask):
    H, W = ti.shape
    th, tw = tpl.shape
    out = np.zeros((H - th + 1, W - tw + 1))
    for x in range(H - th + 1):
        for y in range(W - tw + 1):
            acc = 0.0
            for s in range(th):
                for t in range(tw):
                    if mask[s, t]:
                        acc += ti[x + s, y + t] * tpl[s, t]
            out[x, y] = acc
    return out


def test_zero_template_gives_zero_map(rng):
    ti = rng.normal(size=(10, 12))
    sm = ccw_score_map(ti, np.zeros((3, 3)), np.ones((3, 3)))
    assert sm.shape == (8, 10)
    assert np.all(sm.scores == 0)


def test_self_product_at_copy_location(rng):
    ti = rng.normal(size=(16, 16))
    crop = ti[5:9, 7:11].copy()
    sm = ccw_score_map(ti, crop, np.ones((4, 4)))
    assert sm.scores[5, 7] == pytest.approx(np.sum(crop ** 2), abs=1e-9)


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_matches_quadruple_loop(rng, method):
    ti = rng.normal(size=(16, 16))
    tpl = rng.normal(size=(4, 4))
    mask = np.ones((4, 4))
    got = ccw_score_map(ti, tpl, mask, method=method).scores
    assert np.max(np.abs(got - quadruple_loop(ti, tpl, mask))) < 1e-9


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_masked_template(rng, method):
    ti = rng.normal(size=(20, 14))
    tpl = rng.normal(size=(6, 6))
    mask = np.zeros((6, 6))
    mask[:2, :] = 1
    mask[:, :2] = 1
    got = ccw_score_map(ti, tpl, mask, method=method).scores
    assert np.max(np.abs(got - quadruple_loop(ti, tpl, mask))) < 1e-9


def test_size_errors(rng):
    with pytest.raises(DimensionError):
        ccw_score_map(np.zeros((4, 4)), np.zeros((5, 2)))
    with pytest.raises(StructureError):
        ccw_score_map(np.zeros((8, 8)), np.zeros((3, 3)), np.ones((2, 3)))


def test_multichannel_sums_channels(rng):
    ti = [rng.normal(size=(12, 12)) for _ in range(3)]
    tpl = [rng.normal(size=(4, 4)) for _ in range(3)]
    mask = np.ones((4, 4))
    total = multichannel_score_map(ti, tpl, mask).scores
    expected = sum(quadruple_loop(a, b, mask) for a, b in zip(ti, tpl))
    assert np.max(np.abs(total - expected)) < 1e-9


def test_normalized_scoring(rng):
    ti = [rng.random(size=(10, 10)) for _ in range(2)]
    tpl = [rng.random(size=(3, 3)) for _ in range(2)]
    mask = np.zeros((3, 3))
    mask[0, :] = 1
    raw = multichannel_score_map(ti, tpl, mask).scores
    norm = multichannel_score_map(ti, tpl, mask, scoring="normalized").scores
    energy = sum(quadruple_loop(a ** 2, mask, mask) for a in ti)
    assert np.max(np.abs(norm - raw / np.sqrt(energy))) < 1e-9


def test_top_k_enumeration():
    cands = top_k(ScoreMap(np.array([[3.0, 1.0], [2.0, 5.0]])), 2)
    assert cands.entries == [((1, 1), 5.0), ((0, 0), 3.0)]


def test_top_k_ties_row_major():
    cands = top_k(ScoreMap(np.ones((3, 4))), 3)
    assert cands.locations == [(0, 0), (0, 1), (0, 2)]


def test_top_k_more_than_available():
    cands = top_k(ScoreMap(np.array([[1.0, 2.0]])), 5)
    assert cands.locations == [(0, 1), (0, 0)]


def test_top_k_matches_full_sort(rng):
    scores = rng.integers(0, 6, size=(20, 20)).astype(float)  # many ties
    cands = top_k(ScoreMap(scores), 7)
    full = sorted(((-scores[i, j], i, j) for i in range(20) for j in range(20)))
    assert cands.locations == [(i, j) for _, i, j in full[:7]]
    assert cands.scores == [-s for s, _, _ in full[:7]]


def test_top_k_errors():
    with pytest.raises(EmptyInputError):
        top_k(ScoreMap(np.zeros((0, 0))), 1)
    with pytest.raises(ValueError):
        top_k(ScoreMap(np.zeros((2, 2))), 0)


def test_select_unconditional_single_and_deterministic():
    one = CandidateSet([(4, 2)], [1.0])
    for seed in range(5):
        assert select_unconditional(one, np.random.default_rng(seed)) == (4, 2)
    two = CandidateSet([(0, 0), (1, 1)], [2.0, 1.0])
    picks = [select_unconditional(two, np.random.default_rng(99)) for _ in range(3)]
    assert len(set(picks)) == 1
    with pytest.raises(EmptyInputError):
        select_unconditional(CandidateSet([], []), np.random.default_rng(0))


def test_select_unconditional_uniform():
    cands = CandidateSet([(0, 0), (0, 1), (1, 0), (1, 1)], [4.0, 3.0, 2.0, 1.0])
    rng = np.random.default_rng(7)
    draws = [select_unconditional(cands, rng) for _ in range(10_000)]
    for loc in cands.locations:
        assert abs(draws.count(loc) / 10_000 - 0.25) < 0.02


def _fixture_ti():
    # three candidate patterns at coarse columns 0, 2, 4 (J=1 -> fine columns 0, 4, 8)
    cells = np.zeros((4, 12), dtype=int)
    cells[1, 9] = 1          # only the 3rd candidate has sand at local (1, 1)
    cells[0, 4:6] = 1        # 2nd candidate: sand at local (0,0), (0,1)
    cells[0, 8] = 1          # 3rd candidate: sand at local (0,0)
    return CategoricalGrid(cells, 2)


CANDS = CandidateSet([(0, 0), (0, 2), (0, 4)], [9.0, 8.0, 7.0])


def test_conditional_without_data_takes_best():
    loc, mism = select_conditional(CANDS, HardDataSet(), _fixture_ti(), 1)
    assert (loc, mism) == ((0, 0), 0)


def test_conditional_scans_to_matching_candidate():
    loc, mism = select_conditional(CANDS, HardDataSet(((1, 1, 1),)), _fixture_ti(), 1)
    assert (loc, mism) == ((0, 4), 0)


def test_conditional_unsatisfiable_minimizes_mismatch():
    ti = _fixture_ti()
    hd = HardDataSet(((0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 0)))
    # exhaustive count by hand-style loop
    counts = []
    for (r, c) in CANDS.locations:
        fr, fc = 2 * r, 2 * c
        counts.append(sum(int(ti.cells[fr + dr, fc + dc] != f) for dr, dc, f in hd))
    assert min(counts) > 0
    best = counts.index(min(counts))
    loc, mism = select_conditional(CANDS, hd, ti, 1)
    assert loc == CANDS.locations[best] and mism == min(counts)


def test_conditional_tie_prefers_higher_score():
    ti = CategoricalGrid(np.zeros((2, 8), dtype=int), 2)
    cands = CandidateSet([(0, 3), (0, 1), (0, 0)], [3.0, 2.0, 1.0])
    loc, mism = select_conditional(cands, HardDataSet(((0, 0, 1),)), ti, 1)
    assert (loc, mism) == ((0, 3), 1)


def test_conditional_never_skips_zero_mismatch(rng):
    for _ in range(50):
        ti = CategoricalGrid(rng.integers(0, 2, size=(16, 16)), 2)
        locs = [tuple(map(int, rng.integers(0, 7, size=2))) for _ in range(6)]
        locs = list(dict.fromkeys(locs))
        cands = CandidateSet(locs, sorted(rng.random(len(locs)).tolist(), reverse=True))
        hd = HardDataSet(tuple((int(r), int(c), int(f)) for r, c, f in
                               zip(*np.unravel_index(rng.choice(16, 3, replace=False), (4, 4)),
                                   rng.integers(0, 2, 3))))
        loc, mism = select_conditional(cands, hd, ti, 1)
        zero = [l for l in locs if all(ti.cells[2 * l[0] + r, 2 * l[1] + c] == f for r, c, f in hd)]
        if zero:
            assert mism == 0 and loc == zero[0]


def test_conditional_empty_raises():
    with pytest.raises(EmptyInputError):
        select_conditional(CandidateSet([], []), HardDataSet(), _fixture_ti(), 1)
