import itertools
import json
import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from mfisp import freqplan, kmatrix, specfun, sve
from mfisp.errors import PlanError, UsageError


def _brute_min_cover(ks, delta):
    """Smallest stab set by exhaustive search over stabs at k_i + delta - tiny."""
    ks = np.sort(ks)
    cands = np.concatenate([ks, ks + delta * (1 - 1e-9)])
    for size in range(1, ks.size + 1):
        for combo in itertools.combinations(cands, size):
            c = np.array(combo)
            if np.all(np.min(np.abs(ks[:, None] - c[None]), axis=1) < delta):
                return size
    return ks.size


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=6, unique=True), st.floats(0.1, 3))
def test_subcover_is_minimal(ks, delta):
    ks = np.array(ks)
    pts = freqplan.minimal_subcover(ks, delta)
    assert np.all(np.min(np.abs(ks[:, None] - pts[None]), axis=1) < delta)
    assert pts.size == _brute_min_cover(ks, delta)
    assert pts.min() >= ks.min() and pts.max() <= ks.max()


def test_tiny_delta_keeps_every_frequency():
    plan = freqplan.build_plan(3, 3, delta_k=1e-9)
    assert plan.q_s.size == 12


def test_assignment_ties_go_to_smaller():
    out = freqplan.assign_frequencies(np.array([1.0, 2.0]), np.array([0.5, 1.5, 2.5]))
    np.testing.assert_array_equal(out, [0.5, 1.5])
    with pytest.raises(PlanError):
        freqplan.assign_frequencies(np.array([1.0]), np.array([2.0]), 0.5)


def _dominance_sides_mp(row, i, x, mu):
    x2 = mpmath.mpf(x) ** 2
    rhs = mpmath.mpf(0)
    if i > 0:
        a = row[i - 1]
        rhs += mu / 2 * mpmath.log((x2 - row[0] ** 2) / (x2 - a * a)) + a / (x2 - a * a)
    if i < len(row) - 1:
        b = row[i + 1]
        rhs += mu / 2 * mpmath.log((row[-1] ** 2 - x2) / (b * b - x2)) + b / (b * b - x2)
    return abs(row[i] / (x2 - row[i] ** 2)), rhs


def test_perturbation_bound_edge_in_high_precision():
    # the (0, 1) index carries the minimum; the inequality flips within the tolerance
    row = [mpmath.mpf(z) for z in sp.jn_zeros(0, 3)]
    mu = 1 / (row[1] - row[0])
    d, per = freqplan.lemma1_delta(3, 3, 1.0)
    assert d == min(per.values()) == per[(0, 1)]
    for sgn in (1, -1):
        lhs, rhs = _dominance_sides_mp(row, 0, row[0] + sgn * (d - 1e-5), mu)
        assert lhs >= rhs
    worst = min(float(l - r) for l, r in (_dominance_sides_mp(row, 0, row[0] + s * (d + 1e-5), mu) for s in (1, -1)))
    assert worst < 0


@pytest.mark.parametrize("M,N", [(3, 3), (5, 5)])
def test_random_perturbations_within_delta_keep_k_dominant(M, N):
    rng = np.random.default_rng(M)
    d, _ = freqplan.lemma1_delta(M, N, 1.0)
    q = freqplan.full_frequency_set(M, N, 1.0)
    for _ in range(5):
        kt = q + rng.uniform(-d, d, q.shape) * 0.999
        blocks = [[[kmatrix.k_entry(m, n, kt[m, i], 1.0) for n in range(1, N + 1)] for i in range(N)]
                  for m in range(M + 1)]
        assert kmatrix.dominance_report(np.array(blocks)).min() > 0


def test_fast_mode_agrees():
    assert freqplan.lemma1_delta(7, 7, 1.0, fast=True)[0] == pytest.approx(freqplan.lemma1_delta(7, 7, 1.0)[0])


def test_delta_scales_with_radius():
    assert freqplan.lemma1_delta(3, 3, 2.0)[0] == pytest.approx(freqplan.lemma1_delta(3, 3, 1.0)[0] / 2, abs=2e-6)


def test_plan_gate_and_wide():
    with pytest.raises(PlanError):
        freqplan.build_plan(3, 3, delta_k=1.5)
    wide = freqplan.build_plan(3, 3, delta_k=1.5, allow_wide=True)
    assert not wide.theorem2_gated
    auto = freqplan.build_plan(3, 3)
    assert auto.theorem2_gated and auto.delta_k <= 1.0
    with pytest.raises(PlanError):
        freqplan.build_plan(3, 3, delta_k=0.0)
    with pytest.raises(PlanError):
        freqplan.build_plan(3, 3, R0=2.0, R=1.5)


def test_plan_roundtrip_and_provenance():
    plan = freqplan.build_plan(4, 3, delta_k=0.5)
    back = freqplan.FrequencyPlan.from_dict(json.loads(json.dumps(plan.to_dict())))
    np.testing.assert_array_equal(back.q_s, plan.q_s)
    np.testing.assert_array_equal(back.assignment, plan.assignment)
    assert back.provenance["zero_table_sha256"] == specfun.zero_table(4, 3).digest()
    assert back.provenance["delta_source"] == "explicit"
    with pytest.raises(PlanError):
        freqplan.FrequencyPlan.from_dict({"M": 1})


def test_plan_indices_at_partition():
    plan = freqplan.build_plan(5, 5, delta_k=0.75)
    seen = sorted(ix for k in plan.q_s for ix in plan.indices_at(k))
    assert seen == [(m, n) for m in range(6) for n in range(1, 6)]


def test_density_estimate_against_scipy_count():
    d = freqplan.density_estimate(15.0, 1.0)
    exact = sum(int(np.sum(np.abs(sp.jn_zeros(m, 10) - 15.0) < 1.0)) for m in range(20))
    assert d.exact_count == exact
    assert d.estimate == pytest.approx(freqplan.density_order_bound(15.0) * 2 / math.pi)
    with pytest.raises(UsageError):
        freqplan.density_estimate(-1.0, 0.5)


def test_gap_stats_reduced_range():
    mx, mean, std = freqplan.zero_gap_stats(50, 200.0)
    z = np.sort(np.concatenate([sp.jn_zeros(m, 70) for m in range(51)]))
    gaps = np.diff(z[z < 200.0])
    assert mx == pytest.approx(gaps.max(), rel=1e-10)
    assert mean == pytest.approx(gaps.mean(), rel=1e-10)
    # the largest gap sits between the two smallest zeros overall
    assert mx == pytest.approx(specfun.bessel_zero(1, 1) - specfun.bessel_zero(0, 1), rel=1e-12)


def test_density_estimate_tracks_count_on_average():
    # pointwise counts in a window of width 1 fluctuate; a 5-point moving
    # average of the sweep stays well inside a factor of 2
    sweep = freqplan.density_sweep()
    a = np.array([d.alpha for d in sweep])
    est = np.convolve([d.estimate for d in sweep], np.ones(5) / 5, "valid")
    exact = np.convolve([d.exact_count for d in sweep], np.ones(5) / 5, "valid")
    sel = a[2:-2] > 10
    ratio = est[sel] / exact[sel]
    assert ratio.min() > 0.5 and ratio.max() < 2.0


TABLE1_LADDER = (1e-9, 0.25, 0.5, 0.75, 1.0, 1.25)


def test_reduction_table_small_space():
    q = freqplan.full_frequency_set(7, 7, 1.0)
    sizes = [freqplan.minimal_subcover(q, d).size for d in TABLE1_LADDER]
    assert sizes == [56, 35, 23, 17, 13, 11]


def test_reduction_table_large_space():
    # counts of a few hundred are sensitive to open/closed interval conventions
    q = freqplan.full_frequency_set(50, 50, 1.0)
    sizes = np.array([freqplan.minimal_subcover(q, d).size for d in TABLE1_LADDER])
    published = np.array([2550, 382, 210, 143, 108, 88])
    assert sizes[0] == 2550
    assert np.all(np.abs(sizes - published) <= 0.02 * published)


def test_single_order_gaps_approach_pi():
    z = freqplan.merged_zeros(0, 2000.0)
    assert abs(np.diff(z)[-1] - math.pi) < 1e-4


def test_gap_statistics_shrink_with_more_orders():
    mx50, mean50, _ = freqplan.zero_gap_stats(50, 200.0)
    _, mean20, _ = freqplan.zero_gap_stats(20, 200.0)
    assert mx50 < 1.5
    assert mean50 < mean20
    assert np.all(np.diff(freqplan.merged_zeros(50, 200.0)) > 0)


def test_subcover_size_monotone_in_delta():
    q = freqplan.full_frequency_set(3, 3, 1.0)
    sizes = [freqplan.minimal_subcover(q, d).size for d in np.linspace(0.05, 3, 60)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_full_frequency_set_sizes_and_scaling():
    assert freqplan.full_frequency_set(7, 7, 1.0).size == 56
    assert freqplan.full_frequency_set(50, 50, 1.0).size == 2550
    np.testing.assert_allclose(freqplan.full_frequency_set(4, 4, 2.0), freqplan.full_frequency_set(4, 4, 1.0) / 2)


def test_single_radial_index_limited_by_cap():
    _, per = freqplan.lemma1_delta(3, 1, 1.0)
    for m in range(4):
        assert per[(m, 1)] == pytest.approx(specfun.bessel_zero(m, 1), abs=2e-6)


def test_perturbation_bound_dense_scan_m7():
    # inequality holds on a 1e-4 grid below the reported delta for every (m, i)
    d, _ = freqplan.lemma1_delta(7, 7, 1.0)
    q = freqplan.full_frequency_set(7, 7, 1.0)
    grid = np.arange(1e-4, d, 1e-4)
    for m in range(8):
        mu = freqplan._mu(m, 1.0)
        for i in range(7):
            assert np.all(freqplan.lemma1_holds(q[m], i, grid, mu))


def test_table2_sizes_and_assignment():
    q = freqplan.full_frequency_set(3, 3, 1.0)
    assert [freqplan.minimal_subcover(q, d).size for d in (0.25, 0.5, 0.75, 0.91, 1.5)] == [9, 8, 6, 5, 4]
    plan = freqplan.build_plan(3, 3, delta_k=0.91, allow_wide=True)
    assert np.all(np.abs(plan.assignment - plan.q_mn) < 0.91)
    # Q_r has repeats
    assert np.unique(plan.assignment).size < plan.assignment.size


def test_identity_assignment_and_tiny_delta():
    q = freqplan.full_frequency_set(7, 7, 1.0)
    pts = freqplan.minimal_subcover(q, 1e-9)
    np.testing.assert_allclose(pts, np.sort(q.ravel()), atol=1e-8)
    np.testing.assert_array_equal(freqplan.assign_frequencies(q, np.sort(q.ravel())), q)


def test_density_anchor_values():
    assert freqplan.density_estimate(10.0, 1.6).estimate == pytest.approx(5 * 3.2 / math.pi)
    assert freqplan.density_estimate(2.41, 0.05).exact_count >= 1
