import itertools
import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize

from rainbowbf.allocation import (
    Allocation,
    active_user_ratio,
    equal_power,
    exhaustive_search,
    jspa_greedy,
    maxch_allocate,
    read_allocation_csv,
    throughput,
    water_fill,
    write_allocation_csv,
)


def waterfill_oracle_objective(snrs, budget):
    """Independent optimum of sum log2(1 + p g): Brent root-find on the
    water level of the monotone budget equation sum [level - 1/g]+ = budget."""
    inv = 1.0 / np.asarray(snrs, dtype=np.float64)
    if budget <= 0:
        return 0.0

    def spent(level):
        return np.maximum(level - inv, 0.0).sum() - budget

    lo, hi = inv.min(), inv.max() + budget + 1.0
    level = brentq(spent, lo, hi, xtol=1e-18, rtol=1e-15, maxiter=200)
    p = np.maximum(level - inv, 0.0)
    return float(np.sum(np.log2(1.0 + p * snrs)))


class TestWaterFill:
    def test_single_subcarrier_gets_everything(self):
        res = water_fill(np.array([3.0]), 0.7)
        assert res.powers[0] == pytest.approx(0.7, rel=1e-15)

    def test_symmetric_split(self):
        res = water_fill(np.array([2.0, 2.0]), 1.0)
        np.testing.assert_allclose(res.powers, [0.5, 0.5], rtol=1e-12)

    def test_matches_convex_oracle(self):
        snrs = np.array([10.0, 1.0, 0.1])
        res = water_fill(snrs, 1.0)
        mine = np.sum(np.log2(1.0 + res.powers * snrs))
        assert mine == pytest.approx(waterfill_oracle_objective(snrs, 1.0), rel=1e-8)

    def test_matches_slsqp_spot_check(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            snrs = 10.0 ** rng.uniform(-1, 2, n)
            budget = float(10.0 ** rng.uniform(-1, 1))
            res = water_fill(snrs, budget)
            mine = np.sum(np.log2(1.0 + res.powers * snrs))
            sol = minimize(
                lambda p: -np.sum(np.log2(1.0 + p * snrs)),
                np.full(n, budget / n),
                bounds=[(0, None)] * n,
                constraints=[{"type": "ineq", "fun": lambda p: budget - p.sum()}],
                method="SLSQP",
                options={"ftol": 1e-12, "maxiter": 300},
            )
            assert mine + 1e-9 >= -sol.fun

    def test_kkt_stationarity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(1, 10))
            snrs = 10.0 ** rng.uniform(-2, 2, n)
            budget = float(10.0 ** rng.uniform(-2, 1))
            res = water_fill(snrs, budget)
            marginal = snrs / (1.0 + res.powers * snrs)
            active = res.powers > 0
            if np.any(active):
                common = marginal[active]
                assert np.ptp(common) <= 1e-8 * common.max()
                if np.any(~active):
                    assert np.all(marginal[~active] <= common.max() * (1 + 1e-8))
                assert res.powers.sum() == pytest.approx(budget, rel=1e-12)

    def test_empty_and_zero_budget(self):
        assert water_fill(np.array([]), 1.0).powers.size == 0
        res = water_fill(np.array([1.0, 2.0]), 0.0)
        np.testing.assert_array_equal(res.powers, 0.0)
        assert res.water_level == 0.0

    def test_rejects_nonpositive_snr(self):
        with pytest.raises(ValueError):
            water_fill(np.array([1.0, 0.0]), 1.0)


def random_instance(rng, k=None, m=None):
    k = k or int(rng.integers(1, 5))
    m = m or int(rng.integers(1, 9))
    gamma = 10.0 ** rng.uniform(-2, 2, (k, m))
    budgets = 10.0 ** rng.uniform(-1, 0.5, k)
    return gamma, budgets


class TestJspaGreedy:
    def test_single_user_gets_all_with_waterfilling(self):
        rng = np.random.default_rng(0)
        gamma = 10.0 ** rng.uniform(-1, 2, (1, 6))
        alloc = jspa_greedy(gamma, np.array([0.2]), np.random.default_rng(1))
        assert np.all(alloc.assign == 1)
        wf = water_fill(gamma[0], 0.2)
        np.testing.assert_allclose(alloc.power[0], wf.powers, rtol=1e-12)

    def test_orthogonal_dominance(self):
        k = 4
        gamma = np.full((k, k), 1e-3)
        np.fill_diagonal(gamma, 100.0)
        alloc = jspa_greedy(gamma, np.full(k, 0.2), np.random.default_rng(3))
        np.testing.assert_array_equal(alloc.assign, np.eye(k, dtype=np.int8))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        gamma, budgets = random_instance(rng, 4, 8)
        a = jspa_greedy(gamma, budgets, np.random.default_rng(11))
        b = jspa_greedy(gamma, budgets, np.random.default_rng(11))
        np.testing.assert_array_equal(a.assign, b.assign)
        np.testing.assert_array_equal(a.power, b.power)

    def test_structural_invariants(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            gamma, budgets = random_instance(rng)
            alloc = jspa_greedy(gamma, budgets, rng)
            assert np.all(alloc.assign.sum(axis=0) == 1)
            assert np.all(alloc.power.sum(axis=1) <= budgets + 1e-9)
            assert np.all(alloc.power[alloc.assign == 0] == 0.0)

    def test_zero_snr_column_assigned_with_zero_power(self):
        gamma = np.array([[0.0, 5.0], [0.0, 1.0]])
        alloc = jspa_greedy(gamma, np.array([0.1, 0.1]), np.random.default_rng(0))
        assert alloc.assign[:, 0].sum() == 1
        assert alloc.power[:, 0].sum() == 0.0

    def test_user_permutation_leaves_throughput_unchanged(self):
        rng = np.random.default_rng(9)
        gamma, budgets = random_instance(rng, 5, 10)
        perm = np.random.default_rng(1).permutation(5)
        a = jspa_greedy(gamma, budgets, np.random.default_rng(2))
        b = jspa_greedy(gamma[perm], budgets[perm], np.random.default_rng(2))
        t_a = throughput(a, gamma, 1e6)
        t_b = throughput(b, gamma[perm], 1e6)
        assert t_b == pytest.approx(t_a, rel=1e-9)


class TestMaxch:
    def test_single_user_matches_jspa(self):
        gamma = np.array([[3.0, 1.0, 0.5]])
        budgets = np.array([0.2])
        a = maxch_allocate(gamma, budgets)
        b = jspa_greedy(gamma, budgets, np.random.default_rng(0))
        np.testing.assert_array_equal(a.assign, b.assign)
        np.testing.assert_allclose(a.power, b.power, rtol=1e-12)

    def test_dominant_user_takes_everything(self):
        gamma = np.vstack([np.full(5, 10.0), np.full(5, 1.0)])
        alloc = maxch_allocate(gamma, np.array([0.2, 0.2]))
        assert np.all(alloc.assign[0] == 1) and np.all(alloc.assign[1] == 0)

    def test_matches_argmax_oracle(self):
        rng = np.random.default_rng(2)
        gamma, budgets = random_instance(rng, 3, 6)
        alloc = maxch_allocate(gamma, budgets)
        for m in range(6):
            expected = min(k for k in range(3) if gamma[k, m] == gamma[:, m].max())
            assert alloc.assign[expected, m] == 1


class TestEqualPower:
    def test_even_split(self):
        assign = np.array([[1, 1, 1, 1, 0], [0, 0, 0, 0, 1]])
        p = equal_power(assign, np.array([0.2, 0.4]))
        np.testing.assert_allclose(p[0, :4], 0.05, rtol=1e-15)
        assert p[1, 4] == pytest.approx(0.4)

    def test_empty_row_is_zero(self):
        assign = np.array([[1, 1], [0, 0]])
        p = equal_power(assign, np.array([0.2, 0.2]))
        np.testing.assert_array_equal(p[1], 0.0)

    def test_row_sums_match_budgets(self):
        rng = np.random.default_rng(4)
        assign = (rng.random((3, 7)) < 0.5).astype(int)
        assign[:, 0] = [1, 0, 0]
        budgets = np.array([0.1, 0.2, 0.3])
        p = equal_power(assign, budgets)
        for k in range(3):
            if assign[k].sum():
                assert p[k].sum() == pytest.approx(budgets[k], rel=1e-12)


class TestExhaustive:
    def test_single_user(self):
        gamma = np.array([[2.0, 1.0]])
        alloc = exhaustive_search(gamma, np.array([0.5]))
        assert np.all(alloc.assign == 1)

    def test_diagonal_dominance_two_by_two(self):
        gamma = np.array([[4.0, 1.0], [1.0, 4.0]])
        alloc = exhaustive_search(gamma, np.array([1.0, 1.0]))
        np.testing.assert_array_equal(alloc.assign, np.eye(2, dtype=np.int8))

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(7)
        gamma, budgets = random_instance(rng, 3, 4)
        alloc = exhaustive_search(gamma, budgets)
        best = -1.0
        for owners in itertools.product(range(3), repeat=4):
            assign = np.zeros((3, 4), dtype=np.int8)
            for m, k in enumerate(owners):
                assign[k, m] = 1
            value = 0.0
            for k in range(3):
                sel = gamma[k][assign[k] == 1]
                if sel.size:
                    wf = water_fill(sel, budgets[k])
                    value += float(np.sum(np.log2(1.0 + wf.powers * sel)))
            best = max(best, value)
        mine = throughput(alloc, gamma, 1.0)
        assert mine == pytest.approx(best, rel=1e-10)

    def test_greedy_never_beats_exhaustive(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            gamma, budgets = random_instance(rng, 3, 5)
            greedy = throughput(jspa_greedy(gamma, budgets, rng), gamma, 1.0)
            best = throughput(exhaustive_search(gamma, budgets), gamma, 1.0)
            assert greedy <= best + 1e-9 * max(1.0, best)

    def test_cap_refused(self):
        gamma = np.ones((10, 10))
        with pytest.raises(ValueError):
            exhaustive_search(gamma, np.ones(10), cap=10**6)


class TestThroughputAndRatio:
    def test_empty_allocation(self):
        alloc = Allocation(np.zeros((2, 3), np.int8), np.zeros((2, 3)))
        assert throughput(alloc, np.ones((2, 3)), 1e6) == 0.0

    def test_unit_case(self):
        alloc = Allocation(np.array([[1]]), np.array([[0.5]]))
        assert throughput(alloc, np.array([[2.0]]), 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(10)
        gamma, budgets = random_instance(rng, 4, 6)
        alloc = jspa_greedy(gamma, budgets, rng)
        df = 5.3e6
        expected = 0.0
        for k in range(4):
            for m in range(6):
                if alloc.assign[k, m]:
                    expected += df * math.log2(1.0 + alloc.power[k, m] * gamma[k, m])
        assert throughput(alloc, gamma, df) == pytest.approx(expected, rel=1e-9)

    def test_active_user_ratio_cases(self):
        one_user = Allocation(
            np.array([[1, 1, 1], [0, 0, 0], [0, 0, 0], [0, 0, 0]]), np.zeros((4, 3))
        )
        assert active_user_ratio(one_user) == 0.25
        spread = Allocation(np.eye(3, dtype=np.int8), np.zeros((3, 3)))
        assert active_user_ratio(spread) == 1.0
        # pigeonhole: 3 subcarriers cannot activate more than 3 of 8 users
        rng = np.random.default_rng(3)
        gamma, _ = random_instance(rng, 8, 3)
        alloc = jspa_greedy(gamma, np.full(8, 0.2), rng)
        assert active_user_ratio(alloc) <= 3 / 8


class TestRelaxedEquivalence:
    def test_fractional_assignment_cannot_beat_exclusive(self):
        # grid over fractional ownership shares with per-share optimal powers
        # (weighted water-filling via bisection) never exceeds the exclusive
        # optimum from exhaustive search
        gamma = np.array([[3.0, 0.8], [1.2, 2.5]])
        budgets = np.array([0.6, 0.4])
        exclusive = throughput(exhaustive_search(gamma, budgets), gamma, 1.0)

        def weighted_waterfill_value(weights_row, gamma_row, budget):
            # maximize sum_m w_m log2(1 + p_m g_m), sum p <= budget
            active = weights_row > 0
            if not np.any(active) or budget <= 0:
                return 0.0
            w = weights_row[active]
            g = gamma_row[active]

            def spent(mu):
                return np.maximum(w / mu - 1.0 / g, 0.0).sum() - budget

            hi = float((w / (budget + (1.0 / g).min())).max() * 2 + 1)
            lo = 1e-12
            while spent(lo) < 0:
                lo /= 10
                if lo < 1e-300:
                    return 0.0
            mu = brentq(spent, lo, hi * 10, xtol=1e-16, maxiter=300)
            p = np.maximum(w / mu - 1.0 / g, 0.0)
            return float(np.sum(w * np.log2(1.0 + p * g)))

        grid = np.linspace(0.0, 1.0, 11)
        best_fractional = 0.0
        for b00 in grid:
            for b01 in grid:
                shares = np.array([[b00, b01], [1.0 - b00, 1.0 - b01]])
                value = sum(
                    weighted_waterfill_value(shares[k], gamma[k], budgets[k])
                    for k in range(2)
                )
                best_fractional = max(best_fractional, value)
        assert best_fractional <= exclusive + 1e-6


class TestCsvRoundTrip:
    def test_write_and_read(self, tmp_path):
        rng = np.random.default_rng(12)
        gamma, budgets = random_instance(rng, 3, 5)
        alloc = jspa_greedy(gamma, budgets, rng)
        a_path, p_path = tmp_path / "assign.csv", tmp_path / "watts.csv"
        write_allocation_csv(alloc, a_path, p_path)
        back = read_allocation_csv(a_path, p_path)
        np.testing.assert_array_equal(back.assign, alloc.assign)
        np.testing.assert_allclose(back.power, alloc.power, rtol=1e-8)
