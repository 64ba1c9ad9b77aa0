"""Joint subcarrier and power allocation.

Every subcarrier is granted to exactly one user (no multi-user interference);
each user splits an individual power budget across its subcarriers. Rates use
the average-SNR approximation log2(1 + p * gamma), so the per-user power split
for a fixed assignment is classic water-filling. The greedy allocator visits
subcarriers in random order, tentatively water-fills every user with the
candidate added to its current set, and grants the subcarrier to the user
whose candidate power-SNR product p * gamma is largest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class Allocation:
    """Exclusive assignment matrix and per-user power split."""

    assign: np.ndarray  # (K, M) 0/1
    power: np.ndarray  # (K, M) watts

    def __post_init__(self):
        self.assign = np.asarray(self.assign, dtype=np.int8)
        self.power = np.asarray(self.power, dtype=np.float64)
        if self.assign.shape != self.power.shape:
            raise ValueError("assign and power must have the same shape")
        if np.any(self.assign.sum(axis=0) > 1):
            raise ValueError("each subcarrier may be assigned to at most one user")
        if np.any(self.power < 0) or np.any(self.power[self.assign == 0] != 0.0):
            raise ValueError("power must be nonnegative and confined to assigned subcarriers")


@dataclass
class WaterFillResult:
    powers: np.ndarray
    water_level: float


def water_fill(snrs: np.ndarray, budget: float) -> WaterFillResult:
    """Maximize sum log2(1 + p_i snr_i) subject to sum p_i <= budget, p >= 0.

    Exact active-set solution: sort by inverse SNR, grow the active set while
    the implied water level stays above the next inverse SNR. powers[i] =
    max(level - 1/snr_i, 0); the water level is 0 when nothing is active.
    """
    snrs = np.asarray(snrs, dtype=np.float64)
    if snrs.size == 0:
        return WaterFillResult(powers=np.zeros(0), water_level=0.0)
    if np.any(snrs <= 0):
        raise ValueError("snrs must be strictly positive")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    inv = 1.0 / snrs
    order = np.argsort(inv, kind="stable")
    inv_sorted = inv[order]
    cum = np.cumsum(inv_sorted)
    n = np.arange(1, snrs.size + 1)
    level_candidates = (budget + cum) / n
    active = int(np.sum(inv_sorted < level_candidates))
    if active == 0:
        return WaterFillResult(powers=np.zeros_like(inv), water_level=0.0)
    level = float(level_candidates[active - 1])
    powers = np.maximum(level - inv, 0.0)
    return WaterFillResult(powers=powers, water_level=level)


def _water_fill_rows(inv: np.ndarray, budgets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise water-filling over inverse SNRs padded with +inf.

    Returns (water levels (K,), powers (K, S)); rows with no finite entry or
    zero budget get level 0 and zero powers.
    """
    k, _ = inv.shape
    inv_sorted = np.sort(inv, axis=1)
    finite = np.isfinite(inv_sorted)
    cum = np.cumsum(np.where(finite, inv_sorted, 0.0), axis=1)
    n = np.arange(1, inv.shape[1] + 1, dtype=np.float64)
    candidates = (budgets[:, None] + cum) / n
    active = np.sum(finite & (inv_sorted < candidates), axis=1)
    levels = np.zeros(k)
    rows = active > 0
    levels[rows] = candidates[rows, active[rows] - 1]
    powers = np.where(np.isfinite(inv), np.maximum(levels[:, None] - inv, 0.0), 0.0)
    return levels, powers


def _final_power(assign: np.ndarray, avg_snr: np.ndarray, budgets: np.ndarray) -> np.ndarray:
    """Per-user water-filling over each user's assigned, positive-SNR subcarriers."""
    inv = np.where((assign == 1) & (avg_snr > 0), 1.0 / np.where(avg_snr > 0, avg_snr, 1.0), np.inf)
    _, powers = _water_fill_rows(inv, budgets)
    return powers


def jspa_greedy(avg_snr: np.ndarray, budgets: np.ndarray, rng: np.random.Generator) -> Allocation:
    """Greedy joint subcarrier and power allocation.

    Visits subcarriers in a seeded random order. For each candidate, every
    user is water-filled over its already-granted set plus the candidate; the
    candidate goes to the user with the largest p * gamma there (ties to the
    smallest user index). Subcarriers nobody can use still go to the argmax
    user, with zero power. A final per-user water-filling sets the powers.
    """
    avg_snr = np.asarray(avg_snr, dtype=np.float64)
    if avg_snr.ndim != 2 or avg_snr.shape[0] == 0:
        raise ValueError("avg_snr must be a K x M matrix with K >= 1")
    if not np.all(np.isfinite(avg_snr)) or np.any(avg_snr < 0):
        raise ValueError("avg_snr entries must be finite and >= 0")
    k_users, m_sub = avg_snr.shape
    budgets = np.asarray(budgets, dtype=np.float64)
    if budgets.shape != (k_users,):
        raise ValueError("budgets must have one entry per user")
    assign = np.zeros((k_users, m_sub), dtype=np.int8)
    if m_sub == 0:
        return Allocation(assign=assign, power=np.zeros((k_users, 0)))

    inv_all = np.where(avg_snr > 0, 1.0 / np.where(avg_snr > 0, avg_snr, 1.0), np.inf)
    # Granted positive-SNR inverse gains per user, padded with +inf.
    granted = np.full((k_users, 1), np.inf)
    sizes = np.zeros(k_users, dtype=int)

    for m in rng.permutation(m_sub):
        cand = inv_all[:, m]
        width = int(sizes.max()) + 1
        stacked = np.concatenate([granted[:, :width], cand[:, None]], axis=1)
        levels, _ = _water_fill_rows(stacked, budgets)
        p_cand = np.where(np.isfinite(cand), np.maximum(levels - cand, 0.0), 0.0)
        winner = int(np.argmax(p_cand * avg_snr[:, m]))
        assign[winner, m] = 1
        if np.isfinite(cand[winner]):
            if sizes[winner] >= granted.shape[1]:
                granted = np.concatenate(
                    [granted, np.full((k_users, granted.shape[1]), np.inf)], axis=1
                )
            granted[winner, sizes[winner]] = cand[winner]
            sizes[winner] += 1

    return Allocation(assign=assign, power=_final_power(assign, avg_snr, budgets))


def maxch_allocate(avg_snr: np.ndarray, budgets: np.ndarray) -> Allocation:
    """Assign each subcarrier to its largest-average-SNR user, then water-fill."""
    avg_snr = np.asarray(avg_snr, dtype=np.float64)
    if avg_snr.ndim != 2 or avg_snr.shape[0] == 0:
        raise ValueError("avg_snr must be a K x M matrix with K >= 1")
    k_users, m_sub = avg_snr.shape
    budgets = np.asarray(budgets, dtype=np.float64)
    assign = np.zeros((k_users, m_sub), dtype=np.int8)
    if m_sub:
        assign[np.argmax(avg_snr, axis=0), np.arange(m_sub)] = 1
    return Allocation(assign=assign, power=_final_power(assign, avg_snr, budgets))


def equal_power(assign: np.ndarray, budgets: np.ndarray) -> np.ndarray:
    """Split each user's budget evenly over its assigned subcarriers."""
    assign = np.asarray(assign)
    budgets = np.asarray(budgets, dtype=np.float64)
    counts = assign.sum(axis=1)
    share = np.divide(budgets, counts, out=np.zeros_like(budgets), where=counts > 0)
    return assign * share[:, None]


def exhaustive_search(
    avg_snr: np.ndarray, budgets: np.ndarray, cap: int = 10**7
) -> Allocation:
    """Enumerate every exclusive assignment, water-fill each, keep the best.

    Refuses instances with more than `cap` assignments (K^M). Per-user values
    are precomputed for all 2^M subcarrier subsets, so each assignment is a
    table lookup.
    """
    avg_snr = np.asarray(avg_snr, dtype=np.float64)
    if avg_snr.ndim != 2 or avg_snr.shape[0] == 0:
        raise ValueError("avg_snr must be a K x M matrix with K >= 1")
    k_users, m_sub = avg_snr.shape
    budgets = np.asarray(budgets, dtype=np.float64)
    total = k_users**m_sub
    if total > cap:
        raise ValueError(f"exhaustive search over {total} assignments exceeds cap {cap}")
    if m_sub > 20:
        raise ValueError("exhaustive search limited to 20 subcarriers (per-user subset table)")

    subset_value = np.zeros((k_users, 1 << m_sub))
    subset_members = [np.flatnonzero([(mask >> m) & 1 for m in range(m_sub)]) for mask in range(1 << m_sub)]
    for k in range(k_users):
        snr_row = avg_snr[k]
        for mask in range(1, 1 << m_sub):
            members = subset_members[mask]
            usable = snr_row[members]
            usable = usable[usable > 0]
            if usable.size:
                wf = water_fill(usable, budgets[k])
                subset_value[k, mask] = np.sum(np.log2(1.0 + wf.powers * usable))

    weights = 1 << np.arange(m_sub, dtype=np.int64)
    best_value = -np.inf
    best_assign_code = 0
    chunk = 1 << 18
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        owners = (codes[:, None] // k_users ** np.arange(m_sub, dtype=np.int64)[None, :]) % k_users
        values = np.zeros(codes.size)
        for k in range(k_users):
            masks = ((owners == k) * weights[None, :]).sum(axis=1)
            values += subset_value[k, masks]
        local = int(np.argmax(values))
        if values[local] > best_value:
            best_value = float(values[local])
            best_assign_code = int(codes[local])

    owners = (best_assign_code // k_users ** np.arange(m_sub, dtype=np.int64)) % k_users
    assign = np.zeros((k_users, m_sub), dtype=np.int8)
    assign[owners, np.arange(m_sub)] = 1
    return Allocation(assign=assign, power=_final_power(assign, avg_snr, budgets))


def throughput(alloc: Allocation, avg_snr: np.ndarray, delta_f_hz: float) -> float:
    """Sum over assigned subcarriers of delta_f * log2(1 + p * gamma), in bit/s."""
    mask = alloc.assign == 1
    return float(delta_f_hz * np.sum(np.log2(1.0 + alloc.power[mask] * np.asarray(avg_snr)[mask])))


def active_user_ratio(alloc: Allocation) -> float:
    """Fraction of users holding at least one subcarrier."""
    k_users = alloc.assign.shape[0]
    return float(np.count_nonzero(alloc.assign.sum(axis=1) > 0) / k_users)


def write_allocation_csv(alloc: Allocation, assign_path, power_path) -> None:
    """Two CSV files (users as rows, subcarriers as columns): assignment and watts."""
    for path, matrix, fmt in (
        (assign_path, alloc.assign, "{:d}"),
        (power_path, alloc.power, "{:.9g}"),
    ):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user"] + [f"m{m + 1}" for m in range(alloc.assign.shape[1])])
            for k, row in enumerate(matrix):
                writer.writerow([k] + [fmt.format(x) for x in row])


def read_allocation_csv(assign_path, power_path) -> Allocation:
    def body(path, dtype):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        return np.array([[dtype(x) for x in row[1:]] for row in rows])

    return Allocation(assign=body(assign_path, int), power=body(power_path, float))
