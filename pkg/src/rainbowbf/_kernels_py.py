"""Vectorized NumPy implementations of the hot kernels.

These back the compiled extension's public surface when it is unavailable
(or disabled via RAINBOWBF_PURE_PYTHON). The delay line search is a single
complex GEMM against a precomputed (grid x subcarrier) phasor table.
"""

from __future__ import annotations

import numpy as np


def tau_phase_table(freqs: np.ndarray, tau_grid: np.ndarray) -> np.ndarray:
    """Phasors exp(-j 2 pi f_m tau_g), shape (G, M)."""
    return np.exp(-2j * np.pi * tau_grid[:, None] * freqs[None, :])


def scan_batch(coeff: np.ndarray, table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best grid index per antenna element of |sum_m coeff[e, m] * table[g, m]|.

    coeff is (n_rx, M) complex, table is (G, M). Returns the argmax indices
    (first maximum, i.e. smallest delay on ties) and the complex sums there.
    """
    s = coeff @ table.T  # (n_rx, G)
    mag = np.abs(s) ** 2
    idx = np.argmax(mag, axis=1)
    best = np.take_along_axis(s, idx[:, None], axis=1)[:, 0]
    return idx, best


def beam_gain_map(
    w_flat: np.ndarray,
    n_x: int,
    n_y: int,
    freq_ratio: float,
    u_pts: np.ndarray,
    v_pts: np.ndarray,
) -> np.ndarray:
    """|w^H a(u, v)|^2 over a UV grid for one subcarrier, shape (len(u), len(v)).

    Separable evaluation: field = A_x conj(W) A_y^T with A_x[i, p] =
    exp(-j pi ratio p u_i). freq_ratio is f_m / f_c.
    """
    w_mat = np.conj(np.asarray(w_flat).reshape(n_x, n_y))
    ax = np.exp(-1j * np.pi * freq_ratio * np.outer(u_pts, np.arange(n_x)))
    ay = np.exp(-1j * np.pi * freq_ratio * np.outer(v_pts, np.arange(n_y)))
    field = ax @ w_mat @ ay.T
    return np.abs(field) ** 2
