"""Import-time selection between the compiled kernel and the NumPy fallback.

Set RAINBOWBF_PURE_PYTHON=1 to force the fallback even when the extension
is built. Individual call sites can also pick a lane explicitly, which is
what the runtime benchmark does to compare both.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels_cy

    _COMPILED_IMPORTED = True
except ImportError:
    _kernels_cy = None
    _COMPILED_IMPORTED = False

HAVE_COMPILED = _COMPILED_IMPORTED and not os.environ.get("RAINBOWBF_PURE_PYTHON")

IMPL_AUTO = "auto"
IMPL_COMPILED = "compiled"
IMPL_PYTHON = "python"


def resolve_impl(impl: str = IMPL_AUTO) -> str:
    if impl == IMPL_AUTO:
        return IMPL_COMPILED if HAVE_COMPILED else IMPL_PYTHON
    if impl == IMPL_COMPILED:
        if not _COMPILED_IMPORTED:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return IMPL_COMPILED
    if impl == IMPL_PYTHON:
        return IMPL_PYTHON
    raise ValueError(f"unknown kernel impl {impl!r}")


class LineSearchScanner:
    """Per-element scan of |S(tau)| over a uniform delay grid.

    S(tau) = sum_m coeff[e, m] * exp(-j 2 pi f_m tau). The grid must be
    uniform starting at 0 (the compiled lane advances phasors by a constant
    step). Precomputes per-plan tables once; scan() is then called every
    optimizer iteration with fresh coefficients.
    """

    def __init__(self, freqs: np.ndarray, tau_grid: np.ndarray, impl: str = IMPL_AUTO):
        self.freqs = np.asarray(freqs, dtype=np.float64)
        self.tau_grid = np.asarray(tau_grid, dtype=np.float64)
        if self.tau_grid.size < 1 or self.tau_grid[0] != 0.0:
            raise ValueError("tau grid must start at 0")
        if self.tau_grid.size > 1:
            steps = np.diff(self.tau_grid)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise ValueError("tau grid must be uniform")
        self.impl = resolve_impl(impl)
        if self.impl == IMPL_COMPILED:
            dtau = float(self.tau_grid[1] - self.tau_grid[0]) if self.tau_grid.size > 1 else 0.0
            step = np.exp(-2j * np.pi * self.freqs * dtau)
            self._step_re = np.ascontiguousarray(step.real)
            self._step_im = np.ascontiguousarray(step.imag)
        else:
            self._table = _kernels_py.tau_phase_table(self.freqs, self.tau_grid)

    def scan(self, coeff: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (grid indices, complex S at the chosen index) per element."""
        coeff = np.asarray(coeff, dtype=np.complex128)
        if self.impl == IMPL_COMPILED:
            return _kernels_cy.scan_batch_uniform(
                np.ascontiguousarray(coeff.real),
                np.ascontiguousarray(coeff.imag),
                self._step_re,
                self._step_im,
                self.tau_grid.size,
            )
        return _kernels_py.scan_batch(coeff, self._table)


beam_gain_map = _kernels_py.beam_gain_map
