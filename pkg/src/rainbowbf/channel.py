"""Frequency plan, URA responses, Rician gains, link budget and average SNR.

All powers and gains are linear inside the library; dB enters only at the
configuration boundary. Antenna element spacing is half a wavelength at the
center frequency, which is where the pi * (f_m / f_c) steering phase factor
comes from. Element (n_x, n_y) of the array maps to the flat index
(n_x - 1) * N_y + (n_y - 1), matching the Kronecker product a_x (x) a_y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import UvDirection

SPEED_OF_LIGHT = 299792458.0
BOLTZMANN = 1.380649e-23


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x_lin: float) -> float:
    return 10.0 * np.log10(x_lin)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class FrequencyPlan:
    """OFDM grid: f_m = f_c + (m - (M+1)/2) * delta_f for m = 1..M."""

    f_c_hz: float
    m_subcarriers: int
    delta_f_hz: float

    def __post_init__(self):
        if self.m_subcarriers < 1:
            raise ValueError("m_subcarriers must be >= 1")
        if self.delta_f_hz <= 0:
            raise ValueError("delta_f_hz must be > 0")
        if self.frequency(1) <= 0:
            raise ValueError("lowest subcarrier frequency must be > 0")

    @classmethod
    def from_bandwidth(cls, f_c_hz: float, bandwidth_hz: float, m_subcarriers: int) -> "FrequencyPlan":
        """Subcarrier spacing is bandwidth / M."""
        return cls(f_c_hz, m_subcarriers, bandwidth_hz / m_subcarriers)

    @property
    def bandwidth_hz(self) -> float:
        return self.m_subcarriers * self.delta_f_hz

    def frequency(self, m: int) -> float:
        """Frequency of 1-based subcarrier index m."""
        if not 1 <= m <= self.m_subcarriers:
            raise IndexError(f"subcarrier index {m} out of range 1..{self.m_subcarriers}")
        return self.f_c_hz + (m - (self.m_subcarriers + 1) / 2.0) * self.delta_f_hz

    def frequencies(self) -> np.ndarray:
        m = np.arange(1, self.m_subcarriers + 1, dtype=np.float64)
        return self.f_c_hz + (m - (self.m_subcarriers + 1) / 2.0) * self.delta_f_hz


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform rectangular array, N_rx = n_x * n_y elements."""

    n_x: int
    n_y: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("array dimensions must be >= 1")

    @property
    def n_rx(self) -> int:
        return self.n_x * self.n_y

    def element_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer (x, y) offsets of each element in flat x-major order."""
        ix = np.repeat(np.arange(self.n_x), self.n_y)
        iy = np.tile(np.arange(self.n_y), self.n_x)
        return ix, iy


@dataclass(frozen=True)
class LinkBudget:
    """Linear antenna gains at both ends plus the receiver noise temperature."""

    g_sat: float = 1.0
    g_ut: float = db_to_linear(43.2)
    noise_temperature_k: float = 290.0

    def __post_init__(self):
        if self.g_sat <= 0 or self.g_ut <= 0 or self.noise_temperature_k <= 0:
            raise ValueError("link budget entries must be strictly positive")

    @classmethod
    def from_db(cls, g_sat_dbi: float, g_ut_dbi: float, noise_temperature_k: float) -> "LinkBudget":
        return cls(db_to_linear(g_sat_dbi), db_to_linear(g_ut_dbi), noise_temperature_k)


@dataclass
class UserChannelModel:
    """Statistical/geometric channel state of one user."""

    direction: UvDirection
    slant_distance_m: float
    rician_kappa: float
    eta: np.ndarray = field(repr=False)  # (M,) mean channel power per subcarrier
    power_budget_w: float = dbm_to_watts(23.0)

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=np.float64)
        if not np.all(self.eta > 0):
            raise ValueError("eta entries must be > 0")
        if self.rician_kappa < 0:
            raise ValueError("rician_kappa must be >= 0")
        if self.power_budget_w <= 0:
            raise ValueError("power_budget_w must be > 0")


@dataclass
class ChannelRealization:
    """One draw of complex gains plus the deterministic average SNR matrix."""

    gains: np.ndarray  # (K, M) complex
    avg_snr: np.ndarray  # (K, M) float

    def __post_init__(self):
        if self.gains.shape != self.avg_snr.shape:
            raise ValueError("gains and avg_snr must have the same shape")
        if not np.all(np.isfinite(self.avg_snr)) or np.any(self.avg_snr < 0):
            raise ValueError("avg_snr entries must be finite and >= 0")


def steering_phases(plan: FrequencyPlan, m: int, geom: ArrayGeometry, direction: UvDirection) -> np.ndarray:
    """Per-element phases -pi * (f_m / f_c) * (ix * u + iy * v), flat x-major order."""
    ix, iy = geom.element_offsets()
    ratio = plan.frequency(m) / plan.f_c_hz
    return -np.pi * ratio * (ix * direction.u + iy * direction.v)


def array_response(plan: FrequencyPlan, m: int, geom: ArrayGeometry, direction: UvDirection) -> np.ndarray:
    """Frequency-dependent URA response vector, unit modulus per element."""
    return np.exp(1j * steering_phases(plan, m, geom, direction))


def array_response_matrix(plan: FrequencyPlan, geom: ArrayGeometry, u, v) -> np.ndarray:
    """Responses for all subcarriers at one direction, shape (M, n_rx)."""
    ix, iy = geom.element_offsets()
    ratios = plan.frequencies() / plan.f_c_hz
    phases = -np.pi * ratios[:, None] * (ix * u + iy * v)[None, :]
    return np.exp(1j * phases)


def mean_channel_power(f_m_hz: float, distance_m: float, budget: LinkBudget) -> float:
    """Average channel power: antenna gains times free-space loss (c / (4 pi f d))^2."""
    if distance_m <= 0:
        raise ValueError("distance_m must be > 0")
    return budget.g_sat * budget.g_ut * (SPEED_OF_LIGHT / (4.0 * np.pi * f_m_hz * distance_m)) ** 2


def mean_channel_power_vector(plan: FrequencyPlan, distance_m: float, budget: LinkBudget) -> np.ndarray:
    """mean_channel_power evaluated at every subcarrier frequency, shape (M,)."""
    if distance_m <= 0:
        raise ValueError("distance_m must be > 0")
    f = plan.frequencies()
    return budget.g_sat * budget.g_ut * (SPEED_OF_LIGHT / (4.0 * np.pi * f * distance_m)) ** 2


def noise_power(plan: FrequencyPlan, budget: LinkBudget) -> float:
    """Thermal noise power per subcarrier: k_B * delta_f * T."""
    return BOLTZMANN * plan.delta_f_hz * budget.noise_temperature_k


def sample_gain(eta: float, kappa: float, rng: np.random.Generator) -> complex:
    """Draw one Rician gain: real/imag parts are i.i.d. normal with
    mean sqrt(kappa * eta / (2 (kappa+1))) and variance eta / (2 (kappa+1)),
    so E|g|^2 = eta.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    mean = np.sqrt(kappa * eta / (2.0 * (kappa + 1.0)))
    std = np.sqrt(eta / (2.0 * (kappa + 1.0)))
    re, im = mean + std * rng.standard_normal(2)
    return complex(re, im)


def sample_gain_matrix(eta: np.ndarray, kappa: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized Rician draw; eta is (K, M), kappa is (K,). Returns (K, M) complex."""
    eta = np.asarray(eta, dtype=np.float64)
    kappa = np.asarray(kappa, dtype=np.float64)[:, None]
    mean = np.sqrt(kappa * eta / (2.0 * (kappa + 1.0)))
    std = np.sqrt(eta / (2.0 * (kappa + 1.0)))
    noise = rng.standard_normal((2,) + eta.shape)
    return (mean + std * noise[0]) + 1j * (mean + std * noise[1])


def average_snr(weights: np.ndarray, response: np.ndarray, eta: float, sigma2: float, n_rx: int) -> float:
    """Average SNR per unit transmit power: eta * |w^H a|^2 / (n_rx * sigma^2)."""
    weights = np.asarray(weights)
    response = np.asarray(response)
    if weights.shape != response.shape or weights.shape != (n_rx,):
        raise ValueError("weights and response must both have shape (n_rx,)")
    return float(eta * np.abs(np.vdot(weights, response)) ** 2 / (n_rx * sigma2))


def beam_gains_for_users(
    weights: np.ndarray,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
    us: np.ndarray,
    vs: np.ndarray,
) -> np.ndarray:
    """|w^(m)H a^(m)(u_k, v_k)|^2 for every user/subcarrier pair, shape (K, M).

    Exploits the separable URA structure: per subcarrier the inner product is
    a_x(u)^T conj(W) a_y(v) with W the (n_x, n_y) weight matrix.
    """
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    k_users = us.size
    m_sub = plan.m_subcarriers
    if weights.shape != (m_sub, geom.n_rx):
        raise ValueError("weights must have shape (M, n_rx)")
    freqs = plan.frequencies()
    gains = np.empty((k_users, m_sub), dtype=np.float64)
    x = np.empty((k_users, geom.n_x), dtype=np.complex128)
    y = np.empty((k_users, geom.n_y), dtype=np.complex128)
    for m in range(m_sub):
        ratio = freqs[m] / plan.f_c_hz
        base_x = np.exp(-1j * np.pi * ratio * us)
        base_y = np.exp(-1j * np.pi * ratio * vs)
        x[:, 0] = 1.0
        for i in range(1, geom.n_x):
            np.multiply(x[:, i - 1], base_x, out=x[:, i])
        y[:, 0] = 1.0
        for i in range(1, geom.n_y):
            np.multiply(y[:, i - 1], base_y, out=y[:, i])
        w_mat = weights[m].reshape(geom.n_x, geom.n_y)
        inner = np.einsum("ki,ij,kj->k", x, np.conj(w_mat), y, optimize=True)
        gains[:, m] = np.abs(inner) ** 2
    return gains


def realize_channels(
    users: list[UserChannelModel],
    plan: FrequencyPlan,
    geom: ArrayGeometry,
    weights: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw complex gains for every (user, subcarrier) and compute average SNRs."""
    if not users:
        raise ValueError("need at least one user")
    if weights.shape != (plan.m_subcarriers, geom.n_rx):
        raise ValueError("weights must have shape (M, n_rx)")
    eta = np.stack([u.eta for u in users])
    if eta.shape[1] != plan.m_subcarriers:
        raise ValueError("user eta length must equal the subcarrier count")
    kappa = np.array([u.rician_kappa for u in users])
    us = np.array([u.direction.u for u in users])
    vs = np.array([u.direction.v for u in users])
    gains = sample_gain_matrix(eta, kappa, rng)
    bgains = beam_gains_for_users(weights, plan, geom, us, vs)
    avg_snr = eta * bgains / (geom.n_rx * sigma2)
    return ChannelRealization(gains=gains, avg_snr=avg_snr)
