"""JPTA weight synthesis, frequency-direction mappings and the rainbow optimizer.

A joint phase-time array gives every element a phase shifter (frequency-flat
phase phi) and a true time delay (frequency-linear phase -2 pi f tau). The
optimizer shapes those so that each subcarrier's beam points at a prescribed
UV direction: it maximizes

    F = sum_m Re( conj(alpha_m) * a_m(u_des, v_des)^H w_m(T, Phi) )

over the per-subcarrier unit-modulus rotations alpha, the phases Phi and the
delays T. Equivalently it minimizes the squared deviation from the ideal
steering condition, whose value is 2 M N_rx - 2 F. The three blocks each have
exact updates: alpha_m aligns with the inner product, phi cancels the angle of
a per-element phasor sum S(tau), and tau is found by a 1D grid search on |S|
independently per element.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayGeometry, FrequencyPlan, array_response_matrix
from .geometry import UvDirection
from .kernels import IMPL_AUTO, LineSearchScanner, beam_gain_map

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DirectionMapping:
    """Desired UV beam direction per subcarrier."""

    u_des: np.ndarray
    v_des: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u_des", np.asarray(self.u_des, dtype=np.float64))
        object.__setattr__(self, "v_des", np.asarray(self.v_des, dtype=np.float64))
        if self.u_des.shape != self.v_des.shape or self.u_des.ndim != 1:
            raise ValueError("u_des and v_des must be 1-D arrays of equal length")
        if np.any(self.u_des**2 + self.v_des**2 > 1.0 + 1e-12):
            raise ValueError("mapping directions must lie in the unit disk")

    def __len__(self) -> int:
        return self.u_des.size


@dataclass(frozen=True)
class OptimizerSettings:
    """Delay grid, convergence rule and initialization policy for the optimizer."""

    tau_max_s: float = 50e-9
    grid_step_s: float = 25e-12
    convergence_tol: float = 1e-6
    max_iterations: int = 100
    alpha_init: str = "ones"

    def __post_init__(self):
        if self.grid_step_s <= 0:
            raise ValueError("grid_step_s must be > 0")
        if self.tau_max_s < 0:
            raise ValueError("tau_max_s must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.alpha_init != "ones":
            raise ValueError("unknown alpha_init policy")

    def tau_grid(self) -> np.ndarray:
        """Uniform grid {0, step, ..., <= tau_max}."""
        n = int(math.floor(self.tau_max_s / self.grid_step_s + 1e-9)) + 1
        return np.arange(n, dtype=np.float64) * self.grid_step_s


@dataclass
class JptaBeamformer:
    """Per-element delays and phases plus per-subcarrier phase rotations.

    The rotations are stored as phases so that serialization is bit-faithful;
    the complex unit-modulus view is the `alpha` property.
    """

    tau: np.ndarray  # (n_x, n_y) seconds
    phi: np.ndarray  # (n_x, n_y) radians in [0, 2 pi)
    alpha_phases: np.ndarray  # (M,) radians
    plan: FrequencyPlan

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=np.float64)
        self.phi = np.asarray(self.phi, dtype=np.float64)
        self.alpha_phases = np.asarray(self.alpha_phases, dtype=np.float64)
        if self.tau.ndim != 2 or self.tau.shape != self.phi.shape:
            raise ValueError("tau and phi must be matching 2-D matrices")
        if np.any(self.tau < 0):
            raise ValueError("delays must be >= 0")
        if np.any(self.phi < 0) or np.any(self.phi >= TWO_PI):
            raise ValueError("phases must lie in [0, 2 pi)")
        if self.alpha_phases.shape != (self.plan.m_subcarriers,):
            raise ValueError("alpha must have one entry per subcarrier")
        if not np.all(np.isfinite(self.alpha_phases)):
            raise ValueError("alpha phases must be finite")

    @classmethod
    def from_alpha(cls, tau, phi, alpha, plan) -> "JptaBeamformer":
        """Build from complex rotations; they must be unit modulus."""
        alpha = np.asarray(alpha, dtype=np.complex128)
        if np.any(np.abs(np.abs(alpha) - 1.0) > 1e-12):
            raise ValueError("alpha entries must be unit modulus")
        return cls(tau, phi, np.angle(alpha), plan)

    @property
    def alpha(self) -> np.ndarray:
        """Unit-modulus per-subcarrier rotations."""
        return np.exp(1j * self.alpha_phases)

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.tau.shape[0], self.tau.shape[1])

    def weights_matrix(self) -> np.ndarray:
        """All subcarrier weight vectors, shape (M, n_rx); element phases
        phi - 2 pi f_m tau in flat x-major order."""
        freqs = self.plan.frequencies()
        tau_flat = self.tau.reshape(-1)
        phi_flat = self.phi.reshape(-1)
        return np.exp(1j * (phi_flat[None, :] - TWO_PI * freqs[:, None] * tau_flat[None, :]))


def jpta_weights(bf: JptaBeamformer, m: int) -> np.ndarray:
    """Weight vector of 1-based subcarrier m, unit modulus per element."""
    f_m = bf.plan.frequency(m)
    return np.exp(1j * (bf.phi.reshape(-1) - TWO_PI * f_m * bf.tau.reshape(-1)))


# ---------------------------------------------------------------------------
# Frequency-direction mappings
# ---------------------------------------------------------------------------


def mapping_spiral(
    m_subcarriers: int, u_max: float, n_turns: int | None = None, n_x: int = 8
) -> DirectionMapping:
    """Archimedean spiral sweeping the UV disk of radius u_max as m grows.

    The turn count defaults to ceil(u_max / (2 / n_x)) so consecutive arms sit
    roughly one broadside beamwidth apart.
    """
    if not 0.0 < u_max <= 1.0:
        raise ValueError("u_max must lie in (0, 1]")
    if n_turns is None:
        n_turns = max(1, math.ceil(u_max * n_x / 2.0))
    if m_subcarriers == 1:
        t = np.zeros(1)
    else:
        t = np.arange(m_subcarriers, dtype=np.float64) / (m_subcarriers - 1)
    r = u_max * np.sqrt(t)
    omega = TWO_PI * n_turns * t
    return DirectionMapping(r * np.cos(omega), r * np.sin(omega))


def mapping_lines(
    m_subcarriers: int, u_max: float, n_lines: int | None = None, n_x: int = 8
) -> DirectionMapping:
    """Raster of n_lines horizontal sweeps across the UV disk.

    Lines sit at the centers of n_lines equal v-bands of [-u_max, u_max]; each
    sweeps u across the disk chord at its v level and receives a contiguous
    share of subcarriers proportional to chord length. All lines sweep in the
    same direction: the du/df slope then has one sign everywhere, which a
    fixed per-element delay gradient can track (the flyback jumps disappear
    into the 2 pi phase ambiguity). The line count defaults to
    ceil(u_max * n_x), one broadside beamwidth of separation.
    """
    if not 0.0 < u_max <= 1.0:
        raise ValueError("u_max must lie in (0, 1]")
    if n_lines is None:
        n_lines = max(1, math.ceil(u_max * n_x))
    if n_lines < 1:
        raise ValueError("n_lines must be >= 1")
    if m_subcarriers < n_lines:
        raise ValueError("need at least one subcarrier per line")
    band = 2.0 * u_max / n_lines
    v_levels = -u_max + (np.arange(n_lines) + 0.5) * band
    half_chords = np.sqrt(np.maximum(u_max**2 - v_levels**2, 0.0))
    chords = 2.0 * half_chords

    # Largest-remainder split of M across lines, floors first, then leftover
    # by descending fractional part (ties to the lower line index).
    exact = m_subcarriers * chords / chords.sum()
    counts = np.floor(exact).astype(int)
    order = np.lexsort((np.arange(n_lines), -(exact - counts)))
    for i in order[: m_subcarriers - counts.sum()]:
        counts[i] += 1
    while np.any(counts == 0):
        counts[np.argmax(counts == 0)] += 1
        counts[np.argmax(counts)] -= 1

    us, vs = [], []
    for n_i, w_i, v_i in zip(counts, half_chords, v_levels):
        u_line = np.zeros(1) if n_i == 1 else np.linspace(-w_i, w_i, n_i)
        us.append(u_line)
        vs.append(np.full(n_i, v_i))
    return DirectionMapping(np.concatenate(us), np.concatenate(vs))


def random_mapping(m_subcarriers: int, u_max: float, rng: np.random.Generator) -> DirectionMapping:
    """Directions i.i.d. uniform over the UV disk of radius u_max."""
    r = u_max * np.sqrt(rng.random(m_subcarriers))
    theta = TWO_PI * rng.random(m_subcarriers)
    return DirectionMapping(r * np.cos(theta), r * np.sin(theta))


# ---------------------------------------------------------------------------
# Objective and block updates
# ---------------------------------------------------------------------------


def desired_responses(mapping: DirectionMapping, plan: FrequencyPlan, geom: ArrayGeometry) -> np.ndarray:
    """Array response at each subcarrier's desired direction, shape (M, n_rx)."""
    if len(mapping) != plan.m_subcarriers:
        raise ValueError("mapping length must equal the subcarrier count")
    ix, iy = geom.element_offsets()
    ratios = plan.frequencies() / plan.f_c_hz
    phases = -np.pi * ratios[:, None] * (
        np.outer(mapping.u_des, ix) + np.outer(mapping.v_des, iy)
    )
    return np.exp(1j * phases)


def _mapping_phase_offsets(
    mapping: DirectionMapping, plan: FrequencyPlan, geom: ArrayGeometry
) -> np.ndarray:
    """Phases of conj(a_m) per element: pi (f_m/f_c)(ix u_m + iy v_m), shape (n_rx, M)."""
    ix, iy = geom.element_offsets()
    ratios = plan.frequencies() / plan.f_c_hz
    return np.pi * ratios[None, :] * (
        np.outer(ix, mapping.u_des) + np.outer(iy, mapping.v_des)
    )


def _inner_products(
    tau: np.ndarray,
    phi: np.ndarray,
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
) -> np.ndarray:
    """z_m = a_m^H w_m for every subcarrier, shape (M,)."""
    beta = _mapping_phase_offsets(mapping, plan, geom)
    freqs = plan.frequencies()
    tau_flat = np.asarray(tau, dtype=np.float64).reshape(-1)
    phi_flat = np.asarray(phi, dtype=np.float64).reshape(-1)
    phases = beta + phi_flat[:, None] - TWO_PI * np.outer(tau_flat, freqs)
    return np.exp(1j * phases).sum(axis=0)


def objective_value(bf: JptaBeamformer, mapping: DirectionMapping) -> float:
    """F = sum_m Re(conj(alpha_m) a_m^H w_m); upper bounded by M * n_rx."""
    z = _inner_products(bf.tau, bf.phi, mapping, bf.plan, bf.geometry)
    return float(np.real(np.conj(bf.alpha) * z).sum())


def residual_value(bf: JptaBeamformer, mapping: DirectionMapping) -> float:
    """Total squared deviation from ideal steering: 2 M n_rx - 2 F."""
    m_sub = bf.plan.m_subcarriers
    return 2.0 * m_sub * bf.geometry.n_rx - 2.0 * objective_value(bf, mapping)


def optimal_alpha(
    tau: np.ndarray,
    phi: np.ndarray,
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
) -> np.ndarray:
    """Closed-form best per-subcarrier rotation: align alpha_m with a_m^H w_m.

    A vanishing inner product leaves alpha_m unconstrained; it is set to 1.
    """
    z = _inner_products(tau, phi, mapping, plan, geom)
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def s_value(
    alpha: np.ndarray,
    tau_s: float,
    element: tuple[int, int],
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
) -> complex:
    """Per-element phasor sum S(alpha, tau) = sum_m exp(j(delta_m - 2 pi f_m tau)),
    with delta_m = -angle(alpha_m) + pi (f_m/f_c)(ix u_m + iy v_m).
    element is 1-based (n_x, n_y)."""
    n_x, n_y = element
    if not (1 <= n_x <= geom.n_x and 1 <= n_y <= geom.n_y):
        raise IndexError("element index out of range")
    ratios = plan.frequencies() / plan.f_c_hz
    delta = -np.angle(alpha) + np.pi * ratios * (
        (n_x - 1) * mapping.u_des + (n_y - 1) * mapping.v_des
    )
    return complex(np.exp(1j * (delta - TWO_PI * plan.frequencies() * tau_s)).sum())


def optimal_phase_shifts(
    alpha: np.ndarray,
    tau: np.ndarray,
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
) -> np.ndarray:
    """Closed-form phases: phi = -angle(S(alpha, tau)) mod 2 pi, zero when S = 0."""
    beta = _mapping_phase_offsets(mapping, plan, geom)
    coeff = np.exp(1j * beta) * np.conj(alpha / np.abs(alpha))[None, :]
    freqs = plan.frequencies()
    tau_flat = np.asarray(tau, dtype=np.float64).reshape(-1)
    s = (coeff * np.exp(-1j * TWO_PI * np.outer(tau_flat, freqs))).sum(axis=1)
    phi = np.where(np.abs(s) == 0.0, 0.0, (-np.angle(s)) % TWO_PI)
    # angle(-|x|) returns pi whose negation mod 2 pi can hit 2 pi after rounding
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    return phi.reshape(geom.n_x, geom.n_y)


def line_search_ttd(
    alpha: np.ndarray,
    element: tuple[int, int],
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
    settings: OptimizerSettings,
) -> float:
    """Grid argmax of |S(alpha, tau)| for one element; ties go to the smallest tau."""
    n_x, n_y = element
    if not (1 <= n_x <= geom.n_x and 1 <= n_y <= geom.n_y):
        raise IndexError("element index out of range")
    grid = settings.tau_grid()
    ratios = plan.frequencies() / plan.f_c_hz
    delta = -np.angle(alpha) + np.pi * ratios * (
        (n_x - 1) * mapping.u_des + (n_y - 1) * mapping.v_des
    )
    s = np.exp(1j * (delta[None, :] - TWO_PI * np.outer(grid, plan.frequencies()))).sum(axis=1)
    return float(grid[int(np.argmax(np.abs(s)))])


@dataclass
class OptimizeTrace:
    """Objective trajectory and bookkeeping of one optimizer run."""

    f_values: np.ndarray
    converged: bool
    iterations: int
    wall_time_s: float

    @property
    def terminal_objective(self) -> float:
        return float(self.f_values[-1])


def optimize_rainbow(
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
    settings: OptimizerSettings = OptimizerSettings(),
    impl: str = IMPL_AUTO,
) -> tuple[JptaBeamformer, OptimizeTrace]:
    """Alternating optimization of (T, Phi, alpha) against a direction mapping.

    Each iteration runs the per-element delay line search, the closed-form
    phase update and the closed-form rotation update; the objective F is
    nondecreasing across iterations and bounded by M * n_rx. Stops when the
    relative objective change drops below convergence_tol, else after
    max_iterations with converged=False (the last iterate is the best one).
    """
    if len(mapping) != plan.m_subcarriers:
        raise ValueError("mapping length must equal the subcarrier count")
    start = time.perf_counter()
    freqs = plan.frequencies()
    grid = settings.tau_grid()
    beta = _mapping_phase_offsets(mapping, plan, geom)
    c0 = np.exp(1j * beta)  # (n_rx, M)
    scanner = LineSearchScanner(freqs, grid, impl)

    alpha = np.ones(plan.m_subcarriers, dtype=np.complex128)
    tau_flat = np.zeros(geom.n_rx)
    phi_flat = np.zeros(geom.n_rx)
    f_values: list[float] = []
    converged = False
    f_prev = -np.inf
    for _ in range(settings.max_iterations):
        coeff = c0 * np.conj(alpha)[None, :]
        idx, s_best = scanner.scan(coeff)
        tau_flat = grid[idx]
        mag = np.abs(s_best)
        phi_flat = np.where(mag == 0.0, 0.0, (-np.angle(s_best)) % TWO_PI)
        phi_flat = np.where(phi_flat >= TWO_PI, 0.0, phi_flat)

        z = (c0 * np.exp(1j * (phi_flat[:, None] - TWO_PI * np.outer(tau_flat, freqs)))).sum(axis=0)
        zmag = np.abs(z)
        alpha = np.where(zmag > 0, z / np.where(zmag > 0, zmag, 1.0), 1.0)
        f = float(zmag.sum())
        f_values.append(f)
        if np.isfinite(f_prev) and (f - f_prev) <= settings.convergence_tol * max(1.0, abs(f)):
            converged = True
            break
        f_prev = f

    bf = JptaBeamformer(
        tau=tau_flat.reshape(geom.n_x, geom.n_y),
        phi=phi_flat.reshape(geom.n_x, geom.n_y),
        alpha_phases=np.angle(alpha),
        plan=plan,
    )
    trace = OptimizeTrace(
        f_values=np.asarray(f_values),
        converged=converged,
        iterations=len(f_values),
        wall_time_s=time.perf_counter() - start,
    )
    return bf, trace


# ---------------------------------------------------------------------------
# Beam measurements
# ---------------------------------------------------------------------------


def beam_gain(
    weights: np.ndarray,
    plan: FrequencyPlan,
    m: int,
    geom: ArrayGeometry,
    direction: UvDirection,
) -> float:
    """|w_m^H a_m(u, v)|^2; at most n_rx^2. weights is (M, n_rx) or (n_rx,)."""
    weights = np.asarray(weights)
    w_m = weights[m - 1] if weights.ndim == 2 else weights
    a = array_response_matrix(plan, geom, direction.u, direction.v)[m - 1]
    if w_m.shape != a.shape:
        raise ValueError("weights row length must equal n_rx")
    return float(np.abs(np.vdot(w_m, a)) ** 2)


def measured_beam_direction(
    weights: np.ndarray,
    plan: FrequencyPlan,
    m: int,
    geom: ArrayGeometry,
    grid_points: int = 512,
) -> UvDirection:
    """Peak-gain direction of subcarrier m over a UV grid covering the unit disk.

    Ties resolve to the smallest u, then the smallest v.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    weights = np.asarray(weights)
    w_m = weights[m - 1] if weights.ndim == 2 else weights
    pts = np.linspace(-1.0, 1.0, grid_points)
    ratio = plan.frequency(m) / plan.f_c_hz
    gains = beam_gain_map(w_m, geom.n_x, geom.n_y, ratio, pts, pts)
    gains[pts[:, None] ** 2 + pts[None, :] ** 2 > 1.0 + 1e-12] = -1.0
    flat = int(np.argmax(gains))
    iu, iv = divmod(flat, grid_points)
    return UvDirection(float(pts[iu]), float(pts[iv]))


def matching_error(measured: UvDirection, desired: UvDirection) -> float:
    """Euclidean distance between two UV directions."""
    return math.hypot(measured.u - desired.u, measured.v - desired.v)


# ---------------------------------------------------------------------------
# Steering-feasibility witness
# ---------------------------------------------------------------------------


def delay_consistency_epsilon_set(
    f_p: float, f_q: float, f_s: float, beta_range: range = range(-3, 4)
) -> np.ndarray:
    """Lattice of mapping perturbations reachable by integer phase wraps.

    Steering three subcarriers p, q, s exactly requires the perturbation of
    u_des at s to fall in {b / (2 pi (f_p - f_q)) - b' / (2 pi (f_p - f_s))}
    over integers b, b'. A perturbation outside this (measure-zero) lattice
    makes exact full-gain steering impossible.
    """
    b = np.array(list(beta_range), dtype=np.float64)
    vals = b[:, None] / (TWO_PI * (f_p - f_q)) - b[None, :] / (TWO_PI * (f_p - f_s))
    return np.unique(vals.reshape(-1))


@dataclass
class WitnessReport:
    """Numeric evidence that exact multi-subcarrier steering is infeasible."""

    m_subcarriers: int
    n_rx: int
    objective: float
    objective_bound: float
    residual: float
    converged: bool
    epsilon_lattice_integer: bool
    epsilon_half_in_lattice: bool
    mapping: DirectionMapping = field(repr=False)


def infeasibility_witness(
    m_subcarriers: int,
    rng: np.random.Generator,
    plan: FrequencyPlan | None = None,
    geom: ArrayGeometry = ArrayGeometry(8, 8),
    settings: OptimizerSettings = OptimizerSettings(),
    u_max: float = 0.8,
) -> WitnessReport:
    """Optimize a random mapping and report the terminal steering residual.

    For three or more subcarriers a random mapping is (almost surely) not
    exactly steerable, so the residual stays bounded away from zero; the
    single-subcarrier control reaches residual zero. Also evaluates the
    integer-wrap lattice at the closed counterexample frequencies
    (1.5, 1.0, 0.5) / (2 pi), which collapses to the integers and therefore
    excludes the perturbation 0.5.
    """
    if m_subcarriers < 1:
        raise ValueError("m_subcarriers must be >= 1")
    if plan is None:
        plan = FrequencyPlan.from_bandwidth(14e9, 1.4e9, m_subcarriers)
    mapping = random_mapping(m_subcarriers, u_max, rng)
    bf, trace = optimize_rainbow(mapping, plan, geom, settings)
    f = trace.terminal_objective
    bound = m_subcarriers * geom.n_rx
    lattice = delay_consistency_epsilon_set(1.5 / TWO_PI, 1.0 / TWO_PI, 0.5 / TWO_PI)
    lattice_integer = bool(np.all(np.abs(lattice - np.round(lattice)) < 1e-9))
    half_in = bool(np.any(np.abs(lattice - 0.5) < 1e-9))
    return WitnessReport(
        m_subcarriers=m_subcarriers,
        n_rx=geom.n_rx,
        objective=f,
        objective_bound=bound,
        residual=2.0 * bound - 2.0 * f,
        converged=trace.converged,
        epsilon_lattice_integer=lattice_integer,
        epsilon_half_in_lattice=half_in,
        mapping=mapping,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def beamformer_to_dict(bf: JptaBeamformer) -> dict:
    geom = bf.geometry
    return {
        "n_x": geom.n_x,
        "n_y": geom.n_y,
        "tau_seconds": bf.tau.reshape(-1).tolist(),
        "phi_radians": bf.phi.reshape(-1).tolist(),
        "alpha_phases_radians": bf.alpha_phases.tolist(),
        "plan": {
            "f_c_hz": bf.plan.f_c_hz,
            "m": bf.plan.m_subcarriers,
            "delta_f_hz": bf.plan.delta_f_hz,
        },
    }


def beamformer_from_dict(doc: dict) -> JptaBeamformer:
    plan = FrequencyPlan(doc["plan"]["f_c_hz"], doc["plan"]["m"], doc["plan"]["delta_f_hz"])
    n_x, n_y = doc["n_x"], doc["n_y"]
    return JptaBeamformer(
        tau=np.asarray(doc["tau_seconds"], dtype=np.float64).reshape(n_x, n_y),
        phi=np.asarray(doc["phi_radians"], dtype=np.float64).reshape(n_x, n_y),
        alpha_phases=np.asarray(doc["alpha_phases_radians"], dtype=np.float64),
        plan=plan,
    )


def save_beamformer(bf: JptaBeamformer, path) -> None:
    with open(path, "w") as fh:
        json.dump(beamformer_to_dict(bf), fh, indent=1)


def load_beamformer(path) -> JptaBeamformer:
    with open(path) as fh:
        return beamformer_from_dict(json.load(fh))
