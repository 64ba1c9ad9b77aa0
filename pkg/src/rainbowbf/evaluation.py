"""Baseline beamformers, the slotted uplink simulation loop and benchmarks.

Three coverage philosophies are compared against the rainbow beamformer:
beam hopping steers a full-gain beam at one user per slot (with phase
shifters only, so the beam squints across frequency, or with delays only,
squint-free); beam sharing forms one static multi-lobe beam as the
normalized sum of user steering vectors. Rainbow weights are optimized once
and never change with user positions.

Throughput is the slot-averaged sum over allocated subcarriers of
delta_f * log2(1 + p * instantaneous SNR); the allocator itself only ever
sees the average SNR (geometry plus mean channel power), never the fading
realizations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import allocation
from .beamformer import (
    DirectionMapping,
    JptaBeamformer,
    OptimizeTrace,
    OptimizerSettings,
    desired_responses,
    mapping_lines,
    matching_error,
    optimize_rainbow,
)
from .channel import (
    ArrayGeometry,
    FrequencyPlan,
    UserChannelModel,
    array_response_matrix,
    beam_gains_for_users,
    db_to_linear,
    dbm_to_watts,
    mean_channel_power_vector,
    noise_power,
    sample_gain_matrix,
)
from .config import ScenarioCase
from .geometry import SatelliteGeometry, UvDirection, sample_users, user_geometry
from .kernels import IMPL_AUTO, beam_gain_map

# Named RNG substreams; every draw in a scenario is keyed by
# (master seed, case index, repetition, stream, slot) so results are
# reproducible regardless of execution order or worker count.
STREAM_USERS = 0
STREAM_CHANNEL = 1
STREAM_ALLOC = 2
STREAM_WITNESS = 3


def scenario_rng(master_seed: int, case_index: int, rep: int, stream: int, slot: int = 0):
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(case_index, rep, stream, slot)
    )
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class Scheme:
    tag: str
    allocator: str = "jspa"
    power_rule: str = "waterfill"

    def __post_init__(self):
        if self.tag not in ("rainbow", "bh_squint", "bh_no_squint", "beam_sharing"):
            raise ValueError(f"unknown scheme tag {self.tag!r}")
        if self.allocator not in ("jspa", "maxch"):
            raise ValueError(f"unknown allocator {self.allocator!r}")
        if self.power_rule not in ("waterfill", "equal"):
            raise ValueError(f"unknown power rule {self.power_rule!r}")


@dataclass(frozen=True)
class SlotPlan:
    """Slot count and, for beam hopping, the user targeted in each slot."""

    l_slots: int
    targets: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.l_slots < 1:
            raise ValueError("l_slots must be >= 1")
        if self.targets is not None and len(self.targets) != self.l_slots:
            raise ValueError("targets must list one user per slot")

    @classmethod
    def for_scheme(cls, tag: str, k_users: int, l_slots: int | None = None) -> "SlotPlan":
        l_slots = k_users if l_slots is None else l_slots
        if tag in ("bh_squint", "bh_no_squint"):
            return cls(l_slots, tuple(i % k_users for i in range(l_slots)))
        return cls(l_slots, None)


def bh_beamformer(
    target: UvDirection, plan: FrequencyPlan, geom: ArrayGeometry, squint: bool
) -> np.ndarray:
    """Beam-hopping weights, shape (M, n_rx).

    squint=True: phase shifters only, all subcarriers reuse the
    center-frequency steering vector (the beam drifts with frequency).
    squint=False: delays only, each subcarrier gets its own exact response.
    """
    if squint:
        ix, iy = geom.element_offsets()
        w = np.exp(-1j * np.pi * (ix * target.u + iy * target.v))
        return np.tile(w, (plan.m_subcarriers, 1))
    return array_response_matrix(plan, geom, target.u, target.v)


def beam_sharing_beamformer(
    user_dirs: list[UvDirection], plan: FrequencyPlan, geom: ArrayGeometry
) -> np.ndarray:
    """Static normalized sum of user steering vectors at f_c, shape (M, n_rx).

    Amplitudes vary per element (tunable LNAs); the total power is kept at
    ||w||^2 = n_rx. Degenerate zero-sum steering vectors are rejected.
    """
    if not user_dirs:
        raise ValueError("need at least one user direction")
    ix, iy = geom.element_offsets()
    total = np.zeros(geom.n_rx, dtype=np.complex128)
    for d in user_dirs:
        total += np.exp(-1j * np.pi * (ix * d.u + iy * d.v))
    norm = np.linalg.norm(total)
    if norm < 1e-12:
        raise ValueError("user steering vectors sum to zero; beam sharing undefined")
    w = np.sqrt(geom.n_rx) * total / norm
    return np.tile(w, (plan.m_subcarriers, 1))


def _dirichlet_sq(n: int, x: np.ndarray) -> np.ndarray:
    """|sum_{p<n} e^{j p x}|^2 = (sin(n x / 2) / sin(x / 2))^2, singularities -> n^2."""
    half = 0.5 * x
    s = np.sin(half)
    small = np.abs(s) < 1e-12
    out = np.empty_like(x)
    safe = ~small
    out[safe] = (np.sin(n * half[safe]) / s[safe]) ** 2
    out[small] = float(n * n)
    return out


def bh_gain_matrix(
    plan: FrequencyPlan,
    geom: ArrayGeometry,
    target: UvDirection,
    us: np.ndarray,
    vs: np.ndarray,
    squint: bool,
) -> np.ndarray:
    """|w^(m)H a^(m)(u_k, v_k)|^2 for a beam-hopping slot, closed form, (K, M).

    The URA inner product factorizes into two Dirichlet kernels, avoiding the
    n_rx-sized per-element sum.
    """
    ratios = plan.frequencies() / plan.f_c_hz
    us = np.asarray(us, dtype=np.float64)[:, None]
    vs = np.asarray(vs, dtype=np.float64)[:, None]
    if squint:
        chi_u = np.pi * (ratios[None, :] * us - target.u)
        chi_v = np.pi * (ratios[None, :] * vs - target.v)
    else:
        chi_u = np.pi * ratios[None, :] * (us - target.u)
        chi_v = np.pi * ratios[None, :] * (vs - target.v)
    return _dirichlet_sq(geom.n_x, chi_u) * _dirichlet_sq(geom.n_y, chi_v)


def footprint_3db(
    weights: np.ndarray,
    plan: FrequencyPlan,
    m: int,
    geom: ArrayGeometry,
    sat: SatelliteGeometry,
    grid_points: int = 192,
) -> np.ndarray:
    """Ground points (x, y meters from nadir) of subcarrier m's half-power region.

    Scans the UV disk, keeps cells with gain >= half the subcarrier's peak and
    projects those that intersect the Earth back to the surface (azimuthal
    equidistant coordinates around the sub-satellite point).
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    weights = np.asarray(weights)
    w_m = weights[m - 1] if weights.ndim == 2 else weights
    pts = np.linspace(-1.0, 1.0, grid_points)
    ratio = plan.frequency(m) / plan.f_c_hz
    gains = beam_gain_map(w_m, geom.n_x, geom.n_y, ratio, pts, pts)
    uu, vv = np.meshgrid(pts, pts, indexing="ij")
    rr = np.hypot(uu, vv)
    valid = rr <= 1.0 + 1e-12
    gains = np.where(valid, gains, -1.0)
    threshold = 0.5 * gains.max()
    sel = (gains >= threshold) & (rr <= sat.horizon_sin_nadir)
    r = rr[sel]
    theta = np.arcsin(np.clip(r, 0.0, 1.0))
    scale = (sat.earth_radius_m + sat.altitude_m) / sat.earth_radius_m
    psi = np.arcsin(np.clip(scale * r, 0.0, 1.0)) - theta
    with np.errstate(invalid="ignore", divide="ignore"):
        cosb = np.where(r > 0, uu[sel] / np.where(r > 0, r, 1.0), 1.0)
        sinb = np.where(r > 0, vv[sel] / np.where(r > 0, r, 1.0), 0.0)
    arc = sat.earth_radius_m * psi
    return np.column_stack([arc * cosb, arc * sinb])


@dataclass
class SchemeMetrics:
    tag: str
    allocator: str
    power_rule: str
    realized_throughput_bps: float
    approx_throughput_bps: float
    active_ratio_per_slot: np.ndarray
    mean_active_ratio: float
    mean_footprint_user_fraction: float


@dataclass
class MetricsReport:
    case: ScenarioCase
    l_slots: int
    schemes: dict[str, SchemeMetrics]
    optimizer_wall_s: float | None = None
    f_trace: np.ndarray | None = None
    beam_rows: list["BeamMetricRow"] = field(default_factory=list)


def build_users(case: ScenarioCase) -> list[UserChannelModel]:
    """Sample ground users for one scenario repetition and derive channel state."""
    config = case.config
    sat = config.sat()
    plan = case.plan()
    link = config.link()
    rng = scenario_rng(config.seed, case.case_index, case.rep, STREAM_USERS)
    positions = sample_users(case.k_users, config.coverage_radius_m, rng, config.earth_radius_m)
    kappa = db_to_linear(config.rician_factor_db)
    budget = dbm_to_watts(config.power_budget_dbm)
    users = []
    for pos in positions:
        direction, slant = user_geometry(sat, pos)
        users.append(
            UserChannelModel(
                direction=direction,
                slant_distance_m=slant,
                rician_kappa=kappa,
                eta=mean_channel_power_vector(plan, slant, link),
                power_budget_w=budget,
            )
        )
    return users


def run_scenario(
    case: ScenarioCase,
    rainbow: tuple[JptaBeamformer, OptimizeTrace] | None = None,
    impl: str = IMPL_AUTO,
) -> MetricsReport:
    """Simulate one scenario repetition across all configured schemes.

    Channel fading is redrawn independently every slot and shared between
    schemes; the subcarrier visit order of the greedy allocator is likewise
    keyed per slot, so schemes see identical randomness and differ only in
    their beams. Fully deterministic given the master seed.
    """
    config = case.config
    plan = case.plan()
    geom = config.geom()
    sigma2 = noise_power(plan, config.link())
    users = build_users(case)
    k_users = case.k_users
    eta = np.stack([u.eta for u in users])
    kappa = np.array([u.rician_kappa for u in users])
    budgets = np.array([u.power_budget_w for u in users])
    us = np.array([u.direction.u for u in users])
    vs = np.array([u.direction.v for u in users])

    optimizer_wall = None
    f_trace = None
    static_gains: dict[str, np.ndarray] = {}
    if "rainbow" in config.schemes:
        if rainbow is None:
            mapping = config.build_mapping()
            rainbow = optimize_rainbow(mapping, plan, geom, config.optimizer_settings(), impl)
        bf, trace = rainbow
        optimizer_wall = trace.wall_time_s
        f_trace = trace.f_values
        static_gains["rainbow"] = beam_gains_for_users(bf.weights_matrix(), plan, geom, us, vs)
    if "beam_sharing" in config.schemes:
        w = beam_sharing_beamformer([u.direction for u in users], plan, geom)
        static_gains["beam_sharing"] = beam_gains_for_users(w, plan, geom, us, vs)

    l_slots = case.l_slots()
    n_rx = geom.n_rx
    half_peak = 0.5 * n_rx * n_rx
    acc = {
        tag: {
            "realized": 0.0,
            "approx": 0.0,
            "active": np.zeros(l_slots),
            "footprint": np.zeros(l_slots),
        }
        for tag in config.schemes
    }
    slot_plans = {tag: SlotPlan.for_scheme(tag, k_users, l_slots) for tag in config.schemes}

    service_floor = 10.0 ** (-config.bh_service_contour_db / 10.0) * n_rx * n_rx
    for slot in range(l_slots):
        g = sample_gain_matrix(
            eta, kappa, scenario_rng(config.seed, case.case_index, case.rep, STREAM_CHANNEL, slot)
        )
        fading = np.abs(g) ** 2 / eta
        for tag in config.schemes:
            if tag in static_gains:
                gains = static_gains[tag]
                gamma_alloc = gamma = eta * gains / (n_rx * sigma2)
            else:
                target = users[slot_plans[tag].targets[slot]].direction
                gains = bh_gain_matrix(plan, geom, target, us, vs, squint=tag == "bh_squint")
                gamma = eta * gains / (n_rx * sigma2)
                # Beam hopping serves only the slot's service footprint: uplink
                # resources go to users inside the edge-of-service gain contour.
                inside = gains.max(axis=1) >= service_floor
                gamma_alloc = gamma * inside[:, None]
            rng = scenario_rng(config.seed, case.case_index, case.rep, STREAM_ALLOC, slot)
            if case.allocator == "jspa":
                alloc = allocation.jspa_greedy(gamma_alloc, budgets, rng)
            else:
                alloc = allocation.maxch_allocate(gamma_alloc, budgets)
            if case.power_rule == "equal":
                alloc = allocation.Allocation(
                    assign=alloc.assign, power=allocation.equal_power(alloc.assign, budgets)
                )
            a = acc[tag]
            a["realized"] += allocation.throughput(alloc, gamma * fading, plan.delta_f_hz)
            a["approx"] += allocation.throughput(alloc, gamma, plan.delta_f_hz)
            a["active"][slot] = allocation.active_user_ratio(alloc)
            a["footprint"][slot] = float(np.mean(gains.max(axis=1) >= half_peak))

    schemes = {
        tag: SchemeMetrics(
            tag=tag,
            allocator=case.allocator,
            power_rule=case.power_rule,
            realized_throughput_bps=a["realized"] / l_slots,
            approx_throughput_bps=a["approx"] / l_slots,
            active_ratio_per_slot=a["active"],
            mean_active_ratio=float(a["active"].mean()),
            mean_footprint_user_fraction=float(a["footprint"].mean()),
        )
        for tag, a in acc.items()
    }
    return MetricsReport(
        case=case,
        l_slots=l_slots,
        schemes=schemes,
        optimizer_wall_s=optimizer_wall,
        f_trace=f_trace,
    )


# ---------------------------------------------------------------------------
# Beam metrics (per-subcarrier pointing accuracy)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamMetricRow:
    variant: str
    mapping_kind: str
    subcarrier: int
    frequency_hz: float
    desired_u: float
    desired_v: float
    measured_u: float
    measured_v: float
    matching_error: float
    gain_at_desired: float
    peak_gain: float


def beam_metrics(
    weights: np.ndarray,
    mapping: DirectionMapping,
    plan: FrequencyPlan,
    geom: ArrayGeometry,
    grid_points: int = 512,
    stride: int = 1,
    variant: str = "jpta",
    mapping_kind: str = "lines",
) -> list[BeamMetricRow]:
    """Measured beam direction, matching error and gains per sampled subcarrier."""
    responses = desired_responses(mapping, plan, geom)
    gain_at_desired = np.abs(np.einsum("me,me->m", np.conj(weights), responses)) ** 2
    pts = np.linspace(-1.0, 1.0, grid_points)
    invalid = pts[:, None] ** 2 + pts[None, :] ** 2 > 1.0 + 1e-12
    freqs = plan.frequencies()
    rows = []
    for m in range(1, plan.m_subcarriers + 1, stride):
        gains = beam_gain_map(weights[m - 1], geom.n_x, geom.n_y, freqs[m - 1] / plan.f_c_hz, pts, pts)
        gains[invalid] = -1.0
        flat = int(np.argmax(gains))
        iu, iv = divmod(flat, grid_points)
        measured = UvDirection(float(pts[iu]), float(pts[iv]))
        desired = UvDirection(float(mapping.u_des[m - 1]), float(mapping.v_des[m - 1]))
        rows.append(
            BeamMetricRow(
                variant=variant,
                mapping_kind=mapping_kind,
                subcarrier=m,
                frequency_hz=float(freqs[m - 1]),
                desired_u=desired.u,
                desired_v=desired.v,
                measured_u=measured.u,
                measured_v=measured.v,
                matching_error=matching_error(measured, desired),
                gain_at_desired=float(gain_at_desired[m - 1]),
                peak_gain=float(gains[iu, iv]),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Optimizer runtime benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkRow:
    impl: str
    m_subcarriers: int
    n_rx: int
    grid_points: int
    iterations: int
    runs: int
    mean_seconds: float
    std_seconds: float


def runtime_benchmark(
    m_values: tuple[int, ...] = (128, 256, 512, 1024),
    n_rx_values: tuple[int, ...] = (16, 64, 256),
    runs: int = 5,
    iterations: int = 8,
    impls: tuple[str, ...] = (IMPL_AUTO,),
    f_c_hz: float = 14e9,
    bandwidth_hz: float = 1.4e9,
    u_max: float = 0.693,
    settings: OptimizerSettings = OptimizerSettings(),
) -> list[BenchmarkRow]:
    """Mean optimizer wall time per (M, N_rx) grid point and kernel lane.

    The iteration count is pinned (convergence_tol 0) so the timing isolates
    the per-iteration cost, whose growth should be linear in both M and N_rx
    for a fixed delay grid.
    """
    rows = []
    bench_settings = OptimizerSettings(
        tau_max_s=settings.tau_max_s,
        grid_step_s=settings.grid_step_s,
        convergence_tol=0.0,
        max_iterations=iterations,
    )
    grid_points = bench_settings.tau_grid().size
    for impl in impls:
        for m_sub in m_values:
            plan = FrequencyPlan.from_bandwidth(f_c_hz, bandwidth_hz, m_sub)
            for n_rx in n_rx_values:
                side = int(round(np.sqrt(n_rx)))
                if side * side != n_rx:
                    raise ValueError("n_rx values must be perfect squares")
                geom = ArrayGeometry(side, side)
                mapping = mapping_lines(m_sub, u_max, n_x=side)
                times = []
                for _ in range(runs):
                    start = time.perf_counter()
                    optimize_rainbow(mapping, plan, geom, bench_settings, impl)
                    times.append(time.perf_counter() - start)
                rows.append(
                    BenchmarkRow(
                        impl=impl,
                        m_subcarriers=m_sub,
                        n_rx=n_rx,
                        grid_points=grid_points,
                        iterations=iterations,
                        runs=runs,
                        mean_seconds=float(np.mean(times)),
                        std_seconds=float(np.std(times)),
                    )
                )
    return rows
