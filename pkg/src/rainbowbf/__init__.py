"""Wideband LEO satellite uplink simulator.

Core pieces: curved-Earth geometry and UV directions, a Rician channel with
per-subcarrier link budget, a joint phase-time array beamformer optimized to
spread per-subcarrier beams over the coverage area, greedy joint subcarrier
and power allocation with baselines, and a slotted Monte-Carlo evaluation
harness behind the `rainbowbf` CLI.
"""

from .allocation import (
    Allocation,
    WaterFillResult,
    active_user_ratio,
    equal_power,
    exhaustive_search,
    jspa_greedy,
    maxch_allocate,
    throughput,
    water_fill,
)
from .beamformer import (
    DirectionMapping,
    JptaBeamformer,
    OptimizerSettings,
    OptimizeTrace,
    beam_gain,
    infeasibility_witness,
    jpta_weights,
    line_search_ttd,
    load_beamformer,
    mapping_lines,
    mapping_spiral,
    matching_error,
    measured_beam_direction,
    objective_value,
    optimal_alpha,
    optimal_phase_shifts,
    optimize_rainbow,
    residual_value,
    save_beamformer,
)
from .channel import (
    ArrayGeometry,
    ChannelRealization,
    FrequencyPlan,
    LinkBudget,
    UserChannelModel,
    array_response,
    average_snr,
    mean_channel_power,
    noise_power,
    realize_channels,
    sample_gain,
)
from .config import ScenarioConfig, parse_config, parse_config_text, serialize_config
from .evaluation import (
    MetricsReport,
    Scheme,
    SlotPlan,
    beam_sharing_beamformer,
    bh_beamformer,
    footprint_3db,
    run_scenario,
    runtime_benchmark,
)
from .geometry import (
    GroundUserPosition,
    SatelliteGeometry,
    UvDirection,
    ground_from_uv,
    sample_users,
    user_geometry,
    uv_from_angles,
)

__version__ = "0.1.0"
