"""Multi-channel diversity MAC: allocation, protocol, analysis, simulation."""

from .propagation import (
    ChannelPlan,
    PropagationParams,
    RateTable,
    calibrate_radii,
    default_params,
    default_plan,
    default_rate_table,
    gain_from_rts,
    radius_on_channel,
    received_power,
    scale_gain,
    sinr,
)
from .channel_model import PuActivityModel, SlotSchedule, advance_slot, sense
from .allocator import (
    Allocation,
    AllocationProblem,
    build_problem,
    parse_instance,
    prune_ip,
    solve_bruteforce,
    solve_dp,
)
from .protocol import (
    CccContention,
    ControlPacket,
    Dcul,
    DculEntry,
    MacTimings,
    TransmissionGrant,
    burst_time,
    common_channels,
    compute_grant,
    max_packets,
    nav_after_cts,
    nav_after_res,
    on_rts_received,
    overhear,
    release_grant,
)
from .analysis import (
    AnalysisScenario,
    expected_burst_time,
    expected_packets,
    expected_rate,
    expected_throughput,
    gamma,
    max_distance,
    rate_probabilities,
)
from .config import ScenarioConfig, SweepSpec, load_config, parse_config
from .simulator import (
    Metrics,
    baseline_multi_radio_split,
    baseline_single_channel,
    place_nodes,
    rate_gain_table,
    run,
    run_traced,
    sweep,
)

__all__ = [
    "Allocation",
    "AllocationProblem",
    "AnalysisScenario",
    "CccContention",
    "ChannelPlan",
    "ControlPacket",
    "Dcul",
    "DculEntry",
    "MacTimings",
    "Metrics",
    "PropagationParams",
    "PuActivityModel",
    "RateTable",
    "ScenarioConfig",
    "SlotSchedule",
    "SweepSpec",
    "TransmissionGrant",
    "advance_slot",
    "baseline_multi_radio_split",
    "baseline_single_channel",
    "build_problem",
    "burst_time",
    "calibrate_radii",
    "common_channels",
    "compute_grant",
    "default_params",
    "default_plan",
    "default_rate_table",
    "expected_burst_time",
    "expected_packets",
    "expected_rate",
    "expected_throughput",
    "gain_from_rts",
    "gamma",
    "load_config",
    "max_distance",
    "max_packets",
    "nav_after_cts",
    "nav_after_res",
    "on_rts_received",
    "overhear",
    "parse_config",
    "parse_instance",
    "place_nodes",
    "prune_ip",
    "radius_on_channel",
    "rate_gain_table",
    "rate_probabilities",
    "received_power",
    "release_grant",
    "run",
    "run_traced",
    "scale_gain",
    "sense",
    "sinr",
    "solve_bruteforce",
    "solve_dp",
    "sweep",
]
