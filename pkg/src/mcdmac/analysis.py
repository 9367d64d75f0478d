"""Closed-form performance model for a node pair.

Given a fixed per-channel power allocation, the distance at which each rate
remains decodable scales the calibrated rate radii by a dimensionless factor
(allocated power over full power, discounted by interference). Under radial
placement (distance density 2d on the unit disk, radii normalized by the
arena radius) the per-rate selection probabilities, the expected aggregate
rate, and the expected packet count, burst time, and throughput of a granted
burst all follow in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .propagation import ChannelPlan, PropagationParams, RateTable, radius_on_channel
from .protocol import MacTimings, burst_time, max_packets


@dataclass(frozen=True)
class AnalysisScenario:
    """A node pair's channel set, power allocation, and arena."""

    p_sd: tuple[float, ...]
    p_inf: tuple[float, ...]
    table: RateTable
    plan: ChannelPlan
    params: PropagationParams
    p_max: float
    area_radius: float
    timings: MacTimings
    radius_scaling: str = "eq3"

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_sd", tuple(self.p_sd))
        object.__setattr__(self, "p_inf", tuple(self.p_inf))
        if not self.p_sd:
            raise ValueError("need at least one channel")
        if len(self.p_sd) != len(self.p_inf):
            raise ValueError("p_sd and p_inf must have equal length")
        if len(self.p_sd) > self.plan.n_channels:
            raise ValueError("more powers than channels in the plan")
        if any(p < 0 for p in self.p_sd) or any(p < 0 for p in self.p_inf):
            raise ValueError("powers and interference must be >= 0")
        if self.p_max <= 0 or self.area_radius <= 0:
            raise ValueError("p_max and area_radius must be > 0")
        if sum(self.p_sd) > self.p_max * (1 + 1e-12):
            raise ValueError("allocated power exceeds the budget")
        if self.table.ccc_radii is None:
            raise ValueError("rate table must carry calibrated radii")

    @property
    def m_channels(self) -> int:
        return len(self.p_sd)


def gamma(scenario: AnalysisScenario, m: int) -> float:
    """Radius scaling factor on channel ``m``: relative allocated power over
    the interference-inflated noise floor, to the one-fourth power."""
    p_n = scenario.params.noise_power
    ratio = scenario.p_sd[m] * p_n / (scenario.p_max * (p_n + scenario.p_inf[m]))
    return ratio**0.25


def channel_radii(scenario: AnalysisScenario, m: int) -> tuple[float, ...]:
    """Per-rate transmission radii on data channel ``m``."""
    fm = scenario.plan.data_freqs[m]
    return tuple(
        radius_on_channel(r, scenario.plan.f0, fm, scenario.radius_scaling)
        for r in scenario.table.ccc_radii
    )


def rate_probabilities(scenario: AnalysisScenario, m: int) -> tuple[float, ...]:
    """Probability vector over {no transmission, rate 1, ..., rate Q} on
    channel ``m`` under radial placement.

    Index 0 is the no-transmission probability; index q (1-based) belongs to
    the q-th rate. Radius-scaling products are clamped to the arena radius so
    the vector always sums to one.
    """
    g = gamma(scenario, m)
    radii = channel_radii(scenario, m)
    u = [min(1.0, g * r / scenario.area_radius) for r in radii]
    q_count = scenario.table.q_count
    probs = [0.0] * (q_count + 1)
    probs[q_count] = u[q_count - 1] ** 2
    for i in range(q_count - 1):
        probs[i + 1] = u[i] ** 2 - u[i + 1] ** 2
    probs[0] = 1.0 - u[0] ** 2
    return tuple(probs)


def classify_rate(scenario: AnalysisScenario, m: int, d: float) -> Optional[int]:
    """Highest usable rate index at distance ``d`` on channel ``m`` (None when
    even the lowest rate is out of reach); thresholds closed toward the
    higher rate."""
    if d < 0:
        raise ValueError("distance must be >= 0")
    g = gamma(scenario, m)
    radii = channel_radii(scenario, m)
    best = None
    for i, r in enumerate(radii):
        if d <= g * r:
            best = i
    return best


def expected_rate(scenario: AnalysisScenario) -> float:
    """Expected aggregate rate across all channels."""
    total = 0.0
    for m in range(scenario.m_channels):
        probs = rate_probabilities(scenario, m)
        total += sum(p * r for p, r in zip(probs[1:], scenario.table.rates))
    return total


def expected_packets(scenario: AnalysisScenario) -> int:
    """Packet count of a granted burst, evaluated at the expected rate."""
    e_rate = expected_rate(scenario)
    if e_rate <= 0:
        return 0
    return max_packets(e_rate, scenario.timings)


def expected_burst_time(scenario: AnalysisScenario) -> float:
    """Burst duration at the expected rate and packet count (0 when no
    packet fits)."""
    e_rate = expected_rate(scenario)
    n = expected_packets(scenario)
    if n < 1:
        return 0.0
    return burst_time(n, e_rate, scenario.timings)


def expected_throughput(scenario: AnalysisScenario) -> float:
    """Expected burst goodput: packets times payload over the burst time."""
    n = expected_packets(scenario)
    if n < 1:
        return 0.0
    t = expected_burst_time(scenario)
    return n * scenario.timings.l_data / t


def max_distance(
    rate_choices: Sequence[Optional[int]], scenario: AnalysisScenario
) -> float:
    """Largest pair distance at which the given per-channel rate choices stay
    affordable within the full power budget.

    ``rate_choices[m]`` is a rate index or None to skip channel ``m``; at
    least one channel must be chosen.
    """
    if len(rate_choices) != scenario.m_channels:
        raise ValueError("one choice per channel required")
    p_n = scenario.params.noise_power
    total = 0.0
    chosen = 0
    for m, q in enumerate(rate_choices):
        if q is None:
            continue
        if not 0 <= q < scenario.table.q_count:
            raise ValueError(f"rate index {q} out of range")
        r_m = channel_radii(scenario, m)[q]
        total += (1.0 / r_m) ** 4 * (p_n + scenario.p_inf[m]) / p_n
        chosen += 1
    if chosen == 0:
        raise ValueError("at least one channel must carry a rate")
    return total ** (-0.25)
