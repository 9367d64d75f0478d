"""Two-ray radio model: received power, channel-gain estimation, SINR, and
rate-radius calibration.

All quantities are linear (no dB): powers in watts, frequencies in Hz,
distances in meters. The frequency dependence of a data channel relative to
the control channel is carried entirely by the fourth-power frequency ratio
used for gain scaling; antenna gains themselves are frequency-flat constants.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

#: Supported conventions for mapping a control-channel radius onto a data
#: channel. "eq3" shrinks the radius as frequency rises (consistent with the
#: gain scaling); "eq24" is the reciprocal reading and is kept selectable.
RADIUS_SCALING_CONVENTIONS = ("eq3", "eq24")


@dataclass(frozen=True)
class PropagationParams:
    """Antenna and noise constants of the two-ray link budget."""

    g_t: float = 1.0
    g_r: float = 1.0
    h_t: float = 1.5
    h_r: float = 1.5
    sys_loss: float = 1.0
    noise_power: float = 1e-10

    def __post_init__(self) -> None:
        for name in ("g_t", "g_r", "h_t", "h_r", "sys_loss", "noise_power"):
            if getattr(self, name) <= 0:
                raise ValueError(f"PropagationParams.{name} must be > 0")


@dataclass(frozen=True)
class ChannelPlan:
    """Control-channel frequency plus the data-channel frequencies."""

    f0: float
    data_freqs: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.f0 <= 0:
            raise ValueError("ChannelPlan.f0 must be > 0")
        if not self.data_freqs or any(f <= 0 for f in self.data_freqs):
            raise ValueError("ChannelPlan.data_freqs must be non-empty and positive")
        object.__setattr__(self, "data_freqs", tuple(self.data_freqs))

    @property
    def n_channels(self) -> int:
        return len(self.data_freqs)


@dataclass(frozen=True)
class RateTable:
    """Discrete rate set with SNR thresholds and control-channel radii.

    Either ``snr_thresholds`` or ``ccc_radii`` may be omitted at construction
    time; :func:`calibrate_radii` fills the missing list so that a node at
    distance ``ccc_radii[q]`` transmitting at full power on the control
    channel sits exactly at ``snr_thresholds[q]``.
    """

    rates: tuple[float, ...]
    snr_thresholds: Optional[tuple[float, ...]] = None
    ccc_radii: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rates", tuple(self.rates))
        if not self.rates or any(r <= 0 for r in self.rates):
            raise ValueError("RateTable.rates must be non-empty and positive")
        if any(b <= a for a, b in zip(self.rates, self.rates[1:])):
            raise ValueError("RateTable.rates must be strictly increasing")
        if self.snr_thresholds is not None:
            object.__setattr__(self, "snr_thresholds", tuple(self.snr_thresholds))
            self._check_list("snr_thresholds", self.snr_thresholds, increasing=True)
        if self.ccc_radii is not None:
            object.__setattr__(self, "ccc_radii", tuple(self.ccc_radii))
            self._check_list("ccc_radii", self.ccc_radii, increasing=False)

    def _check_list(self, name: str, values: Sequence[float], increasing: bool) -> None:
        if len(values) != len(self.rates):
            raise ValueError(f"RateTable.{name} must have length {len(self.rates)}")
        if any(v <= 0 for v in values):
            raise ValueError(f"RateTable.{name} must be positive")
        if increasing:
            ok = all(b > a for a, b in zip(values, values[1:]))
        else:
            ok = all(b < a for a, b in zip(values, values[1:]))
        if not ok:
            order = "increasing" if increasing else "decreasing"
            raise ValueError(f"RateTable.{name} must be strictly {order}")

    @property
    def q_count(self) -> int:
        return len(self.rates)


def received_power(p_t: float, d: float, params: PropagationParams) -> float:
    """Two-ray received power at distance ``d`` for transmit power ``p_t``."""
    if p_t <= 0:
        raise ValueError("transmit power must be > 0")
    if d <= 0:
        raise ValueError("distance must be > 0")
    return (
        p_t * params.g_t * params.g_r * params.h_t**2 * params.h_r**2
        / (d**4 * params.sys_loss)
    )


def gain_from_rts(p_rx: float, p_max: float) -> float:
    """Control-channel gain inferred from the received power of a full-power
    control packet."""
    if p_max <= 0:
        raise ValueError("p_max must be > 0")
    if p_rx <= 0:
        raise ValueError("received power must be > 0")
    return p_rx / p_max


def scale_gain(h0: float, f0: float, fm: float) -> float:
    """Translate a control-channel gain to a data channel at frequency ``fm``."""
    if h0 < 0:
        raise ValueError("gain must be >= 0")
    if f0 <= 0 or fm <= 0:
        raise ValueError("frequencies must be > 0")
    return h0 * (f0 / fm) ** 4


def sinr(
    p_t: float,
    d: float,
    p_inf: float,
    fm: float,
    params: PropagationParams,
    plan: ChannelPlan,
) -> float:
    """Signal-to-interference-plus-noise ratio at distance ``d`` on the
    channel at frequency ``fm``, with ``p_inf`` watts of interference."""
    if d <= 0:
        raise ValueError("distance must be > 0")
    if p_inf < 0:
        raise ValueError("interference power must be >= 0")
    signal = received_power(p_t, d, params) * (plan.f0 / fm) ** 4
    return signal / (params.noise_power + p_inf)


def link_budget_constant(p_max: float, params: PropagationParams) -> float:
    """Full-power SNR at 1 m on the control channel; the SNR at distance d
    is this constant divided by d^4."""
    return (
        p_max * params.g_t * params.g_r * params.h_t**2 * params.h_r**2
        / (params.sys_loss * params.noise_power)
    )


def calibrate_radii(
    table: RateTable,
    p_max: float,
    params: PropagationParams,
    plan: ChannelPlan,
) -> RateTable:
    """Fill the missing list of a rate table so thresholds and control-channel
    radii agree at full transmit power.

    If both lists are present they are validated against each other (1e-9
    relative) instead of recomputed.
    """
    if table.snr_thresholds is None and table.ccc_radii is None:
        raise ValueError("either snr_thresholds or ccc_radii must be provided")
    k = link_budget_constant(p_max, params)
    if table.ccc_radii is not None:
        thresholds = tuple(k / r**4 for r in table.ccc_radii)
        if table.snr_thresholds is not None:
            for got, want in zip(table.snr_thresholds, thresholds):
                if abs(got - want) > 1e-9 * want:
                    raise ValueError(
                        "snr_thresholds and ccc_radii are mutually inconsistent"
                    )
            return table
        return replace(table, snr_thresholds=thresholds)
    radii = tuple((k / s) ** 0.25 for s in table.snr_thresholds)
    return replace(table, ccc_radii=radii)


def radius_on_channel(r_q: float, f0: float, fm: float, convention: str = "eq3") -> float:
    """Transmission radius on the data channel at ``fm`` for a rate whose
    control-channel radius is ``r_q``."""
    if r_q <= 0 or f0 <= 0 or fm <= 0:
        raise ValueError("inputs must be > 0")
    if convention not in RADIUS_SCALING_CONVENTIONS:
        raise ValueError(f"unknown radius scaling convention: {convention!r}")
    if convention == "eq3":
        return r_q * (f0 / fm)
    return r_q * (fm / f0)


def default_params() -> PropagationParams:
    """Documented default link-budget constants (unit antenna gains, 1.5 m
    antennas, no system loss, 1e-10 W noise floor)."""
    return PropagationParams()


def default_plan(n_channels: int = 6, f0: float = 2.4e9,
                 first_data_freq: float = 2.41e9, spacing: float = 1e7) -> ChannelPlan:
    """Default channel plan: 2.4 GHz control channel, data channels above it."""
    freqs = tuple(first_data_freq + i * spacing for i in range(n_channels))
    return ChannelPlan(f0=f0, data_freqs=freqs)


def default_rate_table(p_max: float = 0.1,
                       params: Optional[PropagationParams] = None) -> RateTable:
    """Default three-rate table (2, 5.5, 11 Mb/s with 250/200/100 m control
    radii), thresholds calibrated for ``p_max``."""
    params = params or default_params()
    table = RateTable(rates=(2e6, 5.5e6, 11e6), ccc_radii=(250.0, 200.0, 100.0))
    return calibrate_radii(table, p_max, params, default_plan())
