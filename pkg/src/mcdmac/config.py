"""Scenario configuration: a single sectioned text file shared by every
subcommand, with strict key validation so typos fail loudly.

Sections: ``[scenario]`` run shape (flows, channels, arena, seed, strategy),
``[radio]`` link-budget constants and the channel plan, ``[rates]`` the
discrete rate set, ``[mac]`` frame and timing constants, optional
``[analysis]`` for the closed-form model and ``[sweep]`` for parameter
sweeps.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional

from .analysis import AnalysisScenario
from .propagation import (
    ChannelPlan,
    PropagationParams,
    RateTable,
    RADIUS_SCALING_CONVENTIONS,
    calibrate_radii,
)
from .protocol import MacTimings

STRATEGIES = ("mcd_mac", "single_channel_best", "multi_radio_split")
PLACEMENTS = ("disk", "pair_radial")
SWEEP_KINDS = ("rate_gain", "interference", "flows")


class ConfigError(ValueError):
    """Configuration rejected; ``problems`` lists '[section] key: reason'."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration: " + "; ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class SweepSpec:
    """Axis definition for the sweep subcommand."""

    kind: str = "flows"
    distances_m: tuple[float, ...] = ()
    channel_counts: tuple[int, ...] = ()
    interference_w: tuple[float, ...] = ()
    flow_counts: tuple[int, ...] = ()
    strategies: tuple[str, ...] = STRATEGIES
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class AnalysisSettings:
    """Power split and interference assumed by the closed-form model."""

    powers: str = "split"  # "split", "single", or explicit list text
    interference_w: float = 0.0
    m_channels: int = 0  # 0 = scenario channel count


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one simulation run needs; bit-reproducible given the seed."""

    scenario_id: str = "scenario"
    flows: int = 4
    n_channels: int = 6
    area_radius_m: float = 125.0
    placement: str = "disk"
    seed: int = 1
    duration_slots: int = 50
    strategy: str = "mcd_mac"
    split_radios: int = 0
    p_occupy: float = 0.5
    interference_w: float = 0.0

    p_max_w: float = 0.1
    noise_w: float = 1e-10
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    antenna_height_tx_m: float = 1.5
    antenna_height_rx_m: float = 1.5
    system_loss: float = 1.0
    ccc_freq_hz: float = 2.4e9
    data_freq_start_hz: float = 2.41e9
    data_freq_step_hz: float = 1e7
    radius_scaling: str = "eq3"

    rates_bps: tuple[float, ...] = (2e6, 5.5e6, 11e6)
    ccc_radii_m: tuple[float, ...] = (250.0, 200.0, 100.0)
    basic_rate_bps: float = 2e6

    sifs_s: float = 10e-6
    difs_s: float = 50e-6
    slot_time_s: float = 20e-6
    cw_slots: int = 32
    l_data_bits: int = 8000
    l_ack_bits: int = 112
    l_rts_bits: int = 160
    l_cts_bits: int = 112
    l_res_bits: int = 112
    coherence_time_s: float = 1.0
    p_min_inf_w: float = 1e-9
    slot_duration_s: float = 0.1
    sensing_s: float = 5e-3

    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    sweep: Optional[SweepSpec] = None

    # ------------------------------------------------------------------
    # derived model objects
    # ------------------------------------------------------------------

    def propagation_params(self) -> PropagationParams:
        return PropagationParams(
            g_t=self.antenna_gain_tx,
            g_r=self.antenna_gain_rx,
            h_t=self.antenna_height_tx_m,
            h_r=self.antenna_height_rx_m,
            sys_loss=self.system_loss,
            noise_power=self.noise_w,
        )

    def channel_plan(self, n_channels: Optional[int] = None) -> ChannelPlan:
        n = n_channels if n_channels is not None else self.n_channels
        freqs = tuple(
            self.data_freq_start_hz + i * self.data_freq_step_hz for i in range(n)
        )
        return ChannelPlan(f0=self.ccc_freq_hz, data_freqs=freqs)

    def rate_table(self) -> RateTable:
        table = RateTable(rates=self.rates_bps, ccc_radii=self.ccc_radii_m)
        return calibrate_radii(
            table, self.p_max_w, self.propagation_params(), self.channel_plan()
        )

    def mac_timings(self) -> MacTimings:
        return MacTimings(
            t_sifs=self.sifs_s,
            t_difs=self.difs_s,
            slot_time=self.slot_time_s,
            l_data=self.l_data_bits,
            l_ack=self.l_ack_bits,
            l_rts=self.l_rts_bits,
            l_cts=self.l_cts_bits,
            l_res=self.l_res_bits,
            r_basic=self.basic_rate_bps,
            ct_min=self.coherence_time_s,
            p_min_inf=self.p_min_inf_w,
            cw_slots=self.cw_slots,
        )

    def ccc_range_m(self) -> float:
        """Decode range of control packets: the radius of the basic rate."""
        if self.basic_rate_bps in self.rates_bps:
            return self.ccc_radii_m[self.rates_bps.index(self.basic_rate_bps)]
        return self.ccc_radii_m[0]

    def analysis_scenario(self) -> AnalysisScenario:
        m = self.analysis.m_channels or self.n_channels
        if self.analysis.powers == "split":
            powers = tuple(self.p_max_w / m for _ in range(m))
        elif self.analysis.powers == "single":
            powers = (self.p_max_w,) + (0.0,) * (m - 1)
        else:
            powers = tuple(float(tok) for tok in self.analysis.powers.split())
            m = len(powers)
        return AnalysisScenario(
            p_sd=powers,
            p_inf=(self.analysis.interference_w,) * m,
            table=self.rate_table(),
            plan=self.channel_plan(max(m, self.n_channels)),
            params=self.propagation_params(),
            p_max=self.p_max_w,
            area_radius=self.area_radius_m,
            timings=self.mac_timings(),
            radius_scaling=self.radius_scaling,
        )

    # ------------------------------------------------------------------
    # validation
    # ------------------------------------------------------------------

    def validate(self) -> None:
        problems: list[str] = []

        def need(cond: bool, where: str, msg: str) -> None:
            if not cond:
                problems.append(f"[{where}] {msg}")

        need(self.flows >= 1, "scenario", "flows must be >= 1")
        need(self.n_channels >= 1, "scenario", "n_channels must be >= 1")
        need(self.area_radius_m > 0, "scenario", "area_radius_m must be > 0")
        need(self.placement in PLACEMENTS, "scenario",
             f"placement must be one of {PLACEMENTS}")
        need(self.duration_slots >= 0, "scenario", "duration_slots must be >= 0")
        need(self.strategy in STRATEGIES, "scenario",
             f"strategy must be one of {STRATEGIES}")
        need(self.split_radios >= 0, "scenario", "split_radios must be >= 0")
        need(0.0 <= self.p_occupy <= 1.0, "scenario", "p_occupy must lie in [0, 1]")
        need(self.interference_w >= 0, "scenario", "interference_w must be >= 0")
        if self.placement == "pair_radial":
            need(self.flows == 1, "scenario", "pair_radial placement implies flows = 1")

        for name in ("p_max_w", "noise_w", "antenna_gain_tx", "antenna_gain_rx",
                     "antenna_height_tx_m", "antenna_height_rx_m", "system_loss",
                     "ccc_freq_hz", "data_freq_start_hz", "data_freq_step_hz"):
            need(getattr(self, name) > 0, "radio", f"{name} must be > 0")
        need(self.radius_scaling in RADIUS_SCALING_CONVENTIONS, "radio",
             f"radius_scaling must be one of {RADIUS_SCALING_CONVENTIONS}")

        need(len(self.rates_bps) >= 1, "rates", "rates_bps must be non-empty")
        need(len(self.rates_bps) == len(self.ccc_radii_m), "rates",
             "rates_bps and ccc_radii_m must have equal length")
        need(all(r > 0 for r in self.rates_bps), "rates", "rates_bps must be positive")
        need(all(b > a for a, b in zip(self.rates_bps, self.rates_bps[1:])),
             "rates", "rates_bps must be strictly increasing")
        need(all(b < a for a, b in zip(self.ccc_radii_m, self.ccc_radii_m[1:])),
             "rates", "ccc_radii_m must be strictly decreasing")
        need(self.basic_rate_bps > 0, "rates", "basic_rate_bps must be > 0")

        for name in ("sifs_s", "difs_s", "slot_time_s", "coherence_time_s",
                     "p_min_inf_w", "slot_duration_s", "sensing_s"):
            need(getattr(self, name) > 0, "mac", f"{name} must be > 0")
        for name in ("cw_slots", "l_data_bits", "l_ack_bits", "l_rts_bits",
                     "l_cts_bits", "l_res_bits"):
            need(getattr(self, name) >= 1, "mac", f"{name} must be >= 1")
        need(self.sensing_s < self.slot_duration_s, "mac",
             "sensing_s must be shorter than slot_duration_s")
        if not problems:
            worst = (
                (self.l_rts_bits + self.l_cts_bits + self.l_res_bits) / self.basic_rate_bps
                + 3 * self.sifs_s
                + min(self.coherence_time_s, self.l_data_bits / self.basic_rate_bps)
            )
            need(
                self.sensing_s + self.difs_s + worst <= self.slot_duration_s,
                "mac",
                "data period too short for one full handshake and burst",
            )

        if self.sweep is not None:
            need(self.sweep.kind in SWEEP_KINDS, "sweep",
                 f"kind must be one of {SWEEP_KINDS}")
            if self.sweep.kind == "rate_gain":
                need(len(self.sweep.distances_m) > 0, "sweep", "distances_m is empty")
                need(len(self.sweep.channel_counts) > 0, "sweep", "channel_counts is empty")
            elif self.sweep.kind == "interference":
                need(len(self.sweep.interference_w) > 0, "sweep", "interference_w is empty")
                need(len(self.sweep.channel_counts) > 0, "sweep", "channel_counts is empty")
                need(len(self.sweep.seeds) > 0, "sweep", "seeds is empty")
            else:
                need(len(self.sweep.flow_counts) > 0, "sweep", "flow_counts is empty")
                need(len(self.sweep.seeds) > 0, "sweep", "seeds is empty")
                need(all(s in STRATEGIES for s in self.sweep.strategies), "sweep",
                     f"strategies must come from {STRATEGIES}")

        if problems:
            raise ConfigError(problems)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_SCALAR_KEYS: dict[str, dict[str, tuple[str, type]]] = {
    "scenario": {
        "id": ("scenario_id", str),
        "flows": ("flows", int),
        "n_channels": ("n_channels", int),
        "area_radius_m": ("area_radius_m", float),
        "placement": ("placement", str),
        "seed": ("seed", int),
        "duration_slots": ("duration_slots", int),
        "strategy": ("strategy", str),
        "split_radios": ("split_radios", int),
        "p_occupy": ("p_occupy", float),
        "interference_w": ("interference_w", float),
    },
    "radio": {
        "p_max_w": ("p_max_w", float),
        "noise_w": ("noise_w", float),
        "antenna_gain_tx": ("antenna_gain_tx", float),
        "antenna_gain_rx": ("antenna_gain_rx", float),
        "antenna_height_tx_m": ("antenna_height_tx_m", float),
        "antenna_height_rx_m": ("antenna_height_rx_m", float),
        "system_loss": ("system_loss", float),
        "ccc_freq_hz": ("ccc_freq_hz", float),
        "data_freq_start_hz": ("data_freq_start_hz", float),
        "data_freq_step_hz": ("data_freq_step_hz", float),
        "radius_scaling": ("radius_scaling", str),
    },
    "rates": {
        "basic_rate_bps": ("basic_rate_bps", float),
    },
    "mac": {
        "sifs_s": ("sifs_s", float),
        "difs_s": ("difs_s", float),
        "slot_time_s": ("slot_time_s", float),
        "cw_slots": ("cw_slots", int),
        "l_data_bits": ("l_data_bits", int),
        "l_ack_bits": ("l_ack_bits", int),
        "l_rts_bits": ("l_rts_bits", int),
        "l_cts_bits": ("l_cts_bits", int),
        "l_res_bits": ("l_res_bits", int),
        "coherence_time_s": ("coherence_time_s", float),
        "p_min_inf_w": ("p_min_inf_w", float),
        "slot_duration_s": ("slot_duration_s", float),
        "sensing_s": ("sensing_s", float),
    },
}

_LIST_KEYS = {
    ("rates", "rates_bps"): "rates_bps",
    ("rates", "ccc_radii_m"): "ccc_radii_m",
}

_ANALYSIS_KEYS = {"powers", "interference_w", "m_channels"}
_SWEEP_KEYS = {
    "kind", "distances_m", "channel_counts", "interference_w",
    "flow_counts", "strategies", "seeds",
}


def _parse_floats(text: str) -> tuple[float, ...]:
    if text.startswith("linspace:"):
        _, a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            raise ValueError("linspace needs at least one point")
        if n == 1:
            return (a,)
        step = (b - a) / (n - 1)
        return tuple(a + i * step for i in range(n))
    return tuple(float(tok) for tok in text.split())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split())


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario configuration; unknown sections or keys
    are rejected with their names."""
    # strict=False merges repeated sections, so configs compose by appending
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), strict=False)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"[file] {exc}"]) from exc

    problems: list[str] = []
    values: dict[str, object] = {}

    for section in parser.sections():
        if section in _SCALAR_KEYS:
            known = _SCALAR_KEYS[section]
            for key, raw in parser.items(section):
                if (section, key) in _LIST_KEYS:
                    try:
                        values[_LIST_KEYS[(section, key)]] = _parse_floats(raw)
                    except ValueError:
                        problems.append(f"[{section}] {key}: not a number list")
                    continue
                if key not in known:
                    problems.append(f"[{section}] {key}: unknown key")
                    continue
                attr, typ = known[key]
                try:
                    values[attr] = typ(raw) if typ is not str else raw.strip()
                except ValueError:
                    problems.append(f"[{section}] {key}: expected {typ.__name__}")
        elif section == "analysis":
            settings = {}
            for key, raw in parser.items(section):
                if key not in _ANALYSIS_KEYS:
                    problems.append(f"[analysis] {key}: unknown key")
                    continue
                try:
                    if key == "powers":
                        settings["powers"] = raw.strip()
                    elif key == "interference_w":
                        settings["interference_w"] = float(raw)
                    else:
                        settings["m_channels"] = int(raw)
                except ValueError:
                    problems.append(f"[analysis] {key}: bad value")
            values["analysis"] = AnalysisSettings(**settings)
        elif section == "sweep":
            spec = {}
            for key, raw in parser.items(section):
                if key not in _SWEEP_KEYS:
                    problems.append(f"[sweep] {key}: unknown key")
                    continue
                try:
                    if key == "kind":
                        spec["kind"] = raw.strip()
                    elif key in ("distances_m", "interference_w"):
                        spec[key] = _parse_floats(raw)
                    elif key in ("channel_counts", "flow_counts", "seeds"):
                        spec[key] = _parse_ints(raw)
                    else:
                        spec["strategies"] = tuple(raw.split())
                except ValueError:
                    problems.append(f"[sweep] {key}: bad value")
            values["sweep"] = SweepSpec(**spec)
        else:
            problems.append(f"[{section}]: unknown section")

    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(**values)
    cfg.validate()
    return cfg


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config() -> ScenarioConfig:
    cfg = ScenarioConfig()
    cfg.validate()
    return cfg
