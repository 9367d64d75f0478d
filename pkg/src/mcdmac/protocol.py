"""Node-side MAC protocol: data-channel usage lists, the RTS/CTS/RES
handshake, overhearing bookkeeping, fairness-bounded transmission grants, and
control-channel contention state.

A handshake proceeds as RTS (carrying the sender's channel usage list), CTS
(carrying the computed allocation and packet count), RES (echoing the CTS
content), then the data burst on the granted channels. Third parties that
overhear a CTS or RES charge the grant's per-channel powers against their
interference ledgers, cap their own allowed power so they cannot disturb the
exchange, and mark the granted channels busy until the burst ends.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .allocator import Allocation, AllocationProblem, build_problem, solve_dp
from .propagation import (
    ChannelPlan,
    PropagationParams,
    RateTable,
    gain_from_rts,
    scale_gain,
)

RTS = "RTS"
CTS = "CTS"
RES = "RES"


@dataclass(frozen=True)
class MacTimings:
    """MAC-layer constants: interframe spaces, frame lengths, rate floor,
    coherence-time bound, tolerable interference, contention window."""

    t_sifs: float = 10e-6
    t_difs: float = 50e-6
    slot_time: float = 20e-6
    l_data: int = 8000
    l_ack: int = 112
    l_rts: int = 160
    l_cts: int = 112
    l_res: int = 112
    r_basic: float = 2e6
    ct_min: float = 1.0
    p_min_inf: float = 1e-9
    cw_slots: int = 32

    def __post_init__(self) -> None:
        for name in (
            "t_sifs", "t_difs", "slot_time", "l_data", "l_ack", "l_rts",
            "l_cts", "l_res", "r_basic", "ct_min", "p_min_inf", "cw_slots",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"MacTimings.{name} must be > 0")

    @property
    def t_max(self) -> float:
        """Fairness bound: time to send one data packet at the basic rate."""
        return self.l_data / self.r_basic

    @property
    def burst_bound(self) -> float:
        return min(self.ct_min, self.t_max)

    def control_duration(self, bits: int) -> float:
        return bits / self.r_basic


def burst_time(n_packets: int, rate: float, timings: MacTimings) -> float:
    """Duration of a burst of ``n_packets`` data+ACK pairs at ``rate``."""
    if n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    if rate <= 0:
        raise ValueError("rate must be > 0")
    return (2 * n_packets - 1) * timings.t_sifs + n_packets * (
        timings.l_data + timings.l_ack
    ) / rate


def max_packets(rate: float, timings: MacTimings, max_burst_s: Optional[float] = None) -> int:
    """Largest packet count whose burst fits the fairness and coherence-time
    bound (and ``max_burst_s`` when given); may be 0."""
    if rate <= 0:
        raise ValueError("rate must be > 0")
    bound = timings.burst_bound
    if max_burst_s is not None:
        bound = min(bound, max_burst_s)
    if bound <= 0:
        return 0
    denom = timings.l_data + timings.l_ack + 2 * timings.t_sifs * rate
    n = int(math.floor(rate * (bound + timings.t_sifs) / denom))
    while burst_time(n + 1, rate, timings) <= bound:
        n += 1
    while n >= 1 and burst_time(n, rate, timings) > bound:
        n -= 1
    return max(n, 0)


@dataclass(frozen=True)
class TransmissionGrant:
    """One admitted burst: packet count, aggregate rate, duration, and the
    absolute data channels with their transmit powers and rate indices."""

    n_packets: int
    rate: float
    burst_s: float
    channels: tuple[int, ...]
    powers: tuple[float, ...]
    rate_indices: tuple[int, ...]
    grant_id: int = 0

    def __post_init__(self) -> None:
        if self.n_packets < 1:
            raise ValueError("a grant carries at least one packet")
        if not (len(self.channels) == len(self.powers) == len(self.rate_indices)):
            raise ValueError("channels, powers and rate_indices must align")


def compute_grant(
    r_sd: float,
    timings: MacTimings,
    channels: tuple[int, ...] = (),
    powers: tuple[float, ...] = (),
    rate_indices: tuple[int, ...] = (),
    grant_id: int = 0,
    max_burst_s: Optional[float] = None,
) -> Optional[TransmissionGrant]:
    """Maximal grant for aggregate rate ``r_sd``; None when not even a single
    packet fits the burst bound."""
    if r_sd <= 0:
        raise ValueError("r_sd must be > 0")
    n = max_packets(r_sd, timings, max_burst_s)
    if n < 1:
        return None
    return TransmissionGrant(
        n_packets=n,
        rate=r_sd,
        burst_s=burst_time(n, r_sd, timings),
        channels=channels,
        powers=powers,
        rate_indices=rate_indices,
        grant_id=grant_id,
    )


def nav_after_cts(grant: TransmissionGrant, timings: MacTimings) -> float:
    """Reservation seen from the end of the CTS: the RES, the interframe
    gaps, and the whole burst."""
    return (
        timings.l_res / timings.r_basic
        + grant.n_packets * (timings.l_data + timings.l_ack) / grant.rate
        + (2 * grant.n_packets + 1) * timings.t_sifs
    )


def nav_after_res(grant: TransmissionGrant, timings: MacTimings) -> float:
    """Reservation seen from the end of the RES: one interframe gap plus the
    burst, ending at the same instant as the CTS reservation."""
    return (
        grant.n_packets * (timings.l_data + timings.l_ack) / grant.rate
        + 2 * grant.n_packets * timings.t_sifs
    )


# ---------------------------------------------------------------------------
# Data channel usage list
# ---------------------------------------------------------------------------

@dataclass
class DculEntry:
    """Per-channel usage record a node maintains."""

    channel_number: int
    pu_status: bool = False
    neighbor_status: bool = False
    suffered_interference: float = 0.0
    max_allowed_power: float = math.inf

    def __post_init__(self) -> None:
        if self.suffered_interference < 0:
            raise ValueError("suffered_interference must be >= 0")
        if self.max_allowed_power < 0:
            raise ValueError("max_allowed_power must be >= 0")

    def copy(self) -> "DculEntry":
        return DculEntry(
            self.channel_number,
            self.pu_status,
            self.neighbor_status,
            self.suffered_interference,
            self.max_allowed_power,
        )


ContributionKey = tuple[int, int]  # (grant id, overheard sender id)


class Dcul:
    """A node's data-channel usage list plus the ledger of overheard
    reservations backing it.

    Every overheard CTS/RES adds one contribution per granted channel
    (interference amount and power cap); releasing a grant recomputes the
    affected entries from the surviving contributions, so interference never
    drifts negative and overlapping grants stay independent.
    """

    def __init__(self, n_channels: int, p_max: float, base_interference: float = 0.0):
        if n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if p_max <= 0:
            raise ValueError("p_max must be > 0")
        if base_interference < 0:
            raise ValueError("base_interference must be >= 0")
        self.p_max = p_max
        self.base_interference = base_interference
        self.entries = [
            DculEntry(k, suffered_interference=base_interference, max_allowed_power=p_max)
            for k in range(n_channels)
        ]
        self._contributions: dict[ContributionKey, dict[int, tuple[float, float]]] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k: int) -> DculEntry:
        return self.entries[k]

    def set_pu_status(self, occupancy: Sequence[bool]) -> None:
        if len(occupancy) != len(self.entries):
            raise ValueError("occupancy length must match channel count")
        for entry, occupied in zip(self.entries, occupancy):
            entry.pu_status = bool(occupied)

    def add_contribution(
        self, key: ContributionKey, per_channel: dict[int, tuple[float, float]]
    ) -> None:
        """Record (interference, power cap) per channel for one overheard
        packet; replaces any previous record under the same key."""
        self._contributions[key] = dict(per_channel)
        self._recompute(per_channel.keys())

    def release(self, key: ContributionKey) -> None:
        """Remove one contribution; unknown keys are a no-op."""
        gone = self._contributions.pop(key, None)
        if gone:
            self._recompute(gone.keys())

    def release_grant(self, grant_id: int) -> None:
        """Remove every contribution of a grant (idempotent)."""
        keys = [k for k in self._contributions if k[0] == grant_id]
        channels: set[int] = set()
        for key in keys:
            channels.update(self._contributions.pop(key).keys())
        if channels:
            self._recompute(channels)

    def active_contributions(self) -> dict[ContributionKey, dict[int, tuple[float, float]]]:
        return {k: dict(v) for k, v in self._contributions.items()}

    def _recompute(self, channels: Iterable[int]) -> None:
        for k in channels:
            amount = self.base_interference
            cap = self.p_max
            busy = False
            for per_channel in self._contributions.values():
                if k in per_channel:
                    busy = True
                    amount += per_channel[k][0]
                    cap = min(cap, per_channel[k][1])
            entry = self.entries[k]
            entry.suffered_interference = amount
            entry.max_allowed_power = cap
            entry.neighbor_status = busy

    def snapshot(self) -> list[DculEntry]:
        """Immutable-by-copy view suitable for an RTS payload."""
        return [e.copy() for e in self.entries]


@dataclass(frozen=True)
class ControlPacket:
    """RTS/CTS/RES frame. RTS carries the sender's usage list; CTS and RES
    carry the identical grant."""

    kind: str
    source: int
    destination: int
    dcul: Optional[tuple[DculEntry, ...]] = None
    grant: Optional[TransmissionGrant] = None

    def __post_init__(self) -> None:
        if self.kind not in (RTS, CTS, RES):
            raise ValueError(f"unknown control packet kind {self.kind!r}")
        if self.kind == RTS:
            if self.dcul is None:
                raise ValueError("RTS must carry a usage list")
            object.__setattr__(self, "dcul", tuple(e.copy() for e in self.dcul))
        else:
            if self.grant is None:
                raise ValueError(f"{self.kind} must carry a grant")


def common_channels(
    my_dcul: Sequence[DculEntry], peer_dcul: Sequence[DculEntry]
) -> tuple[int, ...]:
    """Channels free of primary users and neighbor reservations on both sides."""
    if len(my_dcul) != len(peer_dcul):
        raise ValueError("usage lists must have equal length")
    return tuple(
        k
        for k, (mine, theirs) in enumerate(zip(my_dcul, peer_dcul))
        if not (mine.pu_status or theirs.pu_status)
        and not (mine.neighbor_status or theirs.neighbor_status)
    )


AllocateFn = Callable[[AllocationProblem], Allocation]


def on_rts_received(
    rts: ControlPacket,
    p_rx: float,
    my_dcul: Dcul,
    timings: MacTimings,
    table: RateTable,
    plan: ChannelPlan,
    params: PropagationParams,
    p_max: float,
    allocate: AllocateFn = solve_dp,
    grant_id: int = 0,
    max_burst_s: Optional[float] = None,
) -> Optional[ControlPacket]:
    """Destination-side handshake step: estimate gains from the RTS receive
    power, allocate rates and powers over the common channels, and answer
    with a CTS, or stay silent when nothing can be granted."""
    if rts.kind != RTS:
        raise ValueError("expected an RTS")
    common = common_channels(rts.dcul, my_dcul.entries)
    if not common:
        return None
    h0 = gain_from_rts(p_rx, p_max)
    gains = [scale_gain(h0, plan.f0, plan.data_freqs[k]) for k in common]
    interference = [my_dcul[k].suffered_interference for k in common]
    caps = [
        min(rts.dcul[k].max_allowed_power, my_dcul[k].max_allowed_power)
        for k in common
    ]
    problem = build_problem(
        gains, interference, caps, table, p_n=params.noise_power, p_max=p_max
    )
    allocation = allocate(problem)
    if allocation.total_rate <= 0:
        return None
    used = [(common[m], allocation.powers[m], q)
            for m, q in enumerate(allocation.choices) if q is not None]
    grant = compute_grant(
        allocation.total_rate,
        timings,
        channels=tuple(k for k, _, _ in used),
        powers=tuple(p for _, p, _ in used),
        rate_indices=tuple(q for _, _, q in used),
        grant_id=grant_id,
        max_burst_s=max_burst_s,
    )
    if grant is None:
        return None
    return ControlPacket(
        kind=CTS, source=rts.destination, destination=rts.source, grant=grant
    )


def make_res(cts: ControlPacket) -> ControlPacket:
    """RES echoing the CTS content back from the original requester."""
    if cts.kind != CTS:
        raise ValueError("expected a CTS")
    return ControlPacket(
        kind=RES, source=cts.destination, destination=cts.source, grant=cts.grant
    )


def overhear(
    pkt: ControlPacket,
    p_rx: float,
    my_dcul: Dcul,
    timings: MacTimings,
    plan: ChannelPlan,
    p_max: float,
) -> float:
    """Third-party bookkeeping for an overheard CTS or RES.

    Charges the grant's per-channel transmit powers through the estimated
    gain to the packet's sender, caps the allowed transmit power so the
    tolerable interference at that sender is respected, marks the granted
    channels busy, and returns the reservation duration from the end of the
    overheard packet.
    """
    if pkt.kind not in (CTS, RES):
        raise ValueError("only CTS and RES are overheard")
    grant = pkt.grant
    h0 = gain_from_rts(p_rx, p_max)
    per_channel: dict[int, tuple[float, float]] = {}
    for k, power in zip(grant.channels, grant.powers):
        h_k = scale_gain(h0, plan.f0, plan.data_freqs[k])
        amount = power * h_k
        cap = min(p_max, timings.p_min_inf / h_k) if h_k > 0 else p_max
        per_channel[k] = (amount, cap)
    my_dcul.add_contribution((grant.grant_id, pkt.source), per_channel)
    if pkt.kind == CTS:
        return nav_after_cts(grant, timings)
    return nav_after_res(grant, timings)


def release_grant(my_dcul: Dcul, grant_id: int) -> None:
    """Reservation expiry: drop the grant's contributions (idempotent)."""
    my_dcul.release_grant(grant_id)


# ---------------------------------------------------------------------------
# Control-channel contention
# ---------------------------------------------------------------------------

class CccContention:
    """Backoff bookkeeping for the shared control channel.

    Contenders hold a uniformly drawn slot count from a fixed window. The
    node(s) at the minimum fire first; everyone else consumes that many slots
    and keeps the remainder, which realizes count-down-while-idle without
    stepping individual slots.
    """

    def __init__(self, cw_slots: int):
        if cw_slots < 1:
            raise ValueError("contention window must be >= 1")
        self.cw_slots = cw_slots
        self._backoff: dict[int, int] = {}

    def __contains__(self, node: int) -> bool:
        return node in self._backoff

    def __len__(self) -> int:
        return len(self._backoff)

    def backoff_of(self, node: int) -> int:
        return self._backoff[node]

    def join(self, node: int, rng: random.Random) -> None:
        """Enter contention with a fresh draw; rejoining preserves the
        residual backoff."""
        if node not in self._backoff:
            self._backoff[node] = rng.randrange(self.cw_slots)

    def restore(self, node: int, backoff: int) -> None:
        """Re-enter contention with a previously saved residual backoff."""
        if backoff < 0:
            raise ValueError("backoff must be >= 0")
        self._backoff[node] = backoff

    def redraw(self, node: int, rng: random.Random) -> None:
        self._backoff[node] = rng.randrange(self.cw_slots)

    def leave(self, node: int) -> Optional[int]:
        """Drop out of contention, returning the residual backoff (None when
        the node was not contending)."""
        return self._backoff.pop(node, None)

    def min_backoff(self) -> Optional[int]:
        if not self._backoff:
            return None
        return min(self._backoff.values())

    def fire(self) -> tuple[int, list[int]]:
        """Advance to the next transmission instant: pop the minimum-backoff
        nodes (the transmitters) and charge the elapsed slots to the rest."""
        if not self._backoff:
            raise ValueError("no contenders")
        b = min(self._backoff.values())
        winners = sorted(n for n, v in self._backoff.items() if v == b)
        for n in winners:
            del self._backoff[n]
        for n in self._backoff:
            self._backoff[n] -= b
        return b, winners
