"""Deterministic discrete-event simulation of the multi-channel MAC.

One run owns three independent seeded random streams (placement, primary-user
activity, MAC backoff) so that changing one concern never perturbs the
others. Time advances through a heap of (time, priority, sequence) events;
equal-time ties resolve burst completion before reservation expiry before
everything else, with slot boundaries last. All bookkeeping the protocol
performs through overheard packets is mirrored in an engine-side ledger and
cross-checked at every reservation expiry.

Within a channel slot: a sensing period (no transmissions, usage lists get
the exact occupancy), then a data period in which saturated sources contend
on the control channel, exchange RTS/CTS/RES, and burst on their granted
data channels. Virtual carrier sense is honored literally: a node holding a
reservation timer from an overheard CTS or RES does not initiate a request
until the timer expires (its residual backoff is frozen meanwhile), and a
source whose usage list shows no open channel defers the same way. A
handshake only starts when the worst-case exchange plus burst still fits the
slot, which keeps every transmission inside the sensed occupancy snapshot.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .allocator import Allocation, AllocationProblem, build_problem, solve_dp
from .channel_model import PuActivityModel, advance_slot
from .config import ScenarioConfig
from .propagation import received_power
from .protocol import (
    CTS,
    RES,
    RTS,
    CccContention,
    ControlPacket,
    Dcul,
    make_res,
    nav_after_cts,
    nav_after_res,
    on_rts_received,
    overhear,
)

# event priorities at equal timestamps
_PRIO_BURST_END = 0
_PRIO_NAV = 1
_PRIO_NORMAL = 5
_PRIO_SLOT = 9

_SINR_SLACK = 1e-9  # relative slack so exact-threshold allocations decode


METRICS_COLUMNS = (
    "scenario_id",
    "seed",
    "strategy",
    "flows",
    "channels",
    "p_occupy",
    "interference_w",
    "network_throughput_bps",
    "avg_node_throughput_bps",
    "handshake_success",
    "handshake_collisions",
)

TRACE_COLUMNS = ("time_s", "kind", "src", "dst", "channels", "powers_w", "nav_s")


@dataclass
class Metrics:
    """Aggregated outcome of one run."""

    scenario_id: str
    seed: int
    strategy: str
    flows: int
    channels: int
    p_occupy: float
    interference_w: float
    duration_s: float
    delivered_bits_per_flow: list[int] = field(default_factory=list)
    busy_time_per_flow: list[float] = field(default_factory=list)
    handshake_attempts: int = 0
    handshake_successes: int = 0
    handshake_collisions: int = 0
    channel_busy_s: list[float] = field(default_factory=list)
    grants_completed: int = 0
    packets_failed: int = 0
    delivered_bits_by_grants: int = 0
    pu_violations: int = 0
    power_violations: int = 0
    nav_violations: int = 0
    ledger_failures: int = 0

    @property
    def delivered_bits(self) -> int:
        return sum(self.delivered_bits_per_flow)

    @property
    def network_throughput_bps(self) -> float:
        if self.duration_s <= 0:
            return 0.0
        return self.delivered_bits / self.duration_s

    @property
    def avg_node_throughput_bps(self) -> float:
        if self.flows < 1:
            return 0.0
        return self.network_throughput_bps / self.flows

    @property
    def channel_utilization(self) -> list[float]:
        if self.duration_s <= 0:
            return [0.0] * self.channels
        return [b / self.duration_s for b in self.channel_busy_s]

    def violations(self) -> dict[str, int]:
        return {
            "pu": self.pu_violations,
            "power": self.power_violations,
            "nav": self.nav_violations,
            "ledger": self.ledger_failures,
        }


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_csv_rows(metrics_list: Iterable[Metrics]) -> list[str]:
    rows = [",".join(METRICS_COLUMNS)]
    for m in metrics_list:
        rows.append(
            ",".join(
                _fmt(v)
                for v in (
                    m.scenario_id,
                    m.seed,
                    m.strategy,
                    m.flows,
                    m.channels,
                    m.p_occupy,
                    m.interference_w,
                    m.network_throughput_bps,
                    m.avg_node_throughput_bps,
                    m.handshake_successes,
                    m.handshake_collisions,
                )
            )
        )
    return rows


# ---------------------------------------------------------------------------
# baseline allocation strategies
# ---------------------------------------------------------------------------

def _zero_allocation(m: int) -> Allocation:
    return Allocation(
        powers=(0.0,) * m, choices=(None,) * m, total_rate=0.0, total_power=0.0
    )


def baseline_single_channel(problem: AllocationProblem) -> Allocation:
    """Channel-diversity stand-in: the single best (channel, rate) pair.

    Picks the feasible pair with the highest rate (ties: least power, then
    lowest channel and rate index) and leaves every other channel dark.
    """
    best = None
    for m in range(problem.m_channels):
        cap = min(problem.p_max, problem.p_max_s[m])
        for q, p in enumerate(problem.power_matrix[m]):
            if p > cap:
                continue
            key = (-problem.rate_matrix[m][q], p, m, q)
            if best is None or key < best[0]:
                best = (key, m, q)
    if best is None:
        return _zero_allocation(problem.m_channels)
    _, m, q = best
    powers = [0.0] * problem.m_channels
    choices: list[Optional[int]] = [None] * problem.m_channels
    powers[m] = problem.power_matrix[m][q]
    choices[m] = q
    return Allocation(
        powers=tuple(powers),
        choices=tuple(choices),
        total_rate=problem.rate_matrix[m][q],
        total_power=powers[m],
    )


def baseline_multi_radio_split(problem: AllocationProblem, k: int) -> Allocation:
    """Multi-radio stand-in under a shared budget: the total power is split
    evenly over the ``k`` most efficient channels (cheapest entry first) and
    each carries the best rate its share affords."""
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, problem.m_channels)
    share = problem.p_max / k
    ranked = sorted(
        range(problem.m_channels),
        key=lambda m: (min(problem.power_matrix[m]), m),
    )
    powers = [0.0] * problem.m_channels
    choices: list[Optional[int]] = [None] * problem.m_channels
    total_rate = 0.0
    total_power = 0.0
    for m in ranked[:k]:
        cap = min(share, problem.p_max_s[m])
        best = None
        for q, p in enumerate(problem.power_matrix[m]):
            if p > cap:
                continue
            key = (-problem.rate_matrix[m][q], p, q)
            if best is None or key < best[0]:
                best = (key, q)
        if best is None:
            continue
        q = best[1]
        powers[m] = problem.power_matrix[m][q]
        choices[m] = q
        total_rate += problem.rate_matrix[m][q]
        total_power += powers[m]
    return Allocation(
        powers=tuple(powers),
        choices=tuple(choices),
        total_rate=total_rate,
        total_power=total_power,
    )


def make_strategy(cfg: ScenarioConfig) -> Callable[[AllocationProblem], Allocation]:
    if cfg.strategy == "mcd_mac":
        return solve_dp
    if cfg.strategy == "single_channel_best":
        return baseline_single_channel

    def split(problem: AllocationProblem) -> Allocation:
        k = cfg.split_radios if cfg.split_radios >= 1 else problem.m_channels
        return baseline_multi_radio_split(problem, k)

    return split


# ---------------------------------------------------------------------------
# placement
# ---------------------------------------------------------------------------

def draw_disk_position(rng: random.Random, radius: float) -> tuple[float, float]:
    """One position uniform over the disk (radius via the square-root draw)."""
    r = radius * math.sqrt(rng.random())
    theta = 2 * math.pi * rng.random()
    return (r * math.cos(theta), r * math.sin(theta))


def pair_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Euclidean distance floored at 1 m to avoid the path-loss singularity."""
    return max(1.0, math.hypot(a[0] - b[0], a[1] - b[1]))


def place_nodes(
    cfg: ScenarioConfig, rng: random.Random
) -> tuple[list[tuple[float, float]], list[tuple[int, int]]]:
    """Positions plus (source, destination) flow pairs.

    ``disk``: two nodes per flow uniform over the arena; sources pick a
    destination uniformly among control-range neighbors (whole placements are
    re-drawn, boundedly, if some source has none). ``pair_radial``: one flow,
    source at the center and destination at a radially distributed distance.
    """
    if cfg.placement == "pair_radial":
        d = cfg.area_radius_m * math.sqrt(rng.random())
        return [(0.0, 0.0), (d, 0.0)], [(0, 1)]

    ccc_range = cfg.ccc_range_m()
    n = 2 * cfg.flows
    for _ in range(100):
        positions = [draw_disk_position(rng, cfg.area_radius_m) for _ in range(n)]
        flows: list[tuple[int, int]] = []
        ok = True
        for src in range(cfg.flows):
            candidates = [
                j
                for j in range(n)
                if j != src and pair_distance(positions[src], positions[j]) <= ccc_range
            ]
            if not candidates:
                ok = False
                break
            flows.append((src, candidates[rng.randrange(len(candidates))]))
        if ok:
            return positions, flows
    raise ValueError(
        "placement failed: a source found no control-range neighbor in 100 draws"
    )


# ---------------------------------------------------------------------------
# the event engine
# ---------------------------------------------------------------------------

@dataclass
class _Node:
    id: int
    pos: tuple[float, float]
    is_source: bool = False
    dest: Optional[int] = None
    flow: Optional[int] = None
    dcul: Optional[Dcul] = None
    in_exchange: bool = False
    in_burst: bool = False
    nav_until: float = 0.0
    saved_backoff: Optional[int] = None
    attempt_token: int = 0
    attempt_ok: int = -1


@dataclass
class _CccTx:
    start: float
    end: float
    sender: int
    kind: str
    packet: ControlPacket


@dataclass
class _ActiveGrant:
    gid: int
    src: int
    dst: int
    start: float
    end: float
    channels: tuple[int, ...]
    powers: tuple[float, ...]
    rate_indices: tuple[int, ...]
    rate: float
    n_packets: int

    def power_on(self, ch: int) -> float:
        return self.powers[self.channels.index(ch)]


@dataclass
class _Exchange:
    s: int
    d: int
    gid: int
    cts: ControlPacket
    cts_tx: Optional[_CccTx] = None
    res_tx: Optional[_CccTx] = None
    token_s: int = 0
    token_d: int = 0


class Simulation:
    """One deterministic run of a scenario."""

    def __init__(self, cfg: ScenarioConfig, collect_trace: bool = False):
        cfg.validate()
        self.cfg = cfg
        self.params = cfg.propagation_params()
        self.plan = cfg.channel_plan()
        self.table = cfg.rate_table()
        self.timings = cfg.mac_timings()
        self.ccc_range = cfg.ccc_range_m()
        self.allocate = make_strategy(cfg)
        self.placement_rng = random.Random(f"{cfg.seed}|placement")
        self.pu_rng = random.Random(f"{cfg.seed}|pu")
        self.mac_rng = random.Random(f"{cfg.seed}|mac")
        self.trace: Optional[list[tuple]] = [] if collect_trace else None

        t = self.timings
        self.rts_dur = t.control_duration(t.l_rts)
        self.cts_dur = t.control_duration(t.l_cts)
        self.res_dur = t.control_duration(t.l_res)
        self.worst_exchange = (
            self.rts_dur + self.cts_dur + self.res_dur + 3 * t.t_sifs + t.burst_bound
        )

        self.metrics = Metrics(
            scenario_id=cfg.scenario_id,
            seed=cfg.seed,
            strategy=cfg.strategy,
            flows=cfg.flows,
            channels=cfg.n_channels,
            p_occupy=cfg.p_occupy,
            interference_w=cfg.interference_w,
            duration_s=cfg.duration_slots * cfg.slot_duration_s,
            delivered_bits_per_flow=[0] * cfg.flows,
            busy_time_per_flow=[0.0] * cfg.flows,
            channel_busy_s=[0.0] * cfg.n_channels,
        )

    # -- infrastructure ----------------------------------------------------

    def _push(self, when: float, prio: int, kind: str, payload) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (when, prio, self._seq, kind, payload))

    def _trace_row(self, time: float, kind: str, src, dst, channels, powers, nav) -> None:
        if self.trace is None:
            return
        self.trace.append(
            (
                time,
                kind,
                src,
                dst,
                ";".join(str(c) for c in channels),
                ";".join(repr(p) for p in powers),
                "" if nav is None else repr(nav),
            )
        )

    def _rebuild_geometry(self) -> None:
        """Distance and unit-power gain matrices; recomputed when positions
        change (placement, and per-slot in pair_radial mode)."""
        n = len(self.nodes)
        self._dists = [[0.0] * n for _ in range(n)]
        self._gains0 = [[0.0] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                d = pair_distance(self.nodes[a].pos, self.nodes[b].pos)
                self._dists[a][b] = d
                self._gains0[a][b] = received_power(1.0, d, self.params)
        self._freq_factor = [
            (self.plan.f0 / fm) ** 4 for fm in self.plan.data_freqs
        ]

    def _dist(self, a: int, b: int) -> float:
        return self._dists[a][b]

    def _gain(self, a: int, b: int, channel: Optional[int] = None) -> float:
        """Physical unit-power gain between two nodes, on the control channel
        or a data channel."""
        g = self._gains0[a][b]
        if channel is not None:
            g *= self._freq_factor[channel]
        return g

    def _p_rx_control(self, sender: int, receiver: int) -> float:
        return self._gain(sender, receiver) * self.cfg.p_max_w

    def _in_range(self, a: int, b: int) -> bool:
        return self._dist(a, b) <= self.ccc_range

    def _decodes(self, receiver: int, tx: _CccTx) -> bool:
        """A control packet decodes iff the sender is in range and no other
        in-range transmission (including the receiver's own) overlaps it."""
        if not self._in_range(tx.sender, receiver):
            return False
        for other in self.medium:
            if other is tx:
                continue
            if other.start >= tx.end or other.end <= tx.start:
                continue
            if other.sender == receiver or self._in_range(other.sender, receiver):
                return False
        return True

    def _slot_end(self) -> float:
        return (self.slot_index + 1) * self.cfg.slot_duration_s

    # -- contention --------------------------------------------------------

    def _reschedule(self, now: float) -> None:
        self.ccc_gen += 1
        if len(self.ccc) == 0 or not self.in_data_period:
            return
        origin = max(now, self.busy_until) + self.timings.t_difs
        fire_at = origin + self.ccc.min_backoff() * self.timings.slot_time
        if fire_at + self.worst_exchange > self._slot_end():
            return
        self._push(fire_at, _PRIO_NORMAL, "fire", self.ccc_gen)

    def _has_open_channel(self, node: _Node) -> bool:
        return any(
            not e.pu_status and not e.neighbor_status for e in node.dcul.entries
        )

    def _may_contend(self, node: _Node, now: float) -> bool:
        """A source contends unless it is mid-exchange or mid-burst, holds a
        reservation timer from an overheard grant (virtual carrier sense:
        no new request while a neighbor burst is pending), or sees no usable
        channel at all."""
        return (
            node.is_source
            and not node.in_exchange
            and not node.in_burst
            and now >= node.nav_until
            and self._has_open_channel(node)
        )

    def _join_contention(self, node: _Node, now: float) -> None:
        if not self._may_contend(node, now):
            return
        if node.saved_backoff is not None:
            self.ccc.restore(node.id, node.saved_backoff)
            node.saved_backoff = None
        else:
            self.ccc.join(node.id, self.mac_rng)

    def _refresh_contenders(self, now: float) -> None:
        """Re-evaluate who may contend after usage lists or timers changed;
        deferring nodes keep their residual backoff."""
        changed = False
        for node in self.nodes:
            if node.id in self.ccc:
                if not self._may_contend(node, now):
                    node.saved_backoff = self.ccc.leave(node.id)
                    changed = True
            elif self._may_contend(node, now):
                self._join_contention(node, now)
                changed = True
        if changed:
            self._reschedule(now)

    # -- event handlers ------------------------------------------------------

    def _on_slot(self, now: float, index: int) -> None:
        self.slot_index = index
        self.in_data_period = False
        self.medium.clear()
        self.ended_grants.clear()
        assert not self.active_grants, "a burst crossed a slot boundary"
        self.schedule = advance_slot(
            PuActivityModel(self.cfg.p_occupy), self.cfg.n_channels, self.pu_rng, index
        )
        if self.cfg.placement == "pair_radial" and index > 0:
            d = self.cfg.area_radius_m * math.sqrt(self.placement_rng.random())
            self.nodes[1].pos = (d, 0.0)
            self._rebuild_geometry()
        for node in self.nodes:
            node.dcul.set_pu_status(self.schedule.occupancy)
        self.ccc_gen += 1  # freeze contention through the sensing period
        self._push(now + self.cfg.sensing_s, _PRIO_NORMAL, "sense_done", None)
        if index + 1 < self.cfg.duration_slots:
            self._push(
                (index + 1) * self.cfg.slot_duration_s, _PRIO_SLOT, "slot", index + 1
            )

    def _on_sense_done(self, now: float, _payload) -> None:
        self.in_data_period = True
        for node in self.nodes:
            if node.id in self.ccc and not self._may_contend(node, now):
                node.saved_backoff = self.ccc.leave(node.id)
            else:
                self._join_contention(node, now)
        self._reschedule(now)

    def _on_fire(self, now: float, gen: int) -> None:
        if gen != self.ccc_gen or len(self.ccc) == 0:
            return
        cutoff = now - self.worst_exchange
        if self.medium and self.medium[0].end <= cutoff:
            self.medium = [t for t in self.medium if t.end > cutoff]
        _, winners = self.ccc.fire()
        rts_end = now + self.rts_dur
        for w in winners:
            node = self.nodes[w]
            node.in_exchange = True
            node.attempt_token += 1
            pkt = ControlPacket(
                kind=RTS, source=w, destination=node.dest,
                dcul=tuple(node.dcul.snapshot()),
            )
            tx = _CccTx(start=now, end=rts_end, sender=w, kind=RTS, packet=pkt)
            self.medium.append(tx)
            self.metrics.handshake_attempts += 1
            self._trace_row(now, RTS, w, node.dest, (), (), None)
            self._push(rts_end, _PRIO_NORMAL, "rts_end", tx)
            self._push(
                rts_end + self.timings.t_sifs + self.cts_dur + self.timings.slot_time,
                _PRIO_NORMAL,
                "cts_timeout",
                (w, node.attempt_token),
            )
        if len(winners) > 1:
            self.metrics.handshake_collisions += len(winners)
        self.busy_until = max(self.busy_until, rts_end)

    def _on_rts_end(self, now: float, tx: _CccTx) -> None:
        src = self.nodes[tx.sender]
        dst = self.nodes[tx.packet.destination]
        if (
            self._decodes(dst.id, tx)
            and not dst.in_burst
            and not dst.in_exchange
        ):
            self.next_gid += 1
            cts_pkt = on_rts_received(
                tx.packet,
                self._p_rx_control(src.id, dst.id),
                dst.dcul,
                self.timings,
                self.table,
                self.plan,
                self.params,
                self.cfg.p_max_w,
                allocate=self.allocate,
                grant_id=self.next_gid,
            )
            if cts_pkt is not None:
                dst.in_exchange = True
                dst.attempt_token += 1
                residual = self.ccc.leave(dst.id)
                if residual is not None:
                    dst.saved_backoff = residual
                exch = _Exchange(
                    s=src.id, d=dst.id, gid=self.next_gid, cts=cts_pkt,
                    token_s=src.attempt_token, token_d=dst.attempt_token,
                )
                cts_start = now + self.timings.t_sifs
                cts_end = cts_start + self.cts_dur
                exch.cts_tx = _CccTx(
                    start=cts_start, end=cts_end, sender=dst.id, kind=CTS, packet=cts_pkt
                )
                self.medium.append(exch.cts_tx)
                grant = cts_pkt.grant
                self._trace_row(
                    cts_start, CTS, dst.id, src.id, grant.channels, grant.powers,
                    nav_after_cts(grant, self.timings),
                )
                self._push(cts_end, _PRIO_NORMAL, "cts_end", exch)
                self._push(
                    cts_end + self.timings.t_sifs + self.res_dur + self.timings.slot_time,
                    _PRIO_NORMAL,
                    "res_timeout",
                    (dst.id, dst.attempt_token),
                )
                self.busy_until = max(self.busy_until, cts_end)
        self._reschedule(now)

    def _on_cts_end(self, now: float, exch: _Exchange) -> None:
        src = self.nodes[exch.s]
        dst = self.nodes[exch.d]
        grant = exch.cts.grant
        if self._decodes(src.id, exch.cts_tx):
            src.attempt_ok = exch.token_s
            res_pkt = make_res(exch.cts)
            res_start = now + self.timings.t_sifs
            res_end = res_start + self.res_dur
            exch.res_tx = _CccTx(
                start=res_start, end=res_end, sender=src.id, kind=RES, packet=res_pkt
            )
            self.medium.append(exch.res_tx)
            self._trace_row(
                res_start, RES, src.id, dst.id, grant.channels, grant.powers,
                nav_after_res(grant, self.timings),
            )
            self._push(res_end, _PRIO_NORMAL, "res_end", exch)
            self.busy_until = max(self.busy_until, res_end)
        self._apply_overhears(now, exch.cts_tx)
        self._push(
            now + nav_after_cts(grant, self.timings), _PRIO_NAV, "nav_expiry", exch.gid
        )
        self._refresh_contenders(now)
        self._reschedule(now)

    def _on_res_end(self, now: float, exch: _Exchange) -> None:
        dst = self.nodes[exch.d]
        if self._decodes(dst.id, exch.res_tx):
            dst.attempt_ok = exch.token_d
            self._push(now + self.timings.t_sifs, _PRIO_NORMAL, "burst_start", exch)
        self._apply_overhears(now, exch.res_tx)
        self._refresh_contenders(now)
        self._reschedule(now)

    def _apply_overhears(self, now: float, tx: _CccTx) -> None:
        grant = tx.packet.grant
        src_id = tx.packet.source
        dst_id = tx.packet.destination
        for node in self.nodes:
            if node.id in (src_id, dst_id):
                continue
            if not self._decodes(node.id, tx):
                continue
            nav = overhear(
                tx.packet,
                self._p_rx_control(src_id, node.id),
                node.dcul,
                self.timings,
                self.plan,
                self.cfg.p_max_w,
            )
            node.nav_until = max(node.nav_until, now + nav)
            # engine-side double entry, from physical gains
            amounts = {
                ch: p * self._gain(src_id, node.id, ch)
                for ch, p in zip(grant.channels, grant.powers)
            }
            self.truth.setdefault(node.id, {})[(grant.grant_id, src_id)] = amounts

    def _on_burst_start(self, now: float, exch: _Exchange) -> None:
        grant = exch.cts.grant
        src = self.nodes[exch.s]
        dst = self.nodes[exch.d]
        src.in_exchange = False
        dst.in_exchange = False
        src.in_burst = True
        dst.in_burst = True
        end = now + grant.burst_s
        assert end <= self._slot_end() + 1e-12, "burst overruns the slot"

        if any(self.schedule.occupancy[ch] for ch in grant.channels):
            self.metrics.pu_violations += 1
        if sum(grant.powers) > self.cfg.p_max_w * (1 + 1e-9):
            self.metrics.power_violations += 1
        for other in self.active_grants.values():
            shared = set(grant.channels) & set(other.channels)
            if not shared:
                continue
            near = min(
                self._dist(a, b)
                for a in (exch.s, exch.d)
                for b in (other.src, other.dst)
            )
            if near <= self.ccc_range:
                self.metrics.nav_violations += 1

        record = _ActiveGrant(
            gid=exch.gid, src=exch.s, dst=exch.d, start=now, end=end,
            channels=grant.channels, powers=grant.powers,
            rate_indices=grant.rate_indices, rate=grant.rate,
            n_packets=grant.n_packets,
        )
        self.active_grants[exch.gid] = record
        for ch in grant.channels:
            self.metrics.channel_busy_s[ch] += grant.burst_s
        self.metrics.handshake_successes += 1
        if self.trace is not None:
            per_packet = (self.timings.l_data + self.timings.l_ack) / grant.rate \
                + 2 * self.timings.t_sifs
            for p in range(grant.n_packets):
                self._trace_row(
                    now + p * per_packet, "DATA", exch.s, exch.d,
                    grant.channels, grant.powers, None,
                )
        self._push(end, _PRIO_BURST_END, "burst_end", exch)

    def _packet_succeeds(self, g: _ActiveGrant, t0: float, t1: float) -> bool:
        for ch, power, q in zip(g.channels, g.powers, g.rate_indices):
            signal = power * self._gain(g.src, g.dst, ch)
            interference = self.cfg.interference_w
            for other in list(self.active_grants.values()) + self.ended_grants:
                if other.gid == g.gid or ch not in other.channels:
                    continue
                if other.start >= t1 or other.end <= t0:
                    continue
                for endpoint in (other.src, other.dst):
                    if self._in_range(endpoint, g.dst):
                        interference += other.power_on(ch) * self._gain(
                            endpoint, g.dst, ch
                        )
            floor = self.params.noise_power + interference
            if signal < self.table.snr_thresholds[q] * floor * (1 - _SINR_SLACK):
                return False
        return True

    def _on_burst_end(self, now: float, exch: _Exchange) -> None:
        g = self.active_grants.pop(exch.gid)
        src = self.nodes[g.src]
        dst = self.nodes[g.dst]
        per_packet = (self.timings.l_data + self.timings.l_ack) / g.rate \
            + 2 * self.timings.t_sifs
        data_time = self.timings.l_data / g.rate
        delivered = 0
        for p in range(g.n_packets):
            t0 = g.start + p * per_packet
            if self._packet_succeeds(g, t0, t0 + data_time):
                delivered += 1
            else:
                self.metrics.packets_failed += 1
        bits = delivered * self.timings.l_data
        self.metrics.delivered_bits_per_flow[src.flow] += bits
        self.metrics.delivered_bits_by_grants += bits
        self.metrics.busy_time_per_flow[src.flow] += g.end - g.start
        self.metrics.grants_completed += 1
        self.ended_grants.append(g)
        src.in_burst = False
        dst.in_burst = False
        self._join_contention(src, now)
        self._join_contention(dst, now)
        self._reschedule(now)

    def _on_nav_expiry(self, now: float, gid: int) -> None:
        for node in self.nodes:
            node.dcul.release_grant(gid)
        for per_node in self.truth.values():
            for key in [k for k in per_node if k[0] == gid]:
                del per_node[key]
        self._check_ledgers()
        self._refresh_contenders(now)

    def _check_ledgers(self) -> None:
        for node in self.nodes:
            expected = [self.cfg.interference_w] * self.cfg.n_channels
            for amounts in self.truth.get(node.id, {}).values():
                for ch, amount in amounts.items():
                    expected[ch] += amount
            for ch in range(self.cfg.n_channels):
                got = node.dcul[ch].suffered_interference
                want = expected[ch]
                if abs(got - want) > max(1e-18, 1e-9 * want):
                    self.metrics.ledger_failures += 1

    def _on_cts_timeout(self, now: float, payload) -> None:
        node_id, token = payload
        node = self.nodes[node_id]
        if node.attempt_token != token or node.attempt_ok == token:
            return
        node.in_exchange = False
        self._join_contention(node, now)
        self._reschedule(now)

    def _on_res_timeout(self, now: float, payload) -> None:
        node_id, token = payload
        node = self.nodes[node_id]
        if node.attempt_token != token or node.attempt_ok == token:
            return
        node.in_exchange = False
        self._join_contention(node, now)
        self._reschedule(now)

    # -- run -----------------------------------------------------------------

    def run(self) -> Metrics:
        cfg = self.cfg
        if cfg.duration_slots == 0:
            return self.metrics

        positions, flows = place_nodes(cfg, self.placement_rng)
        self.nodes = [_Node(id=i, pos=pos, dcul=Dcul(
            cfg.n_channels, cfg.p_max_w, base_interference=cfg.interference_w
        )) for i, pos in enumerate(positions)]
        for f, (src, dst) in enumerate(flows):
            self.nodes[src].is_source = True
            self.nodes[src].dest = dst
            self.nodes[src].flow = f
        self._rebuild_geometry()

        self._heap: list = []
        self._seq = 0
        self.medium: list[_CccTx] = []
        self.ccc = CccContention(cfg.cw_slots)
        self.ccc_gen = 0
        self.busy_until = 0.0
        self.in_data_period = False
        self.slot_index = 0
        self.active_grants: dict[int, _ActiveGrant] = {}
        self.ended_grants: list[_ActiveGrant] = []
        self.truth: dict[int, dict[tuple[int, int], dict[int, float]]] = {}
        self.next_gid = 0

        handlers = {
            "slot": self._on_slot,
            "sense_done": self._on_sense_done,
            "fire": self._on_fire,
            "rts_end": self._on_rts_end,
            "cts_end": self._on_cts_end,
            "res_end": self._on_res_end,
            "burst_start": self._on_burst_start,
            "burst_end": self._on_burst_end,
            "nav_expiry": self._on_nav_expiry,
            "cts_timeout": self._on_cts_timeout,
            "res_timeout": self._on_res_timeout,
        }

        self._push(0.0, _PRIO_SLOT, "slot", 0)
        while self._heap:
            when, _prio, _seq, kind, payload = heapq.heappop(self._heap)
            handlers[kind](when, payload)

        assert self.metrics.delivered_bits == self.metrics.delivered_bits_by_grants
        return self.metrics


def run(cfg: ScenarioConfig) -> Metrics:
    """Simulate one scenario and return its metrics."""
    return Simulation(cfg).run()


def run_traced(cfg: ScenarioConfig) -> tuple[Metrics, list[tuple]]:
    """Like :func:`run` but also returns the packet trace rows."""
    sim = Simulation(cfg, collect_trace=True)
    metrics = sim.run()
    return metrics, sim.trace or []


def sweep(configs: Iterable[ScenarioConfig]) -> list[Metrics]:
    """Run each config with its own seed; rows come back in input order."""
    out = []
    for i, cfg in enumerate(configs):
        try:
            out.append(run(cfg))
        except Exception as exc:
            raise RuntimeError(f"sweep config #{i} ({cfg.scenario_id}) failed") from exc
    return out


# ---------------------------------------------------------------------------
# allocator-level distance sweep (no contention)
# ---------------------------------------------------------------------------

def rate_gain_table(
    cfg: ScenarioConfig,
    distances: Iterable[float],
    channel_counts: Iterable[int],
) -> list[dict]:
    """Aggregate rate and its gain over the single-channel rate for a lone
    pair at each distance, with all channels idle and clean."""
    params = cfg.propagation_params()
    table = cfg.rate_table()
    rows = []
    counts = list(channel_counts)

    def best_rate(d: float, m: int) -> float:
        plan = cfg.channel_plan(m)
        gains = [
            received_power(1.0, max(d, 1.0), params) * (plan.f0 / fm) ** 4
            for fm in plan.data_freqs
        ]
        problem = build_problem(
            gains, [0.0] * m, None, table, p_n=cfg.noise_w, p_max=cfg.p_max_w
        )
        return solve_dp(problem).total_rate

    for m in counts:
        for d in distances:
            single = best_rate(d, 1)
            multi = best_rate(d, m)
            gain = multi / single if single > 0 else 1.0
            rows.append(
                {
                    "distance_m": d,
                    "m_channels": m,
                    "total_rate_bps": multi,
                    "rate_gain": gain,
                }
            )
    return rows
