"""Joint power-channel allocation as a multiple-choice knapsack.

Every common data channel offers at most one (rate, power) item. The solver
maximizes the summed rate subject to a total power budget and per-channel
power caps. Items whose power exceeds a budget are infeasible; within one
channel an item is dominated when another item costs no more power and
carries at least the rate. The exact optimum is found by a staged dynamic
program over channels whose partial solutions are pruned by the same
dominance rule, with an exhaustive enumerator kept alongside as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .propagation import RateTable

BRUTEFORCE_GUARD = 10**7


class InstanceTooLargeError(ValueError):
    """Raised when an exhaustive solve would enumerate too many combinations."""


class InstanceParseError(ValueError):
    """Instance file rejected; carries 1-based line and column of the fault."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class AllocationProblem:
    """One knapsack instance: rate and power matrices plus budgets."""

    rate_matrix: tuple[tuple[float, ...], ...]
    power_matrix: tuple[tuple[float, ...], ...]
    p_max: float
    p_max_s: tuple[float, ...]

    def __post_init__(self) -> None:
        rates = tuple(tuple(row) for row in self.rate_matrix)
        powers = tuple(tuple(row) for row in self.power_matrix)
        object.__setattr__(self, "rate_matrix", rates)
        object.__setattr__(self, "power_matrix", powers)
        object.__setattr__(self, "p_max_s", tuple(self.p_max_s))
        if not rates:
            raise ValueError("instance needs at least one channel")
        q = len(rates[0])
        if q < 1:
            raise ValueError("instance needs at least one rate index")
        if any(len(row) != q for row in rates) or any(len(row) != q for row in powers):
            raise ValueError("rate and power rows must all have equal length")
        if len(powers) != len(rates):
            raise ValueError("rate and power matrices must have the same channel count")
        if len(self.p_max_s) != len(rates):
            raise ValueError("p_max_s must have one entry per channel")
        if self.p_max <= 0:
            raise ValueError("p_max must be > 0")
        if any(c < 0 for c in self.p_max_s):
            raise ValueError("per-channel power caps must be >= 0")
        for row in powers:
            if any(p <= 0 for p in row):
                raise ValueError("power entries must be > 0")

    @property
    def m_channels(self) -> int:
        return len(self.rate_matrix)

    @property
    def q_rates(self) -> int:
        return len(self.rate_matrix[0])


@dataclass(frozen=True)
class EfficientSet:
    """Surviving rate indices per channel after feasibility and dominance
    pruning (ascending index order)."""

    indices: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class DpState:
    """A partial solution over the first ``len(choices)`` channels."""

    total_rate: float
    total_power: float
    choices: tuple[Optional[int], ...]


@dataclass(frozen=True)
class Allocation:
    """Final per-channel powers and rate choices (None / 0 W = channel unused)."""

    powers: tuple[float, ...]
    choices: tuple[Optional[int], ...]
    total_rate: float
    total_power: float

    def used_channels(self) -> tuple[int, ...]:
        return tuple(m for m, c in enumerate(self.choices) if c is not None)


def build_problem(
    gains: Sequence[float],
    interference: Sequence[float],
    p_max_s: Optional[Sequence[float]],
    table: RateTable,
    p_n: float,
    p_max: float,
) -> AllocationProblem:
    """Construct the knapsack instance from per-channel gains and measured
    interference.

    The power needed on channel ``m`` for rate index ``q`` is the rate's SNR
    threshold times the noise-plus-interference floor, divided by the channel
    gain. A zero gain leaves the channel with no feasible entry (infinite
    power) rather than raising.
    """
    if table.snr_thresholds is None:
        raise ValueError("rate table must be calibrated (snr_thresholds missing)")
    m = len(gains)
    if m < 1:
        raise ValueError("need at least one channel")
    if len(interference) != m:
        raise ValueError("gains and interference must have equal length")
    if p_max_s is None:
        p_max_s = [p_max] * m
    if len(p_max_s) != m:
        raise ValueError("p_max_s must have one entry per channel")
    if p_n <= 0:
        raise ValueError("noise power must be > 0")
    if any(g < 0 for g in gains) or any(i < 0 for i in interference):
        raise ValueError("gains and interference must be >= 0")

    power_rows = []
    for h, p_inf in zip(gains, interference):
        if h == 0:
            power_rows.append(tuple(math.inf for _ in table.snr_thresholds))
        else:
            floor = p_n + p_inf
            power_rows.append(tuple(s * floor / h for s in table.snr_thresholds))
    rate_rows = tuple(table.rates for _ in range(m))
    return AllocationProblem(
        rate_matrix=rate_rows,
        power_matrix=tuple(power_rows),
        p_max=p_max,
        p_max_s=tuple(p_max_s),
    )


def _feasible_indices(problem: AllocationProblem, m: int) -> list[int]:
    cap = min(problem.p_max, problem.p_max_s[m])
    return [q for q, p in enumerate(problem.power_matrix[m]) if p <= cap]


def prune_ip(problem: AllocationProblem) -> EfficientSet:
    """Drop infeasible indices, then dominated ones, channel by channel.

    Exact duplicates (equal rate and power) dominate each other; exactly one
    survivor, the lowest index, is kept.
    """
    surviving = []
    for m in range(problem.m_channels):
        rates = problem.rate_matrix[m]
        powers = problem.power_matrix[m]
        feasible = _feasible_indices(problem, m)
        feasible.sort(key=lambda q: (powers[q], -rates[q], q))
        kept: list[int] = []
        best_rate = -math.inf
        for q in feasible:
            if rates[q] > best_rate:
                kept.append(q)
                best_rate = rates[q]
        kept.sort()
        surviving.append(tuple(kept))
    return EfficientSet(indices=tuple(surviving))


def _choice_key(choices: Iterable[Optional[int]]) -> tuple[int, ...]:
    # Skip orders before any concrete index.
    return tuple(-1 if c is None else c for c in choices)


def _prune_states(states: list[DpState]) -> list[DpState]:
    """Keep the Pareto frontier: no survivor is matched or beaten on both
    rate and power by another; (rate, power) ties keep the smallest choice
    vector."""
    states.sort(key=lambda s: (s.total_power, -s.total_rate, _choice_key(s.choices)))
    kept: list[DpState] = []
    best_rate = -math.inf
    for s in states:
        if s.total_rate > best_rate:
            kept.append(s)
            best_rate = s.total_rate
    return kept


def dp_stages(
    problem: AllocationProblem,
    ip_pruning: bool = True,
    dp_dominance: bool = True,
) -> list[list[DpState]]:
    """Run the staged dynamic program and return the retained state set after
    every stage (stage L covers the first L channels).

    Both pruning passes are optimizations and can be disabled independently;
    budget feasibility is always enforced.
    """
    if ip_pruning:
        per_channel = [list(ix) for ix in prune_ip(problem).indices]
    else:
        per_channel = [_feasible_indices(problem, m) for m in range(problem.m_channels)]

    stages: list[list[DpState]] = []
    states = [DpState(0.0, 0.0, ())]
    for m in range(problem.m_channels):
        rates = problem.rate_matrix[m]
        powers = problem.power_matrix[m]
        options: list[Optional[int]] = [None] + per_channel[m]
        extended: list[DpState] = []
        for s in states:
            for q in options:
                if q is None:
                    extended.append(
                        DpState(s.total_rate, s.total_power, s.choices + (None,))
                    )
                    continue
                power = s.total_power + powers[q]
                if power > problem.p_max:
                    continue
                extended.append(
                    DpState(s.total_rate + rates[q], power, s.choices + (q,))
                )
        if dp_dominance:
            states = _prune_states(extended)
        else:
            states = extended
        stages.append(list(states))
    return stages


def _allocation_from_state(problem: AllocationProblem, state: DpState) -> Allocation:
    powers = tuple(
        0.0 if q is None else problem.power_matrix[m][q]
        for m, q in enumerate(state.choices)
    )
    return Allocation(
        powers=powers,
        choices=state.choices,
        total_rate=state.total_rate,
        total_power=state.total_power,
    )


def _best_state(states: Iterable[DpState]) -> DpState:
    return min(
        states,
        key=lambda s: (-s.total_rate, s.total_power, _choice_key(s.choices)),
    )


def solve_dp(
    problem: AllocationProblem,
    ip_pruning: bool = True,
    dp_dominance: bool = True,
) -> Allocation:
    """Exact maximum-rate allocation under the power budgets.

    Ties on total rate are broken toward minimum total power, then the
    smallest choice vector. If nothing is feasible the all-skip allocation
    (zero rate, zero power) is returned.
    """
    stages = dp_stages(problem, ip_pruning=ip_pruning, dp_dominance=dp_dominance)
    return _allocation_from_state(problem, _best_state(stages[-1]))


def solve_bruteforce(problem: AllocationProblem) -> Allocation:
    """Exhaustive reference solver with identical tie-breaking to
    :func:`solve_dp`; guarded against oversized instances."""
    nominal = (problem.q_rates + 1) ** problem.m_channels
    if nominal > BRUTEFORCE_GUARD:
        raise InstanceTooLargeError(
            f"{nominal} combinations exceed the exhaustive-solve guard"
        )
    per_channel = [_feasible_indices(problem, m) for m in range(problem.m_channels)]

    best: Optional[DpState] = None

    def recurse(m: int, state: DpState) -> None:
        nonlocal best
        if m == problem.m_channels:
            if best is None or (
                (-state.total_rate, state.total_power, _choice_key(state.choices))
                < (-best.total_rate, best.total_power, _choice_key(best.choices))
            ):
                best = state
            return
        rates = problem.rate_matrix[m]
        powers = problem.power_matrix[m]
        recurse(m + 1, DpState(state.total_rate, state.total_power, state.choices + (None,)))
        for q in per_channel[m]:
            power = state.total_power + powers[q]
            if power > problem.p_max:
                continue
            recurse(m + 1, DpState(state.total_rate + rates[q], power, state.choices + (q,)))

    recurse(0, DpState(0.0, 0.0, ()))
    assert best is not None
    return _allocation_from_state(problem, best)


def check_feasible(problem: AllocationProblem, allocation: Allocation) -> bool:
    """True iff the allocation satisfies every instance constraint."""
    if len(allocation.choices) != problem.m_channels:
        return False
    total = 0.0
    for m, q in enumerate(allocation.choices):
        if q is None:
            if allocation.powers[m] != 0.0:
                return False
            continue
        p = problem.power_matrix[m][q]
        if p != allocation.powers[m]:
            return False
        if p > problem.p_max_s[m]:
            return False
        total += p
    return total <= problem.p_max


# ---------------------------------------------------------------------------
# Plain-text instance files
# ---------------------------------------------------------------------------

def parse_instance(text: str) -> AllocationProblem:
    """Parse an allocation instance from its plain-text form.

    Layout (values whitespace-separated, ``#`` starts a comment)::

        m 2
        q 3
        p_max 1.0
        p_max_s 1.0 1.0        # optional, defaults to p_max per channel
        rates 2e6 5.5e6 11e6   # one line shared by all channels, or m lines
        powers 0.2 0.5 0.9     # m lines, one per channel
        powers 0.3 0.6 1.2
    """
    m: Optional[int] = None
    q: Optional[int] = None
    p_max: Optional[float] = None
    p_max_s: Optional[list[float]] = None
    rate_rows: list[tuple[float, ...]] = []
    power_rows: list[tuple[float, ...]] = []

    def fail(lineno: int, col: int, msg: str) -> None:
        raise InstanceParseError(lineno, col, msg)

    def parse_floats(lineno: int, line: str, fields: list[str], expect: int) -> list[float]:
        if len(fields) != expect:
            fail(lineno, len(line) + 1, f"expected {expect} values, got {len(fields)}")
        out = []
        for tok in fields:
            try:
                out.append(float(tok))
            except ValueError:
                fail(lineno, line.index(tok) + 1, f"not a number: {tok!r}")
        return out

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        fields = line.split()
        key, rest = fields[0], fields[1:]
        if key == "m":
            vals = parse_floats(lineno, line, rest, 1)
            m = int(vals[0])
        elif key == "q":
            vals = parse_floats(lineno, line, rest, 1)
            q = int(vals[0])
        elif key == "p_max":
            p_max = parse_floats(lineno, line, rest, 1)[0]
        elif key == "p_max_s":
            if m is None:
                fail(lineno, 1, "p_max_s must follow the m line")
            p_max_s = parse_floats(lineno, line, rest, m)
        elif key == "rates":
            if q is None:
                fail(lineno, 1, "rates must follow the q line")
            rate_rows.append(tuple(parse_floats(lineno, line, rest, q)))
        elif key == "powers":
            if q is None:
                fail(lineno, 1, "powers must follow the q line")
            power_rows.append(tuple(parse_floats(lineno, line, rest, q)))
        else:
            fail(lineno, 1, f"unknown directive {key!r}")

    if m is None or q is None or p_max is None:
        raise InstanceParseError(1, 1, "instance must define m, q and p_max")
    if len(power_rows) != m:
        raise InstanceParseError(1, 1, f"expected {m} powers lines, got {len(power_rows)}")
    if len(rate_rows) == 1:
        rate_rows = rate_rows * m
    if len(rate_rows) != m:
        raise InstanceParseError(
            1, 1, f"expected 1 or {m} rates lines, got {len(rate_rows)}"
        )
    if p_max_s is None:
        p_max_s = [p_max] * m
    return AllocationProblem(
        rate_matrix=tuple(rate_rows),
        power_matrix=tuple(power_rows),
        p_max=p_max,
        p_max_s=tuple(p_max_s),
    )


def format_instance(problem: AllocationProblem) -> str:
    """Serialize an instance in the format accepted by :func:`parse_instance`."""
    lines = [
        f"m {problem.m_channels}",
        f"q {problem.q_rates}",
        f"p_max {problem.p_max!r}",
        "p_max_s " + " ".join(repr(c) for c in problem.p_max_s),
    ]
    for row in problem.rate_matrix:
        lines.append("rates " + " ".join(repr(v) for v in row))
    for row in problem.power_matrix:
        lines.append("powers " + " ".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"
