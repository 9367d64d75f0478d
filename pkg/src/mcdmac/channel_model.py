"""ON/OFF primary-user occupancy over synchronized channel slots.

Primary users pick channels independently at each slot boundary and hold them
for the whole slot. Secondary nodes sense perfectly: the sensing result is the
exact occupancy vector.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True)
class PuActivityModel:
    """Per-channel, per-slot occupancy probability."""

    p_occupy: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_occupy <= 1.0:
            raise ValueError("p_occupy must lie in [0, 1]")


@dataclass(frozen=True)
class SlotSchedule:
    """Occupancy snapshot for one channel slot (True = primary user active)."""

    slot_index: int
    occupancy: tuple[bool, ...]

    def __post_init__(self) -> None:
        if self.slot_index < 0:
            raise ValueError("slot_index must be >= 0")
        object.__setattr__(self, "occupancy", tuple(self.occupancy))


def advance_slot(
    model: PuActivityModel,
    n: int,
    rng: random.Random,
    slot_index: int = 0,
) -> SlotSchedule:
    """Draw the occupancy vector for the next slot.

    Each of the ``n`` channels is occupied independently with probability
    ``model.p_occupy``; the draw is deterministic given the generator state.
    """
    if n < 1:
        raise ValueError("channel count must be >= 1")
    occupancy = tuple(rng.random() < model.p_occupy for _ in range(n))
    return SlotSchedule(slot_index=slot_index, occupancy=occupancy)


def sense(schedule: SlotSchedule) -> tuple[bool, ...]:
    """Perfect sensing: report the slot's occupancy exactly."""
    return schedule.occupancy
