import random

import pytest

from mcdmac.channel_model import PuActivityModel, SlotSchedule, advance_slot, sense


def test_degenerate_probabilities():
    rng = random.Random(7)
    free = advance_slot(PuActivityModel(0.0), 6, rng)
    assert free.occupancy == (False,) * 6
    busy = advance_slot(PuActivityModel(1.0), 6, rng)
    assert busy.occupancy == (True,) * 6


def test_model_validation():
    with pytest.raises(ValueError):
        PuActivityModel(-0.1)
    with pytest.raises(ValueError):
        PuActivityModel(1.5)
    with pytest.raises(ValueError):
        advance_slot(PuActivityModel(0.5), 0, random.Random(1))


def test_monte_carlo_mean_free_channels():
    # p_occupy = 0.5 on 6 channels: mean free count is binomial, 3.0.
    rng = random.Random(12345)
    model = PuActivityModel(0.5)
    slots = 10_000
    total_free = 0
    for i in range(slots):
        sched = advance_slot(model, 6, rng, slot_index=i)
        total_free += sum(1 for occ in sched.occupancy if not occ)
    assert total_free / slots == pytest.approx(3.0, abs=0.1)


def test_sense_returns_exact_occupancy():
    assert sense(SlotSchedule(0, (False,) * 4)) == (False,) * 4
    assert sense(SlotSchedule(1, (True,) * 4)) == (True,) * 4
    mixed = (True, False, False, True, False)
    sched = SlotSchedule(2, mixed)
    assert sense(sched) == mixed
    # stationary within the slot: repeated sensing never differs
    assert sense(sched) == sense(sched)


def test_seeded_reproducibility():
    model = PuActivityModel(0.5)
    runs = []
    for _ in range(2):
        rng = random.Random(99)
        runs.append([advance_slot(model, 5, rng, i).occupancy for i in range(50)])
    assert runs[0] == runs[1]
