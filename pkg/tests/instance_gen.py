"""Random allocation-instance generators shared by unit and acceptance tests."""

import random

from mcdmac.allocator import AllocationProblem, build_problem
from mcdmac.propagation import RateTable


def random_rate_table(rng: random.Random, q_max: int = 4) -> RateTable:
    q = rng.randint(1, q_max)
    rates = []
    r = rng.uniform(1e6, 3e6)
    for _ in range(q):
        rates.append(r)
        r *= rng.uniform(1.5, 3.0)
    thresholds = []
    s = rng.uniform(0.05, 1.0)
    for _ in range(q):
        thresholds.append(s)
        s *= rng.uniform(2.0, 6.0)
    return RateTable(rates=tuple(rates), snr_thresholds=tuple(thresholds))


def random_built_problem(rng: random.Random, m_max: int = 6, q_max: int = 4) -> AllocationProblem:
    """Instance with the protocol's structure: rows share the rate set and
    powers follow the SNR thresholds (random gains, interference, budgets)."""
    table = random_rate_table(rng, q_max)
    m = rng.randint(1, m_max)
    gains = [10 ** rng.uniform(-10.0, -7.0) for _ in range(m)]
    if rng.random() < 0.1:
        gains[rng.randrange(m)] = 0.0
    interference = [0.0 if rng.random() < 0.5 else 10 ** rng.uniform(-11, -8) for _ in range(m)]
    p_max = 10 ** rng.uniform(-2.0, 0.0)
    if rng.random() < 0.5:
        caps = [p_max * 10 ** rng.uniform(-1.5, 0.5) for _ in range(m)]
    else:
        caps = None
    return build_problem(gains, interference, caps, table, p_n=1e-10, p_max=p_max)


def random_raw_problem(rng: random.Random, m_max: int = 6, q_max: int = 4) -> AllocationProblem:
    """Unstructured instance: arbitrary positive rate/power entries, so rows
    need not be monotone and dominance pruning has real work to do."""
    m = rng.randint(1, m_max)
    q = rng.randint(1, q_max)
    rates = tuple(
        tuple(rng.choice([1.0, 2.0, 3.0, 5.0, 8.0]) * 1e6 for _ in range(q))
        for _ in range(m)
    )
    powers = tuple(
        tuple(rng.choice([0.05, 0.1, 0.2, 0.4, 0.8]) for _ in range(q))
        for _ in range(m)
    )
    p_max = rng.choice([0.1, 0.3, 0.5, 1.0])
    caps = tuple(rng.choice([0.05, 0.2, 1.0]) for _ in range(m))
    return AllocationProblem(rate_matrix=rates, power_matrix=powers, p_max=p_max, p_max_s=caps)


def random_problem(rng: random.Random, m_max: int = 6, q_max: int = 4) -> AllocationProblem:
    if rng.random() < 0.5:
        return random_built_problem(rng, m_max, q_max)
    return random_raw_problem(rng, m_max, q_max)
