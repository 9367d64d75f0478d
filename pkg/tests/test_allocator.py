import math
import random

import pytest

from instance_gen import random_problem, random_raw_problem
from mcdmac.allocator import (
    AllocationProblem,
    InstanceParseError,
    InstanceTooLargeError,
    build_problem,
    check_feasible,
    dp_stages,
    format_instance,
    parse_instance,
    prune_ip,
    solve_bruteforce,
    solve_dp,
)
from mcdmac.propagation import RateTable

RATES3 = (2e6, 5.5e6, 11e6)


def problem_from_rows(power_rows, p_max, caps=None, rates=RATES3):
    rows = tuple(tuple(r) for r in power_rows)
    m = len(rows)
    return AllocationProblem(
        rate_matrix=tuple(rates for _ in range(m)),
        power_matrix=rows,
        p_max=p_max,
        p_max_s=tuple(caps) if caps is not None else (p_max,) * m,
    )


# ---------------------------------------------------------------------------
# build_problem
# ---------------------------------------------------------------------------

def test_build_problem_unit_case():
    table = RateTable(rates=(1e6,), snr_thresholds=(7.0,))
    prob = build_problem([1.0], [0.0], None, table, p_n=1.0, p_max=100.0)
    assert prob.power_matrix == ((7.0,),)


def test_build_problem_gain_linearity():
    table = RateTable(rates=(1e6, 2e6), snr_thresholds=(2.0, 8.0))
    p1 = build_problem([1e-8], [0.0], None, table, p_n=1e-10, p_max=1.0)
    p2 = build_problem([2e-8], [0.0], None, table, p_n=1e-10, p_max=1.0)
    for a, b in zip(p1.power_matrix[0], p2.power_matrix[0]):
        assert b == pytest.approx(a / 2, rel=1e-12)


def test_build_problem_hand_arithmetic():
    # SNR_q (P_n + P_inf) / h with h=1e-8, P_inf=2e-10, P_n=1e-10:
    # floor 3e-10, over gain 1e-8 -> 3e-2 per unit SNR.
    table = RateTable(rates=(1e6, 2e6, 3e6), snr_thresholds=(10.0, 30.0, 100.0))
    prob = build_problem([1e-8], [2e-10], None, table, p_n=1e-10, p_max=10.0)
    assert prob.power_matrix[0] == pytest.approx((0.3, 0.9, 3.0), rel=1e-12)


def test_build_problem_zero_gain_gives_empty_feasible_set():
    table = RateTable(rates=(1e6,), snr_thresholds=(5.0,))
    prob = build_problem([0.0, 1e-8], [0.0, 0.0], None, table, p_n=1e-10, p_max=1.0)
    assert math.isinf(prob.power_matrix[0][0])
    eff = prune_ip(prob)
    assert eff.indices[0] == ()
    assert eff.indices[1] == (0,)


def test_build_problem_validation():
    table = RateTable(rates=(1e6,), snr_thresholds=(5.0,))
    with pytest.raises(ValueError):
        build_problem([], [], None, table, p_n=1e-10, p_max=1.0)
    with pytest.raises(ValueError):
        build_problem([1e-8], [0.0, 0.0], None, table, p_n=1e-10, p_max=1.0)
    with pytest.raises(ValueError):
        build_problem([1e-8], [0.0], None, table, p_n=0.0, p_max=1.0)
    with pytest.raises(ValueError):
        build_problem([-1e-8], [0.0], None, table, p_n=1e-10, p_max=1.0)
    with pytest.raises(ValueError):
        build_problem([1e-8], [0.0], None, RateTable(rates=(1e6,)), p_n=1e-10, p_max=1.0)


# ---------------------------------------------------------------------------
# prune_ip
# ---------------------------------------------------------------------------

def test_prune_keeps_pareto_frontier_intact():
    prob = problem_from_rows([(0.1, 0.2, 0.4)], p_max=1.0)
    assert prune_ip(prob).indices == ((0, 1, 2),)


def test_prune_drops_everything_over_budget():
    prob = problem_from_rows([(2.0, 3.0, 4.0)], p_max=1.0)
    assert prune_ip(prob).indices == ((),)


def test_prune_respects_per_channel_cap():
    prob = problem_from_rows([(0.1, 0.2, 0.4)], p_max=1.0, caps=[0.3])
    assert prune_ip(prob).indices == ((0, 1),)


def test_prune_equal_rate_keeps_cheaper():
    prob = AllocationProblem(
        rate_matrix=((1e6, 1e6),),
        power_matrix=((0.2, 0.5),),
        p_max=1.0,
        p_max_s=(1.0,),
    )
    assert prune_ip(prob).indices == ((0,),)


def test_prune_exact_duplicates_keep_one():
    prob = AllocationProblem(
        rate_matrix=((1e6, 1e6),),
        power_matrix=((0.2, 0.2),),
        p_max=1.0,
        p_max_s=(1.0,),
    )
    assert prune_ip(prob).indices == ((0,),)


def test_prune_matches_pairwise_definition_on_random_instances():
    rng = random.Random(2024)
    for _ in range(200):
        prob = random_raw_problem(rng)
        eff = prune_ip(prob)
        for m in range(prob.m_channels):
            rates = prob.rate_matrix[m]
            powers = prob.power_matrix[m]
            cap = min(prob.p_max, prob.p_max_s[m])
            feasible = [q for q in range(prob.q_rates) if powers[q] <= cap]
            survivors = set(eff.indices[m])
            assert survivors <= set(feasible)
            for q in survivors:
                # no distinct survivor weakly dominates another survivor
                for i in survivors:
                    if i == q:
                        continue
                    assert not (powers[i] <= powers[q] and rates[i] >= rates[q]) or (
                        powers[i] == powers[q] and rates[i] == rates[q]
                    )
            for q in feasible:
                if q in survivors:
                    continue
                # every removed index is weakly dominated by some survivor
                assert any(
                    powers[i] <= powers[q] and rates[i] >= rates[q]
                    for i in survivors
                )


# ---------------------------------------------------------------------------
# solve_dp / solve_bruteforce
# ---------------------------------------------------------------------------

def test_single_channel_single_choice():
    prob = problem_from_rows([(0.2, 0.5, 0.9)], p_max=0.6)
    alloc = solve_dp(prob)
    assert alloc.choices == (1,)
    assert alloc.total_rate == 5.5e6
    assert alloc.powers == (0.5,)


def test_two_channel_fixture_against_oracle():
    prob = problem_from_rows([(0.2, 0.5, 0.9), (0.3, 0.6, 1.2)], p_max=1.0)
    dp = solve_dp(prob)
    bf = solve_bruteforce(prob)
    assert dp == bf
    # enumeration by hand: 11 Mb/s on channel 1 alone beats any pairing
    assert dp.total_rate == 11e6
    assert dp.choices == (2, None)
    assert dp.powers == (0.9, 0.0)


def test_infeasible_instance_returns_zero_allocation():
    prob = problem_from_rows([(2.0, 3.0, 4.0), (5.0, 6.0, 7.0)], p_max=1.0)
    alloc = solve_dp(prob)
    assert alloc.total_rate == 0.0
    assert alloc.choices == (None, None)
    assert alloc.powers == (0.0, 0.0)
    assert solve_bruteforce(prob) == alloc


def test_skip_option_completeness():
    # one cheap high-rate channel exhausts the budget; the second stays dark
    prob = AllocationProblem(
        rate_matrix=((1e6, 100e6), (1e6, 100e6)),
        power_matrix=((0.1, 0.9), (0.1, 0.9)),
        p_max=0.95,
        p_max_s=(0.95, 0.95),
    )
    alloc = solve_dp(prob)
    assert alloc.total_rate == 100e6
    # exactly one channel carries the burst, the skipped one stays at 0 W
    assert sorted(alloc.powers) == [0.0, 0.9]
    skipped = alloc.choices.index(None)
    assert alloc.powers[skipped] == 0.0
    assert solve_bruteforce(prob) == alloc


def test_dp_matches_bruteforce_on_random_instances():
    rng = random.Random(7)
    for _ in range(300):
        prob = random_problem(rng)
        dp = solve_dp(prob)
        bf = solve_bruteforce(prob)
        assert dp.total_rate == bf.total_rate
        assert dp == bf
        assert check_feasible(prob, dp)


def test_dp_matches_bruteforce_on_default_six_channel_setup():
    # six channels with the default three-rate table, random link conditions
    from mcdmac.propagation import default_rate_table

    table = default_rate_table()
    rng = random.Random(61)
    for _ in range(100):
        gains = [10 ** rng.uniform(-10.5, -7.5) for _ in range(6)]
        interference = [rng.choice([0.0, 3e-10, 1e-9]) for _ in range(6)]
        prob = build_problem(gains, interference, None, table, 1e-10, 0.1)
        assert solve_dp(prob) == solve_bruteforce(prob)


def test_disabling_pruning_passes_changes_nothing():
    rng = random.Random(99)
    for _ in range(150):
        prob = random_problem(rng)
        reference = solve_dp(prob).total_rate
        assert solve_dp(prob, ip_pruning=False).total_rate == reference
        assert solve_dp(prob, dp_dominance=False).total_rate == reference
        assert solve_dp(prob, ip_pruning=False, dp_dominance=False).total_rate == reference


def test_dp_state_sets_are_pareto_frontiers():
    rng = random.Random(41)
    for _ in range(60):
        prob = random_problem(rng)
        for stage in dp_stages(prob):
            for i, x in enumerate(stage):
                for j, y in enumerate(stage):
                    if i == j:
                        continue
                    assert not (
                        y.total_power <= x.total_power and y.total_rate >= x.total_rate
                    )


def test_budget_monotonicity():
    rng = random.Random(13)
    for _ in range(80):
        prob = random_problem(rng)
        low = solve_dp(prob).total_rate
        bigger = AllocationProblem(
            rate_matrix=prob.rate_matrix,
            power_matrix=prob.power_matrix,
            p_max=prob.p_max * 1.7,
            p_max_s=prob.p_max_s,
        )
        assert solve_dp(bigger).total_rate >= low


def test_interference_monotonicity():
    rng = random.Random(17)
    table = RateTable(rates=RATES3, snr_thresholds=(0.13, 0.32, 5.1))
    for _ in range(60):
        m = rng.randint(1, 5)
        gains = [10 ** rng.uniform(-10, -8) for _ in range(m)]
        base_inf = [10 ** rng.uniform(-11, -9) for _ in range(m)]
        p_low = build_problem(gains, base_inf, None, table, 1e-10, 0.1)
        bumped = list(base_inf)
        bumped[rng.randrange(m)] *= 5.0
        p_high = build_problem(gains, bumped, None, table, 1e-10, 0.1)
        assert solve_dp(p_high).total_rate <= solve_dp(p_low).total_rate


def test_bruteforce_guard():
    prob = problem_from_rows([(0.1, 0.2, 0.3)] * 12, p_max=1.0)
    with pytest.raises(InstanceTooLargeError):
        solve_bruteforce(prob)


def test_feasibility_of_every_solution():
    rng = random.Random(55)
    for _ in range(200):
        prob = random_problem(rng)
        alloc = solve_dp(prob)
        assert sum(alloc.powers) <= prob.p_max + 1e-15
        for m, q in enumerate(alloc.choices):
            if q is not None:
                assert alloc.powers[m] <= prob.p_max_s[m]
        used = sum(1 for q in alloc.choices if q is not None)
        assert used <= prob.m_channels


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

INSTANCE_TEXT = """\
# two channels, three rates
m 2
q 3
p_max 1.0
rates 2e6 5.5e6 11e6
powers 0.2 0.5 0.9
powers 0.3 0.6 1.2
"""


def test_parse_instance_round_trip():
    prob = parse_instance(INSTANCE_TEXT)
    assert prob.m_channels == 2
    assert prob.q_rates == 3
    assert prob.p_max == 1.0
    assert prob.p_max_s == (1.0, 1.0)
    assert prob.rate_matrix[0] == prob.rate_matrix[1] == RATES3
    again = parse_instance(format_instance(prob))
    assert again == prob


def test_parse_instance_errors():
    with pytest.raises(InstanceParseError):
        parse_instance("")
    with pytest.raises(InstanceParseError) as err:
        parse_instance("m 2\nq 3\np_max 1.0\nrates 2e6 5.5e6\npowers 1 2 3\npowers 1 2 3\n")
    assert err.value.line == 4
    with pytest.raises(InstanceParseError):
        parse_instance("m 1\nq 1\np_max 1.0\nrates abc\npowers 0.1\n")
    with pytest.raises(InstanceParseError):
        parse_instance("bogus 1\n")
    with pytest.raises(InstanceParseError):
        parse_instance("m 2\nq 1\np_max 1.0\nrates 1e6\npowers 0.1\n")
