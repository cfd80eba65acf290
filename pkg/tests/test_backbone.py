import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkdplan.backbone import (
    CostModel,
    Implementation,
    NetworkSpec,
    best_configurations,
    cheapest_among,
    cheapest_implementation,
    cluster_split,
    effective_rate,
    enumerate_implementations,
    pair_rates,
    plan,
    subgroup_rate,
)

from conftest import BACKBONE_NODES, BACKBONE_RATES

REFERENCE_COSTS = CostModel(alice=1.0, bob=2.0, switch=0.1)
P_GRID = np.arange(1, 1000) / 1000.0


# --- independent oracles -------------------------------------------------

def grid_cluster_rate(rates):
    if len(rates) == 1:
        return rates[0]
    r_odd, r_even = min(rates[0::2]), min(rates[1::2])
    return float(np.max(np.minimum(P_GRID * r_odd, (1 - P_GRID) * r_even)))


def grid_best(rates, k):
    """Best effective rate with k switches, by time-sharing over a p grid."""
    n = len(rates)
    span = {(i, j): grid_cluster_rate(rates[i:j]) for i in range(n) for j in range(i + 1, n + 1)}
    best = -1.0
    for mask in range(2 ** (n - 1)):
        if bin(mask).count("1") != k:
            continue
        bounds = [0] + [i + 1 for i in range(n - 1) if not mask >> i & 1] + [n]
        best = max(best, min(span[a, b] for a, b in zip(bounds, bounds[1:])))
    return best


NODE_CHOICES = {"edge": ("A", "B"), "S": ("SA", "SB"), "F": ("AA", "AB", "BA", "BB")}


def left_letter(token):
    return token[-1]


def right_letter(token):
    return token[1] if token.startswith("S") else token[0]


def brute_implementations(x):
    kinds = ["edge"] + list(x) + ["edge"]
    out = set()
    for tokens in itertools.product(*(NODE_CHOICES[k] for k in kinds)):
        ends = [(left_letter(a), right_letter(b)) for a, b in zip(tokens, tokens[1:])]
        if all(sorted(e) == ["A", "B"] for e in ends):
            out.add("-".join(tokens))
    return out


def assert_valid(impl, x):
    tokens = impl.tokens
    assert len(tokens) == len(x) + 2
    assert tokens[0] in ("A", "B") and tokens[-1] in ("A", "B")
    for kind, tok in zip(x, tokens[1:-1]):
        assert tok in NODE_CHOICES[kind]
    for a, b in zip(tokens, tokens[1:]):
        assert {left_letter(a), right_letter(b)} == {"A", "B"}
    assert impl.n_alice + impl.n_bob == impl.n_total


# --- clusters and subgroup rates -----------------------------------------

class TestClusters:
    def test_all_full(self):
        assert cluster_split("FFFFFF") == [range(i, i + 1) for i in range(7)]

    def test_mixed(self):
        assert [list(c) for c in cluster_split("FSSFFS")] == [[0], [1, 2, 3], [4], [5, 6]]

    def test_all_switch(self):
        assert cluster_split("SSSSSS") == [range(0, 7)]

    def test_single_link(self):
        assert cluster_split("") == [range(0, 1)]

    def test_rejects_other_letters(self):
        with pytest.raises(ValueError):
            cluster_split("FXS")


class TestSubgroupRate:
    def test_singleton(self):
        assert subgroup_rate([1.0]) == (1.0, 1.0)

    def test_symmetric(self):
        assert subgroup_rate([3.0, 3.0]) == (1.5, 0.5)

    def test_whole_backbone(self):
        rate, p = subgroup_rate(BACKBONE_RATES)
        assert rate == pytest.approx(1.4 / 2.4, rel=1e-15)
        assert p == pytest.approx(1.4 / 2.4, rel=1e-15)

    def test_pair_is_half_harmonic_mean(self):
        a, b = 2.7, 1.4
        assert subgroup_rate([a, b])[0] == pytest.approx(0.5 * 2 * a * b / (a + b), rel=1e-15)

    @given(st.lists(st.floats(0.01, 100), min_size=2, max_size=12))
    def test_p_star_balances_modes(self, rates):
        rate, p = subgroup_rate(rates)
        r_odd, r_even = min(rates[0::2]), min(rates[1::2])
        assert 0 < p < 1
        assert min(p * r_odd, (1 - p) * r_even) == pytest.approx(rate, rel=1e-12)
        assert rate <= min(r_odd, r_even) and rate <= min(rates)

    def test_switch_overhead_duty(self):
        assert subgroup_rate([2.0, 2.0], switch_overhead=0.05)[0] == pytest.approx(0.9)
        assert subgroup_rate([2.0, 2.0], switch_overhead=0.01, cycle_period=0.1)[0] == pytest.approx(0.8)
        assert subgroup_rate([2.0, 2.0], switch_overhead=1.0)[0] == 0.0
        # no switch, no overhead
        assert subgroup_rate([2.0], switch_overhead=0.4)[0] == 2.0

    def test_pair_rates(self):
        assert pair_rates([1.0, 1.0, 3.0]) == [0.5, 0.75]


class TestEffectiveRate:
    @pytest.mark.parametrize("x,expected", [
        ("FFFFFF", 1.0), ("FSSFFS", 1.0), ("SSSFFS", 0.92), ("SFSSSS", 0.6), ("SSSSSS", 0.58),
    ])
    def test_reference_rows(self, x, expected):
        assert round(effective_rate(BACKBONE_RATES, x), 2) == expected

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            effective_rate(BACKBONE_RATES, "FFF")

    def test_switch_monotonicity_exhaustive(self):
        rng = random.Random(3)
        for n in range(2, 9):
            for _ in range(20):
                rates = [rng.uniform(0.5, 10) for _ in range(n)]
                for x in map("".join, itertools.product("SF", repeat=n - 1)):
                    r = effective_rate(rates, x)
                    assert r <= min(rates) * (1 + 1e-12)
                    for i, c in enumerate(x):
                        if c == "F":
                            y = x[:i] + "S" + x[i + 1:]
                            assert effective_rate(rates, y) <= r * (1 + 1e-12)


class TestBestConfigurations:
    def test_no_switch(self):
        assert best_configurations(BACKBONE_RATES, 0) == (1.0, ["FFFFFF"])

    def test_three_switches_keep_full_rate(self):
        rate, configs = best_configurations(BACKBONE_RATES, 3)
        assert rate == pytest.approx(1.0)
        assert "FSSFFS" in configs
        assert configs == sorted(configs)

    def test_locks_respected(self):
        rate, configs = best_configurations(BACKBONE_RATES, 3, locked=[0])
        assert all(x[0] == "F" for x in configs)
        assert rate == pytest.approx(1.0)

    @pytest.mark.parametrize("k,locked", [(7, ()), (-1, ()), (6, (0,)), (1, (9,))])
    def test_infeasible(self, k, locked):
        with pytest.raises(ValueError):
            best_configurations(BACKBONE_RATES, k, locked)

    def test_single_link(self):
        assert best_configurations([2.5], 0) == (2.5, [""])

    def test_matches_grid_oracle(self):
        rng = random.Random(12345)
        instances = 0
        for _ in range(1000):
            n = rng.randint(1, 8)
            rates = [rng.uniform(0.5, 10) for _ in range(n)]
            k = rng.randint(0, n - 1)
            rate, configs = best_configurations(rates, k)
            oracle = grid_best(rates, k)
            assert rate == pytest.approx(oracle, rel=1e-3)
            assert rate >= oracle * (1 - 1e-12)
            for x in configs:
                assert effective_rate(rates, x) == pytest.approx(rate, rel=1e-12)
            instances += 1
        assert instances == 1000


class TestImplementations:
    def test_switch_then_full_examples(self):
        rendered = {i.render() for i in enumerate_implementations("SF")}
        assert {"A-SB-AB-A", "B-SA-BA-B", "B-SA-BB-A"} <= rendered

    def test_single_link(self):
        assert [i.render() for i in enumerate_implementations("")] == ["A-B", "B-A"]

    def test_all_full_contains_alternating(self):
        impls = {i.render(): i for i in enumerate_implementations("FFFFFF")}
        impl = impls["A-BA-BA-BA-BA-BA-BA-B"]
        assert (impl.n_alice, impl.n_bob) == (7, 7)
        assert len(impls) == 2 ** 7

    def test_against_token_brute_force(self):
        for n in range(1, 7):
            for x in map("".join, itertools.product("SF", repeat=n - 1)):
                impls = enumerate_implementations(x)
                assert {i.render() for i in impls} == brute_implementations(x)
                for impl in impls:
                    assert_valid(impl, x)

    @pytest.mark.parametrize("costs", [
        CostModel(1, 2, 0.1), CostModel(1, 1, 0), CostModel(2, 1, 0.5), CostModel(1, 3, 5),
    ])
    def test_cheapest_matches_enumeration(self, costs):
        for n in range(1, 9):
            for x in map("".join, itertools.product("SF", repeat=n - 1)):
                impls = enumerate_implementations(x)
                best = min(impls, key=lambda i: (i.cost(costs), i.n_bob, i.render()))
                assert cheapest_implementation(x, costs) == best

    def test_equal_costs_all_full(self):
        impl = cheapest_implementation("FFFFFF", CostModel(1, 1, 0.3))
        assert impl.n_total == 14 and impl.cost(CostModel(1, 1, 0.3)) == 14

    def test_counts(self):
        impl = Implementation(("A", "SB", "AB", "A"))
        assert (impl.n_alice, impl.n_bob, impl.n_switch, impl.n_total) == (3, 2, 1, 5)
        assert impl.cost(CostModel(1, 2, 0.1)) == pytest.approx(7.1)
        assert str(impl) == "A-SB-AB-A"

    def test_cheapest_among_requires_input(self):
        with pytest.raises(ValueError):
            cheapest_among([], REFERENCE_COSTS)


REFERENCE_PLAN = [
    # k, rate, N_A, N_B, N_tot, reference assignment
    (0, 1.0, 7, 7, 14, "A-BA-BA-BA-BA-BA-BA-B"),
    (3, 1.0, 6, 5, 11, "A-BA-SB-SA-BA-BA-SB-A"),
    (4, 0.92, 6, 4, 10, "A-SB-SA-SB-AA-BA-SB-A"),
    (5, 0.6, 5, 4, 9, "A-SB-SA-SB-AB-SA-SB-A"),
    (6, 0.58, 4, 4, 8, "A-SB-SA-SB-SA-SB-SA-B"),
]


@pytest.fixture(scope="module")
def report():
    net = NetworkSpec(BACKBONE_NODES, BACKBONE_RATES)
    return plan(net, REFERENCE_COSTS, [0, 3, 4, 5, 6])


class TestPlan:
    def test_rates_and_counts(self, report):
        for row, (k, rate, n_a, n_b, n_tot, _) in zip(report.rows, REFERENCE_PLAN):
            assert row.k == k
            assert round(row.rate, 2) == rate
            assert (row.n_alice, row.n_bob, row.n_total) == (n_a, n_b, n_tot)

    def test_assignment_is_reference_or_equal_cost(self, report):
        for row, (*_, reference) in zip(report.rows, REFERENCE_PLAN):
            candidates = {}
            for x in row.configurations:
                for impl in enumerate_implementations(x):
                    candidates[impl.render()] = impl
            minimum = min(i.cost(REFERENCE_COSTS) for i in candidates.values())
            assert row.cost == pytest.approx(minimum)
            assert reference in candidates
            assert candidates[reference].cost(REFERENCE_COSTS) == pytest.approx(row.cost)
            assert_valid(row.implementation, row.configuration)

    def test_exact_strings_where_unique(self, report):
        rendered = [row.implementation.render() for row in report.rows]
        for i in (0, 1, 2, 4):
            assert rendered[i] == REFERENCE_PLAN[i][5]
        assert report.rows[3].configurations == ("SFSSSS", "SSFSSS", "SSSFSS")

    def test_switch_names(self, report):
        net = report.network
        assert report.rows[1].switch_nodes(net) == ["Uvarovka", "Gagarin", "V. Volochek"]
        assert report.rows[4].switch_nodes(net) == list(net.trusted_nodes)

    def test_ratios(self, report):
        assert report.rows[0].rate_ratio == 1.0 and report.rows[0].cost_ratio == 1.0
        assert report.rows[4].cost_ratio == pytest.approx((4 + 8 + 0.6) / 21)

    def test_pair_rates(self, report):
        names = [name for name, _ in report.pair_rates]
        assert names == BACKBONE_NODES[1:-1]
        for (_, r), a, b in zip(report.pair_rates, BACKBONE_RATES, BACKBONE_RATES[1:]):
            assert r == pytest.approx(a * b / (a + b), rel=1e-15)

    def test_lock_by_name(self):
        net = NetworkSpec(BACKBONE_NODES, BACKBONE_RATES)
        row = plan(net, REFERENCE_COSTS, [3], locked=["Uvarovka"]).rows[0]
        assert row.configuration[1] == "F"
        with pytest.raises(ValueError):
            plan(net, REFERENCE_COSTS, [1], locked=["Moscow"])

    def test_single_link(self):
        report = plan(NetworkSpec(["a", "b"], [3.0]), REFERENCE_COSTS, [0])
        (row,) = report.rows
        assert row.rate == 3.0 and row.implementation.render() == "A-B" and report.pair_rates == ()


class TestNetworkSpec:
    @pytest.mark.parametrize("names,rates", [
        (["a"], []), (["a", "b", "c"], [1.0]), (["a", "a"], [1.0]), (["a", "b"], [0.0]),
    ])
    def test_invalid(self, names, rates):
        with pytest.raises(ValueError):
            NetworkSpec(names, rates)

    def test_node_index(self):
        net = NetworkSpec(BACKBONE_NODES, BACKBONE_RATES)
        assert net.node_index("Torzhok") == 4
        assert math.isclose(net.link_rates[4], 1.0)
