"""Switch placement and device assignment on a linear trusted-node backbone.

A backbone of N links has N-1 trusted nodes, each either full (``F``, two
QKD devices) or switch-based (``S``, one device toggled between its two
links).  A configuration is the string of node types, e.g. ``"FSSFFS"``.
Full nodes split the links into clusters; inside a cluster the odd and
even links take turns, so the cluster delivers
``R_odd * R_even / (R_odd + R_even)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

MAX_LINKS = 30
_REL_TIE = 1e-12


@dataclass(frozen=True)
class NetworkSpec:
    node_names: tuple[str, ...]
    link_rates: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_names", tuple(self.node_names))
        object.__setattr__(self, "link_rates", tuple(float(r) for r in self.link_rates))
        if len(self.link_rates) < 1:
            raise ValueError("a network needs at least one link")
        if len(self.node_names) != len(self.link_rates) + 1:
            raise ValueError(
                f"{len(self.link_rates)} links need {len(self.link_rates) + 1} node names, "
                f"got {len(self.node_names)}"
            )
        if len(set(self.node_names)) != len(self.node_names):
            raise ValueError("node names must be unique")
        if any(not r > 0 for r in self.link_rates):
            raise ValueError("all link rates must be positive")

    @property
    def n_links(self) -> int:
        return len(self.link_rates)

    @property
    def trusted_nodes(self) -> tuple[str, ...]:
        return self.node_names[1:-1]

    def node_index(self, name: str) -> int:
        """Position of trusted node ``name`` in the configuration string."""
        try:
            i = self.trusted_nodes.index(name)
        except ValueError:
            raise ValueError(f"{name!r} is not a trusted (intermediate) node") from None
        return i


@dataclass(frozen=True)
class CostModel:
    alice: float = 1.0
    bob: float = 1.0
    switch: float = 0.0

    def __post_init__(self) -> None:
        if min(self.alice, self.bob, self.switch) < 0:
            raise ValueError("costs must be non-negative")


@dataclass(frozen=True)
class Implementation:
    """Concrete device assignment, one token per node.

    Edge nodes are ``A`` or ``B``; switch nodes ``SA`` or ``SB``; full nodes
    two letters, the first facing the link on their left.
    """

    tokens: tuple[str, ...]

    @property
    def n_alice(self) -> int:
        return sum(t.count("A") for t in self.tokens)

    @property
    def n_bob(self) -> int:
        return sum(t.count("B") for t in self.tokens)

    @property
    def n_switch(self) -> int:
        return sum(t.startswith("S") for t in self.tokens)

    @property
    def n_total(self) -> int:
        return self.n_alice + self.n_bob

    def cost(self, costs: CostModel) -> float:
        return self.n_alice * costs.alice + self.n_bob * costs.bob + self.n_switch * costs.switch

    def render(self) -> str:
        return "-".join(self.tokens)

    def __str__(self) -> str:
        return self.render()


def check_configuration(x: str, n_links: int | None = None) -> None:
    if any(c not in "SF" for c in x):
        raise ValueError(f"configuration must be a string over S/F, got {x!r}")
    if n_links is not None and len(x) != n_links - 1:
        raise ValueError(f"configuration {x!r} has {len(x)} nodes, expected {n_links - 1}")


def cluster_split(x: str) -> list[range]:
    """Link index ranges of the clusters; a new cluster starts after every F."""
    check_configuration(x)
    clusters = []
    start = 0
    for i, node in enumerate(x):
        if node == "F":
            clusters.append(range(start, i + 1))
            start = i + 1
    clusters.append(range(start, len(x) + 1))
    return clusters


def subgroup_rate(
    rates: Sequence[float],
    switch_overhead: float = 0.0,
    cycle_period: float = 1.0,
) -> tuple[float, float]:
    """Best odd/even time-sharing rate of one cluster and the odd-mode time fraction.

    ``switch_overhead`` is the dead time of one toggle; a full odd/even
    cycle of ``cycle_period`` seconds contains two toggles, which scales
    multi-link clusters by ``1 - 2 * switch_overhead / cycle_period``.
    """
    if not rates:
        raise ValueError("cluster must contain at least one link")
    if len(rates) == 1:
        return float(rates[0]), 1.0
    r_odd = min(rates[0::2])
    r_even = min(rates[1::2])
    duty = 1.0
    if switch_overhead:
        if cycle_period <= 0:
            raise ValueError("cycle_period must be positive")
        duty = max(0.0, 1.0 - 2.0 * switch_overhead / cycle_period)
    return duty * r_odd * r_even / (r_odd + r_even), r_even / (r_odd + r_even)


def effective_rate(rates: Sequence[float], x: str, **overhead) -> float:
    """End-to-end key rate: the slowest cluster."""
    check_configuration(x, len(rates))
    return min(subgroup_rate([rates[i] for i in c], **overhead)[0] for c in cluster_split(x))


def pair_rates(rates: Sequence[float]) -> list[float]:
    """Rate of each adjacent link pair merged by a single switch."""
    return [a * b / (a + b) for a, b in zip(rates, rates[1:])]


def _config_from_mask(n_nodes: int, switches: Iterable[int]) -> str:
    chars = ["F"] * n_nodes
    for i in switches:
        chars[i] = "S"
    return "".join(chars)


def best_configurations(
    rates: Sequence[float],
    k: int,
    locked: Iterable[int] = (),
    **overhead,
) -> tuple[float, list[str]]:
    """All placements of ``k`` switches reaching the maximal effective rate.

    ``locked`` lists trusted-node indices forced to stay full.  Returns the
    maximal rate and the argmax configurations in lexicographic order.
    """
    n_nodes = len(rates) - 1
    if len(rates) > MAX_LINKS:
        raise ValueError(f"exhaustive search is limited to {MAX_LINKS} links")
    locked = set(locked)
    if any(not 0 <= i < n_nodes for i in locked):
        raise ValueError("locked node index out of range")
    free = [i for i in range(n_nodes) if i not in locked]
    if not 0 <= k <= len(free):
        raise ValueError(f"cannot place {k} switches on {len(free)} unlocked trusted nodes")

    best_rate = -math.inf
    best: list[str] = []
    for combo in itertools.combinations(free, k):
        x = _config_from_mask(n_nodes, combo)
        r = effective_rate(rates, x, **overhead)
        if r > best_rate and not math.isclose(r, best_rate, rel_tol=_REL_TIE):
            best_rate, best = r, [x]
        elif math.isclose(r, best_rate, rel_tol=_REL_TIE):
            best.append(x)
    return best_rate, sorted(best)


def _tokens_from_orientation(x: str, alice_left: Sequence[bool]) -> tuple[str, ...]:
    """Node tokens for per-link orientations (True: Alice at the link's left end)."""
    n = len(alice_left)
    left_end = ["A" if a else "B" for a in alice_left]
    right_end = ["B" if a else "A" for a in alice_left]
    tokens = [left_end[0]]
    for j in range(1, n):
        if x[j - 1] == "S":
            tokens.append("S" + right_end[j - 1])
        else:
            tokens.append(right_end[j - 1] + left_end[j])
    tokens.append(right_end[n - 1])
    return tuple(tokens)


def _cluster_orientations(x: str, first_alice_left: Sequence[bool]) -> list[bool]:
    # a switch node is one device, so the orientation flips across it
    out = []
    for cluster, a in zip(cluster_split(x), first_alice_left):
        for offset in range(len(cluster)):
            out.append(a if offset % 2 == 0 else not a)
    return out


def enumerate_implementations(x: str, n_links: int | None = None) -> list[Implementation]:
    """Every device assignment realising configuration ``x``.

    Each cluster has exactly two orientations, so there are ``2**m``
    implementations for ``m`` clusters, returned in rendering order.
    """
    check_configuration(x, n_links)
    m = len(cluster_split(x))
    if m > 20:
        raise ValueError("too many clusters to enumerate implementations")
    impls = {
        Implementation(_tokens_from_orientation(x, _cluster_orientations(x, choice)))
        for choice in itertools.product((True, False), repeat=m)
    }
    return sorted(impls, key=Implementation.render)


def cheapest_implementation(x: str, costs: CostModel) -> Implementation:
    """Minimum-cost assignment; ties go to fewer Bob modules, then the
    lexicographically smallest rendering.

    Clusters own disjoint devices and disjoint character ranges of the
    rendering, so choosing each cluster's orientation left to right is
    exact.
    """
    check_configuration(x)
    clusters = cluster_split(x)
    chosen: list[bool] = []
    for ci, cluster in enumerate(clusters):
        options = []
        for a in (True, False):
            trial = chosen + [a] + [True] * (len(clusters) - ci - 1)
            tokens = _tokens_from_orientation(x, _cluster_orientations(x, trial))
            # devices owned by this cluster: left end of its first link,
            # right end of its last link, and its internal switch nodes
            n_links = len(cluster)
            if a:
                n_a = (n_links + 2) // 2
            else:
                n_a = (n_links + 1) // 2
            n_b = (n_links + 1) - n_a
            prefix = _rendered_prefix(tokens, cluster.stop)
            options.append((n_a * costs.alice + n_b * costs.bob, n_b, prefix, a))
        chosen.append(min(options)[3])
    return Implementation(_tokens_from_orientation(x, _cluster_orientations(x, chosen)))


def _rendered_prefix(tokens: Sequence[str], last_node: int) -> str:
    # rendering up to and including the cluster's own letter at its right end node
    return "-".join(tokens[:last_node]) + "-" + tokens[last_node][0]


@dataclass(frozen=True)
class PlanRow:
    k: int
    rate: float
    configurations: tuple[str, ...]
    configuration: str
    implementation: Implementation
    cost: float
    rate_ratio: float
    cost_ratio: float

    @property
    def n_alice(self) -> int:
        return self.implementation.n_alice

    @property
    def n_bob(self) -> int:
        return self.implementation.n_bob

    @property
    def n_total(self) -> int:
        return self.implementation.n_total

    def switch_nodes(self, net: NetworkSpec) -> list[str]:
        return [name for name, c in zip(net.trusted_nodes, self.configuration) if c == "S"]


@dataclass(frozen=True)
class PlanReport:
    network: NetworkSpec
    costs: CostModel
    rows: tuple[PlanRow, ...]
    pair_rates: tuple[tuple[str, float], ...] = field(default=())


def cheapest_among(configurations: Iterable[str], costs: CostModel) -> tuple[str, Implementation]:
    """Cheapest implementation over several equally fast configurations."""
    best = None
    for x in configurations:
        impl = cheapest_implementation(x, costs)
        key = (impl.cost(costs), impl.n_bob, impl.render())
        if best is None or key < best[0]:
            best = (key, x, impl)
    if best is None:
        raise ValueError("no configuration given")
    return best[1], best[2]


def plan(
    net: NetworkSpec,
    costs: CostModel,
    k_values: Iterable[int],
    locked: Iterable[str] = (),
    **overhead,
) -> PlanReport:
    """Rate/cost trade-off table: one row per switch count in ``k_values``.

    Ratios compare each row with the switch-free backbone.
    """
    locked_idx = sorted(net.node_index(name) for name in locked)
    rates = net.link_rates
    reference_rate = min(rates)
    reference_cost = cheapest_implementation("F" * (net.n_links - 1), costs).cost(costs)

    rows = []
    for k in k_values:
        rate, configs = best_configurations(rates, k, locked_idx, **overhead)
        x, impl = cheapest_among(configs, costs)
        cost = impl.cost(costs)
        rows.append(PlanRow(
            k=k,
            rate=rate,
            configurations=tuple(configs),
            configuration=x,
            implementation=impl,
            cost=cost,
            rate_ratio=rate / reference_rate,
            cost_ratio=cost / reference_cost if reference_cost else math.nan,
        ))
    pairs = tuple(zip(net.trusted_nodes, pair_rates(rates)))
    return PlanReport(network=net, costs=costs, rows=tuple(rows), pair_rates=pairs)
