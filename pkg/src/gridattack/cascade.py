"""Overload-driven cascading failures and the blackout damage metric.

Each round first drops generator-free islands, then re-solves the flow on
what is left and fails every node and link whose load strictly exceeds its
capacity, all at once. The cascade stops at the first round without an
overload.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .grid import FlowState, GridNetwork, SolverError, components, link_mask, node_mask, solve_flow

# Absolute slack on the strict overload test, so that solver round-off on
# an unchanged component never reads as an overload.
OVERLOAD_ATOL = 1e-9


class ConfigurationError(ValueError):
    """The intact grid cannot be solved (e.g. an island without a generator)."""


@dataclass(frozen=True, eq=False)
class CapacityTable:
    node_load: np.ndarray
    link_load: np.ndarray
    node_max: np.ndarray
    link_max: np.ndarray
    alpha: float
    beta: float
    flow: FlowState

    def __post_init__(self) -> None:
        for a in (self.node_load, self.link_load, self.node_max, self.link_max):
            a.setflags(write=False)


def compute_capacities(net: GridNetwork, alpha: float = 0.2, beta: float = 0.2) -> CapacityTable:
    """Original loads of the intact grid and their ``(1+alpha)``/``(1+beta)`` limits."""
    if alpha < 0 or beta < 0:
        raise ValueError("safety margins must be non-negative")
    try:
        net.validate()
        flow = solve_flow(net)
    except (SolverError, ValueError) as exc:
        raise ConfigurationError(f"intact grid is not solvable: {exc}") from exc
    node_load = flow.node_loads.copy()
    link_load = np.abs(flow.currents)
    with np.errstate(invalid="ignore", over="ignore"):
        node_max = (1.0 + alpha) * node_load
        link_max = (1.0 + beta) * link_load
    # inf * 0 would be nan; an unbounded margin means no limit at all
    node_max = np.where(np.isinf(alpha), np.inf, node_max)
    link_max = np.where(np.isinf(beta), np.inf, link_max)
    return CapacityTable(node_load, link_load, node_max, link_max, float(alpha), float(beta), flow)


def _split_by_generator(net: GridNetwork, comps: list[np.ndarray]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    alive, islands = [], []
    for comp in comps:
        (alive if net.is_generator[comp].any() else islands).append(comp)
    return alive, islands


def generator_reachability(net: GridNetwork, live_nodes=None, live_links=None) -> tuple[frozenset[int], frozenset[int]]:
    """Split the live nodes into (alive, islanded) by generator reachability."""
    live_n = node_mask(net, live_nodes)
    live_l = link_mask(net, live_links) & live_n[net.from_idx] & live_n[net.to_idx]
    alive, islands = _split_by_generator(net, components(net, live_n, live_l))
    flat = lambda cs: frozenset(int(i) for c in cs for i in c)  # noqa: E731
    return flat(alive), flat(islands)


@dataclass(frozen=True)
class CascadeRound:
    islanded_nodes: tuple[int, ...] = ()
    overloaded_nodes: tuple[int, ...] = ()
    overloaded_links: tuple[int, ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.islanded_nodes or self.overloaded_nodes or self.overloaded_links)


@dataclass(frozen=True)
class CascadeReport:
    initial_links: tuple[int, ...]
    initial_nodes: tuple[int, ...]
    rounds: tuple[CascadeRound, ...]
    failed_nodes: frozenset[int]
    failed_links: frozenset[int]
    n_nodes: int
    damage: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "damage", damage(self, self.n_nodes))

    def to_dict(self) -> dict:
        return {
            "initial_links": list(self.initial_links),
            "initial_nodes": list(self.initial_nodes),
            "rounds": [
                {
                    "islanded_nodes": list(r.islanded_nodes),
                    "overloaded_nodes": list(r.overloaded_nodes),
                    "overloaded_links": list(r.overloaded_links),
                }
                for r in self.rounds
            ],
            "failed_nodes": sorted(self.failed_nodes),
            "failed_links": sorted(self.failed_links),
            "n_nodes": self.n_nodes,
            "damage": self.damage,
        }


def damage(report: CascadeReport, n: int) -> float:
    """Fraction of the ``n`` grid nodes that failed."""
    if n <= 0:
        raise ValueError("node count must be positive")
    return len(report.failed_nodes) / n


def _ids(mask: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(mask))


def simulate_cascade(
    net: GridNetwork,
    cap: CapacityTable,
    initial_links: Iterable[int] = (),
    initial_nodes: Iterable[int] = (),
) -> CascadeReport:
    init_l = tuple(sorted(set(int(k) for k in initial_links)))
    init_n = tuple(sorted(set(int(i) for i in initial_nodes)))
    live_n = ~node_mask(net, init_n)
    live_l = ~link_mask(net, init_l)
    live_l &= live_n[net.from_idx] & live_n[net.to_idx]

    rounds: list[CascadeRound] = []
    limit = net.n_buses + net.n_branches + 1
    for step in range(1, limit + 1):
        alive, islands = _split_by_generator(net, components(net, live_n, live_l))
        isl = np.zeros(net.n_buses, dtype=bool)
        for comp in islands:
            isl[comp] = True
        live_n &= ~isl
        live_l &= live_n[net.from_idx] & live_n[net.to_idx]

        try:
            flow = solve_flow(net, live_n, live_l, alive)
        except SolverError as exc:
            raise SolverError(f"cascade round {step}: {exc}", exc.component) from exc
        with np.errstate(invalid="ignore"):
            over_n = live_n & (flow.node_loads > cap.node_max + OVERLOAD_ATOL)
            over_l = live_l & (np.abs(flow.currents) > cap.link_max + OVERLOAD_ATOL)
        rnd = CascadeRound(_ids(isl), _ids(over_n), _ids(over_l))
        if not rnd.empty:
            rounds.append(rnd)
        if not (over_n.any() or over_l.any()):
            break
        live_n &= ~over_n
        live_l &= ~over_l & live_n[net.from_idx] & live_n[net.to_idx]
    else:
        raise RuntimeError(f"cascade did not settle within {limit} rounds")

    return CascadeReport(
        initial_links=init_l,
        initial_nodes=init_n,
        rounds=tuple(rounds),
        failed_nodes=frozenset(_ids(~live_n)),
        failed_links=frozenset(_ids(~live_l)),
        n_nodes=net.n_buses,
    )
