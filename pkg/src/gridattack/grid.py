"""Resistive grid model and the Kirchhoff current-law flow solver.

Generator buses pin their voltage; consumer buses draw a fixed current.
For a consumer ``j`` the row reads

    sum_i Y_ji * (v_j - v_i) = -I_j

so a positive demand pulls current in from its neighbours. Generator rows
are ``1 * v_i = setpoint``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

RESIDUAL_TOL = 1e-9


class SolverError(RuntimeError):
    """Raised when a component's linear system cannot be solved."""

    def __init__(self, message: str, component: Sequence[int] = ()):
        super().__init__(message)
        self.component = tuple(int(i) for i in component)


class BusKind(enum.Enum):
    GENERATOR = "generator"
    CONSUMER = "consumer"


@dataclass(frozen=True)
class Bus:
    """A bus. ``setpoint`` is a voltage for generators, a demand for consumers."""

    id: int
    kind: BusKind
    setpoint: float
    label: str = ""

    @property
    def is_generator(self) -> bool:
        return self.kind is BusKind.GENERATOR


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    admittance: float


@dataclass(frozen=True, eq=False)
class GridNetwork:
    """Immutable grid: dense bus ids ``0..N-1`` and branch ids ``0..M-1``.

    The constructor validates the structural invariants and caches numpy
    views used by the solvers (``from_idx``, ``to_idx``, ``admittance``,
    ``is_generator``, ``setpoints``).
    """

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        n, m = len(self.buses), len(self.branches)
        if n < 2 or m < 1:
            raise ValueError(f"grid needs N >= 2 and M >= 1, got N={n}, M={m}")
        for i, bus in enumerate(self.buses):
            if bus.id != i:
                raise ValueError(f"bus at position {i} has id {bus.id}")
            if not np.isfinite(bus.setpoint):
                raise ValueError(f"bus {i} has non-finite setpoint")
            if bus.is_generator and bus.setpoint <= 0:
                raise ValueError(f"generator {i} needs a positive voltage setpoint")
            if not bus.is_generator and bus.setpoint < 0:
                raise ValueError(f"consumer {i} has negative demand")
        adj: list[list[int]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for k, br in enumerate(self.branches):
            if br.id != k:
                raise ValueError(f"branch at position {k} has id {br.id}")
            if not (0 <= br.from_bus < n and 0 <= br.to_bus < n):
                raise ValueError(f"branch {k} references a missing bus")
            if br.from_bus == br.to_bus:
                raise ValueError(f"branch {k} is a self-loop")
            if not (np.isfinite(br.admittance) and br.admittance > 0):
                raise ValueError(f"branch {k} admittance must be positive and finite")
            pair = (min(br.from_bus, br.to_bus), max(br.from_bus, br.to_bus))
            if pair in seen:
                raise ValueError(f"branch {k} duplicates bus pair {pair}")
            seen.add(pair)
            adj[br.from_bus].append(k)
            adj[br.to_bus].append(k)
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))

        def frozen(a: np.ndarray) -> np.ndarray:
            a.setflags(write=False)
            return a

        object.__setattr__(self, "from_idx", frozen(np.array([b.from_bus for b in self.branches], dtype=np.intp)))
        object.__setattr__(self, "to_idx", frozen(np.array([b.to_bus for b in self.branches], dtype=np.intp)))
        object.__setattr__(self, "admittance", frozen(np.array([b.admittance for b in self.branches], dtype=float)))
        object.__setattr__(self, "is_generator", frozen(np.array([b.is_generator for b in self.buses], dtype=bool)))
        object.__setattr__(self, "setpoints", frozen(np.array([b.setpoint for b in self.buses], dtype=float)))

    # attributes populated in __post_init__
    from_idx: np.ndarray = field(init=False, repr=False)
    to_idx: np.ndarray = field(init=False, repr=False)
    admittance: np.ndarray = field(init=False, repr=False)
    is_generator: np.ndarray = field(init=False, repr=False)
    setpoints: np.ndarray = field(init=False, repr=False)

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def generators(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.is_generator))

    @property
    def demands(self) -> np.ndarray:
        return np.where(self.is_generator, 0.0, self.setpoints)

    def degree(self, bus: int) -> int:
        return len(self.adjacency[bus])

    def branch_label(self, k: int) -> str:
        br = self.branches[k]
        a = self.buses[br.from_bus].label or str(br.from_bus)
        b = self.buses[br.to_bus].label or str(br.to_bus)
        return f"{a}-{b}"

    def with_buses(self, buses: Iterable[Bus]) -> "GridNetwork":
        return GridNetwork(tuple(buses), self.branches)

    def validate(self) -> None:
        """Full invariant check, including the presence of a generator.

        Structural checks already ran at construction; a freshly ingested
        grid has no generators until roles are assigned.
        """
        if not self.is_generator.any():
            raise ValueError("grid has no generator bus")
        counts = np.zeros(self.n_branches, dtype=int)
        for inc in self.adjacency:
            counts[list(inc)] += 1
        if not (counts == 2).all():
            raise ValueError("adjacency inconsistent with branches")


def node_mask(net: GridNetwork, nodes: Iterable[int] | np.ndarray | None) -> np.ndarray:
    """Boolean live mask over buses; ``None`` means every bus."""
    return _mask(net.n_buses, nodes)


def link_mask(net: GridNetwork, links: Iterable[int] | np.ndarray | None) -> np.ndarray:
    return _mask(net.n_branches, links)


def _mask(size: int, items) -> np.ndarray:
    if items is None:
        return np.ones(size, dtype=bool)
    if isinstance(items, np.ndarray) and items.dtype == bool:
        if items.shape != (size,):
            raise ValueError(f"mask has shape {items.shape}, expected ({size},)")
        return items.copy()
    mask = np.zeros(size, dtype=bool)
    idx = np.fromiter((int(i) for i in items), dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise ValueError(f"id out of range 0..{size - 1}")
    mask[idx] = True
    return mask


def _checked_links(net: GridNetwork, live_n: np.ndarray, live_l: np.ndarray) -> np.ndarray:
    bad = live_l & ~(live_n[net.from_idx] & live_n[net.to_idx])
    if bad.any():
        raise ValueError(f"live links {np.flatnonzero(bad).tolist()} touch dead nodes")
    return live_l


def laplacian(net: GridNetwork, live_links: np.ndarray) -> np.ndarray:
    """Dense weighted Laplacian over all buses using only ``live_links``."""
    n = net.n_buses
    f, t, y = net.from_idx[live_links], net.to_idx[live_links], net.admittance[live_links]
    lap = np.zeros((n, n))
    np.add.at(lap, (f, f), y)
    np.add.at(lap, (t, t), y)
    np.add.at(lap, (f, t), -y)
    np.add.at(lap, (t, f), -y)
    return lap


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Assembled nodal equations over the live buses (rows ordered by bus id)."""

    matrix: np.ndarray
    rhs: np.ndarray
    nodes: tuple[int, ...]
    isolated: tuple[int, ...]


def build_system(net: GridNetwork, live_nodes=None, live_links=None) -> LinearSystem:
    live_n = node_mask(net, live_nodes)
    if not live_n.any():
        raise ValueError("no live nodes")
    live_l = _checked_links(net, live_n, link_mask(net, live_links))
    nodes = np.flatnonzero(live_n)
    lap = laplacian(net, live_l)[np.ix_(nodes, nodes)]
    gen = net.is_generator[nodes]
    matrix = lap.copy()
    matrix[gen, :] = 0.0
    matrix[gen, np.flatnonzero(gen)] = 1.0
    rhs = np.where(gen, net.setpoints[nodes], -net.setpoints[nodes])
    incident = np.bincount(
        np.concatenate([net.from_idx[live_l], net.to_idx[live_l]]), minlength=net.n_buses
    )
    isolated = tuple(int(i) for i in nodes if not net.is_generator[i] and incident[i] == 0)
    return LinearSystem(matrix, rhs, tuple(int(i) for i in nodes), isolated)


@dataclass(frozen=True, eq=False)
class FlowState:
    """One solved operating point. Dead entries hold NaN and are never aggregated."""

    voltages: np.ndarray
    currents: np.ndarray
    node_loads: np.ndarray
    live_nodes: np.ndarray
    live_links: np.ndarray

    def __post_init__(self) -> None:
        for a in (self.voltages, self.currents, self.node_loads, self.live_nodes, self.live_links):
            a.setflags(write=False)


def component_labels(net: GridNetwork, live_links: np.ndarray) -> np.ndarray:
    """Label every bus with the smallest bus id of its component over ``live_links``."""
    f, t = net.from_idx[live_links], net.to_idx[live_links]
    labels = np.arange(net.n_buses)
    while True:
        low = np.minimum(labels[f], labels[t])
        new = labels.copy()
        np.minimum.at(new, f, low)
        np.minimum.at(new, t, low)
        new = new[new]
        if np.array_equal(new, labels):
            return labels
        labels = new


def components(net: GridNetwork, live_nodes: np.ndarray, live_links: np.ndarray) -> list[np.ndarray]:
    """Connected components of the live subgraph, each sorted, ordered by smallest id."""
    nodes = np.flatnonzero(live_nodes)
    labels = component_labels(net, live_links)[nodes]
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(nodes[order], cuts)


def solve_flow(net: GridNetwork, live_nodes=None, live_links=None, comps: list[np.ndarray] | None = None) -> FlowState:
    """Solve voltages, link currents and node loads component by component.

    Every live component must contain a generator. Consumer voltages come
    from a Cholesky solve of the consumer block of the Laplacian with the
    generator voltages moved to the right-hand side. ``comps`` may pass in
    precomputed components of the live subgraph.
    """
    live_n = node_mask(net, live_nodes)
    live_l = _checked_links(net, live_n, link_mask(net, live_links))
    lap = laplacian(net, live_l)
    volts = np.full(net.n_buses, np.nan)
    demand = net.demands
    for comp in comps if comps is not None else components(net, live_n, live_l):
        gens = comp[net.is_generator[comp]]
        cons = comp[~net.is_generator[comp]]
        if gens.size == 0:
            raise SolverError(f"component {comp.tolist()} has no generator", comp)
        volts[gens] = net.setpoints[gens]
        if cons.size == 0:
            continue
        a = lap[np.ix_(cons, cons)]
        b = -demand[cons] - lap[np.ix_(cons, gens)] @ volts[gens]
        try:
            factor = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
            x = scipy.linalg.cho_solve(factor, b)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"singular system on component {comp.tolist()}: {exc}", comp) from exc
        resid = np.abs(a @ x - b).max()
        scale = max(1.0, np.abs(b).max(), np.abs(a).max() * np.abs(x).max())
        if not np.isfinite(resid) or resid > RESIDUAL_TOL * scale:
            raise SolverError(
                f"residual {resid:.3e} exceeds tolerance on component {comp.tolist()}", comp
            )
        volts[cons] = x

    currents = np.full(net.n_branches, np.nan)
    currents[live_l] = (volts[net.from_idx[live_l]] - volts[net.to_idx[live_l]]) * net.admittance[live_l]
    loads = np.full(net.n_buses, np.nan)
    loads[live_n] = np.abs(volts[live_n]) * _outflow(net, currents, live_l)[live_n]
    return FlowState(volts, currents, loads, live_n, live_l)


def _outflow(net: GridNetwork, currents: np.ndarray, live_l: np.ndarray) -> np.ndarray:
    """Gross current leaving each bus through its live links."""
    c = currents[live_l]
    out = np.zeros(net.n_buses)
    np.add.at(out, net.from_idx[live_l], np.maximum(c, 0.0))
    np.add.at(out, net.to_idx[live_l], np.maximum(-c, 0.0))
    return out


def link_current(flow: FlowState, branch: Branch | int) -> float:
    """Signed current on a live branch, positive from ``from_bus`` to ``to_bus``.

    With a :class:`Branch` the value is recomputed as ``(v_from - v_to) * Y``.
    """
    if isinstance(branch, Branch):
        if not flow.live_links[branch.id]:
            raise ValueError(f"branch {branch.id} is not live")
        v = flow.voltages
        return float((v[branch.from_bus] - v[branch.to_bus]) * branch.admittance)
    if not flow.live_links[branch]:
        raise ValueError(f"branch {branch} is not live")
    return float(flow.currents[branch])


def node_load(flow: FlowState, node: Bus | int) -> float:
    """Load of a live node: ``|v_i|`` times the gross current flowing out of it."""
    i = node.id if isinstance(node, Bus) else int(node)
    if not flow.live_nodes[i]:
        raise ValueError(f"bus {i} is not live")
    return float(flow.node_loads[i])


def current_imbalance(net: GridNetwork, flow: FlowState) -> np.ndarray:
    """Per-consumer ``inflow - demand``; zero at every live consumer for a valid flow."""
    c = np.where(flow.live_links, flow.currents, 0.0)
    inflow = np.zeros(net.n_buses)
    np.add.at(inflow, net.to_idx, c)
    np.add.at(inflow, net.from_idx, -c)
    out = inflow - net.demands
    out[net.is_generator | ~flow.live_nodes] = 0.0
    return out
