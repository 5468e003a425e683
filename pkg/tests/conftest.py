from __future__ import annotations

import numpy as np
import pytest

from gridattack.grid import Branch, Bus, BusKind, GridNetwork


def make_net(kinds, edges) -> GridNetwork:
    """``kinds``: ``"G"`` (voltage 1.0), ``("G", v)``, or a consumer demand."""
    buses = []
    for i, k in enumerate(kinds):
        if k == "G":
            buses.append(Bus(i, BusKind.GENERATOR, 1.0))
        elif isinstance(k, tuple):
            buses.append(Bus(i, BusKind.GENERATOR, float(k[1])))
        else:
            buses.append(Bus(i, BusKind.CONSUMER, float(k)))
    return GridNetwork(tuple(buses), tuple(Branch(j, a, b, float(y)) for j, (a, b, y) in enumerate(edges)))


def random_grid(rng: np.random.Generator, n: int, extra: int = 3, y_range=(0.1, 10.0), d_range=(0.0, 2.0), n_gen=None) -> GridNetwork:
    """Random connected grid: a random spanning tree plus up to ``extra`` chords."""
    pairs: dict[tuple[int, int], float] = {}
    for i in range(1, n):
        j = int(rng.integers(0, i))
        pairs[(j, i)] = float(rng.uniform(*y_range))
    for _ in range(extra):
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        pairs.setdefault((a, b), float(rng.uniform(*y_range)))
    n_gen = n_gen if n_gen is not None else int(rng.integers(1, max(2, n // 3) + 1))
    gens = set(rng.choice(n, n_gen, replace=False).tolist())
    kinds = ["G" if i in gens else float(rng.uniform(*d_range)) for i in range(n)]
    return make_net(kinds, [(a, b, y) for (a, b), y in pairs.items()])


@pytest.fixture
def two_bus() -> GridNetwork:
    return make_net(["G", 1.0], [(0, 1, 1.0)])


@pytest.fixture
def golden6() -> GridNetwork:
    """Two generators feeding hub 3 over two paths, with tail node 4.

    links: 0: 0-1 (Y=2), 1: 1-3 (Y=1), 2: 5-2 (Y=8), 3: 2-3 (Y=4), 4: 3-4 (Y=4)
    demands: bus 1: 0, buses 2, 3, 4: 1
    """
    return make_net(["G", 0.0, 1.0, 1.0, 1.0, "G"], [(0, 1, 2), (1, 3, 1), (5, 2, 8), (2, 3, 4), (3, 4, 4)])


@pytest.fixture
def dip6() -> GridNetwork:
    """Grid where the two individually worst links hurt less together than alone."""
    kinds = [1.0, "G", 1.0, 1.0, 1.0, "G"]
    edges = [(0, 1, 2), (1, 2, 4), (1, 3, 2), (2, 4, 4), (0, 5, 2), (2, 5, 4), (1, 5, 4)]
    return make_net(kinds, edges)
