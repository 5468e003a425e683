"""Link degree, link current and their weighted combination."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Branch, FlowState, GridNetwork


@dataclass(frozen=True)
class CentralityWeights:
    h1: float = 1.0  # link degree
    h2: float = 1.0  # link current

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h1) and math.isfinite(self.h2)):
            raise ValueError("centrality weights must be finite")


@dataclass(frozen=True)
class LinkScore:
    branch: int
    degree: int
    current_mag: float
    theta: float


def link_degree(net: GridNetwork, branch: Branch | int) -> int:
    """Number of other links touching either end of ``branch``."""
    br = net.branches[branch] if isinstance(branch, int) else branch
    return net.degree(br.from_bus) + net.degree(br.to_bus) - 2


def link_degrees(net: GridNetwork) -> np.ndarray:
    deg = np.array([len(a) for a in net.adjacency])
    return deg[net.from_idx] + deg[net.to_idx] - 2


def score_links(net: GridNetwork, flow: FlowState, w: CentralityWeights) -> list[LinkScore]:
    """Score every branch from the intact-grid ``flow``."""
    if flow.currents.shape != (net.n_branches,) or not flow.live_links.all():
        raise ValueError("score_links needs the intact-grid flow of this network")
    deg = link_degrees(net)
    cur = np.abs(flow.currents)
    return [
        LinkScore(k, int(deg[k]), float(cur[k]), w.h1 * float(deg[k]) + w.h2 * float(cur[k]))
        for k in range(net.n_branches)
    ]


def rank_links(scores: Sequence[LinkScore]) -> list[int]:
    """Branch ids by descending theta, ties broken by ascending id."""
    return [s.branch for s in sorted(scores, key=lambda s: (-s.theta, s.branch))]


def top_links(degrees: np.ndarray, currents: np.ndarray, w: CentralityWeights, k: int) -> tuple[int, ...]:
    """The ``k`` best-ranked branch ids, without building LinkScore records."""
    theta = w.h1 * degrees + w.h2 * currents
    order = np.lexsort((np.arange(theta.size), -theta))
    return tuple(int(i) for i in order[:k])


def scores_to_csv(scores: Sequence[LinkScore], net: GridNetwork | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["branch", "degree", "current", "theta"]
    if net is not None:
        header.insert(1, "buses")
    writer.writerow(header)
    for s in scores:
        row = [s.branch, s.degree, repr(s.current_mag), repr(s.theta)]
        if net is not None:
            row.insert(1, net.branch_label(s.branch))
        writer.writerow(row)
    return buf.getvalue()
