"""K-link attack search: find K links whose removal maximises blackout damage.

Solvers:

* ``attack_random`` -- uniform baseline.
* ``attack_exhaustive_single`` / ``attack_exhaustive`` -- enumeration oracles.
* ``attack_top_measure`` -- top-K by link degree or by link current alone.
* ``attack_pso_oa`` -- binary PSO directly over K-link sets.
* ``attack_lc_ga`` -- rank by centrality, keep the top L%, pick the K with
  the largest single-link damage.
* ``attack_lc_oa`` -- PSO over the two centrality weights; the candidate is
  always the top-K links of the resulting ranking.

All damage evaluations go through :func:`evaluate_attack`, which memoises
cascade results per problem. ``AttackPlan.evaluations`` counts requested
evaluations (memo hits included); ``cascade_runs`` counts the cascades that
were actually simulated for that plan.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cascade import CapacityTable, compute_capacities, simulate_cascade
from .centrality import CentralityWeights, link_degrees, top_links
from .grid import GridNetwork
from .pso import SwarmConfig, run_continuous, run_topk_binary


@dataclass(eq=False)
class AttackProblem:
    net: GridNetwork
    cap: CapacityTable
    K: int
    seed: int = 0
    memo: dict[tuple[int, ...], float] = field(default_factory=dict, repr=False)
    cascade_runs: int = 0
    memo_hits: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.K <= self.net.n_branches:
            raise ValueError(f"K={self.K} outside 1..{self.net.n_branches}")

    @classmethod
    def build(cls, net: GridNetwork, K: int, alpha: float = 0.2, beta: float = 0.2, seed: int = 0) -> "AttackProblem":
        return cls(net, compute_capacities(net, alpha, beta), K, seed)

    def with_budget(self, K: int) -> "AttackProblem":
        """Same grid and shared memo, different K."""
        prob = AttackProblem(self.net, self.cap, K, self.seed, self.memo)
        return prob

    @property
    def M(self) -> int:
        return self.net.n_branches


@dataclass
class AttackPlan:
    links: tuple[int, ...]
    damage: float
    algorithm: str
    evaluations: int
    cascade_runs: int = 0
    memo_hits: int = 0
    trace: list[float] | None = None
    weights: CentralityWeights | None = None

    @property
    def K(self) -> int:
        return len(self.links)

    def to_dict(self, net: GridNetwork | None = None) -> dict:
        out = {
            "algorithm": self.algorithm,
            "K": self.K,
            "links": list(self.links),
            "damage": self.damage,
            "evaluations": self.evaluations,
            "cascade_runs": self.cascade_runs,
            "memo_hits": self.memo_hits,
            "trace": self.trace,
        }
        if net is not None:
            out["link_labels"] = [net.branch_label(k) for k in self.links]
        if self.weights is not None:
            out["weights"] = {"h1": self.weights.h1, "h2": self.weights.h2}
        return out


def evaluate_attack(prob: AttackProblem, links) -> float:
    """Damage of removing ``links`` from the intact grid (memoised)."""
    key = tuple(sorted(set(int(k) for k in links)))
    cached = prob.memo.get(key)
    if cached is not None:
        prob.memo_hits += 1
        return cached
    report = simulate_cascade(prob.net, prob.cap, initial_links=key)
    prob.cascade_runs += 1
    # setdefault: concurrent writers store the same deterministic value
    return prob.memo.setdefault(key, report.damage)


class _Counter:
    """Tracks evaluations made on behalf of one plan."""

    def __init__(self, prob: AttackProblem):
        self.prob = prob
        self.calls = 0
        self._runs0, self._hits0 = prob.cascade_runs, prob.memo_hits

    def __call__(self, links) -> float:
        self.calls += 1
        return evaluate_attack(self.prob, links)

    def plan(self, links, damage, algorithm, **kw) -> AttackPlan:
        return AttackPlan(
            tuple(sorted(int(k) for k in links)),
            damage,
            algorithm,
            self.calls,
            self.prob.cascade_runs - self._runs0,
            self.prob.memo_hits - self._hits0,
            **kw,
        )


def attack_random(prob: AttackProblem) -> AttackPlan:
    count = _Counter(prob)
    links = np.random.default_rng(prob.seed).choice(prob.M, prob.K, replace=False)
    return count.plan(links, count(links), "random")


def attack_exhaustive(prob: AttackProblem) -> AttackPlan:
    """Best K-set by full enumeration; ties go to the lexicographically first set."""
    count = _Counter(prob)
    best, best_val = None, -math.inf
    for combo in itertools.combinations(range(prob.M), prob.K):
        val = count(combo)
        if val > best_val:
            best, best_val = combo, val
    return count.plan(best, best_val, "exhaustive")


def attack_exhaustive_single(prob: AttackProblem) -> AttackPlan:
    if prob.K != 1:
        raise ValueError("attack_exhaustive_single needs K=1")
    return attack_exhaustive(prob)


def attack_top_measure(prob: AttackProblem, measure: str) -> AttackPlan:
    """Remove the K links ranked highest by ``"degree"`` or ``"current"`` alone."""
    weights = {"degree": CentralityWeights(1.0, 0.0), "current": CentralityWeights(0.0, 1.0)}
    if measure not in weights:
        raise ValueError(f"unknown measure {measure!r}")
    count = _Counter(prob)
    links = top_links(link_degrees(prob.net), prob.cap.link_load, weights[measure], prob.K)
    return count.plan(links, count(links), measure, weights=weights[measure])


def attack_pso_oa(prob: AttackProblem, cfg: SwarmConfig | None = None) -> AttackPlan:
    """Binary PSO over K-link sets (O(m * iter_max) evaluations)."""
    cfg = cfg or SwarmConfig(seed=prob.seed)
    count = _Counter(prob)
    res = run_topk_binary(count, prob.M, prob.K, cfg)
    return count.plan(res.best_set, res.best_value, "pso-oa", trace=list(res.trace))


def lc_ga_pool_size(M: int, l_pct: float) -> int:
    # round first so 0.1 * 30 does not become 4
    return math.ceil(round(M * l_pct, 9))


def attack_lc_ga(
    prob: AttackProblem, w: CentralityWeights | None = None, l_pct: float = 0.5
) -> AttackPlan:
    """Greedy attack restricted to the top ``l_pct`` share of the centrality ranking.

    Each pooled link is scored by its own single-link damage; the plan's
    damage is one joint evaluation of the chosen K links.
    """
    w = w or CentralityWeights(1.0, 1.0)
    if not 0 < l_pct <= 1:
        raise ValueError(f"l_pct must lie in (0, 1], got {l_pct}")
    pool = lc_ga_pool_size(prob.M, l_pct)
    if pool < prob.K:
        raise ValueError(f"pool of {pool} links is smaller than K={prob.K}")
    count = _Counter(prob)
    ranked = top_links(link_degrees(prob.net), prob.cap.link_load, w, pool)
    single = [(count((k,)), k) for k in ranked]
    chosen = [k for _, k in sorted(single, key=lambda t: (-t[0], t[1]))[: prob.K]]
    return count.plan(chosen, count(chosen), "lc-ga", weights=w)


def attack_lc_oa(prob: AttackProblem, cfg: SwarmConfig | None = None) -> tuple[AttackPlan, CentralityWeights]:
    """PSO over centrality weights in [-1, 1]^2; the candidate is the top-K ranking."""
    cfg = replace(cfg or SwarmConfig(seed=prob.seed), bounds=(-1.0, 1.0))
    count = _Counter(prob)
    degrees = link_degrees(prob.net)
    currents = prob.cap.link_load

    def objective(h: np.ndarray) -> float:
        return count(top_links(degrees, currents, CentralityWeights(float(h[0]), float(h[1])), prob.K))

    res = run_continuous(objective, 2, cfg)
    best_w = CentralityWeights(float(res.best_position[0]), float(res.best_position[1]))
    links = top_links(degrees, currents, best_w, prob.K)
    plan = count.plan(links, res.best_value, "lc-oa", trace=list(res.trace), weights=best_w)
    return plan, best_w
