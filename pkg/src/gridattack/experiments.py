"""Seeded experiment studies and their CSV outputs.

Run ``r`` uses ``seed + r`` both for placing generators and for every
algorithm RNG. Every file starts with ``#`` header lines that hold the
study name, package version and the fully resolved config, which is all
``verify`` needs to replay it.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

from . import __version__
from .attacks import (
    AttackProblem,
    attack_exhaustive_single,
    attack_lc_ga,
    attack_lc_oa,
    attack_pso_oa,
    attack_random,
    attack_top_measure,
)
from .centrality import CentralityWeights
from .grid import GridNetwork
from .ingest import assign_generators, load_network
from .pso import SwarmConfig

ALGORITHMS = ("pso-oa", "lc-ga", "lc-oa")
SINGLE_STRATEGIES = ("random", "degree", "current", "lc-oa", "oracle")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    case: str = "case118"
    case_format: str | None = None
    demand: str = "unit"
    gen_fraction: float = 0.10
    fixed_generators: bool = False
    alpha: float = 0.2
    beta: float = 0.2
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    m: int = 10
    iter_max: int = 30
    w0: float = 0.96
    c1: float = 0.7
    c2: float = 0.7
    h1: float = 1.0
    h2: float = 1.0
    l_pct: float = 0.5
    K: int = 1
    k_min: int = 1
    k_max: int = 10
    repetitions: int = 100
    seed: int = 0
    out_dir: str = "results"
    jobs: int = 1

    def __post_init__(self) -> None:
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigError(f"unknown algorithms {sorted(unknown)}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not 0 < self.gen_fraction <= 1:
            raise ConfigError("gen_fraction must lie in (0, 1]")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be non-negative")
        if not 0 < self.l_pct <= 1:
            raise ConfigError("l_pct must lie in (0, 1]")
        if self.K < 1 or not 1 <= self.k_min <= self.k_max:
            raise ConfigError("K must be >= 1 and 1 <= k_min <= k_max")
        if self.m < 1 or self.iter_max < 1:
            raise ConfigError("m and iter_max must be at least 1")
        if self.demand not in ("unit", "file"):
            raise ConfigError("demand must be 'unit' or 'file'")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def swarm(self, seed: int) -> SwarmConfig:
        return SwarmConfig(m=self.m, iter_max=self.iter_max, w0=self.w0, c1=self.c1, c2=self.c2, seed=seed)

    def run_seed(self, r: int) -> int:
        return self.seed + r


def _grid(cfg: ExperimentConfig, base: GridNetwork, r: int) -> GridNetwork:
    gen_seed = cfg.seed if cfg.fixed_generators else cfg.run_seed(r)
    return assign_generators(base, cfg.gen_fraction, gen_seed)


def _map(cfg: ExperimentConfig, fn: Callable, items: list) -> list:
    if cfg.jobs == 1 or len(items) < 2:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        futures = [pool.submit(fn, *it) for it in items]
        return [f.result() for f in futures]


def _base_network(cfg: ExperimentConfig) -> GridNetwork:
    return load_network(cfg.case, cfg.case_format, cfg.demand)


# -- single-link study ------------------------------------------------------

def _single_run(cfg: ExperimentConfig, base: GridNetwork, r: int) -> dict:
    seed = cfg.run_seed(r)
    prob = AttackProblem.build(_grid(cfg, base, r), 1, cfg.alpha, cfg.beta, seed)
    oracle = attack_exhaustive_single(prob)
    lc_oa, _ = attack_lc_oa(prob, cfg.swarm(seed))
    return {
        "run": r,
        "seed": seed,
        "random": attack_random(prob).damage,
        "degree": attack_top_measure(prob, "degree").damage,
        "current": attack_top_measure(prob, "current").damage,
        "lc-oa": lc_oa.damage,
        "oracle": oracle.damage,
    }


def run_single_link_study(cfg: ExperimentConfig) -> list[dict]:
    """Per-run damage of the five single-link strategies, then a means row."""
    base = _base_network(cfg)
    rows = _map(cfg, _single_run, [(cfg, base, r) for r in range(cfg.repetitions)])
    means = {"run": "mean", "seed": ""}
    for s in SINGLE_STRATEGIES:
        means[s] = statistics.fmean(row[s] for row in rows)
    return rows + [means]


# -- multi-link study -------------------------------------------------------

def _multi_run(cfg: ExperimentConfig, base: GridNetwork, r: int) -> list[dict]:
    seed = cfg.run_seed(r)
    root = AttackProblem.build(_grid(cfg, base, r), 1, cfg.alpha, cfg.beta, seed)
    rows = []
    for K in range(cfg.k_min, min(cfg.k_max, root.M) + 1):
        prob = root.with_budget(K)
        for alg in cfg.algorithms:
            if alg == "pso-oa":
                plan = attack_pso_oa(prob, cfg.swarm(seed))
            elif alg == "lc-ga":
                plan = attack_lc_ga(prob, CentralityWeights(cfg.h1, cfg.h2), cfg.l_pct)
            else:
                plan, _ = attack_lc_oa(prob, cfg.swarm(seed))
            rows.append(
                {
                    "K": K,
                    "algorithm": alg,
                    "seed": seed,
                    "damage": plan.damage,
                    "evaluations": plan.evaluations,
                    "links": " ".join(str(k) for k in plan.links),
                }
            )
    return rows


def run_multi_link_study(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Damage versus K for each algorithm; returns (per-run rows, mean rows)."""
    base = _base_network(cfg)
    nested = _map(cfg, _multi_run, [(cfg, base, r) for r in range(cfg.repetitions)])
    rows = sorted((row for rs in nested for row in rs), key=lambda d: (d["K"], d["algorithm"], d["seed"]))
    groups: dict[tuple[int, str], list[float]] = {}
    for row in rows:
        groups.setdefault((row["K"], row["algorithm"]), []).append(row["damage"])
    means = [{"K": K, "algorithm": alg, "mean_damage": statistics.fmean(v), "runs": len(v)} for (K, alg), v in groups.items()]
    return rows, means


# -- convergence study ------------------------------------------------------

def _converge_run(cfg: ExperimentConfig, base: GridNetwork, r: int) -> list[dict]:
    seed = cfg.run_seed(r)
    prob = AttackProblem.build(_grid(cfg, base, r), cfg.K, cfg.alpha, cfg.beta, seed)
    lc_oa, _ = attack_lc_oa(prob, cfg.swarm(seed))
    pso = attack_pso_oa(prob, cfg.swarm(seed))
    rows = []
    for alg, plan in (("lc-oa", lc_oa), ("pso-oa", pso)):
        for it, val in enumerate(plan.trace, 1):
            rows.append({"algorithm": alg, "seed": seed, "iteration": it, "g_best": val})
    return rows


def run_convergence_study(cfg: ExperimentConfig) -> list[dict]:
    """Per-iteration best damage of LC-OA and PSO-OA at a fixed K."""
    base = _base_network(cfg)
    nested = _map(cfg, _converge_run, [(cfg, base, r) for r in range(cfg.repetitions)])
    return sorted((row for rs in nested for row in rs), key=lambda d: (d["algorithm"], d["seed"], d["iteration"]))


# -- output -----------------------------------------------------------------

def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def header_lines(study: str, cfg: ExperimentConfig) -> list[str]:
    return [
        f"# study: {study}",
        f"# gridattack {__version__}",
        "# config: " + json.dumps(cfg.to_dict(), sort_keys=True),
    ]


def render_csv(study: str, cfg: ExperimentConfig, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write("\n".join(header_lines(study, cfg)) + "\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
    return buf.getvalue()


def read_header(path: str | Path) -> tuple[str, ExperimentConfig]:
    study, config = None, None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# study: "):
                study = line[len("# study: "):].strip()
            elif line.startswith("# config: "):
                config = json.loads(line[len("# config: "):])
    if study is None or config is None:
        raise ConfigError(f"{path} has no study/config header")
    return study, ExperimentConfig.from_dict(config)


OUTPUT_FILES = {
    "single": ("single_link.csv",),
    "multi": ("multi_link.csv", "multi_link_means.csv"),
    "converge": ("convergence.csv",),
}


def render_study(study: str, cfg: ExperimentConfig) -> dict[str, str]:
    """Run ``study`` and return ``{file name: contents}``."""
    if study == "single":
        return {"single_link.csv": render_csv(study, cfg, run_single_link_study(cfg))}
    if study == "multi":
        rows, means = run_multi_link_study(cfg)
        return {
            "multi_link.csv": render_csv(study, cfg, rows),
            "multi_link_means.csv": render_csv(study, cfg, means),
        }
    if study == "converge":
        return {"convergence.csv": render_csv(study, cfg, run_convergence_study(cfg))}
    raise ConfigError(f"unknown study {study!r}")


def write_study(study: str, cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in render_study(study, cfg).items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def verify_file(path: str | Path) -> bool:
    """Replay the study recorded in ``path`` and compare its bytes."""
    path = Path(path)
    study, cfg = read_header(path)
    fresh = render_study(study, cfg)
    if path.name not in fresh:
        raise ConfigError(f"{path.name} is not an output of study {study!r}")
    return fresh[path.name] == path.read_text(encoding="utf-8")
