"""Command line entry point: ``gridattack {single,multi,converge,verify,score,attack}``.

Exit codes: 0 success, 1 config error, 2 case parse error, 3 solver failure,
4 `verify` found a mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .attacks import (
    AttackProblem,
    attack_exhaustive,
    attack_lc_ga,
    attack_lc_oa,
    attack_pso_oa,
    attack_random,
    attack_top_measure,
)
from .cascade import ConfigurationError, simulate_cascade
from .centrality import CentralityWeights, score_links, scores_to_csv
from .experiments import ConfigError, ExperimentConfig, verify_file, write_study
from .grid import SolverError
from .ingest import ParseError, assign_generators, load_network

log = logging.getLogger("gridattack")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_SOLVER, EXIT_MISMATCH = 0, 1, 2, 3, 4

# flag -> (config key, type)
_FLAGS = {
    "--case": ("case", str),
    "--format": ("case_format", str),
    "--demand": ("demand", str),
    "--gen-fraction": ("gen_fraction", float),
    "--alpha": ("alpha", float),
    "--beta": ("beta", float),
    "--m": ("m", int),
    "--iter-max": ("iter_max", int),
    "--w0": ("w0", float),
    "--c1": ("c1", float),
    "--c2": ("c2", float),
    "--h1": ("h1", float),
    "--h2": ("h2", float),
    "--l-pct": ("l_pct", float),
    "-K": ("K", int),
    "--k-min": ("k_min", int),
    "--k-max": ("k_max", int),
    "--repetitions": ("repetitions", int),
    "--seed": ("seed", int),
    "--out-dir": ("out_dir", str),
    "--jobs": ("jobs", int),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with config keys; flags override it")
    for flag, (dest, typ) in _FLAGS.items():
        p.add_argument(flag, dest=dest, type=typ, default=argparse.SUPPRESS)
    p.add_argument("--fixed-generators", dest="fixed_generators", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--algorithms", dest="algorithms", nargs="+", default=argparse.SUPPRESS)


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    keys = {dest for dest, _ in _FLAGS.values()} | {"fixed_generators", "algorithms"}
    data.update({k: v for k, v in vars(args).items() if k in keys})
    return ExperimentConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridattack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("single", "single-link study: random / degree / current / LC-OA / oracle"),
        ("multi", "damage versus K for PSO-OA, LC-GA and LC-OA"),
        ("converge", "per-iteration best damage of LC-OA and PSO-OA"),
        ("score", "dump the link centrality table as CSV"),
        ("attack", "run one attack algorithm and print the plan as JSON"),
    ):
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        if name == "score":
            p.add_argument("-o", "--output", help="write CSV here instead of stdout")
        if name == "attack":
            p.add_argument(
                "--algorithm",
                choices=["random", "degree", "current", "exhaustive", "pso-oa", "lc-ga", "lc-oa"],
                default="lc-oa",
            )
            p.add_argument("--report", action="store_true", help="include the full cascade report")
    p = sub.add_parser("verify", help="replay output files and compare them byte for byte")
    p.add_argument("files", nargs="+")
    return parser


def _one_grid(cfg: ExperimentConfig):
    return assign_generators(load_network(cfg.case, cfg.case_format, cfg.demand), cfg.gen_fraction, cfg.seed)


def _cmd_score(cfg: ExperimentConfig, args) -> int:
    prob = AttackProblem.build(_one_grid(cfg), 1, cfg.alpha, cfg.beta, cfg.seed)
    text = scores_to_csv(score_links(prob.net, prob.cap.flow, CentralityWeights(cfg.h1, cfg.h2)), prob.net)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_attack(cfg: ExperimentConfig, args) -> int:
    prob = AttackProblem.build(_one_grid(cfg), cfg.K, cfg.alpha, cfg.beta, cfg.seed)
    alg = args.algorithm
    if alg == "random":
        plan = attack_random(prob)
    elif alg in ("degree", "current"):
        plan = attack_top_measure(prob, alg)
    elif alg == "exhaustive":
        plan = attack_exhaustive(prob)
    elif alg == "pso-oa":
        plan = attack_pso_oa(prob, cfg.swarm(cfg.seed))
    elif alg == "lc-ga":
        plan = attack_lc_ga(prob, CentralityWeights(cfg.h1, cfg.h2), cfg.l_pct)
    else:
        plan, _ = attack_lc_oa(prob, cfg.swarm(cfg.seed))
    out = plan.to_dict(prob.net)
    if args.report:
        out["cascade"] = simulate_cascade(prob.net, prob.cap, plan.links).to_dict()
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            ok = True
            for f in args.files:
                same = verify_file(f)
                print(f"{'OK  ' if same else 'DIFF'} {f}")
                ok &= same
            return EXIT_OK if ok else EXIT_MISMATCH
        cfg = _resolve_config(args)
        if args.command == "score":
            return _cmd_score(cfg, args)
        if args.command == "attack":
            return _cmd_attack(cfg, args)
        for path in write_study(args.command, cfg):
            print(path)
        return EXIT_OK
    except (ParseError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except (ConfigError, ConfigurationError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
