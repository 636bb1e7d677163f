"""Command line entry point: ``qvote run | replay | plan``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import files
from .engine import ElectionConfig, run_election
from .errors import (AnonAbort, ConfigError, ContractError, ElectionAbort, InfeasibleError,
                     RetryCapAbort, ThresholdAbort)
from .params import plan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_THRESHOLD = 3
EXIT_ANON = 4
EXIT_RETRY_CAP = 5

_ABORT_CODES = {ThresholdAbort: EXIT_THRESHOLD, AnonAbort: EXIT_ANON, RetryCapAbort: EXIT_RETRY_CAP}

log = logging.getLogger("qvote")


def cmd_run(args) -> int:
    configs = files.load_config(args.config)
    if isinstance(configs, ElectionConfig):
        configs = [configs]
    if args.seed is not None:
        configs = [dataclasses.replace(c, seed=args.seed + i) for i, c in enumerate(configs)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files.write_json(out / "config.json", files.dump_config(configs))

    results, all_stats, code = [], [], EXIT_OK
    abort_info = None
    for cfg in configs:
        try:
            res = run_election(cfg)
        except ElectionAbort as exc:
            log.error("pool %s aborted: %s", cfg.name, exc)
            if exc.stats is not None:
                all_stats.append(exc.stats)
            code = _ABORT_CODES.get(type(exc), EXIT_ANON)
            abort_info = {"pool": cfg.name, "reason": exc.reason, "message": str(exc)}
            break
        results.append(res)
        all_stats.append(res.stats)
    files.emit_stats(all_stats, out)
    if abort_info is not None:
        files.write_json(out / "abort.json", abort_info)
        return code

    files.write_json(out / "bulletin.json", {
        "pools": [{"pool": r.config.name, **r.board.to_dict()} for r in results]})
    merged = np.sum([r.tally.counts for r in results], axis=0)
    files.write_json(out / "tally.json", {
        "pools": [{"pool": r.config.name, **r.tally.to_dict()} for r in results],
        "merged": merged.tolist(),
    })
    for r in results:
        print(f"{r.config.name}: votes by slot {r.tally.election_vector.tolist()} "
              f"tally {r.tally.counts.tolist()} ({r.stats.verifications} verifications, "
              f"{r.stats.rejections} rejections)")
    if len(results) > 1:
        print(f"merged tally {merged.tolist()}")
    return EXIT_OK


def cmd_replay(args) -> int:
    replay = files.replay_fixture(args.fixture)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files.write_json(out / "replay.json", replay.to_dict())
    for p in replay.pools:
        print(f"{p.name}: votes {p.votes.tolist()} tally {p.counts.tolist()}")
    for d in replay.discrepancies:
        print(f"discrepancy: {d}")
    return EXIT_OK


def cmd_plan(args) -> int:
    result = plan(args.delta, args.agents, args.confidence, args.zeta,
                  n_candidates=args.candidates, epsilon=args.epsilon)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        files.write_json(out / "plan.json", result.to_dict())
    print(f"epsilon={result.epsilon:.3f} M={result.coin_count} Pi={result.pe_rounds} "
          f"confidence={result.confidence:.4f} success={result.success:.4f} zeta={result.zeta:.4f}")
    print(result.table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qvote", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate an election from a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None,
                     help="override the seed; pool i gets seed + i")
    run.add_argument("--out", required=True)
    run.set_defaults(func=cmd_run)

    replay = sub.add_parser("replay", help="recompute tallies from a published bulletin fixture")
    replay.add_argument("fixture")
    replay.add_argument("--out", required=True)
    replay.set_defaults(func=cmd_replay)

    p = sub.add_parser("plan", help="choose security parameters")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--confidence", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--candidates", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=None, help="fix epsilon instead of scanning")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ContractError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
