"""Two-pool, sixteen-candidate election plus replay of the published two-pool bulletin.

The shipped config uses M=13/12, which costs ~2^13 verification gates per
slot; ``--coin-count`` scales that down for a quick run.

    python scripts/scenario2.py --coin-count 6 --workers 2
"""
import argparse
import dataclasses
from pathlib import Path

from qvote.engine import run_pools
from qvote.files import load_config, replay_fixture

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "scenario2.json"))
    ap.add_argument("--coin-count", type=int, default=None, help="override M for every pool")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    configs = load_config(args.config)
    if args.coin_count is not None:
        configs = [dataclasses.replace(c, coin_count=args.coin_count) for c in configs]
    res = run_pools(configs, max_workers=args.workers)
    for r in res.pools:
        s = r.stats
        print(f"{r.config.name}: votes by slot {r.tally.election_vector.tolist()} "
              f"({s.verifications} verifications, {s.rejections} rejections, "
              f"{s.threshold_restarts} restarts, {s.wall_seconds:.1f}s)")
    print(f"merged tally {res.merged.tolist()}")

    replay = replay_fixture(ROOT / "fixtures" / "two_pools_c16.json")
    print("\npublished bulletin replay:")
    for p in replay.pools:
        print(f"  {p.name}: matrices decode to {p.votes.tolist()}, printed E vectors decode to "
              f"{None if p.published_e_votes is None else p.published_e_votes.tolist()}")
    for d in replay.discrepancies:
        print(f"  discrepancy: {d}")


if __name__ == "__main__":
    main()
