"""Per-PE-round failure-rate traces for a single-pool election under white noise.

Runs the config for several seeds, writes events/summary CSVs per seed and
prints the pooled rejection rate per (k, p) block next to the p/2 prediction.

    python scripts/failure_trace.py configs/scenario1_scaled.json --seeds 5 --out out/trace
"""
import argparse
import dataclasses
from pathlib import Path

import numpy as np

from qvote.engine import run_election
from qvote.errors import ElectionAbort
from qvote.files import emit_stats, load_config
from qvote.quantum_sim import NoiseKind


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out", default="out/failure_trace")
    args = ap.parse_args()

    base = load_config(args.config)
    if isinstance(base, list):
        base = base[0]
    predicted = base.noise.weight / 2 if base.noise.kind is NoiseKind.WHITE else 0.0
    print(f"{base.name}: N={base.n_agents} Pi={base.pe_rounds} M={base.coin_count} "
          f"threshold={base.failure_threshold} predicted rejection={predicted:.4f}")

    pooled = {}
    for seed in range(args.seeds):
        cfg = dataclasses.replace(base, seed=seed)
        out = Path(args.out) / f"seed{seed}"
        try:
            res = run_election(cfg)
            stats = res.stats
            status = f"tally {res.tally.counts.tolist()}"
        except ElectionAbort as exc:
            stats = exc.stats
            status = f"aborted ({exc.reason})"
        emit_stats(stats, out)
        print(f"seed {seed}: {status}, {stats.verifications} verifications, "
              f"{stats.threshold_restarts} threshold restarts, {stats.vote_aborts} vote aborts")
        for row in stats.summary():
            acc = pooled.setdefault((row["k"], row["p"]), [0, 0])
            acc[0] += row["rejections"]
            acc[1] += row["verifications"]

    print(f"\n{'k':>3} {'p':>3} {'verifs':>8} {'pooled delta':>13} {'3 sigma':>8}")
    for (k, p), (r, t) in sorted(pooled.items()):
        sigma = np.sqrt(predicted * (1 - predicted) / t) if t else 0.0
        print(f"{k:3d} {p:3d} {t:8d} {r / max(t, 1):13.4f} {3 * sigma:8.4f}")


if __name__ == "__main__":
    main()
