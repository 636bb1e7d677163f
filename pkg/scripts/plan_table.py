"""Security-parameter sweep: planner output over a range of thresholds, and M/Pi versus epsilon.

    python scripts/plan_table.py --agents 4 --confidence 0.99 --zeta 0.01
"""
import argparse

import numpy as np

from qvote.params import evaluate, plan, success_prob


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--agents", type=int, default=4)
    ap.add_argument("--confidence", type=float, default=0.99)
    ap.add_argument("--zeta", type=float, default=0.01)
    ap.add_argument("--delta", type=float, default=0.0376, help="threshold for the epsilon sweep")
    args = ap.parse_args()

    print("cost-optimal plans")
    print(f"{'delta':>7} {'eps':>6} {'M':>3} {'Pi':>3} {'confidence':>10} {'success':>8} {'zeta':>7}")
    for delta in (0.0, 0.01, 0.02, 0.03, 0.036, 0.0376, 0.0405, 0.05):
        p = plan(delta, args.agents, args.confidence, args.zeta)
        print(f"{delta:7.4f} {p.epsilon:6.3f} {p.coin_count:3d} {p.pe_rounds:3d} "
              f"{p.confidence:10.4f} {p.success:8.4f} {p.zeta:7.4f}")

    print(f"\nfixed-epsilon sweep at delta={args.delta}")
    print(f"{'eps':>6} {'M':>3} {'Pi':>3} {'zeta':>7} {'success':>8} {'cost':>9}")
    for eps in np.round(np.arange(0.1, 1.0001, 0.05), 3):
        if eps <= 2 * args.delta:
            continue
        row = evaluate(float(eps), args.delta, args.agents, args.confidence, args.zeta)
        if row is None:
            print(f"{eps:6.3f}   privacy target unreachable")
            continue
        succ = success_prob(args.delta, row["pe_rounds"], args.agents)
        print(f"{eps:6.3f} {row['coin_count']:3d} {row['pe_rounds']:3d} {row['zeta']:7.4f} "
              f"{succ:8.4f} {row['cost']:9d}")


if __name__ == "__main__":
    main()
