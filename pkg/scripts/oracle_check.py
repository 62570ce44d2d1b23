"""Optimizer against exhaustive search on K=2, N=1 draws.

    python3 scripts/oracle_check.py --seeds 10 --power 20 --phases 16
"""
import argparse

from starjam.channels import generate_channels
from starjam.config import SystemConfig
from starjam.optimize import optimize
from starjam.oracle import GridSpec, brute_force_best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--power", type=float, default=20.0, help="dBm")
    ap.add_argument("--phases", type=int, default=16)
    ap.add_argument("--scheme", default="star-jam")
    a = ap.parse_args()
    cfg = SystemConfig(K=2, N=1).with_power_dbm(a.power)
    wins = 0
    print("seed  optimizer  oracle  ratio  modes(opt)  modes(oracle)")
    for seed in range(a.seeds):
        ch = generate_channels(cfg, seed)
        rec = optimize(ch, cfg, a.scheme)
        ref = brute_force_best(ch, cfg, GridSpec(phase_grid=a.phases), a.scheme)
        ratio = rec.sum_rate / ref.sum_rate if ref.sum_rate > 0 else float("nan")
        wins += ratio >= 0.95
        print(f"{seed:4d} {rec.sum_rate:10.4f} {ref.sum_rate:7.4f} {ratio:6.3f}  "
              f"{rec.state.counts() if rec.state else '-'}  {ref.state.counts() if ref.state else '-'}")
    print(f"{wins}/{a.seeds} within 95% of the exhaustive optimum")


if __name__ == "__main__":
    main()
