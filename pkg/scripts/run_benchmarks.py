#!/usr/bin/env python3
"""Run the nominal and disturbance benchmarks and emit all report files."""

import argparse
from pathlib import Path

from racestrat.bench import emit_report, run_disturbance, run_nominal
from racestrat.config import RaceConfig

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--checkpoint", default=str(ROOT / "checkpoints" / "default_57lap.pt"))
    parser.add_argument("--out-dir", default=str(ROOT / "artifacts" / "bench"))
    parser.add_argument("--disturbance-lap", type=int, default=22)
    parser.add_argument("--tw-delta", type=float, default=0.2)
    args = parser.parse_args()

    cfg = RaceConfig()
    nominal = run_nominal(cfg, args.checkpoint)
    for p in emit_report(nominal, args.out_dir):
        print(p)
    for arm in nominal.arms:
        print(f"  nominal/{arm.name}: {arm.strategy} {arm.t_race:.3f} s (dT {arm.delta_t:+.3f})")

    disturbance = run_disturbance(cfg, args.checkpoint, (args.disturbance_lap, args.tw_delta))
    for p in emit_report(disturbance, args.out_dir):
        print(p)
    for arm in disturbance.arms:
        print(f"  disturbance/{arm.name}: {arm.strategy} {arm.t_race:.3f} s (dT {arm.delta_t:+.3f})")


if __name__ == "__main__":
    main()
