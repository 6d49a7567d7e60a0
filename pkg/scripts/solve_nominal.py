#!/usr/bin/env python3
"""Solve the default 57-lap race to proven optimality and store the solution.

The stored JSON is a convenience artifact for the benchmark scripts; the
acceptance suite re-solves live (the solve takes about a second) and also
re-simulates any stored inputs through the current model, so a stale file
cannot silently pass.
"""

import json
from pathlib import Path

from racestrat.config import RaceConfig
from racestrat.minlp import BnbOptions, branch_and_bound, build_ocp

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    cfg = RaceConfig()
    sol = branch_and_bound(build_ocp(cfg), BnbOptions(gap=0.0))
    out = ROOT / "artifacts" / "nominal_solution.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = sol.to_dict()
    payload["config_hash"] = cfg.content_hash()
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"{sol.strategy} race time {sol.t_race:.4f} s gap {sol.gap:.2e} "
          f"nodes {sol.n_nodes} wall {sol.wall_time:.1f} s -> {out}")


if __name__ == "__main__":
    main()
