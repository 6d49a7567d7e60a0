#!/usr/bin/env python3
"""Train the strategy agent on the default 57-lap scenario.

Writes the best-evaluation checkpoint to checkpoints/default_57lap.pt and
the learning curve to artifacts/learning_curve.json. Training runs on CPU
in well under the once-per-artifact budget; re-run only when the race model
or the agent changes.
"""

import argparse
import json
import time
from pathlib import Path

from racestrat.env import ScenarioSpec
from racestrat.sac import TrainConfig, train
from racestrat.sac.train import evaluate, save_checkpoint

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=300_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--checkpoint", default=str(ROOT / "checkpoints" / "default_57lap.pt"))
    parser.add_argument("--curve", default=str(ROOT / "artifacts" / "learning_curve.json"))
    args = parser.parse_args()

    spec = ScenarioSpec()
    cfg = TrainConfig(steps=args.steps, seed=args.seed)
    t0 = time.time()

    def log_fn(step, metrics):
        print(
            f"[{time.time() - t0:7.0f}s] step {step}: eval race time {metrics.t_race:.3f} s "
            f"stops {metrics.stops} forced {metrics.forced_compound_count}",
            flush=True,
        )

    agent, curve = train(spec, cfg, checkpoint_path=args.checkpoint, log_fn=log_fn)
    save_checkpoint(agent, args.checkpoint, spec, extra={"final": True})

    log, metrics = evaluate(agent, spec)
    Path(args.curve).parent.mkdir(parents=True, exist_ok=True)
    Path(args.curve).write_text(json.dumps({
        "steps": curve.steps,
        "eval_t_race": curve.eval_t_race,
        "final_t_race": metrics.t_race,
        "final_stops": metrics.stops,
        "seed": args.seed,
        "train_steps": args.steps,
    }, indent=2) + "\n")
    print(f"final: race time {metrics.t_race:.3f} s stops {metrics.stops}")


if __name__ == "__main__":
    main()
