"""Command-line entry points: optimize, train, eval, bench, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import RaceConfig


def _load_config(path: str | None) -> RaceConfig:
    return RaceConfig.from_json(Path(path)) if path else RaceConfig()


def _load_spec(path: str | None):
    from .env import ScenarioSpec

    if path is None:
        return ScenarioSpec()
    return ScenarioSpec.from_dict(json.loads(Path(path).read_text()))


def cmd_optimize(args) -> int:
    from .minlp import BnbOptions, branch_and_bound, build_ocp
    from .service import state_from_wire

    cfg = _load_config(args.config)
    init = None
    if args.init_state:
        init = state_from_wire(json.loads(Path(args.init_state).read_text()))
    problem = build_ocp(cfg, init_state=init, start_lap=args.start_lap)
    if args.max_stops is not None:
        problem.lims[0] = float(args.max_stops)
    opts = BnbOptions(gap=args.gap, max_nodes=args.nodes, deterministic=args.deterministic)
    sol = branch_and_bound(problem, opts)
    payload = sol.to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(
        f"strategy {sol.strategy} race time {sol.t_race:.3f} s "
        f"gap {sol.gap:.4f} s nodes {sol.n_nodes} wall {sol.wall_time:.1f} s",
        file=sys.stderr,
    )
    return 0


def cmd_train(args) -> int:
    from .sac import TrainConfig, train
    from .sac.train import save_checkpoint

    spec = _load_spec(args.spec)
    cfg = TrainConfig(steps=args.steps, seed=args.seed)
    agent, curve = train(
        spec, cfg, checkpoint_path=args.checkpoint,
        log_fn=lambda s, m: print(f"step {s}: eval race time {m.t_race:.3f} s stops {m.stops}"),
    )
    save_checkpoint(agent, args.checkpoint, spec)
    if args.out:
        Path(args.out).write_text(json.dumps({
            "steps": curve.steps, "eval_t_race": curve.eval_t_race,
        }, indent=2) + "\n")
    return 0


def cmd_eval(args) -> int:
    from .env import ScenarioSpec
    from .sac.train import evaluate, load_checkpoint

    spec = _load_spec(args.spec)
    agent, _ = load_checkpoint(args.checkpoint)
    log, metrics = evaluate(agent, spec)
    payload = {
        "t_race": metrics.t_race,
        "return": metrics.undiscounted_return,
        "stops": metrics.stops,
        "legal": metrics.legal,
        "forced_compound_count": metrics.forced_compound_count,
        "wall_time_per_lap": metrics.wall_time_per_lap,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        Path(args.out).with_suffix(".csv").write_text(log.to_csv())
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    from .bench import emit_report, run_disturbance, run_nominal

    cfg = _load_config(args.config)
    if args.mode == "nominal":
        report = run_nominal(cfg, args.checkpoint)
    else:
        report = run_disturbance(cfg, args.checkpoint, (args.disturbance_lap, args.tw_delta))
    paths = emit_report(report, args.out_dir)
    for p in paths:
        print(p)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(addr=args.addr, data_dir=args.data_dir, checkpoint=args.checkpoint)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="racestrat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="solve the minimum-race-time problem")
    p.add_argument("--config", help="race config JSON")
    p.add_argument("--gap", type=float, default=0.05, help="proven-gap target in seconds")
    p.add_argument("--max-stops", type=int, default=None)
    p.add_argument("--nodes", type=int, default=20000, help="node budget")
    p.add_argument("--deterministic", action="store_true", default=True)
    p.add_argument("--init-state", help="JSON state snapshot for a mid-race solve")
    p.add_argument("--start-lap", type=int, default=0)
    p.add_argument("--out", help="solution JSON path")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("train", help="train the strategy agent")
    p.add_argument("--spec", help="scenario spec JSON")
    p.add_argument("--steps", type=int, default=300_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", required=True, help="checkpoint output path")
    p.add_argument("--out", help="learning-curve JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained agent deterministically")
    p.add_argument("--spec", help="scenario spec JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", help="metrics JSON path (CSV written alongside)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark report")
    p.add_argument("mode", choices=["nominal", "disturbance"])
    p.add_argument("--config", help="race config JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", default="./bench-out")
    p.add_argument("--disturbance-lap", type=int, default=22)
    p.add_argument("--tw-delta", type=float, default=0.2)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the pit-wall service")
    p.add_argument("--addr", default=os.environ.get("RACESTRAT_ADDR", "127.0.0.1:8000"))
    p.add_argument("--data-dir", default=os.environ.get("RACESTRAT_DATA_DIR", "./pitwall-data"))
    p.add_argument("--checkpoint", default=os.environ.get("RACESTRAT_CHECKPOINT"))
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
