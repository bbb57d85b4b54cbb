"""
Command-line entry point: `python -m app <command>`.

    run     --config <file> --seed <n> --out <dir>
    sweep   --config <file> --seeds a..b --out <dir> [--jobs n]
    bandit  --arms <csv> --horizon n --trials n --seed n --out <trace.csv> [--policy pareto_ucb|scalar_ucb]
    serve   [--host h] [--port p]
"""
from pathlib import Path
from typing import List, Optional
import argparse
import logging

from app.core.config import settings
from app.core.exceptions import ParetoMCTSError
from app.core.logging import setup_logging
from app.schemas.mission import load_mission_config

logger = logging.getLogger(__name__)


def checkpoints_path_for(trace_path: Path) -> Path:
    """Checkpoint table written next to a bandit trace: runs/trace.csv -> runs/trace_checkpoints.csv."""
    return trace_path.with_name(f"{trace_path.stem}_checkpoints.csv")


def _run(args: argparse.Namespace) -> int:
    from app.services.mission import run_mission

    config = load_mission_config(args.config, seed=args.seed)
    out_dir = Path(args.out) if args.out else settings.OUTPUT_DIR / f"seed_{config.seed}"
    log = run_mission(config, out_dir)
    final = log.records[-1] if log.records else None
    if final is not None:
        logger.info(
            f"Finished: {log.total_samples} samples, rmse={final.rmse:.4f}, "
            f"hotspot_rmse={final.hotspot_rmse:.4f}, hotspot%={final.hotspot_sample_pct:.1f}"
        )
    return 2 if log.aborted else 0


def _sweep(args: argparse.Namespace) -> int:
    from app.services.mission import parse_seed_range, run_sweep

    config = load_mission_config(args.config)
    out_dir = Path(args.out) if args.out else settings.OUTPUT_DIR
    summary = run_sweep(config, parse_seed_range(args.seeds), out_dir, n_jobs=args.jobs)
    logger.info(
        f"Sweep finished: median hotspot%={summary['hotspot_sample_pct'].median():.1f}, "
        f"median hotspot_rmse={summary['hotspot_rmse'].median():.4f}"
    )
    return 0


def _bandit(args: argparse.Namespace) -> int:
    from app.services.bandit_lab import checkpoint_table, load_arms, log_growth_fit, run_experiment, write_trace_csv

    arms = load_arms(args.arms)
    result = run_experiment(
        arms, args.horizon, args.trials, args.seed, policy=args.policy, n_jobs=args.jobs
    )
    trace_path = write_trace_csv(result, args.out)
    table = checkpoint_table(result)
    checkpoints_path = checkpoints_path_for(trace_path)
    table.to_csv(checkpoints_path, index=False, float_format=settings.CSV_FLOAT_FORMAT)
    logger.info(f"Checkpoint counts written to {checkpoints_path}")
    for arm in range(len(arms)):
        if arm in set(int(k) for k in result.optimal_arms):
            continue
        rows = table[table["arm"] == arm]
        a, b = log_growth_fit(rows["step"], rows["mean_count"])
        logger.info(f"Arm {arm} (dominated): T(n) ≈ {a:.2f} + {b:.2f}·ln n")
    return 0


def _serve(args: argparse.Namespace) -> int:
    from run_server import main as serve

    serve(host=args.host, port=args.port, reload=False)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pareto-mcts", description="Pareto MCTS informative planning toolkit.")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one replanning mission.")
    run.add_argument("--config", required=True, help="Mission config file (KEY=value lines).")
    run.add_argument("--seed", type=int, default=None, help="Overrides SEED from the config.")
    run.add_argument("--out", default=None, help="Output directory (default OUTPUT_DIR/seed_<n>).")
    run.set_defaults(handler=_run)

    sweep = commands.add_parser("sweep", help="Run one mission per seed and write summary.csv.")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seeds", required=True, help="Inclusive seed range a..b.")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--jobs", type=int, default=None, help="Parallel workers (default N_JOBS).")
    sweep.set_defaults(handler=_sweep)

    bandit = commands.add_parser("bandit", help="Run a multi-objective bandit experiment.")
    bandit.add_argument("--arms", required=True, help="CSV of arm means, one column per objective.")
    bandit.add_argument("--horizon", type=int, default=100_000)
    bandit.add_argument("--trials", type=int, default=10)
    bandit.add_argument("--seed", type=int, default=0)
    bandit.add_argument("--policy", choices=["pareto_ucb", "scalar_ucb"], default="pareto_ucb")
    bandit.add_argument("--jobs", type=int, default=None)
    bandit.add_argument(
        "--out", required=True, help="Trace CSV path; checkpoint counts go to <stem>_checkpoints.csv beside it."
    )
    bandit.set_defaults(handler=_bandit)

    serve = commands.add_parser("serve", help="Start the HTTP API.")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(handler=_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)
    try:
        return args.handler(args)
    except ParetoMCTSError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
