"""
Online replanning missions: plan, execute one primitive, observe, refit, log.

Output files of a mission directory:
    mission.csv           one row per replan, after a `#pareto-mcts-log v1` header line
    samples.csv           x, y, value of every observation in raw field units
    prediction_final.csv  final posterior mean in the grid CSV format
"""
from contextlib import nullcontext
from pathlib import Path
from typing import IO, List, Optional, Sequence, Union
import logging
import math
import time

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, NoFeasiblePrimitiveError
from app.schemas.mission import MetricRecord, MissionConfig, MissionLog, MissionRecord
from app.services.dubins_motion import Pose, PrimitivePath
from app.services.environment import (
    Extent,
    FieldGrid,
    ValueTransform,
    default_noise_std,
    environment_from_selector,
    observe,
    save_grid,
)
from app.services.gp_model import GaussianProcess
from app.services.planner import ParetoMCTS, RewardSpec

logger = logging.getLogger(__name__)

LOG_SCHEMA_HEADER = "#pareto-mcts-log v1"
SUMMARY_SCHEMA_HEADER = "#pareto-mcts-summary v1"
LOG_COLUMNS = [
    "replan", "samples", "x", "y", "heading", "action_id",
    "rmse", "mae", "hotspot_rmse", "hotspot_mae", "hotspot_sample_pct",
]
# heading offsets tried, in order, when no primitive stays inside the workspace
HEADING_PERTURBATIONS = (math.pi / 2, -math.pi / 2, math.pi)


def compute_metrics(prediction: FieldGrid, truth: FieldGrid, samples: np.ndarray) -> MetricRecord:
    """
    Estimation errors of a prediction grid and the share of samples inside hotspot cells.

    Hotspot cells are the truth cells strictly above the truth median.

    Raises:
        DimensionMismatchError: grids of different shape.
    """
    if prediction.cells.shape != truth.cells.shape:
        raise DimensionMismatchError(
            f"prediction grid {prediction.cells.shape} does not match truth grid {truth.cells.shape}"
        )
    error = prediction.cells - truth.cells
    mask = truth.hotspot_mask()
    hot = error[mask] if mask.any() else np.zeros(1)

    points = np.asarray(samples, dtype=float).reshape(-1, 2)
    if points.shape[0]:
        in_hotspot = sum(bool(mask[truth.cell_index(x, y)]) for x, y in points)
        pct = 100.0 * in_hotspot / points.shape[0]
    else:
        pct = 0.0
    return MetricRecord(
        rmse=float(np.sqrt(np.mean(error ** 2))),
        mae=float(np.mean(np.abs(error))),
        hotspot_rmse=float(np.sqrt(np.mean(hot ** 2))),
        hotspot_mae=float(np.mean(np.abs(hot))),
        hotspot_sample_pct=pct,
    )


def predict_grid(gp: GaussianProcess, template: FieldGrid, transform: Optional[ValueTransform] = None) -> FieldGrid:
    """Posterior mean at every cell center of `template`, mapped back to raw units when a transform is given."""
    mean, _ = gp.predict_many(template.cell_centers())
    cells = mean.reshape(template.height, template.width)
    if transform is not None:
        cells = transform.to_raw(cells)
    return template.with_cells(cells)


class MissionLogWriter:
    """Appends MissionRecords to mission.csv, flushing after every row."""

    def __init__(self, path: Union[str, Path], wall_time: bool = False, float_format: Optional[str] = None):
        self.path = Path(path)
        self.columns = LOG_COLUMNS + (["wall_time"] if wall_time else [])
        self.float_format = float_format or settings.CSV_FLOAT_FORMAT
        self._handle: Optional[IO[str]] = None

    def __enter__(self) -> "MissionLogWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "w", newline="")
        self._handle.write(LOG_SCHEMA_HEADER + "\n")
        self._handle.write(",".join(self.columns) + "\n")
        self._handle.flush()
        return self

    def append(self, record: MissionRecord) -> None:
        row = pd.DataFrame([record.model_dump()], columns=self.columns)
        row.to_csv(self._handle, header=False, index=False, float_format=self.float_format)
        self._handle.flush()

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def read_mission_log(path: Union[str, Path]) -> pd.DataFrame:
    """Load a mission.csv (or summary.csv) written by this module."""
    return pd.read_csv(path, comment="#")


class MissionRunner:
    """
    One mission from a validated config.

    Observations and the GP live in standardized units of the truth field; metrics, samples.csv and
    the prediction grid are reported in raw units.
    """

    def __init__(self, config: MissionConfig, out_dir: Optional[Union[str, Path]] = None):
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else config.output_dir
        self.truth = environment_from_selector(
            config.environment,
            fallback_seed=config.seed,
            width=config.grid_width,
            height=config.grid_height,
            extent_km=config.extent_km,
            n_sources=config.n_sources,
            downsample_factor=config.downsample_factor,
            crop_window=Extent(*config.crop) if config.crop else None,
        )
        self.standard, self.transform = self.truth.standardize()
        self.noise_std = config.noise_std if config.noise_std is not None else default_noise_std(self.standard)
        self.bounds = self.truth.extent.as_bounds()
        noise_seed, planner_seed = np.random.SeedSequence(config.seed).spawn(2)
        self.noise_rng = np.random.default_rng(noise_seed)
        self.planner_rng = np.random.default_rng(planner_seed)
        self.gp = GaussianProcess(config.gp)
        self.locations: List[np.ndarray] = []
        self.values: List[float] = []

    def start_pose(self) -> Pose:
        cx, cy = self.truth.extent.center
        x = self.config.start_x if self.config.start_x is not None else cx
        y = self.config.start_y if self.config.start_y is not None else cy
        return Pose(x, y, self.config.start_heading)

    def reward_spec(self, samples_collected: int) -> RewardSpec:
        return RewardSpec(
            objectives=tuple(self.config.objectives),
            beta0=self.config.planner.beta0,
            mission_time=samples_collected,
        )

    def plan(self, pose: Pose, samples_collected: int) -> Optional[PrimitivePath]:
        """Search from `pose`, retrying with perturbed headings; None when every attempt fails."""
        remaining = self.config.sample_budget - samples_collected
        candidates = [pose] + [Pose(pose.x, pose.y, pose.heading + offset) for offset in HEADING_PERTURBATIONS]
        for attempt, candidate in enumerate(candidates):
            planner = ParetoMCTS(
                self.gp,
                self.reward_spec(samples_collected),
                self.config.planner,
                self.config.primitives,
                self.bounds,
                self.planner_rng,
                remaining_samples=remaining,
                preference=self.config.preference_at(samples_collected),
            )
            try:
                return planner.search(candidate)
            except NoFeasiblePrimitiveError as e:
                logger.warning(f"Replan at {samples_collected} samples, attempt {attempt + 1}: {e}")
        return None

    def execute(self, path: PrimitivePath, samples_collected: int) -> Pose:
        """Observe along the path (truncated to the sample budget) and refit the GP; returns the new pose."""
        take = min(path.sample_count, self.config.sample_budget - samples_collected)
        points = path.measurement_points[:take]
        for point in points:
            self.locations.append(point)
            self.values.append(observe(self.standard, point, self.noise_std, self.noise_rng))
        self.gp = self.gp.fit(np.vstack(self.locations), self.values)
        if take == path.sample_count:
            return path.end
        return Pose(*path.samples[take])

    def write_outputs(self) -> None:
        locations = np.vstack(self.locations) if self.locations else np.empty((0, 2))
        frame = pd.DataFrame({
            "x": locations[:, 0],
            "y": locations[:, 1],
            "value": self.transform.to_raw(np.asarray(self.values, dtype=float)),
        })
        frame.to_csv(self.out_dir / "samples.csv", index=False, float_format=settings.CSV_FLOAT_FORMAT)
        save_grid(
            predict_grid(self.gp, self.truth, self.transform),
            self.out_dir / "prediction_final.csv",
            float_format=settings.CSV_FLOAT_FORMAT,
        )

    def run(self) -> MissionLog:
        config = self.config
        log = MissionLog(raw_range=list(self.truth.value_range))
        logger.info(
            f"Mission start: environment={config.environment} seed={config.seed} "
            f"objectives={[o.value for o in config.objectives]} budget={config.sample_budget}"
        )
        sink = MissionLogWriter(self.out_dir / "mission.csv", config.log_wall_time) if self.out_dir else nullcontext()
        try:
            with sink as writer:
                self._replan_loop(log, writer)
        except Exception as e:
            logger.error(f"Mission failed: {e}")
            raise
        if self.out_dir:
            self.write_outputs()
        return log

    def _replan_loop(self, log: MissionLog, writer: Optional[MissionLogWriter]) -> None:
        config = self.config
        pose = self.start_pose()
        collected = 0
        replan = 0
        while collected < config.sample_budget:
            started = time.perf_counter()
            path = self.plan(pose, collected)
            if path is None:
                logger.error(f"Mission aborted after {collected} samples: no feasible primitive")
                log.aborted = True
                return
            pose = self.execute(path, collected)
            collected = len(self.values)
            prediction = predict_grid(self.gp, self.truth, self.transform)
            quality = compute_metrics(prediction, self.truth, np.vstack(self.locations))
            record = MissionRecord(
                **quality.model_dump(),
                replan=replan,
                samples=collected,
                x=pose.x,
                y=pose.y,
                heading=pose.heading,
                action_id=path.index,
                wall_time=time.perf_counter() - started if config.log_wall_time else None,
            )
            log.records.append(record)
            if writer is not None:
                writer.append(record)
            logger.info(
                f"Replan {replan}: action {path.index}, {collected}/{config.sample_budget} samples, "
                f"rmse={quality.rmse:.4f} hotspot%={quality.hotspot_sample_pct:.1f}"
            )
            replan += 1


def run_mission(config: MissionConfig, out_dir: Optional[Union[str, Path]] = None) -> MissionLog:
    """Run one mission; files are written only when an output directory is given or configured."""
    return MissionRunner(config, out_dir).run()


def _sweep_row(config: MissionConfig, seed: int, out_dir: Path) -> dict:
    seeded = config.model_copy(update={"seed": seed})
    log = run_mission(seeded, out_dir / f"seed_{seed}")
    row = {"seed": seed, "replans": len(log.records), "samples": log.total_samples, "aborted": log.aborted}
    final = log.records[-1] if log.records else None
    for name in ("rmse", "mae", "hotspot_rmse", "hotspot_mae", "hotspot_sample_pct"):
        row[name] = getattr(final, name) if final else float("nan")
    return row


def parse_seed_range(text: str) -> List[int]:
    """'a..b' (inclusive) or a single seed."""
    start, sep, stop = text.partition("..")
    try:
        first = int(start)
        last = int(stop) if sep else first
    except ValueError:
        raise ValueError(f"seed range must look like 'a..b', got {text!r}")
    if first < 0 or last < first:
        raise ValueError(f"invalid seed range {text!r}")
    return list(range(first, last + 1))


def run_sweep(
    config: MissionConfig,
    seeds: Sequence[int],
    out_dir: Union[str, Path],
    n_jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    Run one mission per seed in parallel, each in its own `seed_<n>/` directory, and write summary.csv.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Sweep over {len(seeds)} seeds into {out_dir}")
    rows = Parallel(n_jobs=n_jobs or settings.N_JOBS)(
        delayed(_sweep_row)(config, seed, out_dir) for seed in seeds
    )
    summary = pd.DataFrame(rows).sort_values("seed").reset_index(drop=True)
    with open(out_dir / "summary.csv", "w", newline="") as handle:
        handle.write(SUMMARY_SCHEMA_HEADER + "\n")
        summary.to_csv(handle, index=False, float_format=settings.CSV_FLOAT_FORMAT)
    return summary
