"""
Ground-truth scalar fields, the observation model and hotspot labelling.

Grids are row-major: row r covers y in [y_min + r·dy, y_min + (r+1)·dy), column c covers x likewise,
and values are attached to cell centers. Hotspots are cells strictly above the median.

Grid CSV format:
    #grid width=<W> height=<H> x_min=<..> x_max=<..> y_min=<..> y_max=<..>
    x,y,value
    <one row per cell center, any order>
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
import pandas as pd

from app.core.exceptions import GridFormatError, NonFiniteInputError, OutOfExtentError
from app.services.dubins_motion import Bounds

logger = logging.getLogger(__name__)

GRID_HEADER_TAG = "#grid"


@dataclass(frozen=True)
class Extent:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"degenerate extent {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def as_bounds(self) -> Bounds:
        return Bounds(self.x_min, self.x_max, self.y_min, self.y_max)

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))


@dataclass(frozen=True)
class ValueTransform:
    """Affine map between raw field units and standardized units: raw = offset + scale·z."""
    offset: float = 0.0
    scale: float = 1.0

    def to_raw(self, z):
        return self.offset + self.scale * np.asarray(z, dtype=float)

    def to_standard(self, raw):
        return (np.asarray(raw, dtype=float) - self.offset) / self.scale


@dataclass(frozen=True)
class FieldGrid:
    """Immutable scalar field on a regular grid; `cells` has shape (height, width)."""
    extent: Extent
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        if cells.ndim != 2 or min(cells.shape) < 1:
            raise GridFormatError(f"cells must be a non-empty 2-D array, got shape {cells.shape}")
        if not np.all(np.isfinite(cells)):
            r, c = np.argwhere(~np.isfinite(cells))[0]
            raise GridFormatError(f"non-finite value at row {r}, column {c}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def cell_size(self) -> Tuple[float, float]:
        return (
            (self.extent.x_max - self.extent.x_min) / self.width,
            (self.extent.y_max - self.extent.y_min) / self.height,
        )

    @property
    def hotspot_threshold(self) -> float:
        return float(np.median(self.cells))

    def hotspot_mask(self) -> np.ndarray:
        """Cells strictly above the median (ties fall on the non-hotspot side)."""
        return self.cells > self.hotspot_threshold

    def cell_centers(self) -> np.ndarray:
        """(height·width, 2) cell-center coordinates in row-major order."""
        dx, dy = self.cell_size
        xs = self.extent.x_min + (np.arange(self.width) + 0.5) * dx
        ys = self.extent.y_min + (np.arange(self.height) + 0.5) * dy
        grid_x, grid_y = np.meshgrid(xs, ys)
        return np.column_stack([grid_x.ravel(), grid_y.ravel()])

    def cell_index(self, x: float, y: float) -> Tuple[int, int]:
        """(row, column) of the cell containing the location; the max edge belongs to the last cell."""
        if not self.extent.contains(x, y):
            raise OutOfExtentError(f"location ({x}, {y}) is outside {self.extent}")
        dx, dy = self.cell_size
        col = min(int((x - self.extent.x_min) / dx), self.width - 1)
        row = min(int((y - self.extent.y_min) / dy), self.height - 1)
        return row, col

    def interpolate(self, x: float, y: float) -> float:
        """Bilinear interpolation between cell centers, clamped to the edge centers."""
        if not (math.isfinite(x) and math.isfinite(y)):
            raise NonFiniteInputError(f"location ({x}, {y}) is not finite")
        if not self.extent.contains(x, y):
            raise OutOfExtentError(f"location ({x}, {y}) is outside {self.extent}")
        dx, dy = self.cell_size
        fx = min(max((x - self.extent.x_min) / dx - 0.5, 0.0), self.width - 1.0)
        fy = min(max((y - self.extent.y_min) / dy - 0.5, 0.0), self.height - 1.0)
        c0, r0 = int(math.floor(fx)), int(math.floor(fy))
        c1, r1 = min(c0 + 1, self.width - 1), min(r0 + 1, self.height - 1)
        tx, ty = fx - c0, fy - r0
        top = (1 - tx) * self.cells[r0, c0] + tx * self.cells[r0, c1]
        bottom = (1 - tx) * self.cells[r1, c0] + tx * self.cells[r1, c1]
        return float((1 - ty) * top + ty * bottom)

    def with_cells(self, cells: np.ndarray) -> "FieldGrid":
        return FieldGrid(self.extent, cells)

    def standardize(self) -> Tuple["FieldGrid", ValueTransform]:
        """Zero-mean, unit-variance copy plus the transform back to raw units."""
        mean = float(self.cells.mean())
        std = float(self.cells.std())
        transform = ValueTransform(offset=mean, scale=std if std > 0 else 1.0)
        return self.with_cells(transform.to_standard(self.cells)), transform

    @property
    def value_range(self) -> Tuple[float, float]:
        return float(self.cells.min()), float(self.cells.max())


@dataclass(frozen=True)
class GaussianSource:
    center: Tuple[float, float]
    amplitude: float
    spread: float

    def __post_init__(self):
        if self.amplitude <= 0 or self.spread <= 0:
            raise ValueError(f"source amplitude and spread must be positive: {self}")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        offsets = np.asarray(points, dtype=float) - np.asarray(self.center, dtype=float)
        return self.amplitude * np.exp(-np.sum(offsets ** 2, axis=-1) / (2.0 * self.spread ** 2))


def field_value(sources: Sequence[GaussianSource], points: np.ndarray) -> np.ndarray:
    """Superposition of Gaussian sources at (m, 2) points."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    total = np.zeros(points.shape[0])
    for source in sources:
        total += source.evaluate(points)
    return total


def random_sources(
    seed: int,
    extent: Extent,
    n_sources: int = 3,
    amplitude_range: Tuple[float, float] = (0.5, 1.0),
    spread_range: Tuple[float, float] = (0.6, 1.5),
    margin: float = 1.0,
) -> List[GaussianSource]:
    """Sources with uniform centers (inset by `margin` km) and uniform amplitude/spread."""
    if n_sources < 1:
        raise ValueError("n_sources must be >= 1")
    rng = np.random.default_rng(seed)
    sources = []
    for _ in range(n_sources):
        center = (
            float(rng.uniform(extent.x_min + margin, extent.x_max - margin)),
            float(rng.uniform(extent.y_min + margin, extent.y_max - margin)),
        )
        sources.append(GaussianSource(
            center=center,
            amplitude=float(rng.uniform(*amplitude_range)),
            spread=float(rng.uniform(*spread_range)),
        ))
    return sources


def rasterize(sources: Sequence[GaussianSource], extent: Extent, width: int, height: int) -> FieldGrid:
    template = FieldGrid(extent, np.zeros((height, width)))
    values = field_value(sources, template.cell_centers())
    return template.with_cells(values.reshape(height, width))


def synth_environment(
    seed: int,
    extent: Optional[Extent] = None,
    n_sources: int = 3,
    width: int = 30,
    height: int = 30,
    **ranges,
) -> FieldGrid:
    """Seeded field of Gaussian hotspots on the default 10 km × 10 km workspace."""
    extent = extent or Extent(0.0, 10.0, 0.0, 10.0)
    sources = random_sources(seed, extent, n_sources, **ranges)
    logger.debug(f"Synthetic environment seed={seed}: {sources}")
    return rasterize(sources, extent, width, height)


def _parse_header(line: str, path: Path) -> Tuple[int, int, Extent]:
    tokens = line.strip().split()
    if not tokens or tokens[0] != GRID_HEADER_TAG:
        raise GridFormatError(f"{path}: line 1 must start with '{GRID_HEADER_TAG}', got {line.strip()!r}")
    fields = {}
    for token in tokens[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise GridFormatError(f"{path}: line 1 token {token!r} is not key=value")
        fields[key] = value
    try:
        width, height = int(fields["width"]), int(fields["height"])
        extent = Extent(*(float(fields[k]) for k in ("x_min", "x_max", "y_min", "y_max")))
    except KeyError as e:
        raise GridFormatError(f"{path}: line 1 is missing {e.args[0]}") from e
    except ValueError as e:
        raise GridFormatError(f"{path}: line 1 is malformed: {e}") from e
    if width < 1 or height < 1:
        raise GridFormatError(f"{path}: line 1 has non-positive dimensions {width}x{height}")
    return width, height, extent


def load_grid(path: Union[str, Path]) -> FieldGrid:
    """
    Read a grid CSV (header line plus one `x,y,value` row per cell).

    Raises:
        GridFormatError: malformed header, unparsable or non-finite rows, off-grid coordinates,
            duplicate or missing cells; messages name the offending file row and grid row/column.
    """
    path = Path(path)
    with open(path) as handle:
        header = handle.readline()
    width, height, extent = _parse_header(header, path)
    try:
        frame = pd.read_csv(path, skiprows=1)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise GridFormatError(f"{path}: {e}") from e
    if list(frame.columns) != ["x", "y", "value"]:
        raise GridFormatError(f"{path}: line 2 must be 'x,y,value', got {','.join(map(str, frame.columns))}")

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        line = int(np.flatnonzero(bad)[0]) + 3
        raise GridFormatError(f"{path}: line {line} has a missing or non-numeric entry")

    dx = (extent.x_max - extent.x_min) / width
    dy = (extent.y_max - extent.y_min) / height
    cols_f = (numeric["x"].to_numpy() - extent.x_min) / dx - 0.5
    rows_f = (numeric["y"].to_numpy() - extent.y_min) / dy - 0.5
    cols, rows = np.rint(cols_f).astype(int), np.rint(rows_f).astype(int)
    off_grid = (
        (np.abs(cols_f - cols) > 1e-6) | (np.abs(rows_f - rows) > 1e-6)
        | (cols < 0) | (cols >= width) | (rows < 0) | (rows >= height)
    )
    if off_grid.any():
        i = int(np.flatnonzero(off_grid)[0])
        raise GridFormatError(
            f"{path}: line {i + 3} ({numeric['x'].iloc[i]}, {numeric['y'].iloc[i]}) is not a cell center"
        )

    cells = np.full((height, width), np.nan)
    seen = np.zeros((height, width), dtype=bool)
    for i, (r, c, v) in enumerate(zip(rows, cols, numeric["value"].to_numpy())):
        if seen[r, c]:
            raise GridFormatError(f"{path}: line {i + 3} duplicates row {r}, column {c}")
        seen[r, c] = True
        cells[r, c] = v
    if not seen.all():
        r, c = np.argwhere(~seen)[0]
        raise GridFormatError(f"{path}: no value for row {r}, column {c}")
    logger.info(f"Loaded {width}x{height} grid from {path} (range {cells.min():.4g}..{cells.max():.4g})")
    return FieldGrid(extent, cells)


def save_grid(grid: FieldGrid, path: Union[str, Path], float_format: str = "%.10g") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    centers = grid.cell_centers()
    frame = pd.DataFrame({"x": centers[:, 0], "y": centers[:, 1], "value": grid.cells.ravel()})
    e = grid.extent
    bounds = " ".join(
        f"{key}={float(value)!r}"
        for key, value in zip(("x_min", "x_max", "y_min", "y_max"), (e.x_min, e.x_max, e.y_min, e.y_max))
    )
    with open(path, "w", newline="") as handle:
        # the extent is written exactly; cell centers are recovered from it on load
        handle.write(f"{GRID_HEADER_TAG} width={grid.width} height={grid.height} {bounds}\n")
        frame.to_csv(handle, index=False, float_format=float_format)
    return path


def downsample(grid: FieldGrid, factor: int) -> FieldGrid:
    """Block-mean downsampling by an integer factor; the extent is preserved."""
    if factor < 1:
        raise GridFormatError(f"downsample factor must be >= 1, got {factor}")
    if grid.height % factor:
        raise GridFormatError(f"factor {factor} does not divide the {grid.height} rows")
    if grid.width % factor:
        raise GridFormatError(f"factor {factor} does not divide the {grid.width} columns")
    blocks = grid.cells.reshape(grid.height // factor, factor, grid.width // factor, factor)
    return grid.with_cells(blocks.mean(axis=(1, 3)))


def upsample(grid: FieldGrid, factor: int) -> FieldGrid:
    """Repeat every cell into a factor × factor block."""
    if factor < 1:
        raise GridFormatError(f"upsample factor must be >= 1, got {factor}")
    return grid.with_cells(np.repeat(np.repeat(grid.cells, factor, axis=0), factor, axis=1))


def crop(grid: FieldGrid, window: Extent) -> FieldGrid:
    """
    Sub-grid of the cells whose centers lie inside `window`.

    The new extent snaps outward to the edges of the kept cells, so cell sizes are unchanged.

    Raises:
        GridFormatError: the window holds no cell center.
    """
    dx, dy = grid.cell_size
    xs = grid.extent.x_min + (np.arange(grid.width) + 0.5) * dx
    ys = grid.extent.y_min + (np.arange(grid.height) + 0.5) * dy
    cols = np.flatnonzero((xs >= window.x_min) & (xs <= window.x_max))
    rows = np.flatnonzero((ys >= window.y_min) & (ys <= window.y_max))
    if cols.size == 0 or rows.size == 0:
        raise GridFormatError(f"crop window {window} holds no cell center of the {grid.width}x{grid.height} grid")
    extent = Extent(
        grid.extent.x_min + cols[0] * dx,
        grid.extent.x_min + (cols[-1] + 1) * dx,
        grid.extent.y_min + rows[0] * dy,
        grid.extent.y_min + (rows[-1] + 1) * dy,
    )
    logger.info(f"Cropped {grid.width}x{grid.height} grid to {cols.size}x{rows.size} cells in {extent}")
    return FieldGrid(extent, grid.cells[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1])


def observe(grid: FieldGrid, location: Sequence[float], noise_std: float, rng: np.random.Generator) -> float:
    """Bilinear field value at the location plus zero-mean Gaussian noise."""
    x, y = float(location[0]), float(location[1])
    value = grid.interpolate(x, y)
    if noise_std > 0:
        value += float(rng.normal(0.0, noise_std))
    return value


def default_noise_std(grid: FieldGrid) -> float:
    """1% of the field's value range."""
    low, high = grid.value_range
    return 0.01 * (high - low)


def environment_from_selector(
    selector: str,
    fallback_seed: int,
    width: int = 30,
    height: int = 30,
    extent_km: float = 10.0,
    n_sources: int = 3,
    downsample_factor: int = 1,
    crop_window: Optional[Extent] = None,
) -> FieldGrid:
    """
    Resolve `synth`, `synth:<seed>` or `file:<path>` to a ground-truth grid.

    File grids are cropped to `crop_window` (when given) before block-mean downsampling.
    """
    kind, _, arg = selector.partition(":")
    if kind == "synth":
        seed = int(arg) if arg else fallback_seed
        return synth_environment(
            seed, Extent(0.0, extent_km, 0.0, extent_km), n_sources=n_sources, width=width, height=height
        )
    if kind == "file":
        grid = load_grid(arg)
        if crop_window is not None:
            grid = crop(grid, crop_window)
        return downsample(grid, downsample_factor) if downsample_factor > 1 else grid
    raise ValueError(f"unknown environment selector {selector!r}")
