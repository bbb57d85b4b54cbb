"""
Dubins motion primitives.

Shortest fixed-radius Dubins curves between oriented poses (six-word enumeration), sampling at a
fixed arc-length spacing, and the fan of primitive paths available to the robot at a pose.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np

from app.core.exceptions import NoFeasiblePrimitiveError, NonFiniteInputError
from app.schemas.mission import PrimitiveParameters

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
# slack for analytic arc extrema that land on a workspace edge
ARC_BOUNDS_TOLERANCE = 1e-9
WORDS = ("LSL", "LSR", "RSL", "RSR", "RLR", "LRL")


def mod2pi(angle: float) -> float:
    """Wrap to [0, 2π); values within 1e-10 below 2π map to 0."""
    wrapped = angle - TWO_PI * math.floor(angle / TWO_PI)
    return 0.0 if TWO_PI - wrapped < 1e-10 else wrapped


def normalize_heading(angle: float) -> float:
    """Wrap to [-π, π)."""
    return mod2pi(angle + math.pi) - math.pi


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading)):
            raise NonFiniteInputError(f"pose ({self.x}, {self.y}, {self.heading}) is not finite")
        object.__setattr__(self, "heading", normalize_heading(self.heading))

    @property
    def xy(self) -> Tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class Bounds:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def contains_all(self, xs: np.ndarray, ys: np.ndarray, tolerance: float = 0.0) -> bool:
        return bool(np.all(
            (xs >= self.x_min - tolerance) & (xs <= self.x_max + tolerance)
            & (ys >= self.y_min - tolerance) & (ys <= self.y_max + tolerance)
        ))


@dataclass(frozen=True, eq=False)
class PrimitivePath:
    """
    A sampled Dubins curve.

    `segments` holds the three segment lengths (km) of `word`; `samples` is an (m, 3) array of
    (x, y, heading) rows, the first equal to `start` and the last to `end`.
    """
    start: Pose
    end: Pose
    word: str
    segments: Tuple[float, float, float]
    turning_radius: float
    samples: np.ndarray = field(repr=False)
    index: int = 0

    @property
    def length(self) -> float:
        return float(sum(self.segments))

    @property
    def poses(self) -> Tuple[Pose, ...]:
        return tuple(Pose(*row) for row in self.samples)

    @property
    def measurement_points(self) -> np.ndarray:
        """(m, 2) sample locations after the start pose."""
        return self.samples[1:, :2]

    @property
    def sample_count(self) -> int:
        return int(self.samples.shape[0]) - 1


def _word_lsl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    p_sq = 2 + d * d - 2 * math.cos(alpha - beta) + 2 * d * (sa - sb)
    if p_sq < 0:
        return None
    tmp = math.atan2(cb - ca, d + sa - sb)
    return mod2pi(-alpha + tmp), math.sqrt(p_sq), mod2pi(beta - tmp)


def _word_rsr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    p_sq = 2 + d * d - 2 * math.cos(alpha - beta) + 2 * d * (sb - sa)
    if p_sq < 0:
        return None
    tmp = math.atan2(ca - cb, d - sa + sb)
    return mod2pi(alpha - tmp), math.sqrt(p_sq), mod2pi(-beta + tmp)


def _word_lsr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    p_sq = -2 + d * d + 2 * math.cos(alpha - beta) + 2 * d * (sa + sb)
    if p_sq < 0:
        return None
    p = math.sqrt(p_sq)
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return mod2pi(-alpha + tmp), p, mod2pi(-mod2pi(beta) + tmp)


def _word_rsl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    p_sq = d * d - 2 + 2 * math.cos(alpha - beta) - 2 * d * (sa + sb)
    if p_sq < 0:
        return None
    p = math.sqrt(p_sq)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return mod2pi(alpha - tmp), p, mod2pi(beta - tmp)


def _word_rlr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    tmp = (6.0 - d * d + 2 * math.cos(alpha - beta) + 2 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1:
        return None
    p = mod2pi(TWO_PI - math.acos(tmp))
    t = mod2pi(alpha - math.atan2(ca - cb, d - sa + sb) + mod2pi(p / 2.0))
    return t, p, mod2pi(alpha - beta - t + mod2pi(p))


def _word_lrl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    tmp = (6.0 - d * d + 2 * math.cos(alpha - beta) + 2 * d * (-sa + sb)) / 8.0
    if abs(tmp) > 1:
        return None
    p = mod2pi(TWO_PI - math.acos(tmp))
    t = mod2pi(-alpha - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
    return t, p, mod2pi(mod2pi(beta) - alpha - t + mod2pi(p))


_WORD_SOLVERS = {
    "LSL": _word_lsl,
    "LSR": _word_lsr,
    "RSL": _word_rsl,
    "RSR": _word_rsr,
    "RLR": _word_rlr,
    "LRL": _word_lrl,
}


def _normalized_problem(start: Pose, end: Pose, r_min: float) -> Tuple[float, float, float]:
    dx, dy = end.x - start.x, end.y - start.y
    d = math.hypot(dx, dy) / r_min
    theta = mod2pi(math.atan2(dy, dx)) if d > 0 else 0.0
    return mod2pi(start.heading - theta), mod2pi(end.heading - theta), d


def dubins_word_lengths(start: Pose, end: Pose, r_min: float) -> Dict[str, Optional[Tuple[float, float, float]]]:
    """Segment lengths (km) for every Dubins word, None where the word has no solution."""
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    alpha, beta, d = _normalized_problem(start, end, r_min)
    lengths = {}
    for word in WORDS:
        solution = _WORD_SOLVERS[word](alpha, beta, d)
        lengths[word] = None if solution is None else tuple(s * r_min for s in solution)
    return lengths


def _advance(x: float, y: float, heading: float, kind: str, distance: float, r: float):
    if kind == "S":
        return x + distance * math.cos(heading), y + distance * math.sin(heading), heading
    phi = distance / r
    if kind == "L":
        return (
            x + r * (math.sin(heading + phi) - math.sin(heading)),
            y + r * (math.cos(heading) - math.cos(heading + phi)),
            heading + phi,
        )
    return (
        x + r * (math.sin(heading) - math.sin(heading - phi)),
        y + r * (math.cos(heading - phi) - math.cos(heading)),
        heading - phi,
    )


def pose_at(start: Pose, word: str, segments: Tuple[float, float, float], r_min: float, s: float) -> Pose:
    """Pose after travelling arc length s along the curve."""
    x, y, heading = start.x, start.y, start.heading
    remaining = s
    for kind, seg in zip(word, segments):
        step = min(remaining, seg)
        x, y, heading = _advance(x, y, heading, kind, step, r_min)
        remaining -= step
        if remaining <= 0:
            break
    return Pose(x, y, heading)


def arc_table(word: str, segments: Tuple[float, float, float], r_min: float) -> np.ndarray:
    """
    (k, 5) rows (cx, cy, turn, lo, hi) for the turning segments of a curve starting at the origin
    heading along +x: circle center, +1 for L or -1 for R, and the unwrapped heading interval swept.
    """
    rows = []
    x = y = heading = 0.0
    for kind, seg in zip(word, segments):
        if kind != "S" and seg > 0:
            turn = 1.0 if kind == "L" else -1.0
            sweep = turn * seg / r_min
            rows.append((
                x - turn * r_min * math.sin(heading),
                y + turn * r_min * math.cos(heading),
                turn,
                min(heading, heading + sweep),
                max(heading, heading + sweep),
            ))
        x, y, heading = _advance(x, y, heading, kind, seg, r_min)
    return np.array(rows, dtype=float).reshape(-1, 5)


def arc_extremes(cx: float, cy: float, radius: float, turn: float, lo: float, hi: float) -> np.ndarray:
    """Arc points where x or y can be extremal: both ends plus every axis-aligned heading swept."""
    axis = HALF_PI * np.arange(math.ceil(lo / HALF_PI), math.floor(hi / HALF_PI) + 1)
    thetas = np.concatenate([[lo, hi], axis])
    return np.column_stack([cx + turn * radius * np.sin(thetas), cy - turn * radius * np.cos(thetas)])


def sample_path(
    start: Pose, word: str, segments: Tuple[float, float, float], r_min: float, spacing: float
) -> np.ndarray:
    """(m, 3) poses every `spacing` km from the start, always ending exactly at the total length."""
    if spacing <= 0:
        raise ValueError("sample spacing must be positive")
    total = float(sum(segments))
    stations = list(np.arange(0.0, total, spacing))
    if not stations or total - stations[-1] > 1e-12:
        stations.append(total)
    else:
        stations[-1] = total
    rows = []
    for s in stations:
        pose = pose_at(start, word, segments, r_min, s)
        rows.append((pose.x, pose.y, pose.heading))
    return np.array(rows, dtype=float)


def shortest_dubins(start: Pose, end: Pose, r_min: float, spacing: float = 0.1, index: int = 0) -> PrimitivePath:
    """Minimum-length path among the six Dubins words, sampled every `spacing` km."""
    lengths = dubins_word_lengths(start, end, r_min)
    word, segments = min(
        ((w, segs) for w, segs in lengths.items() if segs is not None),
        key=lambda item: sum(item[1]),
    )
    samples = sample_path(start, word, segments, r_min, spacing)
    return PrimitivePath(
        start=start,
        end=Pose(*samples[-1]),
        word=word,
        segments=segments,
        turning_radius=r_min,
        samples=samples,
        index=index,
    )


class PrimitiveLibrary:
    """
    The primitive fan, solved once in the robot frame and moved rigidly to each query pose.

    Dubins curves are invariant under rotation and translation, so placing the local templates
    at a pose gives the same paths as solving from that pose.
    """

    def __init__(self, params: PrimitiveParameters):
        self.params = params
        if params.count == 1:
            offsets = [0.0]
        else:
            offsets = np.linspace(-params.fan_half_angle, params.fan_half_angle, params.count)
        origin = Pose(0.0, 0.0, 0.0)
        self.templates = [
            shortest_dubins(
                origin,
                Pose(params.length * math.cos(offset), params.length * math.sin(offset), float(offset)),
                params.turning_radius,
                params.sample_spacing,
                index=i,
            )
            for i, offset in enumerate(offsets)
        ]
        self.arcs = [arc_table(t.word, t.segments, t.turning_radius) for t in self.templates]

    def _arcs_inside(self, arcs: np.ndarray, pose: Pose, c: float, s: float, bounds: Bounds) -> bool:
        """Whether every turning segment, placed at `pose`, stays inside `bounds` between its samples too."""
        r = self.params.turning_radius
        for cx, cy, turn, lo, hi in arcs:
            points = arc_extremes(
                pose.x + c * cx - s * cy, pose.y + s * cx + c * cy, r, turn, lo + pose.heading, hi + pose.heading
            )
            if not bounds.contains_all(points[:, 0], points[:, 1], ARC_BOUNDS_TOLERANCE):
                return False
        return True

    def at(self, pose: Pose, bounds: Optional[Bounds] = None) -> List[PrimitivePath]:
        """
        Primitive paths from `pose`; with `bounds`, paths leaving the workspace are dropped whole.

        Samples are checked directly and every arc through its analytic extrema, so no path bulges
        out of the workspace between two samples.

        Raises:
            NoFeasiblePrimitiveError: every primitive leaves the workspace.
        """
        c, s = math.cos(pose.heading), math.sin(pose.heading)
        paths = []
        for template, arcs in zip(self.templates, self.arcs):
            local = template.samples
            samples = np.empty_like(local)
            samples[:, 0] = pose.x + c * local[:, 0] - s * local[:, 1]
            samples[:, 1] = pose.y + s * local[:, 0] + c * local[:, 1]
            samples[:, 2] = np.mod(local[:, 2] + pose.heading + math.pi, TWO_PI) - math.pi
            samples[0] = (pose.x, pose.y, pose.heading)
            if bounds is not None and not (
                bounds.contains_all(samples[:, 0], samples[:, 1]) and self._arcs_inside(arcs, pose, c, s, bounds)
            ):
                continue
            paths.append(PrimitivePath(
                start=pose,
                end=Pose(*samples[-1]),
                word=template.word,
                segments=template.segments,
                turning_radius=template.turning_radius,
                samples=samples,
                index=template.index,
            ))
        if not paths:
            raise NoFeasiblePrimitiveError(
                f"no primitive from ({pose.x:.3f}, {pose.y:.3f}, {pose.heading:.3f}) stays inside the workspace"
            )
        return paths


@lru_cache(maxsize=32)
def _library(params_json: str) -> PrimitiveLibrary:
    return PrimitiveLibrary(PrimitiveParameters.model_validate_json(params_json))


def primitive_library(params: PrimitiveParameters) -> PrimitiveLibrary:
    return _library(params.model_dump_json())


def primitive_set(pose: Pose, params: PrimitiveParameters, bounds: Bounds) -> List[PrimitivePath]:
    """
    The fan of primitive paths from `pose`.

    Terminal poses sit at chord distance params.length along headings evenly spread over
    [-fan_half_angle, +fan_half_angle] around the current heading, each facing outward. Paths with
    any sample outside `bounds` are dropped whole; `index` keeps the fan position.

    Raises:
        NoFeasiblePrimitiveError: every primitive leaves the workspace.
    """
    return primitive_library(params).at(pose, bounds)
