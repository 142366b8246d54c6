"""Uniform 1-D grids, solution fields, ghost extension and CSV snapshots."""

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from . import autodiff as ad

logger = logging.getLogger(__name__)

GHOST_WIDTH = 3
MIN_INTERVALS = 6

class Boundary(str, Enum):
    """Boundary policy applied when extending a field with ghost nodes."""
    PERIODIC = "periodic"
    ZERO_GRADIENT = "zero_gradient"

@dataclass(frozen=True)
class Grid1D:
    """Represents a uniform grid x_i = x_min + i*dx, i = 0..n_intervals."""
    x_min: float
    x_max: float
    n_intervals: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_intervals

    @property
    def n_points(self) -> int:
        return self.n_intervals + 1

    def points(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_points) * self.dx

    def node_count(self, boundary: Boundary) -> int:
        """Stored nodes: periodic fields drop x_N, which coincides with x_0."""
        return self.n_intervals if boundary is Boundary.PERIODIC else self.n_points

    def nodes(self, boundary: Boundary) -> np.ndarray:
        return self.points()[:self.node_count(boundary)]

    def is_nested_in(self, fine: "Grid1D") -> bool:
        return (self.x_min == fine.x_min and self.x_max == fine.x_max
                and fine.n_intervals % self.n_intervals == 0)

def make_grid(x_min: float, x_max: float, n_intervals: int) -> Grid1D:
    """Build a uniform grid with ``n_intervals`` intervals.

    Raises:
        ValueError: If fewer than 6 intervals are requested or the interval
            is empty.
    """
    if int(n_intervals) != n_intervals or n_intervals < MIN_INTERVALS:
        raise ValueError(f"Need at least {MIN_INTERVALS} intervals, got {n_intervals}")
    if not x_max > x_min:
        raise ValueError(f"x_max must exceed x_min, got [{x_min}, {x_max}]")
    return Grid1D(x_min=float(x_min), x_max=float(x_max), n_intervals=int(n_intervals))

@dataclass(frozen=True)
class SolutionField:
    """Node values on a grid together with their boundary policy.

    values has shape (n,) for scalar problems and (3, n) for Euler states.
    """
    grid: Grid1D
    values: np.ndarray
    boundary: Boundary

    def __post_init__(self) -> None:
        expected = self.grid.node_count(self.boundary)
        if self.values.shape[-1] != expected:
            raise ValueError(
                f"Field has {self.values.shape[-1]} nodes, grid with {self.boundary.value} "
                f"boundary stores {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Field values must be finite")

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes(self.boundary)

@dataclass(frozen=True)
class GhostExtension:
    """Field values padded with ``width`` ghost nodes on each side."""
    padded: np.ndarray
    width: int

    def interior(self) -> np.ndarray:
        return self.padded[..., self.width:self.padded.shape[-1] - self.width]

def ghost_indices(n: int, boundary: Boundary, width: int = GHOST_WIDTH) -> np.ndarray:
    """Source index of every padded node, for ``n`` stored nodes."""
    k = np.arange(n + 2 * width) - width
    if boundary is Boundary.PERIODIC:
        if width > n:
            raise ValueError(f"Ghost width {width} exceeds the {n} periodic nodes")
        return np.mod(k, n)
    return np.clip(k, 0, n - 1)

def pad(values, boundary: Boundary, width: int = GHOST_WIDTH):
    """Ghost-extend along the last axis; works on arrays and tape Variables."""
    n = np.shape(ad.value_of(values))[-1]
    return ad.take(values, ghost_indices(n, boundary, width), axis=-1)

def extend_with_ghosts(field: SolutionField, width: int = GHOST_WIDTH) -> GhostExtension:
    return GhostExtension(padded=pad(field.values, field.boundary, width), width=width)

def strip(extension: GhostExtension) -> np.ndarray:
    return extension.interior()

def write_snapshot(path: Union[str, Path], x: np.ndarray,
                   columns: Mapping[str, np.ndarray]) -> Path:
    """Write one row per node with 17 significant digits.

    Args:
        path: Destination CSV file
        x: Node coordinates
        columns: Ordered column name to values, e.g. {"u": ...} or
            {"rho": ..., "u": ..., "p": ...}
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = [np.asarray(x)] + [np.asarray(columns[name]) for name in names]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x"] + names)
        for row in zip(*data):
            writer.writerow([f"{value:.17g}" for value in row])
    logger.debug("Wrote %d rows to %s", len(x), path)
    return path

def read_snapshot(path: Union[str, Path]) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """Read a snapshot written by ``write_snapshot``."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(value) for value in row] for row in reader if row]
    if not header or header[0] != "x":
        raise ValueError(f"{path} is not a snapshot file (header {header})")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return data[:, 0], {name: data[:, k] for k, name in enumerate(header) if k > 0}
