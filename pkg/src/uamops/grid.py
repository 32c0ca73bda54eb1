"""Discretized urban airspace: uniform 3D cell grid plus scene contents.

The airspace volume [0, x_max] x [0, y_max] x [0, z_max] is split into
identical cells of size dx x dy x dz, addressed by 1-based indices
(i, j, k).  The cell (i, j, k) has its center at
((i - 1/2) dx, (j - 1/2) dy, (k - 1/2) dz).  An :class:`UrbanScene`
annotates the grid with building heights, ground densities, road cells
and no-fly volumes; both are immutable after construction and safe for
concurrent reads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CellIndex = tuple[int, int, int]
Point = tuple[float, float, float]


class GridError(ValueError):
    """Invalid grid geometry or cell index."""


class SceneError(ValueError):
    """Scene raster or config could not be ingested."""


def _exact_divisions(extent: float, step: float, axis: str) -> int:
    n = extent / step
    if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
        raise GridError(
            f"{axis}-extent {extent} is not a positive multiple of the "
            f"{axis}-division {step}"
        )
    return int(round(n))


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell discretization of the airspace volume.

    dx/dy/dz are the cell divisions in meters, x_max/y_max/z_max the
    extents; the maximum indices a, b, c are derived and each extent
    must be an exact multiple of its division.
    """

    dx: float
    dy: float
    dz: float
    x_max: float
    y_max: float
    z_max: float
    a: int = field(init=False)
    b: int = field(init=False)
    c: int = field(init=False)

    def __post_init__(self) -> None:
        for name in ("dx", "dy", "dz", "x_max", "y_max", "z_max"):
            if getattr(self, name) <= 0:
                raise GridError(f"{name} must be positive, got {getattr(self, name)}")
        object.__setattr__(self, "a", _exact_divisions(self.x_max, self.dx, "x"))
        object.__setattr__(self, "b", _exact_divisions(self.y_max, self.dy, "y"))
        object.__setattr__(self, "c", _exact_divisions(self.z_max, self.dz, "z"))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    @property
    def n_cells(self) -> int:
        return self.a * self.b * self.c

    def contains_index(self, idx: CellIndex) -> bool:
        i, j, k = idx
        return 1 <= i <= self.a and 1 <= j <= self.b and 1 <= k <= self.c

    def z_centers(self) -> np.ndarray:
        """Center altitudes of all c layers, ascending."""
        return (np.arange(1, self.c + 1) - 0.5) * self.dz


def cell_center(idx: CellIndex, grid: GridSpec) -> Point:
    """Center-point coordinates of cell (i, j, k) in meters."""
    if not grid.contains_index(idx):
        raise GridError(f"cell index {idx} outside grid {grid.shape}")
    i, j, k = idx
    return ((i - 0.5) * grid.dx, (j - 0.5) * grid.dy, (k - 0.5) * grid.dz)


def point_to_cell(p: Point, grid: GridSpec) -> CellIndex:
    """Cell containing point p.

    Points on an interior cell boundary belong to the higher-index cell;
    points on the outer extent belong to the last cell.
    """
    x, y, z = p
    if not (0 <= x <= grid.x_max and 0 <= y <= grid.y_max and 0 <= z <= grid.z_max):
        raise GridError(f"point {p} outside extents "
                        f"({grid.x_max}, {grid.y_max}, {grid.z_max})")
    i = min(math.floor(x / grid.dx) + 1, grid.a)
    j = min(math.floor(y / grid.dy) + 1, grid.b)
    k = min(math.floor(z / grid.dz) + 1, grid.c)
    return (i, j, k)


def neighbors(idx: CellIndex, grid: GridSpec) -> list[CellIndex]:
    """All in-bounds cells differing by at most 1 per axis (26-connectivity)."""
    if not grid.contains_index(idx):
        raise GridError(f"cell index {idx} outside grid {grid.shape}")
    i, j, k = idx
    out = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                if di == dj == dk == 0:
                    continue
                n = (i + di, j + dj, k + dk)
                if grid.contains_index(n):
                    out.append(n)
    return out


@dataclass(frozen=True)
class UrbanScene:
    """Static per-cell environment on top of a :class:`GridSpec`.

    building_height is an (a, b) raster of column heights in meters;
    road_mask marks (i, j) columns carrying roads.  Densities follow
    the usual symbols: population_density rho_p (1/m^2), traffic_density
    rho_V (vehicles/m), uav_density rho_U (1/m^3); road_width w_r and
    road_length_per_cell l_r are in meters.
    """

    grid: GridSpec
    building_height: np.ndarray
    population_density: float = 0.0
    traffic_density: float = 0.0
    uav_density: float = 0.0
    road_width: float = 3.5
    road_length_per_cell: float = 50.0
    road_mask: np.ndarray | None = None
    no_fly: np.ndarray | None = None

    def __post_init__(self) -> None:
        bh = np.asarray(self.building_height, dtype=float)
        if bh.shape != (self.grid.a, self.grid.b):
            raise SceneError(
                f"building raster is {bh.shape}, grid needs "
                f"({self.grid.a}, {self.grid.b})"
            )
        if np.any(bh < 0):
            raise SceneError("building heights must be non-negative")
        for name in ("population_density", "traffic_density", "uav_density"):
            if getattr(self, name) < 0:
                raise SceneError(f"{name} must be non-negative")
        if self.road_width <= 0:
            raise SceneError("road_width must be positive")
        object.__setattr__(self, "building_height", bh)
        rm = self.road_mask
        rm = np.zeros((self.grid.a, self.grid.b), dtype=bool) if rm is None \
            else np.asarray(rm, dtype=bool)
        if rm.shape != (self.grid.a, self.grid.b):
            raise SceneError("road mask shape does not match grid")
        object.__setattr__(self, "road_mask", rm)
        nf = self.no_fly
        nf = np.zeros(self.grid.shape, dtype=bool) if nf is None \
            else np.asarray(nf, dtype=bool)
        if nf.shape != self.grid.shape:
            raise SceneError("no-fly mask shape does not match grid")
        object.__setattr__(self, "no_fly", nf)
        bh.setflags(write=False)
        rm.setflags(write=False)
        nf.setflags(write=False)

    def obstacle_mask(self) -> np.ndarray:
        """Boolean (a, b, c) array: cell centers at or below column height."""
        z = self.grid.z_centers()
        return z[None, None, :] <= self.building_height[:, :, None]

    def is_obstacle(self, idx: CellIndex) -> bool:
        i, j, k = idx
        return bool((k - 0.5) * self.grid.dz <= self.building_height[i - 1, j - 1])

    def is_no_fly(self, idx: CellIndex) -> bool:
        i, j, k = idx
        return bool(self.no_fly[i - 1, j - 1, k - 1])


def _boxes_to_mask(boxes: list[dict], grid: GridSpec, dims: int) -> np.ndarray:
    """Inclusive 1-based index ranges -> boolean mask (2D roads or 3D no-fly)."""
    shape = (grid.a, grid.b) if dims == 2 else grid.shape
    mask = np.zeros(shape, dtype=bool)
    axes = ("i", "j", "k")[:dims]
    for box in boxes:
        slices = []
        for ax, n in zip(axes, shape):
            lo, hi = box[ax]
            if not (1 <= lo <= hi <= n):
                raise SceneError(f"{ax}-range {box[ax]} outside [1, {n}]")
            slices.append(slice(lo - 1, hi))
        mask[tuple(slices)] = True
    return mask


def read_raster(path: str | Path) -> tuple[int, int, float, float, np.ndarray]:
    """Parse a scene raster file: header `a b dx dy`, then a rows x b heights."""
    lines = [ln for ln in Path(path).read_text().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise SceneError(f"{path}: empty raster file")
    head = lines[0].split()
    if len(head) != 4:
        raise SceneError(f"{path}: header must be 'a b dx dy', got {lines[0]!r}")
    try:
        a, b = int(head[0]), int(head[1])
        dx, dy = float(head[2]), float(head[3])
    except ValueError as exc:
        raise SceneError(f"{path}: bad header values: {exc}") from exc
    if len(lines) - 1 != a:
        raise SceneError(f"{path}: expected {a} raster rows, found {len(lines) - 1}")
    heights = np.empty((a, b), dtype=float)
    for r, line in enumerate(lines[1:], start=1):
        vals = line.split()
        if len(vals) != b:
            raise SceneError(f"{path}: row {r} has {len(vals)} columns, expected {b}")
        try:
            heights[r - 1] = [float(v) for v in vals]
        except ValueError as exc:
            raise SceneError(f"{path}: row {r}: {exc}") from exc
    return a, b, dx, dy, heights


def write_raster(path: str | Path, dx: float, dy: float, heights: np.ndarray) -> None:
    heights = np.asarray(heights, dtype=float)
    a, b = heights.shape
    rows = [f"{a} {b} {dx:g} {dy:g}"]
    rows += [" ".join(f"{h:g}" for h in heights[i]) for i in range(a)]
    Path(path).write_text("\n".join(rows) + "\n")


def load_scene(raster_file: str | Path, config: dict | str | Path) -> UrbanScene:
    """Build an :class:`UrbanScene` from a raster file and a scene config.

    The config (dict or JSON file path) supplies dz/z_max plus densities
    and the road / no-fly index boxes; the raster supplies dx/dy and the
    building heights.
    """
    if not isinstance(config, dict):
        try:
            config = json.loads(Path(config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SceneError(f"cannot read scene config {config}: {exc}") from exc
    a, b, dx, dy, heights = read_raster(raster_file)
    try:
        dz = float(config["dz"])
        z_max = float(config["z_max"])
    except KeyError as exc:
        raise SceneError(f"scene config missing key {exc}") from exc
    grid = GridSpec(dx=dx, dy=dy, dz=dz, x_max=a * dx, y_max=b * dy, z_max=z_max)
    road_mask = _boxes_to_mask(config.get("roads", []), grid, dims=2)
    no_fly = _boxes_to_mask(config.get("no_fly", []), grid, dims=3)
    return UrbanScene(
        grid=grid,
        building_height=heights,
        population_density=float(config.get("population_density", 0.0)),
        traffic_density=float(config.get("traffic_density", 0.0)),
        uav_density=float(config.get("uav_density", 0.0)),
        road_width=float(config.get("road_width", 3.5)),
        road_length_per_cell=float(config.get("road_length_per_cell", dx)),
        road_mask=road_mask,
        no_fly=no_fly,
    )
