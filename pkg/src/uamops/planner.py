"""Single-aircraft track planning over a binarized risk grid.

The planner runs best-first search on grid cells: path cost combines a
risk term (trapezoid of cell risks over segment length) and a transport
term (energy for horizontal/vertical distance), the destination estimate
prices transport along the straight line only, and the outermost shell
of a safety buffer box around every entered cell adds a penalty per
unsafe shell cell.  Cells that are themselves unsafe are never entered.
The raw cell-center track is then straightened by merging runs of cells
into safe axis-aligned boxes, and finally smoothed with a natural cubic
spline that falls back to the straight polyline wherever a sampled point
would leave checked-safe surroundings.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .grid import (CellIndex, GridError, GridSpec, Point, UrbanScene,
                   cell_center, point_to_cell)
from .risk import RiskMap


class PlanningError(Exception):
    """Base class for planning failures."""


class InfeasibleError(PlanningError):
    """No feasible path between origin and destination."""

    def __init__(self, message: str, nodes_explored: int = 0):
        super().__init__(f"{message} (explored {nodes_explored} nodes)")
        self.nodes_explored = nodes_explored


class AltitudeWindowError(PlanningError):
    """The aircraft/airspace altitude window contains no grid layer."""


class TrackRangeError(PlanningError):
    """Planned track exceeds the aircraft's maximum range."""


class OverloadError(ValueError):
    """Payload above the aircraft's maximum."""


@dataclass(frozen=True)
class AircraftPerformance:
    """eVTOL performance limits and energy economics (two-seat defaults)."""

    min_altitude: float = 90.0          # m
    max_altitude: float = 3000.0        # m
    max_range: float = 30000.0          # m
    max_takeoff_mass: float = 650.0     # kg
    empty_mass: float = 400.0           # kg
    max_payload: float = 220.0          # kg
    max_wind: float = 26.45             # m/s
    cruise_speed: float = 25.0          # m/s
    horizontal_energy: float = 5.135e3  # J per horizontal meter
    vertical_energy: float = 4.65e5     # J per vertical meter
    energy_cost: float = 5.96e-7        # currency per J
    full_load_factor: float = 1.56

    def __post_init__(self) -> None:
        if self.min_altitude >= self.max_altitude:
            raise ValueError("min_altitude must be below max_altitude")
        for name in ("max_range", "max_takeoff_mass", "empty_mass", "max_payload",
                     "max_wind", "cruise_speed", "horizontal_energy",
                     "vertical_energy", "energy_cost", "full_load_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def load_factor(self, payload_mass: float) -> float:
        if payload_mass < 0:
            raise ValueError("payload mass must be non-negative")
        if payload_mass > self.max_payload:
            raise OverloadError(
                f"payload {payload_mass} kg exceeds maximum {self.max_payload} kg")
        return 1.0 + (payload_mass / self.max_payload) * self.full_load_factor


@dataclass(frozen=True)
class TrackQuery:
    """One origin-destination planning request."""

    origin: CellIndex
    destination: CellIndex
    risk_weight: float = 0.5            # weight on the risk cost
    transport_weight: float = 0.5       # weight on the transport cost
    min_airspace_altitude: float = 30.0
    max_airspace_altitude: float = 300.0
    safety_clearance: float = 50.0      # m, required distance to buildings
    penalty_coefficient: float = 100.0  # cost per unsafe buffer-shell cell
    payload_mass: float = 0.0           # kg
    wind_speed: float = 0.0             # m/s, forecast along the track

    def __post_init__(self) -> None:
        if self.risk_weight < 0 or self.transport_weight < 0:
            raise ValueError("objective weights must be non-negative")
        if self.risk_weight == 0 and self.transport_weight == 0:
            raise ValueError("objective weights must not both be zero")
        if self.safety_clearance < 0:
            raise ValueError("safety clearance must be non-negative")


STAGES = ("shortest", "initial", "equivalent", "smoothed")


@dataclass
class Track:
    """Ordered waypoint list for one planning stage."""

    stage: str
    waypoints: np.ndarray               # (N, 3) float meters
    times: np.ndarray | None = None     # per-waypoint pass times, s
    objective: float | None = None      # search objective (grid stages)
    nodes_explored: int = 0

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)

    @property
    def n_waypoints(self) -> int:
        return len(self.waypoints)

    @property
    def length(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)


def buffer_size(clearance: float, grid: GridSpec) -> tuple[int, int, int]:
    """Odd buffer-box cell counts per axis for the given clearance."""
    if clearance < 0:
        raise ValueError("clearance must be non-negative")
    return tuple(int(math.ceil(clearance / s)) * 2 + 1
                 for s in (grid.dx, grid.dy, grid.dz))


def buffer_penalty(center: CellIndex, risk_map: RiskMap,
                   box: tuple[int, int, int]) -> int:
    """Unsafe cells on the outermost shell of the buffer box around a cell.

    Shell cells outside the grid count as unsafe.
    """
    grid = risk_map.grid
    if not grid.contains_index(center):
        raise ValueError(f"cell {center} outside grid")
    hx, hy, hz = ((n - 1) // 2 for n in box)
    i0, j0, k0 = center
    count = 0
    for di in range(-hx, hx + 1):
        for dj in range(-hy, hy + 1):
            for dk in range(-hz, hz + 1):
                if not (abs(di) == hx or abs(dj) == hy or abs(dk) == hz):
                    continue
                cell = (i0 + di, j0 + dj, k0 + dk)
                if not grid.contains_index(cell):
                    count += 1
                elif risk_map.is_unsafe(cell):
                    count += 1
    return count


def shell_penalty_grid(risk_map: RiskMap, box: tuple[int, int, int]) -> np.ndarray:
    """buffer_penalty for every cell at once, via a padded summed-area table."""
    hx, hy, hz = ((n - 1) // 2 for n in box)
    unsafe = np.pad(risk_map.unsafe.astype(np.int64),
                    ((hx, hx), (hy, hy), (hz, hz)), constant_values=1)
    sat = unsafe.cumsum(0).cumsum(1).cumsum(2)
    sat = np.pad(sat, ((1, 0), (1, 0), (1, 0)))

    def box_sum(rx: int, ry: int, rz: int) -> np.ndarray:
        # Sum over windows of half-extents (rx, ry, rz) centered per cell.
        a, b, c = risk_map.grid.shape
        lo_i = np.arange(a) + hx - rx
        hi_i = lo_i + 2 * rx + 1
        lo_j = np.arange(b) + hy - ry
        hi_j = lo_j + 2 * ry + 1
        lo_k = np.arange(c) + hz - rz
        hi_k = lo_k + 2 * rz + 1
        s = sat
        return (s[np.ix_(hi_i, hi_j, hi_k)] - s[np.ix_(lo_i, hi_j, hi_k)]
                - s[np.ix_(hi_i, lo_j, hi_k)] - s[np.ix_(hi_i, hi_j, lo_k)]
                + s[np.ix_(lo_i, lo_j, hi_k)] + s[np.ix_(lo_i, hi_j, lo_k)]
                + s[np.ix_(hi_i, lo_j, lo_k)] - s[np.ix_(lo_i, lo_j, lo_k)])

    total = box_sum(hx, hy, hz)
    if hx >= 1 and hy >= 1 and hz >= 1:
        total = total - box_sum(hx - 1, hy - 1, hz - 1)
    return total


def segment_risk_cost(p_a: Point, p_b: Point, risk_a: float, risk_b: float) -> float:
    """Trapezoid of endpoint risks over the segment length."""
    dist = math.dist(p_a, p_b)
    return 0.5 * (risk_a + risk_b) * dist


def segment_transport_cost(p_a: Point, p_b: Point, perf: AircraftPerformance,
                           payload_mass: float = 0.0) -> float:
    """Energy cost of one segment, split into horizontal and vertical legs."""
    horizontal = math.hypot(p_b[0] - p_a[0], p_b[1] - p_a[1])
    vertical = abs(p_b[2] - p_a[2])
    energy = perf.horizontal_energy * horizontal + perf.vertical_energy * vertical
    return energy * perf.energy_cost * perf.load_factor(payload_mass)


@dataclass(frozen=True)
class TrackCost:
    total: float
    risk_cost: float
    transport_cost: float


def densify_at_cell_boundaries(waypoints: np.ndarray,
                               grid: GridSpec) -> np.ndarray:
    """Insert the cell-boundary crossing points along every segment.

    Sparse tracks (merged or smoothed) would otherwise be costed only at
    their few waypoints, missing the risk of cells crossed in between.
    """
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        return pts
    sizes = (grid.dx, grid.dy, grid.dz)
    out = [pts[0]]
    for n in range(len(pts) - 1):
        p0, p1 = pts[n], pts[n + 1]
        cuts = set()
        for ax in range(3):
            delta = p1[ax] - p0[ax]
            if delta == 0:
                continue
            lo, hi = sorted((p0[ax], p1[ax]))
            for m in range(math.floor(lo / sizes[ax]) + 1,
                           math.ceil(hi / sizes[ax])):
                u = (m * sizes[ax] - p0[ax]) / delta
                if 0.0 < u < 1.0:
                    cuts.add(round(u, 12))
        for u in sorted(cuts):
            out.append(p0 + u * (p1 - p0))
        out.append(p1)
    return np.array(out)


def track_cost(track: Track, risk_map: RiskMap, perf: AircraftPerformance,
               query: TrackQuery) -> TrackCost:
    """Weighted risk and transport cost of a track.

    Risk is the trapezoid sum over the waypoints densified with every
    cell-boundary crossing, so tracks with different waypoint densities
    are charged for the same cells they actually fly through.
    """
    pts = densify_at_cell_boundaries(track.waypoints, risk_map.grid)
    risk_sum = 0.0
    transport_sum = 0.0
    risks = [risk_map.risk_at(point_to_cell(tuple(p), risk_map.grid)) for p in pts]
    for n in range(len(pts) - 1):
        a, b = tuple(pts[n]), tuple(pts[n + 1])
        if a == b:
            continue
        risk_sum += segment_risk_cost(a, b, risks[n], risks[n + 1])
        transport_sum += segment_transport_cost(a, b, perf, query.payload_mass)
    total = query.risk_weight * risk_sum + query.transport_weight * transport_sum
    return TrackCost(total=total, risk_cost=risk_sum, transport_cost=transport_sum)


def altitude_window(query: TrackQuery, perf: AircraftPerformance) -> tuple[float, float]:
    lo = max(perf.min_altitude, query.min_airspace_altitude)
    hi = min(perf.max_altitude, query.max_airspace_altitude)
    return lo, hi


def _layer_mask(grid: GridSpec, z_lo: float, z_hi: float) -> np.ndarray:
    z = grid.z_centers()
    return (z >= z_lo) & (z <= z_hi)


_OFFSETS = [(di, dj, dk)
            for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
            if (di, dj, dk) != (0, 0, 0)]


def plan_initial_track(query: TrackQuery, risk_map: RiskMap,
                       perf: AircraftPerformance, stage: str = "initial") -> Track:
    """Best-first search from origin to destination over grid cells.

    Accumulated cost of entering a neighbor adds the weighted segment
    risk/transport costs plus the buffer-shell penalty of the entered
    cell; the remaining-cost estimate prices the straight-line transport
    only (zero risk ahead), which never overestimates.
    """
    grid = risk_map.grid
    for name, idx in (("origin", query.origin), ("destination", query.destination)):
        if not grid.contains_index(idx):
            raise PlanningError(f"{name} {idx} outside grid {grid.shape}")
        if risk_map.is_unsafe(idx):
            raise InfeasibleError(f"{name} cell {idx} is unsafe")
    z_lo, z_hi = altitude_window(query, perf)
    layer_ok = _layer_mask(grid, z_lo, z_hi)
    if not layer_ok.any():
        raise AltitudeWindowError(
            f"altitude window [{z_lo}, {z_hi}] m contains no grid layer")
    for name, idx in (("origin", query.origin), ("destination", query.destination)):
        if not layer_ok[idx[2] - 1]:
            raise AltitudeWindowError(
                f"{name} layer k={idx[2]} outside altitude window [{z_lo}, {z_hi}] m")

    if query.origin == query.destination:
        return Track(stage=stage,
                     waypoints=np.array([cell_center(query.origin, grid)]),
                     objective=0.0, nodes_explored=0)

    a, b, c = grid.shape
    risk = risk_map.risk
    unsafe = risk_map.unsafe
    w_risk, w_trans = query.risk_weight, query.transport_weight
    mu = query.penalty_coefficient
    penalty = shell_penalty_grid(risk_map, buffer_size(query.safety_clearance, grid)) \
        if mu > 0 else np.zeros(grid.shape, dtype=np.int64)

    tau = perf.load_factor(query.payload_mass)
    unit = perf.energy_cost * tau
    steps = []
    for di, dj, dk in _OFFSETS:
        h_dist = math.hypot(di * grid.dx, dj * grid.dy)
        v_dist = abs(dk * grid.dz)
        steps.append((di, dj, dk, math.sqrt(h_dist**2 + v_dist**2),
                      (perf.horizontal_energy * h_dist
                       + perf.vertical_energy * v_dist) * unit))

    dest = query.destination
    dest_pt = cell_center(dest, grid)

    def estimate(i: int, j: int, k: int) -> float:
        h_dist = math.hypot((i - dest[0]) * grid.dx, (j - dest[1]) * grid.dy)
        v_dist = abs(k - dest[2]) * grid.dz
        return w_trans * (perf.horizontal_energy * h_dist
                          + perf.vertical_energy * v_dist) * unit

    start = query.origin
    g_best: dict[CellIndex, float] = {start: 0.0}
    parent: dict[CellIndex, CellIndex] = {}
    h0 = estimate(*start)
    open_heap: list[tuple[float, float, CellIndex]] = [(h0, h0, start)]
    closed: set[CellIndex] = set()
    explored = 0

    while open_heap:
        f, h, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        closed.add(cell)
        explored += 1
        if cell == dest:
            path = [cell]
            while path[-1] in parent:
                path.append(parent[path[-1]])
            path.reverse()
            waypoints = np.array([cell_center(p, grid) for p in path])
            track = Track(stage=stage, waypoints=waypoints,
                          objective=g_best[dest], nodes_explored=explored)
            if track.length > perf.max_range:
                raise TrackRangeError(
                    f"track length {track.length:.0f} m exceeds range "
                    f"{perf.max_range:.0f} m")
            return track
        i, j, k = cell
        g_here = g_best[cell]
        r_here = risk[i - 1, j - 1, k - 1]
        for di, dj, dk, dist, t_cost in steps:
            ni, nj, nk = i + di, j + dj, k + dk
            if not (1 <= ni <= a and 1 <= nj <= b and 1 <= nk <= c):
                continue
            if not layer_ok[nk - 1] or unsafe[ni - 1, nj - 1, nk - 1]:
                continue
            nxt = (ni, nj, nk)
            if nxt in closed:
                continue
            g_new = (g_here
                     + w_risk * 0.5 * (r_here + risk[ni - 1, nj - 1, nk - 1]) * dist
                     + w_trans * t_cost
                     + mu * penalty[ni - 1, nj - 1, nk - 1])
            if g_new < g_best.get(nxt, math.inf):
                g_best[nxt] = g_new
                parent[nxt] = cell
                h_n = estimate(ni, nj, nk)
                heapq.heappush(open_heap, (g_new + h_n, h_n, nxt))

    raise InfeasibleError(
        f"no path from {query.origin} to {query.destination}", explored)


def plan_shortest_track(query: TrackQuery, risk_map: RiskMap,
                        perf: AircraftPerformance) -> Track:
    """Risk-blind baseline: the same search with zero risk weight."""
    baseline = replace(query, risk_weight=0.0,
                       transport_weight=query.transport_weight or 1.0)
    return plan_initial_track(baseline, risk_map, perf, stage="shortest")


@dataclass
class TrackValidation:
    """Constraint report for one track; empty violations means all pass."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_track(track: Track, query: TrackQuery, perf: AircraftPerformance,
                   scene: UrbanScene) -> TrackValidation:
    """Check altitude window, building clearance, repeats, range, mass, wind."""
    report = TrackValidation()
    pts = track.waypoints
    if len(pts) == 0:
        report.violations.append("track has no waypoints")
        return report
    z_lo, z_hi = altitude_window(query, perf)
    for n, p in enumerate(pts):
        if not (z_lo <= p[2] <= z_hi):
            report.violations.append(
                f"waypoint {n} altitude {p[2]:.1f} m outside [{z_lo}, {z_hi}] m")
    obstacle = scene.obstacle_mask()
    if obstacle.any() and query.safety_clearance > 0:
        centers = np.argwhere(obstacle)
        coords = (centers + 0.5) * np.array([scene.grid.dx, scene.grid.dy,
                                             scene.grid.dz])
        dists, _ = cKDTree(coords).query(pts)
        for n in np.nonzero(dists < query.safety_clearance)[0]:
            report.violations.append(
                f"waypoint {int(n)} clearance {dists[n]:.1f} m below "
                f"{query.safety_clearance} m")
    seen = {tuple(np.round(p, 9)) for p in pts}
    if len(seen) != len(pts):
        report.violations.append("track repeats a waypoint")
    if track.length > perf.max_range:
        report.violations.append(
            f"length {track.length:.0f} m exceeds range {perf.max_range:.0f} m")
    if perf.empty_mass + perf.max_payload > perf.max_takeoff_mass:
        report.violations.append("empty mass plus maximum payload exceeds MTOM")
    if query.wind_speed > perf.max_wind:
        report.violations.append(
            f"wind {query.wind_speed} m/s exceeds tolerance {perf.max_wind} m/s")
    return report


@dataclass(frozen=True)
class _Box:
    ilo: int
    ihi: int
    jlo: int
    jhi: int
    klo: int
    khi: int

    def expanded(self, cell: CellIndex) -> "_Box":
        i, j, k = cell
        return _Box(min(self.ilo, i), max(self.ihi, i), min(self.jlo, j),
                    max(self.jhi, j), min(self.klo, k), max(self.khi, k))

    def all_clear(self, clear: np.ndarray) -> bool:
        return bool(clear[self.ilo - 1:self.ihi, self.jlo - 1:self.jhi,
                          self.klo - 1:self.khi].all())

    def max_risk(self, risk: np.ndarray) -> float:
        return float(risk[self.ilo - 1:self.ihi, self.jlo - 1:self.jhi,
                          self.klo - 1:self.khi].max())

    def bounds(self, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([(self.ilo - 1) * grid.dx, (self.jlo - 1) * grid.dy,
                       (self.klo - 1) * grid.dz])
        hi = np.array([self.ihi * grid.dx, self.jhi * grid.dy, self.khi * grid.dz])
        return lo, hi

    def center(self, grid: GridSpec) -> np.ndarray:
        lo, hi = self.bounds(grid)
        return (lo + hi) / 2.0


def clearance_mask(risk_map: RiskMap) -> np.ndarray:
    """Cells whose whole 3x3x3 neighborhood is in-grid and safe."""
    padded = np.pad(~risk_map.unsafe, 1, constant_values=False)
    clear = np.ones(risk_map.grid.shape, dtype=bool)
    a, b, c = risk_map.grid.shape
    for di in range(3):
        for dj in range(3):
            for dk in range(3):
                clear &= padded[di:di + a, dj:dj + b, dk:dk + c]
    return clear


def merge_to_equivalent(track: Track, risk_map: RiskMap) -> Track:
    """Merge runs of track cells into maximal safe boxes and re-route.

    Consecutive cells join the current box while every box cell keeps a
    fully safe 3x3x3 surrounding (so the straightened line never skims
    an unsafe cell) and no swallowed cell is riskier than the cells the
    track itself visits (so straightening never cuts across high-risk
    ground the search paid to avoid).  The rebuilt track runs from the
    origin through one gate point per box transition: gate coordinates
    are the midpoints of the adjacent box centers, clamped into the
    boxes' contact region (a shared face, edge or corner).
    """
    grid = risk_map.grid
    cells = [point_to_cell(tuple(p), grid) for p in track.waypoints]
    if len(cells) <= 1:
        return Track(stage="equivalent", waypoints=track.waypoints.copy())
    clear = clearance_mask(risk_map)
    boxes: list[_Box] = []
    current = _Box(cells[0][0], cells[0][0], cells[0][1], cells[0][1],
                   cells[0][2], cells[0][2])
    run_risk = risk_map.risk_at(cells[0])
    for cell in cells[1:]:
        grown = current.expanded(cell)
        cell_risk = risk_map.risk_at(cell)
        cap = max(run_risk, cell_risk) * (1 + 1e-9) + 1e-300
        if grown.all_clear(clear) and grown.max_risk(risk_map.risk) <= cap:
            current = grown
            run_risk = max(run_risk, cell_risk)
        else:
            boxes.append(current)
            current = _Box(cell[0], cell[0], cell[1], cell[1], cell[2], cell[2])
            run_risk = cell_risk
    boxes.append(current)

    points = [np.asarray(track.waypoints[0], dtype=float)]
    for prev, nxt in zip(boxes, boxes[1:]):
        lo_a, hi_a = prev.bounds(grid)
        lo_b, hi_b = nxt.bounds(grid)
        contact_lo = np.maximum(lo_a, lo_b)
        contact_hi = np.minimum(hi_a, hi_b)
        gate = np.clip((prev.center(grid) + nxt.center(grid)) / 2.0,
                       contact_lo, contact_hi)
        if not np.allclose(gate, points[-1]):
            points.append(gate)
    end = np.asarray(track.waypoints[-1], dtype=float)
    if not np.allclose(end, points[-1]):
        points.append(end)
    return Track(stage="equivalent", waypoints=np.array(points))


def _sample_ok(point: np.ndarray, risk_map: RiskMap,
               clear: np.ndarray | None = None) -> bool:
    """All cells within one step of the sample's cell are safe and in-grid."""
    grid = risk_map.grid
    try:
        i, j, k = point_to_cell(tuple(point), grid)
    except GridError:
        return False
    if clear is not None:
        return bool(clear[i - 1, j - 1, k - 1])
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                cell = (i + di, j + dj, k + dk)
                if not grid.contains_index(cell) or risk_map.is_unsafe(cell):
                    return False
    return True


def smooth_track(track: Track, risk_map: RiskMap,
                 step: float | None = None) -> Track:
    """Natural cubic spline over the waypoints, chord-length parameterized.

    Samples are spaced `step` meters apart (default dx/2) along the
    parameter.  Any spline interval producing a sample whose 3x3x3 cell
    surroundings are not fully safe is replaced by the straight polyline
    between its knots.
    """
    pts = np.asarray(track.waypoints, dtype=float)
    if len(pts) < 2:
        return Track(stage="smoothed", waypoints=pts.copy())
    step = risk_map.grid.dx / 2.0 if step is None else step
    chord = np.concatenate([[0.0], np.cumsum(
        np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    total = chord[-1]
    n_samples = max(int(math.ceil(total / step)), 1)
    s = np.linspace(0.0, total, n_samples + 1)
    if len(pts) == 2:
        samples = np.outer(1 - s / total, pts[0]) + np.outer(s / total, pts[1])
        return Track(stage="smoothed", waypoints=samples)
    spline = CubicSpline(chord, pts, axis=0, bc_type="natural")
    samples = spline(s)
    interval = np.clip(np.searchsorted(chord, s, side="right") - 1,
                       0, len(pts) - 2)
    clear = clearance_mask(risk_map)
    bad = {int(interval[n]) for n in range(len(s))
           if not _sample_ok(samples[n], risk_map, clear)}
    if bad:
        linear = np.empty_like(samples)
        for m in range(len(pts) - 1):
            span = chord[m + 1] - chord[m]
            sel = interval == m
            frac = (s[sel] - chord[m]) / span if span > 0 else 0.0
            linear[sel] = np.outer(1 - frac, pts[m]) + np.outer(frac, pts[m + 1])
        for m in bad:
            samples[interval == m] = linear[interval == m]
        samples[-1] = pts[-1]
    return Track(stage="smoothed", waypoints=samples)


def plan_stages(query: TrackQuery, risk_map: RiskMap, perf: AircraftPerformance,
                smooth_step: float | None = None) -> dict[str, Track]:
    """Run the full chain: shortest baseline, initial, equivalent, smoothed."""
    initial = plan_initial_track(query, risk_map, perf)
    return {
        "shortest": plan_shortest_track(query, risk_map, perf),
        "initial": initial,
        "equivalent": (equivalent := merge_to_equivalent(initial, risk_map)),
        "smoothed": smooth_track(equivalent, risk_map, step=smooth_step),
    }
