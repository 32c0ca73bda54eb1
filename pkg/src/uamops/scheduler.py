"""Conflict-free multi-aircraft scheduling over a vertiport route network.

Flights follow fixed tracks at fixed speed, so each flight's cell
occupancy is a rigid time template shifted by its departure.  Conflicts
(two aircraft inside the same detection cell with overlapping intervals)
are resolved by a sequential sweep: flights are processed in a given
order and each one receives the minimal quantized delay clearing all
previously processed flights, or is cancelled when its delay cap or the
service end would be breached.  A genetic optimizer with annealing-based
selection searches over resolution orders and pre-delays to minimize the
weighted sum of average delay and (negated) operated flights; a plain
roulette GA is kept as the comparison baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import CellIndex, GridSpec, point_to_cell


class ScenarioError(ValueError):
    """Fleet scenario file or parameters are invalid."""


class PlanError(RuntimeError):
    """Base flight plan violates the schedule regulations."""


class OptimizationError(RuntimeError):
    """The optimizer never produced a feasible individual."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def daily_flight_count(service_start: float, service_end: float, length: float,
                       speed: float, outbound_gap: float, inbound_gap: float,
                       interference: float) -> int:
    """Even number of flights one aircraft can fly in the service window."""
    if service_end <= service_start:
        raise ScenarioError("service_end must be after service_start")
    if speed <= 0:
        raise ScenarioError("speed must be positive")
    denom = 2 * round_half_up(length / speed) + outbound_gap + inbound_gap \
        + interference
    if denom <= 0:
        raise ScenarioError("round-trip time must be positive")
    return int(math.floor((service_end - service_start) / denom)) * 2


def waypoint_times(waypoints: np.ndarray, departure: float,
                   speed: float) -> np.ndarray:
    """Pass time of each waypoint at constant speed along the polyline."""
    if speed <= 0:
        raise ScenarioError("speed must be positive")
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return departure + np.concatenate([[0.0], np.cumsum(seg)]) / speed


@dataclass(frozen=True)
class Vertiport:
    name: str
    x: float
    y: float


@dataclass(frozen=True)
class Route:
    route_id: str
    origin: str
    destination: str
    length: float
    waypoints: np.ndarray  # (N, 3), origin -> destination

    def geometric_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0),
                                           axis=1)))


@dataclass(frozen=True)
class RouteNetwork:
    vertiports: dict[str, Vertiport]
    routes: dict[str, Route]

    def __post_init__(self) -> None:
        for route in self.routes.values():
            for name in (route.origin, route.destination):
                if name not in self.vertiports:
                    raise ScenarioError(
                        f"route {route.route_id} references unknown vertiport "
                        f"{name}")
            geom = route.geometric_length()
            if geom > 0 and abs(geom - route.length) > 0.01 * route.length:
                raise ScenarioError(
                    f"route {route.route_id} length {route.length} differs "
                    f"from geometry {geom:.1f} by more than 1%")


@dataclass(frozen=True)
class FlightSpec:
    """One planned flight: aircraft g, per-aircraft index f (1-based)."""

    aircraft: int
    index: int
    route_id: str
    direction: str                    # outbound | inbound
    departure: float                  # planned D, s after service start
    delay_cap: float                  # max admissible delay, s

    def __post_init__(self) -> None:
        if self.direction not in ("outbound", "inbound"):
            raise ScenarioError(f"bad direction {self.direction!r}")
        if self.delay_cap < 0 or self.departure < 0:
            raise ScenarioError("departure and delay cap must be non-negative")


@dataclass(frozen=True)
class FleetScenario:
    grid: GridSpec
    network: RouteNetwork
    speeds: dict[int, float]          # aircraft id -> cruise speed
    flights: tuple[FlightSpec, ...]   # scenario order defines genome slots
    service_start: float = 0.0
    service_end: float = 28800.0
    outbound_gap: float = 240.0       # turnaround after odd flights
    inbound_gap: float = 360.0        # turnaround after even flights
    interference: float = 0.3
    delay_quantum: float = 10.0
    detection_halfwidth: int = 1      # cells each side of the trajectory

    def __post_init__(self) -> None:
        if self.outbound_gap >= self.inbound_gap:
            raise ScenarioError("outbound gap must be below inbound gap")
        if self.delay_quantum <= 0:
            raise ScenarioError("delay quantum must be positive")
        if self.service_end <= self.service_start:
            raise ScenarioError("service_end must be after service_start")
        for flight in self.flights:
            if flight.aircraft not in self.speeds:
                raise ScenarioError(f"flight references unknown aircraft "
                                    f"{flight.aircraft}")
            if flight.route_id not in self.network.routes:
                raise ScenarioError(f"flight references unknown route "
                                    f"{flight.route_id}")

    @property
    def n_aircraft(self) -> int:
        return len(self.speeds)

    def turnaround_gap(self, flight_index: int) -> float:
        return self.outbound_gap if flight_index % 2 == 1 else self.inbound_gap

    def flight_time(self, flight: FlightSpec) -> int:
        route = self.network.routes[flight.route_id]
        return round_half_up(route.length / self.speeds[flight.aircraft])

    def flight_waypoints(self, flight: FlightSpec) -> np.ndarray:
        pts = self.network.routes[flight.route_id].waypoints
        return pts if flight.direction == "outbound" else pts[::-1]


@dataclass(frozen=True)
class FlightPlan:
    """Realized state of one flight after scheduling."""

    spec: FlightSpec
    delay: float
    operates: bool

    @property
    def start(self) -> float:
        return self.spec.departure + self.delay


@dataclass(frozen=True)
class Schedule:
    scenario: FleetScenario
    flights: tuple[FlightPlan, ...]
    order: tuple[int, ...]            # flight slots in resolution order

    def arrival(self, plan: FlightPlan) -> float:
        return plan.start + self.scenario.flight_time(plan.spec)

    def total_delay(self) -> float:
        return sum(p.delay for p in self.flights if p.operates)

    def operating_count(self) -> int:
        return sum(1 for p in self.flights if p.operates)


def objective(schedule: Schedule, delay_weight: float, flights_weight: float,
              n_aircraft: int | None = None) -> tuple[float, float, int]:
    """Weighted objective W plus its components (average delay, flights)."""
    g = schedule.scenario.n_aircraft if n_aircraft is None else n_aircraft
    t_d = schedule.total_delay() / g
    s = schedule.operating_count()
    return delay_weight * t_d - flights_weight * s, t_d, s


Intervals = list[tuple[float, float]]
Occupancy = dict[CellIndex, Intervals]


def _merge_intervals(intervals: Intervals) -> Intervals:
    intervals = sorted(intervals)
    merged: Intervals = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _polyline_cells(waypoints: np.ndarray, times: np.ndarray,
                    grid: GridSpec) -> list[tuple[CellIndex, float, float]]:
    """Timed cells traversed by the polyline, in passage order."""
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    if len(pts) == 1:
        return [(point_to_cell(tuple(pts[0]), grid), float(times[0]),
                 float(times[0]))]
    out: list[tuple[CellIndex, float, float]] = []
    sizes = (grid.dx, grid.dy, grid.dz)
    for n in range(len(pts) - 1):
        p0, p1 = pts[n], pts[n + 1]
        t0, t1 = float(times[n]), float(times[n + 1])
        cuts = {0.0, 1.0}
        for ax in range(3):
            delta = p1[ax] - p0[ax]
            if delta == 0:
                continue
            lo, hi = sorted((p0[ax], p1[ax]))
            m0 = math.floor(lo / sizes[ax]) + 1
            m1 = math.ceil(hi / sizes[ax]) - 1
            for m in range(m0, m1 + 1):
                u = (m * sizes[ax] - p0[ax]) / delta
                if 0.0 < u < 1.0:
                    cuts.add(u)
        us = sorted(cuts)
        for u0, u1 in zip(us, us[1:]):
            mid = p0 + 0.5 * (u0 + u1) * (p1 - p0)
            cell = point_to_cell(tuple(mid), grid)
            t_in = t0 + u0 * (t1 - t0)
            t_out = t0 + u1 * (t1 - t0)
            if out and out[-1][0] == cell:
                out[-1] = (cell, out[-1][1], t_out)
            else:
                out.append((cell, t_in, t_out))
    return out


def cell_occupancy(waypoints: np.ndarray, departure: float, speed: float,
                   grid: GridSpec, halfwidth: int = 1) -> Occupancy:
    """Occupied detection cells with entry/exit intervals for one flight.

    Every cell within `halfwidth` of a traversed cell inherits that
    cell's interval; intervals per cell are merged.  halfwidth=0 gives
    the raw traversal cells.
    """
    times = waypoint_times(waypoints, departure, speed)
    raw: dict[CellIndex, Intervals] = {}
    offsets = [(di, dj, dk)
               for di in range(-halfwidth, halfwidth + 1)
               for dj in range(-halfwidth, halfwidth + 1)
               for dk in range(-halfwidth, halfwidth + 1)]
    for cell, t_in, t_out in _polyline_cells(waypoints, times, grid):
        i, j, k = cell
        for di, dj, dk in offsets:
            target = (i + di, j + dj, k + dk)
            if grid.contains_index(target):
                raw.setdefault(target, []).append((t_in, t_out))
    return {cell: _merge_intervals(ints) for cell, ints in raw.items()}


def detect_conflict(zone: Occupancy, traversal: Occupancy) \
        -> tuple[CellIndex, tuple[float, float]] | None:
    """Earliest cell where the detection zone meets the other trajectory.

    `zone` is one flight's dilated occupancy, `traversal` the other
    flight's raw traversal cells; a conflict is a shared cell with
    overlapping time intervals.  Dilating either flight detects the same
    encounters, so the argument order does not change the verdict.
    """
    best: tuple[float, CellIndex, tuple[float, float]] | None = None
    for cell, ints_a in zone.items():
        ints_b = traversal.get(cell)
        if not ints_b:
            continue
        for a0, a1 in ints_a:
            for b0, b1 in ints_b:
                if a0 <= b1 and b0 <= a1:
                    start = max(a0, b0)
                    key = (start, cell, (start, min(a1, b1)))
                    if best is None or key < best:
                        best = key
    if best is None:
        return None
    return best[1], best[2]


def conflict_windows(zone: Occupancy, traversal: Occupancy) -> Intervals:
    """Forbidden values of (start_b - start_a) for zero-departure templates.

    Flights using templates a (zone) and b (traversal) conflict exactly
    when the difference of their starts falls inside one of the returned
    closed intervals.
    """
    windows: Intervals = []
    for cell, ints_a in zone.items():
        ints_b = traversal.get(cell)
        if not ints_b:
            continue
        for a0, a1 in ints_a:
            for b0, b1 in ints_b:
                windows.append((a0 - b1, a1 - b0))
    return _merge_intervals(windows)


class _TemplateCache:
    """Occupancy templates and pairwise conflict windows per route/speed."""

    def __init__(self, scenario: FleetScenario):
        self.scenario = scenario
        self._zone: dict[tuple[str, str, float], Occupancy] = {}
        self._raw: dict[tuple[str, str, float], Occupancy] = {}
        self._windows: dict[tuple, Intervals] = {}
        self._flight_keys = [
            (f.route_id, f.direction, self.scenario.speeds[f.aircraft])
            for f in scenario.flights
        ]

    def _template(self, key: tuple[str, str, float], halfwidth: int,
                  store: dict) -> Occupancy:
        if key not in store:
            route_id, direction, speed = key
            pts = self.scenario.network.routes[route_id].waypoints
            if direction == "inbound":
                pts = pts[::-1]
            store[key] = cell_occupancy(pts, 0.0, speed, self.scenario.grid,
                                        halfwidth)
        return store[key]

    def zone(self, key: tuple[str, str, float]) -> Occupancy:
        return self._template(key, self.scenario.detection_halfwidth,
                              self._zone)

    def raw(self, key: tuple[str, str, float]) -> Occupancy:
        return self._template(key, 0, self._raw)

    def windows(self, slot_a: int, slot_b: int) -> Intervals:
        key = (self._flight_keys[slot_a], self._flight_keys[slot_b])
        if key not in self._windows:
            self._windows[key] = conflict_windows(self.zone(key[0]),
                                                  self.raw(key[1]))
        return self._windows[key]


def resolve_pairwise(scenario: FleetScenario, slot: int, pre_delay: float,
                     resolved: list[tuple[int, float]],
                     cache: _TemplateCache,
                     min_start: float | None = None) -> tuple[float, bool]:
    """Minimal quantized delay for one flight against resolved predecessors.

    Returns (delay, operates).  The flight is cancelled when the needed
    delay exceeds its cap or its arrival would pass the service end.
    Flights of the same aircraft are separated by the turnaround gap, not
    by cell conflicts, and are skipped here.
    """
    spec = scenario.flights[slot]
    q = scenario.delay_quantum
    base = spec.departure + pre_delay
    start = base if min_start is None or min_start <= base else \
        base + q * math.ceil((min_start - base) / q - 1e-12)
    forbidden: Intervals = []
    for other_slot, other_start in resolved:
        if scenario.flights[other_slot].aircraft == spec.aircraft:
            continue
        windows = cache.windows(other_slot, slot)
        if windows:
            forbidden.extend((lo + other_start, hi + other_start)
                             for lo, hi in windows)
    forbidden.sort()
    # One forward pass suffices: pushes only move the start later and the
    # intervals are visited in ascending order of their left edge.
    for lo, hi in forbidden:
        if lo > start:
            break
        if hi >= start:
            start = base + q * (math.floor((hi - base) / q) + 1)
    delay = start - spec.departure
    arrival = start + scenario.flight_time(spec)
    if delay > spec.delay_cap + 1e-9 or arrival > scenario.service_end + 1e-9:
        return 0.0, False
    return delay, True


def decode_schedule(scenario: FleetScenario, order: np.ndarray,
                    pre_delays: np.ndarray,
                    cache: _TemplateCache | None = None) -> Schedule:
    """Sweep flights in the given order, resolving each against its past.

    Each flight starts from its planned departure plus its pre-delay,
    gets pushed by whole quanta until clear of every already-resolved
    flight, and must also honor the turnaround gap after the previous
    operating flight of its aircraft when that flight is already fixed.
    """
    cache = cache or _TemplateCache(scenario)
    n = len(scenario.flights)
    if sorted(order) != list(range(n)):
        raise ScenarioError("order must be a permutation of the flight slots")
    results: dict[int, tuple[float, bool]] = {}
    resolved: list[tuple[int, float]] = []
    by_aircraft: dict[int, list[int]] = {}
    for slot, spec in enumerate(scenario.flights):
        by_aircraft.setdefault(spec.aircraft, []).append(slot)
    for slots in by_aircraft.values():
        slots.sort(key=lambda s: scenario.flights[s].index)

    for slot in order:
        spec = scenario.flights[slot]
        min_start = None
        prior = [s for s in by_aircraft[spec.aircraft]
                 if scenario.flights[s].index < spec.index]
        for s in reversed(prior):
            done = results.get(s)
            if done is not None and not done[1]:
                continue  # cancelled flights do not constrain the gap
            prev_spec = scenario.flights[s]
            # Unresolved predecessors bound with their pre-delay; if they
            # slip further, the regulation audit rejects the individual.
            prev_delay = done[0] if done is not None else float(pre_delays[s])
            prev_arrival = prev_spec.departure + prev_delay \
                + scenario.flight_time(prev_spec)
            min_start = prev_arrival + scenario.turnaround_gap(prev_spec.index)
            break
        delay, operates = resolve_pairwise(
            scenario, slot, float(pre_delays[slot]), resolved, cache,
            min_start=min_start)
        results[slot] = (delay, operates)
        if operates:
            resolved.append((slot, spec.departure + delay))

    plans = tuple(FlightPlan(spec=scenario.flights[slot],
                             delay=results[slot][0],
                             operates=results[slot][1])
                  for slot in range(n))
    return Schedule(scenario=scenario, flights=plans, order=tuple(order))


def departure_order(scenario: FleetScenario) -> np.ndarray:
    """Default resolution order: planned departure, then aircraft, then f."""
    keyed = sorted(range(len(scenario.flights)),
                   key=lambda s: (scenario.flights[s].departure,
                                  scenario.flights[s].aircraft,
                                  scenario.flights[s].index))
    return np.array(keyed, dtype=int)


def build_initial_schedule(scenario: FleetScenario,
                           order: np.ndarray | None = None,
                           cache: _TemplateCache | None = None) -> Schedule:
    """Zero-pre-delay sweep; raises PlanError if the base plan is invalid."""
    order = departure_order(scenario) if order is None else order
    schedule = decode_schedule(scenario, order,
                               np.zeros(len(scenario.flights)), cache)
    problems = audit_regulations(schedule)
    if problems:
        raise PlanError("base plan violates regulations: " + problems[0])
    return schedule


def audit_conflicts(schedule: Schedule) -> list[str]:
    """Brute-force occupancy scan over every pair of operating flights.

    Recomputes every flight's detection zone and raw traversal from its
    waypoints, independently of the sweep's cached window machinery.
    """
    scenario = schedule.scenario
    occupancies = []
    for plan in schedule.flights:
        if not plan.operates:
            continue
        args = (scenario.flight_waypoints(plan.spec), plan.start,
                scenario.speeds[plan.spec.aircraft], scenario.grid)
        occupancies.append((plan,
                            cell_occupancy(*args,
                                           scenario.detection_halfwidth),
                            cell_occupancy(*args, 0)))
    problems = []
    for a in range(len(occupancies)):
        for b in range(a + 1, len(occupancies)):
            plan_a, zone_a, _ = occupancies[a]
            plan_b, _, raw_b = occupancies[b]
            if plan_a.spec.aircraft == plan_b.spec.aircraft:
                continue
            hit = detect_conflict(zone_a, raw_b)
            if hit is not None:
                cell, window = hit
                problems.append(
                    f"flights g{plan_a.spec.aircraft}f{plan_a.spec.index} and "
                    f"g{plan_b.spec.aircraft}f{plan_b.spec.index} share cell "
                    f"{cell} during {window}")
    return problems


def audit_regulations(schedule: Schedule) -> list[str]:
    """Turnaround gaps, delay caps and service-end checks for the schedule."""
    scenario = schedule.scenario
    problems = []
    by_aircraft: dict[int, list[FlightPlan]] = {}
    for plan in schedule.flights:
        by_aircraft.setdefault(plan.spec.aircraft, []).append(plan)
    for aircraft, plans in sorted(by_aircraft.items()):
        plans.sort(key=lambda p: p.spec.index)
        operating = [p for p in plans if p.operates]
        for prev, nxt in zip(operating, operating[1:]):
            gap = scenario.turnaround_gap(prev.spec.index)
            if nxt.start < schedule.arrival(prev) + gap - 1e-9:
                problems.append(
                    f"aircraft {aircraft}: flight {nxt.spec.index} departs "
                    f"{nxt.start:.0f}s, under the {gap:.0f}s gap after flight "
                    f"{prev.spec.index}")
        for plan in operating:
            if plan.delay > plan.spec.delay_cap + 1e-9:
                problems.append(
                    f"aircraft {aircraft}: flight {plan.spec.index} delay "
                    f"{plan.delay:.0f}s exceeds cap {plan.spec.delay_cap:.0f}s")
            if plan.delay < 0:
                problems.append(
                    f"aircraft {aircraft}: flight {plan.spec.index} has a "
                    f"negative delay")
        if operating:
            last = operating[-1]
            if schedule.arrival(last) > scenario.service_end + 1e-9:
                problems.append(
                    f"aircraft {aircraft}: last arrival "
                    f"{schedule.arrival(last):.0f}s passes service end "
                    f"{scenario.service_end:.0f}s")
    return problems


@dataclass(frozen=True)
class SoaConfig:
    """Optimizer settings; annealing fields are ignored by the plain GA."""

    delay_weight: float = 0.6         # on average delay
    flights_weight: float = 0.4       # on operated flights (subtracted)
    population: int = 50
    generations: int = 200
    initial_temperature: float = 100.0
    cooling: float = 0.99
    final_temperature: float = 0.1
    elite_fraction: float = 0.1
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.cooling < 1:
            raise ScenarioError("cooling factor must be in (0, 1)")
        if self.final_temperature >= self.initial_temperature:
            raise ScenarioError("final temperature must be below initial")
        if self.generations <= 0 or self.population <= 1:
            raise ScenarioError("need at least 2 individuals and 1 generation")

    def temperature(self, generation: int) -> float:
        return max(self.initial_temperature * self.cooling**generation,
                   self.final_temperature)


@dataclass
class ScheduleGenome:
    """Resolution position and pre-delay per flight slot."""

    position: np.ndarray              # permutation of 0..n-1
    delay: np.ndarray                 # seconds, quantized

    def copy(self) -> "ScheduleGenome":
        return ScheduleGenome(self.position.copy(), self.delay.copy())

    def resolution_order(self) -> np.ndarray:
        return np.argsort(self.position, kind="stable")

    def validate(self, caps: np.ndarray, quantum: float) -> bool:
        pos_ok = sorted(self.position.tolist()) == list(range(len(self.position)))
        cap_ok = bool(np.all(self.delay >= 0) and np.all(self.delay <= caps + 1e-9))
        quanta = self.delay / quantum
        quant_ok = bool(np.allclose(quanta, np.round(quanta)))
        return pos_ok and cap_ok and quant_ok


def _repair_permutation(position: np.ndarray) -> np.ndarray:
    """Replace duplicate positions with the missing values, in slot order."""
    n = len(position)
    seen: set[int] = set()
    duplicates = []
    for slot in range(n):
        p = int(position[slot])
        if p in seen or not 0 <= p < n:
            duplicates.append(slot)
        else:
            seen.add(p)
    missing = sorted(set(range(n)) - seen)
    fixed = position.copy()
    for slot, value in zip(duplicates, missing):
        fixed[slot] = value
    return fixed


def crossover(parent_a: ScheduleGenome, parent_b: ScheduleGenome,
              below_mean: bool, rng: np.random.Generator,
              caps: np.ndarray, quantum: float) \
        -> tuple[ScheduleGenome, ScheduleGenome]:
    """Single-point (below-mean pairs) or two-point crossover, repaired."""
    n = len(parent_a.position)
    if below_mean:
        cut = int(rng.integers(0, n))
        spans = [(cut, n)]
    else:
        c1, c2 = sorted(int(rng.integers(0, n)) for _ in range(2))
        spans = [(c1, c2)]
    child_a, child_b = parent_a.copy(), parent_b.copy()
    for lo, hi in spans:
        child_a.position[lo:hi] = parent_b.position[lo:hi]
        child_b.position[lo:hi] = parent_a.position[lo:hi]
        child_a.delay[lo:hi] = parent_b.delay[lo:hi]
        child_b.delay[lo:hi] = parent_a.delay[lo:hi]
    for child in (child_a, child_b):
        child.position = _repair_permutation(child.position)
        child.delay = np.clip(child.delay, 0.0, caps)
        child.delay = np.round(child.delay / quantum) * quantum
    return child_a, child_b


def _resample_gene(genome: ScheduleGenome, gene: int,
                   rng: np.random.Generator, caps: np.ndarray,
                   quantum: float) -> None:
    """Genes 0..n-1 are positions (resampled by swap), n..2n-1 delays."""
    n = len(genome.position)
    if gene < n:
        new_pos = int(rng.integers(0, n))
        holder = int(np.nonzero(genome.position == new_pos)[0][0])
        genome.position[holder] = genome.position[gene]
        genome.position[gene] = new_pos
    else:
        slot = gene - n
        steps = int(caps[slot] // quantum)
        genome.delay[slot] = float(rng.integers(0, steps + 1)) * quantum


def mutate(genome: ScheduleGenome, below_mean: bool, rate: float,
           rng: np.random.Generator, caps: np.ndarray,
           quantum: float) -> ScheduleGenome:
    """Multi-point mutation for below-mean individuals, else single-point."""
    out = genome.copy()
    n_genes = 2 * len(out.position)
    if below_mean:
        for gene in range(n_genes):
            if rng.random() < rate:
                _resample_gene(out, gene, rng, caps, quantum)
    elif rng.random() < rate:
        _resample_gene(out, int(rng.integers(0, n_genes)), rng, caps, quantum)
    return out


def normalize_fitness(values: np.ndarray,
                      feasible: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map objectives to [0, 1] (1 = best) and zero out infeasible ones."""
    values = np.asarray(values, dtype=float)
    w_max, w_min = values.max(), values.min()
    if w_max == w_min:
        normalized = np.ones_like(values)
    else:
        normalized = (w_max - values) / (w_max - w_min)
    return normalized, np.where(np.asarray(feasible, dtype=bool),
                                normalized, 0.0)


def sa_accept_worse(q_better: float, q_worse: float, temperature: float,
                    rng: np.random.Generator) -> bool:
    """Keep the worse of a pair with probability exp((Q_w - Q_b)/T)."""
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp((q_worse - q_better) / temperature))


Pool = list[tuple[ScheduleGenome, float]]  # (individual, fitness)


def sa_select(population: list[ScheduleGenome], fitness: np.ndarray,
              feasible: np.ndarray, generation: int, config: SoaConfig,
              rng: np.random.Generator) -> Pool:
    """Annealing selection over the low-fitness tail, elitist replenishment.

    Infeasible individuals are dropped; the weakest tenth is paired off
    and each pair keeps one member by the annealing rule; the pool is
    refilled with copies of the fittest individuals.
    """
    n = len(population)
    alive = [idx for idx in range(n) if feasible[idx]]
    if not alive:
        raise OptimizationError("no feasible individual to select from")
    ranked = sorted(alive, key=lambda idx: (-fitness[idx], idx))
    n_low = min(len(ranked), max(2, round(0.1 * len(ranked))))
    low = ranked[len(ranked) - n_low:]
    keep = ranked[:len(ranked) - n_low]
    shuffled = list(low)
    rng.shuffle(shuffled)
    temperature = config.temperature(generation)
    survivors = []
    for a, b in zip(shuffled[::2], shuffled[1::2]):
        better, worse = (a, b) if fitness[a] >= fitness[b] else (b, a)
        survivors.append(
            worse if sa_accept_worse(fitness[better], fitness[worse],
                                     temperature, rng) else better)
    if len(shuffled) % 2:
        survivors.append(shuffled[-1])
    pool = [(population[idx], float(fitness[idx])) for idx in keep + survivors]
    refill = 0
    while len(pool) < n:
        idx = ranked[refill % len(ranked)]
        pool.append((population[idx].copy(), float(fitness[idx])))
        refill += 1
    return pool


def _roulette_select(population: list[ScheduleGenome], fitness: np.ndarray,
                     feasible: np.ndarray, rng: np.random.Generator) -> Pool:
    """Fitness-proportional sampling with replacement (uniform if all zero)."""
    if not feasible.any():
        raise OptimizationError("no feasible individual to select from")
    weights = np.where(feasible, fitness, 0.0)
    total = weights.sum()
    probs = weights / total if total > 0 else \
        np.asarray(feasible, dtype=float) / feasible.sum()
    picks = rng.choice(len(population), size=len(population), p=probs)
    return [(population[int(idx)], float(fitness[int(idx)])) for idx in picks]


@dataclass
class OptimizationResult:
    algorithm: str
    best_schedule: Schedule
    best_genome: ScheduleGenome
    best_objective: float
    average_delay: float
    operating: int
    trace: list[tuple[int, float, float, int]]  # (generation, W, T_d, S)
    seed: int


def _evaluate(scenario: FleetScenario, genome: ScheduleGenome,
              config: SoaConfig, cache: _TemplateCache,
              caps: np.ndarray) -> tuple[float, bool, Schedule]:
    if not genome.validate(caps, scenario.delay_quantum):
        return math.inf, False, None  # type: ignore[return-value]
    schedule = decode_schedule(scenario, genome.resolution_order(),
                               genome.delay, cache)
    feasible = not audit_regulations(schedule)
    w, _, _ = objective(schedule, config.delay_weight, config.flights_weight)
    return w, feasible, schedule


def _caps(scenario: FleetScenario) -> np.ndarray:
    return np.array([f.delay_cap for f in scenario.flights], dtype=float)


def _initial_population(scenario: FleetScenario, config: SoaConfig,
                        rng: np.random.Generator,
                        caps: np.ndarray) -> list[ScheduleGenome]:
    """Departure-order zero-delay seed plus randomized variations."""
    n = len(scenario.flights)
    base_positions = np.empty(n, dtype=int)
    base_positions[departure_order(scenario)] = np.arange(n)
    population = [ScheduleGenome(base_positions.copy(),
                                 np.zeros(n, dtype=float))]
    q = scenario.delay_quantum
    while len(population) < config.population:
        genome = ScheduleGenome(base_positions.copy(), np.zeros(n, dtype=float))
        for _ in range(int(rng.integers(0, n // 2 + 2))):
            _resample_gene(genome, int(rng.integers(0, n)), rng, caps, q)
        for slot in range(n):
            if rng.random() < 0.1:
                steps = int(caps[slot] // q)
                genome.delay[slot] = float(rng.integers(0, steps + 1)) * q
        population.append(genome)
    return population


def _run_evolution(scenario: FleetScenario, config: SoaConfig,
                   algorithm: str) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    cache = _TemplateCache(scenario)
    caps = _caps(scenario)
    q = scenario.delay_quantum
    population = _initial_population(scenario, config, rng, caps)
    best: tuple[float, ScheduleGenome, Schedule] | None = None
    trace: list[tuple[int, float, float, int]] = []
    n_elite = max(1, round(config.elite_fraction * config.population))
    seen: dict[bytes, tuple[float, bool, Schedule]] = {}

    for generation in range(config.generations):
        values = np.empty(len(population))
        feasible = np.zeros(len(population), dtype=bool)
        for idx, genome in enumerate(population):
            key = genome.position.tobytes() + genome.delay.tobytes()
            found = seen.get(key)
            if found is None:
                found = _evaluate(scenario, genome, config, cache, caps)
                seen[key] = found
            w, ok, schedule = found
            values[idx] = w
            feasible[idx] = ok
            if ok and (best is None or w < best[0]):
                best = (w, genome.copy(), schedule)
        if best is None:
            raise OptimizationError(
                f"generation {generation}: no feasible individual")
        _, t_d, s = objective(best[2], config.delay_weight,
                              config.flights_weight)
        trace.append((generation, best[0], t_d, s))
        finite_max = values[np.isfinite(values)].max()
        finite = np.where(np.isfinite(values), values, finite_max)
        _, fitness = normalize_fitness(finite, feasible)

        if algorithm == "soa":
            pool = sa_select(population, fitness, feasible, generation,
                             config, rng)
        else:
            pool = _roulette_select(population, fitness, feasible, rng)

        elite_idx = sorted(range(len(population)),
                           key=lambda i: (not feasible[i], values[i], i))
        next_population = [population[i].copy() for i in elite_idx[:n_elite]]
        mean_fitness = float(fitness.mean())
        while len(next_population) < config.population:
            pa, fit_a = pool[int(rng.integers(0, len(pool)))]
            pb, fit_b = pool[int(rng.integers(0, len(pool)))]
            # Plain GA keeps the fixed single-point operators throughout.
            below = True if algorithm == "ga" \
                else min(fit_a, fit_b) < mean_fitness
            if rng.random() < config.crossover_rate:
                child_a, child_b = crossover(pa, pb, below, rng, caps, q)
            else:
                child_a, child_b = pa.copy(), pb.copy()
            for child in (child_a, child_b):
                mutate_mode = False if algorithm == "ga" else below
                mutated = mutate(child, mutate_mode, config.mutation_rate,
                                 rng, caps, q)
                next_population.append(mutated)
                if len(next_population) >= config.population:
                    break
        population = next_population

    assert best is not None
    _, t_d, s = objective(best[2], config.delay_weight, config.flights_weight)
    return OptimizationResult(algorithm=algorithm, best_schedule=best[2],
                              best_genome=best[1], best_objective=best[0],
                              average_delay=t_d, operating=s, trace=trace,
                              seed=config.seed)


def optimize_schedule(scenario: FleetScenario,
                      config: SoaConfig) -> OptimizationResult:
    """Annealing-selection GA over resolution orders and pre-delays."""
    return _run_evolution(scenario, config, "soa")


def run_baseline_ga(scenario: FleetScenario,
                    config: SoaConfig) -> OptimizationResult:
    """Plain GA: roulette selection, single-point crossover and mutation."""
    return _run_evolution(scenario, config, "ga")


def load_scenario(source: dict | str | Path) -> FleetScenario:
    """Read a fleet scenario from a JSON file or an equivalent dict."""
    if not isinstance(source, dict):
        try:
            source = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario {source}: {exc}") from exc
    try:
        grid = GridSpec(**source["grid"])
        cruise = float(source.get("cruise_altitude", grid.z_max / 2))
        vertiports = {name: Vertiport(name, float(xy[0]), float(xy[1]))
                      for name, xy in source["vertiports"].items()}
        routes = {}
        for entry in source["routes"]:
            origin = vertiports[entry["from"]]
            dest = vertiports[entry["to"]]
            waypoints = np.asarray(entry["waypoints"], dtype=float) \
                if "waypoints" in entry else \
                np.array([[origin.x, origin.y, cruise], [dest.x, dest.y, cruise]])
            geom = float(np.sum(np.linalg.norm(np.diff(waypoints, axis=0),
                                               axis=1)))
            routes[entry["id"]] = Route(
                route_id=entry["id"], origin=entry["from"], destination=entry["to"],
                length=float(entry.get("length", geom)), waypoints=waypoints)
        network = RouteNetwork(vertiports=vertiports, routes=routes)
        speeds = {int(a["id"]): float(a["speed"]) for a in source["aircraft"]}
        flights = tuple(
            FlightSpec(aircraft=int(f["aircraft"]), index=int(f["index"]),
                       route_id=f["route"], direction=f["direction"],
                       departure=float(f["departure"]),
                       delay_cap=float(f["delay_cap"]))
            for f in source["flights"])
    except KeyError as exc:
        raise ScenarioError(f"scenario missing key {exc}") from exc
    return FleetScenario(
        grid=grid, network=network, speeds=speeds, flights=flights,
        service_start=float(source.get("service_start", 0.0)),
        service_end=float(source.get("service_end", 28800.0)),
        outbound_gap=float(source.get("outbound_gap", 240.0)),
        inbound_gap=float(source.get("inbound_gap", 360.0)),
        interference=float(source.get("interference", 0.3)),
        delay_quantum=float(source.get("delay_quantum", 10.0)),
        detection_halfwidth=int(source.get("detection_halfwidth", 1)))
