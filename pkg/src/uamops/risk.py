"""Per-cell operational risk to ground personnel, vehicles and small UAVs.

Risk for each group follows the same pattern: failure rate of the
aircraft, times the number of exposed individuals/assets in the crash
zone, times the probability that an exposed one is killed or hit.  The
three group risks combine into a weighted per-cell value R which is
binarized against a safety threshold (obstacle and no-fly cells are
always unsafe).  All kernels accept scalars or numpy arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .grid import CellIndex, GridSpec, UrbanScene

_CS_EPS = 1e-6  # below this the shelterless limit of the fatality curve is used


class RiskComputationError(ArithmeticError):
    """A risk kernel produced a non-finite result."""


@dataclass(frozen=True)
class FallParams:
    """Uncontrolled-descent parameters of the aircraft.

    Defaults describe a two-seat eVTOL: 400 kg empty, 220 kg payload,
    6 m length, quadratic air drag.  half_shelter_energy is the impact
    energy yielding 50% fatality at shelter factor 0.5; threshold_energy
    is the minimum energy that can kill as shelter vanishes.
    """

    failure_rate: float = 6.04e-5       # per flight hour
    empty_mass: float = 400.0           # kg
    passenger_mass: float = 220.0       # kg
    craft_length: float = 6.0           # m, diameter of the crash circle
    gravity: float = 9.8                # m/s^2
    drag_coefficient: float = 0.3
    air_density: float = 1.225          # kg/m^3
    half_shelter_energy: float = 1e6    # J
    threshold_energy: float = 232.0     # J

    def __post_init__(self) -> None:
        positive = ("failure_rate", "empty_mass", "craft_length", "gravity",
                    "drag_coefficient", "air_density", "half_shelter_energy",
                    "threshold_energy")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.passenger_mass < 0:
            raise ValueError("passenger_mass must be non-negative")
        if self.threshold_energy >= self.half_shelter_energy:
            raise ValueError("threshold_energy must be below half_shelter_energy")

    @property
    def total_mass(self) -> float:
        return self.empty_mass + self.passenger_mass

    @property
    def crash_area(self) -> float:
        """Frontal/crash circle area S_e = pi d^2 / 4."""
        return math.pi * self.craft_length**2 / 4.0


@dataclass(frozen=True)
class UavCollisionParams:
    """Mid-air collision-box geometry and encounter kinematics.

    angle_mode "fixed" evaluates the relative speed at the configured
    pitch/climb/heading angles and the midpoint aircraft speed;
    "integrated" averages it over time, aircraft speed and the UAV
    direction angles by composite midpoint quadrature.
    """

    box_length: float = 5.63            # m, fuselage length
    box_width: float = 5.63             # m, wingspan
    box_height: float = 1.855           # m
    uav_speed: float = 6.0              # m/s
    craft_speed_min: float = 10.0       # m/s
    craft_speed_max: float = 130 / 3.6  # m/s (130 km/h)
    exposure_time: float = 2.0          # s, one cell traversal at cruise speed
    angle_mode: str = "fixed"
    pitch: float = math.pi / 6          # aircraft angle to the xy plane
    uav_climb: float = math.pi / 2      # UAV angle to the xy plane
    heading_gap: float = math.pi / 2    # angle between the two velocities
    quadrature_points: int = 16

    def __post_init__(self) -> None:
        if min(self.box_length, self.box_width, self.box_height) <= 0:
            raise ValueError("collision box dimensions must be positive")
        if self.craft_speed_min >= self.craft_speed_max:
            raise ValueError("craft_speed_min must be below craft_speed_max")
        if self.exposure_time <= 0:
            raise ValueError("exposure_time must be positive")
        if self.angle_mode not in ("fixed", "integrated"):
            raise ValueError(f"unknown angle_mode {self.angle_mode!r}")
        if self.quadrature_points < 1:
            raise ValueError("quadrature_points must be at least 1")


@dataclass(frozen=True)
class ShelterRule:
    """Shelter factor by building height: low cover below the cutoff."""

    height_cutoff: float = 15.0
    low: float = 0.5
    high: float = 0.75

    def factor(self, building_height):
        return np.where(np.asarray(building_height) > self.height_cutoff,
                        self.high, self.low)


@dataclass(frozen=True)
class RiskModelParams:
    """Everything needed to turn a scene into a risk map."""

    fall: FallParams = field(default_factory=FallParams)
    uav: UavCollisionParams = field(default_factory=UavCollisionParams)
    shelter: ShelterRule = field(default_factory=ShelterRule)
    vehicle_area: float = 9.68          # m^2, projected vehicle area
    weights: tuple[float, float, float] = (0.5, 0.3, 0.2)
    threshold: float = 1e-7             # R_0, binarization level
    layer_bands: tuple[tuple[str, float, float], ...] | None = None

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.weights):
            raise ValueError("group weights must be non-negative")
        if self.vehicle_area <= 0:
            raise ValueError("vehicle_area must be positive")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")

    def scaled_failure_rate(self, factor: float) -> "RiskModelParams":
        return replace(self, fall=replace(self.fall,
                                          failure_rate=self.fall.failure_rate * factor))


def terminal_velocity(p: FallParams) -> float:
    """Limit speed of the drag-limited fall."""
    drag = p.drag_coefficient * p.air_density * p.crash_area
    return math.sqrt(2.0 * p.total_mass * p.gravity / drag)


def impact_velocity(h_drop, p: FallParams):
    """Ground-contact speed after falling h_drop meters against air drag."""
    h = np.asarray(h_drop, dtype=float)
    if np.any(h < 0):
        raise ValueError("drop height must be non-negative")
    drag = p.drag_coefficient * p.air_density * p.crash_area
    v_sq = (2.0 * p.total_mass * p.gravity / drag) * \
        (1.0 - np.exp(-h * drag / p.total_mass))
    v = np.sqrt(v_sq)
    return float(v) if np.isscalar(h_drop) else v


def impact_energy(v, p: FallParams):
    """Kinetic energy at ground contact, 0.5 (m_e + m_p) v^2."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("impact velocity must be non-negative")
    e = 0.5 * p.total_mass * v**2
    return float(e) if e.ndim == 0 else e


def fatality_probability(energy, shelter_factor, p: FallParams):
    """Probability that an exposed person is killed by the given impact energy.

    Logistic-type curve in energy, steepened by low shelter; at shelter
    factor ~0 it degenerates to a step at the threshold energy.
    """
    e = np.asarray(energy, dtype=float)
    cs = np.asarray(shelter_factor, dtype=float)
    if np.any(e < 0) or np.any(cs < 0) or np.any(cs > 1):
        raise ValueError("energy must be >= 0 and shelter factor in [0, 1]")
    root = math.sqrt(p.half_shelter_energy / p.threshold_energy)
    step_value = 1.0 / (1.0 + root)
    with np.errstate(divide="ignore", over="ignore"):
        ratio = np.where(e > 0, p.threshold_energy / e, np.inf)
        prob = 1.0 / (1.0 + root * ratio ** (1.0 / (4.0 * np.maximum(cs, _CS_EPS))))
    limit = np.where(e > p.threshold_energy, 1.0,
                     np.where(e < p.threshold_energy, 0.0, step_value))
    out = np.where(cs <= _CS_EPS, limit, np.where(e > 0, prob, 0.0))
    return float(out) if out.ndim == 0 else out


def personnel_risk(h_drop, population_density, shelter_factor, p: FallParams):
    """Expected ground-personnel fatality rate for a fall from h_drop."""
    exposed = population_density * p.crash_area
    prob = fatality_probability(impact_energy(impact_velocity(h_drop, p), p),
                                shelter_factor, p)
    return p.failure_rate * exposed * prob


def vehicle_risk(traffic_density, road_length, road_width, vehicle_area,
                 failure_rate):
    """Expected vehicle-strike rate on a road cell.

    Exposed count is traffic density times road length in the cell; hit
    probability is the vehicles' projected area share of the road surface.
    """
    exposed = traffic_density * road_length
    hit_prob = vehicle_area * traffic_density / road_width
    return failure_rate * exposed * hit_prob


def relative_speed(v_craft, v_uav, pitch, climb, heading_gap):
    """Relative speed of aircraft and UAV given both velocity directions."""
    v_sq = (np.asarray(v_craft, dtype=float)**2 + v_uav**2
            + 2.0 * v_craft * v_uav
            * (np.cos(pitch) * np.cos(climb) * np.cos(heading_gap)
               - np.sin(pitch) * np.sin(climb)))
    out = np.sqrt(np.maximum(v_sq, 0.0))
    return float(out) if out.ndim == 0 else out


def mean_relative_velocity(u: UavCollisionParams) -> float:
    """Average aircraft-UAV relative speed per the configured angle mode.

    Integrated mode is the quadruple midpoint-rule mean over exposure
    time, aircraft speed, UAV climb angle in [-pi/2, pi/2] and heading
    gap in [0, pi]; the integrand does not depend on time, so the time
    average is carried implicitly.
    """
    if u.angle_mode == "fixed":
        v_mid = 0.5 * (u.craft_speed_min + u.craft_speed_max)
        result = relative_speed(v_mid, u.uav_speed, u.pitch, u.uav_climb,
                                u.heading_gap)
    else:
        n = u.quadrature_points
        nodes = (np.arange(n) + 0.5) / n
        v_e = u.craft_speed_min + nodes * (u.craft_speed_max - u.craft_speed_min)
        climb = -math.pi / 2 + nodes * math.pi
        gap = nodes * math.pi
        ve_g, cl_g, ga_g = np.meshgrid(v_e, climb, gap, indexing="ij")
        result = float(np.mean(relative_speed(ve_g, u.uav_speed, u.pitch,
                                              cl_g, ga_g)))
    if not math.isfinite(result):
        raise RiskComputationError("relative-velocity quadrature diverged")
    return float(result)


def swept_volume(u: UavCollisionParams, mean_rel_speed: float | None = None) -> float:
    """Volume swept by the collision box during the exposure time."""
    v_r = mean_relative_velocity(u) if mean_rel_speed is None else mean_rel_speed
    return u.box_width * u.box_height * (v_r * u.exposure_time + u.box_length)


def uav_risk(u: UavCollisionParams, uav_density, failure_rate,
             mean_rel_speed: float | None = None):
    """Expected mid-air UAV collision rate for one cell traversal."""
    return failure_rate * uav_density * swept_volume(u, mean_rel_speed)


@dataclass(frozen=True)
class RiskMap:
    """Continuous and binarized per-cell risk over a grid.

    risk holds the weighted group sum R; unsafe is True where R exceeds
    the threshold or the cell is an obstacle / no-fly cell.  layer_of
    labels each k layer with its altitude band.
    """

    grid: GridSpec
    risk: np.ndarray
    unsafe: np.ndarray
    layer_of: tuple[str, ...]
    threshold: float

    def __post_init__(self) -> None:
        risk = np.asarray(self.risk, dtype=float)
        unsafe = np.asarray(self.unsafe, dtype=bool)
        if risk.shape != self.grid.shape or unsafe.shape != self.grid.shape:
            raise ValueError("risk arrays must match the grid shape")
        if np.any(risk < 0):
            raise ValueError("risk must be non-negative")
        if len(self.layer_of) != self.grid.c:
            raise ValueError("need one layer label per k")
        object.__setattr__(self, "risk", risk)
        object.__setattr__(self, "unsafe", unsafe)
        risk.setflags(write=False)
        unsafe.setflags(write=False)

    def risk_at(self, idx: CellIndex) -> float:
        i, j, k = idx
        return float(self.risk[i - 1, j - 1, k - 1])

    def is_unsafe(self, idx: CellIndex) -> bool:
        i, j, k = idx
        return bool(self.unsafe[i - 1, j - 1, k - 1])

    def unsafe_count_per_layer(self) -> list[int]:
        return [int(self.unsafe[:, :, k].sum()) for k in range(self.grid.c)]

    def to_dict(self) -> dict:
        g = self.grid
        return {
            "grid": {"dx": g.dx, "dy": g.dy, "dz": g.dz,
                     "x_max": g.x_max, "y_max": g.y_max, "z_max": g.z_max},
            "threshold": self.threshold,
            "layer_of": list(self.layer_of),
            "risk": self.risk.ravel(order="C").tolist(),
            "unsafe": self.unsafe.ravel(order="C").astype(int).tolist(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "RiskMap":
        grid = GridSpec(**data["grid"])
        risk = np.asarray(data["risk"], dtype=float).reshape(grid.shape, order="C")
        unsafe = np.asarray(data["unsafe"], dtype=int).astype(bool) \
            .reshape(grid.shape, order="C")
        return cls(grid=grid, risk=risk, unsafe=unsafe,
                   layer_of=tuple(data["layer_of"]), threshold=data["threshold"])

    @classmethod
    def load(cls, path: str | Path) -> "RiskMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_layer_bands(grid: GridSpec) -> tuple[tuple[str, float, float], ...]:
    """Three equal altitude bands (in whole-dz multiples) over the grid."""
    thirds = [round(grid.c / 3), round(2 * grid.c / 3)]
    edges = [0.0, thirds[0] * grid.dz, thirds[1] * grid.dz, grid.z_max]
    names = ("low", "mid", "high")
    return tuple((names[n], edges[n], edges[n + 1]) for n in range(3))


def assign_layers(grid: GridSpec,
                  bands: tuple[tuple[str, float, float], ...]) -> tuple[str, ...]:
    labels = []
    for z in grid.z_centers():
        label = ""
        for name, lo, hi in bands:
            if lo <= z < hi or (z == hi == bands[-1][2]):
                label = name
                break
        labels.append(label)
    return tuple(labels)


def cell_group_risks(scene: UrbanScene, params: RiskModelParams,
                     idx: CellIndex) -> tuple[float, float, float]:
    """Personnel, vehicle and UAV risk for one cell (reference path)."""
    i, j, k = idx
    z = (k - 0.5) * scene.grid.dz
    bh = float(scene.building_height[i - 1, j - 1])
    h_drop = max(z - bh, 0.0)
    cs = float(params.shelter.factor(bh))
    r_p = personnel_risk(h_drop, scene.population_density, cs, params.fall)
    r_v = vehicle_risk(scene.traffic_density, scene.road_length_per_cell,
                       scene.road_width, params.vehicle_area,
                       params.fall.failure_rate) \
        if scene.road_mask[i - 1, j - 1] else 0.0
    r_u = uav_risk(params.uav, scene.uav_density, params.fall.failure_rate)
    return float(r_p), float(r_v), float(r_u)


def aggregate_risk(idx: CellIndex, scene: UrbanScene,
                   params: RiskModelParams) -> float:
    """Weighted sum of the three group risks for one cell."""
    w1, w2, w3 = params.weights
    r_p, r_v, r_u = cell_group_risks(scene, params, idx)
    return w1 * r_p + w2 * r_v + w3 * r_u


def build_risk_map(scene: UrbanScene, params: RiskModelParams,
                   threshold: float | None = None) -> RiskMap:
    """Evaluate the weighted risk over every cell and binarize it.

    Drop height per cell is the center altitude minus the local building
    height (clamped at zero); obstacle and no-fly cells are unsafe
    regardless of their computed risk.
    """
    grid = scene.grid
    r0 = params.threshold if threshold is None else threshold
    z = grid.z_centers()[None, None, :]
    bh = scene.building_height[:, :, None]
    h_drop = np.maximum(z - bh, 0.0)
    cs = np.broadcast_to(params.shelter.factor(scene.building_height)[:, :, None],
                         grid.shape)
    r_personnel = personnel_risk(h_drop, scene.population_density, cs, params.fall)
    r_vehicle = vehicle_risk(scene.traffic_density, scene.road_length_per_cell,
                             scene.road_width, params.vehicle_area,
                             params.fall.failure_rate) \
        * scene.road_mask[:, :, None].astype(float)
    r_uav = uav_risk(params.uav, scene.uav_density, params.fall.failure_rate)
    w1, w2, w3 = params.weights
    risk = w1 * r_personnel + w2 * r_vehicle + w3 * np.full(grid.shape, r_uav)
    if not np.all(np.isfinite(risk)):
        raise RiskComputationError("risk map contains non-finite values")
    unsafe = (risk > r0) | scene.obstacle_mask() | scene.no_fly
    bands = params.layer_bands or default_layer_bands(grid)
    return RiskMap(grid=grid, risk=risk, unsafe=unsafe,
                   layer_of=assign_layers(grid, bands), threshold=r0)
