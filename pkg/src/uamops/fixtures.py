"""Bundled synthetic fixtures: demo city, planner corridor, vertiport fleet.

Scenes are described geometrically in meters and rasterized to any cell
size, so the same fixture supports cell-size sweeps.  The fleet fixture
is the five-vertiport network with 20 aircraft and 120 planned flights;
its staggered departures are chosen to produce airborne conflicts for
the scheduler to resolve.  Run ``python -m uamops.fixtures --out DIR``
to write all fixture files.
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec, UrbanScene, _boxes_to_mask, write_raster

Rect = tuple[float, float, float, float]              # x0, y0, x1, y1
Box3 = tuple[float, float, float, float, float, float]  # + z0, z1


@dataclass(frozen=True)
class SceneGeometry:
    """Resolution-independent scene description in meters."""

    x_max: float
    y_max: float
    z_max: float
    buildings: tuple[tuple[Rect, float], ...] = ()   # footprint, height
    roads: tuple[Rect, ...] = ()
    no_fly: tuple[Box3, ...] = ()
    population_density: float = 2.5e-4
    traffic_density: float = 0.07
    uav_density: float = 3.48e-8
    road_width: float = 3.5


def _index_range(lo: float, hi: float, step: float, count: int) -> tuple[int, int]:
    """1-based inclusive cell range overlapping the open interval (lo, hi)."""
    first = int(math.floor(lo / step + 1e-9)) + 1
    last = int(math.ceil(hi / step - 1e-9))
    return max(first, 1), min(last, count)


def rasterize_scene(geom: SceneGeometry, dx: float, dy: float,
                    dz: float) -> tuple[np.ndarray, dict]:
    """Raster heights plus a scene-config dict for the given cell size."""
    grid = GridSpec(dx=dx, dy=dy, dz=dz, x_max=geom.x_max, y_max=geom.y_max,
                    z_max=geom.z_max)
    heights = np.zeros((grid.a, grid.b))
    for (x0, y0, x1, y1), h in geom.buildings:
        i0, i1 = _index_range(x0, x1, dx, grid.a)
        j0, j1 = _index_range(y0, y1, dy, grid.b)
        if i0 <= i1 and j0 <= j1:
            patch = heights[i0 - 1:i1, j0 - 1:j1]
            np.maximum(patch, h, out=patch)
    roads = []
    for x0, y0, x1, y1 in geom.roads:
        i0, i1 = _index_range(x0, x1, dx, grid.a)
        j0, j1 = _index_range(y0, y1, dy, grid.b)
        if i0 <= i1 and j0 <= j1:
            roads.append({"i": [i0, i1], "j": [j0, j1]})
    no_fly = []
    for x0, y0, x1, y1, z0, z1 in geom.no_fly:
        i0, i1 = _index_range(x0, x1, dx, grid.a)
        j0, j1 = _index_range(y0, y1, dy, grid.b)
        k0, k1 = _index_range(z0, z1, dz, grid.c)
        if i0 <= i1 and j0 <= j1 and k0 <= k1:
            no_fly.append({"i": [i0, i1], "j": [j0, j1], "k": [k0, k1]})
    config = {
        "dz": dz,
        "z_max": geom.z_max,
        "population_density": geom.population_density,
        "traffic_density": geom.traffic_density,
        "uav_density": geom.uav_density,
        "road_width": geom.road_width,
        "road_length_per_cell": dx,
        "roads": roads,
        "no_fly": no_fly,
    }
    return heights, config


def scene_from_geometry(geom: SceneGeometry, dx: float, dy: float,
                        dz: float) -> UrbanScene:
    heights, config = rasterize_scene(geom, dx, dy, dz)
    grid = GridSpec(dx=dx, dy=dy, dz=dz, x_max=geom.x_max, y_max=geom.y_max,
                    z_max=geom.z_max)
    return UrbanScene(
        grid=grid, building_height=heights,
        population_density=geom.population_density,
        traffic_density=geom.traffic_density,
        uav_density=geom.uav_density,
        road_width=geom.road_width,
        road_length_per_cell=dx,
        road_mask=_boxes_to_mask(config["roads"], grid, dims=2),
        no_fly=_boxes_to_mask(config["no_fly"], grid, dims=3))


def city_geometry() -> SceneGeometry:
    """Demo city: block grid with a high-rise core, street grid, one no-fly."""
    buildings = []
    core = (3, 3)
    for bx in range(7):
        for by in range(7):
            x0 = 100 + bx * 260
            y0 = 100 + by * 260
            ring = max(abs(bx - core[0]), abs(by - core[1]))
            height = {0: 250.0, 1: 180.0, 2: 120.0, 3: 30.0}[ring]
            buildings.append(((x0, y0, x0 + 140, y0 + 140), height))
    roads = []
    for n in range(1, 4):
        roads.append((n * 500.0, 0.0, n * 500.0 + 50.0, 2000.0))
        roads.append((0.0, n * 500.0, 2000.0, n * 500.0 + 50.0))
    return SceneGeometry(
        x_max=2000.0, y_max=2000.0, z_max=300.0,
        buildings=tuple(buildings), roads=tuple(roads),
        no_fly=((1550.0, 1550.0, 1750.0, 1750.0, 0.0, 300.0),))


def corridor_geometry() -> SceneGeometry:
    """Planner fixture: graded road bands with gaps, a tower block, no-fly.

    Traffic here is deliberately heavy so that crossing a road band costs
    risk comparable to the transport cost of skirting it; band A carries
    a 25 m gap on the straight line that only sub-50 m cells resolve.
    """
    roads = (
        # band A, two 50 m columns, gaps at y in (675, 700) and (1050, 1200)
        (750.0, 0.0, 850.0, 675.0),
        (750.0, 700.0, 850.0, 1050.0),
        (750.0, 1200.0, 850.0, 1400.0),
        # band B, one column, gap at y in (250, 400)
        (1450.0, 0.0, 1500.0, 250.0),
        (1450.0, 400.0, 1500.0, 1400.0),
    )
    return SceneGeometry(
        x_max=2400.0, y_max=1400.0, z_max=240.0,
        buildings=(((1050.0, 400.0, 1350.0, 600.0), 200.0),),
        roads=roads,
        no_fly=((1800.0, 700.0, 1900.0, 1400.0, 0.0, 240.0),),
        traffic_density=0.07)


# Risk settings for the corridor fixture: the failure rate is scaled up
# (and the binarization threshold with it) so risk costs are commensurate
# with transport costs at unit-sum objective weights.
CORRIDOR_RISK = {
    "fall": {"failure_rate": 6.04e-2},
    "threshold": 5e-2,
}

CORRIDOR_QUERY = {
    "origin": [4, 14, 5],
    "destination": [45, 14, 5],
    "risk_weight": 0.5,
    "transport_weight": 0.5,
    "min_airspace_altitude": 30.0,
    "max_airspace_altitude": 240.0,
    "safety_clearance": 50.0,
    "penalty_coefficient": 100.0,
}

VERTIPORTS = {
    "V1": (300.0, 300.0),
    "V2": (300.0, 4220.0),
    "V3": (2220.0, 300.0),
    "V4": (2220.0, 4220.0),
    "V5": (1260.0, 2260.0),
}

ROUTE_LENGTHS = {
    ("V1", "V2"): 3920.0, ("V1", "V3"): 1920.0, ("V1", "V4"): 4365.0,
    ("V1", "V5"): 2183.0, ("V2", "V3"): 4365.0, ("V2", "V4"): 1920.0,
    ("V2", "V5"): 2183.0, ("V3", "V4"): 3920.0, ("V3", "V5"): 2183.0,
    ("V4", "V5"): 2183.0,
}


def fleet_scenario_dict(n_aircraft: int = 20, flights_per_aircraft: int = 6,
                        speed: float = 25.0, service_end: float = 28800.0,
                        outbound_gap: float = 240.0, inbound_gap: float = 360.0,
                        stagger_step: float = 20.0, chain_slack: float = 240.0,
                        cap_scale: float = 0.6) -> dict:
    """Five-vertiport network with two aircraft per route.

    First departures are staggered in `stagger_step` increments so
    flights from shared vertiports and across the central crossing
    overlap in time; consecutive flights of one aircraft get
    `chain_slack` seconds beyond the minimum turnaround so single delays
    do not cascade through the whole chain.
    """
    pairs = sorted(ROUTE_LENGTHS)
    routes = [{"id": f"{a}{b}", "from": a, "to": b,
               "length": ROUTE_LENGTHS[(a, b)]} for a, b in pairs]
    aircraft = []
    flights = []
    for g in range(1, n_aircraft + 1):
        route = routes[(g - 1) % len(routes)]
        aircraft.append({"id": g, "speed": speed, "route": route["id"]})
        leg_time = round(route["length"] / speed)
        departure = float((g * 7) % n_aircraft) * stagger_step
        for f in range(1, flights_per_aircraft + 1):
            gap = outbound_gap if f % 2 == 1 else inbound_gap
            flights.append({
                "aircraft": g, "index": f, "route": route["id"],
                "direction": "outbound" if f % 2 == 1 else "inbound",
                "departure": departure,
                "delay_cap": round((leg_time + gap) * cap_scale),
            })
            departure += leg_time + gap + chain_slack
    return {
        "grid": {"dx": 50.0, "dy": 50.0, "dz": 30.0,
                 "x_max": 2500.0, "y_max": 4500.0, "z_max": 300.0},
        "cruise_altitude": 135.0,
        "service_start": 0.0,
        "service_end": service_end,
        "outbound_gap": outbound_gap,
        "inbound_gap": inbound_gap,
        "interference": 0.3,
        "delay_quantum": 10.0,
        "detection_halfwidth": 1,
        "vertiports": {k: list(v) for k, v in VERTIPORTS.items()},
        "routes": routes,
        "aircraft": aircraft,
        "flights": flights,
    }


def experiment_config() -> dict:
    """Master CLI config wiring all bundled fixtures together."""
    return {
        "scene": "city_scene.txt",
        "scene_config": "city_config.json",
        "risk": {},
        "heatmap_altitudes": [100.0, 160.0, 220.0],
        "plan_scene": "corridor_50.txt",
        "plan_scene_config": "corridor_50_config.json",
        "plan_risk": CORRIDOR_RISK,
        "queries": [CORRIDOR_QUERY],
        "fleet": "fleet.json",
        "soa": {"population": 30, "generations": 60},
        "sweeps": {
            "altitudes": [100.0, 160.0, 220.0],
            "cell_sizes": [
                {"label": "50m", "scene": "corridor_50.txt",
                 "scene_config": "corridor_50_config.json",
                 "query": CORRIDOR_QUERY},
                {"label": "25m", "scene": "corridor_25.txt",
                 "scene_config": "corridor_25_config.json",
                 "query": {**CORRIDOR_QUERY,
                           "origin": [8, 28, 10], "destination": [90, 28, 10]}},
            ],
            "flight_counts": [80, 120],
            "speeds": [20.0, 30.0],
            "pareto_weights": [round(0.1 * n, 1) for n in range(11)],
        },
    }


def write_fixtures(out_dir: str | Path) -> list[Path]:
    """Write every bundled fixture file; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    created = []

    def dump(name: str, payload: dict) -> None:
        path = out / name
        path.write_text(json.dumps(payload, indent=2) + "\n")
        created.append(path)

    city = city_geometry()
    heights, config = rasterize_scene(city, 50.0, 50.0, 30.0)
    write_raster(out / "city_scene.txt", 50.0, 50.0, heights)
    created.append(out / "city_scene.txt")
    dump("city_config.json", config)

    corridor = corridor_geometry()
    for size, dz in ((50.0, 30.0), (25.0, 15.0)):
        heights, config = rasterize_scene(corridor, size, size, dz)
        name = f"corridor_{size:.0f}"
        write_raster(out / f"{name}.txt", size, size, heights)
        created.append(out / f"{name}.txt")
        dump(f"{name}_config.json", config)

    dump("fleet.json", fleet_scenario_dict())
    dump("experiment.json", experiment_config())
    return created


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="output directory")
    args = parser.parse_args(argv)
    for path in write_fixtures(args.out):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
