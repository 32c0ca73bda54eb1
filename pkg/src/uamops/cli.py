"""Command-line pipeline driver: risk maps, track plans, schedules, sweeps.

Subcommands share one JSON config (paths resolved relative to the config
file) and write CSV tables plus SVG plots into the output directory.
Exit codes: 0 success, 1 validation error, 2 infeasibility, 3 internal
error.
"""

from __future__ import annotations

import argparse
import functools
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import svgplot
from .grid import GridError, SceneError, UrbanScene, load_scene, point_to_cell
from .planner import (AircraftPerformance, PlanningError, TrackQuery,
                      plan_initial_track, plan_stages, track_cost)
from .risk import (FallParams, RiskMap, RiskModelParams, ShelterRule,
                   UavCollisionParams, build_risk_map)
from .scheduler import (OptimizationError, PlanError, ScenarioError, Schedule,
                        SoaConfig, audit_conflicts, audit_regulations,
                        build_initial_schedule, load_scenario, objective,
                        optimize_schedule, run_baseline_ga)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_INTERNAL = 3

CSV_SCHEMAS = {
    "track": ["stage", "n", "x", "y", "z", "t"],
    "plan_summary": ["query", "stage", "operational_risk", "transport_cost",
                     "waypoints", "compute_time_s", "status"],
    "unsafe_layers": ["k", "altitude", "unsafe_cells"],
    "schedule_flights": ["aircraft", "flight", "route", "direction",
                         "planned_departure", "delay_base", "operates_base",
                         "delay_soa", "operates_soa", "delay_ga",
                         "operates_ga", "rate_of_change"],
    "schedule_summary": ["algorithm", "operating", "cancelled", "total_delay",
                         "average_delay", "objective"],
    "convergence": ["generation", "best_objective", "average_delay",
                    "operating"],
    "sweep_altitude": ["altitude", "k", "unsafe_cells"],
    "sweep_cell_size": ["label", "dx", "status", "initial_risk",
                        "initial_cost", "initial_waypoints", "smoothed_risk",
                        "smoothed_cost", "smoothed_waypoints"],
    "sweep_flights": ["planned_flights", "status", "base_average_delay",
                      "soa_average_delay", "base_operating", "soa_operating"],
    "sweep_speed": ["speed", "status", "base_average_delay",
                    "soa_average_delay", "base_operating", "soa_operating"],
    "pareto": ["risk_weight", "transport_weight", "status",
               "operational_risk", "transport_cost"],
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_csv(path: Path, schema: str, rows: list[list]) -> None:
    columns = CSV_SCHEMAS[schema]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"{schema} row has {len(row)} fields, "
                             f"schema needs {len(columns)}")
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        config = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config, path.parent


def _resolve(base: Path, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else base / p


def risk_params_from(config: dict) -> RiskModelParams:
    try:
        kwargs = {}
        if "fall" in config:
            kwargs["fall"] = FallParams(**config["fall"])
        if "uav" in config:
            kwargs["uav"] = UavCollisionParams(**config["uav"])
        if "shelter" in config:
            kwargs["shelter"] = ShelterRule(**config["shelter"])
        if "weights" in config:
            kwargs["weights"] = tuple(config["weights"])
        if "threshold" in config:
            kwargs["threshold"] = float(config["threshold"])
        if "vehicle_area" in config:
            kwargs["vehicle_area"] = float(config["vehicle_area"])
        if "layer_bands" in config:
            kwargs["layer_bands"] = tuple(
                (str(n), float(lo), float(hi))
                for n, lo, hi in config["layer_bands"])
        return RiskModelParams(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad risk parameters: {exc}") from exc


def query_from(entry: dict) -> TrackQuery:
    try:
        fields = dict(entry)
        origin = tuple(int(v) for v in fields.pop("origin"))
        destination = tuple(int(v) for v in fields.pop("destination"))
        return TrackQuery(origin=origin, destination=destination, **fields)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad track query {entry}: {exc}") from exc


def performance_from(config: dict) -> AircraftPerformance:
    try:
        return AircraftPerformance(**config.get("performance", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad performance parameters: {exc}") from exc


def _load_plan_inputs(config: dict, base: Path) \
        -> tuple[UrbanScene, RiskMap, AircraftPerformance]:
    scene_key = "plan_scene" if "plan_scene" in config else "scene"
    config_key = "plan_scene_config" if "plan_scene_config" in config \
        else "scene_config"
    scene = load_scene(_resolve(base, config[scene_key]),
                       _resolve(base, config[config_key]))
    params = risk_params_from(config.get("plan_risk", config.get("risk", {})))
    return scene, build_risk_map(scene, params), performance_from(config)


def cmd_risk_map(config: dict, base: Path, out: Path, args) -> int:
    scene = load_scene(_resolve(base, config["scene"]),
                       _resolve(base, config["scene_config"]))
    params = risk_params_from(config.get("risk", {}))
    risk_map = build_risk_map(scene, params)
    risk_map.save(out / "risk_map.json")
    grid = risk_map.grid
    rows = [[k + 1, (k + 0.5) * grid.dz, int(risk_map.unsafe[:, :, k].sum())]
            for k in range(grid.c)]
    write_csv(out / "unsafe_per_layer.csv", "unsafe_layers", rows)
    for altitude in config.get("heatmap_altitudes", []):
        k = point_to_cell((0.0, 0.0, float(altitude)), grid)[2]
        svgplot.heatmap_svg(
            out / f"risk_heatmap_z{altitude:g}.svg",
            risk_map.risk[:, :, k - 1],
            f"cell risk at z={altitude:g} m (layer k={k})")
    print(f"risk map over {grid.shape} cells: "
          f"{int(risk_map.unsafe.sum())} unsafe")
    return EXIT_OK


def _plan_one(risk_map: RiskMap, perf: AircraftPerformance, query: TrackQuery,
              label: str, out: Path, smooth_step: float | None) -> list[list]:
    rows = []
    started = time.perf_counter()
    stages = plan_stages(query, risk_map, perf, smooth_step=smooth_step)
    elapsed = time.perf_counter() - started
    for stage in ("shortest", "initial", "equivalent", "smoothed"):
        track = stages[stage]
        cost = track_cost(track, risk_map, perf, query)
        times = np.concatenate(
            [[0.0], np.cumsum(track.segment_lengths())]) / perf.cruise_speed
        track_rows = [[stage, n + 1, float(p[0]), float(p[1]), float(p[2]),
                       float(times[n])]
                      for n, p in enumerate(track.waypoints)]
        write_csv(out / f"track_{label}_{stage}.csv", "track", track_rows)
        rows.append([label, stage, cost.risk_cost, cost.transport_cost,
                     track.n_waypoints, elapsed, "ok"])
    return rows


def cmd_plan(config: dict, base: Path, out: Path, args) -> int:
    scene, risk_map, perf = _load_plan_inputs(config, base)
    smooth_step = config.get("smooth_step")
    summary: list[list] = []
    failures = 0
    queries = config.get("queries", [])
    if not queries:
        raise ConfigError("config has no track queries")
    for n, entry in enumerate(queries):
        query = query_from(entry)
        try:
            summary.extend(_plan_one(risk_map, perf, query, f"q{n}", out,
                                     smooth_step))
        except PlanningError as exc:
            failures += 1
            summary.append([f"q{n}", "infeasible", 0.0, 0.0, 0, 0.0,
                            str(exc).replace(",", ";")])
    write_csv(out / "plan_summary.csv", "plan_summary", summary)
    print(f"planned {len(queries) - failures}/{len(queries)} queries")
    return EXIT_INFEASIBLE if failures == len(queries) else EXIT_OK


def _schedule_metrics(schedule: Schedule, soa: SoaConfig) -> list:
    w, t_d, s = objective(schedule, soa.delay_weight, soa.flights_weight)
    cancelled = len(schedule.flights) - schedule.operating_count()
    return [schedule.operating_count(), cancelled, schedule.total_delay(),
            t_d, w]


def _assert_clean(schedule: Schedule, label: str) -> None:
    problems = audit_conflicts(schedule) + audit_regulations(schedule)
    if problems:
        raise PlanError(f"{label} schedule failed audit: {problems[0]}")


def cmd_schedule(config: dict, base: Path, out: Path, args) -> int:
    scenario = load_scenario(_resolve(base, config["fleet"]))
    soa_config = SoaConfig(seed=args.seed, **config.get("soa", {}))
    base_schedule = build_initial_schedule(scenario)
    _assert_clean(base_schedule, "base")
    soa = optimize_schedule(scenario, soa_config)
    ga = run_baseline_ga(scenario, soa_config)
    _assert_clean(soa.best_schedule, "soa")
    _assert_clean(ga.best_schedule, "ga")

    rows = []
    for slot, spec in enumerate(scenario.flights):
        plans = [sched.flights[slot] for sched in
                 (base_schedule, soa.best_schedule, ga.best_schedule)]
        d_soa, d_ga = plans[1].delay, plans[2].delay
        change = (d_soa - d_ga) / d_ga if d_ga > 0 else 0.0
        rows.append([spec.aircraft, spec.index, spec.route_id, spec.direction,
                     spec.departure, plans[0].delay, int(plans[0].operates),
                     d_soa, int(plans[1].operates), d_ga,
                     int(plans[2].operates), change])
    write_csv(out / "schedule_flights.csv", "schedule_flights", rows)

    summary = [["base", *_schedule_metrics(base_schedule, soa_config)],
               ["soa", *_schedule_metrics(soa.best_schedule, soa_config)],
               ["ga", *_schedule_metrics(ga.best_schedule, soa_config)]]
    write_csv(out / "schedule_summary.csv", "schedule_summary", summary)

    for result, name in ((soa, "soa"), (ga, "ga")):
        write_csv(out / f"convergence_{name}.csv", "convergence",
                  [[g, w, t, s] for g, w, t, s in result.trace])
    svgplot.line_plot_svg(
        out / "convergence.svg",
        [("soa", [g for g, *_ in soa.trace], [w for _, w, *_ in soa.trace]),
         ("ga", [g for g, *_ in ga.trace], [w for _, w, *_ in ga.trace])],
        "best objective by generation", "generation", "objective")
    print(f"base/soa/ga average delay: {summary[0][4]:.2f} / "
          f"{summary[1][4]:.2f} / {summary[2][4]:.2f} s")
    return EXIT_OK


def _sweep_altitudes(config: dict, base: Path, out: Path) -> None:
    scene = load_scene(_resolve(base, config["scene"]),
                       _resolve(base, config["scene_config"]))
    params = risk_params_from(config.get("risk", {}))
    risk_map = build_risk_map(scene, params)
    rows = []
    for altitude in config["sweeps"]["altitudes"]:
        k = point_to_cell((0.0, 0.0, float(altitude)), scene.grid)[2]
        rows.append([float(altitude), k,
                     int(risk_map.unsafe[:, :, k - 1].sum())])
    write_csv(out / "sweep_altitude.csv", "sweep_altitude", rows)
    svgplot.line_plot_svg(out / "sweep_altitude.svg",
                          [("unsafe cells", [r[0] for r in rows],
                            [r[2] for r in rows])],
                          "unsafe cells by altitude", "altitude (m)",
                          "unsafe cells", markers=True)


def _sweep_cell_sizes(config: dict, base: Path, out: Path) -> None:
    params = risk_params_from(config.get("plan_risk", config.get("risk", {})))
    perf = performance_from(config)
    rows = []
    for point in config["sweeps"]["cell_sizes"]:
        label = point["label"]
        try:
            scene = load_scene(_resolve(base, point["scene"]),
                               _resolve(base, point["scene_config"]))
            risk_map = build_risk_map(scene, params)
            query = query_from(point["query"])
            stages = plan_stages(query, risk_map, perf)
            initial = track_cost(stages["initial"], risk_map, perf, query)
            smoothed = track_cost(stages["smoothed"], risk_map, perf, query)
            rows.append([label, scene.grid.dx, "ok",
                         initial.risk_cost, initial.transport_cost,
                         stages["initial"].n_waypoints,
                         smoothed.risk_cost, smoothed.transport_cost,
                         stages["smoothed"].n_waypoints])
        except (SceneError, PlanningError) as exc:
            rows.append([label, 0.0, str(exc).replace(",", ";"),
                         0.0, 0.0, 0, 0.0, 0.0, 0])
    write_csv(out / "sweep_cell_size.csv", "sweep_cell_size", rows)


def _truncated_flights(fleet: dict, per_aircraft: int) -> dict:
    out = dict(fleet)
    out["flights"] = [f for f in fleet["flights"]
                      if f["index"] <= per_aircraft]
    return out


def _retimed(fleet: dict, speed: float) -> dict:
    """Rebuild the departure chain for a new cruise speed.

    First departures are kept; later ones follow arrival plus turnaround,
    so the planned timetable stays regulation-feasible at any speed.
    """
    out = dict(fleet)
    out["aircraft"] = [dict(a, speed=speed) for a in fleet["aircraft"]]
    lengths = {r["id"]: r["length"] for r in fleet["routes"]}
    outbound = float(fleet.get("outbound_gap", 240.0))
    inbound = float(fleet.get("inbound_gap", 360.0))
    flights = []
    clock: dict[int, float] = {}
    for f in sorted(fleet["flights"], key=lambda f: (f["aircraft"], f["index"])):
        leg = round(lengths[f["route"]] / speed)
        gap = outbound if f["index"] % 2 == 1 else inbound
        g = f["aircraft"]
        departure = clock.get(g, float(f["departure"]))
        flights.append(dict(f, departure=departure, delay_cap=leg + gap))
        clock[g] = departure + leg + gap
    out["flights"] = flights
    return out


def _schedule_point(fleet_dict: dict, soa_kwargs: dict, seed: int) \
        -> tuple[float, float, int, int]:
    scenario = load_scenario(fleet_dict)
    soa_config = SoaConfig(seed=seed, **soa_kwargs)
    base_schedule = build_initial_schedule(scenario)
    _, base_delay, base_s = objective(base_schedule, soa_config.delay_weight,
                                      soa_config.flights_weight)
    result = optimize_schedule(scenario, soa_config)
    return base_delay, result.average_delay, base_s, result.operating


def _pmap(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _sweep_schedules(config: dict, base: Path, out: Path, args) -> None:
    fleet = json.loads(_resolve(base, config["fleet"]).read_text())
    soa_kwargs = dict(config.get("soa", {}))
    sweeps = config["sweeps"]
    n_aircraft = len(fleet["aircraft"])
    runner = functools.partial(_try_schedule_point, soa_kwargs=soa_kwargs,
                               seed=args.seed)

    if "flight_counts" in sweeps:
        totals = list(sweeps["flight_counts"])
        dicts = [_truncated_flights(fleet, total // n_aircraft)
                 for total in totals]
        rows = [[total, *result] for total, result in
                zip(totals, _pmap(runner, dicts, args.workers))]
        write_csv(out / "sweep_flight_count.csv", "sweep_flights", rows)
        _trend_plot(out / "sweep_flight_count.svg", rows, "planned flights")

    if "speeds" in sweeps:
        speeds = [float(s) for s in sweeps["speeds"]]
        dicts = [_retimed(fleet, speed) for speed in speeds]
        rows = [[speed, *result] for speed, result in
                zip(speeds, _pmap(runner, dicts, args.workers))]
        write_csv(out / "sweep_speed.csv", "sweep_speed", rows)
        _trend_plot(out / "sweep_speed.svg", rows, "cruise speed (m/s)")


def _try_schedule_point(fleet_dict: dict, soa_kwargs: dict,
                        seed: int) -> list:
    try:
        base_delay, soa_delay, base_s, soa_s = _schedule_point(
            fleet_dict, soa_kwargs, seed)
        return ["ok", base_delay, soa_delay, base_s, soa_s]
    except (ScenarioError, PlanError, OptimizationError) as exc:
        return [str(exc).replace(",", ";"), 0.0, 0.0, 0, 0]


def _trend_plot(path: Path, rows: list[list], x_label: str) -> None:
    good = [r for r in rows if r[1] == "ok"]
    if not good:
        return
    xs = [r[0] for r in good]
    svgplot.line_plot_svg(path,
                          [("before", xs, [r[2] for r in good]),
                           ("after", xs, [r[3] for r in good])],
                          "average delay before/after optimization",
                          x_label, "average delay (s)", markers=True)


def _sweep_pareto(config: dict, base: Path, out: Path) -> None:
    scene, risk_map, perf = _load_plan_inputs(config, base)
    entry = dict(config["queries"][0])
    rows = []
    for w4 in config["sweeps"]["pareto_weights"]:
        w4 = round(float(w4), 6)
        entry.update(risk_weight=w4, transport_weight=round(1.0 - w4, 6))
        try:
            query = query_from(entry)
            track = plan_initial_track(query, risk_map, perf)
            cost = track_cost(track, risk_map, perf, query)
            rows.append([w4, round(1.0 - w4, 6), "ok",
                         cost.risk_cost, cost.transport_cost])
        except PlanningError as exc:
            rows.append([w4, round(1.0 - w4, 6),
                         str(exc).replace(",", ";"), 0.0, 0.0])
    write_csv(out / "pareto.csv", "pareto", rows)
    good = [r for r in rows if r[2] == "ok"]
    if good:
        svgplot.line_plot_svg(out / "pareto.svg",
                              [("frontier", [r[3] for r in good],
                                [r[4] for r in good])],
                              "risk/transport trade-off",
                              "operational risk cost", "transport cost",
                              markers=True)


def cmd_sweep(config: dict, base: Path, out: Path, args) -> int:
    sweeps = config.get("sweeps", {})
    if not sweeps:
        raise ConfigError("config has no sweeps section")
    if "altitudes" in sweeps:
        _sweep_altitudes(config, base, out)
    if "cell_sizes" in sweeps:
        _sweep_cell_sizes(config, base, out)
    if "flight_counts" in sweeps or "speeds" in sweeps:
        _sweep_schedules(config, base, out, args)
    if "pareto_weights" in sweeps:
        _sweep_pareto(config, base, out)
    print(f"sweeps complete: {', '.join(sorted(sweeps))}")
    return EXIT_OK


COMMANDS = {
    "risk-map": cmd_risk_map,
    "plan": cmd_plan,
    "schedule": cmd_schedule,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="uamops", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)
    try:
        config, base = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, base, out, args)
    except (ConfigError, SceneError, ScenarioError, GridError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PlanningError, PlanError, OptimizationError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
