"""Risk-aware track planning and fleet scheduling for urban low-altitude airspace."""

from .grid import (CellIndex, GridError, GridSpec, SceneError, UrbanScene,
                   cell_center, load_scene, neighbors, point_to_cell)
from .planner import (AircraftPerformance, AltitudeWindowError, InfeasibleError,
                      OverloadError, PlanningError, Track, TrackCost,
                      TrackQuery, TrackRangeError, buffer_penalty, buffer_size,
                      merge_to_equivalent, plan_initial_track,
                      plan_shortest_track, plan_stages, segment_risk_cost,
                      segment_transport_cost, smooth_track, track_cost,
                      validate_track)
from .risk import (FallParams, RiskMap, RiskModelParams, ShelterRule,
                   UavCollisionParams, aggregate_risk, build_risk_map,
                   fatality_probability, impact_energy, impact_velocity,
                   mean_relative_velocity, personnel_risk, terminal_velocity,
                   uav_risk, vehicle_risk)
from .scheduler import (FleetScenario, FlightPlan, FlightSpec, OptimizationError,
                        OptimizationResult, PlanError, Route, RouteNetwork,
                        ScenarioError, Schedule, ScheduleGenome, SoaConfig,
                        Vertiport, audit_conflicts, audit_regulations,
                        build_initial_schedule, cell_occupancy,
                        daily_flight_count, decode_schedule, detect_conflict,
                        load_scenario, normalize_fitness, objective,
                        optimize_schedule, resolve_pairwise, run_baseline_ga,
                        sa_accept_worse, waypoint_times)

__version__ = "0.1.0"
