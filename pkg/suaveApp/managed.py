"""
Managed subsystem: the lifecycle nodes Generate Search Path, Follow Pipeline
and Maintain Motion, the Mode Manager serving their change-mode services, and
the Mission Coordinator that sequences the search and inspection tasks.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bus import (
    OBJECTIVE_SERVICE,
    ChangeModeRequest,
    ObjectiveRequest,
    ServiceResponse,
    change_mode_service,
)
from .exceptions import ConfigError, MissionError
from .simworld import (
    FollowVelocity,
    Hold,
    Waypoint,
    detect_pipeline,
    nearest_on_polyline,
    step,
)
from .tomasys import DESIGNS, WATER_VISIBILITY, ComponentStatus

logger = logging.getLogger(__name__)

SEARCH_NODE = "f_generate_search_path"
FOLLOW_NODE = "f_follow_pipeline"
MAINTAIN_NODE = "f_maintain_motion"

UNGROUND = "fd_unground"
SPIRAL_HIGH = "fd_spiral_high"
SPIRAL_MEDIUM = "fd_spiral_medium"
SPIRAL_LOW = "fd_spiral_low"
FOLLOW_PIPELINE = "fd_follow_pipeline"
ALL_THRUSTERS = "fd_all_thrusters"
RECOVER_THRUSTERS = "fd_recover_thrusters"


class LifecycleState(Enum):
    INACTIVE = "INACTIVE"
    ACTIVE = "ACTIVE"


@dataclass(frozen=True)
class ModeRow:
    node: str
    mode: str
    state: LifecycleState
    params: tuple = ()


def _spiral_altitude(design_id):
    design = next(d for d in DESIGNS if d.id == design_id)
    return design.expected(WATER_VISIBILITY)


MODE_TABLE = (
    ModeRow(SEARCH_NODE, SPIRAL_HIGH, LifecycleState.ACTIVE, (("altitude", _spiral_altitude("FD5")),)),
    ModeRow(SEARCH_NODE, SPIRAL_MEDIUM, LifecycleState.ACTIVE, (("altitude", _spiral_altitude("FD4")),)),
    ModeRow(SEARCH_NODE, SPIRAL_LOW, LifecycleState.ACTIVE, (("altitude", _spiral_altitude("FD3")),)),
    ModeRow(SEARCH_NODE, UNGROUND, LifecycleState.INACTIVE),
    ModeRow(FOLLOW_NODE, FOLLOW_PIPELINE, LifecycleState.ACTIVE),
    ModeRow(FOLLOW_NODE, UNGROUND, LifecycleState.INACTIVE),
    ModeRow(MAINTAIN_NODE, ALL_THRUSTERS, LifecycleState.INACTIVE),
    ModeRow(MAINTAIN_NODE, RECOVER_THRUSTERS, LifecycleState.ACTIVE),
)

DEFAULT_MODES = {
    SEARCH_NODE: UNGROUND,
    FOLLOW_NODE: UNGROUND,
    MAINTAIN_NODE: ALL_THRUSTERS,
}


def modes_of(node):
    return [row.mode for row in MODE_TABLE if row.node == node]


def mode_row(node, mode):
    for row in MODE_TABLE:
        if row.node == node and row.mode == mode:
            return row
    return None


@dataclass(frozen=True)
class MissionParams:
    recovery_duration: float = 10.0
    inspection_altitude: float = 1.0
    capture_radius: float = 0.3
    coverage_radius_limit: float = 30.0
    follow_lookahead: float = 1.0

    def __post_init__(self):
        for name in ("recovery_duration", "inspection_altitude", "capture_radius",
                     "coverage_radius_limit", "follow_lookahead"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"Mission parameter {name} must be positive.")


def spiral_waypoints(center, altitude, coverage_radius_limit, spacing=0.25, start_from=None):
    """
    Archimedean spiral r = b*theta around ``center`` with b = altitude/pi, so
    successive loops are 2*altitude apart (the detection diameter). Waypoints
    are spaced at most ``spacing`` apart along the path and truncated at
    ``coverage_radius_limit``. With ``start_from`` the spiral resumes at that
    point's bearing, on the first loop at or beyond its radius.
    """
    if altitude <= 0.0:
        raise MissionError(f"Spiral altitude must be positive, got {altitude}.")
    cx, cy = center
    b = altitude / math.pi
    theta_max = coverage_radius_limit / b

    theta_start = 0.0
    if start_from is not None:
        rho = math.hypot(start_from[0] - cx, start_from[1] - cy)
        phi = math.atan2(start_from[1] - cy, start_from[0] - cx) % (2.0 * math.pi)
        turns = max(0, math.ceil((rho / b - phi) / (2.0 * math.pi)))
        theta_start = phi + 2.0 * math.pi * turns
    if theta_start >= theta_max:
        return [Waypoint(cx + b * theta_start * math.cos(theta_start),
                         cy + b * theta_start * math.sin(theta_start), altitude)]

    # oversample finely in theta, then resample at uniform arclength
    fine_step = spacing / (4.0 * math.hypot(coverage_radius_limit, b))
    count = int(math.ceil((theta_max - theta_start) / fine_step)) + 2
    theta = np.linspace(theta_start, theta_max, count)
    r = b * theta
    xs, ys = r * np.cos(theta), r * np.sin(theta)
    arclength = np.concatenate(([0.0], np.cumsum(np.hypot(np.diff(xs), np.diff(ys)))))
    targets = np.arange(0.0, arclength[-1], spacing)
    sampled = np.interp(targets, arclength, theta)
    if sampled[-1] < theta_max:
        sampled = np.append(sampled, theta_max)
    radius = b * sampled
    px = cx + radius * np.cos(sampled)
    py = cy + radius * np.sin(sampled)
    return [Waypoint(float(x), float(y), altitude) for x, y in zip(px, py)]


class LifecycleNode:
    def __init__(self, name):
        self.name = name
        self.mode = DEFAULT_MODES[name]
        row = mode_row(name, self.mode)
        self.state = row.state
        self.params = dict(row.params)

    @property
    def active(self):
        return self.state is LifecycleState.ACTIVE

    def change_mode(self, mode):
        row = mode_row(self.name, mode)
        if row is None:
            return ServiceResponse(False, f"Unknown mode '{mode}' for node {self.name}; "
                                          f"available: {', '.join(modes_of(self.name))}.")
        if mode == self.mode:
            return ServiceResponse(True, f"{self.name} already in {mode}")
        previous = self.mode
        self.mode, self.state, self.params = mode, row.state, dict(row.params)
        self.on_mode_change(previous)
        logger.info("%s: %s -> %s", self.name, previous, mode)
        return ServiceResponse(True, f"{self.name} switched to {mode}")

    def on_mode_change(self, previous):
        pass


class GenerateSearchPath(LifecycleNode):
    def __init__(self, params, spacing):
        super().__init__(SEARCH_NODE)
        self.mission = params
        self.spacing = spacing
        self.center = None
        self.waypoints = []
        self.index = 0
        self._replan = False

    @property
    def altitude(self):
        return self.params.get("altitude")

    def on_mode_change(self, previous):
        self._replan = self.active
        if not self.active:
            self.waypoints, self.index = [], 0

    def search_step(self, world, dt):
        if not self.active:
            raise MissionError(f"{self.name} stepped while {self.mode}.")
        vehicle = world.vehicle
        if self._replan or not self.waypoints:
            resume = self.center is not None
            if self.center is None:
                self.center = (vehicle.x, vehicle.y)
            self.waypoints = spiral_waypoints(
                self.center,
                self.altitude,
                self.mission.coverage_radius_limit,
                spacing=self.spacing,
                start_from=(vehicle.x, vehicle.y) if resume else None,
            )
            self.index = 0
            self._replan = False

        last = len(self.waypoints) - 1
        while self.index < last:
            target = self.waypoints[self.index]
            if math.hypot(target.x - vehicle.x, target.y - vehicle.y) > self.mission.capture_radius:
                break
            self.index += 1
        target = self.waypoints[self.index]
        return Waypoint(target.x, target.y, self.altitude)


class FollowPipeline(LifecycleNode):
    def __init__(self, params, kinematics):
        super().__init__(FOLLOW_NODE)
        self.mission = params
        self.footprint = params.inspection_altitude * kinematics.fov_tan
        self.start_arclength = None
        self.furthest = None

    @property
    def tracking(self):
        return self.start_arclength is not None

    @property
    def inspected(self):
        return 0.0 if self.furthest is None else self.furthest - self.start_arclength

    def start(self, arclength):
        self.start_arclength = arclength
        self.furthest = arclength

    def follow_step(self, world, dt):
        """Returns the motion command and the inspected arclength gained this tick."""
        if not self.tracking:
            raise MissionError("Follow pipeline stepped before the pipeline was detected.")
        vehicle = world.vehicle
        pipeline = world.pipeline
        _, s, distance = nearest_on_polyline(pipeline, (vehicle.x, vehicle.y))

        delta = 0.0
        if distance <= self.footprint and s > self.furthest:
            delta = s - self.furthest
            self.furthest = s

        at_end = pipeline.total_length - s <= self.mission.capture_radius
        if at_end and distance <= self.footprint:
            return Hold(), delta
        tx, ty = pipeline.point_at(max(s, self.start_arclength) + self.mission.follow_lookahead)
        heading = math.atan2(ty - vehicle.y, tx - vehicle.x)
        return FollowVelocity(heading, self.mission.inspection_altitude), delta


class MaintainMotion(LifecycleNode):
    def __init__(self, params):
        super().__init__(MAINTAIN_NODE)
        self.mission = params
        self.recovery_ticks = 0

    def on_mode_change(self, previous):
        self.recovery_ticks = 0

    def maintain_motion_step(self, world, dt):
        """Hold command while recovering; ``None`` leaves the motion to the other nodes."""
        if self.mode != RECOVER_THRUSTERS:
            return None
        self.recovery_ticks += 1
        if self.recovery_ticks >= round(self.mission.recovery_duration / dt):
            failed = world.failed_thrusters()
            for name in failed:
                world.thrusters[name] = ComponentStatus.AVAILABLE
            if failed:
                logger.info("t=%.1f recovered %s", world.clock + dt, ", ".join(failed))
            self.recovery_ticks = 0
        return Hold()


class ModeManager:
    """Serves the change-mode service of every lifecycle node."""

    def __init__(self, nodes, client):
        self.nodes = nodes
        self.client = client
        for name in nodes:
            client.register_service(
                change_mode_service(name),
                lambda request, node=name: self.change_mode(node, request.mode),
                ChangeModeRequest,
            )

    def change_mode(self, node, mode):
        target = self.nodes.get(node)
        if target is None:
            return ServiceResponse(False, f"Unknown node '{node}'.")
        response = target.change_mode(mode)
        if not response.success:
            logger.warning(response.detail)
        return response


class ManagedSubsystem:
    def __init__(self, params, kinematics, bus, dt):
        self.params = params
        spacing = kinematics.nominal_speed * dt * 5.0
        self.maintain = MaintainMotion(params)
        self.search = GenerateSearchPath(params, spacing)
        self.follow = FollowPipeline(params, kinematics)
        self.nodes = {node.name: node for node in (self.search, self.follow, self.maintain)}
        self.mode_manager = ModeManager(self.nodes, bus.client("mode_manager"))

    def modes(self):
        return {name: node.mode for name, node in self.nodes.items()}

    def tick(self, world, dt):
        """Step the nodes in fixed order and move the vehicle; returns inspected arclength gained."""
        delta = 0.0
        command = self.maintain.maintain_motion_step(world, dt)
        if command is None:
            if self.follow.active and self.follow.tracking:
                command, delta = self.follow.follow_step(world, dt)
            elif self.search.active:
                command = self.search.search_step(world, dt)
            else:
                command = Hold()
        step(world, dt, command)
        return delta


class PipelineDetector:
    """Mock perception: the pipeline is seen with the true water visibility."""

    def detect(self, world):
        return detect_pipeline(world, world.water_visibility())


class MissionPhase(Enum):
    SEARCH = "SEARCH"
    INSPECT = "INSPECT"
    DONE = "DONE"


@dataclass
class MissionCoordinator:
    client: object
    managed: ManagedSubsystem
    time_limit: float
    phase: MissionPhase = MissionPhase.SEARCH
    t_search_start: float = None
    t_detect: float = None
    detection: tuple = None
    manager_grounds: bool = True
    acks: list = field(default_factory=list)
    detector: PipelineDetector = field(default_factory=PipelineDetector)

    @property
    def found(self):
        return self.t_detect is not None

    @property
    def search_time(self):
        if not self.found:
            return self.time_limit
        return self.t_detect - self.t_search_start

    @property
    def distance_inspected(self):
        return self.managed.follow.inspected

    def _request(self, action, function):
        response = self.client.call_service(OBJECTIVE_SERVICE, ObjectiveRequest(action, function))
        self.acks.append(response)
        if not response.success:
            logger.error("Objective %s %s rejected: %s", action, function, response.detail)
        return response

    def start(self, world):
        """Mission start: objectives for maintain motion and search."""
        self.t_search_start = world.clock
        first = self._request("set", "F1")
        self._request("set", "F2")
        self.manager_grounds = first.handled
        logger.info("t=%.1f mission started, search objective sent", world.clock)

    def mission_tick(self, world):
        if self.phase is MissionPhase.SEARCH:
            point = self.detector.detect(world)
            if point is not None:
                self._on_detection(world, point)
        if world.clock >= self.time_limit - 1e-9:
            if self.phase is not MissionPhase.DONE:
                logger.info("t=%.1f time limit reached", world.clock)
            self.phase = MissionPhase.DONE
        return self.phase

    def _on_detection(self, world, point):
        _, s, _ = nearest_on_polyline(world.pipeline, point)
        self.t_detect = world.clock
        self.detection = point
        self.phase = MissionPhase.INSPECT
        self.managed.follow.start(s)
        logger.info("t=%.1f pipeline detected at s=%.2f", world.clock, s)
        self._request("remove", "F2")
        self._request("set", "F3")
        if not self.manager_grounds:
            # nobody grounds objectives: switch tasks on the fixed configuration
            self.client.call_service(change_mode_service(FOLLOW_NODE), ChangeModeRequest(FOLLOW_NODE, FOLLOW_PIPELINE))
            self.client.call_service(change_mode_service(SEARCH_NODE), ChangeModeRequest(SEARCH_NODE, UNGROUND))
