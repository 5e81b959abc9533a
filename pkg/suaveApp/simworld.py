"""
Deterministic discrete-time world: vehicle kinematics, the seabed pipeline,
the water-visibility process, thruster failure injection and the mock
pipeline perception.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

from shapely.geometry import LineString, Point

from .exceptions import ConfigError, MissionError
from .tomasys import THRUSTERS, ComponentStatus

logger = logging.getLogger(__name__)


def normalize_angle(angle):
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class WaterVisibilityModel:
    min: float = 1.25
    max: float = 3.75
    period: float = 80.0
    phase: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.min <= self.max):
            raise ConfigError(f"Water visibility needs 0 < min <= max, got {self.min}, {self.max}.")
        if self.period <= 0.0:
            raise ConfigError(f"Water visibility period must be positive, got {self.period}.")


def water_visibility(model, t):
    mean = (model.min + model.max) / 2.0
    amplitude = (model.max - model.min) / 2.0
    return mean + amplitude * math.sin(2.0 * math.pi * t / model.period + model.phase)


@dataclass(frozen=True)
class ThrusterEvent:
    time: float
    thruster: int
    kind: str = "FAIL"

    def __post_init__(self):
        if self.time < 0.0:
            raise ConfigError(f"Thruster event time must be >= 0, got {self.time}.")
        if not 1 <= self.thruster <= len(THRUSTERS):
            raise ConfigError(f"Thruster index must be in 1..{len(THRUSTERS)}, got {self.thruster}.")
        if self.kind != "FAIL":
            raise ConfigError(f"Unsupported thruster event kind {self.kind!r}.")

    @property
    def component(self):
        return f"thruster_{self.thruster}"


@dataclass(frozen=True)
class Kinematics:
    nominal_speed: float = 0.5
    turn_rate: float = 1.0
    vertical_speed: float = 0.3
    degradation: float = 0.8
    heading_noise: float = 0.3
    fov_half_angle_deg: float = 45.0

    def __post_init__(self):
        for name in ("nominal_speed", "turn_rate", "vertical_speed"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"Kinematics {name} must be positive.")
        if not 0.0 <= self.degradation <= 1.0:
            raise ConfigError(f"Degradation factor must be in [0, 1], got {self.degradation}.")
        if self.heading_noise < 0.0:
            raise ConfigError("Heading noise must be >= 0.")
        if not 0.0 < self.fov_half_angle_deg < 90.0:
            raise ConfigError("Field-of-view half angle must be in (0, 90) degrees.")

    @property
    def fov_tan(self):
        return math.tan(math.radians(self.fov_half_angle_deg))


@dataclass(frozen=True)
class PipelineLayout:
    length: float = 60.0
    anchor_min: float = 5.0
    anchor_max: float = 20.0
    offset_min: float = 5.0
    offset_max: float = 15.0
    start_altitude: float = 2.0

    def __post_init__(self):
        if self.length <= 0.0:
            raise ConfigError("Pipeline length must be positive.")
        if not 0.0 <= self.anchor_min <= self.anchor_max <= self.length:
            raise ConfigError("Start anchor range must lie on the pipeline.")
        if not 0.0 <= self.offset_min <= self.offset_max:
            raise ConfigError("Start offset range must satisfy 0 <= min <= max.")
        if self.start_altitude < 0.0:
            raise ConfigError("Start altitude must be >= 0.")


@dataclass(frozen=True)
class Pipeline:
    points: tuple

    def __post_init__(self):
        if len(self.points) < 2:
            raise ConfigError("A pipeline needs at least two points.")
        for a, b in zip(self.points, self.points[1:]):
            if tuple(a) == tuple(b):
                raise ConfigError(f"Consecutive pipeline points must differ, got {a} twice.")

    @cached_property
    def line(self):
        return LineString(self.points)

    @property
    def total_length(self):
        return self.line.length

    def point_at(self, s):
        p = self.line.interpolate(min(max(s, 0.0), self.total_length))
        return p.x, p.y


def nearest_on_polyline(pipeline, p):
    """Projection of ``p`` on the pipeline: (point, arclength, distance)."""
    query = Point(p)
    s = pipeline.line.project(query)
    projection = pipeline.line.interpolate(s)
    return (projection.x, projection.y), s, projection.distance(query)


@dataclass
class VehicleState:
    x: float
    y: float
    z: float
    heading: float
    nominal_speed: float

    @property
    def position(self):
        return self.x, self.y, self.z


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class Hold:
    pass


@dataclass(frozen=True)
class FollowVelocity:
    heading: float
    z: float


@dataclass
class WorldState:
    vehicle: VehicleState
    pipeline: Pipeline
    visibility: WaterVisibilityModel
    kinematics: Kinematics
    rng: object
    dt: float
    tick: int = 0
    thrusters: dict = field(
        default_factory=lambda: {name: ComponentStatus.AVAILABLE for name in THRUSTERS}
    )
    applied_events: set = field(default_factory=set)

    @property
    def clock(self):
        return self.tick * self.dt

    def water_visibility(self):
        return water_visibility(self.visibility, self.clock)

    def failed_thrusters(self):
        return [name for name, status in self.thrusters.items() if status is ComponentStatus.FAILED]

    def thruster_bitmask(self):
        return sum(
            1 << index
            for index, name in enumerate(THRUSTERS)
            if self.thrusters[name] is ComponentStatus.FAILED
        )


def build_world(layout, kinematics, visibility, rng, dt):
    """Straight pipeline along x; the vehicle starts at a seeded perpendicular offset."""
    pipeline = Pipeline(((0.0, 0.0), (layout.length, 0.0)))
    anchor = rng.uniform(layout.anchor_min, layout.anchor_max)
    offset = rng.uniform(layout.offset_min, layout.offset_max)
    side = 1.0 if rng.random() < 0.5 else -1.0
    heading = normalize_angle(rng.uniform(-math.pi, math.pi))

    ax, ay = pipeline.point_at(anchor)
    bx, by = pipeline.point_at(anchor + 1e-3)
    norm = math.hypot(bx - ax, by - ay)
    nx, ny = -(by - ay) / norm, (bx - ax) / norm

    vehicle = VehicleState(
        x=ax + side * offset * nx,
        y=ay + side * offset * ny,
        z=layout.start_altitude,
        heading=heading,
        nominal_speed=kinematics.nominal_speed,
    )
    logger.debug("Vehicle starts at (%.2f, %.2f), %.2f m off the pipeline", vehicle.x, vehicle.y, offset)
    return WorldState(
        vehicle=vehicle,
        pipeline=pipeline,
        visibility=visibility,
        kinematics=kinematics,
        rng=rng,
        dt=dt,
    )


def inject_failures(world, events):
    changed = []
    for index, event in enumerate(events):
        if event.time > world.clock + 1e-9:
            break
        if index in world.applied_events:
            continue
        world.applied_events.add(index)
        world.thrusters[event.component] = ComponentStatus.FAILED
        changed.append(event.component)
        logger.info("t=%.1f %s failed", world.clock, event.component)
    return changed


def step(world, dt, command):
    if not math.isclose(dt, world.dt):
        raise MissionError(f"Step of {dt} s on a world ticking every {world.dt} s.")
    vehicle = world.vehicle
    kin = world.kinematics

    if isinstance(command, Hold):
        desired, target_z, speed = vehicle.heading, vehicle.z, 0.0
    else:
        speed = vehicle.nominal_speed * kin.degradation ** len(world.failed_thrusters())
        if isinstance(command, Waypoint):
            dx, dy = command.x - vehicle.x, command.y - vehicle.y
            desired = math.atan2(dy, dx) if (dx or dy) else vehicle.heading
        else:
            desired = command.heading
        target_z = command.z

    max_turn = kin.turn_rate * dt
    error = normalize_angle(desired - vehicle.heading)
    vehicle.heading = normalize_angle(vehicle.heading + max(-max_turn, min(max_turn, error)))

    if speed > 0.0:
        for _ in world.failed_thrusters():
            drift = world.rng.uniform(-kin.heading_noise, kin.heading_noise) * dt
            vehicle.heading = normalize_angle(vehicle.heading + drift)
        # no forward motion while facing away from the target
        facing = math.cos(normalize_angle(desired - vehicle.heading))
        advance = speed * max(0.0, facing) * dt
        vehicle.x += advance * math.cos(vehicle.heading)
        vehicle.y += advance * math.sin(vehicle.heading)

    max_climb = kin.vertical_speed * dt
    vehicle.z = max(0.0, vehicle.z + max(-max_climb, min(max_climb, target_z - vehicle.z)))
    world.tick += 1


def detect_pipeline(world, visibility):
    vehicle = world.vehicle
    if vehicle.z > visibility:
        return None
    point, _, distance = nearest_on_polyline(world.pipeline, (vehicle.x, vehicle.y))
    if distance <= vehicle.z * world.kinematics.fov_tan:
        return point
    return None


class TraceWriter:
    """Per-step trajectory CSV for offline plotting."""

    HEADER = ["t", "x", "y", "z", "heading", "wv", "thrusters", "modes"]

    def __init__(self, path):
        self._file = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(self.HEADER)

    def write(self, world, modes):
        v = world.vehicle
        self._writer.writerow([
            f"{world.clock:.1f}",
            f"{v.x:.4f}",
            f"{v.y:.4f}",
            f"{v.z:.4f}",
            f"{v.heading:.4f}",
            f"{world.water_visibility():.4f}",
            world.thruster_bitmask(),
            ";".join(f"{node}={mode}" for node, mode in modes.items()),
        ])

    def close(self):
        self._file.close()
