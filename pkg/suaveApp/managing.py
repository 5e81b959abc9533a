"""
Monitors and managing subsystems.

Every manager talks to the managed subsystem only through ``/diagnostics``
(read) and the change-mode services (write); the mission coordinator reaches
it through ``/mros/objective``. Metacontrol goes through the
``/mros/request_configuration`` bridge.
"""
import logging
from dataclasses import dataclass
from enum import Enum

from .bus import (
    DIAGNOSTICS_TOPIC,
    OBJECTIVE_SERVICE,
    REQUEST_CONFIGURATION_SERVICE,
    ChangeModeRequest,
    ConfigurationRequest,
    DiagnosticArray,
    DiagnosticStatus,
    Level,
    ObjectiveRequest,
    ServiceResponse,
    change_mode_service,
    format_value,
    parse_value,
)
from .exceptions import ConfigError, KnowledgeBaseError
from .managed import (
    ALL_THRUSTERS,
    FOLLOW_NODE,
    FOLLOW_PIPELINE,
    MAINTAIN_NODE,
    RECOVER_THRUSTERS,
    SEARCH_NODE,
    SPIRAL_HIGH,
    SPIRAL_LOW,
    SPIRAL_MEDIUM,
    UNGROUND,
    mode_row,
    modes_of,
)
from .simworld import water_visibility
from .tomasys import THRUSTERS, WATER_VISIBILITY, ComponentStatus, analyze, init_kb, plan

logger = logging.getLogger(__name__)

WATER_VISIBILITY_OBSERVER = "water_visibility_observer"
THRUSTER_MONITOR = "thruster_monitor"

FUNCTION_NODES = {
    "F1": MAINTAIN_NODE,
    "F2": SEARCH_NODE,
    "F3": FOLLOW_NODE,
}

DESIGN_MODES = {
    "FD1": ALL_THRUSTERS,
    "FD2": RECOVER_THRUSTERS,
    "FD3": SPIRAL_LOW,
    "FD4": SPIRAL_MEDIUM,
    "FD5": SPIRAL_HIGH,
    "FD6": FOLLOW_PIPELINE,
}


class ManagerKind(Enum):
    NONE = "none"
    RANDOM = "random"
    METACONTROL = "metacontrol"


@dataclass(frozen=True)
class ManagerConfig:
    kind: ManagerKind = ManagerKind.METACONTROL
    mape_period: float = 1.0
    observer_period: float = 0.5
    adaptation_period: float = 15.0
    fixed_modes: tuple = ((SEARCH_NODE, SPIRAL_MEDIUM), (MAINTAIN_NODE, ALL_THRUSTERS))
    random_exclude: tuple = ()

    def __post_init__(self):
        if not isinstance(self.kind, ManagerKind):
            raise ConfigError(f"Unknown manager kind {self.kind!r}.")
        for name in ("mape_period", "observer_period", "adaptation_period"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"Manager {name} must be positive.")
        for node, mode in self.fixed_modes:
            if mode_row(node, mode) is None:
                raise ConfigError(f"Fixed mode {node}={mode} is not an available mode.")
        for node in self.random_exclude:
            if not modes_of(node):
                raise ConfigError(f"Unknown node {node!r} in random_exclude.")

    def period(self):
        if self.kind is ManagerKind.RANDOM:
            return self.adaptation_period
        return self.mape_period


def period_ticks(period, dt):
    return max(1, round(period / dt))


def observe_water_visibility(model, t, client):
    status = DiagnosticStatus(
        Level.OK,
        WATER_VISIBILITY_OBSERVER,
        "water visibility",
        ((WATER_VISIBILITY, format_value(water_visibility(model, t))),),
    )
    client.publish(DIAGNOSTICS_TOPIC, t, DiagnosticArray((status,)))


def observe_thrusters(world, client):
    failed = world.failed_thrusters()
    status = DiagnosticStatus(
        Level.ERROR if failed else Level.OK,
        THRUSTER_MONITOR,
        f"failed: {', '.join(failed)}" if failed else "all thrusters available",
        tuple((name, world.thrusters[name].value) for name in THRUSTERS),
    )
    client.publish(DIAGNOSTICS_TOPIC, world.clock, DiagnosticArray((status,)))


class WaterVisibilityObserver:
    def __init__(self, model, client):
        self.model = model
        self.client = client

    def observe(self, t):
        observe_water_visibility(self.model, t, self.client)


class ThrusterMonitor:
    """Publishes thruster statuses at start and on every change."""

    def __init__(self, client):
        self.client = client
        self._last = None

    def observe(self, world):
        current = dict(world.thrusters)
        if current == self._last:
            return False
        self._last = current
        observe_thrusters(world, self.client)
        return True


class ModeBridge:
    """Turns function/design configuration requests into change-mode calls."""

    def __init__(self, client):
        self.client = client
        client.register_service(REQUEST_CONFIGURATION_SERVICE, self.request_configuration, ConfigurationRequest)

    def request_configuration(self, request):
        node = FUNCTION_NODES.get(request.function)
        if node is None:
            return ServiceResponse(False, f"No node realizes function {request.function}.")
        if request.design is None:
            mode = UNGROUND
        else:
            mode = DESIGN_MODES.get(request.design)
            if mode is None:
                return ServiceResponse(False, f"No mode realizes design {request.design}.")
        return self.client.call_service(change_mode_service(node), ChangeModeRequest(node, mode))


class Manager:
    kind = None

    def __init__(self, config, client, dt):
        self.config = config
        self.client = client
        self.period_ticks = period_ticks(config.period(), dt)
        self.change_requests = []
        client.register_service(OBJECTIVE_SERVICE, self.receive_objective, ObjectiveRequest)

    def due(self, tick):
        return tick % self.period_ticks == 0

    def tick(self, tick, t):
        if self.due(tick):
            self.manager_tick(t)

    def manager_tick(self, t):
        raise NotImplementedError

    def receive_objective(self, request):
        raise NotImplementedError

    def change_mode(self, t, node, mode):
        response = self.client.call_service(change_mode_service(node), ChangeModeRequest(node, mode))
        self.change_requests.append((t, node, mode, response.success))
        if not response.success:
            logger.warning("t=%s change of %s to %s failed: %s", t, node, mode, response.detail)
        return response


class NoManager(Manager):
    """Fixed configuration applied once at start."""

    kind = ManagerKind.NONE

    def __init__(self, config, client, dt):
        super().__init__(config, client, dt)
        self.applied = False

    def manager_tick(self, t):
        if self.applied:
            return
        for node, mode in self.config.fixed_modes:
            self.change_mode(t, node, mode)
        self.applied = True

    def receive_objective(self, request):
        return ServiceResponse(True, "objectives are not managed", handled=False)


class RandomManager(Manager):
    kind = ManagerKind.RANDOM

    def __init__(self, config, client, dt, rng):
        super().__init__(config, client, dt)
        self.rng = rng
        self.active_functions = set()

    def manager_tick(self, t):
        for function in sorted(self.active_functions):
            node = FUNCTION_NODES[function]
            if node in self.config.random_exclude:
                continue
            modes = modes_of(node)
            self.change_mode(t, node, modes[int(self.rng.integers(len(modes)))])

    def receive_objective(self, request):
        if request.function not in FUNCTION_NODES:
            return ServiceResponse(False, f"Unknown function {request.function}.")
        if request.action == "set":
            self.active_functions.add(request.function)
        elif request.action == "remove":
            self.active_functions.discard(request.function)
        else:
            return ServiceResponse(False, f"Unknown objective action {request.action!r}.")
        return ServiceResponse(True, f"{request.action} {request.function}", handled=False)


class MetacontrolManager(Manager):
    """MAPE-K loop over the TOMASys knowledge base."""

    kind = ManagerKind.METACONTROL

    def __init__(self, config, client, dt, on_cycle=None):
        super().__init__(config, client, dt)
        self.kb = init_kb()
        self.on_cycle = on_cycle
        self._visibility = None
        self._thruster_events = []
        self._ungrounded = []
        client.subscribe(DIAGNOSTICS_TOPIC, self._on_diagnostics, DiagnosticArray)

    def _on_diagnostics(self, env):
        for status in env.payload.status:
            if status.name == WATER_VISIBILITY_OBSERVER:
                try:
                    value = parse_value(status.as_dict()[WATER_VISIBILITY])
                except (KeyError, ValueError):
                    logger.error("Unreadable water visibility diagnostic: %s", status.values)
                    continue
                self._visibility = (value, env.stamp)
            elif status.name == THRUSTER_MONITOR:
                self._thruster_events.extend(status.values)

    def receive_objective(self, request):
        try:
            if request.action == "set":
                objective_id = self.kb.set_objective(request.function, request.required_qas)
            elif request.action == "remove":
                objective = self.kb.objective_for(request.function)
                if objective is None:
                    return ServiceResponse(False, f"No objective for {request.function}.")
                objective_id = objective.id
                self.kb.remove_objective(objective_id)
                self._ungrounded.append(request.function)
            else:
                return ServiceResponse(False, f"Unknown objective action {request.action!r}.")
        except KnowledgeBaseError as exc:
            return ServiceResponse(False, str(exc))
        return ServiceResponse(True, objective_id)

    def monitor(self):
        if self._visibility is not None:
            value, stamp = self._visibility
            try:
                self.kb.update_measured_qa(WATER_VISIBILITY, value, stamp)
            except KnowledgeBaseError as exc:
                logger.error("Discarded measurement: %s", exc)
            self._visibility = None
        for name, status in self._thruster_events:
            try:
                self.kb.update_component_status(name, ComponentStatus(status))
            except (KnowledgeBaseError, ValueError) as exc:
                logger.error("Discarded thruster status %s=%s: %s", name, status, exc)
        self._thruster_events = []

    def execute(self, t, configuration):
        pending, self._ungrounded = self._ungrounded, []
        for function in pending:
            response = self._request(t, function, None)
            if not response.success:
                self._ungrounded.append(function)

        for objective_id, design_id in configuration.changes(self.kb):
            function = self.kb.objectives[objective_id].function
            response = self._request(t, function, design_id)
            if response.success:
                grounding = self.kb.apply_grounding(objective_id, design_id)
                logger.info("t=%.1f %s grounded on %s (%s)", t, objective_id, design_id, grounding.id)

    def _request(self, t, function, design_id):
        response = self.client.call_service(
            REQUEST_CONFIGURATION_SERVICE, ConfigurationRequest(function, design_id)
        )
        mode = UNGROUND if design_id is None else DESIGN_MODES.get(design_id)
        self.change_requests.append((t, FUNCTION_NODES.get(function), mode, response.success))
        if not response.success:
            logger.warning("t=%.1f reconfiguration of %s failed: %s", t, function, response.detail)
        return response

    def manager_tick(self, t):
        self.monitor()
        analyze(self.kb)
        configuration = plan(self.kb)
        self.execute(t, configuration)
        if self.on_cycle is not None:
            self.on_cycle(t, self.kb)


def build_manager(config, bus, dt, rng=None, on_cycle=None):
    """Manager of ``config.kind`` wired on ``bus``; Metacontrol also gets its bridge."""
    client = bus.client(config.kind.value)
    if config.kind is ManagerKind.NONE:
        return NoManager(config, client, dt)
    if config.kind is ManagerKind.RANDOM:
        return RandomManager(config, client, dt, rng)
    ModeBridge(bus.client("mode_bridge"))
    return MetacontrolManager(config, client, dt, on_cycle)
