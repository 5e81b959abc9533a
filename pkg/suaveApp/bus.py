"""
In-process topic and service fabric.

Publishes are delivered synchronously, in subscription order, before
``publish`` returns. Services are synchronous request/reply calls. The bus is
single-threaded by contract and is owned by one simulation run.
"""
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Optional

from .exceptions import RegistrationError, ServiceNotFound, WiringError

logger = logging.getLogger(__name__)

DIAGNOSTICS_TOPIC = "/diagnostics"
OBJECTIVE_SERVICE = "/mros/objective"
REQUEST_CONFIGURATION_SERVICE = "/mros/request_configuration"


def change_mode_service(node):
    return f"/{node}/change_mode"


def format_value(value):
    """Fixed decimal format of numeric diagnostic values."""
    return f"{float(value):.2f}"


def parse_value(text):
    return float(text)


class Level(Enum):
    OK = 0
    WARN = 1
    ERROR = 2


@dataclass(frozen=True)
class DiagnosticStatus:
    level: Level
    name: str
    message: str = ""
    values: tuple = ()

    def __post_init__(self):
        keys = [key for key, _ in self.values]
        if len(keys) != len(set(keys)):
            raise WiringError(f"Duplicate keys in diagnostic status '{self.name}': {keys}")

    def as_dict(self):
        return dict(self.values)


@dataclass(frozen=True)
class DiagnosticArray:
    status: tuple = ()


@dataclass(frozen=True)
class ChangeModeRequest:
    node: str
    mode: str


@dataclass(frozen=True)
class ConfigurationRequest:
    function: str
    design: Optional[str]


@dataclass(frozen=True)
class ObjectiveRequest:
    action: str
    function: str
    required_qas: tuple = ()


@dataclass(frozen=True)
class ServiceResponse:
    success: bool
    detail: str = ""
    # False when the responder acknowledged the request without acting on it.
    handled: bool = True


@dataclass(frozen=True)
class Envelope:
    topic: str
    stamp: float
    payload: Any

    def __post_init__(self):
        if not self.topic:
            raise WiringError("Envelope topic must be a non-empty string.")


@dataclass(frozen=True)
class AccessRecord:
    client: str
    action: str
    endpoint: str


@dataclass
class _Service:
    handler: Callable
    request_kind: Optional[type]


class Bus:
    def __init__(self):
        self.access_log = []
        self._subscribers = defaultdict(list)
        self._kinds = {}
        self._topics = set()
        self._services = {}
        self._last_stamp = {}
        self._delivering = set()
        self._ids = itertools.count(1)

    @property
    def topics(self):
        return sorted(self._topics)

    @property
    def services(self):
        return sorted(self._services)

    def subscribe(self, topic, handler, kind=None):
        if kind is not None:
            declared = self._kinds.setdefault(topic, kind)
            if declared is not kind:
                raise WiringError(
                    f"Topic '{topic}' already declared for {declared.__name__}, "
                    f"subscriber expects {kind.__name__}."
                )
        sub_id = next(self._ids)
        self._subscribers[topic].append((sub_id, handler))
        self._topics.add(topic)
        logger.debug("Subscribed #%d to %s", sub_id, topic)
        return sub_id

    def unsubscribe(self, sub_id):
        for topic, handlers in self._subscribers.items():
            self._subscribers[topic] = [(i, h) for i, h in handlers if i != sub_id]

    def publish(self, topic, env):
        if env.topic != topic:
            raise WiringError(f"Envelope for '{env.topic}' published on '{topic}'.")
        kind = self._kinds.get(topic)
        if kind is not None and not isinstance(env.payload, kind):
            raise WiringError(
                f"Topic '{topic}' carries {kind.__name__}, got {type(env.payload).__name__}."
            )
        last = self._last_stamp.get(topic)
        if last is not None and env.stamp < last:
            raise WiringError(f"Stamp went backwards on '{topic}': {env.stamp} < {last}.")
        if topic in self._delivering:
            raise WiringError(f"Re-entrant publish on '{topic}'.")

        self._topics.add(topic)
        self._last_stamp[topic] = env.stamp
        self._delivering.add(topic)
        try:
            for _, handler in list(self._subscribers.get(topic, ())):
                handler(env)
        finally:
            self._delivering.discard(topic)

    def register_service(self, name, handler, request_kind=None):
        if name in self._services:
            raise RegistrationError(f"Service '{name}' is already registered.")
        self._services[name] = _Service(handler, request_kind)
        logger.debug("Registered service %s", name)

    def call_service(self, name, request):
        service = self._services.get(name)
        if service is None:
            raise ServiceNotFound(f"No service registered under '{name}'.")
        if service.request_kind is not None and not isinstance(request, service.request_kind):
            raise WiringError(
                f"Service '{name}' expects {service.request_kind.__name__}, "
                f"got {type(request).__name__}."
            )
        return service.handler(request)

    def client(self, name):
        return BusClient(self, name)


class BusClient:
    """Named handle on the bus; every endpoint it touches lands in ``bus.access_log``."""

    def __init__(self, bus, name):
        self.bus = bus
        self.name = name

    def _record(self, action, endpoint):
        self.bus.access_log.append(AccessRecord(self.name, action, endpoint))

    def publish(self, topic, stamp, payload):
        self._record("publish", topic)
        self.bus.publish(topic, Envelope(topic, stamp, payload))

    def subscribe(self, topic, handler, kind=None):
        self._record("subscribe", topic)
        return self.bus.subscribe(topic, handler, kind)

    def register_service(self, name, handler, request_kind=None):
        self._record("serve", name)
        self.bus.register_service(name, handler, request_kind)

    def call_service(self, name, request):
        self._record("call", name)
        return self.bus.call_service(name, request)


def create_bus():
    return Bus()


def endpoints_touched(bus, client):
    """Endpoints touched by ``client`` grouped by action."""
    touched = defaultdict(set)
    for record in bus.access_log:
        if record.client == client:
            touched[record.action].add(record.endpoint)
    return {action: sorted(endpoints) for action, endpoints in touched.items()}
