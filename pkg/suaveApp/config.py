"""
Run configuration: a JSON document whose field names mirror ``RunConfig``.

    {
      "time_limit": 300, "dt": 0.1, "runs": 20, "base_seed": 1, "output": "results",
      "wv": {"min": 1.25, "max": 3.75, "period": 80, "phase": 0},
      "thruster_events": [{"time": 35, "thruster": 1}],
      "manager": {"kind": "metacontrol", "mape_period": 1.0, ...},
      "kinematics": {...}, "pipeline": {...}, "mission": {...}
    }

Every section and field is optional; unknown keys are rejected.
"""
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ConfigError
from .managed import MissionParams
from .managing import ManagerConfig, ManagerKind
from .simworld import Kinematics, PipelineLayout, ThrusterEvent, WaterVisibilityModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    time_limit: float = 300.0
    dt: float = 0.1
    runs: int = 20
    base_seed: int = 1
    output: str = ""
    wv: WaterVisibilityModel = field(default_factory=WaterVisibilityModel)
    thruster_events: tuple = (ThrusterEvent(35.0, 1),)
    manager: ManagerConfig = field(default_factory=ManagerConfig)
    kinematics: Kinematics = field(default_factory=Kinematics)
    pipeline: PipelineLayout = field(default_factory=PipelineLayout)
    mission: MissionParams = field(default_factory=MissionParams)

    def __post_init__(self):
        if self.time_limit <= 0.0:
            raise ConfigError(f"time_limit must be positive, got {self.time_limit}.")
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}.")
        if self.runs < 1:
            raise ConfigError(f"runs must be at least 1, got {self.runs}.")
        ordered = tuple(sorted(self.thruster_events, key=lambda event: event.time))
        object.__setattr__(self, "thruster_events", ordered)

    @property
    def seeds(self):
        return list(range(self.base_seed, self.base_seed + self.runs))

    @property
    def time_limit_ticks(self):
        return round(self.time_limit / self.dt)


def _number(section, key, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}.")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}.")
        return int(value)
    return float(value)


def _section(cls, data, section, converters=None):
    if not isinstance(data, dict):
        raise ConfigError(f"Section '{section}' must be an object.")
    converters = converters or {}
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Unknown key(s) in '{section}': {', '.join(unknown)}.")
    kwargs = {}
    for key, value in data.items():
        if key in converters:
            kwargs[key] = converters[key](value)
        elif known[key].type in (int, "int"):
            kwargs[key] = _number(section, key, value, int)
        else:
            kwargs[key] = _number(section, key, value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"Invalid '{section}' section: {exc}") from exc


def _manager_kind(value):
    try:
        return ManagerKind(value)
    except ValueError:
        choices = ", ".join(kind.value for kind in ManagerKind)
        raise ConfigError(f"Unknown manager kind {value!r}; expected one of {choices}.") from None


def _fixed_modes(value):
    if not isinstance(value, dict):
        raise ConfigError("manager.fixed_modes must map node names to modes.")
    return tuple(value.items())


def _node_list(value):
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise ConfigError("manager.random_exclude must be a list of node names.")
    return tuple(value)


def _thruster_events(value):
    if not isinstance(value, list):
        raise ConfigError("thruster_events must be a list.")
    events = []
    for index, item in enumerate(value):
        section = f"thruster_events[{index}]"
        events.append(_section(ThrusterEvent, item, section, {
            "thruster": lambda v, s=section: _number(s, "thruster", v, int),
            "kind": str,
        }))
    return tuple(events)


def _string(key):
    def convert(value):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}.")
        return value
    return convert


def config_from_dict(data):
    """Build a validated ``RunConfig``; raises ``ConfigError`` on any problem."""
    return _section(RunConfig, data, "config", {
        "output": _string("output"),
        "wv": lambda v: _section(WaterVisibilityModel, v, "wv"),
        "thruster_events": _thruster_events,
        "manager": lambda v: _section(ManagerConfig, v, "manager", {
            "kind": _manager_kind,
            "fixed_modes": _fixed_modes,
            "random_exclude": _node_list,
        }),
        "kinematics": lambda v: _section(Kinematics, v, "kinematics"),
        "pipeline": lambda v: _section(PipelineLayout, v, "pipeline"),
        "mission": lambda v: _section(MissionParams, v, "mission"),
    })


def load_config(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Configuration {path} is not valid JSON: {exc}") from exc
    config = config_from_dict(data)
    logger.info("Loaded configuration %s", path)
    return config


def with_overrides(config, manager=None, runs=None, seed=None, out=None):
    """Command-line flags take precedence over the document."""
    changes = {}
    if manager is not None:
        changes["manager"] = dataclasses.replace(config.manager, kind=_manager_kind(manager))
    if runs is not None:
        changes["runs"] = runs
    if seed is not None:
        changes["base_seed"] = seed
    if out is not None:
        changes["output"] = str(out)
    return dataclasses.replace(config, **changes) if changes else config


def config_to_dict(config):
    """JSON-ready echo of a configuration, in ``config_from_dict`` format."""
    data = dataclasses.asdict(config)
    data["manager"]["kind"] = config.manager.kind.value
    data["manager"]["fixed_modes"] = dict(config.manager.fixed_modes)
    data["manager"]["random_exclude"] = list(config.manager.random_exclude)
    data["thruster_events"] = [dataclasses.asdict(event) for event in config.thruster_events]
    return data


def config_to_json(config):
    return json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
