"""
TOMASys knowledge base and the analyze/plan steps of the MAPE-K loop.

The catalog (functions, function designs, quality attributes) is loaded by
``init_kb``. Objectives and function groundings are created at runtime.
``analyze`` evaluates the QA-violation and component-availability rules over
every function grounding; ``plan`` picks, per objective, the feasible design
with the highest expected performance.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

from .exceptions import KnowledgeBaseError

logger = logging.getLogger(__name__)

WATER_VISIBILITY = "water_visibility"
PERFORMANCE = "performance"

# Both attributes are higher-is-better.
QA_RANGES = {
    WATER_VISIBILITY: (0.0, math.inf),
    PERFORMANCE: (0.0, 1.0),
}


class ComponentStatus(Enum):
    AVAILABLE = "AVAILABLE"
    FAILED = "FAILED"


class ObjectiveStatus(Enum):
    NULL = "NULL"
    UNGROUNDED = "UNGROUNDED"
    OK = "OK"
    ERROR = "ERROR"


class GroundingStatus(Enum):
    OK = "OK"
    ERROR = "ERROR"


@dataclass(frozen=True)
class QAValue:
    name: str
    value: float


@dataclass(frozen=True)
class Function:
    id: str
    name: str
    description: str = ""


@dataclass(frozen=True)
class FunctionDesign:
    id: str
    name: str
    solves: str
    required_components: frozenset = frozenset()
    expected_qas: tuple = ()
    description: str = ""

    def expected(self, qa_name):
        for qa in self.expected_qas:
            if qa.name == qa_name:
                return qa.value
        return None

    @property
    def performance(self):
        # Designs without an expected performance rank last.
        value = self.expected(PERFORMANCE)
        return 0.0 if value is None else value


@dataclass
class Component:
    name: str
    status: ComponentStatus = ComponentStatus.AVAILABLE


@dataclass
class Objective:
    id: str
    function: str
    status: ObjectiveStatus = ObjectiveStatus.NULL
    required_qas: tuple = ()


@dataclass
class FunctionGrounding:
    id: str
    objective: str
    design: str
    status: GroundingStatus = GroundingStatus.OK
    measured_qas: dict = field(default_factory=dict)


@dataclass
class Configuration:
    """Desired design per objective; ``None`` when no design is feasible."""

    designs: dict = field(default_factory=dict)

    def changes(self, kb):
        """(objective, design) pairs that differ from the current groundings."""
        changed = []
        for objective_id, design_id in self.designs.items():
            if design_id is None:
                continue
            current = kb.groundings.get(objective_id)
            if current is None or current.design != design_id:
                changed.append((objective_id, design_id))
        return changed


FUNCTIONS = (
    Function("F1", "maintain_motion", "Maintain the motion of the robot"),
    Function("F2", "generate_search_path", "Generate a path to search for the pipeline"),
    Function("F3", "follow_pipeline", "Follow and inspect the pipeline"),
)

THRUSTERS = tuple(f"thruster_{index}" for index in range(1, 7))

DESIGNS = (
    FunctionDesign(
        "FD1", "all_thrusters", "F1", frozenset(THRUSTERS),
        (QAValue(PERFORMANCE, 1.0),),
        "Uses all thrusters",
    ),
    FunctionDesign(
        "FD2", "recover_thrusters", "F1", frozenset(),
        (QAValue(PERFORMANCE, 0.5),),
        "Recovers the thrusters that are in failure",
    ),
    FunctionDesign(
        "FD3", "spiral_low", "F2", frozenset(),
        (QAValue(WATER_VISIBILITY, 0.5), QAValue(PERFORMANCE, 0.25)),
        "Produces a spiral search path with low altitude",
    ),
    FunctionDesign(
        "FD4", "spiral_medium", "F2", frozenset(),
        (QAValue(WATER_VISIBILITY, 1.0), QAValue(PERFORMANCE, 0.5)),
        "Produces a spiral search path with medium altitude",
    ),
    FunctionDesign(
        "FD5", "spiral_high", "F2", frozenset(),
        (QAValue(WATER_VISIBILITY, 2.0), QAValue(PERFORMANCE, 1.0)),
        "Produces a spiral search path with high altitude",
    ),
    FunctionDesign(
        "FD6", "follow_pipeline", "F3", frozenset(), (),
        "Follows the pipeline",
    ),
)


class KnowledgeBase:
    def __init__(self):
        self.functions = {}
        self.designs = {}
        self.components = {}
        self.objectives = {}
        # objective id -> grounding; at most one grounding per objective
        self.groundings = {}
        self.measurements = {}

    @classmethod
    def from_catalog(cls, functions, designs, components):
        kb = cls()
        for function in functions:
            kb.functions[function.id] = function
        for design in designs:
            if design.solves not in kb.functions:
                raise KnowledgeBaseError(
                    f"Design {design.id} solves unknown function {design.solves}."
                )
            kb.designs[design.id] = design
        for name in components:
            if name in kb.components:
                raise KnowledgeBaseError(f"Duplicate component {name}.")
            kb.components[name] = Component(name)
        for design in kb.designs.values():
            missing = design.required_components - kb.components.keys()
            if missing:
                raise KnowledgeBaseError(
                    f"Design {design.id} requires unknown components {sorted(missing)}."
                )
        return kb

    def designs_for(self, function_id):
        return [d for d in self.designs.values() if d.solves == function_id]

    def measured(self, qa_name):
        entry = self.measurements.get(qa_name)
        return None if entry is None else entry[0]

    def objective_for(self, function_id):
        for objective in self.objectives.values():
            if objective.function == function_id:
                return objective
        return None

    def set_objective(self, function_id, required_qas=()):
        if function_id not in self.functions:
            raise KnowledgeBaseError(f"Unknown function {function_id}.")
        if self.objective_for(function_id) is not None:
            raise KnowledgeBaseError(f"Function {function_id} already has an active objective.")
        objective = Objective(
            id="O" + function_id.lstrip("F"),
            function=function_id,
            required_qas=tuple(required_qas),
        )
        self.objectives[objective.id] = objective
        logger.info("Objective %s set for %s", objective.id, function_id)
        return objective.id

    def remove_objective(self, objective_id):
        if objective_id not in self.objectives:
            raise KnowledgeBaseError(f"Unknown objective {objective_id}.")
        del self.objectives[objective_id]
        self.groundings.pop(objective_id, None)
        logger.info("Objective %s removed", objective_id)

    def update_measured_qa(self, name, value, stamp):
        if name not in QA_RANGES:
            raise KnowledgeBaseError(f"Unknown quality attribute {name}.")
        low, high = QA_RANGES[name]
        value = float(value)
        if not (low <= value <= high):
            raise KnowledgeBaseError(f"{name}={value} outside [{low}, {high}].")
        self.measurements[name] = (value, stamp)
        for grounding in self.groundings.values():
            if self.designs[grounding.design].expected(name) is not None:
                grounding.measured_qas[name] = value

    def update_component_status(self, name, status):
        component = self.components.get(name)
        if component is None:
            raise KnowledgeBaseError(f"Unknown component {name}.")
        component.status = ComponentStatus(status)

    def apply_grounding(self, objective_id, design_id):
        objective = self.objectives.get(objective_id)
        design = self.designs.get(design_id)
        if objective is None or design is None:
            raise KnowledgeBaseError(f"Cannot ground {objective_id} on {design_id}: unknown id.")
        if design.solves != objective.function:
            raise KnowledgeBaseError(
                f"Ill-formed grounding: {design_id} solves {design.solves}, "
                f"{objective_id} is of {objective.function}."
            )
        measured = {
            qa.name: self.measured(qa.name)
            for qa in design.expected_qas
            if self.measured(qa.name) is not None
        }
        grounding = FunctionGrounding(
            id="FG" + objective_id.lstrip("O"),
            objective=objective_id,
            design=design_id,
            measured_qas=measured,
        )
        self.groundings[objective_id] = grounding
        objective.status = ObjectiveStatus.OK
        return grounding

    def snapshot(self):
        return {
            "functions": [
                {"id": f.id, "name": f.name, "description": f.description}
                for f in self.functions.values()
            ],
            "function_designs": [
                {
                    "id": d.id,
                    "name": d.name,
                    "solves": d.solves,
                    "required_components": sorted(d.required_components),
                    "expected_qas": {qa.name: qa.value for qa in d.expected_qas},
                }
                for d in self.designs.values()
            ],
            "components": [
                {"name": c.name, "status": c.status.value} for c in self.components.values()
            ],
            "objectives": [
                {
                    "id": o.id,
                    "of_function": o.function,
                    "status": o.status.value,
                    "required_qas": {qa.name: qa.value for qa in o.required_qas},
                }
                for o in self.objectives.values()
            ],
            "function_groundings": [
                {
                    "id": g.id,
                    "solves_objective": g.objective,
                    "of_design": g.design,
                    "status": g.status.value,
                    "measured_qas": dict(g.measured_qas),
                }
                for g in self.groundings.values()
            ],
            "measured_qas": {
                name: {"value": value, "stamp": stamp}
                for name, (value, stamp) in self.measurements.items()
            },
        }

    def to_json(self):
        return json.dumps(self.snapshot(), sort_keys=True, indent=2)


def init_kb():
    return KnowledgeBase.from_catalog(FUNCTIONS, DESIGNS, THRUSTERS)


def grounding_in_error(kb, grounding):
    design = kb.designs[grounding.design]
    for name, measured in grounding.measured_qas.items():
        expected = design.expected(name)
        if expected is not None and measured < expected:
            return True
    return any(
        kb.components[name].status is ComponentStatus.FAILED
        for name in design.required_components
    )


def analyze(kb):
    """Set every grounding and objective status from the current KB facts."""
    results = []
    for objective_id, grounding in kb.groundings.items():
        status = GroundingStatus.ERROR if grounding_in_error(kb, grounding) else GroundingStatus.OK
        if status is not grounding.status:
            logger.info("Grounding %s (%s) -> %s", grounding.id, grounding.design, status.value)
        grounding.status = status
        kb.objectives[objective_id].status = ObjectiveStatus(status.value)
        results.append((grounding.id, status))

    for objective in kb.objectives.values():
        if objective.id not in kb.groundings and objective.status is not ObjectiveStatus.NULL:
            objective.status = ObjectiveStatus.UNGROUNDED
    return results


def is_feasible(kb, design):
    for name in design.required_components:
        if kb.components[name].status is not ComponentStatus.AVAILABLE:
            return False
    for qa in design.expected_qas:
        measured = kb.measured(qa.name)
        # No measurement yet: unconstrained.
        if measured is not None and measured < qa.value:
            return False
    return True


def best_design(kb, objective):
    feasible = [d for d in kb.designs_for(objective.function) if is_feasible(kb, d)]
    if not feasible:
        return None
    top = max(d.performance for d in feasible)
    # feasible keeps catalog order, so the first maximum is the lowest index
    return next(d for d in feasible if d.performance == top)


def plan(kb):
    configuration = Configuration()
    for objective in kb.objectives.values():
        design = best_design(kb, objective)
        if design is None:
            objective.status = ObjectiveStatus.ERROR
            logger.warning("No feasible design for objective %s", objective.id)
        configuration.designs[objective.id] = None if design is None else design.id
    return configuration
