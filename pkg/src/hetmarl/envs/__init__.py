from .base import BaseEnv, EnvStateError, StepResult, comm_graph
from .passage import PassageAsym, PassageSizes
from .scenario_a import ScenarioA, reward_scenario_a
from .scenario_b import ScenarioB, reward_scenario_b
from .spec import SCENARIOS, ScenarioConfigError, ScenarioSpec, default_spec

_ENV_CLASSES = {
    "A": ScenarioA,
    "B": ScenarioB,
    "passage_sizes": PassageSizes,
    "passage_asym": PassageAsym,
}


def make_env(spec: ScenarioSpec, **kwargs) -> BaseEnv:
    """Instantiate the env class for ``spec.scenario_id``."""
    return _ENV_CLASSES[spec.scenario_id](spec, **kwargs)


__all__ = [
    "BaseEnv", "EnvStateError", "StepResult", "comm_graph",
    "ScenarioA", "ScenarioB", "PassageSizes", "PassageAsym",
    "ScenarioSpec", "ScenarioConfigError", "SCENARIOS", "default_spec",
    "make_env", "reward_scenario_a", "reward_scenario_b",
]
