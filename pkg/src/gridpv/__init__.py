"""Simulator for a grid-tied two-stage PV system with neuro-fuzzy MPPT.

Subpackages follow the signal chain: ``pv`` (array model), ``anfis`` and
``mppt`` (boost control), ``vsc`` (grid-side control), ``plant`` and ``sim``
(fixed-step simulation), ``optim`` and ``tuning`` (gain search),
``analysis`` (power-quality metrics) and ``cli``.
"""

from .config import ScenarioConfig, load_scenario
from .kernel import BACKEND
from .sim import SimTrace, SimulationFault, run_scenario

__all__ = ["BACKEND", "ScenarioConfig", "SimTrace", "SimulationFault", "load_scenario", "run_scenario"]
__version__ = "0.1.0"
