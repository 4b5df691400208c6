"""Wildfire and power grid co-simulation on a coupled transmission and distribution testbed."""

from .exposure import ExposureIndex, ExposureRecord, FragilityCurve, WindModel, compute_exposure
from .fire import FireParams, FireState, Ignition, IgnitionSource, apply_ignitions, spread_step
from .landscape import Landscape, WeatherSample, WeatherSeries, load_landscape, load_weather
from .mitigation import MitigationPlan, OperationalPolicy, apply_plan
from .network import ConfigurationError, GridNetwork, TestbedConfig, build_testbed, load_network, save_network
from .power import CascadeTrace, PowerSolution, cascade, dc_power_flow, performance
from .restoration import ResilienceCurve, build_curve, schedule_repairs
from .scenario import (
    RunReport, Scenario, SimulationError, load_scenario, prepare, run_ensemble, run_scenario, simulate,
    write_outputs,
)
from .state import ComponentState, Damage

__version__ = "0.1.0"
