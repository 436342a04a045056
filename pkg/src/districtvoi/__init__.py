"""District energy system sizing under load uncertainty, with on-policy
value-of-information analysis over hypothesized building monitoring
measurements."""

__version__ = "0.1.0"

from districtvoi.loadmodel import (
    BuildingLoadParams,
    LoadDataset,
    Measurement,
    MeasurementModel,
    PosteriorDistribution,
    PriorSpec,
)
from districtvoi.scenario import Scenario, ScenarioSet, SolarDataset
from districtvoi.designopt import CostBreakdown, DesignSolution, SystemDesign, SystemParams
from districtvoi.simulator import MpcParams, SimulationResult
from districtvoi.voi import UncertaintyMask, VoiResult

__all__ = [
    "BuildingLoadParams",
    "CostBreakdown",
    "DesignSolution",
    "LoadDataset",
    "Measurement",
    "MeasurementModel",
    "MpcParams",
    "PosteriorDistribution",
    "PriorSpec",
    "Scenario",
    "ScenarioSet",
    "SimulationResult",
    "SolarDataset",
    "SystemDesign",
    "SystemParams",
    "UncertaintyMask",
    "VoiResult",
]
