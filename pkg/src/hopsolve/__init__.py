"""Global cost optimization of heated oil pipeline operation."""
from .bnb import SolveOptions, SolveReport, solve
from .model import (EconomicParams, FluidProps, FrictionModel, PipeSegment, Scenario,
                    ScenarioError, Station, ViscosityModel, total_cost)
from .preprocess import preprocess
from .scheme import NodeBounds, Scheme, SolutionVector, check_feasibility, propagate

__all__ = ["EconomicParams", "FluidProps", "FrictionModel", "NodeBounds", "PipeSegment",
           "Scenario", "ScenarioError", "Scheme", "SolutionVector", "SolveOptions",
           "SolveReport", "Station", "ViscosityModel", "check_feasibility", "preprocess",
           "propagate", "solve", "total_cost"]
