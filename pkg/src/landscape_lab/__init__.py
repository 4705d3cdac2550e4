"""Landscape functions, Feynman-Kac path integrals and localization bounds
for magnetic Schrodinger operators on boxes with Dirichlet conditions."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import ArtifactError, ConfigError, LandscapeLabError, NearEigenvalueError, NumericalBreakdown
from .grid import ComplexField, Grid, ScalarField, VectorField, make_grid
from .model import MagneticSpec, PotentialSpec, build_magnetic, build_potential
from .hamiltonian import MagneticHamiltonian, assemble
from .landscape import LocalLandscapeParams, fm_bound, local_landscape, solve_landscape
from .eigen import EigenPair, MonitorProbe, inverse_power, lowest_eigenpairs, monitor, scan_monitor
from .pathint import (PathConfig, landscape_via_paths, propagator_mc, regularized_potential_sup,
                      theorem2_bound, theorem3_check)
