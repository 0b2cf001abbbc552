"""Discrete complex analysis on finite quadrilateral lattices."""

from .domains import Disk, Rect, parse_domain
from .errors import DCAError
from .expr import parse_expr
from .fem import Triangulation, build_kite_lattice, disk_mesh, kite_equivalence, solve_fem
from .kernels import BACKEND
from .lattice import B, W, QuadLattice, build_square_lattice, eccentricity, tikhomirov_lattice, validate
from .measure import WalkConfig, harmonic_measure_exact, random_walk_measure
from .operators import analytic_residual, assemble, conductances, energy, gradients, laplacian
from .solver import DirichletProblem, analytic_completion, conjugate, network_energy, solve_dirichlet, solve_network

__version__ = "0.1.0"

__all__ = [
    "B",
    "W",
    "BACKEND",
    "DCAError",
    "Disk",
    "Rect",
    "QuadLattice",
    "Triangulation",
    "DirichletProblem",
    "WalkConfig",
    "parse_domain",
    "parse_expr",
    "build_square_lattice",
    "build_kite_lattice",
    "tikhomirov_lattice",
    "disk_mesh",
    "validate",
    "eccentricity",
    "gradients",
    "energy",
    "conductances",
    "assemble",
    "laplacian",
    "analytic_residual",
    "solve_dirichlet",
    "conjugate",
    "analytic_completion",
    "solve_network",
    "network_energy",
    "solve_fem",
    "kite_equivalence",
    "harmonic_measure_exact",
    "random_walk_measure",
]
