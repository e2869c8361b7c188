"""Discounted graph-Laplacian solvers with residual-based accuracy certificates."""

from .conditioning import (
    AngleReport,
    ConditionReport,
    classical_bounds,
    cos_lower_bound_indicator,
    d_angle,
    data_dependent_kappa,
    prop2_bound,
    rho,
    verify_two_sided,
)
from .generators import BterConfig, FamilySpec, generate_bter, generate_family, largest_component
from .graph import (
    Graph,
    build_graph,
    laplacian_apply,
    norm,
    read_edgelist,
    symmetrized_apply,
    transition_apply,
    write_edgelist,
)
from .potentials import (
    DiscountedSystem,
    PageRankSpec,
    Partition,
    PotentialSpec,
    assemble_potential_system,
    mht_rhs,
    monte_carlo_potential,
    ordering,
    pagerank_system,
    ppr_indicator_rhs,
)
from .solvers import SolveOptions, SolveReport, cg_solve, dense_solve, richardson_solve

__version__ = "0.1.0"
