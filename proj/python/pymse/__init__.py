"""Population size estimation from overlapping lists.

Frequentist and Bayesian estimators under explicit identifying assumptions,
plus latent class model tools for identifiability checks and simulation.
Assumptions and priors use the same text syntax as the ``mse`` command line,
for example ``"marginal_nhoi:ABA,HRW:0.8"`` or ``"nb:10000,1.6"``.
"""

from ._core import (
    MseError,
    Table,
    bayes,
    cell_probs,
    check_identifiability,
    coefficient_matrix,
    counterexample,
    estimate,
    invert_xi,
    kosovo,
    load_table,
    log_evidence,
    log_evidence_max,
    moment_vector,
    prior_quantile,
    simulate_table,
    simulation_study,
    sweep,
    unobserved_prob,
)

__all__ = [
    "MseError",
    "Table",
    "bayes",
    "cell_probs",
    "check_identifiability",
    "coefficient_matrix",
    "counterexample",
    "estimate",
    "invert_xi",
    "kosovo",
    "load_table",
    "log_evidence",
    "log_evidence_max",
    "moment_vector",
    "prior_quantile",
    "simulate_table",
    "simulation_study",
    "sweep",
    "unobserved_prob",
]

__version__ = "1.0.0"
