"""endorobust: robust optimization with selectable uncertainty regimes.

A decision maker who can influence which uncertainty set applies (by paying
an activation cost) faces trade-offs beyond worst-case performance: maximum
regret, best-case performance and predictability of the outcome.  This
package provides the models and solvers for those trade-offs on top of a
self-contained LP/MILP kernel, instantiated for uncertain shortest-path and
budget-uncertain knapsack problems, with brute-force oracles for validation.
"""

from .milp import (
    Model, LinExpr, term, lsum, Constraint, VariableSpec,
    LpResult, MilpResult, solve_lp, solve_milp, add_mccormick, add_l1_epigraph,
    OPTIMAL, INFEASIBLE, UNBOUNDED, RESOURCE_EXHAUSTED, ModelError,
    EPS_FEAS, EPS_GAP, EPS_INT,
)
from .uncertainty import (
    Interval, Correlated, GeneralBox, Gamma, CostMap, Regime,
    worst_case_value, best_case_value, dual_cone_rows, interval_to_box,
)
from .robust import (
    EndogenousProblem, RoptMethod, SolveOutput, InfeasibleError,
    solve_rc, solve_endogenous_rc, ropt_constraints, solve_epsilon, solve_bilevel,
)
from .preferences import (
    Predictability, BestCase, Regret, RegretCertificate, regret_exact_eval,
    regret_rlt_bound, regret_columnwise_block,
)
from . import spp, knapsack, oracle

__all__ = [
    "Model", "LinExpr", "term", "lsum", "Constraint", "VariableSpec",
    "LpResult", "MilpResult", "solve_lp", "solve_milp",
    "add_mccormick", "add_l1_epigraph",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "RESOURCE_EXHAUSTED", "ModelError",
    "EPS_FEAS", "EPS_GAP", "EPS_INT",
    "Interval", "Correlated", "GeneralBox", "Gamma", "CostMap", "Regime",
    "worst_case_value", "best_case_value", "dual_cone_rows", "interval_to_box",
    "EndogenousProblem", "RoptMethod", "SolveOutput", "InfeasibleError",
    "solve_rc", "solve_endogenous_rc", "ropt_constraints",
    "solve_epsilon", "solve_bilevel",
    "Predictability", "BestCase", "Regret", "RegretCertificate",
    "regret_exact_eval", "regret_rlt_bound", "regret_columnwise_block",
    "spp", "knapsack", "oracle",
]
