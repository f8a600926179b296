"""The endogenous decision problem consumed by every reformulation engine.

Two families are covered, distinguished by where the uncertainty lives:

* objective-uncertain (shortest path): each regime's cost map describes the
  uncertain objective vector; all constraint rows are certain.
* budget-uncertain (knapsack): the objective vector is certain and each
  regime's cost map (a budget map) describes the uncertain coefficient
  vector of a single capacity row ``a_s(u)^T x <= budget_rhs``.

Preference functionals (predictability, best case, regret) always refer to
the uncertain quantity: objective performance in the first family, resource
consumption in the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .uncertainty import CostMap, Gamma, Regime


class InfeasibleError(RuntimeError):
    """No regime admits a feasible (attained) robust optimum."""


@dataclass(frozen=True)
class CertainRow:
    coeffs: tuple
    sense: str  # "<=", "==", ">="
    rhs: float

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


class EndogenousProblem:
    """Nominal data plus the selectable uncertainty regimes.

    Immutable after construction; solves never mutate it, so instances are
    safe to share across threads.
    """

    def __init__(self, sense: str, num_vars: int, domain: str,
                 rows: Sequence[CertainRow], regimes: Sequence[Regime],
                 label: str = "",
                 objective_certain: Optional[Sequence[float]] = None,
                 budget_rhs: Optional[float] = None,
                 var_upper: float = 1.0,
                 vertex_enumerator: Optional[Callable[[], tuple]] = None,
                 source=None):
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        if domain not in ("continuous", "binary"):
            raise ValueError(f"unknown domain {domain!r}")
        self.sense = sense
        self.num_vars = int(num_vars)
        self.domain = domain
        self.rows = tuple(rows)
        self.regimes = tuple(regimes)
        self.label = label
        self.var_upper = float(var_upper)
        self.vertex_enumerator = vertex_enumerator
        self.source = source  # originating application instance, if any
        if objective_certain is not None:
            self.objective_certain = np.asarray(objective_certain, dtype=float)
            if budget_rhs is None:
                raise ValueError("budget-uncertain problems need budget_rhs")
            self.budget_rhs = float(budget_rhs)
        else:
            self.objective_certain = None
            self.budget_rhs = None
            if sense != "min":
                raise ValueError("objective-uncertain problems must minimize")
        ids = [r.id for r in self.regimes]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("regime ids must be contiguous from 1")
        for r in self.regimes:
            if r.cost_map.dim != self.num_vars:
                raise ValueError(f"regime {r.id} cost map has dimension "
                                 f"{r.cost_map.dim}, expected {self.num_vars}")
        for row in self.rows:
            if len(row.coeffs) != self.num_vars:
                raise ValueError("certain row length mismatch")
        if self.budget_uncertain:
            for r in self.regimes:
                if not isinstance(r.cost_map, Gamma):
                    raise ValueError("budget-uncertain problems take budget maps")

    @property
    def budget_uncertain(self) -> bool:
        return self.objective_certain is not None

    @property
    def num_regimes(self) -> int:
        return len(self.regimes)

    def regime(self, s: int) -> Regime:
        """Look up a regime by its 1-based id."""
        return self.regimes[s - 1]

    def activation_cost(self, s: int) -> float:
        return float(self.regime(s).activation_cost)

    def preference_map(self, s: int) -> CostMap:
        """The map the preference functionals refer to under regime s."""
        return self.regime(s).cost_map

    # -- pointwise evaluation (shared by engines and oracles) ---------------

    def rows_feasible(self, x: np.ndarray, tol: float = 1e-7) -> bool:
        for row in self.rows:
            v = float(np.dot(row.as_array(), x))
            if row.sense == "<=" and v > row.rhs + tol:
                return False
            if row.sense == ">=" and v < row.rhs - tol:
                return False
            if row.sense == "==" and abs(v - row.rhs) > tol:
                return False
        return True

    def regime_feasible(self, x: np.ndarray, s: int, tol: float = 1e-7) -> bool:
        """Robust feasibility of x under regime s (budget row, if any)."""
        from .uncertainty import worst_case_value
        if not self.budget_uncertain:
            return True
        return worst_case_value(self.regime(s).cost_map, x) <= self.budget_rhs + tol

    def worst_case(self, x: np.ndarray, s: int) -> float:
        """Native worst-case performance of (x, s).

        Objective-uncertain: sup of the uncertain objective.  Budget
        problems have a certain objective, so the guaranteed performance is
        just the objective value.
        """
        from .uncertainty import worst_case_value
        if self.budget_uncertain:
            return float(np.dot(self.objective_certain, x))
        return worst_case_value(self.regime(s).cost_map, x)

    def worst_case_cost(self, x: np.ndarray, s: int) -> float:
        """Worst case in minimization orientation (lower is better)."""
        w = self.worst_case(x, s)
        return w if self.sense == "min" else -w


@dataclass
class SolveOutput:
    """Result of one endogenous solve.

    ``preference_value`` is always cost-oriented (smaller is better):
    predictability gap, max regret, or best-case cost/consumption.
    ``total_objective`` is the minimization-convention composite
    ``activation + alpha * worst_cost + preference_value`` where
    ``worst_cost`` is the worst case negated for maximize problems.
    """

    x: np.ndarray
    s: int
    worst_case: float
    preference_value: float
    activation_cost: float
    total_objective: float
    wall_time: float = 0.0
    cuts_added: int = 0
    meta: dict = field(default_factory=dict)

    def support(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(np.asarray(self.x) > 0.5))


@dataclass(frozen=True)
class RoptMethod:
    """How membership in the robustly optimal set is enforced.

    kind: "duality" (LP-exact problems), "bigm", "incumbent", "lazy".
    ``M`` optionally overrides the computed big-M vector; ``incumbents``
    optionally supplies one robust optimizer per regime.
    """

    kind: str
    M: Optional[tuple] = None
    incumbents: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("duality", "bigm", "incumbent", "lazy"):
            raise ValueError(f"unknown R_opt method {self.kind!r}")

    @staticmethod
    def duality() -> "RoptMethod":
        return RoptMethod("duality")

    @staticmethod
    def bigm(M: Optional[Sequence[float]] = None) -> "RoptMethod":
        return RoptMethod("bigm", M=None if M is None else tuple(M))

    @staticmethod
    def incumbent(z: Optional[Sequence] = None) -> "RoptMethod":
        return RoptMethod("incumbent",
                          incumbents=None if z is None else tuple(map(tuple, z)))

    @staticmethod
    def lazy() -> "RoptMethod":
        return RoptMethod("lazy")
