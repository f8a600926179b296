"""Uncertainty regimes and their cost maps.

A cost map describes how an uncertain coefficient vector depends on the
uncertainty parameter u:

* ``Interval(lower, upper)``      -- per-component intervals (diagonal box).
* ``Correlated(c0, C)``           -- c(u) = c0 + C u with C >= 0, ||u||_inf <= 1.
* ``GeneralBox(c0, C)``           -- c(u) = c0 + C u with arbitrary C, ||u||_inf <= 1.
* ``Gamma(a0, abar, gamma)``      -- a_i(u) = a0_i + abar_i u_i with
                                     sum(u) = gamma, 0 <= u <= 1.

All evaluation helpers assume a nonnegative decision vector x, which holds
for every application in this package (path indicators, packing indicators).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .milp import LinExpr, Model, add_l1_epigraph, term


@dataclass(frozen=True)
class Interval:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", tuple(lo))
        object.__setattr__(self, "upper", tuple(hi))
        if lo.shape != hi.shape:
            raise ValueError("interval bounds must have equal length")
        if np.any(lo > hi + 1e-12):
            raise ValueError("interval lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class Correlated:
    c0: tuple
    C: tuple  # rows, |A| x q, all entries >= 0

    def __post_init__(self):
        c0 = np.asarray(self.c0, dtype=float)
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[0] != len(c0):
            raise ValueError("C must have one row per component of c0")
        if np.any(C < -1e-12):
            raise ValueError("correlated maps require a nonnegative C")
        object.__setattr__(self, "c0", tuple(c0))
        object.__setattr__(self, "C", tuple(map(tuple, C)))

    @property
    def dim(self) -> int:
        return len(self.c0)


@dataclass(frozen=True)
class GeneralBox:
    c0: tuple
    C: tuple

    def __post_init__(self):
        c0 = np.asarray(self.c0, dtype=float)
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[0] != len(c0):
            raise ValueError("C must have one row per component of c0")
        object.__setattr__(self, "c0", tuple(c0))
        object.__setattr__(self, "C", tuple(map(tuple, C)))

    @property
    def dim(self) -> int:
        return len(self.c0)


@dataclass(frozen=True)
class Gamma:
    a0: tuple
    abar: tuple
    gamma: int

    def __post_init__(self):
        a0 = np.asarray(self.a0, dtype=float)
        ab = np.asarray(self.abar, dtype=float)
        if a0.shape != ab.shape:
            raise ValueError("a0 and abar must have equal length")
        if np.any(ab < 0):
            raise ValueError("deviations abar must be nonnegative")
        g = self.gamma
        if not float(g).is_integer():
            raise ValueError("the deviation budget must be an integer")
        g = int(g)
        if not 0 <= g <= len(a0):
            raise ValueError("deviation budget outside [0, n]")
        object.__setattr__(self, "a0", tuple(a0))
        object.__setattr__(self, "abar", tuple(ab))
        object.__setattr__(self, "gamma", g)

    @property
    def dim(self) -> int:
        return len(self.a0)


CostMap = Union[Interval, Correlated, GeneralBox, Gamma]


@dataclass(frozen=True)
class Regime:
    """One selectable uncertainty regime: activation cost plus cost map."""

    id: int
    activation_cost: float
    cost_map: CostMap


def _check_dim(cm: CostMap, x: np.ndarray) -> None:
    if len(x) != cm.dim:
        raise ValueError(f"dimension mismatch: x has {len(x)}, map has {cm.dim}")


def worst_case_value(cm: CostMap, x: Sequence[float]) -> float:
    """sup over the uncertainty set of c(u)^T x, for x >= 0."""
    x = np.asarray(x, dtype=float)
    _check_dim(cm, x)
    if isinstance(cm, Interval):
        return float(np.dot(cm.upper, x))
    if isinstance(cm, Correlated):
        C = np.asarray(cm.C)
        return float(np.dot(cm.c0, x) + C.T.dot(x).sum())
    if isinstance(cm, GeneralBox):
        C = np.asarray(cm.C)
        return float(np.dot(cm.c0, x) + np.abs(C.T.dot(x)).sum())
    if isinstance(cm, Gamma):
        dev = np.asarray(cm.abar) * x
        top = np.sort(dev)[::-1][: cm.gamma]
        return float(np.dot(cm.a0, x) + top.sum())
    raise TypeError(f"unknown cost map {type(cm).__name__}")


def best_case_value(cm: CostMap, x: Sequence[float]) -> float:
    """inf over the uncertainty set of c(u)^T x, for x >= 0.

    For the budget map the deviation total is fixed at gamma, so the best
    case places deviations on the gamma smallest products abar_i * x_i.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(cm, x)
    if isinstance(cm, Interval):
        return float(np.dot(cm.lower, x))
    if isinstance(cm, Correlated):
        C = np.asarray(cm.C)
        return float(np.dot(cm.c0, x) - C.T.dot(x).sum())
    if isinstance(cm, GeneralBox):
        C = np.asarray(cm.C)
        return float(np.dot(cm.c0, x) - np.abs(C.T.dot(x)).sum())
    if isinstance(cm, Gamma):
        dev = np.sort(np.asarray(cm.abar) * x)[: cm.gamma]
        return float(np.dot(cm.a0, x) + dev.sum())
    raise TypeError(f"unknown cost map {type(cm).__name__}")


def interval_to_box(cm: Interval) -> GeneralBox:
    """Unified box view: midpoint nominal, diagonal half-width deviation."""
    lo = np.asarray(cm.lower)
    hi = np.asarray(cm.upper)
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    return GeneralBox(tuple(mid), tuple(map(tuple, np.diag(half))))


def deviation_rows(cm: CostMap, x_names: Sequence[str]) -> list:
    """LinExpr rows for the deviation part (C^T x)_j of a box-type map."""
    if isinstance(cm, Interval):
        cm = interval_to_box(cm)
    if not isinstance(cm, (Correlated, GeneralBox)):
        raise ValueError("deviation rows exist only for box-type maps")
    C = np.asarray(cm.C)
    rows = []
    for j in range(C.shape[1]):
        col = C[:, j]
        rows.append(LinExpr({nm: col[i] for i, nm in enumerate(x_names) if col[i] != 0.0}))
    return rows


def dual_cone_rows(model: Model, cm: CostMap, expr_rows: Sequence[LinExpr],
                   bound: str, orientation: str = "upper",
                   prefix: str = "dc") -> None:
    """Emit rows enforcing ``bound >= l1(expr_rows)``.

    For box-type sets the membership condition on the dual side is exactly an
    l1-norm bound, realized through :func:`add_l1_epigraph`.  ``orientation``
    "lower" applies the same epigraph to the negated deviation, which
    coincides for the symmetric boxes handled here; both spellings are kept
    for call-site clarity.  Budget maps are rejected (their dualization lives
    with the knapsack application).
    """
    if isinstance(cm, Gamma):
        raise ValueError("budget maps are not box cones; use the knapsack blocks")
    if not isinstance(cm, (Interval, Correlated, GeneralBox)):
        raise TypeError(f"unknown cost map {type(cm).__name__}")
    if orientation not in ("upper", "lower"):
        raise ValueError(f"unknown orientation {orientation!r}")
    rows = list(expr_rows)
    if orientation == "lower":
        rows = [-r for r in rows]
    t = add_l1_epigraph(model, rows, prefix=prefix)
    model.add_constr(term(bound) - term(t), ">=", 0.0, tag=f"{prefix}.bound")
