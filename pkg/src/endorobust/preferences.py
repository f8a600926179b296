"""Preference functionals M(x, s) and their model blocks.

Each block emits objective terms (cost-oriented: smaller is better) plus
supporting constraints into a model for a fixed regime.  Regret comes in
several routes:

* interval maps: the maximum-deviation reformulation (hindsight dual
  embedded exactly, thanks to total unimodularity of the nominal rows);
* correlated / general box maps: either exact epigraph cuts separated by a
  small scenario MILP, or the lifted-relaxation (RLT) dual bound;
* column-wise uncertain constraint data with certain objective: the exact
  dual reformulation specialized to box sets.

The exact evaluator :func:`regret_exact_eval` is shared by the cut
separation, the audits and the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .milp import (Constraint, LinExpr, Model, add_l1_epigraph, add_mccormick,
                   lsum, solve_lp, solve_milp, term, OPTIMAL)
from .problem import EndogenousProblem
from .uncertainty import (Correlated, Gamma, GeneralBox, Interval,
                          deviation_rows, interval_to_box)


@dataclass(frozen=True)
class Predictability:
    weight: float = 1.0


@dataclass(frozen=True)
class BestCase:
    weight: float = 1.0


@dataclass(frozen=True)
class Regret:
    weight: float = 1.0
    mode: str = "auto"  # auto | exact | rlt | columnwise

    def __post_init__(self):
        if self.mode not in ("auto", "exact", "rlt", "columnwise"):
            raise ValueError(f"unknown regret mode {self.mode!r}")


PreferenceKind = Union[Predictability, BestCase, Regret]


@dataclass
class RegretCertificate:
    bound_value: float
    exact_value: Optional[float] = None
    tight: Optional[bool] = None

    def __post_init__(self):
        if self.exact_value is not None:
            if self.bound_value < self.exact_value - 1e-6:
                raise ValueError("regret bound below exact value")
            if self.tight is None:
                self.tight = self.bound_value <= self.exact_value + 1e-6


def _interval_map(problem: EndogenousProblem, s: int) -> Interval:
    cm = problem.regime(s).cost_map
    if not isinstance(cm, Interval):
        raise ValueError(f"regime {s} does not carry an interval map")
    return cm


def _x_expr(x_names: Sequence[str], coeffs: np.ndarray) -> LinExpr:
    return LinExpr({nm: float(c) for nm, c in zip(x_names, coeffs) if c != 0.0})


# -- predictability ----------------------------------------------------------


def predictability_block(problem: EndogenousProblem, model: Model,
                         x_names: Sequence[str], s: int,
                         weight: float = 1.0, prefix: str = "pred"):
    """Gap between worst- and best-case performance, as objective terms."""
    cm = problem.regime(s).cost_map
    if isinstance(cm, Gamma):
        raise ValueError("budget maps take the knapsack predictability block")
    if isinstance(cm, Interval):
        gap = np.asarray(cm.upper) - np.asarray(cm.lower)
        return weight * _x_expr(x_names, gap), None
    if isinstance(cm, Correlated):
        row_l1 = np.asarray(cm.C).sum(axis=1)  # e^T C^T x per component
        return weight * _x_expr(x_names, 2.0 * row_l1), None
    if isinstance(cm, GeneralBox):
        t = add_l1_epigraph(model, deviation_rows(cm, x_names),
                            prefix=f"{prefix}.s{s}")
        return (2.0 * weight) * term(t), None
    raise ValueError(f"unsupported cost map {type(cm).__name__}")


# -- best case ---------------------------------------------------------------


def bestcase_block(problem: EndogenousProblem, model: Model,
                   x_names: Sequence[str], s: int,
                   weight: float = 1.0, prefix: str = "best"):
    """Best-case performance as objective terms (cost-oriented)."""
    cm = problem.regime(s).cost_map
    if isinstance(cm, Gamma):
        raise ValueError("budget maps take the knapsack best-case block")
    if isinstance(cm, Interval):
        return weight * _x_expr(x_names, np.asarray(cm.lower)), None
    if isinstance(cm, Correlated):
        c0 = np.asarray(cm.c0)
        row_l1 = np.asarray(cm.C).sum(axis=1)
        return weight * _x_expr(x_names, c0 - row_l1), None
    if isinstance(cm, GeneralBox):
        # substitute u = 2v - 1 with binary v; the inner bilinear minimum is
        # attained at a box vertex, and v * x products are exact McCormicks
        C = np.asarray(cm.C)
        c0 = np.asarray(cm.c0)
        q = C.shape[1]
        parts = [_x_expr(x_names, c0 - C.sum(axis=1))]
        for k in range(q):
            v = model.add_var(f"{prefix}.s{s}.v{k}", binary=True)
            col = C[:, k]
            for i, nm in enumerate(x_names):
                if col[i] == 0.0:
                    continue
                w = add_mccormick(model, v, nm, name=f"{prefix}.s{s}.w[{k},{i}]")
                parts.append(LinExpr({w: 2.0 * float(col[i])}))
        return weight * lsum(parts), None
    raise ValueError(f"unsupported cost map {type(cm).__name__}")


# -- regret: interval maps (maximum-deviation reformulation) -----------------


def regret_interval_block(problem: EndogenousProblem, model: Model,
                          x_names: Sequence[str], s: int,
                          weight: float = 1.0, prefix: str = "kreg",
                          rhs_loosest: Optional[Sequence[float]] = None):
    """Exact interval regret via the embedded hindsight dual.

    Requires a totally unimodular nominal system (asserted for the network
    instances by construction).  The hindsight cost vector raises an arc to
    its upper bound exactly when x crosses it; weak duality floors the
    embedded term at the true maximum regret.  ``rhs_loosest`` supplies the
    loosest right-hand side when the rhs itself is interval-uncertain
    (inequality-row network flows).
    """
    cm = _interval_map(problem, s)
    lo = np.asarray(cm.lower)
    hi = np.asarray(cm.upper)
    senses = {row.sense for row in problem.rows}
    pfx = f"{prefix}.s{s}"
    if senses <= {"=="}:
        z = [model.add_var(f"{pfx}.z{r}", lower=None, upper=None)
             for r in range(len(problem.rows))]
        rhs = np.array([row.rhs for row in problem.rows])
        for i, nm in enumerate(x_names):
            coln = LinExpr({z[r]: float(row.coeffs[i])
                            for r, row in enumerate(problem.rows)
                            if row.coeffs[i] != 0.0})
            model.add_constr(coln - (hi[i] - lo[i]) * term(nm), "<=", lo[i],
                             tag=f"{pfx}.dual{i}")
        hind = LinExpr({zr: float(rhs[r]) for r, zr in enumerate(z) if rhs[r] != 0.0})
        expr = _x_expr(x_names, hi) - hind
        return weight * expr, None
    if senses <= {"<="}:
        # inequality form with variable upper bounds y <= 1 dualized as well
        z = [model.add_var(f"{pfx}.z{r}", lower=None, upper=0.0)
             for r in range(len(problem.rows))]
        z2 = [model.add_var(f"{pfx}.zu{i}", lower=None, upper=0.0)
              for i in range(len(x_names))]
        loosest = (np.array([row.rhs for row in problem.rows])
                   if rhs_loosest is None else np.asarray(rhs_loosest, dtype=float))
        for i, nm in enumerate(x_names):
            coln = LinExpr({z[r]: float(row.coeffs[i])
                            for r, row in enumerate(problem.rows)
                            if row.coeffs[i] != 0.0})
            coln = coln + term(z2[i])
            model.add_constr(coln - (hi[i] - lo[i]) * term(nm), "<=", lo[i],
                             tag=f"{pfx}.dual{i}")
        hind = lsum([LinExpr({zr: float(loosest[r])})
                     for r, zr in enumerate(z) if loosest[r] != 0.0]
                    + [term(z2i) for z2i in z2])
        expr = _x_expr(x_names, hi) - hind
        return weight * expr, None
    raise ValueError("interval regret block needs all-equality or all-<= rows")


# -- regret: exact evaluation and epigraph cuts ------------------------------


def regret_exact_eval(problem: EndogenousProblem, x: Sequence[float], s: int,
                      return_scenario: bool = False):
    """Exact maximum regret of the fixed solution x under regime s.

    Interval maps reduce to one hindsight solve under the raised-on-support
    cost vector; box maps solve a small scenario MILP over box-vertex signs
    (binary v with u = 2v - 1) and a binary hindsight response, with the
    bilinear products linearized exactly.
    """
    x = np.asarray(x, dtype=float)
    cm = problem.regime(s).cost_map
    if problem.budget_uncertain:
        from . import knapsack as _kp
        rho = _kp.hindsight_optimum(problem.source, s) - float(
            np.dot(problem.objective_certain, x))
        rho = _guard_nonneg(rho)
        return (rho, None) if return_scenario else rho
    if isinstance(cm, Interval):
        lo = np.asarray(cm.lower)
        hi = np.asarray(cm.upper)
        cx = lo + (hi - lo) * np.round(x)
        m = Model("min")
        ynames = [m.add_var(f"y{i}", lower=0.0, upper=problem.var_upper)
                  for i in range(problem.num_vars)]
        _add_certain_rows(m, problem, ynames)
        m.set_objective(_x_expr(ynames, cx))
        res = solve_lp(m)
        if res.status != OPTIMAL:
            raise RuntimeError("hindsight problem infeasible")
        rho = _guard_nonneg(float(np.dot(hi, x)) - res.objective)
        if return_scenario:
            u = np.where(np.round(x) > 0.5, 1.0, -1.0)
            ystar = np.array([res.primal[nm] for nm in ynames])
            return rho, (u, ystar)
        return rho
    if isinstance(cm, (Correlated, GeneralBox)):
        c0 = np.asarray(cm.c0)
        C = np.asarray(cm.C)
        q = C.shape[1]
        m = Model("max")
        ynames = [m.add_var(f"y{i}", binary=True) for i in range(problem.num_vars)]
        vnames = [m.add_var(f"v{k}", binary=True) for k in range(q)]
        _add_certain_rows(m, problem, ynames)
        # c(u)^T (x - y) with u = 2v - 1
        const = float(np.dot(c0, x) - np.dot(C.sum(axis=1), x))
        parts = [LinExpr({}, const)]
        ctx = C.T.dot(x)
        for k in range(q):
            parts.append(LinExpr({vnames[k]: 2.0 * float(ctx[k])}))
        parts.append(_x_expr(ynames, -(c0 - C.sum(axis=1))))
        for k in range(q):
            col = C[:, k]
            for i in range(problem.num_vars):
                if col[i] == 0.0:
                    continue
                w = add_mccormick(m, vnames[k], ynames[i], name=f"w[{k},{i}]")
                parts.append(LinExpr({w: -2.0 * float(col[i])}))
        m.set_objective(lsum(parts))
        res = solve_milp(m)
        if res.status != OPTIMAL:
            raise RuntimeError("regret scenario problem did not solve")
        rho = _guard_nonneg(res.objective)
        if return_scenario:
            v = np.array([res.incumbent[nm] for nm in vnames])
            u = 2.0 * np.round(v) - 1.0
            ystar = np.round([res.incumbent[nm] for nm in ynames])
            return rho, (u, ystar)
        return rho
    raise ValueError(f"unsupported cost map {type(cm).__name__}")


def _guard_nonneg(rho: float) -> float:
    if rho < -1e-6:
        raise RuntimeError(f"negative regret {rho}: inconsistent evaluation")
    return max(rho, 0.0)


def _add_certain_rows(model: Model, problem: EndogenousProblem,
                      names: Sequence[str]) -> None:
    for r, row in enumerate(problem.rows):
        model.add_constr(_x_expr(names, row.as_array()), row.sense, row.rhs,
                         tag=f"row{r}")


def regret_cuts_block(problem: EndogenousProblem, model: Model,
                      x_names: Sequence[str], s: int,
                      weight: float = 1.0, prefix: str = "rcut"):
    """Exact regret epigraph grown by lazy scenario cuts.

    Every integral candidate is checked against its exact regret; a violated
    candidate contributes the affine cut ``rho >= c_s(u*)^T x - c_s(u*)^T y*``
    from the maximizing scenario (u*, y*), which is globally valid.
    """
    cm = problem.regime(s).cost_map
    if isinstance(cm, Interval):
        box = interval_to_box(cm)
    else:
        box = cm
    c0 = np.asarray(box.c0)
    C = np.asarray(box.C)
    pfx = f"{prefix}.s{s}"
    rho = model.add_var(f"{pfx}.rho", lower=0.0)

    def callback(point: dict):
        x = np.round([point[nm] for nm in x_names])
        val, scen = regret_exact_eval(problem, x, s, return_scenario=True)
        if point[rho] >= val - 1e-7:
            return []
        u, ystar = scen
        cu = c0 + C.dot(u)
        hind = float(np.dot(cu, ystar))
        cut = term(rho) - _x_expr(x_names, cu)
        return [Constraint(cut + hind, ">=", tag=f"{pfx}.cut")]

    return weight * term(rho), callback


# -- regret: lifted-relaxation (RLT) dual bound ------------------------------


def _box_view(cm) -> GeneralBox:
    if isinstance(cm, Interval):
        return interval_to_box(cm)
    if isinstance(cm, (Correlated, GeneralBox)):
        return GeneralBox(cm.c0, cm.C)
    raise ValueError(f"unsupported cost map {type(cm).__name__}")


def regret_rlt_block(problem: EndogenousProblem, model: Model,
                     x_names: Sequence[str], s: int,
                     weight: float = 1.0, prefix: str = "rlt"):
    """Dual of the lifted inner maximum: an upper bound on the regret.

    The inner max over (u, y) is relaxed by lifting products psi = u y with
    their McCormick rows plus the row-times-parameter products of the
    nominal equalities, then dualized; any dual-feasible point upper-bounds
    the true regret, and minimizing picks the tightest such bound.
    """
    for row in problem.rows:
        if row.sense != "==":
            raise ValueError("the lifted regret bound needs equality rows")
    box = _box_view(problem.regime(s).cost_map)
    c0 = np.asarray(box.c0)
    C = np.asarray(box.C)
    n = problem.num_vars
    Cbar = np.hstack([C, -C])
    q2 = Cbar.shape[1]
    E = np.array([row.as_array() for row in problem.rows])
    d = np.array([row.rhs for row in problem.rows])
    mrows = len(problem.rows)
    pfx = f"{prefix}.s{s}"

    z = [model.add_var(f"{pfx}.z{r}", lower=None, upper=None) for r in range(mrows)]
    eta = [model.add_var(f"{pfx}.eta{i}", lower=0.0) for i in range(n)]
    theta = [model.add_var(f"{pfx}.th{j}", lower=0.0) for j in range(q2)]
    a = {}
    bb = {}
    g = {}
    zeta = {}
    for j in range(q2):
        for r in range(mrows):
            zeta[r, j] = model.add_var(f"{pfx}.zeta[{r},{j}]", lower=None, upper=None)
        for i in range(n):
            a[i, j] = model.add_var(f"{pfx}.a[{i},{j}]", lower=0.0)
            bb[i, j] = model.add_var(f"{pfx}.b[{i},{j}]", lower=0.0)
            g[i, j] = model.add_var(f"{pfx}.g[{i},{j}]", lower=0.0)

    # dual row per y_i
    for i in range(n):
        e = LinExpr({z[r]: float(E[r, i]) for r in range(mrows) if E[r, i] != 0.0})
        e = e + term(eta[i])
        e = e + lsum(LinExpr({bb[i, j]: -1.0, g[i, j]: 1.0}) for j in range(q2))
        model.add_constr(e, ">=", -float(c0[i]), tag=f"{pfx}.y{i}")
    # dual row per u_j (x enters here)
    for j in range(q2):
        e = term(theta[j])
        e = e + lsum(LinExpr({a[i, j]: -1.0, g[i, j]: 1.0}) for i in range(n))
        e = e - LinExpr({zeta[r, j]: float(d[r]) for r in range(mrows) if d[r] != 0.0})
        e = e - _x_expr(x_names, Cbar[:, j])
        model.add_constr(e, ">=", 0.0, tag=f"{pfx}.u{j}")
    # dual row per psi_ij
    for i in range(n):
        for j in range(q2):
            e = LinExpr({a[i, j]: 1.0, bb[i, j]: 1.0, g[i, j]: -1.0})
            e = e + LinExpr({zeta[r, j]: float(E[r, i])
                             for r in range(mrows) if E[r, i] != 0.0})
            model.add_constr(e, ">=", -float(Cbar[i, j]), tag=f"{pfx}.psi[{i},{j}]")

    bound = (_x_expr(x_names, c0)
             + LinExpr({z[r]: float(d[r]) for r in range(mrows) if d[r] != 0.0})
             + lsum(term(v) for v in eta)
             + lsum(term(v) for v in theta)
             + lsum(term(v) for v in g.values()))
    return weight * bound, None


def regret_rlt_bound(problem: EndogenousProblem, x: Sequence[float],
                     s: int) -> float:
    """Numeric RLT bound at a fixed solution (solves the dual LP)."""
    x = np.asarray(x, dtype=float)
    model = Model("min")
    x_names = [model.add_var(f"x{i}", lower=float(v), upper=float(v))
               for i, v in enumerate(x)]
    expr, _ = regret_rlt_block(problem, model, x_names, s)
    model.set_objective(expr)
    res = solve_lp(model)
    if res.status != OPTIMAL:
        raise RuntimeError("RLT dual bound LP did not solve")
    return res.objective


def regret_certificate(problem: EndogenousProblem, x: Sequence[float],
                       s: int) -> RegretCertificate:
    bound = regret_rlt_bound(problem, x, s)
    exact = regret_exact_eval(problem, x, s)
    return RegretCertificate(bound_value=bound, exact_value=exact)


# -- regret: column-wise uncertain constraint data ---------------------------


@dataclass(frozen=True)
class ColumnwiseProblem:
    """min c0^T x s.t. sum_i a_i(u_i) x_i <= b(u), x >= 0, per-column boxes.

    Column i has nominal ``a0_i`` and deviation matrix ``A_i`` (m x q_i)
    over ``||u_i||_inf <= 1``; the rhs has nominal ``b0`` and deviation
    matrix ``B``.
    """

    c0: tuple
    a0: tuple        # columns, each length m
    A: tuple         # deviation matrices per column, each m x q_i
    b0: tuple
    B: tuple         # m x q_rhs

    def __post_init__(self):
        if len(self.a0) != len(self.c0) or len(self.A) != len(self.c0):
            raise ValueError("column-wise data: one a0/A per objective entry")


def regret_columnwise_block(cw: ColumnwiseProblem, model: Model,
                            x_names: Sequence[str],
                            weight: float = 1.0, prefix: str = "cw"):
    """Exact regret rows for certain-objective column-wise box uncertainty."""
    m = len(cw.b0)
    n = len(cw.c0)
    if len(x_names) != n:
        raise ValueError("x dimension mismatch")
    z = [model.add_var(f"{prefix}.z{r}", lower=None, upper=0.0) for r in range(m)]
    B = np.atleast_2d(np.asarray(cw.B, dtype=float))
    rows_b = [LinExpr({z[r]: float(B[r, k]) for r in range(m) if B[r, k] != 0.0})
              for k in range(B.shape[1])]
    tau = add_l1_epigraph(model, rows_b, prefix=f"{prefix}.tau")
    for i in range(n):
        Ai = np.atleast_2d(np.asarray(cw.A[i], dtype=float))
        a0i = np.asarray(cw.a0[i], dtype=float)
        rows_i = [LinExpr({z[r]: float(Ai[r, k]) for r in range(m) if Ai[r, k] != 0.0})
                  for k in range(Ai.shape[1])]
        ti = add_l1_epigraph(model, rows_i, prefix=f"{prefix}.col{i}")
        lhs = term(ti) + LinExpr({z[r]: float(a0i[r]) for r in range(m) if a0i[r] != 0.0})
        model.add_constr(lhs, "<=", float(cw.c0[i]), tag=f"{prefix}.dualcol{i}")
    rho = model.add_var(f"{prefix}.rho", lower=0.0)
    b0z = LinExpr({z[r]: float(cw.b0[r]) for r in range(m) if cw.b0[r] != 0.0})
    model.add_constr(term(rho) - _x_expr(x_names, np.asarray(cw.c0))
                     + b0z - term(tau), ">=", 0.0, tag=f"{prefix}.epi")
    return weight * term(rho), None
