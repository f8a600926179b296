"""Dense LP/MILP kernel.

Bounded-variable primal simplex with dual values and Bland's-rule fallback,
plus a depth-first branch-and-bound loop that supports lazy constraint
callbacks.  Includes the two linearization gadgets used throughout the
package: exact McCormick envelopes for binary-times-bounded products and
l1-norm epigraphs.

Sign conventions, fixed once:

* Maximization models are canonicalized to minimization by negating the
  objective; the reported objective is re-negated.
* Dual values are always reported for the canonical minimization form:
  the dual of a ``<=`` row is ``<= 0``, of a ``>=`` row ``>= 0``, of an
  equality row free.  For maximize models the shadow price of a row is
  therefore the negated dual.
* Reduced costs refer to the canonical minimization objective as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
RESOURCE_EXHAUSTED = "resource_exhausted"

EPS_FEAS = 1e-7
EPS_GAP = 1e-6
EPS_INT = 1e-6

_INF = float("inf")


class ModelError(ValueError):
    """Malformed model: dangling variable, bad bounds, unusable gadget input."""


class SimplexStallError(RuntimeError):
    """Simplex hit its iteration cap (should not happen with the Bland fallback)."""


class LinExpr:
    """Sparse linear expression: coefficient map over variable names + constant.

    Zero coefficients are dropped on construction, so the map is normalized.
    """

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Optional[dict] = None, const: float = 0.0):
        cleaned: dict[str, float] = {}
        if coeffs:
            for name, coef in coeffs.items():
                c = float(coef)
                if c != 0.0:
                    cleaned[name] = c
        self.coeffs = cleaned
        self.const = float(const)

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.coeffs), self.const)

    def __add__(self, other):
        if isinstance(other, LinExpr):
            out = dict(self.coeffs)
            for k, v in other.coeffs.items():
                out[k] = out.get(k, 0.0) + v
            return LinExpr(out, self.const + other.const)
        return LinExpr(dict(self.coeffs), self.const + float(other))

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.coeffs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LinExpr) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, scalar):
        s = float(scalar)
        return LinExpr({k: s * v for k, v in self.coeffs.items()}, s * self.const)

    __rmul__ = __mul__

    def value(self, point: dict) -> float:
        return self.const + sum(c * point[k] for k, c in self.coeffs.items())

    def __repr__(self):
        parts = [f"{c:+g}*{k}" for k, c in self.coeffs.items()]
        if self.const or not parts:
            parts.append(f"{self.const:+g}")
        return " ".join(parts)


def term(name: str, coef: float = 1.0) -> LinExpr:
    return LinExpr({name: coef})


def lsum(exprs: Iterable[LinExpr]) -> LinExpr:
    coeffs: dict[str, float] = {}
    const = 0.0
    for e in exprs:
        for k, v in e.coeffs.items():
            coeffs[k] = coeffs.get(k, 0.0) + v
        const += e.const
    return LinExpr(coeffs, const)


@dataclass(frozen=True)
class VariableSpec:
    name: str
    lower: float
    upper: float
    binary: bool = False


@dataclass(frozen=True)
class Constraint:
    """``expr <sense> 0`` with the right-hand side folded into the constant."""

    expr: LinExpr
    sense: str  # "<=", "==", ">="
    tag: str = ""


@dataclass
class LpResult:
    status: str
    primal: dict
    objective: float
    duals: list
    reduced_costs: dict


@dataclass
class MilpResult:
    status: str
    incumbent: dict
    objective: float
    node_count: int
    lazy_cuts_added: int


class Model:
    """A linear / mixed-binary model built from named variables and rows."""

    def __init__(self, sense: str = "min", name: str = "model"):
        if sense not in ("min", "max"):
            raise ModelError(f"unknown sense {sense!r}")
        self.sense = sense
        self.name = name
        self._vars: dict[str, VariableSpec] = {}
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self._auto = 0

    # -- construction -----------------------------------------------------

    def add_var(self, name: Optional[str] = None, lower: float = 0.0,
                upper: Optional[float] = None, binary: bool = False) -> str:
        if name is None:
            name = f"v{self._auto}"
            self._auto += 1
        if name in self._vars:
            raise ModelError(f"duplicate variable {name!r}")
        lo = -_INF if lower is None else float(lower)
        hi = _INF if upper is None else float(upper)
        if binary:
            lo = 0.0 if lower is None else max(0.0, float(lower))
            hi = 1.0 if upper is None else min(1.0, float(upper))
        if lo > hi:
            raise ModelError(f"variable {name!r} has lower {lo} > upper {hi}")
        self._vars[name] = VariableSpec(name, lo, hi, binary)
        return name

    def add_constr(self, expr: LinExpr, sense: str, rhs: float = 0.0,
                   tag: str = "") -> int:
        if sense not in ("<=", "==", ">="):
            raise ModelError(f"unknown constraint sense {sense!r}")
        self._check_names(expr)
        if not tag:
            tag = f"c{len(self.constraints)}"
        self.constraints.append(Constraint(expr - float(rhs), sense, tag))
        return len(self.constraints) - 1

    def set_objective(self, expr: LinExpr) -> None:
        self._check_names(expr)
        self.objective = expr.copy()

    def add_objective(self, expr: LinExpr) -> None:
        self.set_objective(self.objective + expr)

    def _check_names(self, expr: LinExpr) -> None:
        for k in expr.coeffs:
            if k not in self._vars:
                raise ModelError(f"expression references unknown variable {k!r}")

    # -- introspection ----------------------------------------------------

    @property
    def variables(self) -> list:
        return list(self._vars.values())

    def var_names(self) -> list:
        return list(self._vars.keys())

    def spec(self, name: str) -> VariableSpec:
        return self._vars[name]

    def dump(self) -> str:
        """Plain-text listing, one constraint per line, for diffing in tests."""
        lines = [f"{self.name}: {self.sense}"]
        obj = " ".join(f"{c:+.12g}*{k}" for k, c in self.objective.coeffs.items())
        lines.append(f"objective: {obj or '0'} {self.objective.const:+.12g}")
        for con in self.constraints:
            body = " ".join(f"{c:+.12g}*{k}" for k, c in con.expr.coeffs.items())
            lines.append(f"{con.tag}: {body or '0'} {con.sense} {-con.expr.const:.12g}")
        for v in self._vars.values():
            kind = "bin" if v.binary else "cont"
            lines.append(f"bound: {v.lower:.12g} <= {v.name} <= {v.upper:.12g} [{kind}]")
        return "\n".join(lines)

    # -- dense extraction -------------------------------------------------

    def _arrays(self):
        names = list(self._vars.keys())
        index = {n: j for j, n in enumerate(names)}
        n = len(names)
        m = len(self.constraints)
        A = np.zeros((m, n))
        b = np.zeros(m)
        senses = []
        for i, con in enumerate(self.constraints):
            for k, c in con.expr.coeffs.items():
                A[i, index[k]] = c
            b[i] = -con.expr.const
            senses.append(con.sense)
        c = np.zeros(n)
        for k, v in self.objective.coeffs.items():
            c[index[k]] = v
        lo = np.array([v.lower for v in self._vars.values()])
        hi = np.array([v.upper for v in self._vars.values()])
        binmask = np.array([v.binary for v in self._vars.values()])
        return names, c, self.objective.const, A, senses, b, lo, hi, binmask


# -- simplex ---------------------------------------------------------------

_AT_LO, _AT_UP, _FREE, _BASIC = 0, 1, 2, 3
_DTOL = 1e-9     # reduced-cost tolerance
_RTOL = 1e-9     # ratio-test pivot tolerance
_STALL_LIMIT = 300   # degenerate pivots before the Bland fallback kicks in


def _initial_point(lo, hi):
    n = len(lo)
    vals = np.zeros(n)
    stat = np.full(n, _FREE, dtype=np.int8)
    lo_fin = np.isfinite(lo)
    hi_fin = np.isfinite(hi)
    stat[lo_fin] = _AT_LO
    vals[lo_fin] = lo[lo_fin]
    only_up = ~lo_fin & hi_fin
    stat[only_up] = _AT_UP
    vals[only_up] = hi[only_up]
    return vals, stat


class _Simplex:
    """Bounded-variable primal simplex over equality rows with explicit B^-1."""

    def __init__(self, Afull, b, lo, hi, basis, stat, vals):
        self.A = Afull
        self.b = b
        self.lo = lo
        self.hi = hi
        self.basis = basis
        self.stat = stat
        self.vals = vals
        self.m = Afull.shape[0]
        self.Binv = np.linalg.inv(Afull[:, basis])
        self._recompute()

    def _recompute(self):
        nb = self.stat != _BASIC
        rhs = self.b - self.A[:, nb] @ self.vals[nb]
        self.vals[self.basis] = self.Binv @ rhs

    def _refactor(self):
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        self._recompute()

    def run(self, c, max_iter):
        bland = False
        stall = 0
        fixed = self.lo >= self.hi - 1e-30
        for it in range(max_iter):
            if it and it % 128 == 0:
                self._refactor()
            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            elig = (
                ((self.stat == _AT_LO) & (d < -_DTOL) & ~fixed)
                | ((self.stat == _AT_UP) & (d > _DTOL) & ~fixed)
                | ((self.stat == _FREE) & (np.abs(d) > _DTOL))
            )
            if not elig.any():
                return OPTIMAL, y
            cand = np.flatnonzero(elig)
            if bland:
                e = int(cand[0])
            else:
                e = int(cand[np.argmax(np.abs(d[cand]))])
            dirn = 1.0 if d[e] < 0 else -1.0
            w = self.Binv @ self.A[:, e]
            delta = -dirn * w

            span = self.hi[e] - self.lo[e]
            t_own = span if np.isfinite(span) else _INF

            bvals = self.vals[self.basis]
            blo = self.lo[self.basis]
            bhi = self.hi[self.basis]
            t_rows = np.full(self.m, _INF)
            up = delta > _RTOL
            dn = delta < -_RTOL
            t_rows[up] = np.maximum(bhi[up] - bvals[up], 0.0) / delta[up]
            t_rows[dn] = np.maximum(bvals[dn] - blo[dn], 0.0) / (-delta[dn])
            r = int(np.argmin(t_rows))
            t_row = t_rows[r]

            if t_own <= t_row:
                if not np.isfinite(t_own):
                    return UNBOUNDED, y
                # bound flip: entering variable runs to its opposite bound
                self.vals[e] = self.hi[e] if self.stat[e] == _AT_LO else self.lo[e]
                self.stat[e] = _AT_UP if self.stat[e] == _AT_LO else _AT_LO
                self.vals[self.basis] = bvals + t_own * delta
                t = t_own
            else:
                ties = np.flatnonzero(t_rows <= t_row + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                if abs(w[r]) < 1e-11:
                    self._refactor()
                    continue
                t = max(t_row, 0.0)
                leave = self.basis[r]
                self.vals[self.basis] = bvals + t * delta
                self.vals[leave] = bhi[r] if delta[r] > 0 else blo[r]
                self.stat[leave] = _AT_UP if delta[r] > 0 else _AT_LO
                start = self.vals[e] if self.stat[e] == _FREE else (
                    self.lo[e] if self.stat[e] == _AT_LO else self.hi[e])
                self.vals[e] = start + dirn * t
                self.stat[e] = _BASIC
                self.basis[r] = e
                # product-form update of B^-1
                piv = w[r]
                row = self.Binv[r, :] / piv
                self.Binv -= np.outer(w, row)
                self.Binv[r, :] = row
            if t <= 1e-11:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
            else:
                stall = 0
        raise SimplexStallError(f"no convergence in {max_iter} iterations")


def _solve_arrays(c, A, senses, b, lo, hi, max_iter=None):
    """Two-phase bounded simplex.  Returns (status, x, y, reduced_costs)."""
    m, n = A.shape
    if max_iter is None:
        max_iter = max(2000, 60 * (m + n))

    sl = np.array([{"<=": 0.0, "==": 0.0, ">=": -_INF}[s] for s in senses])
    sh = np.array([{"<=": _INF, "==": 0.0, ">=": 0.0}[s] for s in senses])
    lo_all = np.concatenate([lo, sl])
    hi_all = np.concatenate([hi, sh])
    Aall = np.hstack([A, np.eye(m)]) if m else np.zeros((0, n))

    if m == 0:
        # pure bound problem
        x, _ = _initial_point(lo, hi)
        for j in range(n):
            if c[j] < -_DTOL:
                if not np.isfinite(hi[j]):
                    return UNBOUNDED, None, None, None
                x[j] = hi[j]
            elif c[j] > _DTOL:
                if not np.isfinite(lo[j]):
                    return UNBOUNDED, None, None, None
                x[j] = lo[j]
        return OPTIMAL, x, np.zeros(0), c.copy()

    vals0, stat0 = _initial_point(lo_all, hi_all)
    resid = b - Aall @ vals0
    sigma = np.where(resid >= 0, 1.0, -1.0)
    Afull = np.hstack([Aall, np.diag(sigma)])
    lo_full = np.concatenate([lo_all, np.zeros(m)])
    hi_full = np.concatenate([hi_all, np.full(m, _INF)])
    vals = np.concatenate([vals0, np.abs(resid)])
    stat = np.concatenate([stat0, np.full(m, _BASIC, dtype=np.int8)])
    basis = np.arange(n + m, n + 2 * m)

    sx = _Simplex(Afull, b, lo_full, hi_full, basis, stat, vals)
    c1 = np.zeros(n + 2 * m)
    c1[n + m:] = 1.0
    status, _ = sx.run(c1, max_iter)
    if status != OPTIMAL or c1 @ sx.vals > 1e-7:
        return INFEASIBLE, None, None, None

    # freeze artificials at zero for phase 2
    sx.lo[n + m:] = 0.0
    sx.hi[n + m:] = 0.0
    art_nb = np.flatnonzero(sx.stat[n + m:] != _BASIC) + n + m
    sx.stat[art_nb] = _AT_LO
    sx.vals[art_nb] = 0.0

    c2 = np.concatenate([c, np.zeros(2 * m)])
    status, y = sx.run(c2, max_iter)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None, None
    x = sx.vals[:n].copy()
    np.clip(x, lo, hi, out=x)
    red = c - (y @ A if m else 0.0)
    return OPTIMAL, x, y, red


def solve_lp(model: Model, max_iter: Optional[int] = None) -> LpResult:
    """Solve a continuous model; binaries are rejected (use solve_milp)."""
    names, c, c0, A, senses, b, lo, hi, binmask = model._arrays()
    if binmask.any():
        raise ModelError("solve_lp requires a purely continuous model")
    return _lp_from_arrays(model, names, c, c0, A, senses, b, lo, hi)


def _lp_from_arrays(model, names, c, c0, A, senses, b, lo, hi) -> LpResult:
    csolve = -c if model.sense == "max" else c
    status, x, y, red = _solve_arrays(csolve, A, senses, b, lo, hi)
    if status != OPTIMAL:
        return LpResult(status, {}, float("nan"), [], {})
    obj = float(c @ x) + c0
    primal = {nm: float(v) for nm, v in zip(names, x)}
    duals = [float(v) for v in y]
    redcost = {nm: float(v) for nm, v in zip(names, red)}
    return LpResult(OPTIMAL, primal, obj, duals, redcost)


def solve_milp(model: Model,
               lazy: Optional[Callable[[dict], Sequence[Constraint]]] = None,
               node_limit: int = 200_000) -> MilpResult:
    """Depth-first branch and bound over LP relaxations.

    ``lazy`` is called on every integral candidate with the primal point
    (dict name -> value); returned constraints are added globally and the
    node re-solved.  A candidate becomes the incumbent only once ``lazy``
    returns no cuts for it.
    """
    names, c, c0, A, senses, b, lo, hi, binmask = model._arrays()
    index = {n: j for j, n in enumerate(names)}
    csolve = -c if model.sense == "max" else c
    bin_idx = np.flatnonzero(binmask)

    cut_rows: list[np.ndarray] = []
    cut_senses: list[str] = []
    cut_b: list[float] = []
    cuts_added = 0

    def node_solve(nlo, nhi):
        if cut_rows:
            A2 = np.vstack([A] + [r[None, :] for r in cut_rows])
            s2 = senses + cut_senses
            b2 = np.concatenate([b, np.array(cut_b)])
        else:
            A2, s2, b2 = A, senses, b
        return _solve_arrays(csolve, A2, s2, b2, nlo, nhi)

    def add_cut(con: Constraint):
        row = np.zeros(len(names))
        for k, v in con.expr.coeffs.items():
            if k not in index:
                raise ModelError(f"lazy cut references unknown variable {k!r}")
            row[index[k]] = v
        cut_rows.append(row)
        cut_senses.append(con.sense)
        cut_b.append(-con.expr.const)

    best_x = None
    best_obj = _INF
    node_count = 0
    stack = [(lo, hi)]
    while stack:
        nlo, nhi = stack.pop()
        node_count += 1
        if node_count > node_limit:
            if best_x is not None:
                return MilpResult(RESOURCE_EXHAUSTED,
                                  {nm: float(v) for nm, v in zip(names, best_x)},
                                  _native_obj(model, c, c0, best_x),
                                  node_count, cuts_added)
            return MilpResult(RESOURCE_EXHAUSTED, {}, float("nan"),
                              node_count, cuts_added)
        for _round in range(10_000):
            status, x, _, _ = node_solve(nlo, nhi)
            if status == UNBOUNDED:
                return MilpResult(UNBOUNDED, {}, float("nan"), node_count, cuts_added)
            if status != OPTIMAL:
                break
            objv = float(csolve @ x)
            if objv >= best_obj - 1e-9:
                break
            if len(bin_idx):
                fracs = np.abs(x[bin_idx] - np.round(x[bin_idx]))
                j_rel = int(np.argmax(fracs))
                worst = fracs[j_rel]
            else:
                worst = 0.0
            if worst <= EPS_INT:
                if lazy is not None:
                    point = {nm: float(v) for nm, v in zip(names, x)}
                    new = list(lazy(point))
                    if new:
                        cuts_added += len(new)
                        for con in new:
                            add_cut(con)
                        continue  # re-solve this node under the new cuts
                best_x = x
                best_obj = objv
                break
            j = int(bin_idx[j_rel])
            frac = x[j] - np.floor(x[j])
            lo_child = nlo.copy(); lo_child[j] = 1.0
            hi_child = nhi.copy(); hi_child[j] = 0.0
            if frac >= 0.5:
                stack.append((nlo, hi_child))       # x_j = 0 later
                stack.append((lo_child, nhi))       # x_j = 1 first
            else:
                stack.append((lo_child, nhi))       # x_j = 1 later
                stack.append((nlo, hi_child))       # x_j = 0 first
            break
        else:
            raise SimplexStallError("lazy-cut loop did not settle")
    if best_x is None:
        return MilpResult(INFEASIBLE, {}, float("nan"), node_count, cuts_added)
    return MilpResult(OPTIMAL,
                      {nm: float(v) for nm, v in zip(names, best_x)},
                      _native_obj(model, c, c0, best_x),
                      node_count, cuts_added)


def _native_obj(model, c, c0, x) -> float:
    return float(c @ x) + c0


# -- linearization gadgets --------------------------------------------------


def add_mccormick(model: Model, x: str, y: str, name: Optional[str] = None) -> str:
    """Add ``w = x * y`` for binary ``x`` and bounded ``y``; returns ``w``.

    Emits the four envelope rows; exactness relies on ``x`` being binary.
    """
    sx = model.spec(x)
    sy = model.spec(y)
    if not sx.binary:
        raise ModelError(f"McCormick factor {x!r} must be binary")
    L, U = sy.lower, sy.upper
    if not (np.isfinite(L) and np.isfinite(U)):
        raise ModelError(f"McCormick factor {y!r} must have finite bounds")
    w = model.add_var(name or f"_mc[{x}*{y}]", lower=min(0.0, L), upper=max(0.0, U))
    model.add_constr(term(w) - U * term(x), "<=", 0.0, tag=f"mc_ub1[{w}]")
    model.add_constr(term(w) - L * term(x), ">=", 0.0, tag=f"mc_lb1[{w}]")
    model.add_constr(term(w) - term(y) - L * term(x), "<=", -L, tag=f"mc_ub2[{w}]")
    model.add_constr(term(w) - term(y) - U * term(x), ">=", -U, tag=f"mc_lb2[{w}]")
    return w


def add_l1_epigraph(model: Model, rows: Sequence[LinExpr],
                    prefix: Optional[str] = None) -> str:
    """Add ``t = sum_j t_j`` with ``t_j >= |row_j|``; returns ``t``.

    Under minimization pressure (or a <= bound on ``t``) this realizes the
    l1 norm of the row values.
    """
    if prefix is None:
        prefix = f"_l1_{len(model.constraints)}"
    t = model.add_var(f"{prefix}.t", lower=0.0, upper=None if rows else 0.0)
    parts = []
    for j, row in enumerate(rows):
        tj = model.add_var(f"{prefix}.t{j}", lower=0.0)
        model.add_constr(term(tj) - row, ">=", 0.0, tag=f"{prefix}.abs+{j}")
        model.add_constr(term(tj) + row, ">=", 0.0, tag=f"{prefix}.abs-{j}")
        parts.append(term(tj))
    model.add_constr(term(t) - lsum(parts), "==", 0.0, tag=f"{prefix}.sum")
    return t
