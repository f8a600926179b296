import itertools

import numpy as np
import pytest

from endorobust.milp import (
    Model, LinExpr, term, lsum, Constraint, ModelError,
    solve_lp, solve_milp, add_mccormick, add_l1_epigraph,
    OPTIMAL, INFEASIBLE, UNBOUNDED, RESOURCE_EXHAUSTED,
)


def two_var_min():
    m = Model("min")
    m.add_var("x1")
    m.add_var("x2")
    return m


def test_lp_symmetric_tight_constraint():
    m = two_var_min()
    m.add_constr(term("x1") + term("x2"), ">=", 1.0, tag="cover")
    m.set_objective(term("x1") + term("x2"))
    res = solve_lp(m)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(1.0, abs=1e-9)
    assert res.duals[0] == pytest.approx(1.0, abs=1e-9)


def test_lp_infeasible():
    m = Model("min")
    m.add_var("x1", lower=0.0)
    m.add_constr(term("x1"), "<=", -1.0)
    m.set_objective(term("x1"))
    assert solve_lp(m).status == INFEASIBLE


def test_lp_unbounded():
    m = Model("min")
    m.add_var("x1", lower=None, upper=None)
    m.set_objective(term("x1"))
    assert solve_lp(m).status == UNBOUNDED


def test_lp_dangling_variable_is_construction_error():
    m = Model("min")
    m.add_var("x1")
    with pytest.raises(ModelError):
        m.add_constr(term("nope"), "<=", 1.0)
    with pytest.raises(ModelError):
        m.set_objective(term("nope"))


def test_lp_negative_lower_bounds_and_free_vars():
    m = Model("min")
    m.add_var("x", lower=-2.0, upper=3.0)
    m.add_var("y", lower=None, upper=None)
    m.add_constr(term("x") + term("y"), "==", 1.0)
    m.set_objective(term("x") + 2.0 * term("y"))
    res = solve_lp(m)
    # push x up to 3, y = -2
    assert res.status == OPTIMAL
    assert res.primal["x"] == pytest.approx(3.0, abs=1e-9)
    assert res.primal["y"] == pytest.approx(-2.0, abs=1e-9)


def test_lp_maximize_reuses_min_kernel():
    m = Model("max")
    m.add_var("x", upper=4.0)
    m.add_var("y", upper=3.0)
    m.add_constr(term("x") + term("y"), "<=", 5.0, tag="cap")
    m.set_objective(2.0 * term("x") + term("y"))
    res = solve_lp(m)
    assert res.objective == pytest.approx(9.0, abs=1e-9)
    # duals are reported in the canonical minimization convention
    assert res.duals[0] <= 1e-12


def _random_lp(rng, n, mrows):
    m = Model("min")
    names = [m.add_var(f"x{j}", lower=0.0, upper=float(rng.uniform(1, 5)))
             for j in range(n)]
    A = rng.uniform(-2, 2, size=(mrows, n))
    x0 = rng.uniform(0, 1, size=n)  # keep feasibility at hand
    for i in range(mrows):
        sense = ("<=", ">=", "==")[int(rng.integers(0, 3))]
        slack = {"<=": rng.uniform(0, 2), ">=": -rng.uniform(0, 2), "==": 0.0}[sense]
        rhs = float(A[i] @ x0 + slack)
        m.add_constr(lsum(term(nm, A[i, j]) for j, nm in enumerate(names)),
                     sense, rhs)
    c = rng.uniform(-1, 1, size=n)
    m.set_objective(lsum(term(nm, c[j]) for j, nm in enumerate(names)))
    return m, names, c


def test_strong_duality_on_random_lps():
    rng = np.random.default_rng(20240117)
    checked = 0
    for k in range(60):
        n = int(rng.integers(1, 9))
        mr = int(rng.integers(1, 9))
        model, names, c = _random_lp(rng, n, mr)
        res = solve_lp(model)
        if res.status != OPTIMAL:
            continue
        checked += 1
        # dual objective = y^T b + sum over nonbasic structural of d_j * x_j
        b = [-con.expr.const for con in model.constraints]
        dual_obj = float(np.dot(res.duals, b))
        dual_obj += sum(res.reduced_costs[nm] * res.primal[nm] for nm in names)
        assert res.objective == pytest.approx(dual_obj, abs=1e-6)
        # dual sign convention: <= rows nonpositive, >= rows nonnegative
        for con, y in zip(model.constraints, res.duals):
            if con.sense == "<=":
                assert y <= 1e-7
            elif con.sense == ">=":
                assert y >= -1e-7
        # primal feasibility
        for con in model.constraints:
            v = con.expr.value(res.primal)
            if con.sense == "<=":
                assert v <= 1e-7
            elif con.sense == ">=":
                assert v >= -1e-7
            else:
                assert abs(v) <= 1e-7
    assert checked >= 30


def test_degenerate_duplicated_rows_terminate():
    # duplicated and redundant rows provoke degeneracy; Bland fallback must end
    m = Model("min")
    for j in range(6):
        m.add_var(f"x{j}")
    e = lsum(term(f"x{j}") for j in range(6))
    for _ in range(5):
        m.add_constr(e, ">=", 3.0)
        m.add_constr(e, ">=", 3.0)
    m.add_constr(term("x0") + term("x1"), ">=", 1.0)
    m.add_constr(term("x0") + term("x1"), ">=", 1.0)
    m.set_objective(e + term("x0"))
    res = solve_lp(m)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(3.0, abs=1e-8)


def test_classic_cycling_instance_terminates():
    # Beale's cycling example (degenerate); must terminate with Bland fallback
    m = Model("min")
    m.add_var("x1"); m.add_var("x2"); m.add_var("x3"); m.add_var("x4")
    m.add_constr(0.25 * term("x1") - 8.0 * term("x2") - term("x3") + 9.0 * term("x4"), "<=", 0.0)
    m.add_constr(0.5 * term("x1") - 12.0 * term("x2") - 0.5 * term("x3") + 3.0 * term("x4"), "<=", 0.0)
    m.add_constr(term("x3"), "<=", 1.0)
    m.set_objective(-0.75 * term("x1") + 150.0 * term("x2") - 0.02 * term("x3") + 6.0 * term("x4"))
    res = solve_lp(m)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(-0.05, abs=1e-8)


def _enumerate_milp(model):
    """Exhaustive oracle: try all binary assignments, LP over the rest."""
    names, c, c0, A, senses, b, lo, hi, binmask = model._arrays()
    bins = [nm for nm, isb in zip(names, binmask) if isb]
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        sub = Model(model.sense)
        fix = dict(zip(bins, bits))
        for v in model.variables:
            if v.name in fix:
                sub.add_var(v.name, lower=fix[v.name], upper=fix[v.name])
            else:
                sub.add_var(v.name, lower=v.lower, upper=v.upper)
        for con in model.constraints:
            sub.add_constr(con.expr.copy(), con.sense, 0.0, tag=con.tag)
        sub.set_objective(model.objective.copy())
        res = solve_lp(sub)
        if res.status != OPTIMAL:
            continue
        key = res.objective if model.sense == "min" else -res.objective
        if best is None or key < best[0] - 1e-12:
            best = (key, res.objective, res.primal)
    return best


def test_milp_small_knapsack():
    m = Model("max")
    m.add_var("x1", binary=True)
    m.add_var("x2", binary=True)
    m.add_constr(2.0 * term("x1") + 2.0 * term("x2"), "<=", 3.0)
    m.set_objective(3.0 * term("x1") + 2.0 * term("x2"))
    res = solve_milp(m)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(3.0)
    assert res.incumbent["x1"] == pytest.approx(1.0)
    assert res.incumbent["x2"] == pytest.approx(0.0)


def test_milp_lazy_cut_changes_optimum():
    m = Model("max")
    m.add_var("x1", binary=True)
    m.add_var("x2", binary=True)
    m.add_constr(2.0 * term("x1") + 2.0 * term("x2"), "<=", 3.0)
    m.set_objective(3.0 * term("x1") + 2.0 * term("x2"))

    def forbid_x1(point):
        if point["x1"] > 0.5:
            return [Constraint(term("x1"), "<=", "lazy_x1")]
        return []

    # Constraint dataclass takes (expr, sense, tag); expr <= 0 means x1 <= 0
    def forbid(point):
        if point["x1"] > 0.5:
            return [Constraint(term("x1"), "<=", tag="lazy_x1")]
        return []

    res = solve_milp(m, lazy=forbid)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(2.0)
    assert res.incumbent["x2"] == pytest.approx(1.0)
    assert res.lazy_cuts_added >= 1


def test_milp_integral_relaxation_matches_lp():
    m = Model("min")
    m.add_var("x1", binary=True)
    m.add_var("x2", binary=True)
    m.add_constr(term("x1") + term("x2"), ">=", 1.0)
    m.set_objective(term("x1") + 2.0 * term("x2"))
    milp = solve_milp(m)
    relax = Model("min")
    relax.add_var("x1", upper=1.0)
    relax.add_var("x2", upper=1.0)
    relax.add_constr(term("x1") + term("x2"), ">=", 1.0)
    relax.set_objective(term("x1") + 2.0 * term("x2"))
    lp = solve_lp(relax)
    assert milp.objective == pytest.approx(lp.objective, abs=1e-9)


def test_milp_matches_enumeration_on_random_models():
    rng = np.random.default_rng(7)
    for k in range(25):
        n_bin = int(rng.integers(1, 9))
        n_cont = int(rng.integers(0, 3))
        m = Model("min")
        for j in range(n_bin):
            m.add_var(f"b{j}", binary=True)
        for j in range(n_cont):
            m.add_var(f"y{j}", lower=0.0, upper=2.0)
        names = m.var_names()
        for i in range(int(rng.integers(1, 5))):
            row = rng.uniform(-2, 2, size=len(names))
            sense = ("<=", ">=")[int(rng.integers(0, 2))]
            rhs = float(rng.uniform(-1, len(names)))
            m.add_constr(lsum(term(nm, row[j]) for j, nm in enumerate(names)),
                         sense, rhs)
        cvec = rng.uniform(-1, 1, size=len(names))
        m.set_objective(lsum(term(nm, cvec[j]) for j, nm in enumerate(names)))
        oracle = _enumerate_milp(m)
        res = solve_milp(m)
        if oracle is None:
            assert res.status == INFEASIBLE
        else:
            assert res.status == OPTIMAL
            assert res.objective == pytest.approx(oracle[1], abs=1e-7)


def test_milp_resource_exhausted_status():
    rng = np.random.default_rng(3)
    m = Model("max")
    for j in range(14):
        m.add_var(f"x{j}", binary=True)
    w = rng.uniform(1, 3, size=14)
    m.add_constr(lsum(term(f"x{j}", w[j]) for j in range(14)), "<=", float(w.sum() / 2))
    m.set_objective(lsum(term(f"x{j}", float(rng.uniform(1, 2))) for j in range(14)))
    res = solve_milp(m, node_limit=3)
    assert res.status == RESOURCE_EXHAUSTED


def test_mccormick_envelope_is_exact_product():
    for xval, yval, L, U in [(1.0, 0.7, 0.0, 1.0), (0.0, 0.4, 0.0, 1.0),
                             (1.0, -0.4, -1.0, 1.0), (0.0, -0.9, -1.0, 1.0)]:
        m = Model("min")
        m.add_var("x", lower=xval, upper=xval, binary=True)
        m.add_var("y", lower=yval, upper=yval)
        # widen the declared envelope bounds around the fixed y
        m._vars["y"] = m._vars["y"].__class__("y", yval, yval, False)
        m2 = Model("min")
        m2.add_var("x", lower=xval, upper=xval, binary=True)
        m2.add_var("y", lower=L, upper=U)
        w = add_mccormick(m2, "x", "y")
        m2.add_constr(term("y"), "==", yval)
        for sgn in (1.0, -1.0):
            m2.set_objective(sgn * term(w))
            res = solve_lp_with_binary_fixed(m2)
            assert res.objective * sgn == pytest.approx(xval * yval, abs=1e-9)


def solve_lp_with_binary_fixed(model):
    """Relax binaries (their bounds already pin them) and solve as an LP."""
    relax = Model(model.sense)
    for v in model.variables:
        relax.add_var(v.name, lower=v.lower, upper=v.upper)
    for con in model.constraints:
        relax.add_constr(con.expr.copy(), con.sense, 0.0, tag=con.tag)
    relax.set_objective(model.objective.copy())
    return solve_lp(relax)


def test_mccormick_vertices_admit_exactly_xy():
    L, U = -1.5, 2.0
    for xval in (0.0, 1.0):
        for yval in (L, U):
            m = Model("min")
            m.add_var("x", lower=xval, upper=xval, binary=True)
            m.add_var("y", lower=L, upper=U)
            w = add_mccormick(m, "x", "y")
            m.add_constr(term("y"), "==", yval)
            for sgn in (1.0, -1.0):
                m.set_objective(sgn * term(w))
                res = solve_lp_with_binary_fixed(m)
                assert sgn * res.objective == pytest.approx(xval * yval, abs=1e-9)


def test_mccormick_requires_finite_bounds():
    m = Model("min")
    m.add_var("x", binary=True)
    m.add_var("y", lower=0.0, upper=None)
    with pytest.raises(ModelError):
        add_mccormick(m, "x", "y")


def test_l1_epigraph_single_row():
    m = Model("min")
    m.add_var("x1", lower=1.0, upper=1.0)
    m.add_var("x2", lower=0.0, upper=0.0)
    t = add_l1_epigraph(m, [term("x1") - term("x2")])
    m.set_objective(term(t))
    assert solve_lp(m).objective == pytest.approx(1.0, abs=1e-9)


def test_l1_epigraph_empty_rows_is_zero():
    m = Model("min")
    m.add_var("x1", lower=1.0, upper=1.0)
    t = add_l1_epigraph(m, [])
    m.set_objective(term(t))
    assert solve_lp(m).objective == pytest.approx(0.0, abs=1e-12)


def test_l1_epigraph_two_rows():
    m = Model("min")
    m.add_var("x1", lower=1.0, upper=1.0)
    t = add_l1_epigraph(m, [2.0 * term("x1"), -3.0 * term("x1")])
    m.set_objective(term(t))
    assert solve_lp(m).objective == pytest.approx(5.0, abs=1e-9)


def test_model_dump_lists_rows():
    m = Model("min")
    m.add_var("x1")
    m.add_constr(2.0 * term("x1"), "<=", 3.0, tag="cap")
    m.set_objective(term("x1"))
    text = m.dump()
    assert "cap:" in text and "<= 3" in text


def test_zero_coefficients_are_normalized_away():
    e = LinExpr({"a": 0.0, "b": 1.0})
    assert "a" not in e.coeffs
    assert (e - term("b")).coeffs == {}
