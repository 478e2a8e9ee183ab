import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from gje.conditions import (a3w_form, a3w_relaxed_check, a4w_form, d2p_A, direction_pairs,
                            orthogonalise, scan_conditions, tensor_sup, unit_tuples)

from conftest import family

p0, p1 = sp.symbols("p0 p1", real=True)


def sympy_A(name):
    """A as an explicit function of p (x-independent for these costs)."""
    P = sp.Matrix([p0, p1])
    I = sp.eye(2)
    if name == "log-cost":
        return 2 * P * P.T - (P.T * P)[0] * I
    if name == "sqrt-cost":
        s = 1 - (P.T * P)[0]
        return -sp.sqrt(s) * (I - P * P.T)
    raise ValueError(name)


def sympy_d2pA(name, p):
    A = sympy_A(name)
    T = np.zeros((2, 2, 2, 2))
    subs = {p0: p[0], p1: p[1]}
    for i in range(2):
        for j in range(2):
            for k, a in enumerate((p0, p1)):
                for m, b in enumerate((p0, p1)):
                    T[i, j, k, m] = float(sp.diff(A[i, j], a, b).subs(subs))
    return T


@pytest.mark.parametrize("name,p,x", [("log-cost", [0.45, 0.05], [0.0, 0.0]),
                                      ("sqrt-cost", [0.3, -0.2], [0.1, 0.1])])
def test_d2pA_matches_sympy(name, p, x):
    gf = family(name)
    p, x = np.array(p), np.array(x)
    T = d2p_A(gf, x, -1.0, p)
    np.testing.assert_allclose(T, sympy_d2pA(name, p), atol=2e-5)


def test_log_cost_A3w_is_negative_on_orthonormal_pairs(logcost):
    # 4(xi.eta)^2 - 2|xi|^2|eta|^2 = -2 for orthonormal pairs
    for xi, eta in [([1, 0], [0, 1]), ([0.6, 0.8], [-0.8, 0.6])]:
        val = a3w_form(logcost, np.zeros(2), -1.0, np.array([0.45, 0.05]), xi, eta)
        assert val == pytest.approx(-2.0, abs=1e-4)


@pytest.mark.parametrize("name", ["bilinear", "quad-cost", "perturbed-bilinear"])
def test_constant_A_families_have_zero_forms(name):
    rep = scan_conditions(family(name), resolution=2, directions=4)
    assert abs(rep.worst_A3w) <= 1e-6 and abs(rep.worst_A4w) <= 1e-6
    assert rep.passed


def test_log_cost_scan_fails_with_witness(logcost):
    rep = scan_conditions(logcost, resolution=2, directions=8)
    d = rep.to_dict()
    assert d["A3w"] == "FAIL" and d["A4w"] == "PASS"
    assert rep.worst_A3w == pytest.approx(-2.0, abs=1e-3)
    assert d["witnesses"][0]["kind"] == "A3w"


def test_sqrt_cost_scan_passes():
    rep = scan_conditions(family("sqrt-cost"), resolution=2, directions=8)
    assert rep.a3w_pass and rep.worst_A3w > 0


def test_scan_is_deterministic_for_a_seed(logcost):
    a = scan_conditions(logcost, resolution=2, directions=4, seed=7).to_dict()
    b = scan_conditions(logcost, resolution=2, directions=4, seed=7).to_dict()
    assert a == b


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_relaxed_A3w_holds_with_scan_constant(t1, t2):
    gf = family("sqrt-cost")
    x, p = np.array([0.1, 0.1]), np.array([0.3, -0.2])
    xi = np.array([np.cos(t1), np.sin(t1)])
    eta = np.array([np.cos(t2), np.sin(t2)])
    T = d2p_A(gf, x, -1.0, p)
    K = 3.0 * tensor_sup(T, unit_tuples(2, 64, np.random.default_rng(0)))
    lhs, rhs = a3w_relaxed_check(gf, x, -1.0, p, xi, eta, K)
    assert lhs >= rhs - 1e-8


def test_a4w_zero_for_u_independent_A(quadcost):
    assert abs(a4w_form(quadcost, np.zeros(2), -0.2, np.array([0.1, 0.2]), [1.0, 0.0])) < 1e-6


@given(st.integers(0, 1000))
def test_direction_pairs_orthonormal(seed):
    for xi, eta in direction_pairs(2, 5, np.random.default_rng(seed)):
        assert abs(xi @ eta) < 1e-12
        assert np.linalg.norm(xi) == pytest.approx(1.0)
        assert np.linalg.norm(eta) == pytest.approx(1.0)


def test_orthogonalise_rejects_parallel():
    with pytest.raises(ValueError):
        orthogonalise([1.0, 0.0], [2.0, 0.0])
