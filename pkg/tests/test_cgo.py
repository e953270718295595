import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from admittivity.cgo import (
    DEFAULT_ANGLES,
    J,
    CgoBasis,
    IlluminationError,
    analytic_M,
    analytic_M_tilde,
    analytic_lambdas,
    cgo_determinant,
    cgo_field,
    check_independence,
    choose_illuminations,
    factor_Q,
    gamma_tilde,
    make_basis,
)
from admittivity.diff_ops import vector_curl
from admittivity.forward import assemble_operator
from admittivity.grid import PhysicsParams, SymTensorField, make_grid
from admittivity.reconstruction import build_M_system, compute_lambdas

P = PhysicsParams()
G_TEST = np.array([[2, 0.3], [0.3, 1.5]]) + 1j * np.array([[1, 0.1], [0.1, 1.2]])


def test_gamma_tilde_identity():
    np.testing.assert_allclose(gamma_tilde(np.eye(2), P), -1j * np.eye(2))


def test_gamma_tilde_diagonal_swaps():
    params = PhysicsParams(omega=2.0, mu0=1.5)
    out = gamma_tilde(np.diag([3.0, 5.0]), params)
    np.testing.assert_allclose(out, -1j * 3.0 * np.diag([5.0, 3.0]))


def test_gamma_tilde_off_diagonal_symbolic():
    a, b, c, w, m = sp.symbols("a b c omega mu", positive=True)
    Js = sp.Matrix([[0, -1], [1, 0]])
    gt = -sp.I * w * m * Js.T * sp.Matrix([[a, b], [b, c]]) * Js
    assert sp.simplify(gt[0, 1] - sp.I * w * m * b) == 0
    vals = {a: 2.0, b: 0.7, c: 1.1, w: 1.3, m: 0.9}
    expect = np.array(gt.subs(vals).evalf(), dtype=complex)
    out = gamma_tilde(np.array([[2.0, 0.7], [0.7, 1.1]]), PhysicsParams(1.3, 0.9))
    np.testing.assert_allclose(out, expect, atol=1e-14)


def test_gamma_tilde_singular():
    with pytest.raises(ValueError):
        gamma_tilde(np.ones((2, 2)), P)


def test_factor_Q_of_minus_i():
    Q = factor_Q(-1j * np.eye(2))
    np.testing.assert_allclose(Q, np.exp(-1j * np.pi / 4) * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(Q @ Q.T, -1j * np.eye(2), atol=1e-15)


def test_factor_Q_positive_diagonal():
    np.testing.assert_allclose(factor_Q(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_factor_Q_rejects_defective():
    # eigenvalue 1 twice with a single eigenvector
    with pytest.raises(np.linalg.LinAlgError):
        factor_Q(np.array([[1 + 1j, 1], [1, 1 - 1j]]))


def test_factor_Q_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        factor_Q(np.array([[1, 2], [0, 1]]))


finite = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[finite] * 6))
def test_factor_Q_round_trip(v):
    a, b, c = v[0] + 1j * v[1], v[2] + 1j * v[3], v[4] + 1j * v[5]
    gt = np.array([[a, b], [b, c]])
    d = np.linalg.eigvals(gt)
    if np.min(d.real) <= 0.05 or abs(d[0] - d[1]) < 1e-3 * np.abs(d).max():
        return  # outside the documented domain (Re(eig) > 0, diagonalizable)
    Q = factor_Q(gt)
    assert np.linalg.norm(Q @ Q.T - gt) <= 1e-12 * np.linalg.norm(gt)
    np.testing.assert_allclose(Q, Q.T, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.floats(0.2, 5)] * 4), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_factor_Q_round_trip_physical(d, s12, e12):
    # admittivities: sigma, eps symmetric positive definite
    sigma = np.array([[d[0], s12], [s12, d[1]]])
    eps = np.array([[d[2], e12], [e12, d[3]]])
    if min(np.linalg.eigvalsh(sigma).min(), np.linalg.eigvalsh(eps).min()) <= 0.05:
        return
    gt = gamma_tilde(sigma + 1j * eps, P)
    Q = factor_Q(gt)
    assert np.linalg.norm(Q @ Q.T - gt) <= 1e-12 * np.linalg.norm(gt)


def test_basis_normalization_checked():
    with pytest.raises(ValueError):
        CgoBasis(np.eye(2), ([1, 0], [0, 1], [1, 1], [1, 0], [0, 1]))


def test_cgo_field_exponential():
    g = make_grid(8)
    basis = CgoBasis(np.eye(2), ([1, 0], [0, 1], [1, 0], [0, 1], [1, 0]))
    X, _ = g.mesh()
    np.testing.assert_allclose(cgo_field(basis, 0, g).values, np.exp(X))


def test_cgo_field_one_at_origin():
    g = make_grid(8)
    basis = make_basis(G_TEST, P)
    for k in range(5):
        assert cgo_field(basis, k, g).values[4, 4] == pytest.approx(1.0)


def test_cgo_field_solves_helmholtz_symbolically():
    basis = make_basis(G_TEST, P)
    gt = gamma_tilde(G_TEST, P)
    x, y = sp.symbols("x y", real=True)
    gti = sp.Matrix(np.linalg.inv(gt).tolist())
    for k in range(5):
        q = basis.wave(k)
        H = sp.exp(x * complex(q[0]) + y * complex(q[1]))
        grad = sp.Matrix([sp.diff(H, x), sp.diff(H, y)])
        flux = gti * grad
        expr = -(sp.diff(flux[0], x) + sp.diff(flux[1], y)) + H
        for pt in [(0.3, -0.7), (-0.9, 0.2)]:
            val = complex(expr.subs({x: pt[0], y: pt[1]}).evalf())
            assert abs(val) < 1e-12


def test_discrete_operator_residual_second_order():
    def res(N):
        g = make_grid(N)
        basis = make_basis(G_TEST, P)
        sys_ = assemble_operator(SymTensorField.constant(g, G_TEST), P)
        H = cgo_field(basis, 3, g).values.ravel()
        return np.abs((sys_.matrix @ H)[sys_.interior]).max()
    r40, r80 = res(40), res(80)
    assert r80 <= 10 * make_grid(80).h ** 2
    assert 4 * 0.8 <= r40 / r80 <= 4 * 1.2


def test_M_tilde_zero_when_u_equals_u1():
    basis = make_basis(G_TEST, P, angles=(0.0, 1.0, 2.0))
    np.testing.assert_allclose(analytic_M_tilde(basis, 0, [0.3, 0.2]), 0, atol=1e-15)


def test_M_tilde_inner_matrix_at_diagonal_direction():
    basis = make_basis(G_TEST, P, angles=(np.pi / 4, 1.0, 2.0))
    x = np.array([0.1, -0.4])
    Mt = analytic_M_tilde(basis, 0, x)
    q = basis.wave(2)
    Hj = np.exp(x @ q)
    Qi = np.linalg.inv(basis.Q)
    inner = Qi @ Mt @ Qi.T / Hj
    s = 1 / np.sqrt(2)
    expect = np.array([[s * (s - 1), 0.5], [0.5, s * (s - 1)]])
    np.testing.assert_allclose(inner, expect, atol=1e-13)


def test_M_tilde_requires_canonical_u1_u2():
    basis = CgoBasis(np.eye(2), ([0, 1], [1, 0], [1, 0], [0, 1], [1, 0]))
    with pytest.raises(ValueError):
        analytic_M_tilde(basis, 0, [0, 0])


def _fd_M(N, gamma_const, angles=DEFAULT_ANGLES):
    g = make_grid(N)
    basis = make_basis(gamma_const, P, angles)
    H = [cgo_field(basis, k, g) for k in range(5)]
    lambdas, mask = compute_lambdas(H)
    msys = build_M_system(H, lambdas, P)
    X, Y = g.mesh()
    pts = np.stack([X, Y], -1)
    exact = np.array([analytic_M(basis, j, pts) for j in range(3)])
    return np.abs(msys.M - exact).max() / np.abs(exact).max(), basis, lambdas, g


def test_M_closed_form_matches_finite_differences():
    e40, *_ = _fd_M(40, G_TEST)
    e80, *_ = _fd_M(80, G_TEST)
    assert e80 < 5e-3
    assert 4 * 0.75 <= e40 / e80 <= 4 * 1.25


def test_analytic_lambdas_match_cramer():
    _, basis, lambdas, g = _fd_M(80, G_TEST)
    X, Y = g.mesh()
    for j in range(3):
        l1, l2 = analytic_lambdas(basis, j, X, Y)
        rel = max(np.abs(lambdas.pairs[j][0].values - l1).max() / np.abs(l1).max(),
                  np.abs(lambdas.pairs[j][1].values - l2).max() / np.abs(l2).max())
        assert rel < 1e-3
        c, s = basis.u[2 + j].real
        # det(u, e2) = cos, det(e1, u) = sin
        assert l1[40, 40] == pytest.approx(c)
        assert l2[40, 40] == pytest.approx(s)


def test_check_independence_canonical_basis():
    E11 = np.array([[1, 0], [0, 0]])
    E22 = np.array([[0, 0], [0, 1]])
    E12 = np.array([[0, 1], [1, 0]]) / np.sqrt(2)
    assert check_independence(E11, E22, E12) == pytest.approx(1.0)
    assert check_independence(E11, E11, E12) == pytest.approx(0.0, abs=1e-15)


def test_check_independence_accepts_extra_and_rejects_two():
    rng = np.random.default_rng(1)
    Ms = [(lambda a: a + a.T)(rng.normal(size=(2, 2))) for _ in range(4)]
    assert check_independence(*Ms) > 0
    with pytest.raises(ValueError):
        check_independence(Ms[0], Ms[1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_check_independence_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    Ms = [(lambda a: a + a.T)(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
          for _ in range(3)]
    ref = check_independence(*Ms)
    for perm in itertools.permutations(Ms):
        assert check_independence(*perm) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_determinant_condition_nonvanishing():
    g = make_grid(40)
    X, Y = g.mesh()
    basis = make_basis(G_TEST, P)
    d = cgo_determinant(basis, X, Y)
    # det(Q e1, Q e2) exp(x . Q (e1 + e2))
    expect = np.linalg.det(basis.Q) * np.exp(X * basis.wave(0)[0] + Y * basis.wave(0)[1]
                                             + X * basis.wave(1)[0] + Y * basis.wave(1)[1])
    np.testing.assert_allclose(d, expect, rtol=1e-12)
    assert np.abs(d).min() > 0
    c1 = vector_curl(cgo_field(basis, 0, g)).stacked()
    c2 = vector_curl(cgo_field(basis, 1, g)).stacked()
    fd = c1[..., 0] * c2[..., 1] - c1[..., 1] * c2[..., 0]
    assert np.abs(fd - d).max() / np.abs(d).max() < 1e-2


def test_choose_illuminations_identity_default():
    g = make_grid(20)
    basis, traces, table = choose_illuminations(np.eye(2), P, g)
    assert table.min() > 1e-6
    assert len(traces) == 5
    np.testing.assert_allclose([u.real for u in basis.u[2:]],
                               [[np.cos(t), np.sin(t)] for t in DEFAULT_ANGLES])


def test_choose_illuminations_original_angle_set_passes():
    basis, _, table = choose_illuminations(np.eye(2), P, make_grid(20),
                                           angles=(np.pi / 4, np.pi / 3, 2 * np.pi / 3))
    assert table.min() > 1e-6


def test_choose_illuminations_rejects_repeated_angles():
    with pytest.raises(IlluminationError):
        choose_illuminations(np.eye(2), P, make_grid(20), angles=(0.7, 0.7, 0.7))


def test_choose_illuminations_rejects_u3_equal_u1():
    with pytest.raises(IlluminationError):
        choose_illuminations(np.eye(2), P, make_grid(20), angles=(0.0, 1.0, 2.0))


def test_choose_illuminations_rejects_non_elliptic():
    with pytest.raises(ValueError):
        choose_illuminations(-np.eye(2), P, make_grid(20))


def test_traces_match_cgo_fields():
    g = make_grid(10)
    basis, traces, _ = choose_illuminations(G_TEST, P, g)
    for k, t in enumerate(traces):
        full = cgo_field(basis, k, g).values
        np.testing.assert_allclose(t.values, full[g.boundary_mask()])


def test_J_rotation_matrix():
    np.testing.assert_array_equal(J @ np.array([1, 0]), [0, 1])
