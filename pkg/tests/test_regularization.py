import numpy as np
import pytest

from admittivity.grid import ComplexScalarField, make_grid
from admittivity.regularization import (
    RegConfig,
    regularize,
    shrink,
    split_bregman_tv,
    tikhonov,
    tv_objective,
)
from oracles import taut_string


def test_taut_string_oracle_sanity():
    g = np.array([0.0, 0.0, 1.0, 1.0])
    # a step of height 1 shrinks by 2 lam / 2 on each side
    np.testing.assert_allclose(taut_string(g, 0.25), [0.125, 0.125, 0.875, 0.875])
    # lam beyond the jump budget collapses to the mean
    np.testing.assert_allclose(taut_string(g, 10.0), 0.5)
    np.testing.assert_allclose(taut_string(g, 0.0), g)


def test_shrink():
    assert shrink(3.0, 1.0) == 2.0
    assert shrink(-0.5, 1.0) == 0.0
    assert shrink(-3.0, 1.0) == -2.0


@pytest.mark.parametrize("method", ["tikhonov", "tv"])
def test_zero_rho_is_identity(method):
    f = ComplexScalarField.from_function(make_grid(8), lambda x, y: x + 1j * y)
    out = regularize(f, RegConfig(rho=0.0, method=method))
    np.testing.assert_array_equal(out.values, f.values)


@pytest.mark.parametrize("method", ["tikhonov", "tv"])
def test_constant_unchanged(method):
    f = ComplexScalarField.constant(make_grid(8), 2 - 1j)
    out = regularize(f, RegConfig(rho=0.5, method=method))
    np.testing.assert_allclose(out.values, f.values, atol=1e-12)


def test_tikhonov_impulse_dense_oracle():
    m = 9
    g = np.zeros((m, m))
    g[4, 4] = 1.0
    rho = 0.1
    d = np.zeros((m, m))
    for i in range(m - 1):
        d[i, i], d[i, i + 1] = -1.0, 1.0
    Dx = np.kron(np.eye(m), d)
    Dy = np.kron(d, np.eye(m))
    A = np.eye(m * m) + rho * (Dx.T @ Dx + Dy.T @ Dy)
    expect = np.linalg.solve(A, g.ravel()).reshape(m, m)
    np.testing.assert_allclose(tikhonov(g, rho), expect, atol=1e-10)


def test_tikhonov_mean_preserved():
    rng = np.random.default_rng(3)
    g = rng.normal(size=(41, 41)) + 1j * rng.normal(size=(41, 41))
    out = tikhonov(ComplexScalarField(make_grid(40), g), 1e-2)
    assert abs(out.values.mean() - g.mean()) <= 1e-8


def test_tv_matches_taut_string():
    rng = np.random.default_rng(4)
    g = np.where(np.arange(81) < 40, 0.0, 1.0) + 0.1 * rng.normal(size=81)
    lam = 0.5
    f = split_bregman_tv(g, RegConfig(rho=lam, tol=1e-12, max_iters=20000))
    expect = taut_string(g, lam)
    assert np.max(np.abs(f - expect)) <= 1e-3
    assert tv_objective(f, g, lam) <= tv_objective(expect, g, lam) + 1e-6


def test_tv_grid_spacing_scales_weight():
    # with spacing h the penalty is rho/h times the unit-spacing one
    rng = np.random.default_rng(5)
    g = np.where(np.arange(41) < 20, 0.0, 1.0) + 0.1 * rng.normal(size=41)
    f = split_bregman_tv(g, RegConfig(rho=0.05, tol=1e-12, max_iters=20000), h=0.1)
    np.testing.assert_allclose(f, taut_string(g, 0.5), atol=1e-3)


@pytest.mark.parametrize("rho", [0.02, 0.1, 0.5])
def test_objective_non_increasing(rho):
    rng = np.random.default_rng(6)
    g = np.zeros((30, 30))
    g[:, 15:] = 1.0
    g += 0.2 * rng.normal(size=g.shape)
    _, info = split_bregman_tv(g, RegConfig(rho=rho, tol=1e-10, max_iters=5000), return_info=True)
    steps = np.diff(info.objective)[1:]
    assert steps.max() <= 1e-10
    assert info.converged


@pytest.mark.parametrize("method", ["tikhonov", "tv"])
def test_tv_contraction(method):
    rng = np.random.default_rng(7)
    g = rng.normal(size=(31, 31))
    out = regularize(g, RegConfig(rho=0.1, method=method))
    D = lambda f: np.abs(np.diff(f, axis=0)).sum() + np.abs(np.diff(f, axis=1)).sum()
    assert D(out) <= D(g)


def test_complex_channels_independent():
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=(21, 21)), rng.normal(size=(21, 21))
    cfg = RegConfig(rho=0.2, tol=1e-8)
    z = split_bregman_tv(a + 1j * b, cfg)
    np.testing.assert_allclose(z.real, split_bregman_tv(a, cfg), atol=1e-12)
    np.testing.assert_allclose(z.imag, split_bregman_tv(b, cfg), atol=1e-12)


def test_isotropic_variant_reduces_objective():
    rng = np.random.default_rng(9)
    g = rng.normal(size=(21, 21))
    cfg = RegConfig(rho=0.2, isotropic=True, tol=1e-8, max_iters=3000)
    f = split_bregman_tv(g, cfg)
    assert tv_objective(f, g, 0.2, isotropic=True) < tv_objective(g, g, 0.2, isotropic=True)


def test_max_iters_reports_not_converged():
    g = np.random.default_rng(10).normal(size=(15, 15))
    _, info = split_bregman_tv(g, RegConfig(rho=0.3, max_iters=2, tol=0.0), return_info=True)
    assert info.iterations == 2 and not info.converged


@pytest.mark.parametrize("kw", [dict(rho=-1.0), dict(method="l0"), dict(max_iters=0),
                                dict(bregman_mu=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        RegConfig(**kw)
