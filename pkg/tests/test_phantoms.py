import numpy as np
import pytest

from admittivity.grid import make_grid, validate_ellipticity
from admittivity.phantoms import (
    COEFFICIENTS,
    default_sim2_spec,
    discontinuity_mask,
    parse_phantom,
    simulation1,
    simulation1_coefficients,
    simulation2,
)


def test_sigma1_peak():
    c = simulation1_coefficients(np.array(0.5), np.array(0.5))
    assert c["sigma1"] == pytest.approx(3.0)


def test_sigma2_constant_in_y_at_quarter():
    y = np.linspace(-1, 1, 9)
    c = simulation1_coefficients(np.full_like(y, 0.25), y)
    np.testing.assert_allclose(c["sigma2"], 0.5)


def test_eps2_constant_in_x_at_quarter():
    x = np.linspace(-1, 1, 9)
    c = simulation1_coefficients(x, np.full_like(x, 0.25))
    np.testing.assert_allclose(c["eps2"], 0.5)


def test_simulation1_gamma_assembly():
    g = make_grid(20)
    X, Y = g.mesh()
    omega = 2.5
    gamma = simulation1(g, omega)
    c = simulation1_coefficients(X, Y)
    np.testing.assert_allclose(gamma.a12, c["sigma2"] + 1j * omega * c["eps2"])
    np.testing.assert_allclose(gamma.a22, c["sigma3"] + 1j * omega * c["eps3"])


def test_simulation1_gradient_bounded():
    # discrete gradient of sigma1 stays below the analytic bound pi + C h^2
    g = make_grid(80)
    X, Y = g.mesh()
    s1 = simulation1_coefficients(X, Y)["sigma1"]
    gx, gy = np.gradient(s1, g.h, g.h, axis=(1, 0))
    assert np.hypot(gx, gy).max() <= np.pi + 2 * g.h**2 * np.pi**3


def test_simulation2_background_and_inclusions():
    g = make_grid(80)
    spec = default_sim2_spec()
    coeffs = spec.coefficients(g)
    assert spec.background == {"sigma1": 2.0, "sigma2": 0.0, "sigma3": 2.0,
                               "eps1": 2.0, "eps2": 0.0, "eps3": 2.0}
    X, Y = g.mesh()
    corner = (0, 0)  # (-1, -1) lies in no inclusion
    for k in COEFFICIENTS:
        assert coeffs[k][corner] == spec.background[k]
    for inc in spec.inclusions:
        inside = inc.contains(X, Y)
        assert inside.any()
        j, i = np.argwhere(inside)[len(np.argwhere(inside)) // 2]
        for k, v in inc.values.items():
            assert coeffs[k][j, i] == v


@pytest.mark.parametrize("phantom", [simulation1, simulation2])
def test_phantoms_elliptic(phantom):
    assert validate_ellipticity(phantom(make_grid(80)), 5.0)


def test_simulation2_shapes_and_contrasts():
    spec = default_sim2_spec()
    shapes = sorted(inc.shape for inc in spec.inclusions)
    assert shapes == ["disc", "disc", "square"]
    for inc in spec.inclusions:
        for k in ("sigma1", "sigma3", "eps1", "eps3"):
            assert 0.5 <= inc.values[k] <= 3.5


def test_phantoms_deterministic():
    g = make_grid(40)
    a, b = simulation2(g), simulation2(g)
    for x, y in zip(a.components, b.components):
        assert np.array_equal(x, y)


def test_parse_custom_phantom():
    text = """
[background]
sigma1 = 1
sigma2 = 0
sigma3 = 1
eps1 = 1
eps2 = 0
eps3 = 1

[inclusion:block]
shape = rect
center = 0.5, 0
half_widths = 0.25, 0.5
sigma1 = 2
"""
    g = make_grid(8)
    c = parse_phantom(text).coefficients(g)
    X, Y = g.mesh()
    inside = (np.abs(X - 0.5) <= 0.25) & (np.abs(Y) <= 0.5)
    np.testing.assert_array_equal(c["sigma1"], np.where(inside, 2.0, 1.0))
    np.testing.assert_array_equal(c["sigma3"], 1.0)


@pytest.mark.parametrize("bad", [
    "[background]\nsigma1 = 1\n",
    "[background]\nsigma1=1\nsigma2=0\nsigma3=1\neps1=1\neps2=0\neps3=1\n"
    "[inclusion:x]\nshape = star\ncenter = 0, 0\n",
    "[background]\nsigma1=1\nsigma2=0\nsigma3=1\neps1=1\neps2=0\neps3=1\n"
    "[inclusion:x]\nshape = disc\ncenter = 0, 0\nradius = 0.2\ncolour = 3\n",
])
def test_parse_rejects_bad_files(bad):
    with pytest.raises(ValueError):
        parse_phantom(bad)


def test_discontinuity_mask():
    a = np.zeros((11, 11))
    a[:, 6:] = 1.0
    m = discontinuity_mask({"a": a}, width=2)
    # jump between columns 5 and 6; both are distance 0, then two more each side
    np.testing.assert_array_equal(np.flatnonzero(m[0]), [3, 4, 5, 6, 7, 8])
    assert not discontinuity_mask({"a": np.ones((5, 5))}).any()
