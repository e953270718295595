import numpy as np
import pytest

from admittivity.grid import make_grid
from admittivity.io import read_field_csv, write_field_csv, write_pgm


def test_complex_round_trip(tmp_path):
    g = make_grid(12)
    rng = np.random.default_rng(2)
    v = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    p = write_field_csv(tmp_path / "H1.csv", v, g, "H1")
    back, g2, name = read_field_csv(p)
    assert name == "H1" and g2 == g
    np.testing.assert_array_equal(back, v)


def test_real_round_trip(tmp_path):
    g = make_grid(6)
    v = np.arange(49.0).reshape(7, 7) / 3
    back, _, _ = read_field_csv(write_field_csv(tmp_path / "s.csv", v, g, "s"))
    np.testing.assert_array_equal(back, v)
    assert not np.iscomplexobj(back)


def test_layout_rows_are_grid_rows(tmp_path):
    g = make_grid(4)
    X, _ = g.mesh()
    p = write_field_csv(tmp_path / "x.csv", X + 0j, g, "x")
    table = np.loadtxt(p, delimiter=",")
    np.testing.assert_array_equal(table[0, 0::2], g.x)
    np.testing.assert_array_equal(table[:, 1::2], 0)


def test_errors(tmp_path):
    g = make_grid(4)
    with pytest.raises(ValueError):
        write_field_csv(tmp_path / "a.csv", np.zeros((3, 3)), g, "a")
    (tmp_path / "b.csv").write_text("1,2\n3,4\n")
    with pytest.raises(ValueError):
        read_field_csv(tmp_path / "b.csv")


def test_pgm(tmp_path):
    v = np.array([[0.0, 1.0], [2.0, 3.0]])
    p = write_pgm(tmp_path / "a.pgm", v)
    data = p.read_bytes()
    assert data.startswith(b"P5\n2 2\n255\n")
    # top image row is the last grid row
    assert list(data[-4:]) == [170, 255, 0, 85]
