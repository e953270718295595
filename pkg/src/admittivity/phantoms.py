"""
Ground-truth admittivity maps.

``simulation1`` samples smooth closed-form coefficients.  ``simulation2`` and
:func:`load_phantom` build piecewise-constant maps from an INI description
with a ``[background]`` section and any number of ``[inclusion:<name>]``
sections (``shape = disc`` with ``center``/``radius``, or ``shape = square``
with ``center``/``half_width``, or ``shape = rect`` with
``center``/``half_widths``).  Every section may set any of ``sigma1 sigma2
sigma3 eps1 eps2 eps3``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import ndimage

from .grid import Grid2D, SymTensorField

__all__ = [
    "COEFFICIENTS",
    "PhantomSpec",
    "Inclusion",
    "simulation1",
    "simulation1_coefficients",
    "simulation2",
    "load_phantom",
    "parse_phantom",
    "default_sim2_spec",
    "to_gamma",
    "discontinuity_mask",
]

COEFFICIENTS = ("sigma1", "sigma2", "sigma3", "eps1", "eps2", "eps3")


def simulation1_coefficients(X, Y) -> dict[str, np.ndarray]:
    pi = np.pi

    def bumps(a, centers):
        out = 1.8 * np.ones_like(X)
        for sign, (cx, cy) in centers:
            out = out + sign * np.exp(-a * ((X - cx) ** 2 + (Y - cy) ** 2))
        return out

    return {
        "sigma1": 2 + np.sin(pi * X) * np.sin(pi * Y),
        "sigma2": 0.5 * np.sin(2 * pi * X),
        "sigma3": bumps(15, [(1, (0, 0)), (1, (0.6, 0.5)), (-1, (-0.4, -0.6))]),
        "eps1": 2 - np.sin(pi * X) * np.sin(pi * Y),
        "eps2": 0.5 * np.sin(2 * pi * Y),
        "eps3": bumps(12, [(1, (0, 0)), (1, (-0.6, 0.5)), (-1, (0.4, -0.6))]),
    }


def to_gamma(grid: Grid2D, coeffs: dict, omega: float) -> SymTensorField:
    sigma = [coeffs[f"sigma{k}"] for k in (1, 2, 3)]
    eps = [coeffs[f"eps{k}"] for k in (1, 2, 3)]
    return SymTensorField.from_sigma_eps(grid, sigma, eps, omega)


def simulation1(grid: Grid2D, omega: float = 1.0) -> SymTensorField:
    """Smooth phantom ``gamma = sigma + i omega eps``."""
    X, Y = grid.mesh()
    return to_gamma(grid, simulation1_coefficients(X, Y), omega)


@dataclass(frozen=True)
class Inclusion:
    name: str
    shape: str
    center: tuple[float, float]
    size: tuple[float, float]
    values: dict

    def contains(self, X, Y) -> np.ndarray:
        cx, cy = self.center
        if self.shape == "disc":
            return (X - cx) ** 2 + (Y - cy) ** 2 <= self.size[0] ** 2
        return (np.abs(X - cx) <= self.size[0]) & (np.abs(Y - cy) <= self.size[1])


@dataclass(frozen=True)
class PhantomSpec:
    background: dict
    inclusions: list = field(default_factory=list)

    def coefficients(self, grid: Grid2D) -> dict[str, np.ndarray]:
        X, Y = grid.mesh()
        out = {k: np.full(grid.shape, float(self.background[k])) for k in COEFFICIENTS}
        for inc in self.inclusions:
            inside = inc.contains(X, Y)
            for k, v in inc.values.items():
                out[k][inside] = v
        return out

    def gamma(self, grid: Grid2D, omega: float = 1.0) -> SymTensorField:
        return to_gamma(grid, self.coefficients(grid), omega)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def parse_phantom(text: str) -> PhantomSpec:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    if "background" not in cp:
        raise ValueError("phantom file needs a [background] section")
    bg = cp["background"]
    missing = [k for k in COEFFICIENTS if k not in bg]
    if missing:
        raise ValueError(f"background is missing {', '.join(missing)}")
    background = {k: bg.getfloat(k) for k in COEFFICIENTS}
    inclusions = []
    for sec in cp.sections():
        if not sec.startswith("inclusion:"):
            continue
        s = cp[sec]
        shape = s.get("shape", "disc").strip()
        center = _floats(s["center"])
        if shape == "disc":
            size = (s.getfloat("radius"),) * 2
        elif shape == "square":
            size = (s.getfloat("half_width"),) * 2
        elif shape == "rect":
            size = _floats(s["half_widths"])
        else:
            raise ValueError(f"[{sec}]: unknown shape {shape!r}")
        unknown = set(s) - set(COEFFICIENTS) - {"shape", "center", "radius", "half_width",
                                                 "half_widths"}
        if unknown:
            raise ValueError(f"[{sec}]: unknown keys {sorted(unknown)}")
        values = {k: s.getfloat(k) for k in COEFFICIENTS if k in s}
        inclusions.append(Inclusion(sec.split(":", 1)[1], shape, center, size, values))
    return PhantomSpec(background, inclusions)


def load_phantom(path) -> PhantomSpec:
    with open(path) as fh:
        return parse_phantom(fh.read())


def default_sim2_spec() -> PhantomSpec:
    return parse_phantom(resources.files(__package__).joinpath("data/sim2.ini").read_text())


def simulation2(grid: Grid2D, omega: float = 1.0, spec: PhantomSpec | None = None) -> SymTensorField:
    """Piecewise-constant phantom (two discs and a square by default)."""
    return (spec or default_sim2_spec()).gamma(grid, omega)


def discontinuity_mask(coeffs: dict, width: int = 3) -> np.ndarray:
    """Nodes within ``width`` grid spacings of a jump in any coefficient."""
    jump = np.zeros(next(iter(coeffs.values())).shape, dtype=bool)
    for c in coeffs.values():
        dx = c[:, 1:] != c[:, :-1]
        dy = c[1:, :] != c[:-1, :]
        jump[:, 1:] |= dx
        jump[:, :-1] |= dx
        jump[1:, :] |= dy
        jump[:-1, :] |= dy
    if not jump.any():
        return jump
    return ndimage.distance_transform_edt(~jump) <= width
