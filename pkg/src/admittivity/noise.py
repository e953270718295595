"""Gaussian perturbation of synthetic magnetic fields."""
from __future__ import annotations

import numpy as np

from .grid import ComplexScalarField

__all__ = ["add_noise", "noise_std"]


def noise_std(H: ComplexScalarField, alpha: float) -> float:
    """Per-part standard deviation ``alpha * mean(|H|)``."""
    return float(alpha * np.mean(np.abs(H.values)))


def add_noise(H: ComplexScalarField, alpha: float, seed=0) -> ComplexScalarField:
    """
    Return ``H + eta`` with independent zero-mean Gaussian real and imaginary
    parts of standard deviation ``alpha * mean(|H|)``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts (an int, a
    tuple of ints, a ``SeedSequence``); the same seed always produces the same
    draws, so the output scales linearly with ``H``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if alpha == 0:
        return H
    std = noise_std(H, alpha)
    if std == 0:
        raise ValueError("cannot scale noise to a field that vanishes identically")
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((2,) + H.grid.shape)
    return ComplexScalarField(H.grid, H.values + std * (eta[0] + 1j * eta[1]))
