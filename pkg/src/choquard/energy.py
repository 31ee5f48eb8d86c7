"""The constrained energy functional: kinetic term J, interaction term K,
energy E = J/2 - K/(2p), and its L2 gradient.

Conventions: J = ||grad^beta u||^2, K = c * <|.|^(-gamma) * |u|^p, |u|^p>, and
the gradient absorbs the factors so that <grad E(u), h> = d/dt E(u + t h)|_0
and the stationarity equation reads

    (-Lap)^beta u - c (|.|^(-gamma) * |u|^p) |u|^(p-2) u = omega * u.

The local factor |u|^(p-2) u is evaluated sign-preservingly as
sign(u)|u|^(p-1), which vanishes at u = 0 for every p > 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, l2_norm_sq
from .params import ModelParams
from .spectral import frac_laplacian, riesz_op, zygmund

__all__ = ["EnergyBreakdown", "HartreeEnergy", "energy", "energy_gradient", "EvaluationError"]


class EvaluationError(ArithmeticError):
    """Non-finite intermediate during an energy evaluation (overflow)."""


@dataclass(frozen=True)
class EnergyBreakdown:
    J: float
    K: float
    E: float
    mass: float


def _signed_power(v: np.ndarray, q: float) -> np.ndarray:
    """sign(v) |v|^q, with 0^q = 0 for q > 0."""
    return np.sign(v) * np.abs(v) ** q


class HartreeEnergy:
    """Energy workspace bound to one (params, grid) pair; caches operators."""

    def __init__(self, params: ModelParams, grid: GridSpec):
        if grid.ndim != params.d:
            raise ValueError(f"grid dimension {grid.ndim} != params.d {params.d}")
        self.params = params
        self.grid = grid
        self.frac_lap = frac_laplacian(grid, params.beta)
        self.half = zygmund(grid, params.beta)
        self.riesz = riesz_op(grid, params.alpha)

    def breakdown(self, u: Field) -> EnergyBreakdown:
        b, _ = self._evaluate(u, want_gradient=False)
        return b

    def gradient(self, u: Field) -> Field:
        _, g = self._evaluate(u, want_gradient=True)
        return g

    def value_and_gradient(self, u: Field) -> tuple[EnergyBreakdown, Field]:
        return self._evaluate(u, want_gradient=True)

    def _evaluate(self, u: Field, want_gradient: bool):
        p = self.params.p
        dens = np.abs(u.values) ** p
        if not np.all(np.isfinite(dens)):
            raise EvaluationError("|u|^p overflowed")
        # conv is the full Riesz potential c*(|.|^(-gamma) * |u|^p)
        conv = self.riesz.convolve(Field(self.grid, dens))
        J = l2_norm_sq(self.half.apply(u))
        K = float(np.sum(conv.values * dens)) * self.grid.cell_volume
        if not (np.isfinite(J) and np.isfinite(K)):
            raise EvaluationError("energy terms overflowed")
        E = 0.5 * J - K / (2.0 * p)
        b = EnergyBreakdown(J=J, K=K, E=E, mass=l2_norm_sq(u))
        if not want_gradient:
            return b, None
        local = _signed_power(u.values, p - 1.0)
        gvals = self.frac_lap.apply(u).values - conv.values * local
        if not np.all(np.isfinite(gvals)):
            raise EvaluationError("gradient overflowed")
        return b, Field(self.grid, gvals)


def energy(u: Field, params: ModelParams) -> EnergyBreakdown:
    return HartreeEnergy(params, u.grid).breakdown(u)


def energy_gradient(u: Field, params: ModelParams) -> Field:
    return HartreeEnergy(params, u.grid).gradient(u)
