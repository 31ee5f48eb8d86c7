"""Shared fixtures: the solves are expensive, so converged states are
session-scoped and reused across test modules (acceptance included)."""

from __future__ import annotations

import numpy as np
import pytest

from choquard import GridSpec, ModelParams
from choquard.grid import Field
from choquard.solver import SolverOptions, solve_classical_state, solve_ground_state


@pytest.fixture(scope="session")
def reference_state():
    """The d=1, beta=1, gamma=0.5, p=2.2, mass=1 state on L=32, n=4096."""
    params = ModelParams.create(d=1, beta=1.0, gamma=0.5, p=2.2, mass=1.0)
    grid = GridSpec((4096,), 32.0)
    return solve_ground_state(params, grid, SolverOptions(tol=1e-8))


@pytest.fixture(scope="session")
def reference_state_mass2():
    params = ModelParams.create(d=1, beta=1.0, gamma=0.5, p=2.2, mass=2.0)
    grid = GridSpec((4096,), 32.0)
    return solve_ground_state(params, grid, SolverOptions(tol=1e-8))


def _classical(p: float, half_width: float, n: int = 2048):
    params = ModelParams(d=1, beta=1.0, alpha=0.5, p=p)
    grid = GridSpec((n,), half_width)
    return solve_classical_state(params, grid, SolverOptions(tol=1e-10))


@pytest.fixture(scope="session")
def classical_p18():
    # the algebraic tail needs a large box before the far field is asymptotic
    return _classical(1.8, 128.0, n=4096)


@pytest.fixture(scope="session")
def classical_p22():
    return _classical(2.2, 32.0)


@pytest.fixture(scope="session")
def classical_p30():
    return _classical(3.0, 32.0)


@pytest.fixture(scope="session")
def classical_p40():
    return _classical(4.0, 32.0)


def smooth_decaying_field(grid: GridSpec, rng: np.random.Generator,
                          n_bumps: int = 4, amplitude: float = 1.0) -> Field:
    """Random superposition of Gaussian bumps, supported well inside the box."""
    L = grid.half_width
    mesh = np.meshgrid(*grid.axes(), indexing="ij")
    out = np.zeros(grid.dims)
    for _ in range(n_bumps):
        center = rng.uniform(-L / 4, L / 4, size=grid.ndim)
        width = rng.uniform(0.6, 2.0)
        amp = amplitude * rng.uniform(-1.0, 1.0)
        r2 = sum((m - c) ** 2 for m, c in zip(mesh, center))
        out += amp * np.exp(-r2 / (2.0 * width ** 2))
    return Field(grid, out)


def moment_free_bumps(grid: GridSpec, rng: np.random.Generator,
                      n_bumps: int = 3) -> list[tuple[float, float, float]]:
    """Parameters (shift, width, amplitude) of random quartic-Hermite bumps
    (y^4 - 3 s^2 y^2 + 3/4 s^4) e^(-y^2/s^2); each bump has vanishing moments
    of order 0..2, so the fractional kinetic term is free of the
    |xi|^(2 beta) kink error at the zero mode."""
    return [
        (rng.uniform(-grid.half_width / 8, grid.half_width / 8),
         rng.uniform(0.8, 1.6),
         rng.uniform(-1.0, 1.0))
        for _ in range(n_bumps)
    ]


def eval_moment_free(grid: GridSpec, bumps, dilation: float = 1.0) -> Field:
    """Pointwise-analytic samples of eps^(1/2) f(eps x) for the bump sum;
    avoids the periodic wrap a spectral dilation would introduce for eps > 1."""
    assert grid.ndim == 1
    x = dilation * grid.axes()[0]
    out = np.zeros(grid.dims)
    for shift, s, amp in bumps:
        y = x - shift
        out += amp * (y ** 4 - 3 * s ** 2 * y ** 2 + 0.75 * s ** 4) * np.exp(-(y / s) ** 2)
    return Field(grid, dilation ** 0.5 * out)


def moment_free_field(grid: GridSpec, rng: np.random.Generator,
                      n_bumps: int = 3) -> Field:
    return eval_moment_free(grid, moment_free_bumps(grid, rng, n_bumps))
