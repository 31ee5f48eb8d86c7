"""Scalar model parameters and the admissibility/regime classification.

The model is the nonlocal (Hartree/Choquard) equation with fractional
dispersion of order 2*beta, interaction kernel |x|^(-gamma) with
gamma = d - alpha, and power p on the density.  The sign of

    Gamma = 2*beta - gamma - d*(p - 2)

decides where the constrained minimization lives and, classically,
whether the wave is spectrally stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = [
    "ModelParams",
    "AdmissibilityVerdict",
    "gamma_big",
    "gamma_big_snapped",
    "classify_admissibility",
    "params_to_json",
    "params_from_json",
]

REGIMES = (
    "ClassicalExistence",
    "FractionalNormalized",
    "Both",
    "NoSoliton",
    "OutOfTheory",
)


class ParamError(ValueError):
    """Invalid or inconsistent model parameters."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple (d, beta, alpha, p, mass, kg_omega).

    Exactly one of alpha/gamma is independent; construct with either via
    :meth:`create`.  gamma is always d - alpha.
    """

    d: int
    beta: float
    alpha: float
    p: float
    mass: float = 1.0
    kg_omega: float | None = None

    def __post_init__(self):
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ParamError(f"dimension d must be a positive integer, got {self.d!r}")
        if not (0.0 < self.beta <= 1.0):
            raise ParamError(f"beta must lie in (0, 1], got {self.beta}")
        if not (0.0 < self.alpha < self.d):
            raise ParamError(f"alpha must lie in (0, d)=(0, {self.d}), got {self.alpha}")
        if not self.p > 1.0:
            raise ParamError(f"p must exceed 1, got {self.p}")
        if not self.mass > 0.0:
            raise ParamError(f"mass must be positive, got {self.mass}")
        if self.kg_omega is not None and not (-1.0 < self.kg_omega < 1.0):
            raise ParamError(f"kg_omega must lie in (-1, 1), got {self.kg_omega}")

    @classmethod
    def create(cls, d, beta, p, mass=1.0, alpha=None, gamma=None, kg_omega=None):
        """Build params from either alpha or gamma (the other is derived)."""
        if alpha is None and gamma is None:
            raise ParamError("one of alpha or gamma is required")
        if alpha is not None and gamma is not None:
            if abs((alpha + gamma) - d) > 1e-12 * max(1.0, abs(d)):
                raise ParamError(
                    f"alpha + gamma must equal d: {alpha} + {gamma} != {d}"
                )
        if alpha is None:
            alpha = d - gamma
        return cls(d=int(d), beta=float(beta), alpha=float(alpha), p=float(p),
                   mass=float(mass), kg_omega=None if kg_omega is None else float(kg_omega))

    @property
    def gamma(self) -> float:
        return self.d - self.alpha

    @property
    def coupling(self) -> float:
        """Normalization constant of the interaction kernel c|x|^(-gamma),
        chosen so the kernel inverts the fractional Laplacian of order alpha/2."""
        d, a = self.d, self.alpha
        return math.gamma((d - a) / 2.0) / (
            math.gamma(a / 2.0) * math.pi ** (d / 2.0) * 2.0 ** a
        )


@dataclass(frozen=True)
class AdmissibilityVerdict:
    regime: str
    gamma_big: float
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ParamError(f"unknown regime {self.regime!r}")


def gamma_big(params: ModelParams) -> float:
    """The classification exponent 2*beta - gamma - d*(p - 2)."""
    return 2.0 * params.beta - params.gamma - params.d * (params.p - 2.0)


def gamma_big_snapped(params: ModelParams) -> float:
    """gamma_big with rounding-level values snapped to the exact boundary.

    Boundary tuples like p = 7/3 at d = 3 are not binary-representable and
    land a few ulps off zero; the stable/unstable split treats them as the
    boundary they denote.  The snap window (~1e-15 relative) sits far below
    any physically meaningful margin."""
    gb = gamma_big(params)
    scale = 2.0 * params.beta + params.gamma + params.d * abs(params.p - 2.0) + 1.0
    if abs(gb) <= 8.0 * 2.220446049250313e-16 * scale:
        return 0.0
    return gb


def _classical_window(params: ModelParams) -> tuple[bool, bool]:
    """Strict bounds of the classical existence window,
    (d-2)/(2d-gamma) < 1/p < d/(2d-gamma), as (lower_ok, upper_ok)."""
    d, g, p = params.d, params.gamma, params.p
    inv_p = 1.0 / p
    lower_ok = inv_p > (d - 2.0) / (2.0 * d - g)
    upper_ok = inv_p < d / (2.0 * d - g)
    return lower_ok, upper_ok


def _normalized_window(params: ModelParams) -> bool:
    """Strict admissibility of the constrained problem: 0 < (p-2)d + gamma < 2*beta."""
    s = (params.p - 2.0) * params.d + params.gamma
    return 0.0 < s < 2.0 * params.beta


def classify_admissibility(params: ModelParams) -> AdmissibilityVerdict:
    """Decide which existence regime a parameter tuple falls in.

    Classical nonexistence (equalities included) maps to NoSoliton and is
    asserted only at beta = 1; boundaries of the strict normalized window map
    to OutOfTheory.  Gamma = 0 is flagged with a note about the enlarged
    generalized kernel of the linearization.
    """
    gb = gamma_big(params)
    notes: list[str] = []
    norm_ok = _normalized_window(params)
    classical = params.beta == 1.0

    if classical:
        lower_ok, upper_ok = _classical_window(params)
        exists = lower_ok and upper_ok
        if exists and norm_ok:
            regime = "Both"
            notes.append("classical-existence-window")
            notes.append("normalized-window")
        elif exists:
            regime = "ClassicalExistence"
            notes.append("classical-existence-window")
            notes.append("normalized-window-violated")
        elif norm_ok:
            # mathematically unreachable at beta=1 (normalized window is a
            # strict subset of the classical one); kept total anyway
            regime = "FractionalNormalized"
            notes.append("normalized-window")
        else:
            regime = "NoSoliton"
            notes.append("outside-classical-existence-window")
    else:
        if norm_ok:
            regime = "FractionalNormalized"
            notes.append("normalized-window")
            if params.p <= 2.0:
                notes.append("fractional-stability-proof-requires-p>2")
        else:
            regime = "OutOfTheory"
            notes.append("normalized-window-violated-no-claim-for-beta<1")

    if gamma_big_snapped(params) == 0.0:
        notes.append("gamma-zero-extra-generalized-kernel")
    return AdmissibilityVerdict(regime=regime, gamma_big=gb, notes=tuple(notes))


_JSON_KEYS = {"d", "beta", "alpha", "gamma", "p", "mass", "kg_omega"}


def params_to_json(params: ModelParams) -> str:
    obj = {
        "d": params.d,
        "beta": params.beta,
        "alpha": params.alpha,
        "gamma": params.gamma,
        "p": params.p,
        "mass": params.mass,
        "kg_omega": params.kg_omega,
    }
    return json.dumps(obj, sort_keys=True)


def params_from_json(text: str) -> ModelParams:
    """Parse a flat JSON object; unknown keys are rejected."""
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ParamError("params JSON must be an object")
    unknown = set(obj) - _JSON_KEYS
    if unknown:
        raise ParamError(f"unknown parameter keys: {sorted(unknown)}")
    if "d" not in obj or "beta" not in obj or "p" not in obj:
        raise ParamError("keys d, beta, p are required")
    d = obj["d"]
    if not isinstance(d, int):
        raise ParamError(f"d must be an integer, got {d!r}")
    return ModelParams.create(
        d=d,
        beta=obj["beta"],
        p=obj["p"],
        mass=obj.get("mass", 1.0),
        alpha=obj.get("alpha"),
        gamma=obj.get("gamma"),
        kg_omega=obj.get("kg_omega"),
    )
