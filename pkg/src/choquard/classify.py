"""Closed-form spectral-stability classification of the standing waves.

First-order (Schrodinger-type) flow: within the classical existence window
the wave is stable exactly when Gamma = 2 + alpha - (p-1)d >= 0, i.e.
p <= 1 + (2+alpha)/d; Gamma = 0 is stable but carries an enlarged
generalized kernel.  Instability appears as a single real growing mode.

Klein-Gordon flow: the wave with frequency w is stable exactly when
Gamma > 0 and sqrt((p-1)/(2+alpha-(p-1)(d-1))) < |w| < 1; the Gamma = 0
endpoint is unstable for every |w| < 1 (the threshold degenerates to 1).

Both classifiers are proved for beta = 1; fractional requests return
OutOfTheory and point at the numerical pipeline.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .grid import Field
from .params import (ModelParams, classify_admissibility, gamma_big,
                     gamma_big_snapped)
from .solver import GroundState, dilate_field

__all__ = [
    "StabilityVerdict",
    "classify_hartree",
    "classify_kg",
    "kg_threshold",
    "kg_profile",
    "kg_profile_residual",
    "sweep",
    "sweep_to_csv",
]

VERDICTS = ("Stable", "Unstable", "NoSoliton", "OutOfTheory")


@dataclass(frozen=True)
class StabilityVerdict:
    model: str  # "hartree" or "kg"
    verdict: str
    gamma_big: float
    kg_threshold: float | None
    rule: str

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "verdict": self.verdict,
            "gamma_big": self.gamma_big,
            "kg_threshold": self.kg_threshold,
            "rule": self.rule,
        }


def _existence(params: ModelParams) -> bool:
    verdict = classify_admissibility(params)
    return verdict.regime in ("ClassicalExistence", "Both")


def classify_hartree(params: ModelParams) -> StabilityVerdict:
    gb = gamma_big_snapped(params)
    if params.beta != 1.0:
        return StabilityVerdict(
            "hartree", "OutOfTheory", gb, None,
            "closed form is classical (beta = 1); use the numerical pipeline")
    if not _existence(params):
        return StabilityVerdict(
            "hartree", "NoSoliton", gb, None,
            "outside the existence window 1 + alpha/d < p < 1 + (2+alpha)/(d-2)")
    if gb > 0.0:
        rule = "stable: p < 1 + (2+alpha)/d (Gamma > 0)"
        verdict = "Stable"
    elif gb == 0.0:
        rule = ("stable boundary: p = 1 + (2+alpha)/d (Gamma = 0, "
                "extra pair in the generalized kernel)")
        verdict = "Stable"
    else:
        rule = "unstable: p > 1 + (2+alpha)/d (Gamma < 0, single growing mode)"
        verdict = "Unstable"
    return StabilityVerdict("hartree", verdict, gb, None, rule)


def kg_threshold(params: ModelParams) -> float:
    """sqrt((p-1)/(2+alpha-(p-1)(d-1))), the stability frequency cutoff
    (only meaningful for Gamma > 0, where it lies in (0, 1))."""
    denom = 2.0 + params.alpha - (params.p - 1.0) * (params.d - 1.0)
    return math.sqrt((params.p - 1.0) / denom)


def classify_kg(params: ModelParams, kg_omega: float | None = None) -> StabilityVerdict:
    if kg_omega is None:
        kg_omega = params.kg_omega
    if kg_omega is None:
        raise ValueError("the Klein-Gordon classifier needs a frequency")
    if not -1.0 < kg_omega < 1.0:
        raise ValueError(f"kg frequency must lie in (-1, 1), got {kg_omega}")
    gb = gamma_big_snapped(params)
    if params.beta != 1.0:
        return StabilityVerdict(
            "kg", "OutOfTheory", gb, None,
            "closed form is classical (beta = 1); use the numerical pipeline")
    if not _existence(params):
        return StabilityVerdict(
            "kg", "NoSoliton", gb, None,
            "outside the existence window 1 + alpha/d < p < 1 + (2+alpha)/(d-2)")
    if gb < 0.0:
        return StabilityVerdict(
            "kg", "Unstable", gb, None,
            "unstable: Gamma < 0 (every frequency)")
    if gb == 0.0:
        return StabilityVerdict(
            "kg", "Unstable", gb, None,
            "unstable: Gamma = 0 (threshold degenerates to 1)")
    thr = kg_threshold(params)
    if abs(kg_omega) > thr:
        return StabilityVerdict(
            "kg", "Stable", gb, thr,
            f"stable: |omega| = {abs(kg_omega):g} above threshold {thr:.6g}")
    return StabilityVerdict(
        "kg", "Unstable", gb, thr,
        f"unstable: |omega| = {abs(kg_omega):g} at or below threshold {thr:.6g}")


def kg_profile(gs: GroundState, kg_omega: float) -> Field:
    """Profile of the Klein-Gordon standing wave at frequency kg_omega,
    (1-w^2)^((2+alpha)/(4(p-1))) * phi(x*sqrt(1-w^2)), from the unit-frequency
    profile phi (trigonometric interpolation for the dilation)."""
    if gs.params.beta != 1.0:
        raise ValueError("the Klein-Gordon rescaling is classical: beta must be 1")
    if gs.normalization != "unit_frequency":
        raise ValueError("kg_profile needs the unit-frequency normalization")
    if not -1.0 < kg_omega < 1.0:
        raise ValueError(f"kg frequency must lie in (-1, 1), got {kg_omega}")
    if kg_omega == 0.0:
        return Field(gs.phi.grid, gs.phi.values.copy())
    s = math.sqrt(1.0 - kg_omega ** 2)
    amp = (1.0 - kg_omega ** 2) ** ((2.0 + gs.params.alpha)
                                    / (4.0 * (gs.params.p - 1.0)))
    dil = dilate_field(gs.phi, s)
    return Field(gs.phi.grid, amp * dil.values)


def kg_profile_residual(psi: Field, params: ModelParams, kg_omega: float) -> float:
    """Relative residual of the Klein-Gordon profile equation
    -Lap(Psi) + (1-w^2)Psi - c(|.|^(-gamma)*Psi^p)Psi^(p-1) = 0."""
    from .energy import HartreeEnergy

    ws = HartreeEnergy(params, psi.grid)
    _, g = ws.value_and_gradient(psi)
    res = g.values + (1.0 - kg_omega ** 2) * psi.values
    vol = psi.grid.cell_volume
    return float(math.sqrt(np.sum(res * res) * vol)
                 / math.sqrt(np.sum(psi.values ** 2) * vol))


def sweep(model: str, d: int, alphas, ps, kg_omega: float | None = None) -> list[dict]:
    """Closed-form verdicts over a (alpha, p) grid at fixed d (and frequency
    for the Klein-Gordon model); one row per tuple."""
    if model not in ("hartree", "kg"):
        raise ValueError(f"model must be hartree or kg, got {model!r}")
    rows = []
    for alpha in alphas:
        for p in ps:
            params = ModelParams(d=d, beta=1.0, alpha=float(alpha), p=float(p))
            if model == "hartree":
                v = classify_hartree(params)
            else:
                v = classify_kg(params, kg_omega)
            row = {"d": d, "alpha": float(alpha), "p": float(p)}
            if model == "kg":
                row["omega"] = float(kg_omega)
            row.update({
                "gamma_big": v.gamma_big,
                "kg_threshold": "" if v.kg_threshold is None else v.kg_threshold,
                "verdict": v.verdict,
                "rule": v.rule,
            })
            rows.append(row)
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    """RFC-4180 CSV with a header row; '.' decimal separator throughout."""
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()),
                            quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
