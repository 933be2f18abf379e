"""Analytic sensitivity estimates and ellipse-based phase extraction."""

from __future__ import annotations

from mqt.atomgw.sensitivity.analytic import (
    SensitivityConfig,
    blackbody_requirement,
    contrast_requirement,
    eq1_analytic,
    plasma_strain_bound,
    q_bound,
    strain_sensitivity_curve,
    zeeman_shift,
)
from mqt.atomgw.sensitivity.ellipse import (
    EllipseFit,
    EllipseSample,
    FitMethod,
    ellipse_fit,
    synthesize_ellipse_samples,
)

__all__ = [
    "EllipseFit",
    "EllipseSample",
    "FitMethod",
    "SensitivityConfig",
    "blackbody_requirement",
    "contrast_requirement",
    "ellipse_fit",
    "eq1_analytic",
    "plasma_strain_bound",
    "q_bound",
    "strain_sensitivity_curve",
    "synthesize_ellipse_samples",
    "zeeman_shift",
]
