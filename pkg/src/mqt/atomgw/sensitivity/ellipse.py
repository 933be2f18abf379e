"""Differential phase extraction from correlated port populations.

Both ensembles share the common-mode laser phase, so the pairs (1 - 2 P1, 1 - 2 P2) trace the
ellipse x^2 / C1^2 - 2 x y cos(dphi) / (C1 C2) + y^2 / C2^2 = sin^2(dphi), whatever the common phase
of each shot. The conic is fitted by hyper-renormalized least squares, which removes the
second-order bias readout noise puts on thin ellipses. The constrained direct fit (4 A C - B^2 = 1)
is kept as an alternative and as the fallback when the hyper solution is not an ellipse. The
differential phase is read off the normalized cross term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import eig

from mqt.atomgw.errors import DegenerateFitError, ValidationError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

MIN_SAMPLES = 6
HYPER_TRACE = np.array([1.0, 0.0, 1.0, 0.0, 0.0, 0.0])


class FitMethod(str, Enum):
    HYPER = "hyper"
    DIRECT = "direct"


@dataclass(frozen=True)
class EllipseSample:
    p1: float
    p2: float

    def __post_init__(self) -> None:
        for name, value in (("p1", self.p1), ("p2", self.p2)):
            if not 0 <= value <= 1:
                msg = f"Port population {name}={value} must lie in [0, 1]."
                raise ValidationError(msg)


@dataclass(frozen=True)
class EllipseFit:
    delta_phi: float
    residual: float
    center: tuple[float, float]
    axes: tuple[float, float]
    tilt: float
    coefficients: tuple[float, float, float, float, float, float]


def _conic_coefficients(x: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
    d1 = np.column_stack((x**2, x * y, y**2))
    d2 = np.column_stack((x, y, np.ones_like(x)))
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        linear = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as err:
        msg = "Linear scatter matrix of the samples is singular."
        raise DegenerateFitError(msg) from err
    reduced = s1 + s2 @ linear
    # premultiply by the inverse of the constraint matrix
    reduced = np.vstack([reduced[2] / 2.0, -reduced[1], reduced[0] / 2.0])
    _, vectors = np.linalg.eig(reduced)
    vectors = np.real(vectors)
    constraint = 4 * vectors[0] * vectors[2] - vectors[1] ** 2
    candidates = np.flatnonzero(constraint > 0)
    if candidates.size == 0:
        msg = "No elliptical solution satisfies 4 A C - B^2 > 0."
        raise DegenerateFitError(msg)
    quadratic = vectors[:, candidates[0]]
    coefficients = np.concatenate((quadratic, linear @ quadratic))
    if coefficients[0] < 0:
        coefficients = -coefficients
    return coefficients / np.linalg.norm(coefficients)


def _sym(matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    return (matrix + np.swapaxes(matrix, -1, -2)) / 2


def _hyper_coefficients(x: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
    """Hyper-renormalized least squares: M theta = lambda N theta with the bias-cancelling weight N.

    Carrier vector (x^2, 2xy, y^2, 2x, 2y, 1) with unit reference length and isotropic noise.
    """
    n = x.size
    zero, one = np.zeros_like(x), np.ones_like(x)
    carrier = np.column_stack((x**2, 2 * x * y, y**2, 2 * x, 2 * y, one))
    covariance = 4 * np.array(
        [
            [x**2, x * y, zero, x, zero, zero],
            [x * y, x**2 + y**2, x * y, y, x, zero],
            [zero, x * y, y**2, zero, y, zero],
            [x, y, zero, one, zero, zero],
            [zero, x, y, zero, one, zero],
            [zero, zero, zero, zero, zero, zero],
        ]
    ).transpose(2, 0, 1)

    moment = carrier.T @ carrier / n
    values, vectors = np.linalg.eigh(moment)
    # rank-5 pseudo-inverse; the dropped direction is the conic itself
    pseudo = vectors[:, 1:] @ np.diag(1 / values[1:]) @ vectors[:, 1:].T
    projected = carrier @ pseudo
    leverage = np.einsum("ai,ai->a", projected, carrier)
    cross = np.einsum("aij,aj,ak->aik", covariance, projected, carrier)
    weight = covariance.mean(axis=0) + 2 * _sym(np.outer(carrier.mean(axis=0), HYPER_TRACE))
    weight -= (np.einsum("a,aij->ij", leverage, covariance) + 2 * _sym(cross).sum(axis=0)) / n**2

    eigenvalues, eigenvectors = eig(moment, weight)
    finite = np.flatnonzero(np.isfinite(eigenvalues))
    if finite.size == 0:
        msg = "Hyper-renormalized conic fit has no finite solution."
        raise DegenerateFitError(msg)
    best = finite[np.argmin(np.abs(eigenvalues[finite]))]
    coefficients = np.real(eigenvectors[:, best]) * np.array([1.0, 2.0, 1.0, 2.0, 2.0, 1.0])
    if coefficients[0] < 0:
        coefficients = -coefficients
    return coefficients / np.linalg.norm(coefficients)


def conic_to_standard(coefficients: Sequence[float]) -> tuple[tuple[float, float], tuple[float, float], float]:
    """Center, (major, minor) semi-axes and major-axis tilt in (-pi/2, pi/2] of a general conic."""
    a, b, c, d, e, f = (float(value) for value in coefficients)
    conic = np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])
    quadratic = conic[:2, :2]
    center = np.linalg.solve(quadratic, [-d / 2, -e / 2])
    values, vectors = np.linalg.eigh(quadratic)
    major, minor = np.sqrt(-np.linalg.det(conic) / (np.linalg.det(quadratic) * values))
    tilt = float(np.arctan2(vectors[1, 0], vectors[0, 0]))
    if minor > major:
        major, minor = minor, major
        tilt += np.pi / 2
    if tilt <= -np.pi / 2:
        tilt += np.pi
    elif tilt > np.pi / 2:
        tilt -= np.pi
    return (float(center[0]), float(center[1])), (float(major), float(minor)), tilt


def _max_angular_gap(x: NDArray[np.float64], y: NDArray[np.float64], center: tuple[float, float]) -> float:
    angles = np.sort(np.arctan2(y - center[1], x - center[0]))
    gaps = np.diff(np.concatenate((angles, [angles[0] + 2 * np.pi])))
    return float(gaps.max())


def ellipse_fit(samples: Sequence[EllipseSample], method: FitMethod = FitMethod.HYPER) -> EllipseFit:
    """Fit the population ellipse and return the differential phase in [0, pi].

    The sign of the phase is not observable from the ellipse alone; the estimate is folded into
    [0, pi] by the sign of the normalized cross term.
    """
    if len(samples) < MIN_SAMPLES:
        msg = f"Ellipse fit needs at least {MIN_SAMPLES} samples, got {len(samples)}."
        raise DegenerateFitError(msg)
    x = np.array([1 - 2 * sample.p1 for sample in samples])
    y = np.array([1 - 2 * sample.p2 for sample in samples])
    design = np.column_stack((x**2, x * y, y**2, x, y, np.ones_like(x)))
    if np.linalg.matrix_rank(design) < 5:
        msg = "Samples are collinear or repeated; the ellipse is undetermined."
        raise DegenerateFitError(msg)

    if method is FitMethod.HYPER:
        coefficients = _hyper_coefficients(x, y)
        a, b, c = coefficients[:3]
        if not 4 * a * c - b**2 > 0:
            logger.warning("Hyper-renormalized fit returned a non-elliptic conic; using the constrained direct fit.")
            coefficients = _conic_coefficients(x, y)
    else:
        coefficients = _conic_coefficients(x, y)
    a, b, c = coefficients[:3]
    if not 4 * a * c - b**2 > 0:
        msg = "Fitted conic is not an ellipse."
        raise DegenerateFitError(msg)
    center, axes, tilt = conic_to_standard(coefficients)
    if not np.all(np.isfinite(axes)):
        msg = "Fitted ellipse has no real semi-axes."
        raise DegenerateFitError(msg)

    cos_phi = -b / (2 * np.sqrt(a * c))
    delta_phi = float(np.arccos(np.clip(cos_phi, -1.0, 1.0)))
    residual = float(np.sqrt(np.mean((design @ coefficients) ** 2)))

    gap = _max_angular_gap(x, y, center)
    if gap > np.pi:
        logger.warning("Samples cover less than half of the ellipse (largest angular gap %.3f rad).", gap)
    logger.debug("Ellipse fit: delta_phi=%.6g residual=%.3g axes=%s", delta_phi, residual, axes)
    return EllipseFit(
        delta_phi=delta_phi,
        residual=residual,
        center=center,
        axes=axes,
        tilt=tilt,
        coefficients=tuple(float(value) for value in coefficients),  # type: ignore[arg-type]
    )


def synthesize_ellipse_samples(
    delta_phi: float,
    n: int,
    contrast: float = 1.0,
    readout_noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[EllipseSample]:
    """Port populations for ``n`` shots with uniformly random common-mode phase.

    Populations are clipped to [0, 1] after the Gaussian readout noise is added.
    """
    if n < 1:
        msg = f"Number of samples n={n} must be positive."
        raise ValidationError(msg)
    if not 0 < contrast <= 1:
        msg = f"Contrast {contrast} must lie in (0, 1]."
        raise ValidationError(msg)
    if readout_noise < 0:
        msg = f"Readout noise {readout_noise} must be non-negative."
        raise ValidationError(msg)
    if rng is None:
        rng = np.random.default_rng()
    common = rng.uniform(0, 2 * np.pi, size=n)
    p1 = 0.5 * (1 - contrast * np.cos(common))
    p2 = 0.5 * (1 - contrast * np.cos(common + delta_phi))
    if readout_noise > 0:
        p1 = p1 + rng.normal(0.0, readout_noise, size=n)
        p2 = p2 + rng.normal(0.0, readout_noise, size=n)
    p1 = np.clip(p1, 0.0, 1.0)
    p2 = np.clip(p2, 0.0, 1.0)
    return [EllipseSample(float(u), float(v)) for u, v in zip(p1, p2)]
