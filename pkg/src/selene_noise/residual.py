"""Disparity residual fields and agreement metrics between residual estimates
and ground truth.

Conventions
-----------
All statistics are population statistics over jointly valid pixels; invalid
pixels never enter any sum. The coefficient of determination is the score
form 1 - SS_res/SS_tot, which (unlike the square of the correlation) can go
negative when an estimate is worse than predicting the truth's mean. The
"mean" and "sd" of an agreement are statistics of truth - estimate, i.e. of
the residual that remains after applying the estimate as a correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DisparityMap, ResidualField
from .errors import ContractError

_TOL = 1e-9


@dataclass(frozen=True)
class AgreementMetrics:
    """How well a residual estimate matches the true residual.

    mean/sd: post-correction residual (truth - estimate) statistics, px.
    r: Pearson correlation (NaN when either side is constant).
    r2: coefficient of determination, 1 - SS_res/SS_tot; may be negative.
    """

    mean: float
    sd: float
    r: float
    r2: float

    def __post_init__(self):
        if not math.isnan(self.r) and abs(self.r) > 1.0 + _TOL:
            raise ContractError(f"correlation {self.r} outside [-1, 1]")
        if not math.isnan(self.r2) and self.r2 > 1.0 + _TOL:
            raise ContractError(f"coefficient of determination {self.r2} > 1")
        if self.sd < 0:
            raise ContractError(f"negative sd {self.sd}")


def disparity_residual(d_test: DisparityMap, d_truth: DisparityMap) -> ResidualField:
    """Per-pixel d_test - d_truth over the joint validity mask."""
    if d_test.values.shape != d_truth.values.shape:
        raise ContractError(
            f"shape mismatch: {d_test.values.shape} vs {d_truth.values.shape}"
        )
    valid = d_test.valid & d_truth.valid
    values = np.where(valid, d_test.values - d_truth.values, np.nan)
    return ResidualField(values, valid)


def agreement_from_arrays(estimate: np.ndarray, truth: np.ndarray) -> AgreementMetrics:
    """Agreement metrics of two flat, equal-length, all-valid value vectors."""
    e = np.asarray(estimate, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if e.shape != t.shape:
        raise ContractError(f"length mismatch: {e.size} vs {t.size}")
    if e.size < 2:
        raise ContractError(f"need at least 2 jointly valid pixels, got {e.size}")
    t_mean = t.mean()
    ss_tot = float(np.sum((t - t_mean) ** 2))
    if ss_tot == 0.0:
        raise ContractError("truth is constant: correlation undefined")
    e_mean = e.mean()
    ss_est = float(np.sum((e - e_mean) ** 2))
    if ss_est == 0.0:
        r = float("nan")  # Pearson undefined for a constant estimate
    else:
        cov = float(np.sum((e - e_mean) * (t - t_mean)))
        r = cov / math.sqrt(ss_est * ss_tot)
        r = max(-1.0, min(1.0, r))
    ss_res = float(np.sum((t - e) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    corrected = t - e
    return AgreementMetrics(
        mean=float(corrected.mean()),
        sd=float(corrected.std()),
        r=r,
        r2=r2,
    )


def agreement(estimate: ResidualField, truth: ResidualField) -> AgreementMetrics:
    """Agreement between a residual estimate and the true residual over
    jointly valid pixels. Constant truth raises (undefined correlation)."""
    if estimate.values.shape != truth.values.shape:
        raise ContractError(
            f"shape mismatch: {estimate.values.shape} vs {truth.values.shape}"
        )
    joint = estimate.valid & truth.valid
    return agreement_from_arrays(estimate.values[joint], truth.values[joint])


@dataclass(frozen=True)
class NormalityDiagnostics:
    """Standardized third/fourth moments with a loose consistency flag.

    The flag is a diagnostic screen (|skewness| < 0.2 and |excess kurtosis|
    < 0.5), not a hypothesis test.
    """

    skewness: float
    excess_kurtosis: float
    gaussian_consistent: bool


def normality_diagnostics(field: ResidualField) -> NormalityDiagnostics:
    """Sample skewness and excess kurtosis of the standardized residuals."""
    v = field.valid_values()
    if v.size < 100:
        raise ContractError(f"need at least 100 valid pixels, got {v.size}")
    std = v.std()
    if std == 0.0:
        raise ContractError("zero std: standardized moments undefined")
    z = (v - v.mean()) / std
    skewness = float(np.mean(z**3))
    excess_kurtosis = float(np.mean(z**4)) - 3.0
    return NormalityDiagnostics(
        skewness=skewness,
        excess_kurtosis=excess_kurtosis,
        gaussian_consistent=abs(skewness) < 0.2 and abs(excess_kurtosis) < 0.5,
    )
