"""Exponent fits and bounded-ratio comparisons.

Two quantities are treated as comparable (equal up to constants) over a
family of ``N`` when the spread ``max(ratio) / min(ratio)`` of their
pointwise ratio stays bounded and does not grow quickly with ``N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import ValidationError

__all__ = [
    "FitResult",
    "fit_power_law",
    "successive_exponents",
    "PowerLawRegressor",
    "RatioReport",
    "ratio_report",
    "spread_growth",
    "spread_is_stable",
    "fit_table_rows",
    "RED_FLAG_SPREAD",
    "MAX_SPREAD_GROWTH",
]

RED_FLAG_SPREAD = 1e3
MAX_SPREAD_GROWTH = 2.0


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through ``(ln N, ln y)``."""

    slope: float
    intercept: float
    r_squared: float
    stderr_slope: float
    points_used: int

    def predict(self, N) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(N, dtype=np.float64) ** self.slope

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "stderr_slope": self.stderr_slope,
            "points_used": self.points_used,
        }


def _log_points(points, minimum: int) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([(float(n), float(y)) for n, y in points], dtype=np.float64).reshape(-1, 2)
    if len(arr) < minimum:
        raise ValidationError(f"need at least {minimum} points, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("points must be finite")
    if np.any(arr <= 0):
        raise ValidationError("power-law fits need positive N and y")
    return np.log(arr[:, 0]), np.log(arr[:, 1])


def fit_power_law(points: Iterable[tuple[float, float]]) -> FitResult:
    """Fit ``y = C N^slope`` by ordinary least squares in log-log space.

    Parameters
    ----------
    points : iterable of (N, y)
        At least three points with ``N > 0`` and ``y > 0``.

    Returns
    -------
    FitResult
        ``r_squared`` is 1 when the logged data are exactly linear, including
        the constant case.
    """
    lx, ly = _log_points(points, 3)
    if np.ptp(lx) == 0:
        raise ValidationError("all N values are equal")
    res = stats.linregress(lx, ly)
    ss_res = float(np.sum((ly - (res.intercept + res.slope * lx)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(float(res.slope), float(res.intercept), r2, float(res.stderr), len(lx))


def successive_exponents(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Two-point log slopes between consecutive ``N``.

    Returns ``(N_mid, slope)`` with ``N_mid`` the geometric mean of the pair.
    A decaying power law ``N^-a`` gives slopes near ``-a``.
    """
    lx, ly = _log_points(points, 2)
    if np.any(np.diff(lx) <= 0):
        raise ValidationError("points must be sorted by strictly increasing N")
    slopes = np.diff(ly) / np.diff(lx)
    mids = np.exp(0.5 * (lx[1:] + lx[:-1]))
    return [(float(m), float(s)) for m, s in zip(mids, slopes)]


class PowerLawRegressor(BaseEstimator, RegressorMixin):
    """``y ~ C N^a`` as an estimator; ``coef_`` is the exponent ``a``."""

    def fit(self, X, y):
        N = np.asarray(X, dtype=np.float64).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        if len(N) != len(y):
            raise ValidationError("X and y lengths differ")
        self.fit_ = fit_power_law(zip(N, y))
        self.coef_ = self.fit_.slope
        self.intercept_ = self.fit_.intercept
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "fit_")
        return self.fit_.predict(np.asarray(X, dtype=np.float64).ravel())


@dataclass(frozen=True)
class RatioReport:
    """Extremes of ``exact / formula`` over a region.

    ``excluded_zero`` counts region states whose exact value was exactly zero
    (flushed underflow) and therefore left out.
    """

    min_ratio: float
    max_ratio: float
    spread: float
    argmin: tuple
    argmax: tuple
    region: str
    count: int
    excluded_zero: int = 0

    def as_dict(self) -> dict:
        return {
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "spread": self.spread,
            "argmin": list(self.argmin),
            "argmax": list(self.argmax),
            "region": self.region,
            "count": self.count,
            "excluded_zero": self.excluded_zero,
        }


def ratio_report(
    exact: Mapping[tuple, float],
    formula: Callable[[tuple], float] | Mapping[tuple, float],
    region: Callable[[tuple], bool] | None = None,
    label: str = "all",
) -> RatioReport:
    """Compare exact values against a formula over the states selected by ``region``.

    Parameters
    ----------
    exact : mapping state -> float
    formula : callable or mapping state -> float
        Must be positive on every compared state.
    region : callable state -> bool, optional
        Defaults to every state in ``exact``.
    label : str
        Free-form region description stored in the report.
    """
    f = formula.__getitem__ if isinstance(formula, Mapping) else formula
    states, ratios = [], []
    excluded = 0
    for state, value in exact.items():
        if region is not None and not region(state):
            continue
        if value == 0.0:
            excluded += 1
            continue
        fv = float(f(state))
        if not fv > 0 or not math.isfinite(fv):
            raise ValidationError(f"formula is not positive at {state}: {fv}")
        if value < 0:
            raise ValidationError(f"exact value is negative at {state}: {value}")
        states.append(tuple(state))
        ratios.append(float(value) / fv)
    if not ratios:
        raise ValidationError(f"region {label!r} is empty")
    r = np.asarray(ratios)
    lo, hi = int(np.argmin(r)), int(np.argmax(r))
    return RatioReport(
        min_ratio=float(r[lo]),
        max_ratio=float(r[hi]),
        spread=float(r[hi] / r[lo]),
        argmin=states[lo],
        argmax=states[hi],
        region=label,
        count=len(r),
        excluded_zero=excluded,
    )


def spread_growth(spreads: Sequence[tuple[int, float]]) -> list[float]:
    """Ratios of consecutive spreads, ordered by ``N``."""
    ordered = [s for _, s in sorted(spreads)]
    return [b / a for a, b in zip(ordered, ordered[1:])]


def spread_is_stable(
    spreads: Sequence[tuple[int, float]],
    max_growth: float = MAX_SPREAD_GROWTH,
    red_flag: float = RED_FLAG_SPREAD,
) -> bool:
    """No spread above ``red_flag`` and no step growing by more than ``max_growth``."""
    if any(s > red_flag for _, s in spreads):
        return False
    return all(g <= max_growth for g in spread_growth(spreads))


def fit_table_rows(points: Sequence[tuple[float, float]], fit: FitResult, quantity: str):
    """Rows ``(N, quantity, value, fitted)`` for plotting."""
    for n, y in points:
        yield (n, quantity, float(y), float(fit.predict([n])[0]))
