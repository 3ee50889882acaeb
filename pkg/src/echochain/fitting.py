"""Decay-rate extraction from coherence curves.

Two estimators, matching how the two channels decay on reachable
timescales: a weighted log-linear fit of the exponential tail (slope of
log C against 2*tau0 gives the noninteracting rate), and a weighted linear
fit of the early interacting decay C ~ b*(1 - 2*rate*tau0).  Early
oscillations are not detrended; they sit in the residuals, which are
always reported.

Default windows tie to the physical scales: the exponential tail starts
once the Gaussian shoulder has passed (2*tau0 >= 3/gamma) and the early
linear window starts after the internal-dynamics transient
(tau0 >= 2/j_eff) and ends at tau0 = 30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import CoherenceCurve

EARLY_WINDOW_END = 30.0
SIGNAL_TO_ERROR_MIN = 5.0


class FitError(ValueError):
    """Fit refused: not enough usable points or an unusable model."""


@dataclass(frozen=True, eq=False)
class RateFit:
    """One extracted decay rate with its fit diagnostics.

    covariance is the 2x2 matrix of the underlying line parameters in
    (intercept, slope) order; rate_err is propagated from it.
    """

    rate: float
    rate_err: float
    prefactor: float
    window: tuple
    residual_rms: float
    covariance: np.ndarray
    n_points: int
    kind: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rate": self.rate,
            "rate_err": self.rate_err,
            "prefactor": self.prefactor,
            "window": [self.window[0], self.window[1]],
            "residual_rms": self.residual_rms,
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "n_points": self.n_points,
        }


def default_tail_window(gamma: float) -> tuple:
    """tau0 window where the noninteracting decay is already exponential."""
    return (1.5 / gamma, math.inf)


def default_early_window(j_eff: float) -> tuple:
    """tau0 window of the initial interacting decay, transient excluded."""
    return (2.0 / j_eff, EARLY_WINDOW_END)


def _curve_gamma(parameters: dict):
    if "gamma" in parameters:
        return parameters["gamma"]
    return parameters.get("noise", {}).get("gamma")


def _curve_jeff(parameters: dict):
    if "j_eff" in parameters:
        return parameters["j_eff"]
    couplings = parameters.get("couplings")
    if couplings is None:
        return None
    return math.sqrt(couplings["j_x"]**2 + couplings["j_y"]**2
                     + couplings["j_z"]**2)


def _weighted_line(x: np.ndarray, y: np.ndarray, sigma: np.ndarray):
    """Weighted least squares of y = b0 + b1 x.

    Returns (intercept, slope, covariance, residual_rms).  Points with
    sigma = 0 only occur on synthetic exact curves; if all sigmas vanish
    the fit is unweighted, otherwise zero sigmas borrow the smallest
    positive one.
    """
    sigma = sigma.astype(float).copy()
    positive = sigma[sigma > 0]
    if positive.size == 0:
        sigma[:] = 1.0
    else:
        sigma[sigma == 0] = positive.min()
    w = 1.0 / sigma**2
    design = np.column_stack([np.ones_like(x), x])
    gram = design.T @ (w[:, None] * design)
    rhs = design.T @ (w * y)
    cov = np.linalg.inv(gram)
    beta = cov @ rhs
    resid = y - design @ beta
    return float(beta[0]), float(beta[1]), cov, float(
        np.sqrt(np.mean(resid**2)))


def _window_mask(tau0: np.ndarray, window: tuple) -> np.ndarray:
    lo, hi = window
    return (tau0 >= lo - 1e-12) & (tau0 <= hi + 1e-12)


def fit_exponential_tail(curve: CoherenceCurve, window: tuple | None = None) -> RateFit:
    """Fit log C against 2*tau0 in the tail window; slope is -rate.

    Only points with C above SIGNAL_TO_ERROR_MIN times their standard
    error enter (signal above the Monte Carlo noise floor); fewer than 4
    such points refuses the fit.
    """
    if window is None:
        gamma = _curve_gamma(curve.parameters)
        if gamma is None:
            raise FitError("no window given and curve carries no gamma")
        window = default_tail_window(gamma)
    tau0 = curve.tau0_values()
    c = curve.c_values()
    err = curve.std_errors()
    keep = _window_mask(tau0, window) & (c > SIGNAL_TO_ERROR_MIN * err) & (c > 0)
    if keep.sum() < 4:
        raise FitError(
            f"exponential tail fit needs >= 4 usable points in "
            f"tau0 window [{window[0]:g}, {window[1]:g}], found {int(keep.sum())}")
    x = 2.0 * tau0[keep]
    y = np.log(c[keep])
    sigma = np.where(err[keep] > 0, err[keep] / c[keep], 0.0)
    intercept, slope, cov, resid = _weighted_line(x, y, sigma)
    return RateFit(rate=-slope, rate_err=float(np.sqrt(cov[1, 1])),
                   prefactor=math.exp(intercept),
                   window=(float(window[0]), float(window[1])),
                   residual_rms=resid, covariance=cov,
                   n_points=int(keep.sum()), kind="exponential_tail")


def fit_linear_early(curve: CoherenceCurve, window: tuple | None = None) -> RateFit:
    """Fit C ~ b*(1 - 2*rate*tau0) on the initial decay.

    A straight line in tau0 with intercept b and slope -2*b*rate, so
    rate = slope / (-2 * intercept); covariance is propagated into
    rate_err.  A nonpositive intercept refuses the fit.
    """
    if window is None:
        j_eff = _curve_jeff(curve.parameters)
        if j_eff is None:
            raise FitError("no window given and curve carries no j_eff")
        window = default_early_window(j_eff)
    tau0 = curve.tau0_values()
    c = curve.c_values()
    err = curve.std_errors()
    keep = _window_mask(tau0, window)
    if keep.sum() < 4:
        raise FitError(
            f"early linear fit needs >= 4 points in tau0 window "
            f"[{window[0]:g}, {window[1]:g}], found {int(keep.sum())}")
    x = tau0[keep]
    y = c[keep]
    intercept, slope, cov, resid = _weighted_line(x, y, err[keep])
    if intercept <= 0:
        raise FitError(f"fitted intercept {intercept:g} <= 0")
    rate = slope / (-2.0 * intercept)
    d_rate = np.array([slope / (2.0 * intercept**2), -1.0 / (2.0 * intercept)])
    rate_var = float(d_rate @ cov @ d_rate)
    return RateFit(rate=rate, rate_err=math.sqrt(max(rate_var, 0.0)),
                   prefactor=intercept,
                   window=(float(window[0]), float(window[1])),
                   residual_rms=resid, covariance=cov,
                   n_points=int(keep.sum()), kind="linear_early")
