"""Kalman-filter tracking of a sparse stacked signal across snapshots.

The filter predicts by shifting the previous estimate along the angular grid by
the assumed per-snapshot DOA change (a deterministic index shift, not additive
noise), estimates precisions and noise variance at each snapshot by running the
RVM on the innovation, and then applies the standard linear-Gaussian update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .rvm import NumericalError, RvmConfig, RvmResult, run_modified_rvm


@dataclass(frozen=True)
class MotionModel:
    """Assumed per-snapshot DOA change in degrees (signed multiple of the grid step)."""

    delta_degrees: float = 0.0


@dataclass
class TrackState:
    """Filtered stacked signal, its covariance, and the current hyperparameters."""

    x_filt: np.ndarray
    sigma_filt: np.ndarray
    sigma2: float
    p: np.ndarray


@dataclass(frozen=True)
class PredictResult:
    x_pred: np.ndarray
    sigma_pred: np.ndarray
    y_pred: np.ndarray

    def innovation(self, y_tilde: np.ndarray) -> np.ndarray:
        return y_tilde - self.y_pred


@dataclass(frozen=True)
class UpdateResult:
    x_new: np.ndarray
    sigma_new: np.ndarray
    gain: np.ndarray
    innovation: np.ndarray


def shift_prediction(x_filt: np.ndarray, motion: MotionModel,
                     grid_step: float = 1.0) -> np.ndarray:
    """Shift both stacked halves by the assumed DOA change.

    Entries shifted past the grid edge are dropped and the vacated end is
    zero-filled; angles do not wrap. The shift must be a whole number of grid
    steps.
    """
    steps_f = motion.delta_degrees / grid_step
    steps = int(round(steps_f))
    if abs(steps_f - steps) > 1e-9:
        raise ValueError(
            f"assumed DOA change {motion.delta_degrees} is not a multiple of the "
            f"grid step {grid_step}")
    n = x_filt.shape[0] // 2
    out = np.zeros_like(x_filt)
    if steps == 0:
        return x_filt.copy()
    for block in (slice(0, n), slice(n, 2 * n)):
        src = x_filt[block]
        dst = out[block]
        if steps > 0 and steps < n:
            dst[steps:] = src[:n - steps]
        elif steps < 0 and -steps < n:
            dst[:n + steps] = src[-steps:]
    return out


def predict(state: TrackState, motion: MotionModel, a_tilde: np.ndarray,
            grid_step: float = 1.0) -> PredictResult:
    """Prediction step: shifted mean, covariance inflated by the prior variances.

    Pruned components carry precision at the cap, so they contribute effectively
    zero prior variance.
    """
    x_pred = shift_prediction(state.x_filt, motion, grid_step)
    sigma_pred = state.sigma_filt + np.diag(1.0 / state.p)
    return PredictResult(x_pred=x_pred, sigma_pred=sigma_pred, y_pred=a_tilde @ x_pred)


def kalman_update(x_pred, sigma_pred, y_e, a_tilde, sigma2) -> UpdateResult:
    """Measurement update with gain ``K = Sigma A' (sigma2 I + A Sigma A')^-1``."""
    if sigma2 <= 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    m2 = a_tilde.shape[0]
    s = sigma2 * np.eye(m2) + a_tilde @ sigma_pred @ a_tilde.T
    try:
        chol = scipy.linalg.cho_factor(0.5 * (s + s.T), lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"innovation covariance solve failed: {exc}") from exc
    # K = sigma_pred A' S^-1, computed through the factorization of S
    k = scipy.linalg.cho_solve(chol, a_tilde @ sigma_pred, check_finite=False).T
    x_new = x_pred + k @ y_e
    sigma_new = (np.eye(sigma_pred.shape[0]) - k @ a_tilde) @ sigma_pred
    sigma_new = 0.5 * (sigma_new + sigma_new.T)
    return UpdateResult(x_new=x_new, sigma_new=sigma_new, gain=k, innovation=y_e)


def initialize_track(a_tilde, y_tilde, rvm_config: RvmConfig | None = None,
                     sigma2_init: float = 0.1) -> tuple[TrackState, RvmResult]:
    """First snapshot: traditional RVM (zero prior mean) seeds the track.

    The initial covariance is the prior implied by the converged precisions.
    """
    result = run_modified_rvm(a_tilde, y_tilde, x_p=None, config=rvm_config,
                              sigma2_init=sigma2_init)
    state = TrackState(x_filt=result.x_opt,
                       sigma_filt=np.diag(1.0 / result.p_opt),
                       sigma2=result.sigma2_opt,
                       p=result.p_opt)
    return state, result


def track_step(state: TrackState, y_tilde_k: np.ndarray, motion: MotionModel,
               a_tilde: np.ndarray, rvm_config: RvmConfig | None = None,
               sigma2_init: float = 0.1, use_predicted_prior: bool = True,
               grid_step: float = 1.0) -> tuple[TrackState, RvmResult]:
    """One prediction/estimation/update cycle.

    The RVM runs on the innovation; with ``use_predicted_prior`` the predicted
    signal is the prior mean (the modified estimator), otherwise the prior mean
    is zero (the traditional baseline). The resulting hyperparameters drive the
    covariance prediction and the Kalman gain.
    """
    x_pred = shift_prediction(state.x_filt, motion, grid_step)
    y_e = y_tilde_k - a_tilde @ x_pred
    x_p = x_pred if use_predicted_prior else None
    rvm = run_modified_rvm(a_tilde, y_e, x_p=x_p, config=rvm_config,
                           sigma2_init=sigma2_init)
    interim = TrackState(x_filt=state.x_filt, sigma_filt=state.sigma_filt,
                         sigma2=rvm.sigma2_opt, p=rvm.p_opt)
    pred = predict(interim, motion, a_tilde, grid_step)
    upd = kalman_update(pred.x_pred, pred.sigma_pred, y_e, a_tilde, rvm.sigma2_opt)
    new_state = TrackState(x_filt=upd.x_new, sigma_filt=upd.sigma_new,
                           sigma2=rvm.sigma2_opt, p=rvm.p_opt)
    return new_state, rvm
