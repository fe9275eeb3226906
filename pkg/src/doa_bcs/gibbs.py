"""Spike-and-slab Gibbs sampler for per-snapshot sparse signal estimation.

Each stacked component carries an indicator that mixes a point mass at exactly
zero with a Gaussian slab; indicator probabilities for grid points farther than
a window from the previous snapshot's support are drawn from a Beta tilted
toward zero, which hard-enforces sparsity away from the previous estimate. The
same indicator and precision are shared between the real and imaginary halves
of each grid point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .array_model import ConfigurationError


@dataclass(frozen=True)
class GibbsConfig:
    """Chain length, indicator window, and hyperpriors."""

    t_total: int = 300
    t_burn_in: int = 250
    window: int = 5
    beta1: float = 1e-4
    beta2: float = 1e-4
    beta3: float = 1e-4
    beta4: float = 1e-4
    beta5: float = 1.0
    beta6: float = 1.0
    p0_init: float = 10.0

    def __post_init__(self):
        if self.t_burn_in >= self.t_total:
            raise ConfigurationError(
                f"burn-in {self.t_burn_in} must be shorter than the chain {self.t_total}")
        if self.window < 1:
            raise ConfigurationError(f"indicator window must be >= 1, got {self.window}")
        if self.beta5 - 1.0 / self.window <= 0:
            raise ConfigurationError(
                f"beta5={self.beta5} with window {self.window} gives a non-positive "
                "Beta shape for the out-of-window indicator")


@dataclass
class GibbsState:
    """Current sweep state.

    ``p`` is pairwise-shared (index n and N+n hold one value) and ``z1``/``z2``
    are per grid index; the effective indicator per component follows the window
    rule around ``prev_support``.
    """

    x_tilde: np.ndarray
    p: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    p0: float
    prev_support: np.ndarray
    window: int

    def support_distances(self) -> np.ndarray:
        """Grid distance from each index to the previous snapshot's support."""
        n = self.z1.shape[0]
        if self.prev_support.size == 0:
            return np.full(n, np.inf)
        return np.min(np.abs(np.arange(n)[:, None] - self.prev_support[None, :]), axis=1)

    def effective_z(self) -> np.ndarray:
        """Stacked indicator probabilities after the window rule, mirrored halves."""
        z = np.where(self.support_distances() <= self.window, self.z1, self.z2)
        return np.concatenate([z, z])


@dataclass(frozen=True)
class ChainSummary:
    """Post-burn-in averages: signal mean, per-index occupancy, noise variance."""

    x_mean: np.ndarray
    occupancy: np.ndarray
    noise_var_mean: float


@numba.njit(cache=True)
def _conditional(x_n, a_row, resid, gram_nn, p_n, z_n, p0):
    # residual excludes component n: y_kn = resid + a_row * x_n
    t = x_n * gram_nn
    for i in range(a_row.shape[0]):
        t += a_row[i] * resid[i]
    p_hat = p_n + p0 * gram_nn
    mu_hat = p0 * t / p_hat
    if z_n <= 0.0:
        z_hat = 0.0
    elif z_n >= 1.0:
        z_hat = 1.0
    else:
        zc = min(max(z_n, 1e-12), 1.0 - 1e-12)
        log_odds = (np.log(zc) - np.log1p(-zc)
                    + 0.5 * (np.log(p_n) - np.log(p_hat))
                    + 0.5 * p_hat * mu_hat * mu_hat)
        if log_odds > 0.0:
            z_hat = 1.0 / (1.0 + np.exp(-log_odds))
        else:
            e = np.exp(log_odds)
            z_hat = e / (1.0 + e)
    return p_hat, mu_hat, z_hat


@numba.njit(cache=True)
def _draw_component(n, x, resid, a_row, gram_nn, p_n, z_n, p0, u_n, g_n):
    p_hat, mu_hat, z_hat = _conditional(x[n], a_row, resid, gram_nn, p_n, z_n, p0)
    if u_n < 1.0 - z_hat:
        new = 0.0  # spike branch stores an exact zero
    else:
        new = mu_hat + g_n / np.sqrt(p_hat)
    if new != x[n]:
        delta = new - x[n]
        for i in range(resid.shape[0]):
            resid[i] -= a_row[i] * delta
        x[n] = new
    return new


@numba.njit(cache=True)
def _sweep_signals(x, resid, at, gram_diag, p_tilde, z_tilde, p0, u, g):
    for n in range(x.shape[0]):
        _draw_component(n, x, resid, at[n], gram_diag[n], p_tilde[n], z_tilde[n],
                        p0, u[n], g[n])


def conditional_signal_params(n, state: GibbsState, a_tilde, y_tilde):
    """Slab precision, slab mean, and updated indicator for component ``n``.

    Conditioned on the current values of all other components:
    ``p_hat = p_n + p0 * A_n'A_n``, ``mu_hat = p0 * A_n'y_n / p_hat`` with
    ``y_n`` the residual excluding component n, and the indicator odds scaled by
    the ratio of the slab densities at zero. Exact 0/1 indicators short-circuit.
    """
    a_col = np.ascontiguousarray(a_tilde[:, n])
    resid = y_tilde - a_tilde @ state.x_tilde
    z_n = float(state.effective_z()[n])
    p_hat, mu_hat, z_hat = _conditional(float(state.x_tilde[n]), a_col, resid,
                                        float(a_col @ a_col), float(state.p[n]),
                                        z_n, float(state.p0))
    return float(p_hat), float(mu_hat), float(z_hat)


def sample_signal(n, state: GibbsState, a_tilde, y_tilde, rng) -> float:
    """Draw component ``n`` from its spike/slab conditional and store it in place."""
    a_col = np.ascontiguousarray(a_tilde[:, n])
    resid = y_tilde - a_tilde @ state.x_tilde
    z_n = float(state.effective_z()[n])
    new = _draw_component(n, state.x_tilde, resid, a_col, float(a_col @ a_col),
                          float(state.p[n]), z_n, float(state.p0),
                          float(rng.random()), float(rng.standard_normal()))
    return float(new)


def _precision_params(x_prev_snapshot, config: GibbsConfig):
    """Gamma shape/rate per grid index from the windowed previous estimate.

    The window collects complex entries within ``config.window`` grid steps
    (truncated at the edges); shape grows with the nonzero count, rate with the
    energy. Using the complex vector keeps real and imaginary parts identical.
    """
    x_prev = np.asarray(x_prev_snapshot)
    kernel = np.ones(2 * config.window + 1)
    counts = np.convolve((x_prev != 0).astype(float), kernel, mode="same")
    energy = np.convolve(np.abs(x_prev) ** 2, kernel, mode="same")
    return config.beta1 + counts, config.beta2 + energy


def sample_precision(n, x_prev_snapshot, config: GibbsConfig, rng) -> float:
    """Draw the slab precision for grid index ``n`` given the previous estimate."""
    shape, rate = _precision_params(x_prev_snapshot, config)
    return float(rng.gamma(shape[n], 1.0 / rate[n]))


def sample_indicators(config: GibbsConfig, rng, n_grid: int):
    """Draw per-grid-index indicator probabilities for both window branches.

    The in-window branch is Beta(beta5, beta6); the out-of-window branch is
    Beta(beta5 - 1/window, beta6 + 1/window), tilted toward zero.
    """
    z1 = rng.beta(config.beta5, config.beta6, n_grid)
    z2 = rng.beta(config.beta5 - 1.0 / config.window,
                  config.beta6 + 1.0 / config.window, n_grid)
    return z1, z2


def sample_noise_precision(state: GibbsState, a_tilde, y_tilde,
                           config: GibbsConfig, rng) -> float:
    """Draw the noise precision from its Gamma conditional on the current residual."""
    m = a_tilde.shape[0] // 2
    resid = y_tilde - a_tilde @ state.x_tilde
    return float(rng.gamma(config.beta3 + m, 1.0 / (config.beta4 + 0.5 * (resid @ resid))))


def run_chain(y_tilde, a_tilde, x_prev_snapshot, config: GibbsConfig,
              rng: np.random.Generator) -> ChainSummary:
    """Run the sampler and average the post-burn-in sweeps.

    Each sweep draws every stacked component systematically, then refreshes the
    precisions, the indicator probabilities, and the noise precision. The
    previous snapshot's (post-threshold) complex estimate seeds the chain and
    defines the indicator window.
    """
    x_prev = np.asarray(x_prev_snapshot)
    n = x_prev.shape[0]
    m2, n2 = a_tilde.shape
    if n2 != 2 * n:
        raise ValueError(f"design matrix has {n2} columns, expected {2 * n}")
    m = m2 // 2

    prev_support = np.flatnonzero(x_prev != 0)
    if prev_support.size == 0:
        dist = np.full(n, np.inf)
    else:
        dist = np.min(np.abs(np.arange(n)[:, None] - prev_support[None, :]), axis=1)
    in_window = dist <= config.window

    at = np.ascontiguousarray(a_tilde.T)
    gram_diag = np.einsum("ij,ij->j", a_tilde, a_tilde)
    shape, rate = _precision_params(x_prev, config)

    x = np.concatenate([x_prev.real, x_prev.imag]).astype(float)
    p_grid = rng.gamma(shape, 1.0 / rate)
    z1, z2 = sample_indicators(config, rng, n)
    p0 = config.p0_init

    n_keep = config.t_total - config.t_burn_in
    x_sum = np.zeros(2 * n)
    occupancy = np.zeros(2 * n)
    noise_var_sum = 0.0
    for t in range(config.t_total):
        resid = y_tilde - a_tilde @ x
        z_eff = np.where(in_window, z1, z2)
        z_tilde = np.concatenate([z_eff, z_eff])
        p_tilde = np.concatenate([p_grid, p_grid])
        u = rng.random(2 * n)
        g = rng.standard_normal(2 * n)
        _sweep_signals(x, resid, at, gram_diag, p_tilde, z_tilde, p0, u, g)

        p_grid = rng.gamma(shape, 1.0 / rate)
        z1, z2 = sample_indicators(config, rng, n)
        p0 = float(rng.gamma(config.beta3 + m, 1.0 / (config.beta4 + 0.5 * (resid @ resid))))

        if t >= config.t_burn_in:
            x_sum += x
            occupancy += x != 0
            noise_var_sum += 1.0 / p0
    return ChainSummary(x_mean=x_sum / n_keep, occupancy=occupancy / n_keep,
                        noise_var_mean=noise_var_sum / n_keep)
