"""Energy-retention thresholding of an estimated signal vector into DOA estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ThresholdConfig:
    """Retain the smallest set of components holding at least ``eta`` of the energy."""

    eta: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"energy fraction must be in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class DoaEstimate:
    """Estimated arrival angles with the retained complex amplitudes.

    ``angles`` is sorted ascending; ``l_hat`` is the estimated source count.
    """

    angles: np.ndarray
    amplitudes: np.ndarray
    indices: np.ndarray
    l_hat: int


def _retained_indices(energies: np.ndarray, eta: float) -> np.ndarray:
    """Minimal descending-energy prefix reaching ``eta`` of the total energy.

    Ties in energy are broken toward the smaller index.
    """
    total = energies.sum()
    order = np.lexsort((np.arange(len(energies)), -energies))
    cum = np.cumsum(energies[order])
    n_keep = int(np.searchsorted(cum, eta * total)) + 1
    return order[:n_keep]


def threshold(x_complex: np.ndarray, thetas: np.ndarray,
              config: ThresholdConfig = ThresholdConfig()) -> DoaEstimate:
    """Keep the most significant components of ``x_complex`` and map them to angles.

    Components are taken in descending order of |x|^2 until the cumulative energy
    reaches ``config.eta`` of the total; the rest are treated as zero. An all-zero
    input yields an empty estimate.
    """
    x_complex = np.asarray(x_complex)
    energies = np.abs(x_complex) ** 2
    if energies.sum() == 0.0:
        empty = np.array([])
        return DoaEstimate(angles=empty, amplitudes=empty.astype(complex),
                           indices=empty.astype(int), l_hat=0)
    keep = _retained_indices(energies, config.eta)
    keep = np.sort(keep)
    return DoaEstimate(angles=np.asarray(thetas, dtype=float)[keep],
                       amplitudes=x_complex[keep],
                       indices=keep,
                       l_hat=len(keep))


def thresholded_vector(x_complex: np.ndarray,
                       config: ThresholdConfig = ThresholdConfig()) -> np.ndarray:
    """Copy of ``x_complex`` with every non-retained component set to exactly zero."""
    x_complex = np.asarray(x_complex)
    out = np.zeros_like(x_complex)
    energies = np.abs(x_complex) ** 2
    if energies.sum() == 0.0:
        return out
    keep = _retained_indices(energies, config.eta)
    out[keep] = x_complex[keep]
    return out


def primary_doa(est: DoaEstimate) -> float | None:
    """Angle of the retained component with the largest magnitude.

    Ties break toward the smaller angle; an empty estimate has no primary DOA.
    """
    if est.l_hat == 0:
        return None
    # angles are sorted ascending and argmax returns the first maximum
    return float(est.angles[np.argmax(np.abs(est.amplitudes))])
