"""Uniform linear array model with mutual coupling.

Builds steering vectors over an angular grid, applies a banded symmetric-Toeplitz
mutual coupling matrix, synthesizes noisy snapshots, and converts the complex
measurement model into the stacked real-valued form used by the estimators.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class ConfigurationError(ValueError):
    """Raised when array or coupling parameters are inconsistent."""


@dataclass(frozen=True)
class ArrayGeometry:
    """Geometry of a ULA with M antennas.

    Antenna m sits at distance ``d[m] = m * delta_d`` wavelengths from antenna 0
    (``d[0] = 0``). The phase response of antenna m to a plane wave from angle
    theta is ``mu[m] * omega * cos(theta)`` radians, so with the default
    ``omega = 2*pi`` and half-wavelength spacing the phase is ``pi*m*cos(theta)``.

    Parameters
    ----------
    m : int
        Number of antennas.
    delta_d : float
        Adjacent antenna separation in wavelengths.
    omega : float
        Normalized frequency (radians/sample).
    """

    m: int
    delta_d: float = 0.5
    omega: float = 2.0 * np.pi
    d: np.ndarray = field(init=False, repr=False, compare=False)
    mu: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError(f"need at least one antenna, got m={self.m}")
        if self.delta_d <= 0:
            raise ConfigurationError(f"antenna separation must be positive, got {self.delta_d}")
        d = self.delta_d * np.arange(self.m, dtype=float)
        object.__setattr__(self, "d", d)
        # delay coefficients normalized so mu*omega*cos(theta) is the phase
        object.__setattr__(self, "mu", d * (2.0 * np.pi / self.omega))


@dataclass(frozen=True)
class CouplingSpec:
    """Banded mutual coupling: antennas separated by >= ``reach`` lags do not couple.

    ``rho[i]`` / ``phi[i]`` give amplitude and phase of the coupling coefficient at
    lag ``i + 1``; there must be exactly ``reach - 1`` of each. ``reach = 1`` means
    no coupling (identity matrix).
    """

    reach: int = 1
    rho: tuple = ()
    phi: tuple = ()

    def __post_init__(self):
        if self.reach < 1:
            raise ConfigurationError(f"coupling reach must be >= 1, got {self.reach}")
        if len(self.rho) != self.reach - 1 or len(self.phi) != self.reach - 1:
            raise ConfigurationError(
                f"coupling with reach {self.reach} needs {self.reach - 1} amplitude/phase "
                f"pairs, got {len(self.rho)}/{len(self.phi)}"
            )
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        object.__setattr__(self, "phi", tuple(float(p) for p in self.phi))

    @classmethod
    def none(cls) -> "CouplingSpec":
        return cls(reach=1)

    @classmethod
    def uniform_spread(cls, reach, rho_start=0.65, rho_stop=0.25,
                       phi_start=np.pi / 7, phi_stop=np.pi / 10) -> "CouplingSpec":
        """Coefficients linearly interpolated in amplitude and phase across lags."""
        n_lags = reach - 1
        return cls(reach=reach,
                   rho=tuple(np.linspace(rho_start, rho_stop, n_lags)),
                   phi=tuple(np.linspace(phi_start, phi_stop, n_lags)))


def coupling_matrix(spec: CouplingSpec, m: int) -> np.ndarray:
    """Symmetric Toeplitz coupling matrix with unit diagonal.

    Entries at lag l are ``rho[l-1] * exp(1j*phi[l-1])`` for l < reach and exactly
    zero for l >= reach.
    """
    if spec.reach > m:
        raise ConfigurationError(f"coupling reach {spec.reach} exceeds array size {m}")
    first = np.zeros(m, dtype=complex)
    first[0] = 1.0
    for lag in range(1, spec.reach):
        first[lag] = spec.rho[lag - 1] * np.exp(1j * spec.phi[lag - 1])
    # unconjugated symmetry: pass the same vector for row and column
    return scipy.linalg.toeplitz(first, first)


def steering_vector(geom: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Ideal (coupling-free) steering vector for a single arrival angle in degrees."""
    if not 0.0 <= theta_deg <= 180.0:
        raise ValueError(f"arrival angle must be in [0, 180] degrees, got {theta_deg}")
    phase = geom.mu * geom.omega * np.cos(np.deg2rad(theta_deg))
    return np.exp(-1j * phase)


@dataclass(frozen=True)
class SteeringGrid:
    """Steering matrices over an angular grid.

    ``a_st`` holds the ideal steering vectors column-per-angle, ``a`` the effective
    matrix after mutual coupling.
    """

    thetas: np.ndarray
    a_st: np.ndarray
    a: np.ndarray

    @property
    def n(self) -> int:
        return len(self.thetas)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    def grid_index(self, theta_deg: float) -> int:
        """Index of the grid angle closest to ``theta_deg``."""
        return int(np.argmin(np.abs(self.thetas - theta_deg)))


def make_grid(geom: ArrayGeometry, coupling: CouplingSpec | None = None,
              thetas: np.ndarray | None = None) -> SteeringGrid:
    """Build the steering grid; default grid is 1 degree spacing over [0, 180]."""
    if thetas is None:
        thetas = np.arange(0.0, 181.0)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.min() < 0.0 or thetas.max() > 180.0:
        raise ValueError("grid angles must lie in [0, 180] degrees")
    phases = np.outer(geom.mu * geom.omega, np.cos(np.deg2rad(thetas)))
    a_st = np.exp(-1j * phases)
    if coupling is None or coupling.reach <= 1:
        a = a_st.copy()
    else:
        a = coupling_matrix(coupling, geom.m) @ a_st
    return SteeringGrid(thetas=thetas, a_st=a_st, a=a)


@dataclass(frozen=True)
class Snapshot:
    """One array output vector and the noise variance used to synthesize it."""

    y: np.ndarray
    sigma2_true: float


def synthesize_snapshot(grid: SteeringGrid, x: np.ndarray, sigma2: float,
                        rng: np.random.Generator) -> Snapshot:
    """Synthesize ``y = A x + n``.

    Real and imaginary parts of each noise element are independent zero-mean
    Gaussian with variance ``sigma2`` each, matching the stacked real-valued
    likelihood convention.
    """
    if sigma2 < 0:
        raise ValueError(f"noise variance must be nonnegative, got {sigma2}")
    x = np.asarray(x)
    if x.shape != (grid.n,):
        raise ValueError(f"signal vector must have length {grid.n}, got {x.shape}")
    scale = np.sqrt(sigma2)
    noise = scale * rng.standard_normal(grid.m) + 1j * scale * rng.standard_normal(grid.m)
    return Snapshot(y=grid.a @ x + noise, sigma2_true=float(sigma2))


@dataclass(frozen=True)
class RealifiedSystem:
    """Stacked real form of a complex linear system.

    ``a_tilde`` is ``[[Re(A), -Im(A)], [Im(A), Re(A)]]`` and ``y_tilde`` is
    ``[Re(y); Im(y)]``; a stacked unknown carries real parts in its first half
    and imaginary parts in its second half.
    """

    a_tilde: np.ndarray
    y_tilde: np.ndarray


def realify_matrix(a: np.ndarray) -> np.ndarray:
    """2M x 2N real block matrix acting on stacked real/imaginary vectors."""
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def stack_complex(v: np.ndarray) -> np.ndarray:
    """Stack a complex vector as [real parts; imaginary parts]."""
    return np.concatenate([v.real, v.imag])


def unstack_complex(v_tilde: np.ndarray) -> np.ndarray:
    """Inverse of :func:`stack_complex`; exact (no arithmetic involved)."""
    n = v_tilde.shape[0] // 2
    return v_tilde[:n] + 1j * v_tilde[n:]


def realify(a: np.ndarray, y: np.ndarray) -> RealifiedSystem:
    """Stack a complex design matrix and measurement into the real form."""
    a = np.asarray(a)
    y = np.asarray(y)
    if y.shape != (a.shape[0],):
        raise ValueError(f"measurement length {y.shape} does not match matrix rows {a.shape[0]}")
    return RealifiedSystem(a_tilde=realify_matrix(a), y_tilde=stack_complex(y))


def load_array_config(source) -> tuple[ArrayGeometry, CouplingSpec]:
    """Read geometry and coupling from a JSON document.

    Expected fields: ``m``, ``delta_d_wavelengths``, ``coupling.D``,
    ``coupling.rho[]``, ``coupling.phi[]``. ``source`` may be a path, an open
    file, or an already-parsed dict.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    try:
        geom = ArrayGeometry(m=int(doc["m"]), delta_d=float(doc["delta_d_wavelengths"]))
        cdoc = doc.get("coupling", {"D": 1, "rho": [], "phi": []})
        coupling = CouplingSpec(reach=int(cdoc["D"]),
                                rho=tuple(cdoc.get("rho", ())),
                                phi=tuple(cdoc.get("phi", ())))
    except KeyError as exc:
        raise ConfigurationError(f"array config missing field {exc}") from exc
    return geom, coupling
