"""Beam-splitter channel action on diagonal quadrature spectra.

Every covariance matrix is represented by the eigenvalues of its q and p
blocks (the commuting-diagonal family); symplectic eigenvalues are then
just sqrt(q*p) per mode.  The vacuum eigenvalue is 1/2 (hbar = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .entropy import g_entropy


@dataclass(frozen=True)
class ChannelParams:
    """Transmissivity, mean input photons per mode and mode count."""

    eta: float
    n_photons: float
    n_modes: int = 1

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"transmissivity must lie in [0,1], got {self.eta}")
        if self.n_photons < 0.0:
            raise ValueError(f"photon budget must be >= 0, got {self.n_photons}")
        if self.n_modes < 1:
            raise ValueError(f"need at least one mode, got {self.n_modes}")


@dataclass(frozen=True)
class QuadratureSpectrum:
    """Per-mode eigenvalues of the diagonal q and p covariance blocks."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.atleast_1d(np.asarray(self.q, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        if self.q.shape != self.p.shape:
            raise ValueError("q and p spectra must have equal length")

    def __len__(self) -> int:
        return self.q.size

    def by_side(self, side: str) -> np.ndarray:
        if side not in ("q", "p"):
            raise ValueError(f"quadrature must be 'q' or 'p', got {side!r}")
        return self.q if side == "q" else self.p

    def trace(self) -> float:
        """Sum of all 2n eigenvalues."""
        return float(self.q.sum() + self.p.sum())

    def validate_state(self, heisenberg: bool = False) -> None:
        """Check positivity (and optionally the uncertainty bound q*p >= 1/4)."""
        if np.any(self.q <= 0.0) or np.any(self.p <= 0.0):
            raise ValueError("state spectrum has non-positive entries")
        if heisenberg and np.any(self.q * self.p < 0.25 - 1e-12):
            raise ValueError("input spectrum violates q*p >= 1/4")

    def validate_classical(self) -> None:
        if np.any(self.q < 0.0) or np.any(self.p < 0.0):
            raise ValueError("classical spectrum has negative entries")


class EnvModel(Enum):
    MEMORYLESS = "memoryless"
    NEAREST_NEIGHBOR = "nearest-neighbor"


@dataclass(frozen=True)
class EnvironmentSpectrum:
    """Environment covariance spectrum plus the model that generated it."""

    spectrum: QuadratureSpectrum
    model: EnvModel
    n_thermal: float
    squeezing: float

    def __len__(self) -> int:
        return len(self.spectrum)


def memoryless_environment(n_thermal: float, s: float, n_modes: int = 1) -> EnvironmentSpectrum:
    """Squeezed-thermal environment, identical on every mode.

    e_q = (N_env + 1/2) e^{s}, e_p = (N_env + 1/2) e^{-s}.
    """
    if n_thermal < 0.0:
        raise ValueError("thermal photon number must be >= 0")
    base = n_thermal + 0.5
    q = np.full(n_modes, base * math.exp(s))
    p = np.full(n_modes, base * math.exp(-s))
    return EnvironmentSpectrum(QuadratureSpectrum(q, p), EnvModel.MEMORYLESS, n_thermal, s)


def nearest_neighbor_environment(n_thermal: float, s: float, n_modes: int) -> EnvironmentSpectrum:
    """Nearest-neighbor correlated environment on an open chain of n modes.

    The coupling matrix has eigenvalues 2 cos(k pi/(n+1)), k = 1..n, so
    e_q[k] = (N_env + 1/2) e^{+2 s cos(k pi/(n+1))} and e_p[k] its mirror.
    """
    if n_thermal < 0.0:
        raise ValueError("thermal photon number must be >= 0")
    base = n_thermal + 0.5
    k = np.arange(1, n_modes + 1)
    lam = 2.0 * np.cos(k * math.pi / (n_modes + 1))
    q = base * np.exp(s * lam)
    p = base * np.exp(-s * lam)
    return EnvironmentSpectrum(QuadratureSpectrum(q, p), EnvModel.NEAREST_NEIGHBOR, n_thermal, s)


def output_spectrum(inp: QuadratureSpectrum, env: EnvironmentSpectrum,
                    eta: float) -> QuadratureSpectrum:
    """Channel output: o = eta*i + (1-eta)*e, componentwise."""
    e = env.spectrum
    if len(inp) != len(e):
        raise ValueError("input and environment mode counts differ")
    return QuadratureSpectrum(eta * inp.q + (1.0 - eta) * e.q,
                              eta * inp.p + (1.0 - eta) * e.p)


def averaged_output_spectrum(inp: QuadratureSpectrum, classical: QuadratureSpectrum,
                             env: EnvironmentSpectrum, eta: float) -> QuadratureSpectrum:
    """Ensemble-averaged output: a = eta*(i + c) + (1-eta)*e."""
    classical.validate_classical()
    e = env.spectrum
    if not (len(inp) == len(classical) == len(e)):
        raise ValueError("spectrum mode counts differ")
    return QuadratureSpectrum(eta * (inp.q + classical.q) + (1.0 - eta) * e.q,
                              eta * (inp.p + classical.p) + (1.0 - eta) * e.p)


def symplectic_spectrum(spec: QuadratureSpectrum) -> np.ndarray:
    """Symplectic eigenvalues sqrt(q*p) of a diagonal-family spectrum."""
    if np.any(spec.q <= 0.0) or np.any(spec.p <= 0.0):
        raise ValueError("symplectic spectrum requires positive entries")
    return np.sqrt(spec.q * spec.p)


def holevo_chi(inp: QuadratureSpectrum, classical: QuadratureSpectrum,
               env: EnvironmentSpectrum, eta: float) -> float:
    """Total Holevo information (bits) of the Gaussian modulation ensemble.

    chi = sum_k [g(nubar_k) - g(nu_k)] over the averaged and bare outputs.
    """
    nus = symplectic_spectrum(output_spectrum(inp, env, eta))
    nubars = symplectic_spectrum(averaged_output_spectrum(inp, classical, env, eta))
    return float(sum(g_entropy(nb) - g_entropy(nv) for nb, nv in zip(nubars, nus)))


def mean_env_photons(env: EnvironmentSpectrum) -> float:
    """Mean photon number per environment mode (thermal plus squeezing part)."""
    n = len(env)
    return env.spectrum.trace() / (2.0 * n) - 0.5


def energy_check(inp: QuadratureSpectrum, classical: QuadratureSpectrum,
                 n_photons: float, tol: float = 1e-9) -> bool:
    """True iff the input-plus-modulation spectrum meets the photon budget."""
    n = len(inp)
    mean = (inp.trace() + classical.trace()) / (2.0 * n)
    return abs(mean - (n_photons + 0.5)) <= tol
