"""Physical parameters, operator builders and collision-unit states.

Conventions (asserted once in the test suite):
  * hbar = 1; energies are reported in units of hbar*omega0, rates in gamma.
  * Qubit basis ordering |e> = index 0, |g> = index 1.
  * The atom factor always comes first in tensor products.
  * Dynamics run in the interaction picture; the detuning enters only through
    the slow phase of the unit amplitudes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace

import numpy as np

from . import densemath as dm
from .errors import AmplitudeTooLargeError, ConfigError

# Unit-state acceptance threshold for the combined thermal+coherent
# truncation leak.
LEAK_TOL = 1e-6

_PARAM_FIELDS = ("gamma", "rabi", "omega0", "omegaL", "nbar", "dt", "fock_dim", "hbar")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of one scenario.

    gamma    : spontaneous-emission rate [1/time]
    rabi     : classical Rabi frequency Omega [1/time]
    omega0   : atomic transition frequency [1/time]
    omegaL   : drive frequency [1/time]
    nbar     : mean thermal photon number of the input units [dimensionless]
    dt       : coarse-graining step [time]
    fock_dim : Fock truncation of each collision unit
    hbar     : fixed to 1 by convention
    """

    gamma: float = 1.0
    rabi: float = 0.0
    omega0: float = 1.0e4
    omegaL: float = 1.0e4
    nbar: float = 0.0
    dt: float = 1.0e-3
    fock_dim: int = 12
    hbar: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError("gamma must be > 0")
        if self.fock_dim < 2:
            raise ConfigError("fock_dim must be >= 2")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.nbar < 0:
            raise ConfigError("nbar must be >= 0")
        if self.hbar != 1.0:
            raise ConfigError("hbar is fixed to 1 by convention")

    @property
    def detuning(self) -> float:
        """omega0 - omegaL."""
        return self.omega0 - self.omegaL

    @property
    def gamma_total(self) -> float:
        """Thermally enhanced decay rate gamma*(2*nbar + 1)."""
        return self.gamma * (2.0 * self.nbar + 1.0)

    @property
    def beta(self) -> float:
        """Inverse temperature of the input units; +inf at nbar = 0."""
        if self.nbar == 0.0:
            return math.inf
        return math.log(1.0 + 1.0 / self.nbar) / self.omega0

    def regime_warnings(self) -> list[str]:
        """Weak-coupling / quasi-resonance flags. Recorded, never raised."""
        warnings = []
        if self.gamma * self.dt > 0.05:
            warnings.append(f"coarse graining too coarse: gamma*dt = {self.gamma * self.dt:.3g} > 0.05")
        if self.rabi > 0.1 * self.omega0:
            warnings.append(f"drive too strong for the weak-coupling regime: rabi/omega0 = {self.rabi / self.omega0:.3g} > 0.1")
        if abs(self.detuning) > 0.1 * self.omega0:
            warnings.append(f"drive too detuned: |detuning|/omega0 = {abs(self.detuning) / self.omega0:.3g} > 0.1")
        return warnings

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        unknown = set(d) - set(_PARAM_FIELDS)
        if unknown:
            raise ConfigError(f"unknown ModelParams keys: {sorted(unknown)}")
        missing = set(_PARAM_FIELDS) - {"hbar"} - set(d)
        if missing:
            raise ConfigError(f"missing ModelParams keys: {sorted(missing)}")
        d = dict(d)
        d["fock_dim"] = int(d["fock_dim"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass
class UnitState:
    """One collision unit: displaced thermal mode plus bookkeeping."""

    rho: np.ndarray
    alpha: complex
    truncation_leak: float


def qubit_ops(omega0: float = 1.0):
    """Atom operators (sigma_minus, sigma_plus, sigma_z, H_S) with |e> first."""
    sm = np.array([[0, 0], [1, 0]], dtype=complex)   # |g><e|
    sp = np.array([[0, 1], [0, 0]], dtype=complex)   # |e><g|
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    h_s = 0.5 * omega0 * sz
    return sm, sp, sz, h_s


def fock_ops(d: int):
    """Truncated ladder operators (annihilation b, number b†b)."""
    if d < 2:
        raise ConfigError("fock_dim must be >= 2")
    b = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    return b, dm.dagger(b) @ b


def thermal_weights(nbar: float, d: int) -> tuple[np.ndarray, float]:
    """Truncated Boltzmann weights and the trace deficit before renormalizing."""
    if nbar == 0.0:
        w = np.zeros(d)
        w[0] = 1.0
        return w, 0.0
    q = nbar / (nbar + 1.0)
    w = (1.0 - q) * q ** np.arange(d)
    leak = q ** d          # geometric tail mass
    return w / w.sum(), leak


def thermal_state(nbar: float, d: int) -> UnitState:
    """Thermal mode with mean occupation nbar, renormalized after truncation."""
    if nbar < 0:
        raise ConfigError("nbar must be >= 0")
    w, leak = thermal_weights(nbar, d)
    return UnitState(rho=np.diag(w).astype(complex), alpha=0.0 + 0.0j, truncation_leak=leak)


def displacement(alpha: complex, d: int) -> np.ndarray:
    """Displacement unitary exp(alpha b† - alpha* b) on the truncated mode."""
    if abs(alpha) ** 2 > d / 9.0:
        raise AmplitudeTooLargeError(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds fock_dim/9 = {d / 9.0:.3g}"
        )
    b, _ = fock_ops(d)
    gen = alpha * dm.dagger(b) - np.conj(alpha) * b
    # gen is anti-Hermitian: exponentiate i*(-i*gen) through eigh, exactly unitary.
    return dm.expm_unitary(1j * gen, prefactor=-1j)


def unit_amplitude(n: int, p: ModelParams) -> complex:
    """Coherent amplitude of the n-th input unit.

    alpha_n = (Omega/2) sqrt(dt/gamma) exp(-i (omegaL - omega0) t_n); the
    slow phase carries the drive detuning into the interaction picture.
    """
    t_n = n * p.dt
    return (0.5 * p.rabi) * math.sqrt(p.dt / p.gamma) * np.exp(-1j * (p.omegaL - p.omega0) * t_n)


def poisson_tail(lam: float, d: int) -> float:
    """P(N >= d) for N ~ Poisson(lam); coherent-part truncation estimate."""
    if lam == 0.0:
        return 0.0
    term = math.exp(-lam)
    acc = term
    for k in range(1, d):
        term *= lam / k
        acc += term
    return max(0.0, 1.0 - acc)


def fresh_unit(n: int, p: ModelParams) -> UnitState:
    """Displaced thermal input unit for the n-th collision."""
    alpha = unit_amplitude(n, p)
    th = thermal_state(p.nbar, p.fock_dim)
    disp = displacement(alpha, p.fock_dim)
    rho = disp @ th.rho @ dm.dagger(disp)
    leak = th.truncation_leak + poisson_tail(abs(alpha) ** 2, p.fock_dim)
    return UnitState(rho=rho, alpha=complex(alpha), truncation_leak=leak)


def choose_fock_dim(nbar: float, alpha_abs: float, leak_tol: float = LEAK_TOL,
                    d0: int = 12, dmax: int = 96) -> int:
    """Smallest truncation (at least d0) with combined leak below leak_tol."""
    d = d0
    while d <= dmax:
        _, thermal_leak = thermal_weights(nbar, d)
        if thermal_leak + poisson_tail(alpha_abs ** 2, d) < leak_tol:
            return d
        d += 1
    raise ConfigError(
        f"no truncation <= {dmax} reaches leak < {leak_tol} for nbar={nbar}, |alpha|={alpha_abs}"
    )
