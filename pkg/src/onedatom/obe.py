"""Optical-Bloch-equation solver: the analytic oracle for the collision engine.

Everything lives in the frame rotating at the drive frequency, where the
generator is time independent. The interaction-picture phases of the drive
are folded into a static detuning term, so the steady state is a null-space
problem and the emission spectrum a resolvent evaluation.

Vectorization is column-stacking: vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import densemath as dm
from .errors import ConditioningError, DegenerateSteadyStateError, StepSizeError
from .model import ModelParams, qubit_ops

_ID2 = np.eye(2, dtype=complex)


def _vec(x: np.ndarray) -> np.ndarray:
    return x.flatten(order="F")


def _unvec(v: np.ndarray, d: int = 2) -> np.ndarray:
    return v.reshape(d, d, order="F")


def bloch_of(rho: np.ndarray) -> tuple[float, float, float]:
    """Bloch components (x, y, z) of a 2x2 state."""
    x = 2.0 * rho[1, 0].real
    y = 2.0 * rho[1, 0].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return float(x), float(y), float(z)


def state_of_bloch(x: float, y: float, z: float) -> np.ndarray:
    c = 0.5 * (x + 1j * y)
    return np.array([[0.5 * (1 + z), np.conj(c)], [c, 0.5 * (1 - z)]], dtype=complex)


def rotating_frame_state(rho_ip: np.ndarray, t: float, p: ModelParams) -> np.ndarray:
    """Map an interaction-picture atom state to the drive rotating frame."""
    phase = np.exp(-0.5j * p.detuning * t)
    r = np.diag([phase, np.conj(phase)])
    return r @ rho_ip @ r.conj().T


def drive_hamiltonian(p: ModelParams) -> np.ndarray:
    """Static drive term in the rotating frame: (i Omega/2)(sigma+ - sigma-)."""
    sm, sp, _, _ = qubit_ops()
    return 0.5j * p.rabi * (sp - sm)


@dataclass
class Liouvillian:
    """4x4 generator acting on column-stacked 2x2 atom states."""

    mat: np.ndarray
    params: ModelParams
    frame: str = "rotating_at_drive"
    _eig: tuple | None = field(default=None, repr=False, compare=False)

    def eig(self):
        """Cached eigendecomposition (vals, right vectors, inverse)."""
        if self._eig is None:
            vals, vecs = np.linalg.eig(self.mat)
            self._eig = (vals, vecs, np.linalg.inv(vecs))
        return self._eig

    def propagator(self, t: float) -> np.ndarray:
        vals, vecs, inv = self.eig()
        return (vecs * np.exp(vals * t)) @ inv


def build_liouvillian(p: ModelParams) -> Liouvillian:
    """Rotating-frame OBE generator.

    Hamiltonian part: (detuning/2) sigma_z + the static drive. Dissipator:
    rate gamma*(nbar+1) on sigma- and gamma*nbar on sigma+.
    """
    sm, sp, sz, _ = qubit_ops()
    h = 0.5 * p.detuning * sz + drive_hamiltonian(p)
    mat = -1j * (np.kron(_ID2, h) - np.kron(h.T, _ID2))
    for rate, op in ((p.gamma * (p.nbar + 1.0), sm), (p.gamma * p.nbar, sp)):
        if rate == 0.0:
            continue
        k = op.conj().T @ op
        mat = mat + rate * (
            np.kron(op.conj(), op)
            - 0.5 * np.kron(_ID2, k)
            - 0.5 * np.kron(k.T, _ID2)
        )
    return Liouvillian(mat=mat, params=p)


@dataclass
class OBETrajectory:
    times: np.ndarray
    states: list[np.ndarray]

    @property
    def bloch(self) -> np.ndarray:
        return np.array([bloch_of(s) for s in self.states])


def integrate(liouv: Liouvillian, s0: np.ndarray, t_end: float, dt_ode: float) -> OBETrajectory:
    """Classical fixed-step RK4 on the vectorized state."""
    p = liouv.params
    dt_max = 0.05 / max(p.gamma_total, p.rabi, abs(p.detuning))
    if dt_ode > dt_max:
        raise StepSizeError(f"dt_ode = {dt_ode:.3g} exceeds stability bound {dt_max:.3g}")
    n_steps = max(1, int(round(t_end / dt_ode)))
    l_mat = liouv.mat
    v = _vec(np.asarray(s0, dtype=complex))
    times = np.empty(n_steps + 1)
    states = [np.asarray(s0, dtype=complex).copy()]
    times[0] = 0.0
    for k in range(n_steps):
        k1 = l_mat @ v
        k2 = l_mat @ (v + 0.5 * dt_ode * k1)
        k3 = l_mat @ (v + 0.5 * dt_ode * k2)
        k4 = l_mat @ (v + dt_ode * k3)
        v = v + (dt_ode / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        times[k + 1] = (k + 1) * dt_ode
        states.append(_unvec(v))
    return OBETrajectory(times=times, states=states)


def steady_state(liouv: Liouvillian) -> np.ndarray:
    """Normalized null vector of the generator; Hermitian and positive."""
    vals, vecs = np.linalg.eig(liouv.mat)
    order = np.argsort(np.abs(vals))
    if len(vals) > 1 and np.abs(vals[order[1]]) < 1e-10:
        raise DegenerateSteadyStateError(
            f"second eigenvalue magnitude {np.abs(vals[order[1]]):.3g} < 1e-10"
        )
    rho = _unvec(vecs[:, order[0]])
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise DegenerateSteadyStateError("null vector has vanishing trace")
    return dm.hermitize(rho / tr)


def resolvent(liouv: Liouvillian, z: complex) -> np.ndarray:
    """(z Id - L)^(-1) with the stationary mode deflated.

    The dropped zero mode is exactly the component the spectral formulas never
    probe: they propagate traceless fluctuation operators, which have no
    overlap with the stationary direction. Raises ConditioningError if z hits
    one of the retained eigenvalues.
    """
    vals, vecs, inv = liouv.eig()
    null_idx = int(np.argmin(np.abs(vals)))
    gaps = z - vals
    if np.min(np.abs(np.delete(gaps, null_idx))) < 1e-12:
        raise ConditioningError(f"resolvent evaluated too close to an eigenvalue at z={z}")
    coef = 1.0 / gaps
    coef[null_idx] = 0.0
    return (vecs * coef) @ inv


def apply_resolvent(liouv: Liouvillian, z: complex, mat2: np.ndarray) -> np.ndarray:
    """Resolvent action on a 2x2 operator (vectorize, solve, reshape)."""
    return _unvec(resolvent(liouv, z) @ _vec(mat2))
