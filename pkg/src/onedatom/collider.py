"""The collision engine.

One collision couples the atom to a fresh displaced-thermal unit through the
generator V = i sqrt(gamma dt) (b sigma+ - b† sigma-), applies the exact
unitary exp(-iV), and decomposes the update into the five pieces that separate
what effective Hamiltonians do from what atom-field correlations do:

  d1     first-order change  -i[V, rho]
  dchi1  its correlated remainder after removing both local drives
  d2S    second-order drive of the atom (field's mean acting twice)
  d2f    second-order drive of the field (atom's mean acting twice)
  d2chi  second-order correlated remainder
  dotimes = product pieces of d1 + d2S + d2f   (Hamiltonian processes)
  dchi    = dchi1 + d2chi                      (correlation processes)

dotimes + dchi equals the second-order expansion of the exact update by
construction; the gap to the exact unitary scales like (gamma dt)^(3/2).

Because every unit is resonant with the atom, V commutes with H_S + H_f and
each collision conserves that energy exactly; frame corrections for the drive
frequency are applied downstream in the energetics module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import densemath as dm
from .errors import NumericalDegradationError
from .model import (
    ModelParams,
    UnitState,
    displacement,
    fock_ops,
    poisson_tail,
    qubit_ops,
    thermal_state,
    unit_amplitude,
)

_EYE2 = np.eye(2, dtype=complex)


@dataclass
class JointState:
    """Atom (x) current-unit density matrix right after a collision."""

    rho: np.ndarray
    step: int
    time: float


@dataclass
class CollisionDeltas:
    d1: np.ndarray
    dchi1: np.ndarray
    d2S: np.ndarray
    d2f: np.ndarray
    d2chi: np.ndarray
    dotimes: np.ndarray
    dchi: np.ndarray
    dexact: np.ndarray


def build_Vn(p: ModelParams) -> np.ndarray:
    """Collision generator i sqrt(gamma dt) (b sigma+ - b† sigma-); Hermitian."""
    sm, sp, _, _ = qubit_ops()
    b, _ = fock_ops(p.fock_dim)
    g = 1j * np.sqrt(p.gamma * p.dt)
    return g * (np.kron(sp, b) - np.kron(sm, dm.dagger(b)))


def _kron_2xd(a2: np.ndarray, bdd: np.ndarray, out: np.ndarray) -> np.ndarray:
    """(2x2) kron (dxd) written blockwise; much cheaper than np.kron here."""
    d = bdd.shape[0]
    np.multiply(a2[0, 0], bdd, out=out[:d, :d])
    np.multiply(a2[0, 1], bdd, out=out[:d, d:])
    np.multiply(a2[1, 0], bdd, out=out[d:, :d])
    np.multiply(a2[1, 1], bdd, out=out[d:, d:])
    return out


class CollisionEngine:
    """Precomputed operators for repeated collisions at fixed parameters.

    A value type: all attributes are immutable after construction, so
    independent engines can run in parallel threads.
    """

    def __init__(self, p: ModelParams):
        self.p = p
        d = p.fock_dim
        self.sm, self.sp, self.sz, self.h_atom = qubit_ops(p.omega0)
        self.b, self.num = fock_ops(d)
        self.bd = dm.dagger(self.b)
        self.v = build_Vn(p)
        # V is Hermitian; eigh keeps the collision unitary exactly unitary.
        self.u = dm.expm_unitary(self.v, prefactor=-1j)
        self.ud = dm.dagger(self.u)
        self.h_unit = p.omega0 * self.num          # resonant unit energy
        self.h_atom_joint = np.kron(self.h_atom, np.eye(d))
        self.h_unit_joint = np.kron(_EYE2, self.h_unit)
        self.num_joint = np.kron(_EYE2, self.num)
        # both joint Hamiltonians are diagonal; energy traces reduce to dots
        self.ha_diag = np.ascontiguousarray(np.diag(self.h_atom_joint).real)
        self.hf_diag = np.ascontiguousarray(np.diag(self.h_unit_joint).real)
        self._eye_d = np.eye(d, dtype=complex)
        # Fresh units differ only by the detuning phase of their displacement;
        # build the zero-phase unit once and rotate it per step.
        base_alpha = abs(unit_amplitude(0, p))
        th = thermal_state(p.nbar, d)
        disp = displacement(base_alpha, d)
        self._unit0 = disp @ th.rho @ dm.dagger(disp)
        self._base_alpha = base_alpha
        self._leak = th.truncation_leak + poisson_tail(base_alpha ** 2, d)
        self._mode_phases = np.arange(d)

    def fresh_unit(self, n: int) -> UnitState:
        alpha = unit_amplitude(n, self.p)
        if self._base_alpha == 0.0 or alpha == self._base_alpha:
            return UnitState(rho=self._unit0, alpha=complex(alpha), truncation_leak=self._leak)
        phase = alpha / abs(alpha)
        # D(e^{i th} a) eta D† = R D(a) eta D† R† with R = exp(i th b†b) diagonal.
        rot = phase ** self._mode_phases
        rho = self._unit0 * np.outer(rot, rot.conj())
        return UnitState(rho=rho, alpha=complex(alpha), truncation_leak=self._leak)

    def collide(self, s: np.ndarray, unit: UnitState, step: int = 0,
                check: bool = True) -> tuple[JointState, CollisionDeltas]:
        """Exact collision plus the full correlation-splitting bookkeeping."""
        p = self.p
        if check:
            dm.check_density(s, "atom state")
            dm.check_density(unit.rho, "unit state")
        d = p.fock_dim
        n2 = 2 * d
        rho = _kron_2xd(s, unit.rho, np.empty((n2, n2), dtype=complex))
        post = self.u @ rho @ self.ud
        dexact = post - rho

        v = self.v
        c_full = v @ rho - rho @ v
        d1 = -1j * c_full

        g = 1j * np.sqrt(p.gamma * p.dt)
        # Partial expectations of V: an operator on the field weighted by the
        # atom means, and vice versa.
        sp_mean = s[1, 0]                     # <sigma+>
        sm_mean = np.conj(sp_mean)
        b_mean = dm.trace_product(self.b, unit.rho)
        v_field = g * (sp_mean * self.b - sm_mean * self.bd)
        v_atom = g * (b_mean * self.sp - np.conj(b_mean) * self.sm)

        a1 = -1j * (v_atom @ s - s @ v_atom)          # first-order atom drive
        f1 = -1j * (v_field @ unit.rho - unit.rho @ v_field)  # first-order field drive
        prod1 = _kron_2xd(a1, unit.rho, np.empty((n2, n2), dtype=complex))
        prod1 += _kron_2xd(s, f1, np.empty((n2, n2), dtype=complex))
        dchi1 = d1 - prod1

        v_atom_j = _kron_2xd(v_atom, self._eye_d, np.empty((n2, n2), dtype=complex))
        v_field_j = np.zeros((n2, n2), dtype=complex)
        v_field_j[:d, :d] = v_field
        v_field_j[d:, d:] = v_field
        c_s = v_atom_j @ rho - rho @ v_atom_j
        c_f = v_field_j @ rho - rho @ v_field_j
        d2S = -0.5 * (v @ c_s - c_s @ v)
        d2f = -0.5 * (v @ c_f - c_f @ v)
        # linearity: [V,[V - <V>_f - <V>_S, rho]] = [V, c_full - c_s - c_f]
        d2chi = -0.5 * (v @ c_full - c_full @ v) - d2S - d2f

        dotimes = prod1 + d2S + d2f
        dchi = dchi1 + d2chi
        deltas = CollisionDeltas(d1=d1, dchi1=dchi1, d2S=d2S, d2f=d2f,
                                 d2chi=d2chi, dotimes=dotimes, dchi=dchi,
                                 dexact=dexact)
        joint = JointState(rho=post, step=step, time=(step + 1) * p.dt)
        return joint, deltas


def collide_exact(s: np.ndarray, unit: UnitState, p: ModelParams) -> tuple[JointState, CollisionDeltas]:
    """One-shot collision (builds a throwaway engine)."""
    return CollisionEngine(p).collide(s, unit)


def step_reduced(s: np.ndarray, unit: UnitState, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Reduced post-collision states: (atom 2x2, output unit d x d)."""
    joint, _ = collide_exact(s, unit, p)
    d = p.fock_dim
    atom = dm.partial_trace(joint.rho, (2, d), "A")
    unit_out = dm.partial_trace(joint.rho, (2, d), "B")
    return atom, unit_out


@dataclass
class StepContext:
    """What observers see after each collision."""

    n: int
    t_next: float
    s_prev: np.ndarray
    s_next: np.ndarray
    unit_in: UnitState
    unit_out: np.ndarray
    deltas: CollisionDeltas
    engine: CollisionEngine


@dataclass
class TrajectoryRecord:
    """Per-step atom states of one run plus whatever observers recorded."""

    times: np.ndarray
    states: list[np.ndarray]
    params: ModelParams
    observers: tuple

    @property
    def bloch(self) -> np.ndarray:
        from .obe import bloch_of
        return np.array([bloch_of(s) for s in self.states])

    def columns(self) -> dict[str, np.ndarray]:
        """Time column, Bloch components, then every observer column."""
        bloch = self.bloch
        cols: dict[str, np.ndarray] = {
            "t": self.times,
            "sx": bloch[:, 0],
            "sy": bloch[:, 1],
            "sz": bloch[:, 2],
        }
        for obs in self.observers:
            for name, values in obs.columns().items():
                cols[name] = values
        return cols


def run_trajectory(p: ModelParams, s0: np.ndarray, n_steps: int,
                   observers: tuple = (), check_every: int = 500) -> TrajectoryRecord:
    """Drive the per-collision loop, streaming each step to the observers.

    Each collision consumes a newly built displaced-thermal unit; output units
    are handed to observers and then dropped, so memory stays O(fock_dim^2).
    """
    engine = CollisionEngine(p)
    d = p.fock_dim
    dm.check_density(s0, "initial atom state")
    s = np.asarray(s0, dtype=complex).copy()
    times = np.empty(n_steps + 1)
    times[0] = 0.0
    states = [s.copy()]
    for obs in observers:
        begin = getattr(obs, "begin", None)
        if begin is not None:
            begin(p, s)
    for n in range(n_steps):
        unit = engine.fresh_unit(n)
        joint, deltas = engine.collide(s, unit, step=n, check=False)
        s_next = dm.partial_trace(joint.rho, (2, d), "A")
        unit_out = dm.partial_trace(joint.rho, (2, d), "B")
        # Cheap invariants every step, full eigenvalue check periodically.
        tr_dev = abs(np.trace(s_next) - 1.0)
        if tr_dev > 1e-8:
            raise NumericalDegradationError(f"trace drifted by {tr_dev:.3g} at step {n}")
        if (n + 1) % check_every == 0:
            dm.check_density(s_next, f"atom state at step {n + 1}")
        ctx = StepContext(n=n, t_next=(n + 1) * p.dt, s_prev=s, s_next=s_next,
                          unit_in=unit, unit_out=unit_out, deltas=deltas,
                          engine=engine)
        for obs in observers:
            obs.on_step(ctx)
        s = s_next
        times[n + 1] = (n + 1) * p.dt
        states.append(s.copy())
    return TrajectoryRecord(times=times, states=states, params=p, observers=tuple(observers))
