"""Entropic accounting: Clausius-form productions and their exact oracles.

Two irreversibility measures are tracked along trajectories:

  Sigma  = dS_S - beta * Q          (standard bath bookkeeping)
  bSigma = dS_S + beta * bQ_f       (field-side bipartite bookkeeping)

Both heats are integrated from the closed-form flows on the sampled states so
the difference Sigma - bSigma reduces to the integrated self-work exactly, as
it must at resonance. At nbar = 0 the inverse temperature diverges and Sigma
is reported as +inf unless the heat vanishes.

The small-instance oracle rebuilds everything from an exact two-collision
joint state in the displaced frame (thermal units plus an explicit drive
term) and compares relative entropies against the Clausius forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import densemath as dm
from .collider import TrajectoryRecord, build_Vn
from .energetics import flows_from_bloch
from .errors import MemoryGuardError
from .model import ModelParams, displacement, fock_ops, qubit_ops, thermal_state
from .obe import drive_hamiltonian

_EIG_FLOOR = 1e-300


def von_neumann(rho: np.ndarray) -> float:
    """-Tr{rho ln rho} in nats, with 0 ln 0 = 0."""
    vals = np.linalg.eigvalsh(dm.hermitize(rho))
    vals = np.clip(vals.real, 0.0, None)
    nz = vals[vals > 0]
    return float(-np.sum(nz * np.log(nz)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """D(rho || sigma) = Tr{rho (ln rho - ln sigma)} >= 0."""
    w_r, v_r = np.linalg.eigh(dm.hermitize(rho))
    w_s, v_s = np.linalg.eigh(dm.hermitize(sigma))
    w_r = np.clip(w_r.real, 0.0, None)
    nz = w_r > 0
    term_r = float(np.sum(w_r[nz] * np.log(w_r[nz])))
    # Tr{rho ln sigma} in sigma's eigenbasis.
    diag = np.einsum("ij,jk,ki->i", v_s.conj().T, rho, v_s).real
    term_s = float(np.sum(diag * np.log(np.clip(w_s.real, _EIG_FLOOR, None))))
    return term_r - term_s


def _cumtrapz(flow: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros_like(flow)
    out[1:] = np.cumsum(0.5 * np.diff(times) * (flow[1:] + flow[:-1]))
    return out


def _flow_series(traj: TrajectoryRecord, p: ModelParams, name: str) -> np.ndarray:
    return np.array(
        [getattr(flows_from_bloch(s, t, p), name)
         for s, t in zip(traj.states, traj.times)]
    )


def entropy_series(traj: TrajectoryRecord, p: ModelParams) -> np.ndarray:
    return np.array([von_neumann(s) for s in traj.states])


def sigma_standard(traj: TrajectoryRecord, p: ModelParams, q_tol: float = 1e-12) -> np.ndarray:
    """Sigma(t) = dS_S(t) - beta Q(t) along the trajectory."""
    ds = entropy_series(traj, p)
    ds -= ds[0]
    q = _cumtrapz(_flow_series(traj, p, "Q"), traj.times)
    beta = p.beta
    if math.isinf(beta):
        out = np.where(np.abs(q) <= q_tol * max(1.0, p.omega0), ds, np.inf)
        return out
    return ds - beta * q


def sigma_bipartite(traj: TrajectoryRecord, p: ModelParams) -> np.ndarray:
    """bSigma(t) = dS_S(t) + beta * bQ_f(t) along the trajectory."""
    ds = entropy_series(traj, p)
    ds -= ds[0]
    bq_f = _cumtrapz(_flow_series(traj, p, "bQ_f"), traj.times)
    beta = p.beta
    if math.isinf(beta):
        return np.where(np.abs(bq_f) <= 1e-12 * max(1.0, p.omega0), ds, np.inf)
    return ds + beta * bq_f


def selfwork_integral(traj: TrajectoryRecord, p: ModelParams) -> np.ndarray:
    return _cumtrapz(_flow_series(traj, p, "W_self"), traj.times)


@dataclass
class EntropyReport:
    dS_S: float
    Sigma: float
    bSigma: float
    beta: float
    displacement_record: np.ndarray


def report(traj: TrajectoryRecord, p: ModelParams) -> EntropyReport:
    ds = entropy_series(traj, p)
    return EntropyReport(
        dS_S=float(ds[-1] - ds[0]),
        Sigma=float(sigma_standard(traj, p)[-1]),
        bSigma=float(sigma_bipartite(traj, p)[-1]),
        beta=p.beta,
        displacement_record=displacement_record(traj, p),
    )


def displacement_record(traj: TrajectoryRecord, p: ModelParams) -> np.ndarray:
    """Per-collision field displacements phi_n = -sqrt(gamma dt) <sigma->."""
    root = math.sqrt(p.gamma * p.dt)
    return np.array([-root * s[0, 1] for s in traj.states[:-1]])


# --- small-instance oracle --------------------------------------------------

SMALL_INSTANCE_MAX_DIM = 5


@dataclass
class SmallInstanceResult:
    Sigma_re: float
    bSigma_re: float
    Sigma_clausius: float
    bSigma_clausius: float
    mutual_information: float
    dS_S: float


def _displaced_frame_unitary(p: ModelParams, d: int) -> np.ndarray:
    """Collision unitary in the displaced frame: thermal input, explicit drive."""
    v = build_Vn(p.with_(fock_dim=d))
    drive = np.kron(drive_hamiltonian(p), np.eye(d))
    return dm.expm_unitary(v + p.dt * drive, prefactor=-1j)


def _split_increments(joint: np.ndarray, v: np.ndarray, v_atom: np.ndarray,
                      v_field: np.ndarray, dims: tuple[int, ...], target: int):
    """Hamiltonian/correlation field-energy increments of one embedded collision.

    ``joint`` is the full pre-collision state, ``v`` the embedded generator,
    ``v_atom``/``v_field`` its embedded partial means; the returned pair is
    (Tr{H_f d_otimes}, Tr{H_f d_chi}) with H_f the energy of unit ``target``.
    """
    da = dims[0]
    d = dims[1]
    _, num = fock_ops(d)
    ops = [np.eye(n, dtype=complex) for n in dims]
    ops[target] = num
    h_f = ops[0]
    for o in ops[1:]:
        h_f = np.kron(h_f, o)
    h_f = h_f * 1.0  # unit frequency folded below

    c_full = v @ joint - joint @ v
    c_s = v_atom @ joint - joint @ v_atom
    c_f = v_field @ joint - joint @ v_field
    d1 = -1j * c_full
    d2S = -0.5 * (v @ c_s - c_s @ v)
    d2f = -0.5 * (v @ c_f - c_f @ v)
    d2chi = -0.5 * (v @ (c_full - c_s - c_f) - (c_full - c_s - c_f) @ v)
    dchi1 = d1 - (-1j) * (c_s + c_f)
    d_otimes = (-1j) * (c_s + c_f) + d2S + d2f
    d_chi = dchi1 + d2chi
    return (dm.trace_product(h_f, d_otimes).real,
            dm.trace_product(h_f, d_chi).real)


def small_instance_relative_entropy(p: ModelParams, d_small: int = 4,
                                    n_collisions: int = 2,
                                    s0: np.ndarray | None = None) -> SmallInstanceResult:
    """Exact joint-state check of both entropy productions after two collisions.

    Works in the displaced frame (thermal units, explicit resonant drive) so
    the reference states of both Clausius forms are literally thermal or
    displaced-thermal unit states. Joint dimension is 2 * d_small^n.
    """
    if d_small > SMALL_INSTANCE_MAX_DIM:
        raise MemoryGuardError(f"small instance limited to d <= {SMALL_INSTANCE_MAX_DIM}")
    if n_collisions > 2:
        raise MemoryGuardError("small instance limited to two collisions")
    if p.detuning != 0.0:
        raise ValueError("small-instance oracle assumes a resonant drive")
    d = d_small
    sm, sp, _, _ = qubit_ops()
    if s0 is None:
        s0 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    eta = thermal_state(p.nbar, d).rho
    beta = p.beta

    if n_collisions == 0:
        return SmallInstanceResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    dims = (2,) + (d,) * n_collisions
    joint = s0
    for _ in range(n_collisions):
        joint = np.kron(joint, eta)
    n_tot = joint.shape[0]

    u_pair = _displaced_frame_unitary(p, d)
    b, num = fock_ops(d)
    g = 1j * math.sqrt(p.gamma * p.dt)
    h_drive = drive_hamiltonian(p)

    s_entropy0 = von_neumann(s0)
    phis = []
    bq_f = 0.0
    bw_f = 0.0
    q_osa = 0.0
    prev_atom = s0
    for k in range(n_collisions):
        # embed the collision unitary on (atom, unit_k)
        if k == 0:
            u_full = u_pair if n_collisions == 1 else np.kron(u_pair, np.eye(d))
        else:
            # atom x u0 x u1 with the collision on (atom, u1): permute u1 next to atom
            u4 = u_pair.reshape(2, d, 2, d)
            u_full = np.einsum("aBcD,bd->abBcdD", u4, np.eye(d)).reshape(n_tot, n_tot)
        atom = _reduce_to_atom(joint, dims)
        unit_k = _reduce_to_factor(joint, dims, k + 1)
        sp_mean = atom[1, 0]
        b_mean = dm.trace_product(b, unit_k)
        v_atom_2 = g * (b_mean * sp - np.conj(b_mean) * sm) + p.dt * h_drive
        v_field_d = g * (sp_mean * b - np.conj(sp_mean) * dm.dagger(b))
        v_emb = _embed(build_Vn(p.with_(fock_dim=d)) + p.dt * np.kron(h_drive, np.eye(d)),
                       dims, k)
        va_emb = _embed_single(v_atom_2, dims, 0)
        vf_emb = _embed_single(v_field_d, dims, k + 1)
        dbw, dbq = _split_increments(joint, v_emb, va_emb, vf_emb, dims, k + 1)
        bw_f += p.omega0 * dbw
        bq_f += p.omega0 * dbq
        phis.append(-math.sqrt(p.gamma * p.dt) * atom[0, 1])
        joint = u_full @ joint @ u_full.conj().T
        atom_next = _reduce_to_atom(joint, dims)
        f_prev = flows_from_bloch(prev_atom, 0.0, p)
        f_next = flows_from_bloch(atom_next, 0.0, p)
        q_osa += 0.5 * p.dt * (f_prev.Q + f_next.Q)
        prev_atom = atom_next

    atom_final = _reduce_to_atom(joint, dims)
    ds_s = von_neumann(atom_final) - s_entropy0

    ref_units_thermal = [eta] * n_collisions
    ref_units_disp = []
    for phi in phis:
        disp = displacement(phi, d)
        ref_units_disp.append(disp @ eta @ dm.dagger(disp))

    def _product_ref(units):
        ref = atom_final
        for u in units:
            ref = np.kron(ref, u)
        return ref

    sigma_re = relative_entropy(joint, _product_ref(ref_units_thermal))
    bsigma_re = relative_entropy(joint, _product_ref(ref_units_disp))

    sigma_clausius = ds_s - (0.0 if math.isinf(beta) else beta * q_osa)
    if math.isinf(beta) and abs(q_osa) > 1e-12 * p.omega0:
        sigma_clausius = math.inf
    bsigma_clausius = ds_s + (0.0 if math.isinf(beta) else beta * bq_f)
    if math.isinf(beta) and abs(bq_f) > 1e-12 * p.omega0:
        bsigma_clausius = math.inf

    field_final = _reduce_out_atom(joint, dims)
    mi = von_neumann(atom_final) + von_neumann(field_final) - von_neumann(joint)
    return SmallInstanceResult(
        Sigma_re=sigma_re,
        bSigma_re=bsigma_re,
        Sigma_clausius=float(sigma_clausius),
        bSigma_clausius=float(bsigma_clausius),
        mutual_information=mi,
        dS_S=ds_s,
    )


def _reduce_to_atom(joint: np.ndarray, dims) -> np.ndarray:
    rest = int(np.prod(dims[1:]))
    return dm.partial_trace(joint, (2, rest), "A")


def _reduce_out_atom(joint: np.ndarray, dims) -> np.ndarray:
    rest = int(np.prod(dims[1:]))
    return dm.partial_trace(joint, (2, rest), "B")


def _reduce_to_factor(joint: np.ndarray, dims, idx: int) -> np.ndarray:
    n = len(dims)
    t = joint.reshape(*dims, *dims)
    keep = idx
    in_idx = list(range(n))
    out_idx = list(range(n, 2 * n))
    for k in range(n):
        if k != keep:
            out_idx[k] = in_idx[k]
    import string
    letters = string.ascii_letters
    sub_in = "".join(letters[i] for i in in_idx)
    sub_out = "".join(letters[i] for i in out_idx)
    return np.einsum(f"{sub_in}{sub_out}->{letters[keep]}{letters[keep + n]}", t)


def _embed(op_pair: np.ndarray, dims, unit_idx: int) -> np.ndarray:
    """Embed an (atom x unit) operator into the full chain, unit = dims[1+unit_idx]."""
    d = dims[1]
    n_units = len(dims) - 1
    if n_units == 1:
        return op_pair
    if unit_idx == 0:
        return np.kron(op_pair, np.eye(d))
    u4 = op_pair.reshape(2, d, 2, d)
    n_tot = int(np.prod(dims))
    return np.einsum("aBcD,bd->abBcdD", u4, np.eye(d)).reshape(n_tot, n_tot)


def _embed_single(op: np.ndarray, dims, pos: int) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for k, dk in enumerate(dims):
        out = np.kron(out, op if k == pos else np.eye(dk, dtype=complex))
    return out


# --- resonant self-work sign probe ------------------------------------------


@dataclass
class SignProbeReport:
    epsilon: float
    max_selfwork: float
    bound: float
    positive_fraction: float
    n_points: int
    passed: bool


def selfwork_lab_rate(x: np.ndarray, y: np.ndarray, z: np.ndarray,
                      p: ModelParams) -> np.ndarray:
    """Resonant lab-frame self-work flow on Bloch coordinates.

    -(gamma omega0 / 4) [ (x^2+y^2) + (Omega/omega0) y z ], absolute units.
    """
    eps = p.rabi / p.omega0
    return -(p.gamma * p.omega0 / 4.0) * ((x ** 2 + y ** 2) + eps * y * z)


def selfwork_sign_probe(p: ModelParams, n_axis: int = 25) -> SignProbeReport:
    """Sweep the Bloch ball on a lattice and bound the positive region.

    The admissible maximum is (gamma hbar omega0 / 8)(sqrt(1+eps^2) - 1) with
    eps = Omega/omega0; the probe reports the observed maximum and the volume
    fraction where the flow is positive.
    """
    axis = np.linspace(-1.0, 1.0, n_axis)
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    inside = x ** 2 + y ** 2 + z ** 2 <= 1.0
    w = selfwork_lab_rate(x[inside], y[inside], z[inside], p)
    eps = p.rabi / p.omega0
    bound = (p.gamma * p.omega0 / 8.0) * (math.sqrt(1.0 + eps ** 2) - 1.0) + 1e-12
    max_w = float(w.max())
    return SignProbeReport(
        epsilon=eps,
        max_selfwork=max_w,
        bound=bound,
        positive_fraction=float(np.mean(w > 0)),
        n_points=int(w.size),
        passed=max_w <= bound,
    )
