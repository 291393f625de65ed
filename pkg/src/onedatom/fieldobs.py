"""Field observables: input/output means, photon flows, emission spectra.

The input drive enters as a coherent amplitude <b_in> = (Omega/2 sqrt(gamma))
times the detuning phase; thermal photons add a flat floor nbar/dt to the
photon flux (finite only because the coarse-graining step regularizes the
white-noise bandwidth). All identities used downstream involve differences,
where the floor cancels.

The incoherent (fluctuation) spectrum is evaluated by quantum regression:
one-sided Fourier transforms of the dipole-fluctuation correlations, computed
with the deflated resolvent of the rotating-frame generator, then symmetrized
to the physical two-sided spectrum, sdot(nu) = (1/pi) Re F(nu).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import densemath as dm
from .collider import CollisionEngine, StepContext
from .errors import ConfigError, MemoryGuardError
from .model import ModelParams, fock_ops, qubit_ops, thermal_state
from .obe import Liouvillian, build_liouvillian, steady_state, _vec, _unvec
from .energetics import rotating_bloch

TWO_UNIT_MAX_DIM = 6


def mean_in_out(s: np.ndarray, p: ModelParams, t: float) -> tuple[complex, complex]:
    """Mean input and output field amplitudes at time t.

    <b_out> = <b_in> - sqrt(gamma) <sigma->, interaction picture.
    """
    b_in = (0.5 * p.rabi / np.sqrt(p.gamma)) * np.exp(1j * p.detuning * t)
    sm_mean = s[0, 1]
    b_out = b_in - np.sqrt(p.gamma) * sm_mean
    return complex(b_in), complex(b_out)


@dataclass
class PhotonFlows:
    """Photon-number flows [1/time] and their four-way split."""

    n_in: float
    n_out: float
    n_stim: float
    n_spont: float
    n_otimes: float
    n_chi: float


def photon_flows(s: np.ndarray, p: ModelParams, t: float) -> PhotonFlows:
    """All six photon flows from the atom averages at time t."""
    b_in, b_out = mean_in_out(s, p, t)
    sm_mean = s[0, 1]
    sp_mean = np.conj(sm_mean)
    z = (s[0, 0] - s[1, 1]).real
    coh2 = abs(sm_mean) ** 2
    n_stim = float((-np.sqrt(p.gamma) * (sp_mean * b_in + sm_mean * np.conj(b_in))).real)
    n_spont = p.gamma * ((p.nbar + 0.5) * z + 0.5)
    n_otimes = abs(b_out) ** 2 - abs(b_in) ** 2
    n_chi = n_spont - p.gamma * coh2
    n_in = abs(b_in) ** 2 + p.nbar / p.dt
    return PhotonFlows(
        n_in=n_in,
        n_out=n_in + n_stim + n_spont,
        n_stim=n_stim,
        n_spont=n_spont,
        n_otimes=n_otimes,
        n_chi=n_chi,
    )


def energy_flow_identities(flows: PhotonFlows, p: ModelParams):
    """Energy flows implied by the photon flows.

    The atom side is weighted by omega0 (where the photons are emitted or
    absorbed), the field side by omegaL (where they end up stored). Returns
    (Udot_S, Udot_f, bWdot_S, bWdot_f, bQdot_S, bQdot_f).
    """
    d_n = flows.n_out - flows.n_in
    return (
        -p.omega0 * d_n,
        p.omegaL * d_n,
        -p.omega0 * flows.n_otimes,
        p.omegaL * flows.n_otimes,
        -p.omega0 * flows.n_chi,
        p.omegaL * flows.n_chi,
    )


def elastic_weight(s_ss: np.ndarray, p: ModelParams) -> float:
    """Weight of the coherent delta component at the drive frequency.

    Equals the Hamiltonian-process photon flow at steady state (negative when
    the drive is net absorbed). ``s_ss`` is the rotating-frame steady state.
    """
    return photon_flows(s_ss, p, 0.0).n_otimes


@dataclass
class SpectrumResult:
    """Sampled incoherent spectral flow plus the separate elastic weight."""

    elastic_weight: float
    omega: np.ndarray
    sdot_chi: np.ndarray
    nbar_floor: float
    params: ModelParams

    def integral(self) -> float:
        return float(np.trapezoid(self.sdot_chi, self.omega))


def spectral_grid(p: ModelParams, span: float = 8.0, n_core: int = 801,
                  tail_factor: float = 3000.0, n_tail: int = 200) -> np.ndarray:
    """Frequency grid around omegaL: dense core, log-spaced 1/nu^2 tails."""
    w = max(p.gamma_total, p.rabi, abs(p.detuning))
    core = np.linspace(-span * w, span * w, n_core)
    tail = np.geomspace(span * w, tail_factor * w, n_tail)[1:]
    nu = np.concatenate([-tail[::-1], core, tail])
    return p.omegaL + nu


def incoherent_spectrum(s_ss: np.ndarray, p: ModelParams, grid: np.ndarray,
                        liouv: Liouvillian | None = None) -> SpectrumResult:
    """Fluctuation (inelastic) spectral flow on the given frequency grid.

    Two regression kernels enter, weighted gamma*(nbar+1) for normally
    ordered emission and -gamma*nbar for absorption; the stationary mode is
    deflated and the coherent delta is reported separately.
    """
    w_scale = max(p.gamma_total, p.rabi)
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 400:
        raise ConfigError("spectral grid needs at least 400 points")
    if grid.min() > p.omegaL - 6 * w_scale or grid.max() < p.omegaL + 6 * w_scale:
        raise ConfigError("spectral grid must span omegaL +/- 6 max(gamma_tot, rabi)")
    if liouv is None:
        liouv = build_liouvillian(p)
    sm, sp, _, _ = qubit_ops()
    sm_mean = dm.trace_product(sm, s_ss)
    dsm = sm - sm_mean * np.eye(2)

    vals, vecs, inv = liouv.eig()
    null_idx = int(np.argmin(np.abs(vals)))
    keep = np.arange(len(vals)) != null_idx
    # Tr{sigma+ M} = vec(sigma-)† vec(M); fold the mode weights in once.
    left = _vec(sm).conj() @ vecs
    amp1 = left * (inv @ _vec(dsm @ s_ss))
    amp2 = left * (inv @ _vec(s_ss @ dsm))
    nu = grid - p.omegaL
    denom = 1j * nu[:, None] - vals[None, keep]
    f = (p.gamma * (p.nbar + 1.0) * amp1[keep] - p.gamma * p.nbar * amp2[keep])
    kernel = (f[None, :] / denom).sum(axis=1)
    sdot = kernel.real / np.pi
    return SpectrumResult(
        elastic_weight=elastic_weight(s_ss, p),
        omega=grid,
        sdot_chi=sdot,
        nbar_floor=p.nbar / (2.0 * np.pi),
        params=p,
    )


@dataclass
class SpectralEnergetics:
    """hbar*omega weighted spectral flows at steady state."""

    bw_f_weight: float          # coherent delta at omegaL [energy/time]
    bq_f_density: np.ndarray    # smooth density over the spectrum grid
    omega: np.ndarray

    def bq_f_integral(self) -> float:
        return float(np.trapezoid(self.bq_f_density, self.omega))


def spectral_energetics(spec: SpectrumResult, p: ModelParams) -> SpectralEnergetics:
    """Energy-resolved work and heat flows of the output field."""
    return SpectralEnergetics(
        bw_f_weight=p.omegaL * spec.elastic_weight,
        bq_f_density=spec.omega * spec.sdot_chi,
        omega=spec.omega,
    )


class PhotonFlowRecorder:
    """Trajectory observer sampling the photon flows, in units of gamma."""

    def __init__(self, p: ModelParams):
        self.p = p
        self.samples: dict[str, list[float]] = {
            k: [] for k in ("n_in", "n_out", "n_stim", "n_spont", "n_otimes", "n_chi")
        }

    def _record(self, s: np.ndarray, t: float) -> None:
        f = photon_flows(s, self.p, t)
        for k in self.samples:
            self.samples[k].append(getattr(f, k) / self.p.gamma)

    def begin(self, p: ModelParams, s0: np.ndarray) -> None:
        self._record(s0, 0.0)

    def on_step(self, ctx: StepContext) -> None:
        self._record(ctx.s_next, ctx.t_next)

    def columns(self) -> dict[str, np.ndarray]:
        return {k: np.array(v) for k, v in self.samples.items()}


# --- two-unit joint-space oracle -------------------------------------------


@dataclass
class TwoUnitDeltas:
    """Joint change of two collision units, split by process type."""

    delta_otimes: np.ndarray
    delta_chi: np.ndarray
    delta_direct: np.ndarray
    g_otimes: complex
    g_chi: complex
    g_direct: complex


def _apply_atom_superop(prop4: np.ndarray, x: np.ndarray, d: int) -> np.ndarray:
    """Apply a 4x4 atom superoperator to the atom sector of a (2d x 2d) matrix."""
    x4 = x.reshape(2, d, 2, d)
    y4 = np.einsum("ABab,aubv->AuBv", prop4, x4)
    return y4.reshape(2 * d, 2 * d)


def _prop4(liouv: Liouvillian, t: float) -> np.ndarray:
    # column-stacking: vec index i + 2*j, so a Fortran-order reshape gives
    # P4[A, B, a, b] = P[A + 2B, a + 2b], i.e. X'[A,B] = P4[A,B,a,b] X[a,b]
    pmat = liouv.propagator(t)
    return pmat.reshape(2, 2, 2, 2, order="F")


def _second_collision_trace(y: np.ndarray, eta_m: np.ndarray,
                            engine: CollisionEngine, d: int) -> np.ndarray:
    """Tensor in a fresh unit m, collide it with the atom, trace the atom out.

    ``y`` lives on atom (x) unit_n; the result lives on unit_m (x) unit_n.
    """
    y4 = y.reshape(2, d, 2, d)
    joint = np.einsum("mM,anAN->amnAMN", eta_m, y4).reshape(2 * d * d, 2 * d * d)
    u_full = np.kron(engine.u, np.eye(d))
    joint = u_full @ joint @ u_full.conj().T
    return dm.partial_trace(joint, (2, d * d), "B")


def two_unit_map(arg: np.ndarray, p_small: ModelParams, m_minus_n: int,
                 engine: CollisionEngine | None = None,
                 liouv: Liouvillian | None = None) -> np.ndarray:
    """Propagate a joint atom(x)unit_n operator to the two-unit output space.

    Implements Tr_S{ U_m eta_m E^(t_m - t_n)[arg] U_m† } on unit_m (x) unit_n.
    """
    p = p_small
    d = p.fock_dim
    if engine is None:
        engine = CollisionEngine(p)
    if liouv is None:
        liouv = build_liouvillian(p)
    prop = _prop4(liouv, m_minus_n * p.dt)
    evolved = _apply_atom_superop(prop, arg, d)
    eta_m = engine.fresh_unit(0).rho
    return _second_collision_trace(evolved, eta_m, engine, d)


def two_unit_oracle(p: ModelParams, d_small: int, m_minus_n: int) -> TwoUnitDeltas:
    """Brute-force two-collision construction of the spectral splitting.

    Restricted to resonant drive (static propagator between collisions) and
    small truncations; the joint space is 2 * d_small^2 dimensional.
    """
    if d_small > TWO_UNIT_MAX_DIM:
        raise MemoryGuardError(f"two-unit oracle limited to d <= {TWO_UNIT_MAX_DIM}")
    if m_minus_n < 1:
        raise ConfigError("m_minus_n must be >= 1")
    if p.detuning != 0.0:
        raise ConfigError("two-unit oracle assumes a resonant drive")
    ps = p.with_(fock_dim=d_small)
    engine = CollisionEngine(ps)
    liouv = build_liouvillian(ps)
    rho_ss = steady_state(liouv)
    unit = engine.fresh_unit(0)
    joint, deltas = engine.collide(rho_ss, unit)
    eta_n = unit.rho
    product = np.kron(rho_ss, eta_n)

    arg_otimes = product + deltas.dotimes
    arg_chi = deltas.dchi
    arg_direct = joint.rho

    eta_pair = np.kron(engine.fresh_unit(0).rho, eta_n)
    out_otimes = two_unit_map(arg_otimes, ps, m_minus_n, engine, liouv) - eta_pair
    out_chi = two_unit_map(arg_chi, ps, m_minus_n, engine, liouv)
    out_direct = two_unit_map(arg_direct, ps, m_minus_n, engine, liouv) - eta_pair

    b, _ = fock_ops(d_small)
    op = np.kron(dm.dagger(b), b)     # b_m† b_n with m the first factor
    return TwoUnitDeltas(
        delta_otimes=out_otimes,
        delta_chi=out_chi,
        delta_direct=out_direct,
        g_otimes=dm.trace_product(op, out_otimes),
        g_chi=dm.trace_product(op, out_chi),
        g_direct=dm.trace_product(op, out_direct),
    )


def two_unit_chi_series(p: ModelParams, d_small: int, p_max: int) -> np.ndarray:
    """G_chi values for unit separations 1..p_max (resonant steady state)."""
    if d_small > TWO_UNIT_MAX_DIM:
        raise MemoryGuardError(f"two-unit oracle limited to d <= {TWO_UNIT_MAX_DIM}")
    if p.detuning != 0.0:
        raise ConfigError("two-unit oracle assumes a resonant drive")
    ps = p.with_(fock_dim=d_small)
    engine = CollisionEngine(ps)
    liouv = build_liouvillian(ps)
    rho_ss = steady_state(liouv)
    unit = engine.fresh_unit(0)
    _, deltas = engine.collide(rho_ss, unit)
    d = d_small
    b, _ = fock_ops(d)
    op = np.kron(dm.dagger(b), b)
    eta_m = engine.fresh_unit(0).rho
    step4 = _prop4(liouv, ps.dt)
    x = deltas.dchi
    out = np.empty(p_max, dtype=complex)
    for k in range(p_max):
        x = _apply_atom_superop(step4, x, d)
        pair = _second_collision_trace(x, eta_m, engine, d)
        out[k] = dm.trace_product(op, pair)
    return out


def two_unit_spectrum(p: ModelParams, d_small: int, p_max: int,
                      omegas: np.ndarray) -> np.ndarray:
    """Phase-summed oracle spectrum at the given absolute frequencies."""
    g_chi = two_unit_chi_series(p, d_small, p_max)
    taus = p.dt * np.arange(1, p_max + 1)
    nu = np.asarray(omegas) - p.omegaL
    phases = np.exp(-1j * np.outer(nu, taus))
    return (phases @ g_chi).real / np.pi
