"""Programmatic invariant suite behind the ``verify`` subcommand.

Each check evaluates one contract at a pinned tolerance and reports the
observed value; the CLI turns the list into a JSON report and an exit code.
The suite is a scaled-down mirror of the test suite's acceptance module,
sized to run in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from . import densemath as dm
from . import energetics, entropy, fieldobs, obe
from .collider import CollisionEngine, run_trajectory
from .energetics import EnergyLedger, flows_from_bloch, saturation, rabi_for_saturation
from .model import ModelParams, fock_ops, qubit_ops
from .obe import bloch_of, build_liouvillian, integrate, rotating_frame_state, steady_state


@dataclass
class Check:
    name: str
    tolerance: float
    observed: float
    passed: bool
    detail: str = ""

    def asdict(self):
        return asdict(self)


def _check(name, observed, tol, detail="", larger_ok=False):
    ok = observed >= tol if larger_ok else observed <= tol
    return Check(name=name, tolerance=float(tol), observed=float(observed),
                 passed=bool(ok), detail=detail)


def _excited() -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def _base_params(**kw) -> ModelParams:
    defaults = dict(gamma=1.0, rabi=0.0, omega0=1.0e4, omegaL=1.0e4,
                    nbar=0.0, dt=2.0e-3, fock_dim=10)
    defaults.update(kw)
    return ModelParams(**defaults)


def _checks_densemath(rng) -> list[Check]:
    out = []
    worst_fact = 0.0
    for _ in range(50):
        da, db = rng.integers(2, 5, size=2)
        a = dm.random_density(int(da), rng)
        b = dm.random_density(int(db), rng)
        red = dm.partial_trace(dm.kron(a, b), (int(da), int(db)), "A")
        worst_fact = max(worst_fact, float(np.max(np.abs(red - a))))
    out.append(_check("densemath.kron_partial_trace_factorization", worst_fact, 1e-12))

    worst_inv = 0.0
    for _ in range(10):
        m = dm.random_hermitian(6, rng, scale=1.5)
        prod = dm.matexp(m) @ dm.matexp(-m)
        worst_inv = max(worst_inv, float(np.max(np.abs(prod - np.eye(6)))))
    out.append(_check("densemath.matexp_inverse_identity", worst_inv, 1e-10))

    worst_tr = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 6))
        op = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = dm.random_density(d, rng)
        worst_tr = max(worst_tr, abs(np.trace(dm.lindblad_J(op, rho))))
    out.append(_check("densemath.lindblad_traceless", worst_tr, 1e-12))
    return out


def _checks_model() -> list[Check]:
    out = []
    p = _base_params(rabi=0.7, omegaL=1.0e4 - 0.5)
    engine = CollisionEngine(p)
    worst = 0.0
    for n in (0, 3, 17):
        unit = engine.fresh_unit(n)
        b_mean = dm.trace_product(engine.b, unit.rho)
        target = 0.5 * p.rabi * np.exp(-1j * (p.omegaL - p.omega0) * n * p.dt)
        worst = max(worst, abs(math.sqrt(p.gamma / p.dt) * b_mean - target))
    out.append(_check("model.input_amplitude_reconstruction", worst, 1e-10))

    p2 = _base_params(rabi=0.7, nbar=0.3, fock_dim=16)
    engine2 = CollisionEngine(p2)
    unit = engine2.fresh_unit(0)
    b_mean = dm.trace_product(engine2.b, unit.rho)
    db = engine2.b - b_mean * np.eye(p2.fock_dim)
    fluct = dm.trace_product(dm.dagger(db) @ db, unit.rho).real
    out.append(_check("model.unit_thermal_fluctuations", abs(fluct - p2.nbar), 1e-5,
                      detail=f"<db† db>={fluct:.8f}"))
    return out


def _checks_collider(rng) -> list[Check]:
    out = []
    p = _base_params(rabi=0.7, nbar=0.2, fock_dim=10)
    engine = CollisionEngine(p)
    s = dm.random_density(2, rng)
    unit = engine.fresh_unit(0)
    _, deltas = engine.collide(s, unit)
    d2 = deltas.d2S + deltas.d2f + deltas.d2chi
    gap = float(np.max(np.abs(deltas.dotimes + deltas.dchi - (deltas.d1 + d2))))
    out.append(_check("collider.splitting_completeness", gap, 1e-12))

    gaps = []
    dts = [p.dt / 2 ** k for k in range(4)]
    for dtk in dts:
        pk = p.with_(dt=dtk)
        ek = CollisionEngine(pk)
        _, dk = ek.collide(s, ek.fresh_unit(0))
        gaps.append(float(np.max(np.abs(dk.dexact - (dk.dotimes + dk.dchi)))))
    slope = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
    out.append(_check("collider.exactness_gap_exponent", abs(slope - 1.5), 0.2,
                      detail=f"fitted {slope:.3f}"))

    red = dm.partial_trace(deltas.d2S, (2, p.fock_dim), "A")
    out.append(_check("collider.second_order_drive_negligible",
                      float(np.max(np.abs(red))), 10 * (p.rabi * p.dt) ** 2))

    worst = 0.0
    for om, nb, det in ((0.7, 0.0, 0.0), (2.0, 0.2, 0.0), (0.7, 0.0, 1.0)):
        pk = _base_params(rabi=om, nbar=nb, omegaL=1.0e4 - det, fock_dim=10)
        n_steps = int(round(6.0 / pk.gamma / pk.dt))
        traj = run_trajectory(pk, _excited(), n_steps)
        liouv = build_liouvillian(pk)
        sol = integrate(liouv, _excited(), n_steps * pk.dt, pk.dt / 10)
        dev = _bloch_deviation(traj, sol, pk)
        worst = max(worst, dev / (pk.gamma * pk.dt))
    out.append(_check("collider.obe_agreement", worst, 5.0,
                      detail="max Bloch deviation in units of gamma*dt"))
    return out


def _bloch_deviation(traj, sol, p) -> float:
    stride = max(1, round(p.dt / (sol.times[1] - sol.times[0])))
    worst = 0.0
    for k, (t, s) in enumerate(zip(traj.times, traj.states)):
        rot = rotating_frame_state(s, t, p)
        ref = sol.states[k * stride]
        worst = max(worst, float(np.max(np.abs(np.array(bloch_of(rot)) - np.array(bloch_of(ref))))))
    return worst


def _checks_energetics() -> list[Check]:
    out = []
    p = _base_params(rabi=0.7, nbar=0.2, omegaL=1.0e4 - 1.0, fock_dim=10)
    ledger = EnergyLedger(p)
    n_steps = int(round(8.0 / p.gamma / p.dt))
    run_trajectory(p, _excited(), n_steps, observers=(ledger,))
    res = np.abs(np.array(ledger.residuals[1:])) / (p.dt * p.gamma * p.omega0)
    bound = 10.0 * (p.gamma * p.dt) ** 1.5
    out.append(_check("energetics.balance_residual_per_step", float(res.max()), bound))
    cum = abs(np.sum(ledger.residuals)) / p.omega0
    out.append(_check("energetics.balance_residual_cumulative", cum, 1e-2))

    bwf_delta = np.diff(ledger.cumulative("bW_f", "delta"))
    w_flow = ledger.flow("W")[1:]
    wself_flow = ledger.flow("W_self")[1:]
    target = -(w_flow + wself_flow) * p.dt
    scale = max(np.max(np.abs(target)), p.gamma * p.omega0 * p.dt * 1e-3)
    rel = float(np.max(np.abs(bwf_delta - target)) / scale)
    out.append(_check("energetics.bwf_equals_minus_work_minus_selfwork", rel,
                      5.0 * math.sqrt(p.gamma * p.dt)))

    p2 = _base_params(rabi=rabi_for_saturation(1.0, _base_params()), fock_dim=12)
    ledger2 = EnergyLedger(p2)
    n2 = int(round(20.0 / p2.gamma / p2.dt))
    traj2 = run_trajectory(p2, _excited(), n2, observers=(ledger2,))
    inc = np.diff(ledger2.cumulative("bW_S", "delta"))
    mask = traj2.times[1:] >= 15.0 / p2.gamma
    sim = float(np.mean(inc[mask]) / p2.dt / (p2.gamma * p2.omega0))
    ana = energetics.steady_bwork(saturation(p2), p2.nbar)
    out.append(_check("energetics.steady_bwork_vs_formula", abs(sim / ana - 1.0), 0.01,
                      detail=f"sim={sim:.6f} formula={ana:.6f}"))

    p3 = _base_params(rabi=1.2, nbar=0.2, omegaL=1.0e4 - 0.7)
    ss = steady_state(build_liouvillian(p3))
    f = flows_from_bloch(ss, 0.0, p3)
    rhs = (p3.omegaL / p3.omega0) * f.bW_S_self
    out.append(_check("energetics.steady_selfwork_frame_relation",
                      abs(f.W_self - rhs) / (p3.gamma * p3.omega0), 1e-6))
    return out


def _checks_fieldobs(rng) -> list[Check]:
    out = []
    params = [
        _base_params(rabi=0.0),
        _base_params(rabi=0.7),
        _base_params(rabi=2.0, nbar=0.2),
        _base_params(rabi=0.7, omegaL=1.0e4 - 1.0),
        _base_params(rabi=2.0, omegaL=1.0e4 - 1.0, nbar=0.2),
        _base_params(rabi=1.0, nbar=0.5),
    ]
    worst = 0.0
    for p in params:
        for _ in range(100):
            s = dm.random_density(2, rng)
            t = float(rng.uniform(0.0, 3.0))
            f = fieldobs.photon_flows(s, p, t)
            coh2 = abs(s[0, 1]) ** 2
            worst = max(
                worst,
                abs(f.n_out - f.n_in - (f.n_stim + f.n_spont)),
                abs(f.n_out - f.n_in - (f.n_otimes + f.n_chi)),
                abs(f.n_otimes - f.n_stim - p.gamma * coh2),
                abs(f.n_spont - f.n_chi - p.gamma * coh2),
            )
    out.append(_check("fieldobs.photon_flow_sum_rules", worst, 1e-10))

    p = _base_params(rabi=0.7, fock_dim=10)
    engine = CollisionEngine(p)
    s = _excited()
    worst = 0.0
    for n in range(5):
        unit = engine.fresh_unit(n)
        joint, _ = engine.collide(s, unit, step=n)
        unit_out = dm.partial_trace(joint.rho, (2, p.fock_dim), "B")
        b_unit = dm.trace_product(engine.b, unit_out)
        _, b_out = fieldobs.mean_in_out(s, p, n * p.dt)
        worst = max(worst, abs(b_unit - math.sqrt(p.dt) * b_out) / math.sqrt(p.dt))
        s = dm.partial_trace(joint.rho, (2, p.fock_dim), "A")
    out.append(_check("fieldobs.output_unit_amplitude", worst, 10 * p.gamma * p.dt,
                      detail="collision <b> vs sqrt(dt)<b_out>"))

    p6 = _base_params(rabi=6.0, fock_dim=12)
    liouv = build_liouvillian(p6)
    ss = steady_state(liouv)
    spec = fieldobs.incoherent_spectrum(ss, p6, fieldobs.spectral_grid(p6), liouv)
    n_chi = fieldobs.photon_flows(ss, p6, 0.0).n_chi
    out.append(_check("fieldobs.spectrum_integral_identity",
                      abs(spec.integral() / n_chi - 1.0), 1e-3))

    nu = spec.omega - p6.omegaL
    core = np.abs(nu) < 2.5 * p6.rabi
    side = nu[core][np.argmax(np.where(nu[core] > 0.5 * p6.rabi, spec.sdot_chi[core], -np.inf))]
    out.append(_check("fieldobs.mollow_sideband_position",
                      abs(side - p6.rabi) / p6.rabi, 0.03,
                      detail=f"peak at nu={side:.3f}, rabi={p6.rabi}"))

    worst = 0.0
    sm, _, _, _ = qubit_ops()
    dsm = sm - dm.trace_product(sm, ss) * np.eye(2)
    taus = np.linspace(0.0, 40.0 / p6.gamma, 20001)
    vals, vecs, inv = liouv.eig()
    null_idx = int(np.argmin(np.abs(vals)))
    keep = np.arange(len(vals)) != null_idx
    left = obe._vec(sm).conj() @ vecs
    amp = left * (inv @ obe._vec(dsm @ ss))
    for nu_probe in (0.0, p6.rabi, 2.0 * p6.gamma):
        kern = (np.exp(np.outer(taus, vals[keep])) * amp[keep]).sum(axis=1)
        quad = np.trapezoid(np.exp(-1j * nu_probe * taus) * kern, taus)
        resv = (amp[keep] / (1j * nu_probe - vals[keep])).sum()
        worst = max(worst, abs(quad - resv))
    out.append(_check("fieldobs.resolvent_vs_quadrature", worst, 1e-4))
    return out


def _checks_entropy() -> list[Check]:
    out = []
    p = _base_params(rabi=rabi_for_saturation(1.0, _base_params(nbar=0.2)), nbar=0.2,
                     fock_dim=12)
    n_steps = int(round(10.0 / p.gamma / p.dt))
    traj = run_trajectory(p, _excited(), n_steps)
    bsig = entropy.sigma_bipartite(traj, p)
    sig = entropy.sigma_standard(traj, p)
    out.append(_check("entropy.bipartite_second_law", -float(np.min(bsig)), 1e-9))
    ident = sig - bsig + p.beta * entropy.selfwork_integral(traj, p)
    out.append(_check("entropy.tightening_identity", float(np.max(np.abs(ident))), 1e-6))
    out.append(_check("entropy.sigma_dominates", -float(np.min(sig - bsig)), 1e-9))

    p2 = _base_params(rabi=0.5, nbar=0.2, dt=0.02, fock_dim=4)
    res = entropy.small_instance_relative_entropy(p2, d_small=4, n_collisions=2)
    tol = 5.0 * p2.gamma * p2.dt
    out.append(_check("entropy.two_collision_sigma_oracle",
                      abs(res.Sigma_re - res.Sigma_clausius), tol))
    out.append(_check("entropy.two_collision_bsigma_oracle",
                      abs(res.bSigma_re - res.bSigma_clausius), tol))
    out.append(_check("entropy.two_collision_ordering",
                      res.bSigma_re - res.Sigma_re, tol))

    probe = entropy.selfwork_sign_probe(_base_params(rabi=100.0), n_axis=22)
    out.append(_check("entropy.selfwork_sign_probe",
                      probe.max_selfwork, probe.bound,
                      detail=f"epsilon={probe.epsilon}"))
    return out


def _checks_config() -> list[Check]:
    from .cli import RunConfig
    cfg = RunConfig(params=_base_params(rabi=0.3), run="simulate", n_steps=100,
                    output_dir="out", seed=7)
    back = RunConfig.from_json(cfg.to_json())
    return [_check("cli.config_roundtrip", 0.0 if back == cfg else 1.0, 0.5)]


GROUPS = {
    "densemath": lambda rng: _checks_densemath(rng),
    "model": lambda rng: _checks_model(),
    "collider": lambda rng: _checks_collider(rng),
    "energetics": lambda rng: _checks_energetics(),
    "fieldobs": lambda rng: _checks_fieldobs(rng),
    "entropy": lambda rng: _checks_entropy(),
    "config": lambda rng: _checks_config(),
}


def run_checks(seed: int = 12345, groups: tuple[str, ...] | None = None) -> list[Check]:
    rng = np.random.default_rng(seed)
    selected = GROUPS if groups is None else {g: GROUPS[g] for g in groups}
    checks: list[Check] = []
    for fn in selected.values():
        checks.extend(fn(rng))
    return checks
