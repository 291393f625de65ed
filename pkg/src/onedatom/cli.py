"""Command-line front end.

Subcommands: simulate, steady, spectrum, sweep, verify. Each accepts a JSON
run configuration (--config) plus a few overriding flags. CSV files are the
canonical outputs; SVG charts are derived and optional.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical degradation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import densemath as dm
from . import energetics, entropy, fieldobs
from .collider import run_trajectory
from .energetics import EnergyLedger, rabi_for_saturation, saturation
from .errors import ConfigError, NumericalDegradationError
from .fieldobs import PhotonFlowRecorder
from .model import ModelParams, choose_fock_dim
from .obe import build_liouvillian, steady_state
from .output import svg_line_chart, write_csv
from .verification import run_checks

_RUNS = ("simulate", "steady", "spectrum", "sweep", "verify")
_AXES = ("s", "nbar", "detuning")


@dataclass(frozen=True)
class SweepAxis:
    axis: str = "s"
    start: float = 0.0
    stop: float = 10.0
    points: int = 41

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ConfigError(f"sweep axis must be one of {_AXES}, got {self.axis!r}")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("sweep range bounds must be finite")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    run: str = "simulate"
    n_steps: int = 20000
    sweep_axis: SweepAxis = field(default_factory=SweepAxis)
    output_dir: str = "out"
    seed: int = 12345

    def __post_init__(self):
        if self.run not in _RUNS:
            raise ConfigError(f"run must be one of {_RUNS}, got {self.run!r}")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")

    def to_dict(self) -> dict:
        return {
            "params": json.loads(self.params.to_json()),
            "run": self.run,
            "n_steps": self.n_steps,
            "sweep_axis": {
                "axis": self.sweep_axis.axis,
                "start": self.sweep_axis.start,
                "stop": self.sweep_axis.stop,
                "points": self.sweep_axis.points,
            },
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        allowed = {"params", "run", "n_steps", "sweep_axis", "output_dir", "seed"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown RunConfig keys: {sorted(unknown)}")
        kw = dict(d)
        if "params" in kw:
            kw["params"] = ModelParams.from_dict(kw["params"])
        if "sweep_axis" in kw:
            ax = kw["sweep_axis"]
            extra = set(ax) - {"axis", "start", "stop", "points"}
            if extra:
                raise ConfigError(f"unknown sweep_axis keys: {sorted(extra)}")
            kw["sweep_axis"] = SweepAxis(**ax)
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def _outdir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output dir {path} not writable: {exc}") from exc
    return path


def _param_comments(p: ModelParams) -> dict:
    c = {k: v for k, v in json.loads(p.to_json()).items()}
    for w in p.regime_warnings():
        c.setdefault("warnings", "")
        c["warnings"] = (c["warnings"] + "; " + w).strip("; ")
    return c


def _excited() -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def cmd_simulate(cfg: RunConfig, svg: bool = True) -> list[Path]:
    out = _outdir(cfg)
    p = cfg.params
    ledger = EnergyLedger(p)
    flows = PhotonFlowRecorder(p)
    traj = run_trajectory(p, _excited(), cfg.n_steps, observers=(ledger, flows))
    cols = traj.columns()
    comments = _param_comments(p)
    comments["n_steps"] = cfg.n_steps
    comments["seed"] = cfg.seed
    files = [out / "trajectory.csv"]
    write_csv(files[0], cols, comments)

    sig = entropy.sigma_standard(traj, p)
    bsig = entropy.sigma_bipartite(traj, p)
    ds = entropy.entropy_series(traj, p)
    ecols = {
        "t": traj.times,
        "dS_S": ds - ds[0],
        "Sigma": sig,
        "bSigma": bsig,
        "Sigma_minus_bSigma": sig - bsig,
    }
    files.append(out / "entropy.csv")
    write_csv(files[-1], ecols, comments)

    if svg:
        t = traj.times * p.gamma
        series = [
            (name, t, np.gradient(cols[name] * p.omega0, traj.times) / (p.gamma * p.omega0))
            for name in ("bW_S", "bQ_S", "bW_f", "bQ_f", "W_self")
        ]
        files.append(out / "flows.svg")
        svg_line_chart(files[-1], series, title="Energy flows along the trajectory",
                       xlabel="gamma t", ylabel="flow [gamma hbar omega0]")
    return files


def cmd_steady(cfg: RunConfig, svg: bool = True) -> list[Path]:
    out = _outdir(cfg)
    p = cfg.params
    liouv = build_liouvillian(p)
    ss = steady_state(liouv)
    f = energetics.flows_from_bloch(ss, 0.0, p)
    pf = fieldobs.photon_flows(ss, p, 0.0)
    unit_e = p.gamma * p.omega0
    cols = {
        "s_param": [saturation(p)],
        "sx": [2 * ss[1, 0].real],
        "sy": [2 * ss[1, 0].imag],
        "sz": [(ss[0, 0] - ss[1, 1]).real],
        "W": [f.W / unit_e],
        "Q": [f.Q / unit_e],
        "bW_S": [f.bW_S / unit_e],
        "bQ_S": [f.bQ_S / unit_e],
        "bW_f": [f.bW_f / unit_e],
        "bQ_f": [f.bQ_f / unit_e],
        "W_self": [f.W_self / unit_e],
        "n_stim": [pf.n_stim / p.gamma],
        "n_spont": [pf.n_spont / p.gamma],
        "n_otimes": [pf.n_otimes / p.gamma],
        "n_chi": [pf.n_chi / p.gamma],
        "elastic_weight": [fieldobs.elastic_weight(ss, p) / p.gamma],
    }
    path = out / "steady.csv"
    write_csv(path, cols, _param_comments(p))
    return [path]


def cmd_spectrum(cfg: RunConfig, svg: bool = True) -> list[Path]:
    out = _outdir(cfg)
    p = cfg.params
    liouv = build_liouvillian(p)
    ss = steady_state(liouv)
    spec = fieldobs.incoherent_spectrum(ss, p, fieldobs.spectral_grid(p), liouv)
    spectral = fieldobs.spectral_energetics(spec, p)
    comments = _param_comments(p)
    comments["elastic_weight"] = spec.elastic_weight
    comments["nbar_floor"] = spec.nbar_floor
    cols = {
        "omega": spec.omega,
        "sdot_chi": spec.sdot_chi,
        "bq_density": spectral.bq_f_density,
    }
    files = [out / "spectrum.csv"]
    write_csv(files[0], cols, comments)
    if svg:
        nu = (spec.omega - p.omegaL) / p.gamma
        core = np.abs(nu) <= 10 * max(p.gamma_total, p.rabi) / p.gamma
        files.append(out / "spectrum.svg")
        svg_line_chart(
            files[-1],
            [("incoherent flow", nu[core], spec.sdot_chi[core] * p.gamma)],
            title="Incoherent emission spectrum",
            xlabel="(omega - omegaL) / gamma",
            ylabel="spectral flow density",
            annotations=[f"elastic weight at omegaL: {spec.elastic_weight:.6g}"],
        )
    return files


_SWEEP_NBARS = (0.0, 0.5, 2.0)
_OVERLAY_POINTS = 8


def _steady_selfwork_run(args):
    """Collision-model steady self-work at one sweep point (thread worker)."""
    s_val, nbar, base = args
    p0 = base.with_(nbar=nbar)
    rabi = rabi_for_saturation(s_val, p0)
    alpha = 0.5 * rabi * math.sqrt(p0.dt / p0.gamma)
    d = choose_fock_dim(nbar, alpha)
    p = p0.with_(rabi=rabi, fock_dim=d)
    n_steps = int(round(20.0 / p.gamma / p.dt))
    ledger = EnergyLedger(p)
    traj = run_trajectory(p, _excited(), n_steps, observers=(ledger,))
    mask = traj.times >= 15.0 / p.gamma
    sim = float(np.mean(ledger.flow("W_self")[mask]) / (p.gamma * p.omega0))
    return s_val, nbar, sim


def cmd_sweep(cfg: RunConfig, svg: bool = True, threads: int = 1) -> list[Path]:
    out = _outdir(cfg)
    p = cfg.params
    ax = cfg.sweep_axis
    files = []
    if ax.axis == "s":
        grid = np.linspace(ax.start, ax.stop, ax.points)
        cols = {"s": grid}
        for nbar in _SWEEP_NBARS:
            cols[f"selfwork_nbar_{nbar:g}"] = np.array(
                [energetics.steady_selfwork(s, nbar) for s in grid]
            )
        files.append(out / "sweep.csv")
        write_csv(files[0], cols, _param_comments(p))

        overlay_s = np.geomspace(max(ax.start, 0.25), max(ax.stop, 0.5), _OVERLAY_POINTS)
        jobs = [(float(s), nbar, p) for nbar in _SWEEP_NBARS for s in overlay_s]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_steady_selfwork_run, jobs))
        else:
            results = [_steady_selfwork_run(j) for j in jobs]
        results.sort(key=lambda r: (r[1], r[0]))
        ocols = {
            "s": np.array([r[0] for r in results]),
            "nbar": np.array([r[1] for r in results]),
            "selfwork_sim": np.array([r[2] for r in results]),
            "selfwork_analytic": np.array(
                [energetics.steady_selfwork(r[0], r[1]) for r in results]
            ),
        }
        ocols["rel_err"] = np.abs(ocols["selfwork_sim"] / ocols["selfwork_analytic"] - 1.0)
        files.append(out / "sweep_overlay.csv")
        write_csv(files[-1], ocols, _param_comments(p))
        if svg:
            series = [
                (f"nbar={nbar:g}", grid, cols[f"selfwork_nbar_{nbar:g}"])
                for nbar in _SWEEP_NBARS
            ]
            for nbar in _SWEEP_NBARS:
                sel = ocols["nbar"] == nbar
                series.append((f"sim nbar={nbar:g}", ocols["s"][sel],
                               ocols["selfwork_sim"][sel], "points"))
            files.append(out / "sweep.svg")
            svg_line_chart(files[-1], series,
                           title="Steady-state self-work flow vs saturation",
                           xlabel="saturation parameter s",
                           ylabel="self-work flow [gamma hbar omega0]")
        return files

    # analytic sweeps over the other axes
    grid = np.linspace(ax.start, ax.stop, ax.points)
    if ax.axis == "nbar":
        vals = np.array([energetics.steady_selfwork(saturation(p), g) for g in grid])
        label = "nbar"
    else:
        vals = np.array(
            [energetics.steady_selfwork(
                saturation(p.with_(omegaL=p.omega0 - g)), p.nbar) for g in grid]
        )
        label = "detuning"
    files.append(out / "sweep.csv")
    write_csv(files[0], {label: grid, "selfwork": vals}, _param_comments(p))
    if svg:
        files.append(out / "sweep.svg")
        svg_line_chart(files[-1], [("selfwork", grid, vals)],
                       title=f"Steady-state self-work flow vs {label}",
                       xlabel=label, ylabel="self-work flow [gamma hbar omega0]")
    return files


def cmd_verify(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    checks = run_checks(seed=cfg.seed)
    report = {
        "passed": all(c.passed for c in checks),
        "n_failed": sum(not c.passed for c in checks),
        "checks": [c.asdict() for c in checks],
    }
    (out / "verify_report.json").write_text(json.dumps(report, indent=2))
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"[{status}] {c.name}: observed {c.observed:.3e} vs tolerance {c.tolerance:.3e}"
              + (f"  ({c.detail})" if c.detail else ""))
    print(f"{len(checks) - report['n_failed']}/{len(checks)} checks passed; "
          f"report in {out / 'verify_report.json'}")
    return 0 if report["passed"] else 1


def _load_config(path: str | None, run: str, overrides: dict) -> RunConfig:
    if path is not None:
        cfg = RunConfig.from_dict(json.loads(Path(path).read_text()))
        if cfg.run != run:
            cfg = RunConfig.from_dict({**cfg.to_dict(), "run": run})
    else:
        cfg = RunConfig(run=run)
    merged = cfg.to_dict()
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onedatom",
        description="Collision-model simulator for a driven atom in a 1D field",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        svg = sp.add_mutually_exclusive_group()
        svg.add_argument("--svg", dest="svg", action="store_true", default=True)
        svg.add_argument("--no-svg", dest="svg", action="store_false")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config, args.command, {"output_dir": args.out})
        if args.command == "simulate":
            cmd_simulate(cfg, svg=args.svg)
        elif args.command == "steady":
            cmd_steady(cfg, svg=args.svg)
        elif args.command == "spectrum":
            cmd_spectrum(cfg, svg=args.svg)
        elif args.command == "sweep":
            cmd_sweep(cfg, svg=args.svg, threads=args.threads)
        elif args.command == "verify":
            return cmd_verify(cfg)
        return 0
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalDegradationError as exc:
        print(f"numerical degradation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
