"""Collision-model simulation of a driven two-level emitter in a 1D field.

The package tracks the atom-field correlations built during every collision
and books the resulting bipartite work/heat ledger, field observables and
emission spectra, validated against the optical-Bloch-equation limit.
"""

from .model import ModelParams, UnitState, fresh_unit, thermal_state, unit_amplitude
from .collider import CollisionEngine, CollisionDeltas, JointState, run_trajectory
from .obe import build_liouvillian, integrate, steady_state, resolvent
from .energetics import (
    EnergyLedger,
    flows_from_bloch,
    saturation,
    steady_bwork,
    steady_selfwork,
)
from .fieldobs import (
    PhotonFlows,
    SpectrumResult,
    elastic_weight,
    incoherent_spectrum,
    mean_in_out,
    photon_flows,
)
from .entropy import sigma_bipartite, sigma_standard, von_neumann

__all__ = [
    "ModelParams",
    "UnitState",
    "fresh_unit",
    "thermal_state",
    "unit_amplitude",
    "CollisionEngine",
    "CollisionDeltas",
    "JointState",
    "run_trajectory",
    "build_liouvillian",
    "integrate",
    "steady_state",
    "resolvent",
    "EnergyLedger",
    "flows_from_bloch",
    "saturation",
    "steady_bwork",
    "steady_selfwork",
    "PhotonFlows",
    "SpectrumResult",
    "elastic_weight",
    "incoherent_spectrum",
    "mean_in_out",
    "photon_flows",
    "sigma_bipartite",
    "sigma_standard",
    "von_neumann",
]

__version__ = "0.1.0"
