"""Dense complex linear algebra for small Hilbert spaces.

Everything here works on plain ``numpy`` arrays of complex128. Matrices are
row-major and small (dimension a few hundred at most), so dense storage and
LAPACK-backed kernels win over anything sparse.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, NumericalDegradationError

# Density-matrix acceptance thresholds. Callers may pass their own values;
# these are the package-wide defaults.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9

# matexp refuses anything larger than this (guards accidental huge kron chains).
MAX_EXP_DIM = 1024


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m†)/2."""
    return 0.5 * (m + m.conj().T)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(m: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one tensor factor of a (dA*dB) x (dA*dB) matrix.

    Parameters
    ----------
    m : square matrix on the A (x) B space, A first.
    dims : (dA, dB).
    keep : "A" to return the dA x dA reduction, "B" for dB x dB.
    """
    d_a, d_b = dims
    if m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionMismatchError(
            f"matrix shape {m.shape} incompatible with dims {dims}"
        )
    t = np.asarray(m, dtype=complex).reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def matexp(m: np.ndarray) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring (Pade).

    For anti-Hermitian input the result is unitary to ~1e-10 or better.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"matexp needs a square matrix, got {m.shape}")
    if m.shape[0] > MAX_EXP_DIM:
        raise DimensionMismatchError(
            f"matexp dimension {m.shape[0]} exceeds limit {MAX_EXP_DIM}"
        )
    return scipy.linalg.expm(m)


def expm_unitary(h: np.ndarray, prefactor: complex = -1j) -> np.ndarray:
    """exp(prefactor * h) for Hermitian h through its eigendecomposition.

    Exactly unitary (up to roundoff) when prefactor is purely imaginary,
    which is what the collision unitaries need.
    """
    w, v = np.linalg.eigh(hermitize(h))
    return (v * np.exp(prefactor * w)) @ v.conj().T


def lindblad_J(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Lindblad form  op rho op† - (1/2){rho, op† op}; traceless output."""
    if op.shape != rho.shape:
        raise DimensionMismatchError(
            f"operator shape {op.shape} != state shape {rho.shape}"
        )
    opd = op.conj().T
    k = opd @ op
    return op @ rho @ opd - 0.5 * (k @ rho + rho @ k)


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """Tr{op rho}."""
    if op.shape != rho.shape:
        raise DimensionMismatchError(
            f"operator shape {op.shape} != state shape {rho.shape}"
        )
    return complex(np.einsum("ij,ji->", op, rho))


def trace_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr{a b} without forming the product matrix."""
    return complex(np.einsum("ij,ji->", a, b))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def density_defects(
    rho: np.ndarray,
    herm_tol: float = HERMITICITY_TOL,
    trace_tol: float = TRACE_TOL,
    eig_floor: float = EIGENVALUE_FLOOR,
) -> dict[str, float]:
    """Measure how far rho is from a valid density matrix.

    Returns the observed deviations; empty dict means all invariants hold.
    """
    defects: dict[str, float] = {}
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_dev > herm_tol:
        defects["hermiticity"] = herm_dev
    trace_dev = abs(np.trace(rho) - 1.0)
    if trace_dev > trace_tol:
        defects["trace"] = float(trace_dev)
    min_eig = float(np.min(np.linalg.eigvalsh(hermitize(rho))))
    if min_eig < eig_floor:
        defects["min_eigenvalue"] = min_eig
    return defects


def check_density(rho: np.ndarray, context: str = "state", **tols) -> None:
    """Raise NumericalDegradationError if rho violates the density invariants."""
    defects = density_defects(rho, **tols)
    if defects:
        raise NumericalDegradationError(f"{context} is not a density matrix: {defects}")


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random full-rank density matrix (Ginibre construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * hermitize(g)
