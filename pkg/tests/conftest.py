"""Shared test oracles, independent of the library's internal code paths."""

from __future__ import annotations

import numpy as np

SIGMA_M = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_P = SIGMA_M.conj().T
NUM2 = SIGMA_P @ SIGMA_M


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full- or low-rank density matrix (Wishart construction)."""
    k = rank or dim
    a = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)


def kron_chain(ops: list[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def hand_site_op(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Place a 2x2 operator at 1-based site in an n-spin chain, identities elsewhere."""
    eye = np.eye(2, dtype=complex)
    return kron_chain([op if k == site else eye for k in range(1, n + 1)])


def hand_h_battery(
    n: int, omega: float, j: float, disorder: tuple[float, ...] = ()
) -> np.ndarray:
    """Independent assembly of the chain Hamiltonian via explicit kron chains."""
    shifts = disorder if disorder else (0.0,) * n
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(1, n + 1):
        h += omega * (1.0 + shifts[i - 1]) * hand_site_op(NUM2, i, n)
    for i in range(1, n):
        term = hand_site_op(SIGMA_P, i, n) @ hand_site_op(SIGMA_M, i + 1, n)
        h += j * (term + term.conj().T)
    return h


def matrixize(apply_fn, dim: int) -> np.ndarray:
    """Matrix of a linear superoperator in the row-major vec basis.

    Built by applying the map to every matrix unit, so it is independent of any
    Kronecker-identity shortcut used inside the library.
    """
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for j in range(dim):
        for k in range(dim):
            unit = np.zeros((dim, dim), dtype=complex)
            unit[j, k] = 1.0
            out[:, j * dim + k] = apply_fn(unit).reshape(-1)
    return out


def trace_norm(x: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(x)).sum())


def brute_force_ergotropy(rho: np.ndarray, h: np.ndarray) -> float:
    """min over permutation orderings of populations against energies.

    The passive energy of rho is min_P sum_i e_i r_{P(i)}; the minimum over all
    permutations is attained by descending populations on ascending energies,
    but here every permutation is tried explicitly.
    """
    from itertools import permutations

    r = np.linalg.eigvalsh(rho)
    e = np.linalg.eigvalsh(h)
    energy = float(np.real(np.trace(h @ rho)))
    best = min(float(np.dot(e, np.array(perm))) for perm in permutations(r))
    return energy - best
