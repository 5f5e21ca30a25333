"""Operators and layout of the cavity x N-spin Hilbert space.

Ordering convention used everywhere in this package: the cavity Fock factor
comes first, then the spin sites 1..N left to right.  A basis index decomposes
as ``index = fock * 2**n_spins + spin_bits`` with site 1 in the most
significant spin bit.  Per site |0> is the ground state and |1> the excited
state, so ``SIGMA_MINUS @ [0, 1] == [1, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "SIGMA_Z",
    "SIGMA_NUMBER",
    "SpaceLayout",
    "annihilation",
    "number_operator",
    "tensor",
    "spin_operator",
    "embed",
    "partial_trace_cavity",
    "partial_trace_spins",
    "fock_populations",
    "cavity_occupation",
]

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
# per-site excitation number sigma_plus @ sigma_minus
SIGMA_NUMBER = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)

for _m in (SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, SIGMA_NUMBER):
    _m.setflags(write=False)


@dataclass(frozen=True)
class SpaceLayout:
    """Shape of the composite space: one truncated Fock factor, n_spins qubits."""

    cavity_dim: int
    n_spins: int

    def __post_init__(self) -> None:
        if self.cavity_dim < 2:
            raise ValueError(f"cavity_dim must be >= 2, got {self.cavity_dim}")
        if self.n_spins < 1:
            raise ValueError(f"n_spins must be >= 1, got {self.n_spins}")

    @property
    def spin_dim(self) -> int:
        return 2**self.n_spins

    @property
    def total_dim(self) -> int:
        return self.cavity_dim * 2**self.n_spins


def annihilation(dim: int) -> np.ndarray:
    """Truncated bosonic lowering operator, <n-1|a|n> = sqrt(n)."""
    if dim < 2:
        raise ValueError("need at least two Fock levels")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor acting on the leading subsystem."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("left operand must be a square matrix")
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("right operand must be a square matrix")
    return np.kron(a, b)


def spin_operator(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Embed a single-site operator at `site` (1-based) into the 2**n_spins spin space."""
    if not 1 <= site <= n_spins:
        raise ValueError(f"site {site} outside 1..{n_spins}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_spins - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def embed(op: np.ndarray, slot: int | str, layout: SpaceLayout) -> np.ndarray:
    """Lift an operator on one factor to the full space.

    slot: "cavity" (or 0) for the Fock factor, or a 1-based spin site index.
    """
    op = np.asarray(op, dtype=complex)
    if slot in ("cavity", 0):
        if op.shape != (layout.cavity_dim, layout.cavity_dim):
            raise ValueError("operator does not match the cavity dimension")
        return np.kron(op, np.eye(layout.spin_dim, dtype=complex))
    site = int(slot)
    if op.shape != (2, 2):
        raise ValueError("spin-site operator must be 2x2")
    return np.kron(
        np.eye(layout.cavity_dim, dtype=complex),
        spin_operator(op, site, layout.n_spins),
    )


def _as_blocks(rho: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    if rho.shape != (layout.total_dim, layout.total_dim):
        raise ValueError(
            f"state has shape {rho.shape}, layout expects "
            f"({layout.total_dim}, {layout.total_dim})"
        )
    s = layout.spin_dim
    return np.ascontiguousarray(rho).reshape(layout.cavity_dim, s, layout.cavity_dim, s)


def partial_trace_cavity(rho: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Reduced spin-chain state: trace out the Fock factor."""
    return np.einsum("nsnt->st", _as_blocks(rho, layout))


def partial_trace_spins(rho: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Reduced cavity state: trace out all spin sites."""
    return np.einsum("nsms->nm", _as_blocks(rho, layout))


def fock_populations(rho: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Population of each Fock level, length cavity_dim, real."""
    blocks = _as_blocks(rho, layout)
    return np.einsum("nsns->n", blocks).real


def cavity_occupation(rho: np.ndarray, layout: SpaceLayout) -> float:
    """<n> of the cavity mode."""
    pops = fock_populations(rho, layout)
    return float(pops @ np.arange(layout.cavity_dim))
