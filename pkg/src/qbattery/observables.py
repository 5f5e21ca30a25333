"""Energetic figures of merit of the battery subsystem.

All functions act on the reduced chain state rho_b and the chain Hamiltonian
h_b (both on the 2**n_spins space).  Stored energy is measured from the ground
energy of the same disordered chain, so Delta_E >= 0 for any state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EFFICIENCY_FLOOR_SCALE",
    "BatterySnapshot",
    "TimeSeries",
    "OrderParameters",
    "battery_energy",
    "ergotropy",
    "efficiency",
    "charging_power",
    "charging_time",
    "order_parameters",
]

# Delta_E below this multiple of omega_a leaves the efficiency undefined
EFFICIENCY_FLOOR_SCALE = 1e-9

POPULATION_TOL = -1e-7


@dataclass(frozen=True)
class BatterySnapshot:
    """Scalar observables of the battery at one instant.

    efficiency is None whenever Delta_E sits below the floor; power is None at
    t <= 0 where Delta_E / t is undefined.
    """

    t: float
    energy: float
    delta_e: float
    ergotropy: float
    efficiency: float | None
    power: float | None


@dataclass
class TimeSeries:
    """Sampled trajectory of the battery observables on a common time grid.

    Undefined entries (efficiency below the floor, power at t = 0) are NaN.
    """

    t: np.ndarray
    delta_e: np.ndarray
    ergotropy: np.ndarray
    efficiency: np.ndarray
    power: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class OrderParameters:
    m_z: float
    xi_z: float


def battery_energy(rho_b: np.ndarray, h_b: np.ndarray) -> float:
    """tr[h_b rho_b], checked real."""
    if rho_b.shape != h_b.shape:
        raise ValueError("state and Hamiltonian dimensions differ")
    val = np.einsum("ij,ji->", h_b, rho_b)
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-10 * scale:
        raise ValueError(f"energy has imaginary residue {val.imag:.3e}")
    return float(val.real)


def ergotropy(rho_b: np.ndarray, h_b: np.ndarray) -> float:
    """Maximum unitarily extractable work tr[h rho] - sum_n r_n e_n.

    Populations r_n sorted descending against energies e_n ascending.  Slightly
    negative populations from the integrator (>= -1e-7) are clamped to zero and
    renormalized; both the energy and the passive energy are evaluated on the
    clamped state so the result is nonnegative by the rearrangement inequality.
    """
    if rho_b.shape != h_b.shape:
        raise ValueError("state and Hamiltonian dimensions differ")
    pops, vecs = np.linalg.eigh(rho_b)
    if pops[0] < POPULATION_TOL:
        raise ValueError(f"state population {pops[0]:.3e} below {POPULATION_TOL}")
    pops = np.clip(pops, 0.0, None)
    total = pops.sum()
    if total <= 0:
        raise ValueError("state has no population")
    pops = pops / total
    energies = np.linalg.eigvalsh(h_b)
    # diagonal of V^dag h V: energy of each population mode
    mode_energy = np.einsum("ji,jk,ki->i", vecs.conj(), h_b, vecs).real
    energy = float(pops @ mode_energy)
    passive = float(np.sort(pops)[::-1] @ energies)
    eps = energy - passive
    if eps < -1e-10:
        raise ValueError(f"ergotropy came out negative ({eps:.3e})")
    return max(eps, 0.0)


def efficiency(delta_e: float, ergotropy_value: float, omega_a: float = 1.0) -> float | None:
    """R = ergotropy / Delta_E, or None when Delta_E is below the floor."""
    if delta_e < EFFICIENCY_FLOOR_SCALE * abs(omega_a):
        return None
    return ergotropy_value / delta_e


def charging_power(delta_e: float, t: float) -> float:
    if t <= 0:
        raise ValueError("power is defined only for t > 0")
    return delta_e / t


def charging_time(series: TimeSeries) -> float:
    """Time maximizing Delta_E(t) / t; ties resolve to the earliest sample."""
    mask = series.t > 0
    if mask.sum() < 3:
        raise ValueError("need at least three samples at t > 0")
    t = series.t[mask]
    p = series.delta_e[mask] / t
    return float(t[int(np.argmax(p))])


def order_parameters(ground: np.ndarray, n_spins: int) -> OrderParameters:
    """Magnetization m_z = <S_z>/N and xi_z = <S_z^2>/N^2 of a chain eigenvector.

    S_z = sum_i sigma_z^i with sigma_z = diag(-1, +1) in the |0>, |1> basis.
    """
    ground = np.asarray(ground)
    dim = 2**n_spins
    if ground.shape != (dim,):
        raise ValueError(f"vector length {ground.shape} does not match {n_spins} spins")
    norm = np.linalg.norm(ground)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"vector norm {norm:.6g} is not 1")
    weights = np.abs(ground) ** 2
    bits = np.arange(dim)
    excited = np.array([bin(b).count("1") for b in bits])
    sz = 2.0 * excited - n_spins
    m_z = float(weights @ sz) / n_spins
    xi_z = float(weights @ sz**2) / n_spins**2
    return OrderParameters(m_z=m_z, xi_z=xi_z)
