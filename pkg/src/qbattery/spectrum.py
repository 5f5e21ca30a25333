"""Chain spectra, ground-level crossings, and order-parameter scans.

The chain Hamiltonian conserves total excitation number, so the ground level
carries an integer sector label <n_exc>.  A crossing is a hopping strength J
where that label changes; each one is located on a coarse grid and then
refined by bisection on the label.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec, build_h_battery, ground_state
from .observables import OrderParameters, order_parameters

__all__ = [
    "SpectrumScan",
    "OrderParameterScan",
    "battery_spectrum",
    "ground_sector",
    "ground_crossings",
    "scan_spectrum",
    "order_parameter_scan",
]

CROSSING_TOL = 1e-8
DEFAULT_GRID = 401


@dataclass
class SpectrumScan:
    """Chain levels over a hopping grid, with crossing locations."""

    j_values: np.ndarray
    levels: np.ndarray  # shape (len(j_values), 2**n_spins), ascending rows
    ground_energy: np.ndarray
    crossings: tuple[float, ...]


@dataclass
class OrderParameterScan:
    """Ground-state m_z and xi_z over a hopping grid.

    discontinuities marks midpoints of grid intervals where m_z jumps by more
    than 0.5/N; these must line up with the crossing list within one grid step.
    """

    j_values: np.ndarray
    m_z: np.ndarray
    xi_z: np.ndarray
    discontinuities: tuple[float, ...] = field(default_factory=tuple)


def battery_spectrum(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the chain Hamiltonian."""
    vals, vecs = np.linalg.eigh(build_h_battery(spec))
    return vals, vecs


def _excitation_numbers(n_spins: int) -> np.ndarray:
    return np.array([bin(b).count("1") for b in range(2**n_spins)])


def ground_sector(spec: ModelSpec) -> int:
    """Integer excitation number of the chain ground state."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, vec = ground_state(build_h_battery(spec))
    n_exc = float((np.abs(vec) ** 2) @ _excitation_numbers(spec.n_spins))
    return int(round(n_exc))


def ground_crossings(
    spec: ModelSpec,
    j_min: float,
    j_max: float,
    grid: int = DEFAULT_GRID,
) -> tuple[float, ...]:
    """Hopping strengths in (j_min, j_max) where the ground sector changes.

    Scans a uniform grid for sector changes and bisects each bracket down to
    width CROSSING_TOL.  The grid must be fine enough to separate crossings;
    the default resolves structure at the scale (j_max - j_min)/400.
    """
    if grid < 2:
        raise ValueError("grid needs at least two points")
    if not j_max > j_min:
        raise ValueError("need j_max > j_min")
    js = np.linspace(j_min, j_max, grid)
    sectors = [ground_sector(spec.with_hopping(float(j))) for j in js]
    out: list[float] = []
    for k in range(len(js) - 1):
        if sectors[k] == sectors[k + 1]:
            continue
        lo, hi = float(js[k]), float(js[k + 1])
        lo_sec = sectors[k]
        while hi - lo > CROSSING_TOL:
            mid = 0.5 * (lo + hi)
            if ground_sector(spec.with_hopping(mid)) == lo_sec:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return tuple(out)


def scan_spectrum(
    spec: ModelSpec,
    j_min: float,
    j_max: float,
    points: int,
    crossing_grid: int = DEFAULT_GRID,
) -> SpectrumScan:
    """All chain levels on a hopping grid plus refined crossing locations."""
    js = np.linspace(j_min, j_max, points)
    levels = np.empty((points, 2**spec.n_spins))
    for k, j in enumerate(js):
        levels[k], _ = battery_spectrum(spec.with_hopping(float(j)))
    crossings = ground_crossings(spec, j_min, j_max, grid=crossing_grid)
    return SpectrumScan(
        j_values=js,
        levels=levels,
        ground_energy=levels[:, 0].copy(),
        crossings=crossings,
    )


def order_parameter_scan(spec: ModelSpec, j_values: np.ndarray) -> OrderParameterScan:
    """Ground-state order parameters along a hopping grid."""
    js = np.asarray(j_values, dtype=float)
    m_z = np.empty(len(js))
    xi_z = np.empty(len(js))
    for k, j in enumerate(js):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, vec = ground_state(build_h_battery(spec.with_hopping(float(j))))
        params: OrderParameters = order_parameters(vec, spec.n_spins)
        m_z[k] = params.m_z
        xi_z[k] = params.xi_z
    jump = 0.5 / spec.n_spins
    disc = tuple(
        float(0.5 * (js[k] + js[k + 1]))
        for k in range(len(js) - 1)
        if abs(m_z[k + 1] - m_z[k]) > jump
    )
    return OrderParameterScan(j_values=js, m_z=m_z, xi_z=xi_z, discontinuities=disc)
