"""Model definition: Hamiltonian builders, charging channels, disorder, initial state.

All couplings in units with hbar = k_B = 1.  The battery is an open-boundary
chain of two-level sites with nearest-neighbor hopping; the charger is a single
lossy cavity mode coupled to every site with the same strength g.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import (
    SIGMA_MINUS,
    SIGMA_NUMBER,
    SIGMA_PLUS,
    SpaceLayout,
    annihilation,
    number_operator,
    spin_operator,
)

__all__ = [
    "ChargeSpec",
    "ModelSpec",
    "build_h_cavity",
    "build_h_battery",
    "build_h_interaction",
    "build_h_drive",
    "build_h_system",
    "build_frame_shift",
    "initial_state",
    "ground_state",
    "sample_disorder",
    "suggest_fock_cutoff",
]

CHARGE_MODES = ("none", "coherent", "thermal")

# relative gap below which two lowest levels are treated as degenerate
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class ChargeSpec:
    """How the cavity is energized.

    coherent: classical drive of amplitude f, detuning delta (delta = 0 gives
    the static drive f*(c + c^dag)).  thermal: bath of mean occupation n_b
    attached through the cavity loss channel.  none: loss only.
    """

    mode: str = "none"
    f: float = 0.0
    delta: float = 0.0
    n_b: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in CHARGE_MODES:
            raise ValueError(f"charge mode must be one of {CHARGE_MODES}, got {self.mode!r}")
        if self.f < 0:
            raise ValueError("drive amplitude f must be >= 0")
        if self.n_b < 0:
            raise ValueError("bath occupation n_b must be >= 0")
        if self.mode == "thermal" and self.f != 0:
            warnings.warn("thermal charging ignores the drive amplitude f", stacklevel=2)
        if self.mode == "coherent" and self.n_b != 0:
            warnings.warn("coherent charging ignores the bath occupation n_b", stacklevel=2)


@dataclass(frozen=True)
class ModelSpec:
    """Full parameter set for one realization of the charger-battery system.

    disorder holds the per-site fractional shifts delta_i (empty tuple means a
    clean chain); site i has splitting omega_a * (1 + delta_i).
    """

    n_spins: int
    omega_a: float = 1.0
    omega_c: float = 1.0
    g: float = 1.0
    j_hop: float = 0.0
    kappa: float = 1.0
    charge: ChargeSpec = field(default_factory=ChargeSpec)
    disorder: tuple[float, ...] = ()
    fock_cutoff: int = 20

    def __post_init__(self) -> None:
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be >= 2")
        if self.disorder and len(self.disorder) != self.n_spins:
            raise ValueError(
                f"disorder has {len(self.disorder)} entries for {self.n_spins} sites"
            )

    def layout(self) -> SpaceLayout:
        return SpaceLayout(self.fock_cutoff, self.n_spins)

    def onsite_energies(self) -> np.ndarray:
        shifts = np.asarray(self.disorder if self.disorder else [0.0] * self.n_spins)
        return self.omega_a * (1.0 + shifts)

    def with_hopping(self, j_hop: float) -> "ModelSpec":
        return replace(self, j_hop=j_hop)


def build_h_battery(spec: ModelSpec) -> np.ndarray:
    """Chain Hamiltonian on the 2**n_spins spin space (no cavity factor).

    Onsite terms omega_a*(1+delta_i) sigma^+_i sigma^-_i plus hopping
    J (sigma^+_i sigma^-_{i+1} + h.c.) with open boundaries.  Disorder enters
    only the onsite splittings.
    """
    n = spec.n_spins
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    for i, eps in enumerate(spec.onsite_energies(), start=1):
        h += eps * spin_operator(SIGMA_NUMBER, i, n)
    for i in range(1, n):
        hop = spin_operator(SIGMA_PLUS, i, n) @ spin_operator(SIGMA_MINUS, i + 1, n)
        h += spec.j_hop * (hop + hop.conj().T)
    return h


def build_h_cavity(spec: ModelSpec) -> np.ndarray:
    """omega_c * n_hat on the full space."""
    layout = spec.layout()
    return np.kron(
        spec.omega_c * number_operator(layout.cavity_dim),
        np.eye(layout.spin_dim, dtype=complex),
    )


def build_h_interaction(spec: ModelSpec) -> np.ndarray:
    """Tavis-Cummings coupling g * sum_i (sigma^+_i c + sigma^-_i c^dag)."""
    layout = spec.layout()
    c = annihilation(layout.cavity_dim)
    h = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    for i in range(1, spec.n_spins + 1):
        h += spec.g * np.kron(c, spin_operator(SIGMA_PLUS, i, spec.n_spins))
    return h + h.conj().T


def build_h_drive(spec: ModelSpec, t: float = 0.0) -> np.ndarray:
    """Coherent drive f*(exp(-i delta t) c^dag + exp(+i delta t) c) on full space.

    Only defined for the coherent charge mode; f = 0 gives the zero matrix.
    """
    layout = spec.layout()
    if spec.charge.mode != "coherent":
        raise ValueError("the drive term exists only in coherent charge mode")
    if spec.charge.f == 0:
        return np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    c = annihilation(layout.cavity_dim)
    phase = np.exp(-1j * spec.charge.delta * t)
    drive = spec.charge.f * phase * c.conj().T
    full = np.kron(drive, np.eye(layout.spin_dim, dtype=complex))
    return full + full.conj().T


def build_h_system(spec: ModelSpec) -> np.ndarray:
    """H_A + H_B + H_I on the full space (no drive term)."""
    layout = spec.layout()
    h = build_h_cavity(spec)
    h += np.kron(np.eye(layout.cavity_dim, dtype=complex), build_h_battery(spec))
    h += build_h_interaction(spec)
    return h


def build_frame_shift(spec: ModelSpec) -> np.ndarray:
    """omega_c times the total excitation number, on the full space.

    Subtracting this from H_S moves the dynamics into the frame rotating at
    the cavity frequency, where the drive carrier drops out and only the
    detuning delta survives as a time dependence.  The shift commutes with
    every excitation-conserving observable (battery energy, ergotropy, cavity
    occupation), so reported quantities are frame independent.
    """
    layout = spec.layout()
    n_exc = np.kron(
        number_operator(layout.cavity_dim),
        np.eye(layout.spin_dim, dtype=complex),
    )
    spins = np.zeros((layout.spin_dim, layout.spin_dim), dtype=complex)
    for i in range(1, spec.n_spins + 1):
        spins += spin_operator(SIGMA_NUMBER, i, spec.n_spins)
    n_exc += np.kron(np.eye(layout.cavity_dim, dtype=complex), spins)
    return spec.omega_c * n_exc


def ground_state(h: np.ndarray) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a Hermitian matrix.

    Degenerate ground levels resolve to the first eigenvector returned by the
    solver, with a warning.
    """
    vals, vecs = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if len(vals) > 1 and vals[1] - vals[0] <= DEGENERACY_RTOL * scale:
        warnings.warn(
            "degenerate ground level; using the first eigenvector", stacklevel=2
        )
    return float(vals[0]), vecs[:, 0]


def initial_state(spec: ModelSpec) -> np.ndarray:
    """Density matrix |vac> <vac| x |G_B> <G_B| with G_B the chain ground state."""
    layout = spec.layout()
    _, gvec = ground_state(build_h_battery(spec))
    vac = np.zeros(layout.cavity_dim, dtype=complex)
    vac[0] = 1.0
    psi = np.kron(vac, gvec)
    return np.outer(psi, psi.conj())


def sample_disorder(w: float, n_spins: int, seed: int) -> tuple[float, ...]:
    """Uniform onsite shifts delta_i ~ U[-w/2, w/2], one fixed draw per seed."""
    if w < 0:
        raise ValueError("disorder width w must be >= 0")
    rng = np.random.default_rng(seed)
    return tuple(rng.uniform(-w / 2.0, w / 2.0, size=n_spins))


def suggest_fock_cutoff(
    charge: ChargeSpec,
    kappa: float,
    n_spins: int = 1,
    guard_tol: float = 1e-6,
) -> int:
    """Cutoff that keeps the bare steady cavity's top-level weight ~8x under guard_tol.

    Heuristic from the uncoupled-cavity photon statistics (thermal: geometric at
    n_b; coherent: Poisson at (2f/kappa)^2), plus two levels of headroom for the
    coupling.  The runtime truncation guard remains the authority.
    """
    target = guard_tol / 8.0
    if charge.mode == "thermal" and charge.n_b > 0:
        ratio = charge.n_b / (charge.n_b + 1.0)
        # smallest d with (1 - ratio) * ratio**(d-1) < target
        d = 1 + math.ceil(math.log(target * (charge.n_b + 1.0)) / math.log(ratio))
        return max(4, d + 2)
    if charge.mode == "coherent" and charge.f > 0:
        if kappa <= 0:
            raise ValueError(
                "an undamped driven cavity has no stationary photon number; "
                "set fock_cutoff explicitly"
            )
        # steady amplitude -i f / (i delta + kappa/2); resonant case (2f/kappa)^2
        nbar = charge.f**2 / (charge.delta**2 + (kappa / 2.0) ** 2)
        log_p = -nbar
        m = 0
        while not (m > nbar and log_p < math.log(target)):
            m += 1
            log_p += math.log(nbar) - math.log(m)
            if m > 100000:
                raise RuntimeError("cutoff search failed to terminate")
        return max(4, m + 3)
    # undriven: excitations can only come from the chain's initial sector
    return max(2, n_spins + 2)
