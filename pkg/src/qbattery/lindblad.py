"""Lindblad evolution: fixed-step RK4 propagation and long-time steady-state search.

Two master equations are supported, selected by the charge mode:

  coherent:  drho = -i[H_S + H_d(t), rho] + kappa * D[c] rho
  thermal:   drho = -i[H_S, rho] + kappa (n_b + 1) D[c] rho + kappa n_b D[c^dag] rho

with D[A] rho = A rho A^dag - (1/2){A^dag A, rho}.  The stepper is a fixed-step
classical RK4; adaptive black-box integrators are deliberately not used so that
reruns are bit-reproducible.

The hot path does one matrix product per right-hand side: commutator and
anticommutator terms combine into -i(H_eff rho - h.c.) with the non-Hermitian
H_eff = H - (i/2) sum_k rate_k A_k^dag A_k (diagonal here), and the remaining
cavity jump terms are Fock-index shifts on the blocked density matrix, O(dim^2).
Every term maps Hermitian input to exactly Hermitian output in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .hilbert import SpaceLayout
from .model import (
    ModelSpec,
    build_frame_shift,
    build_h_drive,
    build_h_system,
    initial_state,
)

__all__ = [
    "Dissipator",
    "EvolutionConfig",
    "EvolutionError",
    "FockCutoffError",
    "TraceDriftError",
    "PositivityError",
    "SteadyStateTimeout",
    "SteadyStateResult",
    "lindblad_rhs",
    "liouvillian_matrix",
    "default_time_step",
    "evolve",
    "steady_state",
]

TRACE_ABORT = 1e-6
HERMITICITY_ABORT = 1e-8
POSITIVITY_ABORT = -1e-7
# coarse steady-state stepping trades path accuracy for speed, so states in
# transit may dip further negative than an accurately integrated trajectory;
# the converged result is still held to POSITIVITY_ABORT
STEADY_PATH_POSITIVITY = -1e-3

# RK4 absolute stability reaches |lambda| dt ~ 2.785 on the negative real axis
RK4_STABLE = 2.785


class EvolutionError(RuntimeError):
    pass


class FockCutoffError(EvolutionError):
    """Truncation guard tripped: population reached the top Fock level."""


class TraceDriftError(EvolutionError):
    pass


class PositivityError(EvolutionError):
    pass


class SteadyStateTimeout(EvolutionError):
    """Residual failed to reach steady_tol before t_max."""

    def __init__(self, message: str, residual: float, rhs_norm: float, rho: np.ndarray):
        super().__init__(message)
        self.residual = residual
        self.rhs_norm = rhs_norm
        self.rho = rho


@dataclass(frozen=True)
class Dissipator:
    """One Lindblad channel: rate * D[operator]."""

    operator: np.ndarray
    rate: float


@dataclass(frozen=True)
class EvolutionConfig:
    """Integration controls.  dt = None resolves via default_time_step (dynamics)
    or a measured stability limit (steady-state search)."""

    dt: float | None = None
    t_max: float = 20.0
    sample_stride: int = 10
    steady_tol: float = 1e-7
    guard_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


def lindblad_rhs(
    rho: np.ndarray, h: np.ndarray, dissipators: Sequence[Dissipator]
) -> np.ndarray:
    """Reference right-hand side -i[h, rho] + sum_k rate_k D[A_k] rho.

    Plain matrix products; used for verification and residual reporting, not in
    the propagation hot loop.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.conj().T).max() > 1e-9 * scale:
        raise ValueError("Hamiltonian must be Hermitian")
    out = -1j * (h @ rho - rho @ h)
    for d in dissipators:
        a = np.asarray(d.operator, dtype=complex)
        ada = a.conj().T @ a
        out += d.rate * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
    return out


def liouvillian_matrix(
    h: np.ndarray, dissipators: Sequence[Dissipator]
) -> np.ndarray:
    """Dense superoperator L with vec(drho) = L vec(rho), row-major vec.

    Dimension grows as dim^2 x dim^2; intended for small-dimension analysis and
    cross-checks only.
    """
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    eye = np.eye(dim, dtype=complex)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for d in dissipators:
        a = np.asarray(d.operator, dtype=complex)
        ada = a.conj().T @ a
        lv += d.rate * (
            np.kron(a, a.conj())
            - 0.5 * (np.kron(ada, eye) + np.kron(eye, ada.T))
        )
    return lv


def system_dissipators(spec: ModelSpec) -> list[Dissipator]:
    """Cavity loss (and thermal pump) channels on the full space."""
    from .hilbert import annihilation, embed

    layout = spec.layout()
    c_full = embed(annihilation(layout.cavity_dim), "cavity", layout)
    out: list[Dissipator] = []
    if spec.kappa == 0:
        return out
    if spec.charge.mode == "thermal":
        out.append(Dissipator(c_full, spec.kappa * (spec.charge.n_b + 1.0)))
        if spec.charge.n_b > 0:
            out.append(Dissipator(c_full.conj().T, spec.kappa * spec.charge.n_b))
    else:
        out.append(Dissipator(c_full, spec.kappa))
    return out


def default_time_step(spec: ModelSpec) -> float:
    """dt = 0.002 / (fastest rate), capped by a conservative RK4 stability bound.

    The cap estimates the generator's spectral radius from norm bounds at the
    top Fock level; it only binds for very large cutoffs.
    """
    ch = spec.charge
    fastest = max(
        abs(spec.omega_a),
        abs(spec.omega_c),
        abs(spec.g),
        spec.kappa,
        ch.f if ch.mode == "coherent" else 0.0,
        spec.kappa * ch.n_b if ch.mode == "thermal" else 0.0,
        abs(spec.j_hop),
        1.0,
    )
    dt = 0.002 / fastest
    dc = spec.fock_cutoff
    onsite = max(abs(e) for e in spec.onsite_energies()) * spec.n_spins
    h_spread = (
        abs(spec.omega_c) * (dc - 1)
        + onsite
        + 2.0 * abs(spec.j_hop) * max(0, spec.n_spins - 1)
        + 2.0 * abs(spec.g) * math.sqrt(dc) * spec.n_spins
        + (2.0 * ch.f * math.sqrt(dc) if ch.mode == "coherent" else 0.0)
    )
    n_b = ch.n_b if ch.mode == "thermal" else 0.0
    radius = h_spread + spec.kappa * ((n_b + 1.0) * (dc - 1) + n_b * dc)
    if radius > 0:
        dt = min(dt, 0.5 * RK4_STABLE / radius)
    return dt


class _Engine:
    """Preallocated fast right-hand side and RK4 stepper for one model."""

    def __init__(self, spec: ModelSpec):
        self.layout = spec.layout()
        dc = self.layout.cavity_dim
        s = self.layout.spin_dim
        dim = self.layout.total_dim
        h0 = build_h_system(spec)
        ch = spec.charge
        self.f = 0.0
        self.delta = 0.0
        if ch.mode == "coherent" and ch.f > 0:
            # the drive is written in the frame rotating at omega_c, so the
            # generator carries H_S minus the frame shift; observables are
            # excitation conserving and do not see the transformation
            h0 = h0 - build_frame_shift(spec)
            if ch.delta == 0:
                h0 = h0 + build_h_drive(spec, 0.0)
            else:
                self.f = ch.f
                self.delta = ch.delta
        rate_down = 0.0
        rate_up = 0.0
        if spec.kappa > 0:
            if ch.mode == "thermal":
                rate_down = spec.kappa * (ch.n_b + 1.0)
                rate_up = spec.kappa * ch.n_b
            else:
                rate_down = spec.kappa
        self.rate_down = rate_down
        self.rate_up = rate_up
        # A^dag A is diagonal for both channels; its half-rates fold into H_eff
        nvec = np.arange(dc, dtype=float)
        up_vec = np.concatenate([np.arange(1.0, dc), [0.0]])  # truncated c c^dag
        decay = 0.5 * (rate_down * nvec + rate_up * up_vec)
        self.h_eff = h0 - 1j * np.diag(np.repeat(decay, s))
        w = np.sqrt(np.arange(1.0, dc))
        w2 = np.outer(w, w).reshape(dc - 1, 1, dc - 1, 1)
        self.w2_down = rate_down * w2
        self.w2_up = rate_up * w2
        self.wc = w[:, None, None, None]
        # workspace
        self._m = np.empty((dim, dim), dtype=complex)
        self._cj = np.empty((dim, dim), dtype=complex)
        self._jb = np.empty((dc - 1, s, dc - 1, s), dtype=complex)
        self._g = np.empty((dim, dim), dtype=complex) if self.f else None
        self._k = [np.empty((dim, dim), dtype=complex) for _ in range(4)]
        self._st = np.empty((dim, dim), dtype=complex)

    def rhs_into(self, rho: np.ndarray, t: float, out: np.ndarray) -> np.ndarray:
        dc = self.layout.cavity_dim
        s = self.layout.spin_dim
        np.matmul(self.h_eff, rho, out=self._m)
        if self.f:
            # rotating drive f (e^{-i delta t} c^dag + h.c.) rho, Fock shifts
            r4 = rho.reshape(dc, s, dc, s)
            g4 = self._g.reshape(dc, s, dc, s)
            ph = self.f * np.exp(-1j * self.delta * t)
            g4[0] = 0.0
            np.multiply(self.wc, r4[:-1], out=g4[1:])
            g4[1:] *= ph
            g4[:-1] += np.conj(ph) * (self.wc * r4[1:])
            self._m += self._g
        np.conjugate(self._m, out=self._cj)
        np.subtract(self._m, self._cj.T, out=out)
        out *= -1j
        r4 = rho.reshape(dc, s, dc, s)
        o4 = out.reshape(dc, s, dc, s)
        if self.rate_down:
            np.multiply(self.w2_down, r4[1:, :, 1:, :], out=self._jb)
            o4[:-1, :, :-1, :] += self._jb
        if self.rate_up:
            np.multiply(self.w2_up, r4[:-1, :, :-1, :], out=self._jb)
            o4[1:, :, 1:, :] += self._jb
        return out

    def rhs(self, rho: np.ndarray, t: float) -> np.ndarray:
        return self.rhs_into(rho, t, np.empty_like(rho)).copy()

    def step_inplace(self, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
        k1, k2, k3, k4 = self._k
        st = self._st
        self.rhs_into(rho, t, k1)
        np.multiply(k1, 0.5 * dt, out=st)
        st += rho
        self.rhs_into(st, t + 0.5 * dt, k2)
        np.multiply(k2, 0.5 * dt, out=st)
        st += rho
        self.rhs_into(st, t + 0.5 * dt, k3)
        np.multiply(k3, dt, out=st)
        st += rho
        self.rhs_into(st, t + dt, k4)
        k2 += k3
        k2 *= 2.0
        k1 += k4
        k1 += k2
        k1 *= dt / 6.0
        rho += k1
        return rho


def _spectral_radius(engine: _Engine, iters: int = 14, seed: int = 7) -> float:
    """Power-iteration estimate of the generator's largest |eigenvalue|."""
    rng = np.random.default_rng(seed)
    dim = engine.layout.total_dim
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    x = x + x.conj().T
    x /= np.linalg.norm(x)
    radius = 1.0
    for _ in range(iters):
        x = engine.rhs_into(x, 0.0, np.empty_like(x)).copy()
        radius = float(np.linalg.norm(x))
        if radius == 0.0:
            return 1.0
        x /= radius
    return radius


def _check_state(
    rho: np.ndarray,
    layout: SpaceLayout,
    guard_tol: float,
    t: float,
    positivity_abort: float = POSITIVITY_ABORT,
) -> None:
    diag = np.einsum("ii->i", rho).real
    drift = abs(diag.sum() - 1.0)
    if not math.isfinite(drift) or drift > TRACE_ABORT:
        raise TraceDriftError(f"trace drifted by {drift:.3e} at t = {t:.6g}")
    top = diag[-layout.spin_dim :].sum()
    if top > guard_tol:
        raise FockCutoffError(
            f"top Fock level holds population {top:.3e} at t = {t:.6g}; "
            "raise fock_cutoff"
        )
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITICITY_ABORT:
        raise EvolutionError(f"state lost Hermiticity ({herm:.3e}) at t = {t:.6g}")
    if np.linalg.eigvalsh(rho)[0] < positivity_abort:
        raise PositivityError(
            f"state eigenvalue below {positivity_abort} at t = {t:.6g}"
        )


def _validate_rho0(rho0: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (layout.total_dim, layout.total_dim):
        raise ValueError(
            f"initial state shape {rho.shape} does not match dimension "
            f"{layout.total_dim}"
        )
    if abs(np.trace(rho).real - 1.0) > 1e-9 or abs(np.trace(rho).imag) > 1e-12:
        raise ValueError("initial state must have unit trace")
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise ValueError("initial state must be Hermitian")
    return 0.5 * (rho + rho.conj().T)


def evolve(
    rho0: np.ndarray, spec: ModelSpec, config: EvolutionConfig | None = None
) -> Iterator[tuple[float, np.ndarray]]:
    """Propagate rho0 over [0, t_max], yielding (t, rho) at sampled steps.

    Yields t = 0 first and always includes the final time.  At every sample the
    state is re-symmetrized and checked: trace drift, truncation guard,
    Hermiticity, positivity.  Yielded arrays are copies.
    """
    cfg = config or EvolutionConfig()
    layout = spec.layout()
    rho = _validate_rho0(rho0, layout)
    engine = _Engine(spec)
    dt = cfg.dt if cfg.dt is not None else default_time_step(spec)
    n_steps = max(1, round(cfg.t_max / dt))
    dt = cfg.t_max / n_steps
    _check_state(rho, layout, cfg.guard_tol, 0.0)
    yield 0.0, rho.copy()
    for step in range(1, n_steps + 1):
        rho = engine.step_inplace(rho, (step - 1) * dt, dt)
        if step % cfg.sample_stride == 0 or step == n_steps:
            t = step * dt
            rho = 0.5 * (rho + rho.conj().T)
            _check_state(rho, layout, cfg.guard_tol, t)
            yield t, rho.copy()


@dataclass
class SteadyStateResult:
    """Converged long-time state with the residuals actually achieved.

    residual is the trace-norm change rate ||rho(t+D) - rho(t)||_1 / D over the
    last window D = 1/kappa; rhs_norm is ||L rho||_1 of the returned state.
    """

    rho: np.ndarray
    residual: float
    rhs_norm: float
    t: float
    converged: bool = True


def _trace_norm(x: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(x)).sum())


def steady_state(
    spec: ModelSpec,
    config: EvolutionConfig | None = None,
    rho0: np.ndarray | None = None,
) -> SteadyStateResult:
    """Integrate until the state stops changing, then verify the fixed point.

    Convergence: trace-norm rate below steady_tol over a window of 1/kappa,
    and ||rhs(rho)||_1 < 10 * steady_tol.  Raises SteadyStateTimeout (carrying
    the last residual and state) if t_max arrives first.

    With dt unset the step is chosen from a measured stability radius rather
    than the dynamics default: the fixed points of the RK4 map are exactly the
    kernel of the generator, so a coarse stable step converges to the same
    state, and the rhs-norm check verifies it independently of the path taken.
    Because that path is deliberately inaccurate, states in transit are only
    held to a loose positivity bound; the converged result passes the strict
    guard before it is returned.
    """
    cfg = config or EvolutionConfig(t_max=200.0)
    if spec.kappa <= 0:
        raise ValueError("steady state needs a relaxing channel (kappa > 0)")
    if spec.charge.mode == "coherent" and spec.charge.delta != 0:
        raise ValueError("detuned drive has no static steady state")
    layout = spec.layout()
    rho = _validate_rho0(rho0 if rho0 is not None else initial_state(spec), layout)
    engine = _Engine(spec)
    if cfg.dt is not None:
        dt = cfg.dt
        path_abort = POSITIVITY_ABORT
    else:
        dt = 0.65 * RK4_STABLE / _spectral_radius(engine)
        path_abort = STEADY_PATH_POSITIVITY
    window = 1.0 / spec.kappa
    block = max(4, round(window / dt))
    dt = window / block
    t = 0.0
    residual = math.inf
    rhs_norm = math.inf
    while t < cfg.t_max:
        prev = rho.copy()
        for k in range(block):
            rho = engine.step_inplace(rho, t + k * dt, dt)
        t += window
        rho = 0.5 * (rho + rho.conj().T)
        _check_state(rho, layout, cfg.guard_tol, t, path_abort)
        residual = _trace_norm(rho - prev) / window
        if residual < cfg.steady_tol:
            rhs_norm = _trace_norm(engine.rhs(rho, t))
            if rhs_norm < 10.0 * cfg.steady_tol:
                _check_state(rho, layout, cfg.guard_tol, t)
                return SteadyStateResult(rho, residual, rhs_norm, t)
    if not math.isfinite(rhs_norm):
        rhs_norm = _trace_norm(engine.rhs(rho, t))
    raise SteadyStateTimeout(
        f"no steady state by t = {cfg.t_max:.6g} "
        f"(last residual {residual:.3e}, rhs norm {rhs_norm:.3e})",
        residual=residual,
        rhs_norm=rhs_norm,
        rho=rho,
    )
