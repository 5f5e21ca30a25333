import numpy as np
import pytest

from qbattery.hilbert import SpaceLayout, annihilation
from qbattery.model import (
    ChargeSpec,
    ModelSpec,
    build_frame_shift,
    build_h_battery,
    build_h_cavity,
    build_h_drive,
    build_h_interaction,
    build_h_system,
    ground_state,
    initial_state,
    sample_disorder,
    suggest_fock_cutoff,
)

from conftest import NUM2, SIGMA_M, SIGMA_P, hand_h_battery


def total_excitation(spec: ModelSpec) -> np.ndarray:
    lay = spec.layout()
    n_op = np.kron(np.diag(np.arange(lay.cavity_dim, dtype=complex)), np.eye(lay.spin_dim))
    for i in range(1, spec.n_spins + 1):
        from qbattery.hilbert import SIGMA_NUMBER, embed

        n_op += embed(SIGMA_NUMBER, i, lay)
    return n_op


def test_charge_spec_validation():
    with pytest.raises(ValueError):
        ChargeSpec(mode="laser")
    with pytest.raises(ValueError):
        ChargeSpec(mode="coherent", f=-1.0)
    with pytest.raises(ValueError):
        ChargeSpec(mode="thermal", n_b=-0.5)
    with pytest.warns(UserWarning):
        ChargeSpec(mode="thermal", f=2.0, n_b=1.0)
    with pytest.warns(UserWarning):
        ChargeSpec(mode="coherent", f=1.0, n_b=0.5)


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(n_spins=0)
    with pytest.raises(ValueError):
        ModelSpec(n_spins=2, kappa=-0.1)
    with pytest.raises(ValueError):
        ModelSpec(n_spins=2, fock_cutoff=1)
    with pytest.raises(ValueError):
        ModelSpec(n_spins=2, disorder=(0.1,))
    spec = ModelSpec(n_spins=2, disorder=(0.1, -0.2), fock_cutoff=5)
    assert spec.layout() == SpaceLayout(5, 2)
    assert np.allclose(spec.onsite_energies(), [1.1, 0.8])


def test_h_battery_n2_hand_assembly():
    spec = ModelSpec(n_spins=2, omega_a=1.0, j_hop=0.5, fock_cutoff=2)
    h = build_h_battery(spec)
    # oracle: explicit kron assembly plus the literal matrix
    oracle = (
        np.kron(NUM2, np.eye(2)) + np.kron(np.eye(2), NUM2)
        + 0.5 * (np.kron(SIGMA_P, SIGMA_M) + np.kron(SIGMA_M, SIGMA_P))
    )
    assert np.abs(h - oracle).max() < 1e-15
    literal = np.diag([0.0, 1.0, 1.0, 2.0]).astype(complex)
    literal[1, 2] = literal[2, 1] = 0.5
    assert np.abs(h - literal).max() < 1e-15


def test_h_battery_j0_counts_excitations():
    spec = ModelSpec(n_spins=3, j_hop=0.0, fock_cutoff=2)
    h = build_h_battery(spec)
    pops = np.array([bin(s).count("1") for s in range(8)], dtype=float)
    assert np.abs(h - np.diag(pops)).max() < 1e-15


def test_h_battery_commutes_with_excitation_number():
    spec = ModelSpec(n_spins=3, j_hop=0.73, fock_cutoff=2)
    h = build_h_battery(spec)
    n_exc = np.diag([bin(s).count("1") for s in range(8)]).astype(complex)
    assert np.abs(h @ n_exc - n_exc @ h).max() < 1e-12


def test_h_battery_disorder_enters_onsite_only():
    spec = ModelSpec(n_spins=2, j_hop=0.3, disorder=(0.1, -0.3), fock_cutoff=2)
    h = build_h_battery(spec)
    assert np.abs(h - hand_h_battery(2, 1.0, 0.3, (0.1, -0.3))).max() < 1e-15
    assert np.allclose(np.diag(h).real, [0.0, 0.7, 1.1, 1.8])
    # hopping stays clean
    assert h[1, 2] == pytest.approx(0.3)


def test_h_cavity():
    spec = ModelSpec(n_spins=1, omega_c=1.0, fock_cutoff=3)
    h = build_h_cavity(spec)
    assert np.abs(h - np.kron(np.diag([0.0, 1.0, 2.0]), np.eye(2))).max() < 1e-15
    assert np.abs(build_h_cavity(ModelSpec(n_spins=1, omega_c=0.0, fock_cutoff=3))).max() == 0.0
    vac = np.zeros(6)
    vac[1] = 1.0  # |0>_A |1>_B
    assert vac @ h @ vac == 0.0


def test_h_interaction_matrix_element():
    spec = ModelSpec(n_spins=1, g=0.8, fock_cutoff=2)
    h = build_h_interaction(spec)
    # |0_A 1_B> = index 1, |1_A 0_B> = index 2
    assert h[1, 2] == pytest.approx(0.8)
    assert np.abs(h - h.conj().T).max() == 0.0
    assert np.abs(build_h_interaction(ModelSpec(n_spins=1, g=0.0, fock_cutoff=2))).max() == 0.0


def test_h_interaction_conserves_excitations():
    spec = ModelSpec(n_spins=2, g=1.3, fock_cutoff=4)
    h = build_h_interaction(spec)
    n_op = total_excitation(spec)
    assert np.abs(h @ n_op - n_op @ h).max() < 1e-12


def test_h_system_conserves_excitations():
    spec = ModelSpec(n_spins=2, g=0.9, j_hop=0.4, fock_cutoff=3)
    h = build_h_system(spec)
    n_op = total_excitation(spec)
    assert np.abs(h @ n_op - n_op @ h).max() < 1e-12


def test_frame_shift_is_scaled_excitation_number():
    spec = ModelSpec(n_spins=2, omega_c=1.3, g=0.9, j_hop=0.4, fock_cutoff=3)
    shift = build_frame_shift(spec)
    assert np.abs(shift - 1.3 * total_excitation(spec)).max() < 1e-12
    # the shift commutes with H_S, so rotating the frame leaves spectra intact
    h = build_h_system(spec)
    assert np.abs(h @ shift - shift @ h).max() < 1e-12


def test_frame_shift_cancels_resonant_frequencies():
    # at omega_a = omega_c with J = 0 and g = 0 nothing survives the rotation
    spec = ModelSpec(n_spins=2, g=0.0, fock_cutoff=4)
    assert np.abs(build_h_system(spec) - build_frame_shift(spec)).max() < 1e-12


def test_h_drive_resonant():
    spec = ModelSpec(n_spins=1, fock_cutoff=4, charge=ChargeSpec(mode="coherent", f=2.0))
    h0 = build_h_drive(spec, 0.0)
    c = annihilation(4)
    assert np.abs(h0 - 2.0 * np.kron(c + c.conj().T, np.eye(2))).max() < 1e-15
    assert np.abs(h0 - build_h_drive(spec, 17.3)).max() == 0.0


def test_h_drive_detuned_periodic():
    spec = ModelSpec(
        n_spins=1, fock_cutoff=3, charge=ChargeSpec(mode="coherent", f=1.0, delta=0.7)
    )
    t = 1.234
    h1 = build_h_drive(spec, t)
    h2 = build_h_drive(spec, t + 2 * np.pi / 0.7)
    assert np.abs(h1 - h2).max() < 1e-12
    assert np.abs(h1 - h1.conj().T).max() == 0.0


def test_h_drive_mode_errors():
    with pytest.raises(ValueError):
        build_h_drive(ModelSpec(n_spins=1, charge=ChargeSpec(mode="thermal", n_b=1.0)))
    spec = ModelSpec(n_spins=1, fock_cutoff=3, charge=ChargeSpec(mode="coherent", f=0.0))
    assert np.abs(build_h_drive(spec)).max() == 0.0


def test_builders_hermitian():
    spec = ModelSpec(
        n_spins=3, j_hop=0.6, g=1.1, fock_cutoff=5, disorder=(0.05, -0.1, 0.2),
        charge=ChargeSpec(mode="coherent", f=1.5, delta=0.3),
    )
    for h in (
        build_h_battery(spec),
        build_h_cavity(spec),
        build_h_interaction(spec),
        build_h_system(spec),
        build_h_drive(spec, 0.9),
    ):
        assert np.abs(h - h.conj().T).max() < 1e-12


def test_initial_state_j0():
    spec = ModelSpec(n_spins=3, j_hop=0.0, fock_cutoff=3)
    rho = initial_state(spec)
    psi = np.zeros(24, dtype=complex)
    psi[0] = 1.0  # vacuum x all-ground
    assert np.abs(rho - np.outer(psi, psi)).max() < 1e-12
    e0, _ = ground_state(build_h_battery(spec))
    assert e0 == pytest.approx(0.0, abs=1e-14)


def test_initial_state_ground_energy_n3_j1():
    # oracle: exact diagonalization of the independently assembled 8x8 chain
    oracle_e0 = float(np.linalg.eigvalsh(hand_h_battery(3, 1.0, 1.0))[0])
    assert oracle_e0 == pytest.approx(1.0 - np.sqrt(2.0), abs=1e-12)
    spec = ModelSpec(n_spins=3, j_hop=1.0, fock_cutoff=2)
    e0, _ = ground_state(build_h_battery(spec))
    assert e0 == pytest.approx(oracle_e0, abs=1e-12)
    rho = initial_state(spec)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.abs(rho @ rho - rho).max() < 1e-12


def test_initial_state_energy_matches_minimum():
    spec = ModelSpec(n_spins=3, j_hop=0.8, fock_cutoff=2, disorder=(0.1, -0.2, 0.05))
    h_b = build_h_battery(spec)
    rho = initial_state(spec)
    lay = spec.layout()
    from qbattery.hilbert import partial_trace_cavity

    rho_b = partial_trace_cavity(rho, lay)
    energy = float(np.real(np.trace(h_b @ rho_b)))
    assert energy == pytest.approx(float(np.linalg.eigvalsh(h_b)[0]), abs=1e-10)


def test_degenerate_ground_warns():
    # the two lowest chain levels cross at J = 1/sqrt(2) for three sites
    spec = ModelSpec(n_spins=3, j_hop=1.0 / np.sqrt(2.0), fock_cutoff=2)
    with pytest.warns(UserWarning, match="degenerate"):
        ground_state(build_h_battery(spec))


def test_sample_disorder():
    assert sample_disorder(0.0, 4, seed=3) == (0.0, 0.0, 0.0, 0.0)
    a = sample_disorder(1.0, 5, seed=42)
    b = sample_disorder(1.0, 5, seed=42)
    assert a == b
    draws = np.array(sample_disorder(1.0, 100000, seed=7))
    assert draws.min() >= -0.5 and draws.max() <= 0.5
    # uniform statistics: |mean| < 3 * w / sqrt(12 n)
    assert abs(draws.mean()) < 3.0 / np.sqrt(12.0 * 100000)
    with pytest.raises(ValueError):
        sample_disorder(-1.0, 3, seed=0)


def test_suggest_fock_cutoff():
    assert suggest_fock_cutoff(ChargeSpec(mode="thermal", n_b=2.0), 1.0) >= 38
    assert suggest_fock_cutoff(ChargeSpec(mode="thermal", n_b=0.2), 1.0) < 20
    assert suggest_fock_cutoff(ChargeSpec(mode="none"), 1.0, n_spins=3) == 5
    assert suggest_fock_cutoff(ChargeSpec(mode="coherent", f=2.0), 1.0) >= 40
    with pytest.raises(ValueError):
        suggest_fock_cutoff(ChargeSpec(mode="coherent", f=1.0), 0.0)
