"""Solver-level checks: structure of H and the dissipators, propagation
accuracy against the single-excitation closed form, steady states."""

import dataclasses
import math

import numpy as np
import pytest

from qdcav.drive import DriveSpec, cw_drive, gaussian_drive, no_drive
from qdcav.dynamics import (
    TWO_PI,
    SystemParams,
    TimeGrid,
    build_hamiltonian,
    collapse_operators,
    evolve_master,
    lindblad_rhs,
    liouvillian_matrix,
    master_expectations,
    max_stable_dt,
    polariton_eigenfrequencies,
    steady_state,
)
from qdcav.hilbert import (
    EXCITED,
    GROUND,
    InvariantViolation,
    dot_population_operator,
    photon_number_operator,
)

SYS1 = SystemParams(g=25.0, kappa=27.0, gamma=0.1)
SYS2 = SystemParams(g=21.2, kappa=27.2, gamma=0.1)

# cw amplitude equivalent to 12 nW at the default collection efficiency
AMP_12NW = 1.2961425002368965


def vacuum_dm(params):
    rho0 = np.zeros((params.layout.dim, params.layout.dim), dtype=complex)
    rho0[0, 0] = 1.0
    return rho0


def random_dm(dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(g=-1.0, kappa=27.0, gamma=0.1)
    with pytest.raises(ValueError):
        SystemParams(g=25.0, kappa=27.0, gamma=-0.1)
    with pytest.raises(ValueError):
        SystemParams(g=25.0, kappa=27.0, gamma=0.1, n_max=0)


def test_params_layout_and_coupling_regime():
    assert SYS1.layout.dim == 16
    assert SYS1.is_strongly_coupled
    assert SYS2.is_strongly_coupled
    weak = SystemParams(g=10.0, kappa=27.0, gamma=0.1)
    assert not weak.is_strongly_coupled


def test_time_grid():
    grid = TimeGrid(0.0, 1.0, 4)
    assert grid.dt == 0.25
    assert grid.n_points == 5
    assert np.allclose(grid.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 10)


def test_stability_gate():
    assert max_stable_dt(SYS1) == pytest.approx(0.02 / 27.0, rel=1e-15)
    # a weak drive does not move the gate; kappa still dominates
    assert max_stable_dt(SYS1, cw_drive(8.0)) == pytest.approx(0.02 / 27.0)
    # a strong drive does, through the peak coupling rate
    f_drive = math.sqrt(TWO_PI * 27.0) * 80.0 / TWO_PI
    assert max_stable_dt(SYS1, cw_drive(80.0)) == pytest.approx(0.02 / f_drive)
    detuned = dataclasses.replace(SYS1, delta_c=50.0)
    assert max_stable_dt(detuned) == pytest.approx(0.02 / 50.0)


def test_hamiltonian_elements():
    layout = SYS1.layout
    g1 = layout.index(GROUND, 1)
    g0 = layout.index(GROUND, 0)
    e0 = layout.index(EXCITED, 0)
    h = build_hamiltonian(SYS1, AMP_12NW)
    assert h[g1, e0] == pytest.approx(157.07963267948966j, rel=1e-12)
    assert h[g1, g0] == pytest.approx(-16.882026106638744j, rel=1e-12)
    assert np.abs(h - h.conj().T).max() < 1e-12


def test_hamiltonian_decoupled_and_detuned():
    layout = SYS1.layout
    g1 = layout.index(GROUND, 1)
    e0 = layout.index(EXCITED, 0)
    h0 = build_hamiltonian(dataclasses.replace(SYS1, g=0.0), 0.0)
    assert h0[g1, e0] == 0.0
    detuned = dataclasses.replace(SYS1, delta_c=3.0, delta_d=-2.0)
    h = build_hamiltonian(detuned, 0.0)
    assert h[g1, g1] == pytest.approx(TWO_PI * 3.0, rel=1e-14)
    assert h[e0, e0] == pytest.approx(TWO_PI * -2.0, rel=1e-14)


def test_collapse_operators_rates_and_omission():
    layout = SYS1.layout
    g0 = layout.index(GROUND, 0)
    g1 = layout.index(GROUND, 1)
    e0 = layout.index(EXCITED, 0)

    ops = collapse_operators(SYS1)
    assert len(ops) == 2
    assert ops[0][g0, g1] == pytest.approx(math.sqrt(2.0 * TWO_PI * 27.0), rel=1e-14)
    assert ops[1][g0, e0] == pytest.approx(math.sqrt(2.0 * TWO_PI * 0.1), rel=1e-14)

    dephased = dataclasses.replace(SYS1, gamma_d=2.5)
    ops = collapse_operators(dephased)
    assert len(ops) == 3
    assert ops[2][e0, e0] == pytest.approx(math.sqrt(2.0 * TWO_PI * 2.5), rel=1e-14)

    no_dot_decay = SystemParams(g=25.0, kappa=27.0, gamma=0.0)
    assert len(collapse_operators(no_dot_decay)) == 1


def test_lindblad_rhs_preserves_trace_and_hermiticity():
    params = dataclasses.replace(SYS1, gamma_d=2.5, n_max=3)
    h = build_hamiltonian(params, 0.7 - 0.2j)
    ops = collapse_operators(params)
    rho = random_dm(params.layout.dim, seed=5)
    out = lindblad_rhs(h, ops, rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.abs(out - out.conj().T).max() < 1e-12


def test_liouvillian_matches_rhs():
    params = dataclasses.replace(SYS1, gamma_d=2.5, n_max=2)
    h = build_hamiltonian(params, 1.3 + 0.4j)
    ops = collapse_operators(params)
    liou = liouvillian_matrix(h, ops)
    rho = random_dm(params.layout.dim, seed=9)
    direct = lindblad_rhs(h, ops, rho).reshape(-1)
    assert np.abs(liou @ rho.reshape(-1) - direct).max() < 1e-10


def test_steady_state_frozen_value():
    rho = steady_state(SYS1, AMP_12NW)
    n_op = photon_number_operator(SYS1.layout)
    n = float(np.trace(n_op @ rho).real)
    assert n == pytest.approx(1.2196537143528294e-4, rel=1e-10)
    # stationarity under the same generator
    h = build_hamiltonian(SYS1, AMP_12NW)
    resid = lindblad_rhs(h, collapse_operators(SYS1), rho)
    assert np.abs(resid).max() < 1e-10


def test_steady_state_empty_cavity_lorentzian():
    amp = 1.3
    for delta in (-40.0, -11.0, 0.0, 7.0, 33.0):
        params = SystemParams(g=0.0, kappa=27.0, gamma=0.1, delta_c=delta)
        rho = steady_state(params, amp)
        n_op = photon_number_operator(params.layout)
        n = float(np.trace(n_op @ rho).real)
        expected = amp**2 / (TWO_PI * 27.0) * 27.0**2 / (27.0**2 + delta**2)
        assert n == pytest.approx(expected, rel=1e-8)


def test_single_excitation_matches_closed_form():
    # |e,0> with no drive stays in the one-excitation manifold, where the
    # vacuum Rabi problem has an exact solution
    params = dataclasses.replace(SYS1, n_max=1)
    layout = params.layout
    psi0 = layout.basis_state(EXCITED, 0)
    rho0 = np.outer(psi0, psi0.conj())
    grid = TimeGrid(0.0, 0.05, 2000)
    states = evolve_master(rho0, params, no_drive(), grid)

    g_r = TWO_PI * params.g
    kap = TWO_PI * params.kappa
    gam = TWO_PI * params.gamma
    half_diff = 0.5 * (kap - gam)
    rabi = math.sqrt(g_r**2 - half_diff**2)
    t = grid.times
    envelope = np.exp(-0.5 * (kap + gam) * t)
    alpha = envelope * (np.cos(rabi * t) + (half_diff / rabi) * np.sin(rabi * t))
    beta = envelope * (g_r / rabi) * np.sin(rabi * t)

    n_op = photon_number_operator(layout)
    p_op = dot_population_operator(layout)
    n_sim = np.einsum("tij,ji->t", states, n_op).real
    p_sim = np.einsum("tij,ji->t", states, p_op).real
    assert np.abs(n_sim - beta**2).max() < 1e-8
    assert np.abs(p_sim - alpha**2).max() < 1e-8


def test_batched_expectations_match_individual_runs():
    grid = TimeGrid(0.0, 0.02, 400)
    drives = [
        cw_drive(1.0),
        gaussian_drive(2.0, t0_ns=0.01, fwhm_ns=0.004),
        cw_drive(0.5, detuning_ghz=10.0),
    ]
    obs = {
        "n": photon_number_operator(SYS1.layout),
        "p_e": dot_population_operator(SYS1.layout),
    }
    rho0 = vacuum_dm(SYS1)
    batched = master_expectations(rho0, SYS1, drives, grid, obs)
    assert batched["n"].shape == (3, grid.n_points)
    for j, drive in enumerate(drives):
        states = evolve_master(rho0, SYS1, drive, grid)
        n_single = np.einsum("tij,ji->t", states, obs["n"]).real
        assert np.abs(batched["n"][j] - n_single).max() < 1e-13


def test_propagation_input_validation():
    grid = TimeGrid(0.0, 0.02, 400)
    rho0 = vacuum_dm(SYS1)
    obs = {"n": photon_number_operator(SYS1.layout)}
    with pytest.raises(ValueError, match="non-empty"):
        master_expectations(rho0, SYS1, [], grid, obs)
    with pytest.raises(ValueError, match="rho0"):
        evolve_master(np.eye(4, dtype=complex) / 4.0, SYS1, no_drive(), grid)
    coarse = TimeGrid(0.0, 1.0, 10)
    with pytest.raises(ValueError, match="stability"):
        evolve_master(rho0, SYS1, no_drive(), coarse)


def test_invariant_check_rejects_bad_initial_state():
    grid = TimeGrid(0.0, 0.01, 200)
    rho0 = vacuum_dm(SYS1) * 0.5  # deliberately trace-deficient
    with pytest.raises(InvariantViolation, match="trace"):
        evolve_master(rho0, SYS1, no_drive(), grid)


def test_polariton_frozen_values():
    pair = polariton_eigenfrequencies(SYS1, 0.0, 0.0)
    assert pair.omega_plus.real == pytest.approx(21.073620951322059, rel=1e-12)
    assert pair.omega_minus.real == pytest.approx(-21.073620951322059, rel=1e-12)
    assert pair.omega_plus.imag == pytest.approx(-13.55, rel=1e-12)
    assert pair.omega_minus.imag == pytest.approx(-13.55, rel=1e-12)
    assert pair.splitting_ghz == pytest.approx(42.14724190264412, rel=1e-12)
    assert polariton_eigenfrequencies(SYS2, 0.0, 0.0).splitting_ghz == pytest.approx(
        32.60904782418524, rel=1e-12
    )


def test_polariton_large_detuning_limits():
    # far off resonance the dressed modes return to the bare ones
    pair = polariton_eigenfrequencies(SYS1, 0.0, 400.0)
    bare = sorted([0.0, 400.0])
    dressed = sorted([pair.omega_plus.real, pair.omega_minus.real])
    assert np.allclose(dressed, bare, atol=2.0)
    imags = sorted([pair.omega_plus.imag, pair.omega_minus.imag])
    assert np.allclose(imags, sorted([-27.0, -0.1]), atol=0.2)
