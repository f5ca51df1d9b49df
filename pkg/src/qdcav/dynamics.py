"""Jaynes-Cummings dynamics of the driven dot+cavity system.

Everything lives in the frame rotating at the (signal) drive frequency.
Parameters are ordinary frequencies in GHz and times are in ns; assembly
multiplies by 2*pi, so a 1 GHz detuning advances phase at 2*pi rad/ns.

The Hamiltonian is

    H(t) = 2 pi delta_c a~a + 2 pi delta_d s~s
         + i 2 pi g (a~s - a s~)
         + i sqrt(2 pi kappa) (conj(Omega(t)) a - Omega(t) a~)

with s the dot lowering operator and Omega(t) the complex drive amplitude
in sqrt(1/ns) (for real Omega the drive term is the familiar
i sqrt(kappa) Omega (a - a~) form). Collapse operators carry the full
factor-of-two convention: sqrt(2*2 pi kappa) a, sqrt(2*2 pi gamma) s and
sqrt(2*2 pi gamma_d) s~s, so energy leaves the cavity at rate 2*2 pi kappa.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .drive import DriveSpec, evaluate_drive, intensity_fwhm_to_sigma, no_drive
from .hilbert import (
    HilbertLayout,
    InvariantViolation,
    annihilation_operator,
    dot_lowering_operator,
    embed,
    validate_density_matrix,
)

TWO_PI = 2.0 * math.pi

# Propagation contract for density matrices; violations abort the run.
TRACE_TOL = 1e-8
HERM_TOL = 1e-9
EIG_FLOOR = -1e-7
PURITY_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Dot+cavity rates (GHz) and the Fock truncation.

    delta_c and delta_d are cavity and dot detunings from the rotating
    frame. gamma_d is the pure-dephasing rate of the dot.
    """

    g: float
    kappa: float
    gamma: float
    gamma_d: float = 0.0
    delta_c: float = 0.0
    delta_d: float = 0.0
    n_max: int = 7

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "gamma_d"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @property
    def layout(self) -> HilbertLayout:
        return HilbertLayout(self.n_max)

    @property
    def is_strongly_coupled(self) -> bool:
        return self.g**2 > ((self.kappa - self.gamma) / 2.0) ** 2


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid; the integrator lands exactly on its points."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.t_end > self.t_start:
            raise ValueError(f"need t_end > t_start, got [{self.t_start}, {self.t_end}]")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_points)


def max_stable_dt(params: SystemParams, drive: DriveSpec | None = None) -> float:
    """Largest step the fixed-step integrator accepts, 0.02 / f_max ns.

    f_max is the fastest rate in play (GHz): couplings, decay rates,
    detunings, drive carrier offsets and the peak drive-coupling rate.
    This is a stability bound; accuracy is the halving-convergence test's
    job and usually wants a smaller step.
    """
    rates = [
        params.g,
        params.kappa,
        params.gamma,
        params.gamma_d,
        abs(params.delta_c),
        abs(params.delta_d),
    ]
    if drive is not None:
        amp_total = 0.0
        for c in drive.components:
            rates.append(abs(c.detuning_ghz))
            amp_total += c.amplitude
        # peak coupling sqrt(2 pi kappa) * Omega in rad/ns, expressed in GHz
        rates.append(math.sqrt(TWO_PI * params.kappa) * amp_total / TWO_PI)
    f_max = max(rates)
    if f_max == 0.0:
        return math.inf
    return 0.02 / f_max


def _static_hamiltonian(params: SystemParams) -> np.ndarray:
    layout = params.layout
    a = embed(annihilation_operator(params.n_max), "cavity", layout)
    s = embed(dot_lowering_operator(), "dot", layout)
    number = a.conj().T @ a
    population = s.conj().T @ s
    h = TWO_PI * params.delta_c * number + TWO_PI * params.delta_d * population
    h = h + 1j * TWO_PI * params.g * (a.conj().T @ s - a @ s.conj().T)
    return h


def drive_coupling_operator(params: SystemParams) -> np.ndarray:
    """A = i sqrt(2 pi kappa) a, so H(t) = H_0 + conj(Omega) A + Omega A~."""
    layout = params.layout
    a = embed(annihilation_operator(params.n_max), "cavity", layout)
    return 1j * math.sqrt(TWO_PI * params.kappa) * a


def build_hamiltonian(params: SystemParams, omega: complex) -> np.ndarray:
    """H at one instant, for a fixed complex drive amplitude Omega."""
    a_c = drive_coupling_operator(params)
    return _static_hamiltonian(params) + np.conj(omega) * a_c + omega * a_c.conj().T


def collapse_operators(params: SystemParams) -> list[np.ndarray]:
    """Collapse operators with nonzero rate; zero-rate channels are omitted.

    Dropping zero-rate channels keeps the trajectory solver from carrying
    dead jump channels; the master equation is unaffected.
    """
    layout = params.layout
    a = embed(annihilation_operator(params.n_max), "cavity", layout)
    s = embed(dot_lowering_operator(), "dot", layout)
    ops = []
    if params.kappa > 0:
        ops.append(math.sqrt(2.0 * TWO_PI * params.kappa) * a)
    if params.gamma > 0:
        ops.append(math.sqrt(2.0 * TWO_PI * params.gamma) * s)
    if params.gamma_d > 0:
        ops.append(math.sqrt(2.0 * TWO_PI * params.gamma_d) * (s.conj().T @ s))
    return ops


def lindblad_rhs(h: np.ndarray, collapse_ops: list[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """d rho / dt for one state; the propagators use a batched equivalent."""
    out = -1j * (h @ rho - rho @ h)
    for c in collapse_ops:
        cd = c.conj().T
        cdc = cd @ c
        out = out + c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
    return out


def liouvillian_matrix(h: np.ndarray, collapse_ops: list[np.ndarray]) -> np.ndarray:
    """Dense superoperator on row-major vec(rho), d^2 x d^2."""
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    liou = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in collapse_ops:
        cdc = c.conj().T @ c
        liou += np.kron(c, c.conj())
        liou -= 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return liou


def steady_state(params: SystemParams, omega: complex) -> np.ndarray:
    """Stationary density matrix under a constant drive amplitude.

    Solves L(rho) = 0 with one row of the vectorized Liouvillian replaced
    by the trace constraint, then symmetrizes rounding-level asymmetry.
    """
    h = build_hamiltonian(params, omega)
    liou = liouvillian_matrix(h, collapse_operators(params))
    d = h.shape[0]
    lhs = liou.copy()
    rhs = np.zeros(d * d, dtype=complex)
    # trace row replaces the first equation; the dropped row is redundant
    lhs[0, :] = 0.0
    lhs[0, :: d + 1] = 1.0
    rhs[0] = 1.0
    vec = np.linalg.solve(lhs, rhs)
    residual = np.linalg.norm(liou @ vec)
    if not residual <= 1e-10 * np.linalg.norm(liou):
        raise InvariantViolation(
            f"steady-state residual {residual:.3e} exceeds 1e-10 * |L|"
        )
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    validate_density_matrix(rho, TRACE_TOL, HERM_TOL, EIG_FLOOR, PURITY_TOL, "steady state")
    return rho


class _DriveTable:
    """Batched Omega_j(t) evaluation for a list of drive specs."""

    def __init__(self, drives: list[DriveSpec]):
        self.n = len(drives)
        cols, amps, dets, phases, t0s, inv4s2 = [], [], [], [], [], []
        for j, spec in enumerate(drives):
            for c in spec.components:
                cols.append(j)
                amps.append(c.amplitude)
                dets.append(c.detuning_ghz)
                phases.append(c.phase_rad)
                t0s.append(c.t0_ns)
                if c.kind == "gaussian":
                    sigma = intensity_fwhm_to_sigma(c.fwhm_ns)
                    inv4s2.append(1.0 / (4.0 * sigma**2))
                else:
                    inv4s2.append(0.0)  # exp(0) = 1 recovers the cw envelope
        self.col = np.asarray(cols, dtype=np.intp)
        self.amp = np.asarray(amps, dtype=float)
        self.det = np.asarray(dets, dtype=float)
        self.phase = np.asarray(phases, dtype=float)
        self.t0 = np.asarray(t0s, dtype=float)
        self.inv4s2 = np.asarray(inv4s2, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        if self.col.size == 0:
            return np.zeros(self.n, dtype=complex)
        vals = self.amp * np.exp(
            -((t - self.t0) ** 2) * self.inv4s2
            + 1j * (self.phase - TWO_PI * self.det * t)
        )
        out = np.bincount(self.col, weights=vals.real, minlength=self.n).astype(complex)
        out += 1j * np.bincount(self.col, weights=vals.imag, minlength=self.n)
        return out


def _check_batch(rho: np.ndarray, eye: np.ndarray, step: int, t: float) -> None:
    """Density-matrix invariants for a (B, d, d) stack; raises on violation."""
    tr_err = np.abs(np.einsum("bii->b", rho) - 1.0)
    if tr_err.max() > TRACE_TOL:
        b = int(tr_err.argmax())
        raise InvariantViolation(
            f"trace defect {tr_err[b]:.3e} at step {step} (t={t:.6g} ns, run {b})"
        )
    rho_dag = rho.conj().swapaxes(-1, -2)
    herm = np.abs(rho - rho_dag).reshape(rho.shape[0], -1).max(axis=1)
    if herm.max() > HERM_TOL:
        b = int(herm.argmax())
        raise InvariantViolation(
            f"hermiticity defect {herm[b]:.3e} at step {step} (t={t:.6g} ns, run {b})"
        )
    purity = np.einsum("bij,bji->b", rho, rho).real
    if purity.max() > 1.0 + PURITY_TOL:
        b = int(purity.argmax())
        raise InvariantViolation(
            f"purity {purity[b]:.12f} exceeds 1 at step {step} (t={t:.6g} ns, run {b})"
        )
    sym = 0.5 * (rho + rho_dag)
    try:
        np.linalg.cholesky(sym - EIG_FLOOR * eye)
    except np.linalg.LinAlgError:
        # boundary cases land here too; settle them with the exact spectrum
        for b in range(rho.shape[0]):
            low = float(np.linalg.eigvalsh(sym[b]).min())
            if low < EIG_FLOOR:
                raise InvariantViolation(
                    f"negative eigenvalue {low:.3e} at step {step} (t={t:.6g} ns, run {b})"
                ) from None


def _run_master(
    rho0: np.ndarray,
    params: SystemParams,
    drives: list[DriveSpec],
    grid: TimeGrid,
    observables: dict[str, np.ndarray] | None = None,
    store: bool = False,
    check: bool = True,
):
    """Fixed-step classical RK4 on a batch of runs sharing one initial state.

    Returns (obs, states): obs maps observable name to a (B, n_points) real
    array (None if no observables were requested); states is the
    (n_points, B, d, d) history (None unless store). The batch dimension
    covers runs that differ only in their drive.
    """
    n_batch = len(drives)
    if n_batch == 0:
        raise ValueError("drives must be non-empty")
    d = params.layout.dim
    if rho0.shape != (d, d):
        raise ValueError(f"rho0 must be {d}x{d} for n_max={params.n_max}, got {rho0.shape}")
    gate = min(max_stable_dt(params, spec) for spec in drives)
    if grid.dt > gate * (1.0 + 1e-12):
        raise ValueError(
            f"grid dt {grid.dt:.3e} ns violates the stability gate {gate:.3e} ns"
        )

    h0 = _static_hamiltonian(params)
    a_c = drive_coupling_operator(params)
    a_cd = a_c.conj().T
    cops = collapse_operators(params)
    cops_dag = [c.conj().T for c in cops]
    half_sum = sum((cd @ c for c, cd in zip(cops, cops_dag)), np.zeros((d, d), dtype=complex))
    h_left = h0 - 0.5j * half_sum
    h_right = h_left.conj().T
    eye = np.eye(d, dtype=complex)

    def rhs(rho, w):
        dmat = w.conj()[:, None, None] * a_c + w[:, None, None] * a_cd
        out = -1j * ((h_left + dmat) @ rho - rho @ (h_right + dmat))
        for c, cd in zip(cops, cops_dag):
            out += c @ rho @ cd
        return out

    obs_names = list(observables) if observables else []
    obs_stack = np.stack([observables[k] for k in obs_names]) if obs_names else None
    obs_out = (
        np.empty((len(obs_names), n_batch, grid.n_points)) if obs_names else None
    )
    states = np.empty((grid.n_points, n_batch, d, d), dtype=complex) if store else None

    def record(rho, k):
        if states is not None:
            states[k] = rho
        if obs_out is not None:
            obs_out[:, :, k] = np.einsum("oij,bji->ob", obs_stack, rho).real

    rho = np.broadcast_to(rho0.astype(complex), (n_batch, d, d)).copy()
    times = grid.times
    dt = grid.dt
    table = _DriveTable(drives)
    if check:
        _check_batch(rho, eye, 0, times[0])
    record(rho, 0)
    w_t = table(times[0])
    for k in range(grid.n_steps):
        t = times[k]
        w_mid = table(t + 0.5 * dt)
        w_end = table(t + dt)
        k1 = rhs(rho, w_t)
        k2 = rhs(rho + (0.5 * dt) * k1, w_mid)
        k3 = rhs(rho + (0.5 * dt) * k2, w_mid)
        k4 = rhs(rho + dt * k3, w_end)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        w_t = w_end
        if check:
            _check_batch(rho, eye, k + 1, times[k + 1])
        record(rho, k + 1)
    obs_dict = (
        {name: obs_out[i] for i, name in enumerate(obs_names)} if obs_out is not None else None
    )
    return obs_dict, states


def evolve_master(
    rho0: np.ndarray,
    params: SystemParams,
    drive: DriveSpec | None,
    grid: TimeGrid,
    check: bool = True,
) -> np.ndarray:
    """Propagate one density matrix; returns the (n_points, d, d) history.

    The grid step must satisfy max_stable_dt. Every returned state is held
    to the density-matrix invariants; a violation raises InvariantViolation
    naming the offending step.
    """
    if drive is None:
        drive = no_drive()
    _, states = _run_master(rho0, params, [drive], grid, store=True, check=check)
    return states[:, 0]


def master_expectations(
    rho0: np.ndarray,
    params: SystemParams,
    drives: list[DriveSpec],
    grid: TimeGrid,
    observables: dict[str, np.ndarray],
    check: bool = True,
) -> dict[str, np.ndarray]:
    """Expectation values over a batch of drives, without storing states.

    Returns {name: (len(drives), n_points) array}. All runs share rho0 and
    the grid; the batch is integrated in lockstep, which is how the sweep
    scenarios stay affordable.
    """
    obs, _ = _run_master(rho0, params, drives, grid, observables=observables, check=check)
    return obs


@dataclass(frozen=True)
class PolaritonPair:
    """The two dressed-mode complex frequencies, in GHz."""

    omega_plus: complex
    omega_minus: complex

    @property
    def splitting_ghz(self) -> float:
        return self.omega_plus.real - self.omega_minus.real


def polariton_eigenfrequencies(
    params: SystemParams, omega_r: float, omega_d: float
) -> PolaritonPair:
    """Coupled-mode frequencies for cavity at omega_r and dot at omega_d.

    Evaluates, with the principal square root and delta = omega_d - omega_r,

        omega_pm = (omega_r + omega_d)/2 - i (kappa + gamma)/2
                   +- sqrt(g^2 + (delta - i (kappa - gamma))^2 / 4)

    all in GHz. Off resonance the principal root pairs the imaginary parts
    in the opposite order from the bare-mode limit; the real and imaginary
    parts as multisets are the invariant quantities.
    """
    delta = omega_d - omega_r
    root = cmath.sqrt(
        params.g**2 + 0.25 * (delta - 1j * (params.kappa - params.gamma)) ** 2
    )
    center = 0.5 * (omega_r + omega_d) - 0.5j * (params.kappa + params.gamma)
    return PolaritonPair(center + root, center - root)
