"""Quantum-trajectory (Monte Carlo wavefunction) solver.

Each trajectory integrates the non-Hermitian Schroedinger equation with
H_eff = H(t) - (i/2) sum_k C_k~ C_k using the same fixed-step RK4 and time
grid as the master-equation path. The squared norm decays monotonically;
when it crosses a pre-drawn uniform threshold a jump channel is selected
with probability proportional to <psi| C_k~ C_k |psi>, C_k is applied, the
state renormalized and a fresh threshold drawn. The jump is applied at the
grid step where the crossing is detected (first order in dt); the recorded
jump time refines the crossing within the step by log-linear interpolation
of the norm, which is exact for eigenstate decay.

Ensembles average trajectory observables in trajectory-index order with
pairwise summation, so the estimate is bit-identical regardless of worker
count. Per-trajectory generators are seeded from (master_seed, index).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .drive import DriveSpec, no_drive
from .dynamics import (
    SystemParams,
    TimeGrid,
    _DriveTable,
    _static_hamiltonian,
    collapse_operators,
    drive_coupling_operator,
    max_stable_dt,
)
from .series import TimeSeries

# Trajectories are integrated in fixed-size column batches. The size is a
# performance knob only, but it must stay constant: changing it reorders
# floating-point work and breaks bit-reproducibility of archived runs.
BATCH_SIZE = 128


@dataclass(frozen=True)
class TrajectoryRecord:
    """One trajectory: normalized states on the grid plus its jump log."""

    times: np.ndarray
    states: np.ndarray  # (n_points, dim), unit norm at every point
    jump_times: np.ndarray
    jump_channels: np.ndarray
    seed: object


@dataclass(frozen=True)
class EnsembleEstimate:
    """Trajectory-averaged observables with per-point standard errors."""

    mean: TimeSeries
    stderr: TimeSeries
    n_traj: int
    master_seed: int
    jumps: list | None = None


def trajectory_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for trajectory `index` of an ensemble; stable and collision-free."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


def _run_batch(
    psi0: np.ndarray,
    params: SystemParams,
    drive: DriveSpec,
    grid: TimeGrid,
    rngs: list,
    obs_stack: np.ndarray | None,
    store: bool,
    collect_jumps: bool,
):
    """Integrate one batch of trajectories in lockstep.

    psi0 is shared, (dim,). Returns (obs, states, jumps) with obs shaped
    (n_obs, n_batch, n_points), states (n_points, dim) for a single
    trajectory when store is set, and jumps a per-trajectory list of
    (time, channel_index) pairs.
    """
    d = params.layout.dim
    n_batch = len(rngs)
    gate = max_stable_dt(params, drive)
    if grid.dt > gate * (1.0 + 1e-12):
        raise ValueError(
            f"grid dt {grid.dt:.3e} ns violates the stability gate {gate:.3e} ns"
        )

    h0 = _static_hamiltonian(params)
    a_c = drive_coupling_operator(params)
    a_cd = a_c.conj().T
    cops = collapse_operators(params)
    half_sum = sum((c.conj().T @ c for c in cops), np.zeros((d, d), dtype=complex))
    h_nh0 = h0 - 0.5j * half_sum
    table = _DriveTable([drive])

    def h_nh(w: complex) -> np.ndarray:
        return h_nh0 + np.conj(w) * a_c + w * a_cd

    psi = np.tile(psi0.astype(complex)[:, None], (1, n_batch))
    norm2 = np.full(n_batch, float(np.vdot(psi0, psi0).real))
    thresholds = np.array([rng.uniform() for rng in rngs])
    jumps = [[] for _ in range(n_batch)] if collect_jumps else None

    times = grid.times
    dt = grid.dt
    obs = np.empty((obs_stack.shape[0], n_batch, grid.n_points)) if obs_stack is not None else None
    states = np.empty((grid.n_points, d), dtype=complex) if store else None

    def record(k):
        psin = psi / np.sqrt(norm2)
        if obs is not None:
            obs[:, :, k] = np.einsum("ib,oij,jb->ob", psin.conj(), obs_stack, psin).real
        if states is not None:
            states[k] = psin[:, 0]

    record(0)
    w_t = complex(table(times[0])[0])
    for k in range(grid.n_steps):
        t = times[k]
        w_mid = complex(table(t + 0.5 * dt)[0])
        w_end = complex(table(t + dt)[0])
        m_t = -1j * h_nh(w_t)
        m_mid = -1j * h_nh(w_mid)
        m_end = -1j * h_nh(w_end)
        k1 = m_t @ psi
        k2 = m_mid @ (psi + (0.5 * dt) * k1)
        k3 = m_mid @ (psi + (0.5 * dt) * k2)
        k4 = m_end @ (psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        w_t = w_end
        new_norm2 = np.einsum("ib,ib->b", psi.conj(), psi).real
        crossed = np.flatnonzero(new_norm2 <= thresholds)
        for b in crossed:
            b = int(b)
            before, after, r = norm2[b], new_norm2[b], thresholds[b]
            if after < before and r < before:
                frac = np.log(before / r) / np.log(before / after)
            else:
                frac = 1.0  # degenerate norms; place at the step end
            t_jump = t + dt * min(max(frac, 0.0), 1.0)
            column = psi[:, b]
            applied = [c @ column for c in cops]
            weights = np.array([float(np.vdot(v, v).real) for v in applied])
            total = weights.sum()
            if total <= 0.0:
                raise RuntimeError(
                    f"zero total jump rate at a forced jump (t={t + dt:.6g} ns)"
                )
            u = rngs[b].uniform() * total
            channel = int(np.searchsorted(np.cumsum(weights), u, side="right"))
            channel = min(channel, len(cops) - 1)
            psi[:, b] = applied[channel] / np.sqrt(weights[channel])
            new_norm2[b] = 1.0
            thresholds[b] = rngs[b].uniform()
            if collect_jumps:
                jumps[b].append((t_jump, channel))
        norm2 = new_norm2
        record(k + 1)
    return obs, states, jumps


def run_trajectory(
    psi0: np.ndarray,
    params: SystemParams,
    drive: DriveSpec | None,
    grid: TimeGrid,
    seed,
) -> TrajectoryRecord:
    """Propagate a single trajectory; stores the normalized state history."""
    if drive is None:
        drive = no_drive()
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"psi0 must be normalized, |psi0| = {norm:.12f}")
    rng = np.random.default_rng(seed)
    _, states, jumps = _run_batch(
        psi0, params, drive, grid, [rng], obs_stack=None, store=True, collect_jumps=True
    )
    jump_list = jumps[0]
    return TrajectoryRecord(
        times=grid.times,
        states=states,
        jump_times=np.array([t for t, _ in jump_list], dtype=float),
        jump_channels=np.array([c for _, c in jump_list], dtype=int),
        seed=seed,
    )


def _chunk_payload(args):
    """Worker entry: integrate trajectories [start, stop) of an ensemble."""
    (psi0, params, drive, grid, master_seed, start, stop, obs_stack, collect_jumps) = args
    rngs = [np.random.default_rng(trajectory_seed(master_seed, i)) for i in range(start, stop)]
    obs, _, jumps = _run_batch(
        psi0, params, drive, grid, rngs, obs_stack, store=False, collect_jumps=collect_jumps
    )
    return obs, jumps


def ensemble_expectation(
    psi0: np.ndarray,
    params: SystemParams,
    drive: DriveSpec | None,
    grid: TimeGrid,
    observables: dict[str, np.ndarray],
    n_traj: int,
    master_seed: int,
    n_workers: int = 1,
    collect_jumps: bool = False,
) -> EnsembleEstimate:
    """Mean and standard error of observables over n_traj trajectories.

    Deterministic in (master_seed, inputs): trajectory i draws from its own
    generator seeded by (master_seed, i), batches are cut at a fixed size
    and the reduction runs in index order, so n_workers changes wall time
    only. stderr is the sample standard deviation over trajectories divided
    by sqrt(n_traj); all-zero for n_traj = 1.
    """
    if drive is None:
        drive = no_drive()
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"psi0 must be normalized, |psi0| = {norm:.12f}")
    names = list(observables)
    obs_stack = np.stack([observables[k] for k in names])

    bounds = [(s, min(s + BATCH_SIZE, n_traj)) for s in range(0, n_traj, BATCH_SIZE)]
    payloads = [
        (psi0, params, drive, grid, master_seed, start, stop, obs_stack, collect_jumps)
        for start, stop in bounds
    ]
    if n_workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_chunk_payload, payloads))
    else:
        results = [_chunk_payload(p) for p in payloads]

    all_obs = np.concatenate([obs for obs, _ in results], axis=1)  # (n_obs, n_traj, n_pts)
    mean = all_obs.mean(axis=1)
    if n_traj > 1:
        stderr = all_obs.std(axis=1, ddof=1) / np.sqrt(n_traj)
    else:
        stderr = np.zeros_like(mean)
    jumps = None
    if collect_jumps:
        jumps = []
        for _, chunk_jumps in results:
            jumps.extend(chunk_jumps)
    times = grid.times
    return EnsembleEstimate(
        mean=TimeSeries(times, {k: mean[i] for i, k in enumerate(names)}),
        stderr=TimeSeries(times, {k: stderr[i] for i, k in enumerate(names)}),
        n_traj=n_traj,
        master_seed=master_seed,
        jumps=jumps,
    )
