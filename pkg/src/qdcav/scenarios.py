"""Experiment reproductions built on the solvers.

Each function returns plain TimeSeries/SweepCurve records; file output is
the CLI's job. Rates follow the package convention (ordinary GHz, time in
ns), transmission is reported as the photon flux 2*(2*pi*kappa)*<a'a> in
1/ns.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .drive import (
    DriveComponent,
    DriveSpec,
    OpticalCalibration,
    cw_drive,
    cw_power_to_amplitude,
    intensity_fwhm_to_sigma,
    no_drive,
    phase_grid,
    pulsed_power_to_peak_amplitude,
)
from .dynamics import (
    TWO_PI,
    SystemParams,
    TimeGrid,
    master_expectations,
    max_stable_dt,
    polariton_eigenfrequencies,
    steady_state,
)
from .hilbert import dot_population_operator, photon_number_operator
from .series import SweepCurve, TimeSeries
from .trajectories import ensemble_expectation


def transmission(series: TimeSeries, kappa: float) -> TimeSeries:
    """Convert a photon-number series to the output flux T = 2*(2*pi*kappa)*n."""
    if "n" not in series.channels:
        raise ValueError("series lacks the 'n' channel")
    t_chan = 2.0 * TWO_PI * kappa * series.channels["n"]
    return TimeSeries(series.times, {"T": t_chan})


def differential_transmission(
    t_s: TimeSeries, t_c: TimeSeries, t_sc: TimeSeries
) -> TimeSeries:
    """Nonlinear response T(s+c) - T(s) - T(c) on a shared grid."""
    if not (
        t_s.times.shape == t_c.times.shape == t_sc.times.shape
        and np.array_equal(t_s.times, t_c.times)
        and np.array_equal(t_s.times, t_sc.times)
    ):
        raise ValueError("time grids differ between the three runs")
    out = {}
    for name in t_sc.channels:
        if name in t_s.channels and name in t_c.channels:
            out[name] = t_sc.channels[name] - t_s.channels[name] - t_c.channels[name]
    if not out:
        raise ValueError("no common channels to difference")
    return TimeSeries(t_sc.times, out)


def _shifted(params: SystemParams, detuning_ghz: float) -> SystemParams:
    # scanning the laser moves both system detunings the opposite way
    return dataclasses.replace(
        params,
        delta_c=params.delta_c - detuning_ghz,
        delta_d=params.delta_d - detuning_ghz,
    )


def _steady_flux(params: SystemParams, omega: complex) -> float:
    rho = steady_state(params, omega)
    n_op = photon_number_operator(params.layout)
    return 2.0 * TWO_PI * params.kappa * float(np.trace(n_op @ rho).real)


def spectrum_scan(
    params: SystemParams,
    omega0: float,
    detuning_grid,
    check_weak_drive: bool = False,
) -> SweepCurve:
    """Steady transmission versus laser detuning.

    check_weak_drive reruns at half drive and requires y/omega0^2 stable to
    1e-3; leave it off for deliberately saturating scans.
    """
    det = np.asarray(detuning_grid, dtype=float)
    y = np.array([_steady_flux(_shifted(params, d), omega0) for d in det])
    if check_weak_drive:
        y_half = np.array(
            [_steady_flux(_shifted(params, d), omega0 / 2.0) for d in det]
        )
        scale = np.max(np.abs(y)) / omega0**2
        rel = np.max(np.abs(y / omega0**2 - y_half / (omega0 / 2.0) ** 2)) / scale
        if rel >= 1e-3:
            raise ValueError(
                f"drive is outside the linear regime (halving test {rel:.2e})"
            )
    return SweepCurve("detuning_ghz", det, {"T": y})


def pl_decay(
    params: SystemParams,
    tau_rise_ns: float,
    irf_fwhm_ns: float,
    grid: TimeGrid,
) -> TimeSeries:
    """Emission after an excited-dot start, filtered by relaxation and IRF.

    The dot is initialized in its excited state with an empty cavity and
    evolves undriven. The cavity output 2*(2*pi*kappa)*n(t) is convolved
    with the carrier relaxation kernel (1/tau)exp(-t/tau) and a Gaussian
    instrument response; the population channel gets the relaxation kernel
    only. Post-hoc convolution is exact here because the single-excitation
    dynamics are linear in the source.
    """
    if tau_rise_ns < 0:
        raise ValueError(f"tau_rise_ns must be >= 0, got {tau_rise_ns}")
    layout = params.layout
    psi0 = layout.basis_state(1, 0)
    rho0 = np.outer(psi0, psi0.conj())
    obs = {
        "n": photon_number_operator(layout),
        "p_e": dot_population_operator(layout),
    }
    res = master_expectations(rho0, params, [no_drive()], grid, obs)
    t = grid.times
    intensity = 2.0 * TWO_PI * params.kappa * res["n"][0]
    population = res["p_e"][0]

    if tau_rise_ns > 0:
        kernel = np.exp(-t / tau_rise_ns)
        kernel /= kernel.sum()
        intensity = np.convolve(intensity, kernel)[: t.size]
        population = np.convolve(population, kernel)[: t.size]
    if irf_fwhm_ns > 0:
        sigma = irf_fwhm_ns / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        half = int(np.ceil(5.0 * sigma / grid.dt))
        tk = np.arange(-half, half + 1) * grid.dt
        kernel = np.exp(-0.5 * (tk / sigma) ** 2)
        kernel /= kernel.sum()
        intensity = np.convolve(intensity, kernel)[half : half + t.size]
    return TimeSeries(t, {"I": intensity, "p_e": population})


def decay_time(times, values, stop_fraction: float = 0.6) -> float:
    """Characteristic decay time from a log-linear fit of the falling flank.

    Fits from the curve maximum down to stop_fraction of the maximum, the
    bright stretch a streak-camera readout resolves before the signal
    buries itself in background.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if not 0.0 < stop_fraction < 1.0:
        raise ValueError(f"stop_fraction must be in (0, 1), got {stop_fraction}")
    k_peak = int(np.argmax(y))
    tail = y[k_peak:]
    below = np.flatnonzero(tail <= stop_fraction * y[k_peak])
    if below.size == 0 or np.any(tail <= 0.0):
        raise ValueError("curve does not decay cleanly past the requested fraction")
    k_stop = k_peak + int(below[0])
    slope = np.polyfit(t[k_peak : k_stop + 1], np.log(y[k_peak : k_stop + 1]), 1)[0]
    if slope >= 0:
        raise ValueError("falling flank has a non-negative slope")
    return -1.0 / slope


def _default_switch_grid(
    params: SystemParams, drives, t_end: float
) -> TimeGrid:
    gate = min(max_stable_dt(params, d) for d in drives)
    return TimeGrid(0.0, t_end, int(np.ceil(t_end / (gate / 3.0))))


def _pooled_moments(means, stderrs, counts):
    """Combine sub-ensemble means/stderrs into overall mean and stderr.

    stderr_j is the sample deviation over the n_j trajectories divided by
    sqrt(n_j); the pooled value reconstructs the second moment so the
    result is exactly what one ensemble over all trajectories would report.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    mean = sum(n_j * m for n_j, m in zip(counts, means)) / total
    ss = sum(
        (n_j - 1.0) * n_j * se**2 + n_j * (m - mean) ** 2
        for n_j, m, se in zip(counts, means, stderrs)
    )
    return mean, np.sqrt(ss / (total - 1.0) / total)


def cw_pulse_switch(
    params: SystemParams,
    cw_power_nw: float,
    pulse_power_nw: float,
    cal: OpticalCalibration,
    control_detuning_ghz: float = 0.0,
    pulse_center_ns: float = 0.3,
    pulse_fwhm_ns: float = 0.040,
    k_phases: int = 8,
    grid: TimeGrid | None = None,
    solver: str = "master",
    n_traj: int = 2000,
    master_seed: int | None = None,
    n_workers: int = 1,
) -> dict:
    """Signal-only, control-only and combined runs plus their difference.

    Returns a dict with keys "signal", "control", "both", "delta"; each
    entry carries channels n and T (and n_stderr for the trajectory
    solver). The two beams come from independent lasers, so the combined
    run is averaged over k_phases relative phases; this cancels the linear
    interference term exactly and leaves delta purely nonlinear. The runs
    start from vacuum so the cw transient is part of the record; place
    pulse_center_ns well after it.
    """
    if cw_power_nw < 0 or pulse_power_nw < 0:
        raise ValueError("powers must be >= 0")
    amp_s = cw_power_to_amplitude(cw_power_nw, cal)
    amp_c = pulsed_power_to_peak_amplitude(pulse_power_nw, cal, pulse_fwhm_ns)
    signal = DriveComponent("cw", amp_s)

    def control(phase: float) -> DriveComponent:
        return DriveComponent(
            "gaussian",
            amp_c,
            detuning_ghz=control_detuning_ghz,
            phase_rad=phase,
            t0_ns=pulse_center_ns,
            fwhm_ns=pulse_fwhm_ns,
        )

    phases = phase_grid(k_phases)
    drives = [DriveSpec((signal,)), DriveSpec((control(0.0),))]
    drives += [DriveSpec((signal, control(ph))) for ph in phases]
    if grid is None:
        grid = _default_switch_grid(params, drives, 2.0 * pulse_center_ns)

    layout = params.layout
    obs = {"n": photon_number_operator(layout)}
    out = {}
    if solver == "master":
        rho0 = np.zeros((layout.dim, layout.dim), dtype=complex)
        rho0[0, 0] = 1.0
        n_runs = master_expectations(rho0, params, drives, grid, obs)["n"]
        for name, n_t in zip(("signal", "control"), n_runs[:2]):
            out[name] = TimeSeries(
                grid.times,
                {"n": n_t, "T": 2.0 * TWO_PI * params.kappa * n_t},
            )
        n_both = n_runs[2:].mean(axis=0)
        out["both"] = TimeSeries(
            grid.times,
            {"n": n_both, "T": 2.0 * TWO_PI * params.kappa * n_both},
        )
    elif solver == "trajectories":
        if master_seed is None:
            raise ValueError("master_seed is required for the trajectory solver")
        if n_traj < 2 * k_phases:
            raise ValueError(
                f"n_traj={n_traj} too small to split over {k_phases} phases"
            )
        psi0 = layout.basis_state(0, 0)

        def run(drive, n, seed):
            return ensemble_expectation(
                psi0, params, drive, grid, obs,
                n_traj=n, master_seed=seed, n_workers=n_workers,
            )

        for offset, name in enumerate(("signal", "control")):
            est = run(drives[offset], n_traj, master_seed + offset)
            n_t = est.mean.channels["n"]
            out[name] = TimeSeries(
                grid.times,
                {
                    "n": n_t,
                    "T": 2.0 * TWO_PI * params.kappa * n_t,
                    "n_stderr": est.stderr.channels["n"],
                },
            )
        # even split of the trajectory budget over the relative phases
        counts = [
            n_traj // k_phases + (1 if j < n_traj % k_phases else 0)
            for j in range(k_phases)
        ]
        ests = [
            run(drive, n, master_seed + 2 + j)
            for j, (drive, n) in enumerate(zip(drives[2:], counts))
        ]
        n_both, se_both = _pooled_moments(
            [e.mean.channels["n"] for e in ests],
            [e.stderr.channels["n"] for e in ests],
            counts,
        )
        out["both"] = TimeSeries(
            grid.times,
            {
                "n": n_both,
                "T": 2.0 * TWO_PI * params.kappa * n_both,
                "n_stderr": se_both,
            },
        )
    else:
        raise ValueError(f"unknown solver {solver!r}")

    delta = {
        "n": out["both"].channels["n"]
        - out["signal"].channels["n"]
        - out["control"].channels["n"],
    }
    delta["T"] = 2.0 * TWO_PI * params.kappa * delta["n"]
    if solver == "trajectories":
        delta["n_stderr"] = np.sqrt(
            sum(out[k].channels["n_stderr"] ** 2 for k in ("signal", "control", "both"))
        )
    out["delta"] = TimeSeries(grid.times, delta)
    return out


def two_pulse_sweep(
    params: SystemParams,
    per_pulse_power_nw: float,
    cal: OpticalCalibration,
    fwhm_ns: float,
    delays,
    gamma_d: float | None = None,
    k_phases: int = 8,
    window_margin_ns: float = 0.32,
    grid: TimeGrid | None = None,
) -> SweepCurve:
    """Time-integrated transmission versus delay between two equal pulses.

    Pulses sit at -delay/2 and +delay/2; each delay is averaged over
    k_phases relative phases (the mutual-detuning average of the
    measurement). gamma_d, when given, overrides the dephasing rate in
    params so a dephasing family shares one parameter set. The curve is
    normalized to the far-delay baseline, which requires at least one
    delay with |dt| >= 10*fwhm.
    """
    if gamma_d is not None:
        params = dataclasses.replace(params, gamma_d=gamma_d)
    delays = np.asarray(sorted(float(d) for d in delays))
    base_mask = np.abs(delays) >= 10.0 * fwhm_ns
    if not np.any(base_mask):
        raise ValueError("delays must include a baseline point |dt| >= 10*fwhm")
    amp = pulsed_power_to_peak_amplitude(per_pulse_power_nw, cal, fwhm_ns)
    phases = phase_grid(k_phases)
    drives = []
    for d in delays:
        for ph in phases:
            drives.append(
                DriveSpec(
                    (
                        DriveComponent(
                            "gaussian", amp, t0_ns=-d / 2.0, fwhm_ns=fwhm_ns
                        ),
                        DriveComponent(
                            "gaussian",
                            amp,
                            phase_rad=ph,
                            t0_ns=+d / 2.0,
                            fwhm_ns=fwhm_ns,
                        ),
                    )
                )
            )
    if grid is None:
        half_span = 0.5 * float(np.max(np.abs(delays))) + window_margin_ns
        gate = min(max_stable_dt(params, d) for d in drives)
        grid = TimeGrid(
            -half_span, half_span, int(np.ceil(2.0 * half_span / (gate / 3.0)))
        )

    layout = params.layout
    rho0 = np.zeros((layout.dim, layout.dim), dtype=complex)
    rho0[0, 0] = 1.0
    obs = {"n": photon_number_operator(layout)}
    n_runs = master_expectations(rho0, params, drives, grid, obs)["n"]
    integrals = np.trapezoid(n_runs, grid.times, axis=1)
    integrals = integrals.reshape(delays.size, k_phases).mean(axis=1)
    baseline = float(integrals[base_mask].mean())
    return SweepCurve(
        "delay_ns",
        delays,
        {"y": integrals / baseline, "integral": integrals},
    )


def doublet_contrast(curve: SweepCurve) -> float:
    """(peak - center dip) / (peak + center dip) of a transmission doublet."""
    y = curve.channels["T"]
    dip = float(y[int(np.argmin(np.abs(curve.x)))])
    peak = float(y.max())
    return (peak - dip) / (peak + dip)


def saturation_scan(
    params: SystemParams,
    powers_nw,
    cal: OpticalCalibration,
    detuning_grid,
    fwhm_ns: float = 0.040,
):
    """Spectra over a pulse-power ladder, cw-approximated at peak intensity.

    Each average power is mapped to the cw amplitude matching the pulse's
    peak flux: the detected spectra are dominated by the quasi-steady
    response while the pulse is on. Returns (curves, contrasts).
    """
    powers = [float(p) for p in powers_nw]
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise ValueError("powers must be strictly increasing")
    curves = []
    contrasts = np.empty(len(powers))
    for i, p_nw in enumerate(powers):
        amp = pulsed_power_to_peak_amplitude(p_nw, cal, fwhm_ns)
        curve = spectrum_scan(params, amp, detuning_grid)
        curves.append(curve)
        contrasts[i] = doublet_contrast(curve)
    return curves, contrasts


@dataclass(frozen=True)
class NonlinearMap:
    """Grid of the normalized nonlinear response over drive conditions."""

    signal_powers_nw: np.ndarray
    multipliers: np.ndarray
    ratio: np.ndarray  # shape (len(multipliers), len(signal_powers_nw))

    def __post_init__(self):
        expected = (self.multipliers.size, self.signal_powers_nw.size)
        if self.ratio.shape != expected:
            raise ValueError(
                f"ratio shape {self.ratio.shape} does not match grid {expected}"
            )


def nonlinear_map(
    params: SystemParams,
    signal_powers_nw,
    multipliers,
    cal: OpticalCalibration,
    k_phases: int = 8,
) -> NonlinearMap:
    """Steady-state delta-n / n(s) over signal power and control multiplier.

    The control shares the signal frequency with amplitude m times the
    signal amplitude; the combined run is averaged over k_phases relative
    phases so the linear cross term cancels exactly.
    """
    powers = np.asarray([float(p) for p in signal_powers_nw])
    if np.any(powers <= 0):
        raise ValueError("signal powers must be > 0")
    mult = np.asarray([float(m) for m in multipliers])
    phases = phase_grid(k_phases)
    ratio = np.empty((mult.size, powers.size))
    for j, p_nw in enumerate(powers):
        amp_s = cw_power_to_amplitude(p_nw, cal)
        n_s = _steady_n(params, amp_s)
        for i, m in enumerate(mult):
            amp_c = m * amp_s
            n_c = _steady_n(params, amp_c)
            n_both = np.mean(
                [_steady_n(params, amp_s + amp_c * np.exp(1j * ph)) for ph in phases]
            )
            ratio[i, j] = (n_both - n_s - n_c) / n_s
    return NonlinearMap(powers, mult, ratio)


def _steady_n(params: SystemParams, omega: complex) -> float:
    rho = steady_state(params, omega)
    n_op = photon_number_operator(params.layout)
    return float(np.trace(n_op @ rho).real)


def polariton_sweep(params: SystemParams, delta_grid) -> SweepCurve:
    """Complex polariton frequencies versus dot-cavity detuning.

    The cavity stays at zero; the dot is moved by delta.
    """
    det = np.asarray(delta_grid, dtype=float)
    re_p = np.empty(det.size)
    im_p = np.empty(det.size)
    re_m = np.empty(det.size)
    im_m = np.empty(det.size)
    for i, d in enumerate(det):
        pair = polariton_eigenfrequencies(params, 0.0, d)
        re_p[i], im_p[i] = pair.omega_plus.real, pair.omega_plus.imag
        re_m[i], im_m[i] = pair.omega_minus.real, pair.omega_minus.imag
    return SweepCurve(
        "delta_ghz",
        det,
        {"re_plus": re_p, "im_plus": im_p, "re_minus": re_m, "im_minus": im_m},
    )
