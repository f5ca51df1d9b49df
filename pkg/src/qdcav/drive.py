"""Drive envelopes and optical power calibration.

The complex drive amplitude Omega(t) has units of sqrt(photons/ns):
|Omega(t)|^2 is the instantaneous photon flux coupled into the cavity
mode. A drive is a sum of components, each cw or Gaussian, with its own
carrier detuning (GHz, relative to the rotating frame) and phase.

Pulse widths are intensity FWHM throughout: the amplitude envelope
exp(-(t-t0)^2 / (4 sigma^2)) gives |Omega|^2 a Gaussian of standard
deviation sigma = fwhm / (2 sqrt(2 ln 2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# CODATA/SI exact values, enough for power-to-flux arithmetic.
PLANCK_J_S = 6.62607015e-34
LIGHT_SPEED_M_S = 299792458.0

_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class DriveComponent:
    """One cw tone or Gaussian pulse.

    amplitude is the (peak) drive amplitude in sqrt(1/ns); detuning_ghz is
    the carrier offset from the rotating frame; phase_rad a static phase.
    t0_ns and fwhm_ns only apply to the "gaussian" kind.
    """

    kind: str
    amplitude: float
    detuning_ghz: float = 0.0
    phase_rad: float = 0.0
    t0_ns: float = 0.0
    fwhm_ns: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cw", "gaussian"):
            raise ValueError(f"kind must be 'cw' or 'gaussian', got {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.kind == "gaussian" and self.fwhm_ns <= 0:
            raise ValueError(f"gaussian component needs fwhm_ns > 0, got {self.fwhm_ns}")


@dataclass(frozen=True)
class DriveSpec:
    """A drive as a sum of components. Empty components mean no drive."""

    components: tuple[DriveComponent, ...] = ()

    def __add__(self, other: "DriveSpec") -> "DriveSpec":
        return DriveSpec(self.components + other.components)


def no_drive() -> DriveSpec:
    return DriveSpec(())


def cw_drive(amplitude: float, detuning_ghz: float = 0.0, phase_rad: float = 0.0) -> DriveSpec:
    return DriveSpec((DriveComponent("cw", amplitude, detuning_ghz, phase_rad),))


def gaussian_drive(
    amplitude: float,
    t0_ns: float,
    fwhm_ns: float,
    detuning_ghz: float = 0.0,
    phase_rad: float = 0.0,
) -> DriveSpec:
    return DriveSpec(
        (DriveComponent("gaussian", amplitude, detuning_ghz, phase_rad, t0_ns, fwhm_ns),)
    )


def intensity_fwhm_to_sigma(fwhm_ns: float) -> float:
    """Std deviation of the intensity Gaussian for a given intensity FWHM."""
    return fwhm_ns / _FWHM_PER_SIGMA


def evaluate_drive(spec: DriveSpec, t):
    """Omega(t) for scalar or array t (ns). Returns complex with t's shape."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for c in spec.components:
        if c.kind == "cw":
            env = 1.0
        else:
            sigma = intensity_fwhm_to_sigma(c.fwhm_ns)
            env = np.exp(-((t - c.t0_ns) ** 2) / (4.0 * sigma**2))
        out += c.amplitude * env * np.exp(1j * (c.phase_rad - 2.0 * np.pi * c.detuning_ghz * t))
    if out.ndim == 0:
        return complex(out)
    return out


def phase_grid(k: int) -> np.ndarray:
    """Uniform relative-phase grid 2*pi*j/k, j = 0..k-1.

    Averaging any interference cross term over this grid cancels it exactly
    for k >= 2, which is how mutually incoherent beams are modelled.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return 2.0 * np.pi * np.arange(k) / k


@dataclass(frozen=True)
class OpticalCalibration:
    """Input coupling and photon-energy bookkeeping.

    eta is the power fraction reaching the cavity mode from the measured
    beam power; wavelength_nm sets the photon energy; repetition_rate_ghz
    is the pulse-train rate used to split average power into pulse energy.
    """

    eta: float = 0.03
    wavelength_nm: float = 927.0
    repetition_rate_ghz: float = 0.08

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.wavelength_nm <= 0:
            raise ValueError(f"wavelength_nm must be > 0, got {self.wavelength_nm}")
        if self.repetition_rate_ghz < 0:
            raise ValueError(f"repetition_rate_ghz must be >= 0, got {self.repetition_rate_ghz}")

    @property
    def photon_energy_j(self) -> float:
        return PLANCK_J_S * LIGHT_SPEED_M_S / (self.wavelength_nm * 1e-9)


def cw_power_to_amplitude(power_nw: float, cal: OpticalCalibration) -> float:
    """Drive amplitude for a cw beam of the given measured power.

    Coupled photon flux is eta * P / (h c / lambda), converted to 1/ns;
    the amplitude is its square root, so |Omega|^2 round-trips the flux.
    """
    if power_nw < 0:
        raise ValueError(f"power_nw must be >= 0, got {power_nw}")
    flux_per_s = cal.eta * power_nw * 1e-9 / cal.photon_energy_j
    return math.sqrt(flux_per_s * 1e-9)


def cw_amplitude_to_power(amplitude: float, cal: OpticalCalibration) -> float:
    """Inverse of cw_power_to_amplitude (measured power in nW)."""
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    flux_per_s = amplitude**2 * 1e9
    return flux_per_s * cal.photon_energy_j / cal.eta * 1e9


def pulsed_power_to_peak_amplitude(
    avg_power_nw: float, cal: OpticalCalibration, fwhm_ns: float
) -> float:
    """Peak amplitude of a Gaussian pulse from train-averaged power.

    The per-pulse coupled energy eta * P_avg / f_rep is converted to a
    photon number; the peak flux follows from the Gaussian intensity area
    N = Phi_peak * sigma * sqrt(2 pi).
    """
    if avg_power_nw < 0:
        raise ValueError(f"avg_power_nw must be >= 0, got {avg_power_nw}")
    if fwhm_ns <= 0:
        raise ValueError(f"fwhm_ns must be > 0, got {fwhm_ns}")
    if cal.repetition_rate_ghz <= 0:
        raise ValueError("pulsed conversion needs repetition_rate_ghz > 0")
    pulse_energy_j = cal.eta * avg_power_nw * 1e-9 / (cal.repetition_rate_ghz * 1e9)
    photons_per_pulse = pulse_energy_j / cal.photon_energy_j
    sigma = intensity_fwhm_to_sigma(fwhm_ns)
    peak_flux = photons_per_pulse / (sigma * math.sqrt(2.0 * math.pi))
    return math.sqrt(peak_flux)


def wavelength_detuning_to_ghz(delta_lambda_nm: float, wavelength_nm: float) -> float:
    """Frequency offset c * dlambda / lambda^2 for a small wavelength offset."""
    if wavelength_nm <= 0:
        raise ValueError(f"wavelength_nm must be > 0, got {wavelength_nm}")
    hz = LIGHT_SPEED_M_S * (delta_lambda_nm * 1e-9) / (wavelength_nm * 1e-9) ** 2
    return hz * 1e-9
