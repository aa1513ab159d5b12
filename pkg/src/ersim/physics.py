"""Closed-form physics for a two-level emitter coupled to a Lorentzian cavity.

All functions are pure and operate in SI units: frequencies in Hz, rates in
1/s, times in s.  Frequencies are absolute; conversion to wavelength or
detuning happens only in the reporting layer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError

SPEED_OF_LIGHT = 299_792_458.0  # m/s


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameterError(message)


@dataclass(frozen=True)
class SpectralDiffusionParams:
    """Two-scale spectral diffusion of the emitter transition frequency.

    The fast component is an Ornstein-Uhlenbeck process (stationary standard
    deviation ``sigma_fast``, correlation time ``tau_fast``); the slow
    component is an unbounded random walk with diffusivity
    ``sigma_slow_rate`` in Hz^2/s.  All zeros gives a static emitter.
    """

    sigma_fast: float = 0.0
    tau_fast: float = 0.0
    sigma_slow_rate: float = 0.0

    def __post_init__(self):
        _require(self.sigma_fast >= 0, "sigma_fast must be >= 0")
        _require(self.tau_fast >= 0, "tau_fast must be >= 0")
        _require(self.sigma_slow_rate >= 0, "sigma_slow_rate must be >= 0")

    @property
    def is_static(self) -> bool:
        return self.sigma_fast == 0.0 and self.sigma_slow_rate == 0.0


@dataclass(frozen=True)
class EmitterModel:
    """Two-level ion: transition frequency, bare decay rate, excitation line."""

    nu_ion_0: float          # transition center frequency (Hz)
    gamma_0: float           # intrinsic decay rate without the cavity (1/s)
    gamma_h: float           # homogeneous FWHM of the excitation line (Hz)
    p_max: float             # peak per-pulse excitation probability on resonance
    diffusion: SpectralDiffusionParams = field(default_factory=SpectralDiffusionParams)

    def __post_init__(self):
        _require(self.nu_ion_0 > 0, "nu_ion_0 must be > 0")
        _require(self.gamma_0 > 0, "gamma_0 must be > 0")
        _require(self.gamma_h > 0, "gamma_h must be > 0")
        # p_max = 0 is allowed so that "emitter off" oracle configurations are
        # expressible; excitation_probability then is identically zero.
        _require(0 <= self.p_max <= 1, "p_max must lie in [0, 1]")


@dataclass(frozen=True)
class CavityModel:
    """Single Lorentzian cavity mode with an on-resonance Purcell factor."""

    nu_cav: float            # mode center frequency (Hz)
    q_factor: float          # quality factor
    p_peak: float            # Purcell factor for a resonant emitter
    mode_volume_note: str = ""   # informational only, never used in computation

    def __post_init__(self):
        _require(self.nu_cav > 0, "nu_cav must be > 0")
        _require(self.q_factor > 0, "q_factor must be > 0")
        _require(self.p_peak >= 0, "p_peak must be >= 0")

    @property
    def fwhm(self) -> float:
        """Mode linewidth kappa = nu_cav / Q (Hz)."""
        return self.nu_cav / self.q_factor


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector: efficiency, dark counts, optional dead time."""

    efficiency: float = 1.0      # detection probability per collected photon
    dark_rate: float = 0.0       # dark-count rate (counts/s)
    dead_time: float = 0.0       # minimum separation of clicks in one shot (s)

    def __post_init__(self):
        _require(0 <= self.efficiency <= 1, "efficiency must lie in [0, 1]")
        _require(self.dark_rate >= 0, "dark_rate must be >= 0")
        _require(self.dead_time >= 0, "dead_time must be >= 0")


class TuningKind(enum.Enum):
    """Cavity tuning actions: gas adsorption redshifts, local heating blueshifts."""

    ADSORB_N2 = "adsorb_n2"
    HEAT_BLUESHIFT = "heat_blueshift"


@dataclass(frozen=True)
class TuningStep:
    kind: TuningKind
    magnitude: float  # frequency shift (Hz), strictly positive

    def __post_init__(self):
        _require(self.magnitude > 0, "tuning magnitude must be > 0")


def lorentzian(nu, center, fwhm, amplitude=1.0, baseline=0.0):
    """Lorentzian lineshape: baseline + amplitude at nu=center, half width fwhm/2.

    Accepts scalars or numpy arrays for ``nu``.
    """
    _require(fwhm > 0, "fwhm must be > 0")
    half = 0.5 * fwhm
    return baseline + amplitude * half**2 / ((np.asarray(nu) - center) ** 2 + half**2)


def cavity_fwhm_from_q(nu_cav: float, q_factor: float) -> float:
    """Cavity linewidth kappa = nu_cav / Q."""
    _require(q_factor > 0, "q_factor must be > 0")
    _require(nu_cav > 0, "nu_cav must be > 0")
    return nu_cav / q_factor


def purcell_profile(delta, p_peak: float, kappa: float):
    """Purcell factor at emitter-cavity detuning delta.

    Lorentzian roll-off of the on-resonance value: P(delta) =
    p_peak / (1 + (2 delta / kappa)^2).
    """
    _require(kappa > 0, "kappa must be > 0")
    _require(p_peak >= 0, "p_peak must be >= 0")
    return p_peak / (1.0 + (2.0 * np.asarray(delta) / kappa) ** 2)


def enhanced_decay_rate(gamma_0: float, p) -> float:
    """Total decay rate gamma_0 * (1 + P) for Purcell factor P."""
    _require(gamma_0 > 0, "gamma_0 must be > 0")
    _require(np.all(np.asarray(p) >= 0), "purcell factor must be >= 0")
    return gamma_0 * (1.0 + p)


def purcell_from_lifetimes(t1: float, t1_0: float) -> float:
    """Purcell factor P = t1_0 / t1 - 1 from enhanced and reference lifetimes."""
    _require(t1 > 0, "t1 must be > 0")
    _require(t1_0 > 0, "t1_0 must be > 0")
    return t1_0 / t1 - 1.0


def radiative_linewidth(t1: float) -> float:
    """Lifetime-limited linewidth 1 / (2 pi t1)."""
    _require(t1 > 0, "t1 must be > 0")
    return 1.0 / (2.0 * math.pi * t1)


def excitation_probability(delta_laser_ion, gamma_h: float, p_max: float):
    """Per-pulse excitation probability for a laser detuned by delta_laser_ion.

    Saturating Lorentzian with FWHM gamma_h and peak value p_max; incoherent
    (no Rabi dynamics).  p_max = 0 is the switched-off emitter.
    """
    _require(gamma_h > 0, "gamma_h must be > 0")
    _require(0 <= p_max <= 1, "p_max must lie in [0, 1]")
    half = 0.5 * gamma_h
    # unit-bounded shape factor first so the result never exceeds p_max
    return half**2 / (half**2 + np.asarray(delta_laser_ion) ** 2) * p_max


def cavity_branching_fraction(p) -> float:
    """Fraction P / (P + 1) of enhanced emission routed into the cavity channel."""
    p = np.asarray(p, dtype=float)
    _require(np.all(p >= 0), "purcell factor must be >= 0")
    return p / (p + 1.0)


def apply_tuning_step(cavity: CavityModel, step: TuningStep) -> CavityModel:
    """Shift the cavity mode: N2 adsorption moves it down, heating moves it up."""
    if step.kind is TuningKind.ADSORB_N2:
        return replace(cavity, nu_cav=cavity.nu_cav - step.magnitude)
    return replace(cavity, nu_cav=cavity.nu_cav + step.magnitude)


def wavelength_to_frequency(wavelength_m: float) -> float:
    _require(wavelength_m > 0, "wavelength must be > 0")
    return SPEED_OF_LIGHT / wavelength_m


def frequency_to_wavelength(frequency_hz: float) -> float:
    _require(frequency_hz > 0, "frequency must be > 0")
    return SPEED_OF_LIGHT / frequency_hz
