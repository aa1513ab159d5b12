"""Click-stream and spectrum analysis: decay histograms, pulsed autocorrelation,
background correction, spectral-diffusion maps and Purcell reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import ClickStream, ScanResult
from .errors import InvalidParameterError
from .fitting import FitResult, fit_gaussian
from .physics import _require, purcell_from_lifetimes
from .records import CorrelationHistogram, DecayHistogram, Spectrum


def histogram_arrivals(stream: ClickStream, bin_width: float) -> DecayHistogram:
    """Histogram click delays (time after the pulse) into uniform bins.

    Bins are right-closed multiples of the bin width starting at zero, with a
    delay of exactly zero counted in the first bin; the sum of the counts
    equals the number of clicks.  An empty stream gives an all-zero histogram.
    """
    _require(bin_width > 0, "bin_width must be > 0")
    bw_ns = int(round(bin_width * 1e9))
    _require(bw_ns >= 1, "bin_width must be at least 1 ns")
    seq = stream.sequence
    n_bins = -(-seq.t_coll_ns // bw_ns)
    delays_ns = stream.times_ns - seq.t_pulse_ns
    idx = (delays_ns + bw_ns - 1) // bw_ns - 1
    np.clip(idx, 0, None, out=idx)
    counts = np.bincount(idx, minlength=n_bins)
    edges = np.arange(n_bins + 1) * (bw_ns * 1e-9)
    return DecayHistogram(edges, counts.astype(float), total_shots=seq.n_shots)


def pulsed_g2(stream: ClickStream, max_offset: int) -> CorrelationHistogram:
    """Single-detector pulsed autocorrelation over shot offsets -K..K.

    Every unordered pair of clicks in shots separated by |d| <= K increments
    the +d and -d bins; pairs within one shot are counted as ordered pairs in
    the zero bin, which makes a Poissonian stream normalize to 1 at every
    offset.  Rates are edge-corrected by the number of shot pairs available
    at each offset before normalizing to the nonzero-offset mean.

    Streams with fewer than two clicks (or no side coincidences) return a
    histogram flagged ``is_empty`` rather than raising.
    """
    _require(max_offset >= 1, "max_offset must be >= 1")
    n_shots = stream.sequence.n_shots
    _require(max_offset < n_shots, "max_offset must be smaller than the shot count")
    if len(stream) and (stream.shot_indices.min() < 0 or stream.shot_indices.max() >= n_shots):
        raise InvalidParameterError("stream shot indices exceed its declared shot count")

    k = max_offset
    offsets = np.arange(-k, k + 1)
    coincidences = np.zeros(2 * k + 1, dtype=np.int64)
    shot_pairs = n_shots - np.abs(offsets).astype(np.int64)
    shot_pairs[k] = n_shots
    if len(stream) >= 2:
        counts = np.bincount(stream.shot_indices, minlength=n_shots).astype(np.int64)
        coincidences[k] = int(np.sum(counts * (counts - 1)))
        for d in range(1, k + 1):
            v = int(np.dot(counts[:-d], counts[d:]))
            coincidences[k + d] = v
            coincidences[k - d] = v
    side = coincidences[np.abs(offsets) >= 1] / shot_pairs[np.abs(offsets) >= 1]
    normalization = float(np.mean(side)) if len(stream) >= 2 else 0.0
    return CorrelationHistogram(
        offsets,
        coincidences,
        shot_pairs,
        normalization,
        stream.sequence.t_rep,
        n_clicks=len(stream),
        metadata=dict(stream.metadata),
    )


def dark_count_floor(
    signal_rate_per_shot: float, dark_rate: float, t_coll: float, n_shots: int
) -> float:
    """Expected coincidences per offset bin that involve at least one dark click.

    Dark clicks are i.i.d. across shots, so the floor is the same for every
    offset: n_shots * (2 S B + B^2) with S the mean signal clicks per shot and
    B = dark_rate * t_coll.
    """
    _require(signal_rate_per_shot >= 0, "signal rate must be >= 0")
    _require(dark_rate >= 0, "dark_rate must be >= 0")
    _require(t_coll >= 0, "t_coll must be >= 0")
    _require(n_shots >= 0, "n_shots must be >= 0")
    b = dark_rate * t_coll
    return n_shots * (2.0 * signal_rate_per_shot * b + b * b)


def background_corrected_g2(g2_raw: float, rho: float) -> float:
    """Remove an uncorrelated background with signal fraction rho = S/(S+B).

    Returns (g2_raw - (1 - rho^2)) / rho^2, clamped below at zero.
    """
    _require(0 < rho <= 1, "rho must lie in (0, 1]")
    _require(g2_raw >= 0, "g2_raw must be >= 0")
    return max(0.0, (g2_raw - (1.0 - rho * rho)) / (rho * rho))


def spectrum_from_scan(scan: ScanResult, label: str = "") -> Spectrum:
    """Total counts per grid frequency for one scan pass."""
    seq_time = 0.0
    if scan.points:
        seq = scan.points[0].stream.sequence
        seq_time = seq.n_shots * seq.t_rep * len(scan.points)
    return Spectrum(scan.frequencies, scan.counts, acquisition_time=seq_time, label=label)


@dataclass
class SpectralDiffusionMap:
    """Stack of repeated scans with per-scan and time-averaged Gaussian fits."""

    frequencies: np.ndarray
    counts: np.ndarray               # shape (n_scans, n_frequencies)
    per_scan_fits: tuple
    average_spectrum: Spectrum
    average_fit: FitResult

    @property
    def per_scan_fwhm(self) -> np.ndarray:
        return np.asarray([f.value("fwhm") for f in self.per_scan_fits])

    @property
    def average_fwhm(self) -> float:
        return self.average_fit.value("fwhm")


def spectral_diffusion_map(scans) -> SpectralDiffusionMap:
    """Fit each scan and the per-frequency mean spectrum with Gaussians."""
    scans = list(scans)
    _require(len(scans) >= 2, "need at least 2 scans")
    freqs = scans[0].frequencies
    for s in scans[1:]:
        if not np.array_equal(s.frequencies, freqs):
            raise InvalidParameterError("scans must share an identical frequency grid")
    matrix = np.vstack([s.counts for s in scans])
    fits = tuple(fit_gaussian(s) for s in scans)
    average = Spectrum(
        freqs,
        matrix.mean(axis=0),
        acquisition_time=sum(s.acquisition_time for s in scans),
        label="time average",
    )
    return SpectralDiffusionMap(freqs, matrix, fits, average, fit_gaussian(average))


@dataclass(frozen=True)
class PurcellReport:
    purcell_factor: float
    sigma: float
    t1: float
    t1_sigma: float
    t1_reference: float
    t1_reference_sigma: float


def purcell_report(t1_fit: FitResult, t1_0_fit: FitResult) -> PurcellReport:
    """Purcell factor from two fitted lifetimes with first-order error propagation.

    The relative error of P + 1 is the quadrature sum of the two relative
    lifetime errors.
    """
    if not (t1_fit.converged and t1_0_fit.converged):
        raise InvalidParameterError("purcell_report requires converged lifetime fits")
    t1 = t1_fit.value("t1")
    t1_0 = t1_0_fit.value("t1")
    _require(t1 > 0 and t1_0 > 0, "lifetimes must be positive")
    p = purcell_from_lifetimes(t1, t1_0)
    s1 = t1_fit.sigma("t1")
    s0 = t1_0_fit.sigma("t1")
    rel = math.sqrt((s1 / t1) ** 2 + (s0 / t1_0) ** 2)
    return PurcellReport(p, (p + 1.0) * rel, t1, s1, t1_0, s0)
