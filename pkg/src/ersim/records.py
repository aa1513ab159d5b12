"""Analysis data containers: spectra, decay histograms, correlation histograms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .physics import _require


@dataclass
class Spectrum:
    """Counts versus laser frequency for one scan."""

    frequencies: np.ndarray      # Hz, strictly increasing
    counts: np.ndarray           # nonnegative
    acquisition_time: float = 0.0
    label: str = ""

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.frequencies.shape != self.counts.shape or self.frequencies.ndim != 1:
            raise InvalidParameterError("frequencies and counts must be equal-length 1-D arrays")
        _require(np.all(np.diff(self.frequencies) > 0), "frequencies must be strictly increasing")
        _require(np.all(self.counts >= 0), "counts must be >= 0")
        _require(self.acquisition_time >= 0, "acquisition_time must be >= 0")

    def __len__(self) -> int:
        return len(self.frequencies)


@dataclass
class DecayHistogram:
    """Histogram of click delays after the excitation pulse, uniform bins."""

    bin_edges: np.ndarray        # s, uniform, strictly increasing, length n+1
    counts: np.ndarray           # length n
    total_shots: int = 0

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if len(self.bin_edges) != len(self.counts) + 1:
            raise InvalidParameterError("bin_edges must have one more entry than counts")
        widths = np.diff(self.bin_edges)
        _require(np.all(widths > 0), "bin edges must be strictly increasing")
        if len(widths) > 1:
            _require(
                np.allclose(widths, widths[0], rtol=1e-9, atol=0.0),
                "bins must be uniform",
            )
        _require(np.all(self.counts >= 0), "counts must be >= 0")
        _require(self.total_shots >= 0, "total_shots must be >= 0")

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def __len__(self) -> int:
        return len(self.counts)


@dataclass
class CorrelationHistogram:
    """Pulsed autocorrelation versus shot offset, symmetric about zero.

    ``coincidences[k]`` counts click pairs at shot offset ``offsets[k]``;
    ``shot_pairs[k]`` is the number of shot pairs available at that offset
    (the finite-trace edge correction).  ``normalization`` is the mean
    per-pair coincidence rate over all nonzero offsets, so ``g2`` is 1 for a
    Poissonian source.
    """

    offsets: np.ndarray          # int, -K..K
    coincidences: np.ndarray     # int64
    shot_pairs: np.ndarray       # int64
    normalization: float
    t_rep: float
    n_clicks: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        self.coincidences = np.asarray(self.coincidences, dtype=np.int64)
        self.shot_pairs = np.asarray(self.shot_pairs, dtype=np.int64)
        k = self.offsets.max(initial=0)
        if not np.array_equal(self.offsets, np.arange(-k, k + 1)):
            raise InvalidParameterError("offsets must run -K..K")

    @property
    def is_empty(self) -> bool:
        return self.n_clicks < 2 or self.normalization <= 0

    @property
    def rates(self) -> np.ndarray:
        return self.coincidences / self.shot_pairs

    @property
    def g2(self) -> np.ndarray:
        if self.normalization <= 0:
            return np.full(len(self.offsets), np.nan)
        return self.rates / self.normalization

    def g2_at(self, offset: int) -> float:
        (idx,) = np.nonzero(self.offsets == offset)
        if len(idx) == 0:
            raise InvalidParameterError(f"offset {offset} outside histogram range")
        return float(self.g2[idx[0]])

    def g2_zero_sigma(self) -> float:
        """Poisson error on g2(0) propagated through the normalization."""
        if self.is_empty:
            return float("nan")
        zero = np.nonzero(self.offsets == 0)[0][0]
        n0 = float(self.coincidences[zero])
        return float(np.sqrt(max(n0, 1.0)) / (self.shot_pairs[zero] * self.normalization))

    def delays_s(self) -> np.ndarray:
        return self.offsets * self.t_rep
