"""Spectral features: detrending, one-sided periodogram, 8-bin band power.

The bin grid is 8 contiguous half-open bins of width 0.0268 Hz starting at
0.01 Hz (upper edge 0.2244 Hz). Per-bin features are the MEAN one-sided
power over the DFT grid frequencies falling in the bin, which makes them
comparable across runs of different length.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

BIN_START_HZ = 0.01
BIN_WIDTH_HZ = 0.0268
N_BINS = 8
STANDARD_F_MAX = (0.10, 0.15, 0.20)


@dataclass(frozen=True)
class BinGrid:
    """Edges of the 8 half-open frequency bins [edges[k], edges[k+1])."""

    edges: tuple[float, ...] = tuple(BIN_START_HZ + k * BIN_WIDTH_HZ for k in range(N_BINS + 1))

    def __post_init__(self):
        if len(self.edges) != N_BINS + 1:
            raise ValueError("bin grid needs 9 edges")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly increasing")

    def centers(self) -> np.ndarray:
        e = np.asarray(self.edges)
        return (e[:-1] + e[1:]) / 2.0


@dataclass(frozen=True)
class SpectralFeatureVector:
    """Mean one-sided power per bin, bin occupancy, and total variance."""

    bin_power: tuple[float, ...]
    n_freqs_per_bin: tuple[int, ...]
    total_variance: float


@dataclass(frozen=True)
class FrequencyRange:
    """Analysis band [0.01, f_max] Hz; f_max conventionally 0.10/0.15/0.20."""

    f_max: float
    f_min: float = BIN_START_HZ

    def __post_init__(self):
        top = BIN_START_HZ + N_BINS * BIN_WIDTH_HZ
        if not (self.f_min < self.f_max <= top + 1e-12):
            raise ValueError(f"f_max must lie in ({self.f_min}, {top:.4f}], got {self.f_max}")
        if not any(abs(self.f_max - s) < 1e-12 for s in STANDARD_F_MAX):
            warnings.warn(f"non-standard f_max={self.f_max}; conventional values are {STANDARD_F_MAX}", stacklevel=2)


def detrend_demean(series) -> np.ndarray:
    """Remove the least-squares linear trend (and hence the mean)."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("series must be 1-D with length >= 3")
    t = np.arange(x.size, dtype=float)
    design = np.column_stack([np.ones(x.size), t])
    coef, _, _, _ = np.linalg.lstsq(design, x, rcond=None)
    return x - design @ coef


def periodogram(series, tr: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided periodogram of an already detrended/demeaned series.

    Returns frequencies k/(N*tr) for k = 1..N//2 and power normalized so
    that the sum over all returned bins equals the population variance of
    the input (Parseval).
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 64:
        raise ValueError(f"need at least 64 timepoints, got {n}")
    if tr <= 0:
        raise ValueError(f"tr must be positive, got {tr}")
    nyquist = 1.0 / (2.0 * tr)
    top = BIN_START_HZ + N_BINS * BIN_WIDTH_HZ
    if nyquist < top:
        raise ValueError(f"tr too long for 8-bin grid: Nyquist {nyquist:.4f} Hz < {top:.4f} Hz")
    coeffs = np.fft.rfft(x)
    freqs = np.arange(1, n // 2 + 1) / (n * tr)
    power = 2.0 * np.abs(coeffs[1 : n // 2 + 1]) ** 2 / n**2
    if n % 2 == 0:
        power[-1] /= 2.0  # Nyquist bin appears once in the full spectrum
    return freqs, power


def bin_power(freqs, power, grid: BinGrid | None = None) -> SpectralFeatureVector:
    """Average the periodogram into the 8 half-open frequency bins."""
    if grid is None:
        grid = BinGrid()
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    means = []
    counts = []
    for k in range(N_BINS):
        mask = (freqs >= grid.edges[k]) & (freqs < grid.edges[k + 1])
        m = int(mask.sum())
        if m == 0:
            raise ValueError(f"bin {k} [{grid.edges[k]:.4f}, {grid.edges[k + 1]:.4f}) Hz contains no DFT frequency; series too short")
        counts.append(m)
        means.append(float(power[mask].mean()))
    return SpectralFeatureVector(bin_power=tuple(means), n_freqs_per_bin=tuple(counts), total_variance=float(power.sum()))


def select_bins(frange: FrequencyRange, grid: BinGrid | None = None) -> tuple[int, ...]:
    """Bins whose left edge lies strictly below f_max, in ascending order."""
    if grid is None:
        grid = BinGrid()
    return tuple(k for k in range(N_BINS) if grid.edges[k] < frange.f_max - 1e-12)


def spectral_features(series, tr: float, grid: BinGrid | None = None) -> SpectralFeatureVector:
    """Full chain: detrend/demean, periodogram, 8-bin mean power."""
    detrended = detrend_demean(series)
    freqs, power = periodogram(detrended, tr)
    return bin_power(freqs, power, grid)
