"""Synthetic cohort generator with known spectral-power-to-CBF coupling.

Each subject x ROI draws a latent normal deviate; CBF is an affine map of
it (minus a deficit in designated parietal ROIs of low-MMSE MCI subjects),
and the BOLD series carries sinusoids at DFT grid frequencies inside the
coupled band whose amplitudes scale with the deficit-inclusive CBF latent.
Out-of-band distractor sinusoids have coupling-free amplitudes. All
randomness comes from numpy's Philox counter-based generator seeded by
``cfg.seed``, and files are written with fixed number formatting, so a
given config always produces byte-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cbfsurrogate.datamodel import LOBES
from cbfsurrogate.spectral import BIN_START_HZ, BIN_WIDTH_HZ, N_BINS

_FEATURE_TOP_HZ = BIN_START_HZ + N_BINS * BIN_WIDTH_HZ
_COUPLED_AMP = 1.0
_DISTRACTOR_AMP = 0.5
MMSE_SPLIT = 28


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 80
    n_rois: int = 16
    tr: float = 0.72
    n_timepoints: int = 240
    coupled_band: tuple[float, float] = (0.10, 0.15)
    coupling_kappa: float = 1.0
    noise_sd: float = 0.1
    mci_fraction: float = 0.35
    cbf_base: float = 50.0
    cbf_sd: float = 6.0
    group_deficit: float = 0.0  # ml/100g/min removed in parietal ROIs of low-MMSE MCI subjects
    mmse_coupling: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 2 or self.n_rois < 1:
            raise ValueError("need n_subjects >= 2 and n_rois >= 1")
        if self.n_timepoints < 64:
            raise ValueError(f"n_timepoints must be >= 64, got {self.n_timepoints}")
        if self.tr <= 0 or 1.0 / (2.0 * self.tr) < _FEATURE_TOP_HZ:
            raise ValueError(f"tr={self.tr} puts Nyquist below {_FEATURE_TOP_HZ} Hz")
        lo, hi = self.coupled_band
        if not (BIN_START_HZ <= lo < hi <= _FEATURE_TOP_HZ):
            raise ValueError(f"coupled_band must satisfy {BIN_START_HZ} <= lo < hi <= {_FEATURE_TOP_HZ}")
        if not 0.0 <= self.mci_fraction <= 1.0:
            raise ValueError("mci_fraction must lie in [0, 1]")
        if self.coupling_kappa < 0 or self.noise_sd < 0 or self.group_deficit < 0:
            raise ValueError("coupling_kappa, noise_sd and group_deficit must be >= 0")
        if self.cbf_sd <= 0:
            raise ValueError("cbf_sd must be positive")


def _fmt(value) -> str:
    return format(float(value), ".10g")


def _write_lines(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def grid_frequencies(n_timepoints: int, tr: float) -> np.ndarray:
    return np.arange(1, n_timepoints // 2 + 1) / (n_timepoints * tr)


def generate_cohort(cfg: SynthConfig, out_dir) -> Path:
    """Write manifest, atlas, per-subject time-series/CBF files and the
    ground-truth table into out_dir; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    n, n_rois, n_t = cfg.n_subjects, cfg.n_rois, cfg.n_timepoints

    roi_names = [f"roi_{j:03d}" for j in range(n_rois)]
    roi_lobes = [LOBES[j % len(LOBES)] for j in range(n_rois)]
    deficit_rois = np.array([lobe == "parietal" for lobe in roi_lobes])

    n_mci = round(cfg.mci_fraction * n)
    groups = np.array(["NC"] * (n - n_mci) + ["MCI"] * n_mci)
    ages = np.clip(70.0 + 7.0 * rng.standard_normal(n), 55.0, 90.0)
    sexes = np.where(rng.random(n) < 0.5, "F", "M")
    education = np.clip(16.0 + 3.0 * rng.standard_normal(n), 8.0, 22.0)
    severity = np.abs(rng.standard_normal(n))
    severity[groups == "NC"] = 0.0
    mmse_noise = 0.5 * rng.standard_normal(n)
    drop = np.maximum(0, np.round(cfg.mmse_coupling * (severity + mmse_noise)))
    mmse = np.clip(30 - drop, 22, 30).astype(int)

    latent = rng.standard_normal((n, n_rois))
    cbf = cfg.cbf_base + cfg.cbf_sd * latent
    low_mci = (groups == "MCI") & (mmse < MMSE_SPLIT)
    cbf[np.ix_(low_mci, deficit_rois)] -= cfg.group_deficit
    coupling_latent = (cbf - cfg.cbf_base) / cfg.cbf_sd

    freqs = grid_frequencies(n_t, cfg.tr)
    lo, hi = cfg.coupled_band
    coupled = freqs[(freqs >= lo) & (freqs <= hi)]
    if coupled.size == 0:
        raise ValueError(f"no DFT grid frequency inside coupled band [{lo}, {hi}] for N={n_t}, tr={cfg.tr}")
    distractor = freqs[(freqs >= BIN_START_HZ) & (freqs <= _FEATURE_TOP_HZ) & ~((freqs >= lo) & (freqs <= hi))]
    t_sec = np.arange(n_t) * cfg.tr

    amp = _COUPLED_AMP * np.maximum(1.0 + cfg.coupling_kappa * coupling_latent, 0.0)
    true_power = coupled.size * amp**2 / 2.0

    manifest_rows = [",".join(["subject_id", "group", "age", "sex", "education", "mmse", "tr", "timeseries_path", "cbf_path"])]
    truth_rows = ["subject_id,roi,latent_z,true_coupled_power"]
    for i in range(n):
        sid = f"sub_{i:03d}"
        phase_c = rng.uniform(0.0, 2.0 * math.pi, size=coupled.size)
        phase_d = rng.uniform(0.0, 2.0 * math.pi, size=distractor.size)
        amp_d = _DISTRACTOR_AMP * rng.uniform(0.5, 1.5, size=(n_rois, distractor.size))
        noise = cfg.noise_sd * rng.standard_normal((n_rois, n_t))
        carrier = np.cos(2.0 * math.pi * coupled[:, None] * t_sec[None, :] + phase_c[:, None]).sum(axis=0)
        distr = amp_d @ np.cos(2.0 * math.pi * distractor[:, None] * t_sec[None, :] + phase_d[:, None])
        series = amp[i][:, None] * carrier[None, :] + distr + noise

        ts_name, cbf_name = f"ts_{sid}.csv", f"cbf_{sid}.csv"
        ts_lines = [",".join(roi_names)]
        ts_lines += [",".join(_fmt(v) for v in series[:, k]) for k in range(n_t)]
        _write_lines(out / ts_name, ts_lines)
        _write_lines(out / cbf_name, ["roi,cbf"] + [f"{roi},{_fmt(cbf[i, j])}" for j, roi in enumerate(roi_names)])
        manifest_rows.append(
            f"{sid},{groups[i]},{_fmt(ages[i])},{sexes[i]},{_fmt(education[i])},{mmse[i]},{_fmt(cfg.tr)},{ts_name},{cbf_name}"
        )
        truth_rows += [f"{sid},{roi},{_fmt(coupling_latent[i, j])},{_fmt(true_power[i, j])}" for j, roi in enumerate(roi_names)]

    _write_lines(out / "atlas.csv", ["roi,lobe,in_lobar_gm"] + [f"{roi},{lobe},1" for roi, lobe in zip(roi_names, roi_lobes)])
    manifest_path = out / "manifest.csv"
    _write_lines(manifest_path, manifest_rows)
    _write_lines(out / "ground_truth.csv", truth_rows)
    return manifest_path
