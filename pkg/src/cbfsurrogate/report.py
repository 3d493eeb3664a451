"""Experiment orchestration: per-region evaluation tables, frequency
sweeps, group comparisons, cognition correlations, cohort demographics,
and deterministic SVG scatter plots.

Targets are the age/sex-adjusted actual CBF values (adjusted across the
full sample before cross-validation; the mild leakage this induces is the
protocol being reproduced, see README). FDR families are always the rows
of one emitted table.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from cbfsurrogate.crossval import HyperGrid, OofPrediction, nested_cv_predict
from cbfsurrogate.datamodel import Cohort, RegionKey, ValidationError, aggregate_region
from cbfsurrogate.spectral import BinGrid, FrequencyRange, select_bins, spectral_features
from cbfsurrogate.stats import StatResult, adjust_covariates, chisq_2x2, fdr_bh, pearson, ttest2

MMSE_SPLIT = 28
GROUP_LABELS = ("NC", "MCI_high", "MCI_low")
GROUP_PAIRS = (("NC", "MCI_high"), ("NC", "MCI_low"), ("MCI_high", "MCI_low"))


@dataclass
class RegionData:
    """Per-region feature matrix and targets for one cohort."""

    key: RegionKey
    bins: np.ndarray  # n_subjects x 8 mean bin power
    total_variance: np.ndarray
    actual_cbf: np.ndarray
    adjusted_cbf: np.ndarray


@dataclass
class EvaluationRow:
    region: RegionKey
    freq_max: float
    n: int
    r: float
    p: float
    fdr_p: float
    undefined: bool


@dataclass
class SweepRow:
    bin_index: int
    bin_center: float
    r: float
    mean_abs_diff: float
    sd_abs_diff: float
    undefined: bool


@dataclass
class GroupRow:
    region: RegionKey
    variant: str  # 'actual' | 'predicted'
    group_a: str
    group_b: str
    n_a: int
    n_b: int
    result: StatResult | None
    computable: bool


@dataclass
class DemographicRow:
    variable: str
    nc_summary: str
    mci_summary: str
    test: str
    statistic: float
    p: float


def sex_as_indicator(cohort: Cohort) -> np.ndarray:
    return np.array([1.0 if s.record.sex == "M" else 0.0 for s in cohort.subjects])


def build_region_data(cohort: Cohort, key: RegionKey, grid: BinGrid | None = None) -> RegionData:
    """Aggregate, featurize and covariate-adjust one region across subjects."""
    bins = []
    variances = []
    cbf_values = []
    for subject in cohort.subjects:
        series, cbf = aggregate_region(subject.timeseries, subject.cbf, cohort.atlas, key)
        feats = spectral_features(series, subject.record.tr, grid)
        bins.append(feats.bin_power)
        variances.append(feats.total_variance)
        cbf_values.append(cbf)
    actual = np.array(cbf_values)
    ages = np.array([s.record.age for s in cohort.subjects])
    adjusted = adjust_covariates(actual, ages, sex_as_indicator(cohort))
    return RegionData(
        key=key,
        bins=np.array(bins),
        total_variance=np.array(variances),
        actual_cbf=actual,
        adjusted_cbf=adjusted,
    )


def default_regions(cohort: Cohort) -> list[RegionKey]:
    """Total lobar GM, the four lobes, then every atlas ROI."""
    regions = [RegionKey.total()]
    present = {e.lobe for e in cohort.atlas.entries if e.in_lobar_gm}
    regions += [RegionKey("lobe", lobe) for lobe in ("frontal", "temporal", "parietal", "occipital") if lobe in present]
    regions += [RegionKey("roi", e.roi) for e in cohort.atlas.entries]
    return regions


def region_features(data: RegionData, frange: FrequencyRange, all_regions: dict[RegionKey, RegionData] | None = None):
    """Feature matrix for predicting one region's CBF: its own selected
    bins, or every ROI's selected bins when all_regions is given."""
    sel = list(select_bins(frange))
    if all_regions is None:
        return data.bins[:, sel]
    blocks = [all_regions[key].bins[:, sel] for key in sorted(all_regions, key=RegionKey.sort_key)]
    return np.concatenate(blocks, axis=1)


def _resolve_grid(grid, n_features: int) -> HyperGrid:
    if grid is None:
        return HyperGrid.default(n_features)
    return grid.resolve(n_features)


def _run_region_range(args):
    data, frange, whole_brain, grid, k_outer, k_inner, seed, tol, max_passes = args
    features = region_features(data, frange, whole_brain)
    hyper = _resolve_grid(grid, features.shape[1])
    oof = nested_cv_predict(features, data.adjusted_cbf, hyper, k_outer, k_inner, seed, tol, max_passes)
    return data.key, frange.f_max, oof


def evaluate_regions(
    cohort: Cohort,
    regions: list[RegionKey],
    ranges: list[FrequencyRange],
    grid: HyperGrid | None = None,
    seed: int = 0,
    k_outer: int = 10,
    k_inner: int = 10,
    whole_brain: bool = False,
    jobs: int = 1,
    tol: float = 1e-3,
    max_passes: int = 10_000,
    cv_predict=None,
) -> tuple[list[EvaluationRow], dict[tuple[RegionKey, float], OofPrediction]]:
    """Nested-CV evaluation of every (region, range); FDR per range table.

    cv_predict lets tests inject a stand-in for the cross-validation step;
    it must accept (features, targets, grid, k_outer, k_inner, seed) and
    return an OofPrediction.
    """
    region_data = {key: build_region_data(cohort, key) for key in regions}
    roi_data = None
    if whole_brain:
        roi_keys = [RegionKey("roi", e.roi) for e in cohort.atlas.entries]
        roi_data = {k: region_data.get(k) or build_region_data(cohort, k) for k in roi_keys}
    tasks = [
        (region_data[key], frange, roi_data, grid, k_outer, k_inner, seed, tol, max_passes)
        for frange in sorted(ranges, key=lambda fr: fr.f_max)
        for key in sorted(regions, key=RegionKey.sort_key)
    ]
    if cv_predict is not None:
        results = []
        for data, frange, wb, g, ko, ki, sd, _, _ in tasks:
            features = region_features(data, frange, wb)
            hyper = _resolve_grid(g, features.shape[1])
            results.append((data.key, frange.f_max, cv_predict(features, data.adjusted_cbf, hyper, ko, ki, sd)))
    elif jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_region_range, tasks))
    else:
        results = [_run_region_range(t) for t in tasks]

    predictions = {(key, f_max): oof for key, f_max, oof in results}
    rows = []
    for key, f_max, oof in results:
        res = pearson(oof.actual, oof.predicted)
        rows.append(
            EvaluationRow(
                region=key,
                freq_max=f_max,
                n=res.n,
                r=res.statistic,
                p=res.p,
                fdr_p=math.nan,
                undefined=res.undefined,
            )
        )
    for f_max in sorted({row.freq_max for row in rows}):
        family = [row for row in rows if row.freq_max == f_max and not row.undefined]
        if family:
            adjusted = fdr_bh([row.p for row in family])
            for row, q in zip(family, adjusted):
                row.fdr_p = float(q)
    rows.sort(key=lambda row: (row.freq_max, row.region.sort_key()))
    return rows, predictions


def frequency_sweep(
    cohort: Cohort,
    region: RegionKey,
    grid: HyperGrid | None = None,
    seed: int = 0,
    k_outer: int = 10,
    k_inner: int = 10,
    mode: str = "single",
    tol: float = 1e-3,
    max_passes: int = 10_000,
) -> list[SweepRow]:
    """Per-bin nested CV: each bin's power alone (or the cumulative prefix
    of bins when mode='prefix') predicts the region's CBF."""
    if mode not in ("single", "prefix"):
        raise ValidationError(f"sweep mode must be 'single' or 'prefix', got {mode!r}")
    data = build_region_data(cohort, region)
    centers = BinGrid().centers()
    rows = []
    for k in range(len(centers)):
        features = data.bins[:, [k]] if mode == "single" else data.bins[:, : k + 1]
        hyper = _resolve_grid(grid, features.shape[1])
        oof = nested_cv_predict(features, data.adjusted_cbf, hyper, k_outer, k_inner, seed, tol, max_passes)
        res = pearson(oof.actual, oof.predicted)
        abs_diff = np.abs(oof.actual - oof.predicted)
        rows.append(
            SweepRow(
                bin_index=k,
                bin_center=float(centers[k]),
                r=res.statistic,
                mean_abs_diff=float(abs_diff.mean()),
                sd_abs_diff=float(abs_diff.std(ddof=1)),
                undefined=res.undefined,
            )
        )
    return rows


def subgroup_masks(cohort: Cohort) -> dict[str, np.ndarray]:
    groups = np.array([s.record.group for s in cohort.subjects])
    mmse = np.array([s.record.mmse for s in cohort.subjects])
    return {
        "NC": groups == "NC",
        "MCI_high": (groups == "MCI") & (mmse >= MMSE_SPLIT),
        "MCI_low": (groups == "MCI") & (mmse < MMSE_SPLIT),
    }


def group_compare(
    cohort: Cohort,
    relative_tables: dict[str, np.ndarray],
    region: RegionKey,
    valid: dict[str, np.ndarray] | None = None,
    welch: bool = False,
) -> list[GroupRow]:
    """Pairwise NC / MCI-high (MMSE >= 28) / MCI-low (MMSE < 28) t-tests on
    each relative-CBF variant; FDR over this region's computable rows."""
    masks = subgroup_masks(cohort)
    rows = []
    for variant in sorted(relative_tables):
        values = np.asarray(relative_tables[variant], dtype=float)
        ok = np.ones(values.size, dtype=bool) if valid is None else np.asarray(valid.get(variant), dtype=bool)
        for name_a, name_b in GROUP_PAIRS:
            a = values[masks[name_a] & ok]
            b = values[masks[name_b] & ok]
            if a.size < 2 or b.size < 2:
                rows.append(GroupRow(region, variant, name_a, name_b, a.size, b.size, None, False))
                continue
            rows.append(GroupRow(region, variant, name_a, name_b, a.size, b.size, ttest2(a, b, welch=welch), True))
    family = [row for row in rows if row.computable and not row.result.undefined]
    if family:
        adjusted = fdr_bh([row.result.p for row in family])
        for row, q in zip(family, adjusted):
            row.result.fdr_p = float(q)
    return rows


def cognition_correlation(relative_cbf, mmse) -> StatResult:
    """Pearson correlation of relative CBF against MMSE."""
    return pearson(relative_cbf, mmse)


def normalizer_region(cohort: Cohort, region: RegionKey) -> RegionKey:
    """The region whose CBF normalizes this one: a ROI's lobe, or total
    lobar GM for a lobe."""
    if region.kind == "roi":
        lobe = next((e.lobe for e in cohort.atlas.entries if e.roi == region.name), None)
        if lobe is None:
            raise ValidationError(f"ROI {region.name!r} not in atlas")
        if lobe not in ("frontal", "temporal", "parietal", "occipital"):
            raise ValidationError(f"ROI {region.name!r} belongs to lobe {lobe!r}, which has no lobar normalizer")
        return RegionKey("lobe", lobe)
    if region.kind == "lobe":
        return RegionKey.total()
    raise ValidationError("total lobar GM cannot be normalized by itself")


def relative_cbf_analysis(
    cohort: Cohort,
    region: RegionKey,
    frange: FrequencyRange,
    grid: HyperGrid | None = None,
    seed: int = 0,
    k_outer: int = 10,
    k_inner: int = 10,
    tol: float = 1e-3,
    max_passes: int = 10_000,
    cv_predict=None,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Actual and predicted relative CBF for a region (normalized by its
    lobar region's CBF, predicted by the lobar-level model).

    Returns (tables, valid): per-variant value arrays and boolean masks
    flagging subjects whose normalizer was positive.
    """
    norm_key = normalizer_region(cohort, region)
    tables: dict[str, np.ndarray] = {}
    valid: dict[str, np.ndarray] = {}
    numerators: dict[str, np.ndarray] = {}
    denominators: dict[str, np.ndarray] = {}
    for key, store in ((region, numerators), (norm_key, denominators)):
        data = build_region_data(cohort, key)
        features = region_features(data, frange)
        hyper = _resolve_grid(grid, features.shape[1])
        if cv_predict is not None:
            oof = cv_predict(features, data.adjusted_cbf, hyper, k_outer, k_inner, seed)
        else:
            oof = nested_cv_predict(features, data.adjusted_cbf, hyper, k_outer, k_inner, seed, tol, max_passes)
        store["actual"] = data.adjusted_cbf
        store["predicted"] = oof.predicted
    for variant in ("actual", "predicted"):
        denom = denominators[variant]
        ok = denom > 0
        values = np.full(denom.size, np.nan)
        values[ok] = numerators[variant][ok] / denom[ok]
        tables[variant] = values
        valid[variant] = ok
    return tables, valid


def summarize_cohort(cohort: Cohort, welch: bool = False) -> list[DemographicRow]:
    """Demographic table: t-tests for age/education/MMSE, chi-square for sex."""
    records = cohort.records
    nc = [r for r in records if r.group == "NC"]
    mci = [r for r in records if r.group == "MCI"]
    if not nc or not mci:
        raise ValidationError("demographics need both NC and MCI subjects")
    rows = []

    def tt_row(variable, values, fmt):
        a = np.array([values(r) for r in nc], dtype=float)
        b = np.array([values(r) for r in mci], dtype=float)
        res = ttest2(a, b, welch=welch)
        rows.append(DemographicRow(variable, fmt(a), fmt(b), "t", res.statistic, res.p))

    mean_sd = lambda v: f"{v.mean():.2f} ({v.std(ddof=1):.2f})"
    range_sd = lambda v: f"{v.min():.0f}-{v.max():.0f} ({v.std(ddof=1):.2f})"
    tt_row("age", lambda r: r.age, mean_sd)
    counts = [[sum(1 for r in g if r.sex == "F"), sum(1 for r in g if r.sex == "M")] for g in (nc, mci)]
    sex_fmt = lambda c: f"{c[0]} ({100.0 * c[0] / (c[0] + c[1]):.2f}%)"
    try:
        chi = chisq_2x2(counts)
        chi_stat, chi_p = chi.statistic, chi.p
    except ValueError:  # a sex absent from the cohort: test undefined
        chi_stat, chi_p = math.nan, math.nan
    rows.append(DemographicRow("sex_female", sex_fmt(counts[0]), sex_fmt(counts[1]), "chi2", chi_stat, chi_p))
    tt_row("education", lambda r: r.education, mean_sd)
    tt_row("mmse", lambda r: r.mmse, range_sd)
    return rows


def _svg_number(value: float) -> str:
    return format(value, ".2f")


def scatter_svg(
    xs,
    ys,
    out_path,
    x_label: str = "actual",
    y_label: str = "predicted",
    annotation: str = "",
    size: int = 480,
) -> None:
    """Standalone scatter plot with a least-squares fit line; byte-identical
    output for identical inputs."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise ValueError("xs and ys must be equal-length non-empty 1-D arrays")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("scatter data must be finite")
    margin = 56.0
    span = size - 2 * margin

    def axis(values):
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    x_lo, x_hi = axis(xs)
    y_lo, y_hi = axis(ys)
    px = lambda v: margin + (v - x_lo) / (x_hi - x_lo) * span
    py = lambda v: size - margin - (v - y_lo) / (y_hi - y_lo) * span

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{_svg_number(margin)}" y="{_svg_number(margin)}" width="{_svg_number(span)}" height="{_svg_number(span)}" fill="none" stroke="black" stroke-width="1"/>',
    ]
    slope, intercept = np.polyfit(xs, ys, 1) if xs.size > 1 and np.ptp(xs) > 0 else (0.0, float(ys.mean()))
    x0, x1 = x_lo, x_hi
    lines.append(
        f'<line x1="{_svg_number(px(x0))}" y1="{_svg_number(py(slope * x0 + intercept))}" '
        f'x2="{_svg_number(px(x1))}" y2="{_svg_number(py(slope * x1 + intercept))}" '
        f'stroke="#888888" stroke-width="1.5"/>'
    )
    for x, y in zip(xs, ys):
        lines.append(f'<circle cx="{_svg_number(px(x))}" cy="{_svg_number(py(y))}" r="3" fill="#1f6fb2" fill-opacity="0.7"/>')
    lines.append(
        f'<text x="{_svg_number(size / 2)}" y="{_svg_number(size - 14)}" text-anchor="middle" font-family="monospace" font-size="13">{x_label}</text>'
    )
    lines.append(
        f'<text x="16" y="{_svg_number(size / 2)}" text-anchor="middle" font-family="monospace" font-size="13" '
        f'transform="rotate(-90 16 {_svg_number(size / 2)})">{y_label}</text>'
    )
    if annotation:
        lines.append(f'<text x="{_svg_number(margin + 8)}" y="{_svg_number(margin + 18)}" font-family="monospace" font-size="13">{annotation}</text>')
    for tick_v, is_x in ((x_lo, True), (x_hi, True), (y_lo, False), (y_hi, False)):
        if is_x:
            lines.append(
                f'<text x="{_svg_number(px(tick_v))}" y="{_svg_number(size - margin + 18)}" text-anchor="middle" '
                f'font-family="monospace" font-size="11">{_svg_number(tick_v)}</text>'
            )
        else:
            lines.append(
                f'<text x="{_svg_number(margin - 6)}" y="{_svg_number(py(tick_v) + 4)}" text-anchor="end" '
                f'font-family="monospace" font-size="11">{_svg_number(tick_v)}</text>'
            )
    lines.append("</svg>")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
