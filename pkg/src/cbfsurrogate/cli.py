"""Command-line entry point.

Subcommands: synth, features, predict, evaluate, sweep, groups, cognition,
demographics, all. Every run writes its artifacts under --out plus a
run_meta.json echoing the resolved configuration, the seed and sha256
checksums of all emitted files (self-audited after writing).

Exit codes: 0 success, 1 validation/usage error, 2 runtime or convergence
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from cbfsurrogate import __version__
from cbfsurrogate.crossval import ConvergenceError, GridSpec, nested_cv_predict
from cbfsurrogate.datamodel import Cohort, RegionKey, ValidationError, load_cohort
from cbfsurrogate.report import (
    build_region_data,
    cognition_correlation,
    default_regions,
    evaluate_regions,
    frequency_sweep,
    group_compare,
    region_features,
    relative_cbf_analysis,
    scatter_svg,
    subgroup_masks,
    summarize_cohort,
    _resolve_grid,
)
from cbfsurrogate.spectral import FrequencyRange
from cbfsurrogate.stats import fdr_bh
from cbfsurrogate.svr import dump_model, train_svr
from cbfsurrogate.synthcohort import SynthConfig, generate_cohort

JOBS_ENV_VAR = "CBF_SURROGATE_JOBS"
DEFAULT_RANGES = (0.10, 0.15, 0.20)


def _fmt(value) -> str:
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".10g")


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors (exit 1)
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _parse_regions(spec: str, cohort: Cohort) -> list[RegionKey]:
    out: list[RegionKey] = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "all":
            out += default_regions(cohort)
        elif token == "lobar_gm":
            out.append(RegionKey.total())
        elif token == "lobes":
            out += [k for k in default_regions(cohort) if k.kind == "lobe"]
        elif token == "rois":
            out += [RegionKey("roi", e.roi) for e in cohort.atlas.entries]
        elif ":" in token:
            kind, name = token.split(":", 1)
            out.append(RegionKey(kind.strip(), name.strip()))
        else:
            raise ValidationError(f"cannot parse region {token!r}; use lobar_gm, lobes, rois, lobe:NAME or roi:NAME")
    seen = set()
    unique = []
    for key in out:
        if key not in seen:
            seen.add(key)
            unique.append(key)
    return unique


def _parse_floats(spec: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in spec.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"cannot parse float list {spec!r}") from None


def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("--manifest", required=True, help="cohort manifest CSV")
        p.add_argument("--atlas", help="ROI atlas CSV (defaults to atlas.csv next to the manifest)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help=f"worker processes (default: ${JOBS_ENV_VAR} or cpu count)")
    p.add_argument("--k-outer", type=int, default=None)
    p.add_argument("--k-inner", type=int, default=None)
    p.add_argument("--ranges", default=None, help="comma list of f_max values, e.g. 0.10,0.15,0.20")
    p.add_argument("--regions", default=None, help="comma list: lobar_gm, lobes, rois, lobe:NAME, roi:NAME, all")
    p.add_argument("--c-values", default=None, help="override grid C axis (comma floats)")
    p.add_argument("--gamma-values", default=None, help="override grid gamma axis (comma floats, absolute)")
    p.add_argument("--epsilon-values", default=None, help="override grid epsilon axis (comma floats)")
    p.add_argument("--features", choices=("per-region", "whole-brain"), default=None)
    p.add_argument("--sweep-mode", choices=("single", "prefix"), default=None)
    p.add_argument("--sweep-region", default=None, help="region spec for the frequency sweep (default lobar_gm)")
    p.add_argument("--group-regions", default=None, help="region specs for group/cognition analyses, or 'auto'")
    p.add_argument("--range", dest="single_range", default=None, help="f_max for groups/cognition (default 0.15)")
    p.add_argument("--welch", action="store_true", default=None)
    p.add_argument("--dump-models", action="store_true", default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-passes", type=int, default=None)


_DEFAULTS = {
    "seed": 0,
    "jobs": None,  # resolved against env / cpu count
    "k_outer": 10,
    "k_inner": 10,
    "ranges": "0.10,0.15,0.20",
    "regions": "all",
    "c_values": None,
    "gamma_values": None,
    "epsilon_values": None,
    "features": "per-region",
    "sweep_mode": "single",
    "sweep_region": "lobar_gm",
    "group_regions": "auto",
    "single_range": "0.15",
    "welch": False,
    "dump_models": False,
    "tol": 1e-3,
    "max_passes": 10_000,
}

_CONFIG_PARSERS = {
    "seed": int,
    "jobs": int,
    "k_outer": int,
    "k_inner": int,
    "max_passes": int,
    "tol": float,
    "welch": lambda v: v.strip().lower() in ("1", "true", "yes"),
    "dump_models": lambda v: v.strip().lower() in ("1", "true", "yes"),
}


def _read_config_file(path: str) -> dict:
    values = {}
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise ValidationError(f"config file not found: {path}")
    for line in cfg_path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line is not key=value: {line!r}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _DEFAULTS:
            raise ValidationError(f"unknown config key {key!r}")
        values[key] = _CONFIG_PARSERS.get(key, str)(value.strip())
    return values


class RunConfig:
    """Flags merged over config-file values merged over defaults."""

    def __init__(self, args: argparse.Namespace):
        file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
        self._resolved = {}
        for key, default in _DEFAULTS.items():
            flag = getattr(args, key, None)
            self._resolved[key] = flag if flag is not None else file_values.get(key, default)
        if self._resolved["jobs"] is None:
            env = os.environ.get(JOBS_ENV_VAR)
            self._resolved["jobs"] = int(env) if env else (os.cpu_count() or 1)
        if self._resolved["jobs"] < 1:
            raise ValidationError("--jobs must be >= 1")

    def __getattr__(self, key):
        try:
            return self._resolved[key]
        except KeyError:
            raise AttributeError(key) from None

    def grid(self) -> GridSpec:
        as_floats = lambda v: _parse_floats(v) if isinstance(v, str) else v
        return GridSpec(
            c_values=as_floats(self.c_values),
            gamma_values=as_floats(self.gamma_values),
            epsilon_values=as_floats(self.epsilon_values),
        )

    def franges(self) -> list[FrequencyRange]:
        return [FrequencyRange(f) for f in _parse_floats(self.ranges)]

    def echo(self) -> dict:
        # jobs is pure scheduling: results are identical for any value, so
        # keep it out of the reproducibility record
        return {k: v for k, v in sorted(self._resolved.items()) if k != "jobs"}


class RunWriter:
    """Collects emitted files and finishes with a checksummed run_meta."""

    def __init__(self, out_dir: Path, command: str, config: RunConfig):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.paths: list[Path] = []

    def csv(self, name: str, header: list[str], rows: list[list[str]]) -> Path:
        path = self.out / name
        _write_csv(path, header, rows)
        self.paths.append(path)
        return path

    def register(self, path: Path) -> None:
        self.paths.append(path)

    def finish(self) -> Path:
        checksums = {}
        for path in sorted(self.paths):
            checksums[str(path.relative_to(self.out))] = hashlib.sha256(path.read_bytes()).hexdigest()
        meta = {
            "command": self.command,
            "version": __version__,
            "config": self.config.echo(),
            "artifacts": checksums,
        }
        meta_path = self.out / "run_meta.json"
        with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for rel, digest in checksums.items():  # self-audit
            actual = hashlib.sha256((self.out / rel).read_bytes()).hexdigest()
            if actual != digest:
                raise RuntimeError(f"artifact {rel} changed during run_meta writing")
        return meta_path


def _load(args) -> Cohort:
    manifest = Path(args.manifest)
    atlas = Path(args.atlas) if getattr(args, "atlas", None) else manifest.parent / "atlas.csv"
    return load_cohort(manifest, atlas)


def _region_rows_for_features(cohort: Cohort, regions: list[RegionKey]) -> list[list[str]]:
    rows = []
    for key in sorted(regions, key=RegionKey.sort_key):
        data = build_region_data(cohort, key)
        for i, subject in enumerate(cohort.subjects):
            rows.append(
                [subject.record.subject_id, key.kind, key.name]
                + [_fmt(v) for v in data.bins[i]]
                + [_fmt(data.total_variance[i])]
            )
    return rows


def cmd_features(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    regions = _parse_regions(cfg.regions, cohort)
    writer = RunWriter(args.out, "features", cfg)
    header = ["subject_id", "region_kind", "region_name"] + [f"bin{k}" for k in range(8)] + ["total_variance"]
    writer.csv("features.csv", header, _region_rows_for_features(cohort, regions))
    writer.finish()
    return 0


def _prediction_rows(cohort: Cohort, predictions: dict, seed: int) -> list[list[str]]:
    rows = []
    for (key, f_max), oof in sorted(predictions.items(), key=lambda kv: (kv[0][1], kv[0][0].sort_key())):
        for i, subject in enumerate(cohort.subjects):
            fold = int(oof.outer_fold[i])
            params = oof.chosen_params[fold]
            rows.append(
                [
                    subject.record.subject_id,
                    key.kind,
                    key.name,
                    _fmt(f_max),
                    _fmt(oof.actual[i]),
                    _fmt(oof.predicted[i]),
                    str(fold),
                    _fmt(params.c),
                    _fmt(params.gamma),
                    _fmt(params.epsilon),
                    str(seed),
                ]
            )
    return rows


PREDICTION_HEADER = [
    "subject_id",
    "region_kind",
    "region_name",
    "freq_max",
    "actual_cbf",
    "predicted_cbf",
    "outer_fold",
    "c",
    "gamma",
    "epsilon",
    "seed",
]


def _run_evaluation(cohort: Cohort, cfg: RunConfig, regions: list[RegionKey]):
    return evaluate_regions(
        cohort,
        regions,
        cfg.franges(),
        grid=cfg.grid(),
        seed=cfg.seed,
        k_outer=cfg.k_outer,
        k_inner=cfg.k_inner,
        whole_brain=cfg.features == "whole-brain",
        jobs=cfg.jobs,
        tol=cfg.tol,
        max_passes=cfg.max_passes,
    )


def _dump_models(writer: RunWriter, cohort: Cohort, cfg: RunConfig, predictions: dict) -> None:
    model_dir = writer.out / "models"
    model_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    for (key, f_max), oof in sorted(predictions.items(), key=lambda kv: (kv[0][1], kv[0][0].sort_key())):
        data = build_region_data(cohort, key)
        features = region_features(data, FrequencyRange(f_max))
        for fold in range(oof.folds.k):
            tr = oof.train_indices[fold]
            model = train_svr(
                features[tr], data.adjusted_cbf[tr], oof.chosen_params[fold], tol=cfg.tol, max_passes=cfg.max_passes
            )
            path = model_dir / f"model_{_slug(key.kind)}_{_slug(key.name)}_{_fmt(f_max)}_fold{fold}.csv"
            dump_model(model, path)
            writer.register(path)


def cmd_predict(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    regions = _parse_regions(cfg.regions, cohort)
    writer = RunWriter(args.out, "predict", cfg)
    _, predictions = _run_evaluation(cohort, cfg, regions)
    writer.csv("predictions.csv", PREDICTION_HEADER, _prediction_rows(cohort, predictions, cfg.seed))
    if cfg.dump_models:
        _dump_models(writer, cohort, cfg, predictions)
    writer.finish()
    return 0


EVALUATION_HEADER = ["region_kind", "region_name", "freq_max", "n", "r", "p", "fdr_p", "undefined_flag"]


def _evaluation_rows(rows) -> list[list[str]]:
    return [
        [
            row.region.kind,
            row.region.name,
            _fmt(row.freq_max),
            str(row.n),
            _fmt(row.r),
            _fmt(row.p),
            _fmt(row.fdr_p),
            "1" if row.undefined else "0",
        ]
        for row in rows
    ]


def _evaluation_figures(writer: RunWriter, cohort: Cohort, rows, predictions, explicit_regions: bool) -> None:
    fig_dir = writer.out / "figures"
    for row in rows:
        if row.region.kind == "roi" and not explicit_regions:
            continue
        oof = predictions[(row.region, row.freq_max)]
        fig_dir.mkdir(parents=True, exist_ok=True)
        note = "r undefined" if row.undefined else f"r = {row.r:.3f}, FDR-p = {row.fdr_p:.3g}"
        path = fig_dir / f"scatter_{_slug(row.region.kind)}_{_slug(row.region.name)}_{_fmt(row.freq_max)}.svg"
        scatter_svg(
            oof.actual,
            oof.predicted,
            path,
            x_label="actual CBF (adjusted, ml/100g/min)",
            y_label="predicted CBF (ml/100g/min)",
            annotation=note,
        )
        writer.register(path)


def cmd_evaluate(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    regions = _parse_regions(cfg.regions, cohort)
    writer = RunWriter(args.out, "evaluate", cfg)
    rows, predictions = _run_evaluation(cohort, cfg, regions)
    writer.csv("evaluation.csv", EVALUATION_HEADER, _evaluation_rows(rows))
    writer.csv("predictions.csv", PREDICTION_HEADER, _prediction_rows(cohort, predictions, cfg.seed))
    _evaluation_figures(writer, cohort, rows, predictions, explicit_regions=args.regions is not None)
    if cfg.dump_models:
        _dump_models(writer, cohort, cfg, predictions)
    writer.finish()
    return 0


SWEEP_HEADER = ["bin_index", "bin_center", "r", "mean_abs_diff", "sd_abs_diff"]


def _sweep_rows(rows) -> list[list[str]]:
    return [
        [str(row.bin_index), _fmt(row.bin_center), _fmt(row.r), _fmt(row.mean_abs_diff), _fmt(row.sd_abs_diff)]
        for row in rows
    ]


def cmd_sweep(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    region_list = _parse_regions(cfg.sweep_region, cohort)
    if len(region_list) != 1:
        raise ValidationError("--sweep-region must name exactly one region")
    writer = RunWriter(args.out, "sweep", cfg)
    rows = frequency_sweep(
        cohort,
        region_list[0],
        grid=cfg.grid(),
        seed=cfg.seed,
        k_outer=cfg.k_outer,
        k_inner=cfg.k_inner,
        mode=cfg.sweep_mode,
        tol=cfg.tol,
        max_passes=cfg.max_passes,
    )
    writer.csv("sweep.csv", SWEEP_HEADER, _sweep_rows(rows))
    writer.finish()
    return 0


GROUPS_HEADER = ["region_kind", "region_name", "variant", "group_a", "group_b", "n_a", "n_b", "t", "df", "p", "fdr_p", "computable"]
COGNITION_HEADER = ["region_kind", "region_name", "variant", "n", "r", "p", "fdr_p", "undefined_flag"]


def _group_region_keys(cfg: RunConfig, cohort: Cohort, eval_rows=None) -> list[RegionKey]:
    spec = cfg.group_regions
    if spec != "auto":
        return _parse_regions(spec, cohort)
    if eval_rows is None:
        raise ValidationError("--group-regions auto requires an evaluation pass; name a region explicitly")
    target = float(_parse_floats(cfg.single_range)[0])
    candidates = [r for r in eval_rows if r.region.kind == "roi" and not r.undefined and abs(r.freq_max - target) < 1e-9]
    if not candidates:
        raise ValidationError("no ROI evaluation rows available to pick --group-regions auto from")
    best = max(candidates, key=lambda r: (r.r, r.region.name))
    return [best.region]


def _groups_rows(cohort: Cohort, cfg: RunConfig, regions: list[RegionKey]) -> tuple[list[list[str]], dict]:
    frange = FrequencyRange(float(_parse_floats(cfg.single_range)[0]))
    out_rows = []
    analyses = {}
    for region in sorted(regions, key=RegionKey.sort_key):
        tables, valid = relative_cbf_analysis(
            cohort, region, frange, grid=cfg.grid(), seed=cfg.seed, k_outer=cfg.k_outer, k_inner=cfg.k_inner,
            tol=cfg.tol, max_passes=cfg.max_passes,
        )
        analyses[region] = (tables, valid)
        for row in group_compare(cohort, tables, region, valid, welch=cfg.welch):
            res = row.result
            out_rows.append(
                [
                    region.kind,
                    region.name,
                    row.variant,
                    row.group_a,
                    row.group_b,
                    str(row.n_a),
                    str(row.n_b),
                    _fmt(res.statistic) if row.computable else "",
                    _fmt(res.df) if row.computable else "",
                    _fmt(res.p) if row.computable else "",
                    _fmt(res.fdr_p) if row.computable and res.fdr_p is not None else "",
                    "1" if row.computable else "0",
                ]
            )
    return out_rows, analyses


def cmd_groups(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    regions = _group_region_keys(cfg, cohort)
    writer = RunWriter(args.out, "groups", cfg)
    rows, _ = _groups_rows(cohort, cfg, regions)
    writer.csv("groups.csv", GROUPS_HEADER, rows)
    writer.finish()
    return 0


def _cognition_rows(cohort: Cohort, cfg: RunConfig, regions: list[RegionKey], writer: RunWriter | None = None):
    frange = FrequencyRange(float(_parse_floats(cfg.single_range)[0]))
    mmse = np.array([s.record.mmse for s in cohort.subjects], dtype=float)
    entries = []
    for region in sorted(regions, key=RegionKey.sort_key):
        tables, valid = relative_cbf_analysis(
            cohort, region, frange, grid=cfg.grid(), seed=cfg.seed, k_outer=cfg.k_outer, k_inner=cfg.k_inner,
            tol=cfg.tol, max_passes=cfg.max_passes,
        )
        for variant in ("actual", "predicted"):
            ok = valid[variant]
            res = cognition_correlation(tables[variant][ok], mmse[ok])
            entries.append((region, variant, res, tables[variant][ok], mmse[ok]))
    defined = [e for e in entries if not e[2].undefined]
    if defined:
        adjusted = fdr_bh([e[2].p for e in defined])
        for (region, variant, res, *_), q in zip(defined, adjusted):
            res.fdr_p = float(q)
    rows = []
    for region, variant, res, rel, mm in entries:
        rows.append(
            [
                region.kind,
                region.name,
                variant,
                str(res.n),
                _fmt(res.statistic),
                _fmt(res.p),
                _fmt(res.fdr_p) if res.fdr_p is not None else "nan",
                "1" if res.undefined else "0",
            ]
        )
        if writer is not None and variant == "predicted" and not res.undefined:
            fig_dir = writer.out / "figures"
            fig_dir.mkdir(parents=True, exist_ok=True)
            path = fig_dir / f"cognition_{_slug(region.kind)}_{_slug(region.name)}.svg"
            scatter_svg(
                mm,
                rel,
                path,
                x_label="MMSE",
                y_label="predicted relative CBF",
                annotation=f"r = {res.statistic:.3f}, FDR-p = {res.fdr_p:.3g}",
            )
            writer.register(path)
    return rows


def cmd_cognition(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    regions = _group_region_keys(cfg, cohort)
    writer = RunWriter(args.out, "cognition", cfg)
    rows = _cognition_rows(cohort, cfg, regions, writer)
    writer.csv("cognition.csv", COGNITION_HEADER, rows)
    writer.finish()
    return 0


DEMOGRAPHICS_HEADER = ["variable", "nc", "mci", "test", "statistic", "p"]


def cmd_demographics(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    writer = RunWriter(args.out, "demographics", cfg)
    rows = [
        [row.variable, row.nc_summary, row.mci_summary, row.test, _fmt(row.statistic), _fmt(row.p)]
        for row in summarize_cohort(cohort, welch=cfg.welch)
    ]
    writer.csv("demographics.csv", DEMOGRAPHICS_HEADER, rows)
    writer.finish()
    return 0


def cmd_all(args) -> int:
    cfg = RunConfig(args)
    cohort = _load(args)
    regions = _parse_regions(cfg.regions, cohort)
    writer = RunWriter(args.out, "all", cfg)

    demo_rows = [
        [row.variable, row.nc_summary, row.mci_summary, row.test, _fmt(row.statistic), _fmt(row.p)]
        for row in summarize_cohort(cohort, welch=cfg.welch)
    ]
    writer.csv("demographics.csv", DEMOGRAPHICS_HEADER, demo_rows)

    header = ["subject_id", "region_kind", "region_name"] + [f"bin{k}" for k in range(8)] + ["total_variance"]
    writer.csv("features.csv", header, _region_rows_for_features(cohort, regions))

    eval_rows, predictions = _run_evaluation(cohort, cfg, regions)
    writer.csv("evaluation.csv", EVALUATION_HEADER, _evaluation_rows(eval_rows))
    writer.csv("predictions.csv", PREDICTION_HEADER, _prediction_rows(cohort, predictions, cfg.seed))
    _evaluation_figures(writer, cohort, eval_rows, predictions, explicit_regions=args.regions is not None)
    if cfg.dump_models:
        _dump_models(writer, cohort, cfg, predictions)

    sweep_list = _parse_regions(cfg.sweep_region, cohort)
    sweep_rows = frequency_sweep(
        cohort, sweep_list[0], grid=cfg.grid(), seed=cfg.seed, k_outer=cfg.k_outer, k_inner=cfg.k_inner,
        mode=cfg.sweep_mode, tol=cfg.tol, max_passes=cfg.max_passes,
    )
    writer.csv("sweep.csv", SWEEP_HEADER, _sweep_rows(sweep_rows))

    masks = subgroup_masks(cohort)
    if all(int(mask.sum()) >= 2 for mask in masks.values()):
        group_keys = _group_region_keys(cfg, cohort, eval_rows)
        group_rows, _ = _groups_rows(cohort, cfg, group_keys)
        writer.csv("groups.csv", GROUPS_HEADER, group_rows)
        writer.csv("cognition.csv", COGNITION_HEADER, _cognition_rows(cohort, cfg, group_keys, writer))
    writer.finish()
    return 0


def cmd_synth(args) -> int:
    cfg_kwargs = dict(
        n_subjects=args.subjects,
        n_rois=args.rois,
        tr=args.tr,
        n_timepoints=args.timepoints,
        coupling_kappa=args.kappa,
        noise_sd=args.noise_sd,
        mci_fraction=args.mci_fraction,
        cbf_base=args.cbf_base,
        cbf_sd=args.cbf_sd,
        group_deficit=args.group_deficit,
        mmse_coupling=args.mmse_coupling,
        seed=args.seed,
    )
    if args.band:
        lo_hi = _parse_floats(args.band)
        if len(lo_hi) != 2:
            raise ValidationError("--band must be 'lo,hi' in Hz")
        cfg_kwargs["coupled_band"] = (lo_hi[0], lo_hi[1])
    try:
        cfg = SynthConfig(**cfg_kwargs)
    except ValueError as err:
        raise ValidationError(str(err)) from None
    manifest = generate_cohort(cfg, args.out)
    print(manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cbfsurrogate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func in (
        ("features", cmd_features),
        ("predict", cmd_predict),
        ("evaluate", cmd_evaluate),
        ("sweep", cmd_sweep),
        ("groups", cmd_groups),
        ("cognition", cmd_cognition),
        ("demographics", cmd_demographics),
        ("all", cmd_all),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("synth")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subjects", type=int, default=80)
    p.add_argument("--rois", type=int, default=16)
    p.add_argument("--tr", type=float, default=0.72)
    p.add_argument("--timepoints", type=int, default=240)
    p.add_argument("--band", default=None)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--mci-fraction", type=float, default=0.35)
    p.add_argument("--cbf-base", type=float, default=50.0)
    p.add_argument("--cbf-sd", type=float, default=6.0)
    p.add_argument("--group-deficit", type=float, default=0.0)
    p.add_argument("--mmse-coupling", type=float, default=2.0)
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValidationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ConvergenceError, RuntimeError, OSError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
