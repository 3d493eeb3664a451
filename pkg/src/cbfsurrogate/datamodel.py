"""Cohort ingestion: manifest, ROI atlas, per-subject time-series and CBF
tables, plus ROI-to-lobe aggregation.

All files are plain CSV. ROI names are matched case-sensitively after
trimming surrounding whitespace; any mismatch between the atlas and a
subject's files is a hard error, never a silent drop of the subject.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LOBES = ("frontal", "temporal", "parietal", "occipital")
ATLAS_LOBES = LOBES + ("other",)
GROUPS = ("NC", "MCI")
SEXES = ("F", "M")
TOTAL_LOBAR_NAME = "lobar_gm"
MIN_TIMEPOINTS = 64

MANIFEST_COLUMNS = ["subject_id", "group", "age", "sex", "education", "mmse", "tr", "timeseries_path", "cbf_path"]
ATLAS_COLUMNS = ["roi", "lobe", "in_lobar_gm"]


class ValidationError(ValueError):
    """Input data violates the cohort contracts."""


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    group: str
    age: float
    sex: str
    education: float
    mmse: int
    tr: float
    timeseries_path: Path
    cbf_path: Path


@dataclass(frozen=True)
class AtlasEntry:
    roi: str
    lobe: str
    in_lobar_gm: bool


@dataclass(frozen=True)
class RoiAtlas:
    entries: tuple[AtlasEntry, ...]

    def __post_init__(self):
        names = [e.roi for e in self.entries]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate ROI name in atlas")
        if not any(e.in_lobar_gm for e in self.entries):
            raise ValidationError("atlas needs at least one in_lobar_gm ROI")
        for e in self.entries:
            if e.lobe not in ATLAS_LOBES:
                raise ValidationError(f"invalid lobe {e.lobe!r} for ROI {e.roi!r}")

    @property
    def roi_names(self) -> tuple[str, ...]:
        return tuple(e.roi for e in self.entries)

    def members(self, key: "RegionKey") -> list[int]:
        """Column indices of the ROIs a region key aggregates over."""
        if key.kind == "roi":
            for idx, e in enumerate(self.entries):
                if e.roi == key.name:
                    return [idx]
            raise ValidationError(f"ROI {key.name!r} not in atlas")
        if key.kind == "lobe":
            found = [i for i, e in enumerate(self.entries) if e.in_lobar_gm and e.lobe == key.name]
        else:  # total_lobar_gm
            found = [i for i, e in enumerate(self.entries) if e.in_lobar_gm]
        if not found:
            raise ValidationError(f"region {key.name!r} has no in_lobar_gm member ROIs")
        return found


@dataclass(frozen=True)
class RegionKey:
    kind: str  # 'roi' | 'lobe' | 'total_lobar_gm'
    name: str

    def __post_init__(self):
        if self.kind == "lobe":
            if self.name not in LOBES:
                raise ValidationError(f"lobe must be one of {LOBES}, got {self.name!r}")
        elif self.kind == "total_lobar_gm":
            if self.name != TOTAL_LOBAR_NAME:
                raise ValidationError(f"total_lobar_gm key is always named {TOTAL_LOBAR_NAME!r}")
        elif self.kind != "roi":
            raise ValidationError(f"unknown region kind {self.kind!r}")

    @classmethod
    def total(cls) -> "RegionKey":
        return cls(kind="total_lobar_gm", name=TOTAL_LOBAR_NAME)

    def sort_key(self) -> tuple[int, str]:
        return ({"total_lobar_gm": 0, "lobe": 1, "roi": 2}[self.kind], self.name)

    def __str__(self) -> str:
        return self.name if self.kind == "total_lobar_gm" else f"{self.kind}:{self.name}"


@dataclass(frozen=True)
class RoiTimeSeries:
    roi_names: tuple[str, ...]
    samples: np.ndarray  # timepoints x ROIs
    tr: float


@dataclass
class SubjectData:
    record: SubjectRecord
    timeseries: RoiTimeSeries
    cbf: np.ndarray  # aligned to atlas ROI order


@dataclass
class Cohort:
    subjects: list[SubjectData]
    atlas: RoiAtlas

    @property
    def records(self) -> list[SubjectRecord]:
        return [s.record for s in self.subjects]

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)


def _read_csv(path: Path) -> list[list[str]]:
    if not path.exists():
        raise ValidationError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValidationError(f"empty file: {path}")
    return rows


def _check_header(rows: list[list[str]], expected: list[str], path: Path) -> None:
    header = [c.strip() for c in rows[0]]
    if header != expected:
        raise ValidationError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")


def load_atlas(path) -> RoiAtlas:
    path = Path(path)
    rows = _read_csv(path)
    _check_header(rows, ATLAS_COLUMNS, path)
    entries = []
    for row in rows[1:]:
        if len(row) != 3:
            raise ValidationError(f"{path}: malformed atlas row {row}")
        roi, lobe, flag = (c.strip() for c in row)
        if flag not in ("0", "1"):
            raise ValidationError(f"{path}: in_lobar_gm must be 0 or 1, got {flag!r} for ROI {roi!r}")
        entries.append(AtlasEntry(roi=roi, lobe=lobe, in_lobar_gm=flag == "1"))
    return RoiAtlas(entries=tuple(entries))


def _parse_subject_row(row: list[str], base: Path, path: Path) -> SubjectRecord:
    if len(row) != len(MANIFEST_COLUMNS):
        raise ValidationError(f"{path}: manifest row has {len(row)} fields, expected {len(MANIFEST_COLUMNS)}")
    sid, group, age, sex, edu, mmse, tr, ts_path, cbf_path = (c.strip() for c in row)
    if group not in GROUPS:
        raise ValidationError(f"subject {sid!r}: group must be NC or MCI, got {group!r}")
    if sex not in SEXES:
        raise ValidationError(f"subject {sid!r}: sex must be F or M, got {sex!r}")
    try:
        age_v, edu_v, tr_v = float(age), float(edu), float(tr)
        mmse_v = int(mmse)
    except ValueError as err:
        raise ValidationError(f"subject {sid!r}: non-numeric field ({err})") from None
    if age_v <= 0:
        raise ValidationError(f"subject {sid!r}: age must be > 0, got {age_v}")
    if edu_v < 0:
        raise ValidationError(f"subject {sid!r}: education must be >= 0, got {edu_v}")
    if not 0 <= mmse_v <= 30:
        raise ValidationError(f"subject {sid!r}: mmse out of range [0, 30]: {mmse_v}")
    if tr_v <= 0:
        raise ValidationError(f"subject {sid!r}: tr must be > 0, got {tr_v}")
    return SubjectRecord(
        subject_id=sid,
        group=group,
        age=age_v,
        sex=sex,
        education=edu_v,
        mmse=mmse_v,
        tr=tr_v,
        timeseries_path=base / ts_path,
        cbf_path=base / cbf_path,
    )


def load_timeseries(path, tr: float, atlas: RoiAtlas) -> RoiTimeSeries:
    """Load a time-series CSV and reorder columns to the atlas ROI order."""
    path = Path(path)
    rows = _read_csv(path)
    names = [c.strip() for c in rows[0]]
    try:
        samples = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as err:
        raise ValidationError(f"{path}: non-numeric sample ({err})") from None
    if samples.ndim != 2 or samples.shape[1] != len(names):
        raise ValidationError(f"{path}: ragged rows or column count mismatch")
    if samples.shape[0] < MIN_TIMEPOINTS:
        raise ValidationError(f"{path}: {samples.shape[0]} timepoints < required {MIN_TIMEPOINTS}")
    if not np.all(np.isfinite(samples)):
        raise ValidationError(f"{path}: missing or non-finite samples")
    index = {n: i for i, n in enumerate(names)}
    cols = []
    for roi in atlas.roi_names:
        if roi not in index:
            raise ValidationError(f"{path}: atlas ROI {roi!r} missing from time series")
        cols.append(index[roi])
    return RoiTimeSeries(roi_names=atlas.roi_names, samples=samples[:, cols], tr=tr)


def load_cbf_table(path, atlas: RoiAtlas) -> np.ndarray:
    """Load a CBF CSV and return values aligned to the atlas ROI order."""
    path = Path(path)
    rows = _read_csv(path)
    _check_header(rows, ["roi", "cbf"], path)
    table: dict[str, float] = {}
    for row in rows[1:]:
        if len(row) != 2:
            raise ValidationError(f"{path}: malformed CBF row {row}")
        roi = row[0].strip()
        try:
            value = float(row[1])
        except ValueError:
            raise ValidationError(f"{path}: non-numeric CBF for ROI {roi!r}") from None
        if not np.isfinite(value):
            raise ValidationError(f"{path}: non-finite CBF for ROI {roi!r}")
        table[roi] = value
    missing = [roi for roi in atlas.roi_names if roi not in table]
    if missing:
        raise ValidationError(f"{path}: CBF table lacks atlas ROI {missing[0]!r}")
    return np.array([table[roi] for roi in atlas.roi_names], dtype=float)


def load_cohort(manifest_path, atlas_path) -> Cohort:
    """Load and validate a full cohort; relative file paths resolve against
    the manifest's directory."""
    manifest_path = Path(manifest_path)
    atlas = load_atlas(atlas_path)
    rows = _read_csv(manifest_path)
    _check_header(rows, MANIFEST_COLUMNS, manifest_path)
    base = manifest_path.parent
    subjects = []
    seen: set[str] = set()
    for row in rows[1:]:
        record = _parse_subject_row(row, base, manifest_path)
        if record.subject_id in seen:
            raise ValidationError(f"duplicate subject {record.subject_id!r}")
        seen.add(record.subject_id)
        ts = load_timeseries(record.timeseries_path, record.tr, atlas)
        cbf = load_cbf_table(record.cbf_path, atlas)
        subjects.append(SubjectData(record=record, timeseries=ts, cbf=cbf))
    if not subjects:
        raise ValidationError(f"{manifest_path}: no subjects")
    return Cohort(subjects=subjects, atlas=atlas)


def aggregate_region(ts: RoiTimeSeries, cbf: np.ndarray, atlas: RoiAtlas, key: RegionKey) -> tuple[np.ndarray, float]:
    """Unweighted mean over member ROIs of both the time series and CBF;
    identity passthrough for kind='roi'."""
    members = atlas.members(key)
    series = ts.samples[:, members].mean(axis=1)
    value = float(np.asarray(cbf, dtype=float)[members].mean())
    return series, value
