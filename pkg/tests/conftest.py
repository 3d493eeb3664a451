import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cbfsurrogate.datamodel import load_cohort
from cbfsurrogate.synthcohort import SynthConfig, generate_cohort


def write_cohort_files(
    out_dir: Path,
    subjects: list[dict],
    atlas_rows: list[tuple[str, str, int]],
    n_timepoints: int = 96,
    tr: float = 0.72,
    series_fn=None,
    cbf_fn=None,
):
    """Write a minimal hand-made cohort; series_fn(subject_index, roi_index)
    -> 1-D array and cbf_fn(subject_index, roi_index) -> float customize
    the data files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(99)
    roi_names = [r[0] for r in atlas_rows]
    with open(out_dir / "atlas.csv", "w", newline="\n") as fh:
        fh.write("roi,lobe,in_lobar_gm\n")
        for roi, lobe, flag in atlas_rows:
            fh.write(f"{roi},{lobe},{flag}\n")
    lines = ["subject_id,group,age,sex,education,mmse,tr,timeseries_path,cbf_path"]
    for i, subj in enumerate(subjects):
        sid = subj["subject_id"]
        ts_name, cbf_name = f"ts_{sid}.csv", f"cbf_{sid}.csv"
        series = np.column_stack(
            [
                series_fn(i, j) if series_fn else rng.normal(size=n_timepoints)
                for j in range(len(roi_names))
            ]
        )
        with open(out_dir / ts_name, "w", newline="\n") as fh:
            fh.write(",".join(roi_names) + "\n")
            for row in series:
                fh.write(",".join(format(v, ".10g") for v in row) + "\n")
        with open(out_dir / cbf_name, "w", newline="\n") as fh:
            fh.write("roi,cbf\n")
            for j, roi in enumerate(roi_names):
                value = cbf_fn(i, j) if cbf_fn else 50.0 + rng.normal()
                fh.write(f"{roi},{format(value, '.10g')}\n")
        lines.append(
            f"{sid},{subj.get('group', 'NC')},{subj.get('age', 70)},{subj.get('sex', 'F')},"
            f"{subj.get('education', 16)},{subj.get('mmse', 29)},{tr},{ts_name},{cbf_name}"
        )
    with open(out_dir / "manifest.csv", "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return out_dir / "manifest.csv", out_dir / "atlas.csv"


FOUR_LOBE_ATLAS = [
    ("f_roi", "frontal", 1),
    ("t_roi", "temporal", 1),
    ("p_roi", "parietal", 1),
    ("o_roi", "occipital", 1),
]


@pytest.fixture(scope="session")
def synth_cohort(tmp_path_factory):
    """Small deterministic synthetic cohort shared by report/CLI tests."""
    out = tmp_path_factory.mktemp("synth_small")
    cfg = SynthConfig(n_subjects=24, n_rois=8, n_timepoints=96, seed=7, mci_fraction=0.4, group_deficit=6.0)
    manifest = generate_cohort(cfg, out)
    return load_cohort(manifest, out / "atlas.csv")
