import numpy as np
import pytest

from cbfsurrogate.datamodel import (
    RegionKey,
    ValidationError,
    aggregate_region,
    load_atlas,
    load_cohort,
)
from conftest import FOUR_LOBE_ATLAS, write_cohort_files

TWO_SUBJECTS = [{"subject_id": "s1"}, {"subject_id": "s2", "group": "MCI", "mmse": 26}]


class TestLoadCohort:
    def test_minimal_cohort(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS)
        cohort = load_cohort(manifest, atlas)
        assert cohort.n_subjects == 2
        assert cohort.records[0].subject_id == "s1"
        assert cohort.records[1].group == "MCI"
        assert cohort.subjects[0].timeseries.samples.shape == (96, 4)

    def test_duplicate_subject(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, [{"subject_id": "s1"}, {"subject_id": "s1"}], FOUR_LOBE_ATLAS)
        with pytest.raises(ValidationError, match="duplicate subject"):
            load_cohort(manifest, atlas)

    def test_cbf_missing_roi_named(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS)
        cbf = tmp_path / "cbf_s2.csv"
        lines = cbf.read_text().splitlines()
        cbf.write_text("\n".join(line for line in lines if not line.startswith("p_roi")) + "\n")
        with pytest.raises(ValidationError, match="p_roi"):
            load_cohort(manifest, atlas)

    def test_timeseries_missing_roi(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS)
        ts = tmp_path / "ts_s1.csv"
        lines = ts.read_text().splitlines()
        header = lines[0].replace("o_roi", "renamed_roi")
        ts.write_text("\n".join([header] + lines[1:]) + "\n")
        with pytest.raises(ValidationError, match="o_roi"):
            load_cohort(manifest, atlas)

    def test_missing_file(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS)
        (tmp_path / "ts_s1.csv").unlink()
        with pytest.raises(ValidationError, match="missing file"):
            load_cohort(manifest, atlas)

    def test_mmse_out_of_range(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, [{"subject_id": "s1", "mmse": 31}, {"subject_id": "s2"}], FOUR_LOBE_ATLAS)
        with pytest.raises(ValidationError, match="mmse"):
            load_cohort(manifest, atlas)

    def test_too_few_timepoints(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS, n_timepoints=32)
        with pytest.raises(ValidationError, match="timepoints"):
            load_cohort(manifest, atlas)

    def test_column_harmonization(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS)
        cohort1 = load_cohort(manifest, atlas)
        ts = tmp_path / "ts_s1.csv"
        rows = [line.split(",") for line in ts.read_text().splitlines()]
        permuted = [[row[2], row[0], row[3], row[1]] for row in rows]
        ts.write_text("\n".join(",".join(r) for r in permuted) + "\n")
        cohort2 = load_cohort(manifest, atlas)
        assert cohort2.subjects[0].timeseries.roi_names == cohort1.subjects[0].timeseries.roi_names
        assert np.allclose(cohort2.subjects[0].timeseries.samples, cohort1.subjects[0].timeseries.samples)

    def test_load_idempotent(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS)
        a = load_cohort(manifest, atlas)
        b = load_cohort(manifest, atlas)
        assert a.records == b.records
        assert a.atlas == b.atlas
        for sa, sb in zip(a.subjects, b.subjects):
            assert np.array_equal(sa.timeseries.samples, sb.timeseries.samples)
            assert np.array_equal(sa.cbf, sb.cbf)

    def test_atlas_validation(self, tmp_path):
        bad = tmp_path / "atlas.csv"
        bad.write_text("roi,lobe,in_lobar_gm\nr1,weird,1\n")
        with pytest.raises(ValidationError, match="invalid lobe"):
            load_atlas(bad)
        bad.write_text("roi,lobe,in_lobar_gm\nr1,frontal,0\n")
        with pytest.raises(ValidationError, match="in_lobar_gm"):
            load_atlas(bad)


class TestRegionKey:
    def test_lobe_names_validated(self):
        with pytest.raises(ValidationError):
            RegionKey("lobe", "cerebellum")

    def test_total_name_fixed(self):
        with pytest.raises(ValidationError):
            RegionKey("total_lobar_gm", "everything")
        assert RegionKey.total().name == "lobar_gm"

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            RegionKey("voxel", "x")


class TestAggregateRegion:
    @pytest.fixture()
    def cohort(self, tmp_path):
        # constant series per ROI so aggregation means are exact
        series_fn = lambda i, j: np.full(96, float(j + 1))
        cbf_fn = lambda i, j: 10.0 * (j + 1)
        manifest, atlas = write_cohort_files(
            tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS, series_fn=series_fn, cbf_fn=cbf_fn
        )
        return load_cohort(manifest, atlas)

    def test_roi_passthrough(self, cohort):
        subject = cohort.subjects[0]
        series, cbf = aggregate_region(subject.timeseries, subject.cbf, cohort.atlas, RegionKey("roi", "p_roi"))
        assert np.all(series == 3.0)
        assert cbf == 30.0

    def test_mean_of_constants(self, cohort):
        subject = cohort.subjects[0]
        series, cbf = aggregate_region(subject.timeseries, subject.cbf, cohort.atlas, RegionKey.total())
        assert np.all(series == 2.5)  # mean of 1,2,3,4
        assert cbf == 25.0

    def test_total_matches_direct_mean_oracle(self, tmp_path):
        rng = np.random.default_rng(0)
        series_fn = lambda i, j: rng.normal(size=96)
        manifest, atlas = write_cohort_files(tmp_path, TWO_SUBJECTS, FOUR_LOBE_ATLAS, series_fn=series_fn)
        cohort = load_cohort(manifest, atlas)
        subject = cohort.subjects[1]
        series, cbf = aggregate_region(subject.timeseries, subject.cbf, cohort.atlas, RegionKey.total())
        in_gm = [i for i, e in enumerate(cohort.atlas.entries) if e.in_lobar_gm]
        direct = sum(subject.timeseries.samples[:, i] for i in in_gm) / len(in_gm)
        assert np.allclose(series, direct, atol=1e-12)
        assert cbf == pytest.approx(sum(subject.cbf[i] for i in in_gm) / len(in_gm))

    def test_permutation_invariance(self, tmp_path):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(96, 4))
        series_fn = lambda i, j: data[:, j]
        manifest, atlas = write_cohort_files(tmp_path, [{"subject_id": "s1"}], FOUR_LOBE_ATLAS, series_fn=series_fn)
        cohort = load_cohort(manifest, atlas)
        shuffled_atlas = tmp_path / "atlas2.csv"
        rows = (tmp_path / "atlas.csv").read_text().splitlines()
        shuffled_atlas.write_text("\n".join([rows[0]] + rows[1:][::-1]) + "\n")
        cohort2 = load_cohort(manifest, shuffled_atlas)
        s1, c1 = aggregate_region(cohort.subjects[0].timeseries, cohort.subjects[0].cbf, cohort.atlas, RegionKey.total())
        s2, c2 = aggregate_region(cohort2.subjects[0].timeseries, cohort2.subjects[0].cbf, cohort2.atlas, RegionKey.total())
        assert np.allclose(s1, s2, atol=1e-12)
        assert c1 == pytest.approx(c2)

    def test_empty_member_set(self, tmp_path):
        atlas_rows = [("a", "frontal", 1), ("b", "parietal", 0)]
        manifest, atlas = write_cohort_files(tmp_path, [{"subject_id": "s1"}], atlas_rows)
        cohort = load_cohort(manifest, atlas)
        with pytest.raises(ValidationError, match="no in_lobar_gm member"):
            aggregate_region(cohort.subjects[0].timeseries, cohort.subjects[0].cbf, cohort.atlas, RegionKey("lobe", "parietal"))

    def test_unknown_roi(self, tmp_path):
        manifest, atlas = write_cohort_files(tmp_path, [{"subject_id": "s1"}], FOUR_LOBE_ATLAS)
        cohort = load_cohort(manifest, atlas)
        with pytest.raises(ValidationError, match="not in atlas"):
            aggregate_region(cohort.subjects[0].timeseries, cohort.subjects[0].cbf, cohort.atlas, RegionKey("roi", "nope"))
