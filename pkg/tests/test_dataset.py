import numpy as np
import numpy.testing as npt
import pytest

from csisense import dataset as ds
from csisense import formats
from csisense.errors import (
    ConsistencyError,
    DegenerateDataError,
    FormatError,
    RangeError,
    ValidationError,
)


class TestMakeSplit:
    def test_full_scale_counts(self):
        split = ds.make_split(1394)
        assert split.count("test") == 278
        assert split.count("train") == 1116

    def test_single_period(self):
        assert ds.make_split(5) == ["train"] * 4 + ["test"]

    def test_below_one_period(self):
        assert ds.make_split(4) == ["train"] * 4

    @pytest.mark.parametrize("n", [0, 1, 7, 100, 1394])
    def test_partition_and_size(self, n):
        split = ds.make_split(n)
        assert len(split) == n
        assert all(s in ("train", "test") for s in split)
        assert split.count("test") == n // 5

    def test_phase_knob(self):
        assert ds.make_split(5, phase=0) == ["test"] + ["train"] * 4
        with pytest.raises(ValidationError):
            ds.make_split(5, phase=5)


class TestSegment:
    def test_slice(self):
        raw = np.arange(52 * 300, dtype=float).reshape(52, 300)
        out = ds.segment(raw, ds.Annotation("s", 50, 170))
        assert out.shape == (52, 120)
        npt.assert_array_equal(out, raw[:, 50:170])

    def test_full_range_identity(self):
        raw = np.random.default_rng(0).standard_normal((52, 40))
        out = ds.segment(raw, ds.Annotation("s", 0, 40))
        npt.assert_array_equal(out, raw)

    def test_degenerate_window(self):
        with pytest.raises(RangeError):
            ds.Annotation("s", 10, 10)

    def test_out_of_bounds(self):
        raw = np.zeros((52, 30))
        with pytest.raises(RangeError):
            ds.segment(raw, ds.Annotation("s", 5, 31))


class TestResample:
    def test_identity_at_target_length(self):
        x = np.random.default_rng(1).standard_normal((52, 192))
        npt.assert_array_equal(ds.resample_linear(x), x)

    def test_constant_channel(self):
        x = np.full((3, 77), 3.5)
        npt.assert_allclose(ds.resample_linear(x), 3.5)

    def test_two_point_ramp(self):
        # brute-force two-point lerp oracle: value at grid position p is
        # x0 + p * (x1 - x0), with p = j / 191
        out = ds.resample_linear(np.array([[0.0, 1.0]]))
        oracle = np.array([j / 191 for j in range(192)])
        npt.assert_allclose(out[0], oracle, atol=1e-15)
        assert out[0, 0] == 0.0 and out[0, 191] == 1.0

    def test_idempotent(self):
        x = np.random.default_rng(2).standard_normal((5, 140))
        once = ds.resample_linear(x)
        npt.assert_array_equal(ds.resample_linear(once), once)

    def test_no_overshoot(self):
        x = np.random.default_rng(3).standard_normal((4, 33))
        out = ds.resample_linear(x)
        assert (out.min(axis=1) >= x.min(axis=1) - 1e-12).all()
        assert (out.max(axis=1) <= x.max(axis=1) + 1e-12).all()

    def test_too_short(self):
        with pytest.raises(DegenerateDataError):
            ds.resample_linear(np.zeros((52, 1)))


def _fp(sample_id, amplitudes, activity=0, location=0):
    return ds.CsiFingerprint(
        amplitudes=np.asarray(amplitudes, dtype=np.float64),
        activity=activity,
        location=location,
        sample_id=sample_id,
    )


def _manifest(rows):
    return ds.DatasetManifest(samples=[ds.ManifestRow(*r) for r in rows])


class TestStandardize:
    def test_train_stats_hit_zero_one(self):
        rng = np.random.default_rng(4)
        fps = [
            _fp(f"s{i}", 10 + 2 * rng.standard_normal((52, 192))) for i in range(6)
        ]
        manifest = _manifest(
            [(f"s{i}", 0, 0, "train" if i < 5 else "test") for i in range(6)]
        )
        out = ds.standardize(fps, manifest)
        train_stack = np.stack([fp.amplitudes for fp in out[:5]])
        assert abs(train_stack.mean()) < 1e-6
        assert abs(train_stack.std() - 1.0) < 1e-6

    def test_hand_value(self):
        # train has mean 10, std 2; a test amplitude of 14 maps to (14-10)/2 = 2
        fps = [
            _fp("a", np.full((52, 192), 8.0)),
            _fp("b", np.full((52, 192), 12.0)),
            _fp("c", np.full((52, 192), 14.0)),
        ]
        manifest = _manifest([("a", 0, 0, "train"), ("b", 0, 0, "train"), ("c", 0, 0, "test")])
        out = ds.standardize(fps, manifest)
        assert manifest.normalization == (10.0, 2.0)
        npt.assert_allclose(out[2].amplitudes, 2.0)

    def test_zero_variance(self):
        fps = [_fp("a", np.full((52, 192), 3.0)), _fp("b", np.full((52, 192), 3.0))]
        manifest = _manifest([("a", 0, 0, "train"), ("b", 0, 0, "train")])
        with pytest.raises(DegenerateDataError):
            ds.standardize(fps, manifest)

    def test_fixed_point(self):
        rng = np.random.default_rng(5)
        raw = rng.standard_normal((2, 52, 192))
        raw = (raw - raw.mean()) / raw.std()
        fps = [_fp("a", raw[0]), _fp("b", raw[1])]
        manifest = _manifest([("a", 0, 0, "train"), ("b", 0, 0, "train")])
        out = ds.standardize(fps, manifest)
        for before, after in zip(fps, out):
            npt.assert_allclose(after.amplitudes, before.amplitudes, atol=1e-6)

    def test_roundtrip(self):
        rng = np.random.default_rng(6)
        fps = [_fp(f"s{i}", 20 + 7 * rng.standard_normal((52, 192))) for i in range(4)]
        manifest = _manifest([(f"s{i}", 0, 0, "train") for i in range(4)])
        back = ds.destandardize(ds.standardize(fps, manifest), manifest)
        for before, after in zip(fps, back):
            assert np.abs(after.amplitudes - before.amplitudes).max() < 1e-6


class TestCsvFiles:
    def test_manifest_roundtrip(self, tmp_path):
        rows = [
            ds.ManifestRow("s0", 0, 0, "train"),
            ds.ManifestRow("s1", 5, 15, "test"),
        ]
        p = tmp_path / "m.csv"
        ds.write_manifest_csv(p, rows)
        assert ds.read_manifest_csv(p) == rows

    def test_manifest_label_out_of_range(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("sample_id,activity,location,split\ns0,6,0,train\n")
        with pytest.raises(ValidationError):
            ds.read_manifest_csv(p)

    def test_manifest_bad_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("id,act,loc,split\n")
        with pytest.raises(FormatError):
            ds.read_manifest_csv(p)

    def test_manifest_duplicate_id(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(
            "sample_id,activity,location,split\ns0,0,0,train\ns0,1,1,test\n"
        )
        with pytest.raises(ValidationError):
            ds.read_manifest_csv(p)

    def test_annotations_roundtrip(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("sample_id,start_idx,end_idx\ns0,10,50\ns1,0,30\n")
        anns = ds.read_annotations_csv(p)
        assert anns["s0"].start_idx == 10 and anns["s0"].end_idx == 50
        assert len(anns) == 2

    def test_coords_default_grid(self, tmp_path):
        p = tmp_path / "c.csv"
        ds.write_default_coords(p)
        coords = ds.read_coords_csv(p)
        assert len(coords) == 16
        assert coords[0] == (0.0, 0.0)
        assert coords[5] == (1.0, 1.0)
        assert coords[15] == (3.0, 3.0)

    def test_coords_wrong_count(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("location_id,x_m,y_m\n0,0.0,0.0\n")
        with pytest.raises(ValidationError):
            ds.read_coords_csv(p)


class TestLoadSave:
    def _write(self, tmp_path, n=5):
        rng = np.random.default_rng(7)
        fps = [
            _fp(f"s{i}", rng.standard_normal((52, 192)), activity=i % 6,
                location=i % 16)
            for i in range(n)
        ]
        manifest = _manifest(
            [(f"s{i}", i % 6, i % 16, split) for i, split in
             enumerate(ds.make_split(n))]
        )
        c = tmp_path / "d.csit"
        m = tmp_path / "m.csv"
        ds.save_dataset(c, m, fps, manifest)
        return c, m, fps

    def test_roundtrip(self, tmp_path):
        c, m, fps = self._write(tmp_path)
        back, manifest = ds.load_dataset(c, m)
        assert len(back) == 5
        assert manifest.split_counts() == (4, 1)
        for orig, loaded in zip(fps, back):
            assert loaded.sample_id == orig.sample_id
            npt.assert_allclose(
                loaded.amplitudes, orig.amplitudes.astype(np.float32), atol=0
            )

    def test_save_load_save_bit_exact(self, tmp_path):
        c, m, _ = self._write(tmp_path)
        fps, manifest = ds.load_dataset(c, m)
        c2 = tmp_path / "d2.csit"
        m2 = tmp_path / "m2.csv"
        ds.save_dataset(c2, m2, fps, manifest)
        assert c.read_bytes() == c2.read_bytes()
        assert m.read_text() == m2.read_text()

    def test_empty_container(self, tmp_path):
        c = tmp_path / "e.csit"
        m = tmp_path / "e.csv"
        formats.write_container(c, np.zeros((0, 52, 192), dtype=np.float32))
        m.write_text("sample_id,activity,location,split\n")
        fps, manifest = ds.load_dataset(c, m)
        assert fps == [] and manifest.samples == []

    def test_count_mismatch(self, tmp_path):
        c, m, _ = self._write(tmp_path)
        m.write_text("sample_id,activity,location,split\ns0,0,0,train\n")
        with pytest.raises(ConsistencyError):
            ds.load_dataset(c, m)

    def test_wrong_shape(self, tmp_path):
        c = tmp_path / "bad.csit"
        m = tmp_path / "m.csv"
        formats.write_container(c, np.zeros((1, 52, 100), dtype=np.float32))
        m.write_text("sample_id,activity,location,split\ns0,0,0,train\n")
        with pytest.raises(FormatError):
            ds.load_dataset(c, m)
