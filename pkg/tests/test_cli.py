import json

import numpy as np
import pytest

from csisense import dataset as ds
from csisense import formats, model, synth
from csisense.cli import main
from csisense.train import SplitData, TrainConfig, train


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def raw_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("raw")
    cfg = synth.SynthConfig(locations=4, activities=3, reps=1, discard=0)
    synth.write_raw_dir(str(d), seed=21, cfg=cfg)
    return d


@pytest.fixture(scope="module")
def raw_dir_annotated(tmp_path_factory):
    d = tmp_path_factory.mktemp("raw_ann")
    cfg = synth.SynthConfig(locations=3, activities=2, reps=1, discard=0)
    synth.write_raw_dir(str(d), seed=22, cfg=cfg, annotated=True)
    return d


@pytest.fixture(scope="module")
def overfit_run(tiny_dataset_dir, tmp_path_factory):
    """A checkpoint memorizing a 10-sample toy container (8 train / 2 test
    by the standard split), for exercising eval and export end to end."""
    d = tmp_path_factory.mktemp("overfit")
    container = str(d / "toy.csit")
    manifest_csv = str(d / "toy_manifest.csv")
    full, _ = ds.load_dataset(
        str(tiny_dataset_dir / "dataset.csit"), str(tiny_dataset_dir / "manifest.csv")
    )
    toy = full[:10]
    rows = [
        ds.ManifestRow(fp.sample_id, fp.activity, fp.location, split)
        for fp, split in zip(toy, ds.make_split(10))
    ]
    ds.save_dataset(container, manifest_csv, toy, ds.DatasetManifest(samples=rows))

    fps, mani = ds.load_dataset(container, manifest_csv)
    fps = ds.standardize(fps, mani)
    x, act, loc = ds.to_arrays(fps)
    everything = SplitData(x=x, act=act, loc=loc)
    spec = model.NetworkSpec((1, 1, 1, 1), 0.0625)
    net = model.build(spec).init_params(17)
    # overfit on all ten samples so the held-out two are memorized
    train(net, everything, everything, TrainConfig(epochs=40, batch_size=10, seed=17))
    ckpt = str(d / "stub.ckpt")
    netspec = str(d / "netspec.txt")
    formats.write_checkpoint(ckpt, net.state_dict())
    model.write_netspec(netspec, spec, seed=17)
    return {"container": container, "manifest": manifest_csv, "ckpt": ckpt,
            "netspec": netspec, "dir": d}


class TestConvert:
    def test_presegmented(self, raw_dir, tmp_path):
        out = tmp_path / "out"
        assert main(["--out", str(out), "convert", str(raw_dir)]) == 0
        data = formats.read_container(out / "dataset.csit")
        assert data.shape == (12, 52, 192)
        rows = ds.read_manifest_csv(out / "manifest.csv")
        assert len(rows) == 12
        assert sum(1 for r in rows if r.split == "test") == 12 // 5
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["command"] == "convert"
        assert manifest["dataset_fnv1a64"] == f"{formats.fnv1a64_file(out / 'dataset.csit'):016x}"

    def test_idempotent(self, raw_dir, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        main(["--out", str(out1), "convert", str(raw_dir)])
        main(["--out", str(out2), "convert", str(raw_dir)])
        assert _read(out1 / "dataset.csit") == _read(out2 / "dataset.csit")
        assert _read(out1 / "manifest.csv") == _read(out2 / "manifest.csv")

    def test_annotated(self, raw_dir_annotated, tmp_path):
        out = tmp_path / "out"
        code = main([
            "--out", str(out), "convert", str(raw_dir_annotated),
            "--annotations", str(raw_dir_annotated / "annotations.csv"),
        ])
        assert code == 0
        assert formats.read_container(out / "dataset.csit").shape == (6, 52, 192)

    def test_empty_dir(self, tmp_path, capsys):
        raw = tmp_path / "raw"
        raw.mkdir()
        (raw / "samples.csv").write_text("sample_id,activity,location\n")
        assert main(["--out", str(tmp_path / "o"), "convert", str(raw)]) == 1
        err = capsys.readouterr().err
        assert err.startswith("ERROR validation:")
        assert "zero samples" in err

    def test_unknown_annotation_id(self, raw_dir, tmp_path, capsys):
        ann = tmp_path / "ann.csv"
        ann.write_text("sample_id,start_idx,end_idx\nghost,0,50\n")
        code = main([
            "--out", str(tmp_path / "o"), "convert", str(raw_dir),
            "--annotations", str(ann),
        ])
        assert code == 1
        assert "ghost" in capsys.readouterr().err


class TestTrain:
    def test_zero_epochs_is_a_config_error(self, tiny_dataset_dir, tmp_path, capsys):
        code = main([
            "--out", str(tmp_path / "o"), "train",
            str(tiny_dataset_dir / "dataset.csit"), str(tiny_dataset_dir / "manifest.csv"),
            "--epochs", "0",
        ])
        assert code == 1
        assert capsys.readouterr().err.startswith("ERROR config:")

    def test_small_run_outputs(self, tiny_dataset_dir, tmp_path):
        out = tmp_path / "run"
        code = main([
            "--seed", "5", "--out", str(out), "train",
            str(tiny_dataset_dir / "dataset.csit"), str(tiny_dataset_dir / "manifest.csv"),
            "--width", "0.0625", "--epochs", "2", "--quiet",
        ])
        assert code == 0
        curve = (out / "curve.csv").read_text().splitlines()
        assert len(curve) == 3  # header + 2 epochs
        spec, seed = model.read_netspec(out / "netspec.txt")
        assert seed == 5 and spec.width_multiplier == 0.0625
        ckpt = formats.read_checkpoint(out / "checkpoint.ckpt")
        assert any(name.startswith("stem.conv") for name in ckpt)

    def test_same_seed_byte_identical_curves(self, tiny_dataset_dir, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            code = main([
                "--seed", "9", "--out", str(out), "train",
                str(tiny_dataset_dir / "dataset.csit"),
                str(tiny_dataset_dir / "manifest.csv"),
                "--width", "0.0625", "--epochs", "2", "--quiet",
            ])
            assert code == 0
            outs.append(out)
        assert _read(outs[0] / "curve.csv") == _read(outs[1] / "curve.csv")


class TestEval:
    def test_overfit_stub_is_perfect(self, overfit_run, tiny_dataset_dir, tmp_path):
        out = tmp_path / "eval"
        code = main([
            "--out", str(out), "eval", overfit_run["container"], overfit_run["manifest"],
            overfit_run["ckpt"], overfit_run["netspec"],
            "--coords", str(tiny_dataset_dir / "coords.csv"),
        ])
        assert code == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == "task,accuracy,ale_m,ame_m"
        act_row = lines[1].split(",")
        loc_row = lines[2].split(",")
        assert act_row[0] == "activity" and float(act_row[1]) == 1.0
        assert loc_row[0] == "location" and float(loc_row[1]) == 1.0
        assert loc_row[2] == "0.0000"  # perfect -> zero mean location error
        assert loc_row[3] == "na"  # no misclassified samples -> not applicable
        assert (out / "activity_confusion.csv").exists()
        assert (out / "location_metrics.csv").exists()

    def test_idempotent_outputs(self, overfit_run, tiny_dataset_dir, tmp_path):
        outs = []
        for name in ("e1", "e2"):
            out = tmp_path / name
            code = main([
                "--out", str(out), "eval", overfit_run["container"],
                overfit_run["manifest"], overfit_run["ckpt"], overfit_run["netspec"],
                "--coords", str(tiny_dataset_dir / "coords.csv"),
            ])
            assert code == 0
            outs.append(out)
        for name in (
            "summary.csv", "activity_metrics.csv", "location_metrics.csv",
            "activity_confusion.csv", "location_confusion.csv",
        ):
            assert _read(outs[0] / name) == _read(outs[1] / name)

    def test_missing_coords_degrades_gracefully(self, overfit_run, tmp_path):
        out = tmp_path / "eval"
        code = main([
            "--out", str(out), "eval", overfit_run["container"], overfit_run["manifest"],
            overfit_run["ckpt"], overfit_run["netspec"],
        ])
        assert code == 0
        loc_row = (out / "summary.csv").read_text().splitlines()[2].split(",")
        assert loc_row[2] == "na" and loc_row[3] == "na"
        assert (out / "activity_metrics.csv").exists()

    def test_checkpoint_spec_mismatch(self, overfit_run, tmp_path, capsys):
        wrong_spec = tmp_path / "netspec.txt"
        model.write_netspec(wrong_spec, model.NetworkSpec((2, 2, 2, 2), 0.0625), seed=0)
        code = main([
            "--out", str(tmp_path / "o"), "eval", overfit_run["container"],
            overfit_run["manifest"], overfit_run["ckpt"], str(wrong_spec),
        ])
        assert code == 1
        assert capsys.readouterr().err.startswith("ERROR compatibility:")


class TestBaselineCommand:
    def test_dtw_knn_report(self, overfit_run, tmp_path):
        out = tmp_path / "bl"
        code = main([
            "--out", str(out), "baseline", overfit_run["container"],
            overfit_run["manifest"], "dtw-knn", "--decimation", "6",
        ])
        assert code == 0
        lines = (out / "baseline_report.csv").read_text().splitlines()
        assert lines[0] == "method,task,accuracy,config_string,wall_seconds"
        assert len(lines) == 3
        assert lines[1].startswith("dtw-knn,activity,")
        assert lines[2].startswith("dtw-knn,location,")

    def test_svm_single_class_fails(self, tmp_path, capsys):
        # a container whose training split holds one activity class only
        rng = np.random.default_rng(0)
        fps = [
            ds.CsiFingerprint(rng.standard_normal((52, 192)), 2, i % 16, f"s{i}")
            for i in range(6)
        ]
        rows = [
            ds.ManifestRow(fp.sample_id, fp.activity, fp.location, split)
            for fp, split in zip(fps, ds.make_split(6))
        ]
        c = str(tmp_path / "single.csit")
        m = str(tmp_path / "single.csv")
        ds.save_dataset(c, m, fps, ds.DatasetManifest(samples=rows))
        code = main(["--out", str(tmp_path / "o"), "baseline", c, m, "svm-rbf"])
        assert code == 1
        assert capsys.readouterr().err.startswith("ERROR training:")

    def test_unknown_method_is_a_usage_error(self, overfit_run, tmp_path):
        code = main([
            "--out", str(tmp_path / "o"), "baseline", overfit_run["container"],
            overfit_run["manifest"], "nearest-centroid",
        ])
        assert code == 2


class TestExportFeatures:
    def test_tap_widths(self, overfit_run, tmp_path):
        out = tmp_path / "feat"
        code = main([
            "--out", str(out), "export-features", overfit_run["container"],
            overfit_run["manifest"], overfit_run["ckpt"], overfit_run["netspec"],
            "--taps", "input,output-activity,output-location",
        ])
        assert code == 0
        input_rows = (out / "features_input.csv").read_text().splitlines()
        assert len(input_rows) == 2  # toy test split
        assert len(input_rows[0].split(",")) == 9985  # id + 52 * 192
        act_rows = (out / "features_output-activity.csv").read_text().splitlines()
        loc_rows = (out / "features_output-location.csv").read_text().splitlines()
        assert len(act_rows[0].split(",")) == 7
        assert len(loc_rows[0].split(",")) == 17

    def test_unknown_tap(self, overfit_run, tmp_path, capsys):
        code = main([
            "--out", str(tmp_path / "o"), "export-features", overfit_run["container"],
            overfit_run["manifest"], overfit_run["ckpt"], overfit_run["netspec"],
            "--taps", "RB5",
        ])
        assert code == 1
        assert capsys.readouterr().err.startswith("ERROR config:")


def test_threads_flag_accepted(tiny_dataset_dir, tmp_path):
    out = tmp_path / "o"
    code = main([
        "--threads", "1", "--out", str(out), "train",
        str(tiny_dataset_dir / "dataset.csit"), str(tiny_dataset_dir / "manifest.csv"),
        "--width", "0.0625", "--epochs", "1", "--quiet",
    ])
    assert code == 0
