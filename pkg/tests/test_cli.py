import json
from pathlib import Path

import numpy as np
import pytest

from dctforensics.cli import main
from dctforensics.manifests import DatasetManifest


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """Small three-class corpus shared by the CLI tests."""
    d = tmp_path_factory.mktemp("synth")
    rc = run(
        "synth", "--out-dir", d, "--count", "30", "--classes", "clean,13,63",
        "--strength", "2.0", "--size", "128", "--seed", "11",
    )
    assert rc == 0
    return d


@pytest.fixture(scope="module")
def features_csv(synth_dir, tmp_path_factory):
    d = tmp_path_factory.mktemp("features")
    out = d / "features.csv"
    rc = run("extract", "--manifest", synth_dir / "manifest.json", "--out", out, "--seed", "1")
    assert rc == 0
    return out


def write_class_csv(features_csv, out_dir, keep_labels, name):
    lines = Path(features_csv).read_text().splitlines()
    header, rows = lines[0], lines[1:]
    kept = [r for r in rows if r.split(",")[1] in keep_labels]
    out = Path(out_dir) / f"{name}.csv"
    out.write_text("\n".join([header] + kept) + "\n")
    return out


class TestSynth:
    def test_manifest_and_images(self, synth_dir):
        manifest = DatasetManifest.load(synth_dir / "manifest.json")
        assert len(manifest.entries) == 90
        assert set(manifest.labels) == {"clean", "inject13", "inject63"}
        assert all(Path(e.path).exists() for e in manifest.entries)

    def test_provenance_written(self, synth_dir):
        prov = json.loads((synth_dir / "inject13" / "inject13_provenance.json").read_text())
        assert prov["artifact"]["target_coefficient"] == 13

    def test_bad_class_spec(self, tmp_path):
        assert run("synth", "--out-dir", tmp_path, "--count", "2", "--classes", "clean,oops") == 1


class TestExtract:
    def test_row_count(self, features_csv):
        rows = Path(features_csv).read_text().splitlines()
        assert len(rows) == 91  # header + 90

    def test_rerun_byte_identical(self, synth_dir, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for out in (a, b):
            assert run("extract", "--manifest", synth_dir / "manifest.json", "--out", out, "--seed", "1") == 0
        assert a.read_bytes() == b.read_bytes()

    def test_corrupt_entry_partial_failure(self, synth_dir, tmp_path):
        manifest = DatasetManifest.load(synth_dir / "manifest.json")
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not a png")
        entries = manifest.entries[:9] + [type(manifest.entries[0])(path=str(bad), label="clean")]
        m2 = DatasetManifest(name="broken", entries=entries, labels=manifest.labels)
        m2_path = tmp_path / "broken.json"
        m2.save(m2_path)
        out = tmp_path / "partial.csv"
        rc = run("extract", "--manifest", m2_path, "--out", out)
        assert rc == 3
        assert len(out.read_text().splitlines()) == 10  # header + 9 good rows
        errors = json.loads((str(out) + ".errors.json").read_text() if False else Path(str(out) + ".errors.json").read_text())
        assert len(errors["errors"]) == 1

    def test_empty_manifest_usage_error(self, tmp_path):
        m = tmp_path / "empty.json"
        DatasetManifest(name="empty", entries=[], labels=("x",)).save(m)
        assert run("extract", "--manifest", m, "--out", tmp_path / "o.csv") == 1

    def test_jsonl_variant(self, synth_dir, tmp_path):
        out = tmp_path / "f.csv"
        jsonl = tmp_path / "f.jsonl"
        assert run("extract", "--manifest", synth_dir / "manifest.json", "--out", out, "--jsonl", jsonl) == 0
        lines = [json.loads(l) for l in jsonl.read_text().splitlines()]
        assert len(lines) == 90
        assert "beta_1" in lines[0] and "label" in lines[0]


class TestGsf:
    def test_detects_injected_coefficient(self, features_csv, tmp_path):
        a = write_class_csv(features_csv, tmp_path, {"inject63"}, "inj")
        b = write_class_csv(features_csv, tmp_path, {"clean"}, "clean")
        report_path = tmp_path / "report.json"
        svg_path = tmp_path / "chart.svg"
        rc = run("gsf", "--features-a", a, "--features-b", b, "--out", report_path,
                 "--svg", svg_path, "--seed", "3")
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["gsf"] == 63
        assert report["seed"] == 3
        assert len(report["chi2"]) == 63
        assert len(report["reverse_chi2"]) == 63
        assert "config_hash" in report
        assert svg_path.read_text().startswith("<svg")

    def test_self_comparison_structured_no_signal(self, features_csv, tmp_path):
        a = write_class_csv(features_csv, tmp_path, {"clean"}, "same")
        report_path = tmp_path / "self.json"
        rc = run("gsf", "--features-a", a, "--features-b", a, "--out", report_path)
        assert rc == 2
        report = json.loads(report_path.read_text())
        assert report["error"] == "no-signal"

    def test_k_subsampling(self, features_csv, tmp_path):
        a = write_class_csv(features_csv, tmp_path, {"inject13"}, "a13")
        b = write_class_csv(features_csv, tmp_path, {"clean"}, "b13")
        report_path = tmp_path / "k.json"
        rc = run("gsf", "--features-a", a, "--features-b", b, "--out", report_path, "--k", "20")
        assert rc == 0
        assert json.loads(report_path.read_text())["K"] == 20


class TestTrainEval:
    def test_boosted_train_and_eval(self, features_csv, tmp_path):
        model_path = tmp_path / "model.json"
        report_path = tmp_path / "train_report.json"
        rc = run("train", "--features", features_csv, "--out", model_path,
                 "--report", report_path, "--train-fraction", "0.3", "--folds", "3", "--seed", "5")
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["folds"] == 3
        assert len(report["fold_reports"]) == 3
        assert report["mean_accuracy"] >= 99.0
        assert "config_hash" in report and report["seed"] == 5

        eval_path = tmp_path / "eval.json"
        rc = run("eval", "--model", model_path, "--features", features_csv, "--out", eval_path)
        assert rc == 0
        ev = json.loads(eval_path.read_text())
        assert ev["accuracy"] >= 99.0
        assert np.array(ev["confusion"]).sum() == 90

    def test_logistic_probe_autofeature(self, features_csv, tmp_path):
        two = write_class_csv(features_csv, tmp_path, {"clean", "inject13"}, "pair")
        model_path = tmp_path / "probe.json"
        report_path = tmp_path / "probe_report.json"
        rc = run("train", "--features", two, "--out", model_path, "--report", report_path,
                 "--classifier", "logistic", "--train-fraction", "0.2", "--folds", "2")
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["feature_index"] == 13
        assert report["mean_accuracy"] >= 95.0

    def test_binary_collapse_eval(self, features_csv, tmp_path):
        model_path = tmp_path / "m.json"
        rc = run("train", "--features", features_csv, "--out", model_path,
                 "--train-fraction", "0.2", "--folds", "2")
        assert rc == 0
        out = tmp_path / "binary.json"
        rc = run("eval", "--model", model_path, "--features", features_csv, "--out", out,
                 "--binary-collapse", "--real-label", "clean")
        assert rc == 0
        ev = json.loads(out.read_text())
        assert set(ev["classes"]) == {"clean", "fake"}

    def test_model_bytes_deterministic(self, features_csv, tmp_path):
        pa, pb = tmp_path / "ma.json", tmp_path / "mb.json"
        for p in (pa, pb):
            assert run("train", "--features", features_csv, "--out", p,
                       "--train-fraction", "0.2", "--folds", "2", "--seed", "9") == 0
        assert pa.read_bytes() == pb.read_bytes()


class TestAttackCmd:
    def _small_manifest(self, synth_dir, tmp_path, n=4):
        manifest = DatasetManifest.load(synth_dir / "manifest.json")
        small = DatasetManifest(name="small", entries=manifest.entries[:n], labels=manifest.labels)
        p = tmp_path / "small.json"
        small.save(p)
        return p

    def test_full_grid_counts(self, synth_dir, tmp_path):
        m = self._small_manifest(synth_dir, tmp_path)
        out_manifest = tmp_path / "attacked.json"
        rc = run("attack", "--manifest", m, "--out-dir", tmp_path / "out",
                 "--out-manifest", out_manifest, "--grid", "--seed", "2")
        assert rc == 0
        attacked = DatasetManifest.load(out_manifest)
        assert len(attacked.entries) == 4 + 4 * 17
        prov = (tmp_path / "out" / "provenance.jsonl").read_text().splitlines()
        assert len(prov) == 68
        rec = json.loads(prov[0])
        assert {"original", "output", "kind", "parameter", "seed"} <= set(rec)

    def test_attack_list_and_reproducibility(self, synth_dir, tmp_path):
        m = self._small_manifest(synth_dir, tmp_path, n=2)
        for sub in ("x", "y"):
            rc = run("attack", "--manifest", m, "--out-dir", tmp_path / sub,
                     "--out-manifest", tmp_path / f"{sub}.json",
                     "--attacks", "mirror:H,jpeg:50", "--seed", "4")
            assert rc == 0
        files = sorted(p.name for p in (tmp_path / "x").glob("*.png"))
        assert len(files) == 4
        for name in files:
            assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()

    def test_invalid_qf_rejected(self, synth_dir, tmp_path):
        m = self._small_manifest(synth_dir, tmp_path, n=2)
        rc = run("attack", "--manifest", m, "--out-dir", tmp_path / "o",
                 "--out-manifest", tmp_path / "o.json", "--attacks", "jpeg:75")
        assert rc == 2

    def test_no_attacks_usage_error(self, synth_dir, tmp_path):
        m = self._small_manifest(synth_dir, tmp_path, n=2)
        rc = run("attack", "--manifest", m, "--out-dir", tmp_path / "o",
                 "--out-manifest", tmp_path / "o.json")
        assert rc == 1


class TestAmplifyCmd:
    def test_writes_renders_and_report(self, synth_dir, tmp_path):
        manifest = DatasetManifest.load(synth_dir / "manifest.json")
        image = next(e.path for e in manifest.entries if e.label == "inject13")
        prefix = tmp_path / "amp"
        rc = run("amplify", "--image", image, "--gsf", "13", "--out-prefix", prefix)
        assert rc == 0
        for suffix in ("_amplified.png", "_spectrum_original.png", "_spectrum_amplified.png"):
            assert Path(str(prefix) + suffix).exists()
        report = json.loads(Path(str(prefix) + "_report.json").read_text())
        assert report["k1"] == 0.1 and report["k2"] == 100.0
        assert report["peak_ratio_amplified"] > report["peak_ratio_original"]

    def test_identity_render_matches_input(self, synth_dir, tmp_path):
        from dctforensics.image_io import decode

        manifest = DatasetManifest.load(synth_dir / "manifest.json")
        image = next(e.path for e in manifest.entries if e.label == "clean")
        prefix = tmp_path / "ident"
        rc = run("amplify", "--image", image, "--gsf", "5", "--k1", "1.0", "--k2", "1.0",
                 "--out-prefix", prefix)
        assert rc == 0
        original = decode(image).samples
        rendered = decode(str(prefix) + "_amplified.png").samples
        assert np.array_equal(rendered, original)

    def test_bad_index(self, synth_dir, tmp_path):
        manifest = DatasetManifest.load(synth_dir / "manifest.json")
        image = manifest.entries[0].path
        assert run("amplify", "--image", image, "--gsf", "99", "--out-prefix", tmp_path / "z") == 2


class TestUsage:
    def test_unknown_command(self):
        assert run("frobnicate") == 1

    def test_missing_required(self):
        assert run("extract") == 1
