import json

import numpy as np
import pytest

from helpers import make_coco_doc
from mpseg.cli import main
from mpseg.dataset import read_mask_png

TRI = [[2.0, 2.0, 20.0, 2.0, 10.0, 20.0]]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    code = main(["synth", "--n", "6", "--seed", "5", "--canvas", "96",
                 "--out", str(out)])
    assert code == 0
    return out


@pytest.fixture()
def pipeline_toml(tmp_path):
    path = tmp_path / "pipeline.toml"
    path.write_text(
        """
seed = 11
[classifier]
kind = "oracle"
[[rca_ensemble]]
kind = "oracle"
[[lca_ensemble]]
kind = "oracle"
"""
    )
    return path


def run_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_taxonomy_json(capsys):
    code, report = run_json(capsys, ["taxonomy", "--json"])
    assert code == 0
    assert report["status"] == "ok"
    assert len(report["payload"]["classes"]) == 25
    assert report["payload"]["rca_count"] == 8
    assert report["payload"]["lca_count"] == 17


def test_taxonomy_human(capsys):
    assert main(["taxonomy"]) == 0
    out = capsys.readouterr().out
    assert "16c" in out and "25 classes" in out


def test_validate_ok(write_json, capsys):
    path = write_json(make_coco_doc([(1, 32, 32)], [(1, 1, 5, TRI)]))
    code, report = run_json(capsys, ["validate", str(path), "--json"])
    assert code == 0
    assert report["payload"]["images"] == 1


def test_validate_error_exit_2(write_json, capsys):
    path = write_json(make_coco_doc([(1, 32, 32)], [(1, 99, 5, TRI)]))
    assert main(["validate", str(path)]) == 2
    assert "error" in capsys.readouterr().err


def test_validate_missing_file():
    assert main(["validate", "/nonexistent/file.json"]) == 2


def test_stats_matches_manifest(synth_dir, capsys):
    manifest = json.loads((synth_dir / "manifest.json").read_text())
    code, report = run_json(
        capsys, ["stats", str(synth_dir / "annotations.json"), "--json"]
    )
    assert code == 0
    assert report["payload"]["class_histogram"] == manifest["class_counts"]
    assert report["payload"]["rca_images"] == manifest["rca_images"]
    assert report["payload"]["lca_images"] == manifest["lca_images"]


def test_rasterize(synth_dir, tmp_path, capsys):
    out = tmp_path / "masks"
    code = main(["rasterize", str(synth_dir / "annotations.json"), "--out", str(out)])
    assert code == 0
    files = sorted(out.glob("*.png"))
    assert len(files) == 6
    mask = read_mask_png(files[0])
    assert mask.shape == (96, 96)
    assert set(np.unique(mask)) <= set(range(26))


def test_split_deterministic(synth_dir, capsys):
    argv = ["split", str(synth_dir / "annotations.json"),
            "--folds", "3", "--seed", "4", "--json"]
    code, a = run_json(capsys, argv)
    assert code == 0
    _, b = run_json(capsys, argv)
    assert a["payload"] == b["payload"]
    folds = a["payload"]["folds"]
    assert len(folds) == 3
    all_val = sorted(v for f in folds for v in f["val"])
    assert all_val == sorted({im for f in folds for im in f["train"] + f["val"]})


def test_split_bad_folds_exit_2(synth_dir):
    assert main(["split", str(synth_dir / "annotations.json"),
                 "--folds", "1", "--seed", "0"]) == 2


def test_eval_same_file_is_one(synth_dir, capsys):
    ann = str(synth_dir / "annotations.json")
    code = main(["eval", "--gt", ann, "--pred", ann])
    assert code == 0
    assert "dataset mean F1: 1.000000" in capsys.readouterr().out


def test_eval_writes_report(synth_dir, tmp_path, capsys):
    ann = str(synth_dir / "annotations.json")
    report_path = tmp_path / "report.json"
    code = main(["eval", "--gt", ann, "--pred", ann,
                 "--per-class", "--json", str(report_path)])
    assert code == 0
    doc = json.loads(report_path.read_text())
    assert doc["dataset_mean_f1"] == 1.0
    assert doc["skipped_images"] == 0


def test_eval_mask_dirs(synth_dir, tmp_path, capsys):
    ann = str(synth_dir / "annotations.json")
    masks = tmp_path / "masks"
    assert main(["rasterize", ann, "--out", str(masks)]) == 0
    code = main(["eval", "--gt", ann, "--pred", str(masks)])
    assert code == 0
    assert "1.000000" in capsys.readouterr().out


def test_eval_missing_pred_exit_2(synth_dir, tmp_path):
    ann = str(synth_dir / "annotations.json")
    masks = tmp_path / "masks"
    assert main(["rasterize", ann, "--out", str(masks)]) == 0
    next(iter(sorted(masks.glob("*.png")))).unlink()
    assert main(["eval", "--gt", ann, "--pred", str(masks)]) == 2


def test_run_end_to_end(synth_dir, pipeline_toml, tmp_path, capsys):
    out = tmp_path / "run"
    code, report = run_json(
        capsys,
        ["run", "--config", str(pipeline_toml),
         "--dataset", str(synth_dir / "annotations.json"),
         "--images", str(synth_dir / "images"),
         "--out", str(out), "--eval", "--workers", "2", "--json"],
    )
    assert code == 0
    assert report["payload"]["dataset_mean_f1"] == 1.0
    assert report["payload"]["failed"] == 0
    assert (out / "manifest.json").exists()
    assert (out / "report.json").exists()


def test_run_without_images_dir(synth_dir, pipeline_toml, tmp_path):
    # oracle backends don't need pixel buffers
    out = tmp_path / "run"
    code = main(["run", "--config", str(pipeline_toml),
                 "--dataset", str(synth_dir / "annotations.json"),
                 "--out", str(out), "--workers", "1"])
    assert code == 0


def test_run_fusion_override(synth_dir, pipeline_toml, tmp_path, capsys):
    out = tmp_path / "run"
    code, report = run_json(
        capsys,
        ["run", "--config", str(pipeline_toml),
         "--dataset", str(synth_dir / "annotations.json"),
         "--out", str(out), "--eval", "--fusion", "vote",
         "--workers", "1", "--json"],
    )
    assert code == 0
    assert report["payload"]["dataset_mean_f1"] == 1.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["fusion_mode"] == "vote"


def test_run_bad_config_exit_2(synth_dir, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("unknown_key = 1\n[classifier]\nkind = \"oracle\"\n")
    assert main(["run", "--config", str(bad),
                 "--dataset", str(synth_dir / "annotations.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_run_partial_failure_exit_3(synth_dir, tmp_path, capsys):
    config = tmp_path / "partial.toml"
    config.write_text(
        """
seed = 1
rca_ensemble = []
[classifier]
kind = "oracle"
[[lca_ensemble]]
kind = "oracle"
"""
    )
    out = tmp_path / "run"
    code, report = run_json(
        capsys,
        ["run", "--config", str(config),
         "--dataset", str(synth_dir / "annotations.json"),
         "--out", str(out), "--workers", "1", "--json"],
    )
    assert code == 3
    assert report["status"] == "partial"
    assert report["payload"]["failed"] > 0
    assert all(f["stage"] == "segment" for f in report["payload"]["failures"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failures"] == report["payload"]["failures"]
    # LCA images still produced masks
    assert len(list((out / "masks").glob("*.png"))) == 6 - report["payload"]["failed"]


def test_augment_cli(synth_dir, tmp_path, capsys):
    out = tmp_path / "aug"
    code, report = run_json(
        capsys,
        ["augment", "--dataset", str(synth_dir / "annotations.json"),
         "--images", str(synth_dir / "images"),
         "--out", str(out), "--n-per-image", "2", "--seed", "3", "--json"],
    )
    assert code == 0
    assert report["payload"]["outputs"] == 12
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["outputs"]) == 12
    first = manifest["outputs"][0]
    assert (out / first["image"]).exists() and (out / first["mask"]).exists()


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--n", "3", "--seed", "9", "--canvas", "96",
                 "--out", str(a)]) == 0
    assert main(["synth", "--n", "3", "--seed", "9", "--canvas", "96",
                 "--out", str(b)]) == 0
    assert (a / "annotations.json").read_bytes() == (b / "annotations.json").read_bytes()
    for img in sorted((a / "images").glob("*.png")):
        assert img.read_bytes() == (b / "images" / img.name).read_bytes()


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
