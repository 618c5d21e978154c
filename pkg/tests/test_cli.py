import json

import numpy as np
import pytest
from PIL import Image

from crackhash.classify import Forest
from crackhash.cli import main, parse_args
from crackhash.dataset import FeatureTable
from crackhash.evaluation import confusion, metrics, roc


@pytest.fixture(scope="module")
def table_path(fixture_root, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "features.csv"
    assert main(["extract", str(fixture_root), "--out", str(out), "--no-timestamp"]) == 0
    return out


def test_parse_defaults():
    a = parse_args(["cv", "t.csv"])
    assert (a.model, a.k, a.seed, a.trees, a.threads) == ("rf", 10, 42, 100, None)
    a = parse_args(["train", "t.csv", "--out", "m.json", "--fraction", "1"])
    assert a.fraction == 1.0


@pytest.mark.parametrize("argv", [
    ["cv", "t.csv", "--k", "0"],
    ["cv", "t.csv", "--k", "1"],
    ["train", "t.csv", "--out", "m.json", "--fraction", "0"],
    ["train", "t.csv", "--out", "m.json", "--trees", "0"],
    ["cv", "t.csv", "--bogus"],
    ["hash", ""],
    [],
])
def test_bad_arguments_exit_with_usage_error(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        parse_args(argv)
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_hash_constant_white_image(tmp_path, capsys):
    Image.new("RGB", (227, 227), (255, 255, 255)).save(tmp_path / "white.png")
    assert main(["hash", str(tmp_path / "white.png"), "--algo", "ahash"]) == 0
    assert capsys.readouterr().out == "0000000000000000\n"
    assert main(["hash", str(tmp_path / "white.png"), "--algo", "dhash", "--z"]) == 0
    assert capsys.readouterr().out == "ffffffffffffffff\n"


def test_hash_all_lists_ten_features(tmp_path, capsys):
    Image.new("RGB", (40, 30), (10, 200, 30)).save(tmp_path / "g.png")
    main(["hash", str(tmp_path / "g.png"), "--algo", "all"])
    main(["hash", str(tmp_path / "g.png"), "--algo", "all", "--z"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10 and all(len(line.split("\t")[1]) == 16 for line in lines)


def test_runtime_errors_exit_one(tmp_path, capsys):
    assert main(["hash", str(tmp_path / "missing.png")]) == 1
    (tmp_path / "x.gif").write_bytes(b"GIF89a")
    assert main(["hash", str(tmp_path / "x.gif")]) == 1
    assert main(["extract", str(tmp_path), "--out", str(tmp_path / "t.csv")]) == 1
    assert "error" in capsys.readouterr().err


def test_cv_report_has_k_folds(table_path, tmp_path):
    out = tmp_path / "cv.json"
    assert main(["cv", str(table_path), "--model", "gnb", "--k", "5", "--out", str(out),
                 "--roc-out", str(tmp_path / "roc.csv"), "--no-timestamp"]) == 0
    doc = json.loads(out.read_text())
    assert doc["seed"] == 42 and doc["command"] == "cv" and "provenance" not in doc
    folds = doc["cv"]["folds"]
    assert len(folds) == 5 and sum(f["size"] for f in folds) == 200
    assert doc["cv"]["mean_accuracy"] == pytest.approx(np.mean([f["accuracy"] for f in folds]), abs=1e-15)
    header = (tmp_path / "roc.csv").read_text().splitlines()[0]
    assert header == "fold,threshold,fpr,tpr"


def test_train_evaluate_roc_agree_with_library(table_path, tmp_path):
    model = tmp_path / "rf.json"
    assert main(["train", str(table_path), "--out", str(model), "--trees", "10", "--no-timestamp"]) == 0
    report = tmp_path / "eval.json"
    assert main(["evaluate", str(model), str(table_path), "--out", str(report), "--no-timestamp"]) == 0
    doc = json.loads(report.read_text())

    forest = Forest.load(model)
    table = FeatureTable.load(table_path)
    assert forest.train_seed == 42 and len(forest.trees) == 10
    proba = forest.predict_proba(table.features)
    cm = confusion((proba >= 0.5).astype(int), table.labels)
    assert doc["confusion"]["matrix"] == cm.as_matrix()
    assert doc["metrics"] == json.loads(json.dumps(metrics(cm).to_dict()))
    assert doc["auc"] == roc(proba, table.labels).auc

    curve_csv = tmp_path / "roc.csv"
    assert main(["roc", str(model), str(table_path), "--out", str(curve_csv), "--no-timestamp"]) == 0
    rows = curve_csv.read_text().splitlines()
    assert rows[0] == "threshold,fpr,tpr" and rows[1] == "inf,0.0,0.0" and rows[-1].endswith(",1.0,1.0")


def test_split_then_train_fraction(table_path, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["split", str(table_path), "--fraction", "0.5", "--train-out", str(a),
                 "--test-out", str(b), "--no-timestamp"]) == 0
    ta, tb = FeatureTable.load(a), FeatureTable.load(b)
    assert len(ta) == len(tb) == 100 and int(ta.labels.sum()) == 50
    assert ta.provenance["split_role"] == "train" and "timestamp" not in ta.provenance
    assert main(["split", str(table_path), "--fraction", "1", "--train-out", str(a),
                 "--test-out", str(b)]) == 1


def test_compare_ranks_reports(tmp_path, capsys):
    (tmp_path / "a.json").write_text(json.dumps({"model_name": "Random Forest", "cv": {"mean_accuracy": 0.94}}))
    (tmp_path / "b.json").write_text(json.dumps({"scores": {"ResNet": 0.97, "Gaussian Naive-Bayes": 0.697}}))
    assert main(["compare", str(tmp_path / "a.json"), str(tmp_path / "b.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split("  ")[0].strip() for line in lines] == ["ResNet", "Random Forest", "Gaussian Naive-Bayes"]
    assert lines[1].endswith("0.940")


def test_select_reports_subset(table_path, tmp_path):
    out = tmp_path / "sel.json"
    assert main(["select", str(table_path), "--k", "3", "--trees", "5", "--out", str(out), "--no-timestamp"]) == 0
    doc = json.loads(out.read_text())
    assert doc["n_selected"] == len(doc["selected"]) <= 10
    assert doc["selected_names"] == [h["name"] for h in doc["history"]]
