import csv
import json

import numpy as np
import pytest

from infodecomp.cli import MissingColumn, ParseError, ingest_csv, run, write_csv
from infodecomp.core import ClassTooSmall, EstimatorConfig, validate
from infodecomp.report import determinism_hash, read_report
from infodecomp.scenarios import gen_nongauss, gen_unique

FAST = ["--surrogates", "19"]


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_small_file(tmp_path):
    p = _write(tmp_path / "d.csv", "a,b,label\n1,2,x\n3,4.5,y\n-1e-3,0,x\n")
    ds = ingest_csv(p, "label")
    assert ds.feature_names == ("a", "b")
    assert ds.n_features == 2 and ds.n_samples == 3
    assert ds.class_alphabet == ("x", "y")
    assert ds.features[1, 1] == 4.5
    assert ingest_csv(p, 2).class_alphabet == ("x", "y")
    assert ingest_csv(p, "-1").feature_names == ("a", "b")


def test_ingest_errors(tmp_path):
    p = _write(tmp_path / "d.csv", "a,b,label\n1,2,x\n3,oops,y\n")
    with pytest.raises(ParseError) as err:
        ingest_csv(p, "label")
    assert err.value.row == 3 and err.value.col == "b"
    with pytest.raises(MissingColumn):
        ingest_csv(p, "class")
    with pytest.raises(MissingColumn):
        ingest_csv(p, 7)
    ragged = _write(tmp_path / "r.csv", "a,label\n1,x\n2\n")
    with pytest.raises(ParseError) as err:
        ingest_csv(ragged, "label")
    assert err.value.row == 3


def test_ingest_without_header(tmp_path):
    p = _write(tmp_path / "d.csv", "1,2,x\n3,4,y\n")
    ds = ingest_csv(p, 2, header=False)
    assert ds.feature_names == ("X1", "X2")
    assert ds.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_class_too_small_surfaces_from_validate(tmp_path):
    p = _write(tmp_path / "d.csv", "a,c\n" + "".join(f"{i},{'x' if i < 20 else 'y'}\n"
                                                     for i in range(23)))
    with pytest.raises(ClassTooSmall):
        validate(ingest_csv(p, "c"), EstimatorConfig())


def test_write_read_round_trip(tmp_path):
    ds = gen_nongauss(200, 4)
    back = ingest_csv(write_csv(ds, tmp_path / "n.csv"), "class")
    assert np.array_equal(back.features, ds.features)
    assert [back.class_alphabet[i] for i in back.labels] == \
        [ds.class_alphabet[i] for i in ds.labels]


def test_simulate_then_analyze(tmp_path, capsys):
    data = tmp_path / "m6.csv"
    assert run(["simulate", "--scenario", "mixed6", "--samples-per-class", "150",
                "--seed", "7", "--out", str(data)]) == 0
    report = tmp_path / "r.json"
    assert run(["analyze", "--input", str(data), "--class-col", "class", "--seed", "1",
                "--out", str(report)] + FAST) == 0
    doc = read_report(report)
    assert len(doc["features"]) == 6
    assert doc["metadata"]["config"]["k"] == 10
    assert doc["metadata"]["config"]["alpha"] == 0.05
    assert doc["determinism_hash"] == determinism_hash(doc)
    rows = list(csv.reader(open(tmp_path / "r_features.csv")))
    assert rows[0][0] == "feature" and len(rows) == 7


def test_analyze_defaults(tmp_path):
    data = tmp_path / "u.csv"
    write_csv(gen_unique(60, 1)[0], data)
    out = tmp_path / "r.json"
    assert run(["analyze", "--input", str(data), "--out", str(out)]) == 0
    cfg = read_report(out)["metadata"]["config"]
    assert (cfg["k"], cfg["n_surrogates"], cfg["alpha"]) == (10, 100, 0.05)


def test_reports_are_reproducible(tmp_path):
    data = tmp_path / "u.csv"
    write_csv(gen_unique(80, 2)[0], data)
    hashes = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        run(["analyze", "--input", str(data), "--seed", "3", "--out", str(out)] + FAST)
        doc = read_report(out)
        hashes.append(doc["determinism_hash"])
        del doc["metadata"]["run"]
        (tmp_path / f"c{i}.json").write_text(json.dumps(doc, sort_keys=True))
    assert hashes[0] == hashes[1]
    assert (tmp_path / "c0.json").read_text() == (tmp_path / "c1.json").read_text()


def test_floats_keep_twelve_significant_digits(tmp_path):
    data = tmp_path / "u.csv"
    write_csv(gen_unique(80, 2)[0], data)
    out = tmp_path / "r.json"
    run(["analyze", "--input", str(data), "--out", str(out)] + FAST)
    text = out.read_text()
    doc = json.loads(text)
    mi = doc["features"][0]["mi"]
    assert repr(mi) in text
    assert float(f"{mi:.12g}") == pytest.approx(mi, rel=1e-11)


def test_batch_bootstrap_and_plot_from_report_only(tmp_path):
    out = tmp_path / "b.json"
    assert run(["batch", "--scenario", "redundancy", "--repeats", "2",
                "--samples-per-class", "100", "--mc-samples", "5000", "--threads", "2",
                "--out", str(out)] + FAST) == 0
    doc = read_report(out)
    assert doc["aggregate"]["n_repeats"] == 2 and len(doc["repeats"]) == 2
    assert doc["oracle"][0]["zmin"] == ["X2"]
    for suffix in ("features", "selection", "order", "repeats"):
        assert (tmp_path / f"b_{suffix}.csv").exists()
    fig = tmp_path / "fig.svg"
    assert run(["plot", "--report", str(out), "--out", str(fig)]) == 0
    assert fig.read_text().lstrip().startswith("<?xml")
    assert (tmp_path / "fig_selection.svg").exists() and (tmp_path / "fig_order.svg").exists()

    data = tmp_path / "u.csv"
    write_csv(gen_unique(60, 3)[0], data)
    boot = tmp_path / "boot.json"
    assert run(["bootstrap", "--input", str(data), "--repeats", "2", "--out", str(boot),
                "--plot", str(tmp_path / "boot.svg")] + FAST) == 0
    data.unlink()
    assert run(["plot", "--report", str(boot), "--out", str(tmp_path / "again.svg")]) == 0
    assert (tmp_path / "again.svg").exists()


def test_oracle_command(tmp_path):
    spec = tmp_path / "s.json"
    assert run(["simulate", "--scenario", "synergy", "--samples-per-class", "20",
                "--out", str(tmp_path / "s.csv"), "--spec-out", str(spec)]) == 0
    out = tmp_path / "o.json"
    assert run(["oracle", "--spec", str(spec), "--mc-samples", "20000", "--tol", "1e-3",
                "--out", str(out)]) == 0
    doc = read_report(out)
    assert [o["zmax"] for o in doc["oracle"]] == [["X2"], ["X1"]]
    assert run(["plot", "--report", str(out), "--out", str(tmp_path / "o.svg")]) == 0


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["analyze"],
    ["analyze", "--input", "x.csv", "--k", "zero"],
    ["analyze", "--input", "x.csv", "--alpha", "2"],
    ["batch", "--scenario", "spiral"],
    ["simulate", "--scenario", "unique", "--samples-per-class", "-4"],
    ["analyze", "--input", "x.csv", "--surrogates", "5"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv) == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_usage_error_names_the_flag(capsys):
    run(["analyze", "--input", "x.csv", "--k", "zero"])
    assert "--k" in capsys.readouterr().err


def test_spec_out_for_nongauss_is_usage_error(tmp_path):
    assert run(["simulate", "--scenario", "nongauss", "--out", str(tmp_path / "n.csv"),
                "--spec-out", str(tmp_path / "s.json")]) == 1


def test_data_errors_exit_2(tmp_path, capsys):
    assert run(["analyze", "--input", str(tmp_path / "missing.csv")]) == 2
    bad = _write(tmp_path / "bad.csv", "a,class\n1,x\nnope,y\n")
    assert run(["analyze", "--input", str(bad)]) == 2
    assert "row 3" in capsys.readouterr().err
    small = _write(tmp_path / "small.csv", "a,class\n1,x\n2,y\n3,x\n")
    assert run(["analyze", "--input", str(small)]) == 2
    spec = _write(tmp_path / "s.json", '{"classes": [{"prior": 1.0, "mean": [0, 0], '
                                      '"cov": [[1, 2], [2, 1]]}]}')
    assert run(["oracle", "--spec", str(spec), "--mc-samples", "10"]) == 2
    junk = _write(tmp_path / "r.json", "not json")
    assert run(["plot", "--report", str(junk)]) == 2
