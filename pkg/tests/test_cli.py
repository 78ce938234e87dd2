import json

import pytest

from crowdloc.cli import main
from conftest import SCENES

SCENE = str(SCENES / "floorplan1.json")


def run(argv):
    assert main(argv) == 0


def fail(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code != 0
    line = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(line)


def outputs(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_generate_2d_shape(tmp_path):
    run(["generate", "--scene", SCENE, "--m", "4130", "--seed", "1", "--out", str(tmp_path / "g")])
    lines = (tmp_path / "g" / "dataset.csv").read_text().splitlines()
    assert len(lines) == 4131
    assert len(lines[0].split(",")) == 10


def test_generate_1d_default_channel(tmp_path):
    run(["generate", "--mode", "1d", "--case", "2", "--m", "200", "--out", str(tmp_path / "g")])
    lines = (tmp_path / "g" / "dataset.csv").read_text().splitlines()
    assert len(lines) == 201
    assert lines[0] == "x,y,rss_ap0"


def test_generate_same_seed_identical(tmp_path):
    for name in ("a", "b"):
        run(["generate", "--scene", SCENE, "--m", "300", "--seed", "4", "--out", str(tmp_path / name)])
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")


def test_generate_variants(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scene": SCENE, "m": 200, "channel": {"noise_sigma": 3.0},
                               "variants": {"base": {}, "steep": {"gamma": 3.5}}}))
    run(["generate", "--config", str(cfg), "--out", str(tmp_path / "v")])
    assert (tmp_path / "v" / "dataset_base.csv").exists() and (tmp_path / "v" / "dataset_steep.csv").exists()


def test_localize_and_manifest_rerun(tmp_path):
    run(["generate", "--scene", SCENE, "--m", "800", "--seed", "2", "--out", str(tmp_path / "g")])
    run(["localize", "--scene", SCENE, "--data", str(tmp_path / "g" / "dataset.csv"), "--method", "cdf-vc,ldpl",
         "--method", "knn", "--k", "3", "--split", "0.5", "--out", str(tmp_path / "l")])
    files = outputs(tmp_path / "l")
    for m in ("cdf-vc", "ldpl", "knn"):
        assert f"errors_{m}.csv" in files and f"summary_{m}.json" in files
    man = json.loads(files["manifest.json"])
    assert man["config"]["options"]["knn_k"] == 3
    assert "time" not in json.dumps(man)
    run(["localize", "--config", str(tmp_path / "l" / "manifest.json"), "--out", str(tmp_path / "l2")])
    assert outputs(tmp_path / "l2") == files


def test_localize_train_test_files(tmp_path):
    run(["generate", "--scene", SCENE, "--m", "600", "--seed", "3", "--out", str(tmp_path / "a")])
    run(["generate", "--scene", SCENE, "--m", "600", "--seed", "4", "--out", str(tmp_path / "b")])
    run(["localize", "--scene", SCENE, "--train", str(tmp_path / "a" / "dataset.csv"),
         "--test", str(tmp_path / "b" / "dataset.csv"), "--method", "ldpl", "--out", str(tmp_path / "l")])
    assert len((tmp_path / "l" / "errors_ldpl.csv").read_text().splitlines()) == 601


def test_case_study_outputs(tmp_path):
    run(["case-study", "--case", "2", "--out", str(tmp_path / "c")])
    assert {"case2_m200.csv", "case2_m800.csv", "manifest.json"} <= set(outputs(tmp_path / "c"))


def test_ingest_identity_is_byte_identical(tmp_path):
    run(["generate", "--scene", SCENE, "--m", "50", "--out", str(tmp_path / "g")])
    src = tmp_path / "g" / "dataset.csv"
    run(["ingest", "--input", str(src), "--out", str(tmp_path / "i")])
    assert (tmp_path / "i" / "dataset.csv").read_bytes() == src.read_bytes()


def test_ingest_reordered_mapping(tmp_path, caplog):
    raw = tmp_path / "raw.csv"
    raw.write_text("B,junk,posY,A,posX\n-40,z,2.5,-60,1.0\n-45,z,3.5,n/a,2.0\n")
    run(["ingest", "--input", str(raw), "--map", "x=posX,y=posY,rss_a=A,rss_b=B", "--out", str(tmp_path / "i")])
    text = (tmp_path / "i" / "dataset.csv").read_text()
    assert text == "x,y,rss_a,rss_b\n1.0,2.5,-60.0,-40.0\n2.0,3.5,-100.0,-45.0\n"
    notes = json.loads((tmp_path / "i" / "manifest.json").read_text())["notes"]
    assert notes == ["dropped unmapped column 'junk'"]


def test_ingest_missing_column_named(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("x,y,rss_A\n0,0,-50\n")
    err = fail(["ingest", "--input", str(raw), "--map", "x=x,y=y,rss_A=rss_A,rss_B=rss_B",
                "--out", str(tmp_path / "i")], capsys)
    assert "rss_B" in err["message"]


def test_report(tmp_path, capsys):
    (tmp_path / "errors_foo.csv").write_text("error_m\n1.0\n2.0\n3.0\n4.0\n")
    run(["report", str(tmp_path), "--out", str(tmp_path / "r")])
    q = (tmp_path / "r" / "quantiles.csv").read_text().splitlines()
    assert q[1].startswith("foo,2.5,")
    assert (tmp_path / "r" / "error_cdf_foo.csv").read_text().splitlines()[1] == "1.0,0.25"


def test_bad_method_machine_readable(tmp_path, capsys):
    err = fail(["localize", "--scene", SCENE, "--data", "nope.csv", "--method", "magic"], capsys)
    assert set(err) == {"error", "message"}


def test_usage_error_machine_readable(capsys):
    err = fail(["localize", "--split", "half"], capsys)
    assert err["error"] == "usage"


def test_missing_file(tmp_path, capsys):
    err = fail(["localize", "--scene", str(tmp_path / "none.json"), "--data", "x.csv"], capsys)
    assert err["error"] == "io"
