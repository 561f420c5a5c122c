import hashlib
import json

import pytest

from lsnet.cli import main


def _md5(path):
    return hashlib.md5(path.read_bytes()).hexdigest()


@pytest.fixture
def fixture_dir(tmp_path):
    out = tmp_path / "fx"
    assert main(["simulate", "--nodes", "12", "--dim", "2", "--p", "4", "--restriction", "plt",
                 "--seed", "42", "--out", str(out)]) == 0
    return out


def test_simulate_files_and_determinism(fixture_dir, tmp_path):
    names = ["config-echo.json", "interp.csv", "network.csv", "truth.json"]
    assert sorted(p.name for p in fixture_dir.iterdir()) == names
    again = tmp_path / "again"
    main(["simulate", "--nodes", "12", "--dim", "2", "--p", "4", "--restriction", "plt",
          "--seed", "42", "--out", str(again)])
    for name in names:
        assert _md5(fixture_dir / name) == _md5(again / name)


def test_simulate_rejects_dim1(tmp_path, capsys):
    assert main(["simulate", "--dim", "1", "--out", str(tmp_path / "x")]) == 2
    assert "d >= 2" in capsys.readouterr().err


def test_simulate_minimal_fixture(tmp_path):
    out = tmp_path / "mini"
    assert main(["simulate", "--nodes", "3", "--p", "2", "--dim", "2", "--out", str(out)]) == 0
    assert len((out / "network.csv").read_text().splitlines()) == 4


def test_bad_flag_is_usage_error(tmp_path):
    assert main(["fit", "--bogus"]) == 2
    assert main(["simulate", "--restriction", "glt", "--out", str(tmp_path)]) == 2


def _fit(fx, out, *extra):
    return main(["fit", "--network", str(fx / "network.csv"), "--interp", str(fx / "interp.csv"),
                 "--out", str(out), *extra])


def test_fit_writes_chain_and_meta(fixture_dir, tmp_path):
    out = tmp_path / "ch"
    assert _fit(fixture_dir, out, "--restriction", "plt", "--iters", "60", "--burnin", "30", "--seed", "7") == 0
    lines = (out / "chain.csv").read_text().splitlines()
    assert len(lines) == 2 + 30
    meta = json.loads((out / "meta.json").read_text())
    assert meta["format_version"] == 1 and meta["seed"] == 7
    assert set(meta["acceptance"]) >= {"alpha", "positions", "orientation"}
    assert meta["wall_time_s"] > 0 and meta["config"]["iters"] == 60

    out2 = tmp_path / "ch2"
    _fit(fixture_dir, out2, "--restriction", "plt", "--iters", "60", "--burnin", "30", "--seed", "7")
    assert _md5(out / "chain.csv") == _md5(out2 / "chain.csv")


def test_fit_glt_and_env_seed(fixture_dir, tmp_path, monkeypatch):
    assert _fit(fixture_dir, tmp_path / "g", "--restriction", "glt", "--pivots", "2,3",
                "--iters", "20", "--burnin", "10") == 0
    monkeypatch.setenv("LSNET_SEED", "7")
    _fit(fixture_dir, tmp_path / "e1", "--iters", "20", "--burnin", "10", "--seed", "1")
    monkeypatch.delenv("LSNET_SEED")
    _fit(fixture_dir, tmp_path / "e2", "--iters", "20", "--burnin", "10", "--seed", "7")
    assert _md5(tmp_path / "e1" / "chain.csv") == _md5(tmp_path / "e2" / "chain.csv")
    assert json.loads((tmp_path / "e1" / "meta.json").read_text())["seed"] == 7


def test_fit_dimension_mismatch(fixture_dir, tmp_path, capsys):
    (tmp_path / "y.csv").write_text("1,2,3\n4,5,6\n")
    code = main(["fit", "--network", str(fixture_dir / "network.csv"), "--interp", str(tmp_path / "y.csv"),
                 "--out", str(tmp_path / "o")])
    assert code == 3
    err = capsys.readouterr().err
    assert "(12, 12)" in err and "(2, 3)" in err


def test_fit_missing_input_is_io_error(fixture_dir, tmp_path):
    code = main(["fit", "--network", str(tmp_path / "nope.csv"), "--interp", str(fixture_dir / "interp.csv"),
                 "--out", str(tmp_path / "o")])
    assert code == 4


def test_summarize_outputs(fixture_dir, tmp_path):
    ch = tmp_path / "ch"
    _fit(fixture_dir, ch, "--iters", "20", "--burnin", "10")
    assert main(["summarize", "--chain", str(ch)]) == 0
    summ = json.loads((ch / "summary.json").read_text())
    assert summ["n_draws"] == 10 and "identification" not in summ
    assert {"alpha", "kappa", "f_2_12", "lambda_4_2", "delta_1_1", "tau_4", "idio_var_1"} <= set(summ["parameters"])
    svg = (ch / "positions.svg").read_text()
    assert svg.startswith("<svg") and 'id="truth"' not in svg
    assert (ch / "loadings.csv").read_text().splitlines()[0] == "row,lambda_1,lambda_2"
    assert len((ch / "edgefit.csv").read_text().splitlines()) == 1 + 12 * 11 // 2

    out = tmp_path / "with_truth"
    assert main(["summarize", "--chain", str(ch), "--truth", str(fixture_dir / "truth.json"),
                 "--out", str(out)]) == 0
    summ = json.loads((out / "summary.json").read_text())
    assert set(summ["identification"]) == {"raw_rmse", "aligned_rmse", "ratio"}
    assert 'id="truth"' in (out / "positions.svg").read_text()


def test_summarize_missing_chain(tmp_path):
    assert main(["summarize", "--chain", str(tmp_path / "none")]) == 4


def test_geweke_threshold_semantics(capsys, tmp_path):
    assert main(["geweke", "--draws", "200", "--threshold", "0.01"]) == 1
    out = capsys.readouterr().out
    assert out.count(" z=") >= 10 and "FAIL" in out
    rep = tmp_path / "g.json"
    main(["geweke", "--draws", "200", "--threshold", "1000", "--report", str(rep)])
    assert json.loads(rep.read_text())["passed"] is True


def test_geweke_default_run_passes():
    assert main(["geweke"]) == 0
