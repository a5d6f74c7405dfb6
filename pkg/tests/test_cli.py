import json

import numpy as np
import pytest

from hermite_ito import cli
from hermite_ito.errors import ConfigurationError


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_operator_checks_run_writes_verdict(tmp_path, capsys):
    cfg = write(tmp_path, "[run]\nkind = operator-checks\noutput = out\n\n[operator-checks]\nN = 32\ndims = 1\n")
    code = cli.run(cfg)
    verdict = json.loads((tmp_path / "out" / "verdict.json").read_text())
    assert verdict["kind"] == "operator-checks"
    statuses = {c["id"]: c["status"] for c in verdict["criteria"]}
    assert statuses and all(s in ("PASS", "FAIL") for s in statuses.values())
    assert code == (0 if verdict["passed"] else 1)
    for c in verdict["criteria"]:
        assert {"measured", "threshold", "status"} <= set(c)
    summary = (tmp_path / "out" / "summary.csv").read_text().splitlines()
    assert summary[0] == "criterion,measured,threshold,status" and len(summary) == len(statuses) + 1


def test_isometry_run_passes(tmp_path, capsys):
    cfg = write(tmp_path, "[run]\nkind = isometry-enumeration\noutput = out\n\n"
                          "[isometry-enumeration]\nk = 10\np_values = 1\n")
    assert cli.run(cfg) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    verdict = json.loads((tmp_path / "out" / "verdict.json").read_text())
    assert all(c["measured"] < 1e-12 for c in verdict["criteria"])


def test_purejump_run_passes(tmp_path):
    cfg = write(tmp_path, "[run]\nkind = ito-purejump\nseed = 3\noutput = out\n\n[ito-purejump]\nn_paths = 5\n")
    assert cli.run(cfg) == 0
    assert (tmp_path / "out" / "purejump.csv").exists()
    assert (tmp_path / "out" / "paths" / "purejump_0000.csv").exists()


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = write(tmp_path, "[run]\nkind = ito-purejump\n\n[ito-purejump]\nn_paths = 5\ntolerence = 1e-3\n")
    assert cli.run(cfg) == 2
    err = capsys.readouterr().err
    assert "line 6" in err and "tolerence" in err


@pytest.mark.parametrize("body", [
    "[run]\nkind = nothing\n",
    "[run]\nkind = ito-purejump\n\n[ito-purejump]\nN_big = 32\nN_eval = 30\n",
    "[run]\nkind = ito-purejump\n\n[ito-purejump]\nn_paths = 0\n",
    "[run]\nkind = ito-brownian\n\n[ito-brownian]\nlevels = 9, 8\n",
    "[run]\nkind = ito-purejump\n\n[ito-purejump]\nn_paths = many\n",
    "[run]\nkind = ito-purejump\n\n[local-time]\nlevel = 4\n",
    "[ito-purejump]\nn_paths = 2\n",
])
def test_config_errors_exit_2(tmp_path, body):
    assert cli.run(write(tmp_path, body)) == 2


def test_missing_config_exit_2(tmp_path):
    assert cli.run(tmp_path / "absent.ini") == 2


def test_numeric_error_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, "[run]\nkind = ito-purejump\nseed = 1\noutput = out\n\n"
                          "[ito-purejump]\nn_paths = 2\njump_sd = 1.5\nrate = 10\nN_big = 6\nN_eval = 0\n")
    assert cli.run(cfg) == 3
    assert "ito-purejump/seed=1" in capsys.readouterr().err


def test_parse_config_types(tmp_path):
    cfg = cli.parse_config("[run]\nkind = ito-brownian\nseed = 7\n\n[ito-brownian]\nlevels = 4, 5\ncoupled = no\n",
                           tmp_path)
    assert cfg.seed == 7 and cfg.params["levels"] == (4, 5) and cfg.params["coupled"] is False
    assert cfg.params["seed"] == 7 and cfg.output == tmp_path / "results" / "ito-brownian"
    with pytest.raises(ConfigurationError):
        cli.parse_config("[run]\nkind = ito-brownian\nextra = 1\n")


def levels_dir(tmp_path, medians_by_level):
    for lev, vals in medians_by_level.items():
        dt = 2.0 ** -lev
        rows = "".join(f"{i},{dt!r},{float(v)!r}\n" for i, v in enumerate(np.atleast_1d(vals)))
        (tmp_path / f"level_{lev:02d}.csv").write_text("path,dt,residual\n" + rows)
    return tmp_path


def read_slope(directory):
    last = (directory / "convergence.csv").read_text().splitlines()[-1]
    assert last.startswith("# slope,")
    return float(last.split(",")[1])


def test_summarize_two_levels(tmp_path, capsys):
    d = levels_dir(tmp_path, {1: 1e-2, 2: 5e-3})
    assert cli.summarize(d) == 0
    assert read_slope(d) == pytest.approx(1.0, abs=1e-12)


def test_summarize_single_level(tmp_path, capsys):
    d = levels_dir(tmp_path, {3: 0.1})
    assert cli.summarize(d) == 2
    assert cli.summarize(tmp_path / "missing") == 2


def test_summarize_synthetic_half_order(tmp_path, capsys):
    rng = np.random.default_rng(0)
    levels = {lev: 2.0 ** (-lev / 2) * rng.lognormal(0, 0.3, 101) for lev in (6, 7, 8, 9)}
    d = levels_dir(tmp_path, levels)
    assert cli.summarize(d) == 0
    assert read_slope(d) == pytest.approx(0.5, abs=0.05)


def snapshot(directory):
    return {p.relative_to(directory): p.read_bytes() for p in sorted(directory.rglob("*.csv"))}


def test_reruns_are_byte_identical(tmp_path):
    body = ("[run]\nkind = ito-brownian\nseed = 5\noutput = {out}\n\n"
            "[ito-brownian]\nn_paths = 3\nlevels = 5, 6, 7\n")
    a = cli.run(write(tmp_path, body.format(out="a"), "a.ini"))
    b = cli.run(write(tmp_path, body.format(out="b"), "b.ini"))
    assert a == b
    snap_a, snap_b = snapshot(tmp_path / "a"), snapshot(tmp_path / "b")
    assert snap_a and snap_a == snap_b


def test_worker_count_does_not_change_outputs(tmp_path, monkeypatch):
    body = ("[run]\nkind = ito-purejump\nseed = 9\noutput = {out}\n\n"
            "[ito-purejump]\nn_paths = 6\nsteps = 16\n")
    cli.run(write(tmp_path, body.format(out="serial"), "s.ini"))
    monkeypatch.setenv("HERMITE_ITO_WORKERS", "2")
    cli.run(write(tmp_path, body.format(out="pool"), "p.ini"))
    assert snapshot(tmp_path / "serial") == snapshot(tmp_path / "pool")


def test_bad_worker_count(tmp_path, monkeypatch):
    monkeypatch.setenv("HERMITE_ITO_WORKERS", "zero")
    cfg = write(tmp_path, "[run]\nkind = ito-purejump\noutput = out\n\n[ito-purejump]\nn_paths = 2\n")
    assert cli.run(cfg) == 2


def test_main_dispatch(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "default:" in out and "experiment kinds:" in out
    with pytest.raises(SystemExit):
        cli.main([])
