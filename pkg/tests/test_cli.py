import json
import subprocess
import sys

import pytest

from denseforest.cli import EXIT_BUDGET, EXIT_FAILED, EXIT_OK, EXIT_SPEC, EXIT_USAGE, main, run


def run_main(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_gen_writes_identical_csv(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["gen", "--builtin", "peres", "--radius", "10", "--out", str(a)]) == EXIT_OK
    assert main(["gen", "--builtin", "peres", "--radius", "10", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("x0,x1\n")


def test_reports_are_byte_identical(tmp_path, capsys):
    paths = [tmp_path / f"r{i}.json" for i in range(2)]
    for p in paths:
        main(["equidist", "--d", "1", "--eps", "0.25", "--samples", "500", "--report", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    report = json.loads(paths[0].read_text())
    assert report["config"]["seed"] == 0 and "wall_clock" not in report


def test_report_echoes_config_and_round_trips(tmp_path, capsys):
    code, report = run_main(["unavoidable"], capsys)
    assert code == EXIT_OK and report["passed"]
    again = run(report["config"])
    assert again.to_json() == report


def test_visibility_command_with_svg(tmp_path, capsys):
    spec = tmp_path / "f.json"
    spec.write_text(json.dumps({"kind": "builtin", "name": "peres"}))
    svg = tmp_path / "curve.svg"
    code, report = run_main(["visibility", "--spec", str(spec), "--eps", "0.4,0.2", "--radius", "10",
                             "--svg", str(svg)], capsys)
    assert code == EXIT_OK
    assert report["assertions"]["monotone"]
    assert svg.read_text().startswith("<svg")


def test_slab_command(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    code, report = run_main(["slab", "--builtin", "golden", "--radius", "100", "--verify", "--out", str(cert)],
                            capsys)
    assert code == EXIT_OK
    assert json.loads(cert.read_text())["q"] == report["results"]["certificate"]["q"]


def test_udt_and_exponent_commands(tmp_path, capsys):
    theta = tmp_path / "theta.json"
    theta.write_text("[0, 1.618033988749895]")
    code, report = run_main(["udt", "--theta", str(theta), "--T", "10", "--mesh", "1e-4"], capsys)
    assert code == EXIT_OK and report["results"]["certified"] > 0
    table = tmp_path / "t.csv"
    code, report = run_main(["udt-exponents", "--n", "2..6", "--s", "2..50", "--table", str(table)], capsys)
    assert code == EXIT_OK
    assert table.read_text().splitlines()[1] == "2,2,2,3,3"


def test_failed_assertion_exit_code(tmp_path, capsys):
    theta = tmp_path / "theta.json"
    theta.write_text("[0, 0.5]")
    code, report = run_main(["udt", "--theta", str(theta), "--T", "10", "--mesh", "1e-3"], capsys)
    assert code == EXIT_FAILED and not report["passed"]


def test_udt_mc_command(tmp_path, capsys):
    u = tmp_path / "u.json"
    u.write_text("[[1], [1], [1]]")
    code, report = run_main(["udt-mc", "--U", str(u), "--T", "4,8", "--samples", "2000"], capsys)
    assert code in (EXIT_OK, EXIT_FAILED)
    assert [r["T"] for r in report["results"]["rows"]] == [4, 8]


def test_tbg_and_gen_svg(tmp_path, capsys):
    svg = tmp_path / "t.svg"
    code, report = run_main(["tbg", "--angles", "0,0.1", "--radius", "4", "--svg", str(svg)], capsys)
    assert code == EXIT_OK and report["results"]["points"] > 0
    assert svg.read_text().count("<circle") == report["results"]["points"]


def test_report_command_runs_children(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"runs": [{"command": "equidist", "d": 1, "eps": 0.25, "samples": 100},
                                        {"command": "unavoidable"}]}))
    code, report = run_main(["report", "--config", str(cfg)], capsys)
    assert code == EXIT_OK and len(report["assertions"]) == 2


@pytest.mark.parametrize("args, expected", [
    (["bogus"], EXIT_USAGE),
    ([], EXIT_USAGE),
    (["gen", "--radius", "3"], EXIT_SPEC),
    (["gen", "--spec", "missing.json", "--radius", "3"], EXIT_SPEC),
    (["gen", "--builtin", "nope", "--radius", "3"], EXIT_SPEC),
    (["gen", "--builtin", "peres", "--radius", "1e6"], EXIT_BUDGET),
])
def test_exit_codes(args, expected, capsys):
    assert main(args) == expected


def test_malformed_spec_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["gen", "--spec", str(bad), "--radius", "3"]) == EXIT_SPEC


def test_threads_environment_override(monkeypatch, capsys):
    from denseforest.cli import set_threads
    monkeypatch.setenv("DFL_THREADS", "1")
    assert set_threads(8) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "denseforest", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
