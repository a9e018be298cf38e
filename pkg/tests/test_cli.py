import json
import shutil
import sys

import jsonschema
import pytest

from faultres.cli import main
from faultres.fixtures import fixture_path, fixture_text


@pytest.fixture()
def workdir(tmp_path):
    for name in ("rect_parity.nl", "rect_revised.nl", "zeta_1_1_all_c.json",
                 "zeta_1_1_all_c_parity.json"):
        (tmp_path / name).write_text(fixture_text(name))
    return tmp_path


def run_cli(*argv):
    return main([str(a) for a in argv])


def load_schema():
    from importlib import resources

    return json.loads(resources.files("faultres").joinpath("report_schema.json")
                      .read_text())


def test_verify_rect_parity_exit_and_report(workdir, capsys):
    report_path = workdir / "report.json"
    code = run_cli("verify", workdir / "rect_parity.nl",
                   "--config", workdir / "zeta_1_1_all_c.json",
                   "--json", report_path)
    assert code == 1
    out = capsys.readouterr().out
    assert "NOT RESISTANT" in out
    report = json.loads(report_path.read_text())
    jsonschema.validate(report, load_schema())
    assert report["verdict"] == "not_resistant"
    assert len(report["counterexample"]["events"]) == 1
    assert len(report["counterexample"]["inputs"]) == 1
    assert len(report["counterexample"]["inputs"][0]) == 4


def test_verify_rect_revised_exit_zero(workdir, capsys):
    report_path = workdir / "report.json"
    code = run_cli("verify", workdir / "rect_revised.nl",
                   "--config", workdir / "zeta_1_1_all_c.json",
                   "--json", report_path)
    assert code == 0
    assert "RESISTANT" in capsys.readouterr().out
    report = json.loads(report_path.read_text())
    jsonschema.validate(report, load_schema())
    assert report["counterexample"] is None


def test_verify_missing_file(workdir, capsys):
    assert run_cli("verify", workdir / "missing.nl",
                   "--config", workdir / "zeta_1_1_all_c.json") == 2
    assert "error" in capsys.readouterr().err


def test_verify_bad_config(workdir, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"k": 0, "model": {}}')
    assert run_cli("verify", workdir / "rect_parity.nl", "--config", bad) == 2


def test_verify_dimacs_dump(workdir):
    out = workdir / "out.cnf"
    code = run_cli("verify", workdir / "rect_parity.nl",
                   "--config", workdir / "zeta_1_1_all_c.json",
                   "--dimacs", out)
    assert code == 1
    text = out.read_text()
    assert text.startswith("p cnf ")
    sidecar = json.loads((workdir / "out.cnf.map.json").read_text())
    assert any(v["role"] == "control" for v in sidecar["vars"].values())


def test_verify_flags_change_reductions(workdir, capsys):
    report = workdir / "r.json"
    run_cli("verify", workdir / "rect_parity.nl",
            "--config", workdir / "zeta_1_1_all_c.json",
            "--no-reduce-types", "--no-reduce-gates", "--json", report)
    data = json.loads(report.read_text())
    assert data["reductions"]["applied"] == []

    run_cli("verify", workdir / "rect_parity.nl",
            "--config", workdir / "zeta_1_1_all_c.json",
            "--aggressive", "--json", report)
    data = json.loads(report.read_text())
    assert [r["name"] for r in data["reductions"]["applied"]] == [
        "fault_type", "single_exit"]


def test_simulate_output_format(workdir, capsys):
    code = run_cli("simulate", workdir / "rect_parity.nl", "--inputs", "0000")
    assert code == 0
    out = capsys.readouterr().out
    assert out == "cycle 1: in=0000 out=01100 flag=0\n"


def test_simulate_multi_cycle(tmp_path, capsys):
    nl = tmp_path / "seq.nl"
    nl.write_text(".inputs i\n.outputs o\n.reg r init=0\n"
                  "gate o = buf(r)\nnext r = i\n")
    code = run_cli("simulate", nl, "--inputs", "1,0")
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["cycle 1: in=1 out=0 flag=0", "cycle 2: in=0 out=1 flag=0"]


def test_reduce_json(workdir, capsys):
    code = run_cli("reduce", workdir / "rect_parity.nl",
                   "--config", workdir / "zeta_1_1_all_c.json")
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["model"]["types"] == ["bf"]
    assert set(data["removed_gates"]) == {"s4", "s5", "s7", "s8"}


def test_encode_dump_controls(workdir, capsys):
    code = run_cli("encode", workdir / "rect_parity.nl",
                   "--config", workdir / "zeta_1_1_all_c.json",
                   "--no-reduce-types", "--no-reduce-gates",
                   "--dump-controls")
    assert code == 0
    controls = json.loads(capsys.readouterr().out)
    assert len(controls) == 12
    assert controls["s7@1"]["c"] == "c[s7@1]"
    assert set(controls["s7@1"]) == {"c", "b1", "b2"}


def test_oracle_subcommand(workdir, capsys):
    code = run_cli("oracle", workdir / "rect_parity.nl",
                   "--config", workdir / "zeta_1_1_all_c.json")
    assert code == 1
    assert "NOT RESISTANT" in capsys.readouterr().out
    code = run_cli("oracle", workdir / "rect_revised.nl",
                   "--config", workdir / "zeta_1_1_all_c_parity.json")
    assert code == 0


def test_gen_random_roundtrip(tmp_path, capsys):
    out = tmp_path / "rand.nl"
    code = run_cli("gen", "random", "--seed", "5", "-o", out)
    assert code == 0
    from faultres import build_and_validate, parse_netlist

    build_and_validate(parse_netlist(out.read_text()))


def test_gen_np(tmp_path, capsys):
    cnf = tmp_path / "phi.cnf"
    cnf.write_text("p cnf 1 1\n1 0\n")
    out = tmp_path / "np.nl"
    code = run_cli("gen", "np", "--cnf", cnf, "--ne", "1", "-o", out)
    assert code == 0
    err = capsys.readouterr().err
    assert "not_resistant" in err
    from faultres import build_and_validate, parse_netlist

    doc = parse_netlist(out.read_text())
    assert doc.default_cycles == 3
    build_and_validate(doc)


def test_env_var_solver(workdir, monkeypatch, tmp_path, capsys):
    # an env-var solver that always reports unknown surfaces as an error
    script = tmp_path / "weird.py"
    script.write_text("import sys; sys.exit(7)\n")
    monkeypatch.setenv("FAULTRES_SOLVER", f"{sys.executable} {script}")
    code = run_cli("verify", workdir / "rect_parity.nl",
                   "--config", workdir / "zeta_1_1_all_c.json")
    assert code == 2


def test_json_reports_validate_on_all_fixtures(workdir, tmp_path):
    schema = load_schema()
    cases = [
        ("rect_parity.nl", "zeta_1_1_all_c.json"),
        ("rect_parity.nl", "zeta_1_1_all_c_parity.json"),
        ("rect_revised.nl", "zeta_1_1_all_c.json"),
        ("rect_revised.nl", "zeta_1_1_all_c_parity.json"),
    ]
    for nl, cfg in cases:
        report = tmp_path / "rep.json"
        code = run_cli("verify", workdir / nl, "--config", workdir / cfg,
                       "--json", report)
        data = json.loads(report.read_text())
        jsonschema.validate(data, schema)
        assert code in (0, 1)
        assert (code == 0) == (data["verdict"] == "resistant")
