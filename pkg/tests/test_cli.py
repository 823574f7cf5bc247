import json
from fractions import Fraction

import pytest

from latticemaps import runner
from latticemaps.cli import build_parser, main
from latticemaps.errors import SamplingError
from latticemaps.models import ModeKind, QuadId, StripConfig, StripState
from latticemaps.reports import ReportWriter
from latticemaps.sampling import RationalSampler

H1_ORBIT = {
    "equation": "h1",
    "mu": "3",
    "mode": {"autonomous": "2"},
    "n": 3,
    "boundary_minus": "h1_xz",
    "boundary_plus": "h1_yzx",
    "initial": ["1", "1", "1"],
}

Q1_INVARIANTS = {
    "equation": "q1_mult",
    "mu": "1",
    "mode": {"general": ["2", "3"]},
    "n": 3,
    "boundary_minus": "q1mult_row1",
    "boundary_plus": "q1mult_row3",
    "initial": ["3", "2", "1"],
}


@pytest.fixture()
def write_config(tmp_path):
    def write(document, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)

    return write


def test_parser_knows_every_verb():
    parser = build_parser()
    assert parser.parse_args(["verify", "--only", "duality"]).only == "duality"
    assert parser.parse_args(["gallery", "check", "h1_3d"]).gallery_id == "h1_3d"
    with pytest.raises(SystemExit):
        parser.parse_args(["verify", "--only", "everything"])


def test_gallery_list(capsys):
    assert main(["gallery", "list"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert "gamma" in [entry["id"] for entry in payload["gallery"]]


def test_gallery_check(capsys):
    assert main(["gallery", "check", "h1_3d", "--steps", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_gallery_check_unknown_id(capsys):
    assert main(["gallery", "check", "h9_2d"]) == 2
    assert "invalid-config: /gallery_id" in capsys.readouterr().err


def test_orbit_csv(write_config, capsys):
    assert main(["orbit", "--config", write_config(H1_ORBIT), "--steps", "2", "--format", "csv"]) == 0
    assert capsys.readouterr().out == (
        "step,x_1,x_2,x_3,alpha_1,alpha_2,inv_0\n"
        "0,1,1,1,2,4,1\n"
        "1,-1,3,0,2,4,1\n"
        "2,1,3/2,-1/3,2,4,1\n"
    )


def test_orbit_json_to_file(write_config, report_dir):
    out = report_dir / "orbit.json"
    assert main(["orbit", "--config", write_config(H1_ORBIT), "--steps", "1", "--out", str(out)]) == 0
    payload = ReportWriter(out).read_json()
    assert payload["states"][1]["fields"] == [-1, 3, 0]
    assert payload["singular_at"] is None


def test_singular_orbit_is_reported_not_failed(write_config, capsys):
    document = dict(H1_ORBIT, n=2, initial=["0", "1"])
    assert main(["orbit", "--config", write_config(document)]) == 0
    assert json.loads(capsys.readouterr().out)["singular_at"] == {"step": 0, "face": "boundary-plus"}


def test_orbit_running_into_a_singular_point_exits_zero(write_config, capsys):
    assert main(["orbit", "--config", write_config(H1_ORBIT), "--steps", "3", "--format", "csv"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[1:] == ["0,1,1,1,2,4,1", "1,-1,3,0,2,4,1", "2,1,3/2,-1/3,2,4,1"]


def test_orbit_report_reloads_into_models(write_config, report_dir):
    out = report_dir / "orbit.json"
    assert main(["orbit", "--config", write_config(H1_ORBIT), "--steps", "2", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    config = StripConfig.from_dict(payload["config"])
    assert config == StripConfig(
        QuadId.H1, "h1_xz", "h1_yzx", 3, Fraction(3), ModeKind.AUTONOMOUS, (Fraction(2),)
    )
    states = [StripState.from_dict(state) for state in payload["states"]]
    assert states[2] == StripState((Fraction(1), Fraction(3, 2), Fraction(-1, 3)), (Fraction(2), Fraction(4)), 2)


def test_relative_out_lands_in_output_dir(write_config, monkeypatch, tmp_path):
    monkeypatch.setenv("LATTICEMAPS_OUTPUT_DIR", str(tmp_path / "reports"))
    assert main(["orbit", "--config", write_config(H1_ORBIT), "--steps", "1", "--out", "h1/orbit.csv"]) == 0
    written = tmp_path / "reports" / "h1" / "orbit.csv"
    assert written.read_text().startswith("step,x_1,x_2,x_3")


def test_invariants_report(write_config, capsys):
    assert main(["invariants", "--config", write_config(Q1_INVARIANTS), "--steps", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["report"]["values"] == ["103/6", "0", "51", "0", "103/6"]
    assert payload["passed"] is True


def test_invalid_config_exits_with_two(write_config, capsys):
    document = dict(H1_ORBIT, n=1)
    assert main(["orbit", "--config", write_config(document)]) == 2
    captured = capsys.readouterr()
    assert captured.err.startswith("invalid-config: /n")
    assert captured.out == ""


def all_pass(tasks, workers):
    return [True] * len(tasks)


def test_verify_runs_every_suite(mocker, monkeypatch, capsys):
    monkeypatch.setenv("LATTICEMAPS_SAMPLES", "4")
    execute = mocker.patch("latticemaps.runner._execute", side_effect=all_pass)
    suite_tasks = mocker.spy(runner, "_suite_tasks")
    assert main(["verify", "--workers", "3"]) == 0
    assert [call.args[0] for call in suite_tasks.call_args_list] == list(runner.SUITES)
    assert all(call.args[2] == 4 for call in suite_tasks.call_args_list)
    tasks, workers = execute.call_args.args
    assert workers == 3
    assert {task.suite for task in tasks} == set(runner.SUITES)
    matrix = json.loads(capsys.readouterr().out)["matrix"]
    assert list(matrix["boundary-zcc"]) == list(runner.BOUNDARY_EQUATIONS)
    assert len(matrix["conjugation"]) == len(runner.strip_pairs()) * len(runner.CONJUGATION_WIDTHS)


def test_verify_splits_samples_into_seeded_chunks():
    sampler = RationalSampler(9)
    tasks = runner._suite_tasks("duality", sampler, 60)
    assert [task.samples for task in tasks[:3]] == [25, 25, 10]
    assert len(tasks) == 3 * len(runner.BOUNDARY_EQUATIONS)
    assert len({task.seed for task in tasks}) == len(tasks)
    again = runner._suite_tasks("duality", RationalSampler(9), 60)
    assert again == tasks
    conjugation = runner._suite_tasks("conjugation", RationalSampler(9), 100)
    assert {task.samples for task in conjugation} == {runner.CONJUGATION_CHUNK}


def test_verify_reports_failures(mocker, capsys):
    mocker.patch("latticemaps.runner._execute", side_effect=lambda tasks, workers: [False] * len(tasks))
    assert main(["verify", "--only", "symmetries", "--format", "csv"]) == 1
    assert capsys.readouterr().out == (
        "suite,row,result\nsymmetries,h1,fail\nsymmetries,q1_add,fail\nsymmetries,q1_mult,fail\n"
    )


def test_verify_reports_domain_errors(mocker, capsys):
    mocker.patch("latticemaps.runner._check_row", side_effect=SamplingError("no-valid-samples", "exhausted"))
    assert main(["verify", "--only", "k-involution", "--samples", "2", "--workers", "1"]) == 1
    matrix = json.loads(capsys.readouterr().out)["matrix"]
    assert matrix["k-involution"]["h1_xz"] == {"error": "no-valid-samples"}


def test_verify_single_suite(capsys):
    assert main(["verify", "--only", "k-involution", "--samples", "2", "--workers", "2"]) == 0
    matrix = json.loads(capsys.readouterr().out)["matrix"]
    assert list(matrix) == ["k-involution"]
    assert all(value is True for value in matrix["k-involution"].values())


def test_seeded_verify_is_independent_of_worker_count(monkeypatch, report_dir):
    monkeypatch.setenv("LATTICEMAPS_RNG_SEED", "5")
    first, second = report_dir / "first.json", report_dir / "second.json"
    for out, workers in ((first, "1"), (second, "2")):
        assert main(["verify", "--only", "duality", "--samples", "30", "--workers", workers, "--out", str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_invariants_reports_are_byte_identical(write_config, report_dir):
    document = dict(Q1_INVARIANTS, rng_seed=3)
    first, second = report_dir / "first.json", report_dir / "second.json"
    for out in (first, second):
        assert main(["invariants", "--config", write_config(document), "--steps", "4", "--out", str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_unknown_config_key_exits_with_two(write_config, capsys):
    document = dict(Q1_INVARIANTS, bogus=1)
    assert main(["invariants", "--config", write_config(document)]) == 2
    assert capsys.readouterr().err.startswith("invalid-config: /bogus")
