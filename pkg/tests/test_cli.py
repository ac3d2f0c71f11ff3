import csv
import json
import numpy as np
import pytest

from sparse_synth import ConfigError, ConicSolution, pipeline
from sparse_synth.cli import main
from sparse_synth.config import ScenarioConfig, bundled_scenarios, load_config

SMALL = {
    "name": "small",
    "elements": 6,
    "spacing_wl": 0.5,
    "taper": {"type": "chebyshev", "sll_db": -20},
    "samples": 21,
    "pencil_L": 10,
    "iterations": 3,
    "delta_rel": 1e-2,
    "eps_rel": 0.02,
    "match_offsets": [-1, 0, 1],
    "sidelobe_db": -20,
    "method": "both",
    "pattern_points": 401,
    "solver": {"name": "clarabel"},
}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bundled_scenarios_load():
    assert {"scenario_A", "scenario_B"} <= set(bundled_scenarios())
    a = load_config("scenario_A")
    assert (a.elements, a.samples, a.pencil_L, a.iterations) == (20, 81, 40, 10)
    assert a.match_offsets == (-1, 0, 2)
    b = load_config("scenario_B")
    assert len(b.notches) >= 2


def test_round_trip_dict():
    cfg = load_config("scenario_B")
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [
    {"samples": 80},
    {"samples": 3},
    {"pencil_L": 81},
    {"method": "magic"},
    {"taper": {"type": "hann"}},
    {"elements": 0},
    {"eps_rel": 0},
    {"sidelobe_db": 3},
    {"rank_tol": 2},
    {"solver": {"name": "mosek"}},
])
def test_invalid_fields(bad):
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**SMALL, **bad})


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="colour"):
        ScenarioConfig.from_dict({**SMALL, "colour": "blue"})
    with pytest.raises(ConfigError, match="width"):
        ScenarioConfig.from_dict({**SMALL, "notches": [{"u_lo": 0.5, "u_hi": 0.6, "level_db": -40,
                                                         "width": 1}]})


def test_asymmetric_notch_rejected_for_logdet():
    data = {**SMALL, "notches": [{"u_lo": 0.5, "u_hi": 0.7, "level_db": -40}]}
    with pytest.raises(ConfigError, match="symmetric"):
        ScenarioConfig.from_dict(data)
    # the baseline ignores constraints, so it accepts any mask
    ScenarioConfig.from_dict({**data, "method": "mpm"})


def test_missing_config_exit_code(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
    assert "no config file" in capsys.readouterr().err


def test_invalid_json_exit_code(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["run", "--config", str(p)]) == 2


def test_nyquist_violation_exit_code(tmp_path, capsys):
    path = write(tmp_path, {**SMALL, "elements": 10, "spacing_wl": 1.2, "samples": 21, "pencil_L": 10,
                              "method": "mpm"})
    assert main(["run", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "[sample]" in err and "maximum admissible" in err


class StatusSolver:
    name = "stub"

    def __init__(self, status):
        self.status = status

    def solve(self, problem, warm=None):
        return ConicSolution(np.zeros(problem.n_vars), self.status, np.nan, np.nan)


@pytest.mark.parametrize("status,code", [("infeasible", 4), ("unbounded", 4), ("numerical_failure", 3)])
def test_solver_failure_exit_codes(tmp_path, capsys, monkeypatch, status, code):
    # the subproblem always admits a feasible point, so failures are injected
    monkeypatch.setattr(pipeline, "make_solver", lambda cfg: StatusSolver(status))
    assert main(["run", "--config", write(tmp_path, SMALL), "--method", "logdet"]) == code
    assert "[logdet]" in capsys.readouterr().err


def test_pencil_capacity_exceeded(tmp_path, capsys, monkeypatch):
    real = pipeline.run_logdet

    def full_rank(*args, **kw):
        state = real(*args, **kw)
        state.rank_trace[-1] = 11
        return state

    monkeypatch.setattr(pipeline, "run_logdet", full_rank)
    assert main(["run", "--config", write(tmp_path, {**SMALL, "iterations": 1})]) == 3
    assert "[pencil]" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = write(tmp_path, {**SMALL, "method": "mpm"})
    assert main(["run", "--config", path, "--out", str(blocker / "sub")]) == 5


def test_mpm_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", "scenario_A", "--method", "mpm", "--out", str(out)]) == 0
    res = json.loads((out / "results.json").read_text())
    assert res["mpm"]["R"] == len(read_csv(out / "elements.csv")) - 1
    rows = read_csv(out / "pattern.csv")
    assert rows[0] == ["u", "ref_db", "synth_db"]
    assert len(rows) == 4002
    assert not (out / "ranktrace.csv").exists()


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("small")
    path = write(root, SMALL)
    out = root / "out"
    assert main(["run", "--config", path, "--out", str(out), "--plot"]) == 0
    return root, path, out


def test_both_outputs_schema(small_run):
    _, _, out = small_run
    names = {p.name for p in out.iterdir()}
    assert {"results.json", "timings.json", "elements.csv", "elements_mpm.csv",
            "pattern.csv", "ranktrace.csv", "plot.svg"} <= names
    assert read_csv(out / "pattern.csv")[0] == ["u", "ref_db", "synth_db", "baseline_db"]
    assert read_csv(out / "elements.csv")[0] == ["n", "d_wl", "w_re", "w_im"]
    trace = read_csv(out / "ranktrace.csv")
    assert trace[0] == ["k", "rank", "surrogate"]
    assert [int(r[0]) for r in trace[1:]] == list(range(len(trace) - 1))
    assert (out / "plot.svg").read_text().startswith("<svg")
    res = json.loads((out / "results.json").read_text())
    assert res["logdet"]["R"] == int(trace[-1][1])
    assert "timings" not in res


def test_both_deterministic(small_run, tmp_path):
    _, path, out = small_run
    again = tmp_path / "again"
    assert main(["run", "--config", path, "--out", str(again)]) == 0
    for name in ("results.json", "elements.csv", "elements_mpm.csv", "pattern.csv", "ranktrace.csv"):
        assert (again / name).read_bytes() == (out / name).read_bytes(), name


def test_rank_trace_command(small_run, capsys):
    _, path, _ = small_run
    assert main(["rank-trace", "--config", path]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "k,rank,surrogate"
    assert len(lines) == SMALL["iterations"] + 2


def test_compare_prints_table(small_run, capsys):
    _, path, _ = small_run
    assert main(["compare", "--config", path]) == 0
    text = capsys.readouterr().out
    assert "logdet" in text and "mpm" in text and "PSL" in text


def test_multiple_configs_parallel(tmp_path):
    a = write(tmp_path, {**SMALL, "method": "mpm"}, "a.json")
    b = write(tmp_path, {**SMALL, "method": "mpm", "elements": 5}, "b.json")
    out = tmp_path / "multi"
    assert main(["run", "--config", a, "--config", b, "--jobs", "2", "--out", str(out)]) == 0
    assert (out / "a" / "results.json").exists() and (out / "b" / "results.json").exists()
    ra = json.loads((out / "a" / "results.json").read_text())
    rb = json.loads((out / "b" / "results.json").read_text())
    assert ra != rb


def test_worst_exit_code_wins(tmp_path):
    good = write(tmp_path, {**SMALL, "method": "mpm"}, "good.json")
    assert main(["run", "--config", good, "--config", str(tmp_path / "missing.json")]) == 2


def test_help_lists_scenarios(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    assert "scenario_A" in capsys.readouterr().out
