import json

import pytest

from tempo.cli import main
from tempo.t2pc import t2pc_text


@pytest.fixture
def model(tmp_path):
    path = tmp_path / "t2pc1.ta"
    path.write_text(t2pc_text(1))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_trivial_query(capsys, model):
    code, out, err = run(capsys, "check", model, "--query", "AG true")
    assert code == 0 and out.startswith("valid") and err == ""


def test_spec2b_trace_replays(capsys, model, tmp_path):
    trace = tmp_path / "cex.trace"
    code, out, _ = run(capsys, "check", model, "--query", "@spec2b", "--trace-out", trace)
    assert code == 1 and "invalid" in out
    code, out, _ = run(capsys, "replay", model, trace)
    assert code == 0 and out.startswith("ok")


def test_default_trace_path(capsys, model, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(capsys, "check", model, "--query", "AG not P1@coor_fail")
    assert code == 1 and (tmp_path / "t2pc1.trace").exists()


def test_query_file(capsys, model, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    qf = tmp_path / "q.txt"
    qf.write_text("# two queries\nAG true\nEF P1@coor_final\n")
    code, out, _ = run(capsys, "check", model, "--query", f"@{qf}", "--json")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and [r["status"] for r in rows] == ["valid", "valid"]
    # the reachable target comes with an example run
    assert rows[0]["witness"] is None and rows[1]["witness"] == "t2pc1.2.trace"
    code, out, _ = run(capsys, "replay", model, tmp_path / "t2pc1.2.trace")
    assert code == 0


def test_both_directions_json(capsys, model):
    code, out, _ = run(capsys, "check", model, "--query", "@s1", "--direction", "both", "--json")
    row = json.loads(out)
    assert code == 0 and row["status"] == "valid" and row["direction"] == "both"
    assert {"states_explored", "zones_stored", "wall_time_ms", "witness"} <= set(row)


def test_query_error_forwarded(capsys, model):
    code, out, err = run(capsys, "check", model, "--query", "nosuch == 1")
    assert code == 2 and out == "" and "undeclared identifier 'nosuch'" in err


def test_model_error_forwarded(capsys, tmp_path):
    bad = tmp_path / "bad.ta"
    bad.write_text("automaton P\n  loc a\n  init b\n")
    code, _, err = run(capsys, "check", bad, "--query", "AG true")
    assert code == 2 and "line 3" in err


def test_usage_error(capsys, model):
    with pytest.raises(SystemExit) as exc:
        main(["check", str(model)])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_memory_limit_exit(capsys, model, monkeypatch):
    monkeypatch.setenv("TEMPO_MEM_LIMIT_MB", "0.001")
    code, _, err = run(capsys, "check", model, "--query", "AG not P1@coor_fail")
    assert code == 3 and "out of memory" in err


def test_gen_round_trip(capsys, tmp_path):
    params = tmp_path / "p.txt"
    params.write_text("D = 90\n")
    code, out, _ = run(capsys, "gen", "t2pc", "--participants", 2, "--params", params)
    assert code == 0 and "  D = 90" in out and "automaton part2" in out


def test_replay_reports_step(capsys, model, tmp_path):
    trace = tmp_path / "bad.trace"
    trace.write_text("delay 1\n")
    code, out, _ = run(capsys, "replay", model, trace)
    assert code == 1 and "step 1" in out


def test_bench_table(capsys):
    code, out, _ = run(capsys, "bench", "t2pc", "--participants", "1", "--specs", "s1,s2b", "--direction", "both")
    assert code == 0
    assert "s2b" in out and "invalid" in out and "    6" in out


def test_bench_json_is_stable(capsys):
    def rows():
        code, out, _ = run(capsys, "bench", "t2pc", "--participants", "1", "--specs", "all", "--json")
        assert code == 0
        got = [json.loads(line) for line in out.splitlines()]
        for r in got:
            r.pop("wall_time_ms")
        return got

    first = rows()
    assert len(first) == 9 and first == rows()


def test_bench_bad_spec(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "t2pc", "--specs", "s9"])
    assert exc.value.code == 2
