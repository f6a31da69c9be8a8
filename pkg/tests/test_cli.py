import io
import json

import pytest

from mechlab.cli import flatten, list_scenarios, main, run_scenario
from mechlab.model import InputError

DIST = '{"k":2,"atoms":[{"x":["1","23/10"],"p":"1/2"},{"x":["2","27/10"],"p":"1/2"}]}'
PRICING = '{"k":2,"prices":{"0":"0","1":"1","2":"2","3":"4"}}'
MENU = (
    '{"k":2,"entries":[{"q":["0","0"],"s":"0"},{"q":["1","0"],"s":"1"},'
    '{"q":["0","1"],"s":"1"},{"q":["1","1"],"s":"2"}]}'
)


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in (("dist", DIST), ("pricing", PRICING), ("menu", MENU)):
        path = tmp_path / f"{name}.json"
        path.write_text(text)
        out[name] = str(path)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_scenario_ids():
    ids = [s[0] for s in list_scenarios()]
    assert len(ids) == len(set(ids))
    for needed in ("fig1-left", "fig1-right", "fig1-bottom", "harmonic", "non-convex-p", "bound-suite",
                   "diagonal", "motzkin-duality", "majorants", "am-directions", "quad-counterexample",
                   "canonical-pricing"):
        assert needed in ids
    assert ids == [s[0] for s in list_scenarios()]


def test_fig1_left_report():
    report = run_scenario("fig1-left")
    assert report.passed
    values = {r.name: r.value for r in report.results}
    assert "3/2" in {str(v) for v in values.values()}


def test_reruns_identical():
    a = run_scenario("majorant-tight", {"k": 4}).to_json()
    b = run_scenario("majorant-tight", {"k": 4}).to_json()
    a.pop("elapsed_ms"), b.pop("elapsed_ms")
    assert a == b
    s1 = run_scenario("canonical-pricing", {"count": 10}, seed=7).to_json()
    s2 = run_scenario("canonical-pricing", {"count": 10}, seed=7).to_json()
    s1.pop("elapsed_ms"), s2.pop("elapsed_ms")
    assert s1 == s2


def test_json_and_text_agree():
    report = run_scenario("fig1-left")
    payload = report.to_json()
    text = report.to_text()
    lines = text.splitlines()[1:]
    for r, line in zip(payload["results"], lines):
        value = r["value"] if isinstance(r["value"], str) else json.dumps(r["value"], separators=(",", ":"))
        mark = "pass" if r["pass"] else "FAIL"
        assert line == f"  {mark}  {r['name']}: {value}  (expect {r['expect']})"
    for key, value in payload["witnesses"].items():
        rendered = value if isinstance(value, str) else json.dumps(value, separators=(",", ":"))
        assert f"  witness {key}: {rendered}" in lines
    assert set(payload) == {"scenario", "results", "witnesses", "elapsed_ms"}
    assert all(set(r) == {"name", "value", "expect", "pass"} for r in payload["results"])


def test_bad_scenario_inputs():
    with pytest.raises(InputError):
        run_scenario("nope")
    with pytest.raises(InputError):
        run_scenario("harmonic", {"k": 9})
    with pytest.raises(InputError):
        run_scenario("harmonic", {"bogus": 1})
    with pytest.raises(InputError):
        run_scenario("majorant-tight", {"k": 3})


def test_revenue_commands(capsys, files):
    code, out, _ = run(capsys, "srev", "--input", files["dist"], "--json")
    assert code == 0 and json.loads(out)["value"] == "33/10"
    code, out, _ = run(capsys, "rev", "--input", files["dist"], "--json")
    assert code == 0
    code, out, _ = run(capsys, "prev", "--input", files["dist"], "--partition", "1|2")
    assert code == 0 and "value" in out


def test_eval_and_monotone_commands(capsys, files):
    code, out, _ = run(capsys, "eval", "--menu", files["menu"], "--x", "1,23/10", "--json")
    assert code == 0
    code, out, _ = run(capsys, "monotone", "--pricing", files["pricing"], "--json")
    assert code == 0 and json.loads(out)["status"] == "not-monotonic"
    code, out, _ = run(capsys, "check", "--pricing", files["pricing"], "--property", "submodular")
    assert code == 0


def test_stdin_input(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(DIST))
    code, out, _ = run(capsys, "brev", "--input", "-", "--json")
    assert code == 0 and json.loads(out)["value"] == "33/10"


def test_exit_codes(capsys, files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"k":2,"atoms":[{"x":["1","2"],"p":"5/6"}]}')
    code, _, err = run(capsys, "srev", "--input", str(bad))
    assert code == 2 and "input error" in err
    code, _, err = run(capsys, "srev", "--input", str(tmp_path / "missing.json"))
    assert code == 2
    code, _, err = run(capsys, "drev", "--input", files["dist"], "--cap", "2")
    assert code == 3 and "cap" in err
    code, _, _ = run(capsys, "repro", "fig1-left")
    assert code == 0
    code, out, _ = run(capsys, "repro", "majorants", "--param", "count=40")
    assert code == 1 and "FAIL" in out
    code, _, _ = run(capsys, "repro", "harmonic", "--param", "k=99")
    assert code == 2


def test_seed_validation(capsys):
    with pytest.raises(SystemExit):
        main(["repro", "diagonal", "--seed", "-1"])
    with pytest.raises(SystemExit):
        main(["repro", "diagonal", "--seed", str(1 << 64)])
    capsys.readouterr()


def test_repro_list(capsys):
    code, out, _ = run(capsys, "repro", "--list")
    assert code == 0 and "quad-counterexample" in out


def test_flatten_renders_rationals():
    assert flatten({"value": "3/2", "x": ["1", "inf"]}) == ['value: 3/2', 'x: ["1","inf"]']
