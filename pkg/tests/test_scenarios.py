import json

import pytest
from conftest import CORPUS

from paramfuzz.scenarios import SCENARIO_DIR, Scenario, SerialChooser, check_scenario, load_scenarios, scenario_check
from paramfuzz.dmir import parse_file
from paramfuzz.vkernel import boot, run_case


def test_bundled_scenarios_load():
    names = [s.name for s in load_scenarios()]
    assert names == ["benign_counter", "blktrace_uaf", "hub_disconnect_npd", "md_relock"]
    for s in load_scenarios():
        assert s.program.is_file()


@pytest.mark.parametrize("sc", load_scenarios(), ids=lambda s: s.name)
def test_bundled_scenario_passes(sc):
    r = check_scenario(sc)
    assert r.ok, r.line()
    assert r.line().startswith("PASS ")


def test_serial_chooser_runs_threads_in_order():
    sc = next(s for s in load_scenarios() if s.name == "blktrace_uaf")
    k = boot(parse_file(sc.program))
    for order in ([0, 1], [1, 0]):
        res = run_case(k, sc.case, SerialChooser(order))
        assert res.title is None
        # once the second thread is picked the first one is done
        ranks = [order.index(t) for t, _ in res.trace]
        assert ranks == sorted(ranks)
        assert all(res.statuses)


def test_wrong_expectation_fails(tmp_path):
    doc = json.loads((SCENARIO_DIR / "hub_disconnect_npd.json").read_text())
    doc["expect_verdicts"] = [None]
    d = tmp_path / "scenarios"
    d.mkdir()
    (d / "x.json").write_text(json.dumps(doc))
    (tmp_path / doc["program"]).write_text((CORPUS / doc["program"]).read_text())
    results = scenario_check(d)
    assert len(results) == 1 and not results[0].ok
    assert "FAILED" in results[0].line()


def test_scenario_program_resolves_against_corpus():
    sc = Scenario.load(SCENARIO_DIR / "md_relock.json")
    assert sc.program == (CORPUS / "bugbench.dmir").resolve()
    assert sc.expect_verdicts is None
