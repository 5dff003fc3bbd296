import json

import pytest

from rieszops import seq as sq
from rieszops.cli import emit_report, main, render_json, render_text
from rieszops.scenario import (
    CHECK_DEFAULTS,
    CheckRecord,
    CheckSpec,
    ConfigError,
    Report,
    Scenario,
    build_sequence,
    run_scenario,
)

SEPARATION = {
    "scale": {"kind": "geometric", "ratio": "1/2"},
    "alpha": {"kind": "constant", "value": 1},
    "candidates": [{"kind": "geometric", "ratio": 0.5}],
    "checks": [{"name": "compare-domains"}],
}


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


# ---------------------------------------------------------------------------
# sequence descriptors


@pytest.mark.parametrize(
    "desc, want",
    [
        ({"kind": "geometric", "ratio": 0.5}, sq.geometric(sq.exact("1/2"))),
        ({"kind": "polynomial-power", "exponent": "1/3", "scale": 2}, sq.polynomial_power(sq.exact("1/3"), 2)),
        ({"kind": "sqrt-index"}, sq.sqrt_index()),
        ({"kind": "constant", "value": [1, 2]}, sq.constant(1 + 2j)),
        ({"kind": "finite-support", "values": [1, "1/2"]}, sq.finite([1, sq.exact("1/2")])),
        ({"kind": "index", "exponent": 2}, sq.index_power(2)),
    ],
)
def test_build_sequence(desc, want):
    got = build_sequence(desc)
    assert got.values(12).tolist() == pytest.approx(want.values(12).tolist())


def test_build_composite_sequences():
    s = build_sequence({"kind": "product", "factors": [{"kind": "geometric", "ratio": 2},
                                                       {"kind": "reciprocal", "of": {"kind": "sqrt-index"}}]})
    with pytest.raises(ArithmeticError):
        s.values(3)
    s = build_sequence({"kind": "shift", "of": {"kind": "sqrt-index"}, "by": 1})
    assert s.values(3).tolist() == pytest.approx([1, 2**0.5, 3**0.5])
    s = build_sequence({"kind": "sum", "terms": [{"coef": 2, "of": {"kind": "constant", "value": 1}},
                                                 {"coef": -1, "of": {"kind": "index", "exponent": 1}}]})
    assert s.values(3).tolist() == pytest.approx([2, 1, 0])
    s = build_sequence({"kind": "tabulated", "values": [1, 2]})
    assert s.values(4).tolist() == [1, 2, 1, 2]
    assert build_sequence({"kind": "unannotated", "of": {"kind": "constant", "value": 1}}).growth() is None


@pytest.mark.parametrize(
    "desc, field",
    [
        ({"kind": "cosine"}, "x.kind"),
        ({"kind": "geometric"}, "x.ratio"),
        ({"kind": "geometric", "ratio": "one"}, "x.ratio"),
        ({"kind": "constant", "value": 1, "colour": 3}, "x"),
        ({"kind": "finite-support", "values": [1, True]}, "x.values[1]"),
        ([1, 2], "x"),
    ],
)
def test_build_sequence_errors_name_field(desc, field):
    with pytest.raises(ConfigError) as exc:
        build_sequence(desc, "x")
    assert exc.value.field == field


# ---------------------------------------------------------------------------
# scenario schema


def test_defaults_round_trip():
    s = Scenario.from_dict({"checks": [{"name": n} for n in CHECK_DEFAULTS]})
    again = Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
    assert again == s
    assert [c.params for c in again.checks] == [CHECK_DEFAULTS[n] for n in CHECK_DEFAULTS]


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"checks": [{"name": "nope"}]}, "checks[0].name"),
        ({"checks": [{"name": "ladder", "params": {"N": 0}}]}, "checks[0].params.N"),
        ({"checks": [{"name": "ladder", "params": {"tolerance": -1}}]}, "checks[0].params.tolerance"),
        ({"checks": [{"name": "ladder", "params": {"M": 3}}]}, "checks[0].params"),
        ({"checks": [{"name": "membership", "params": {"operator": "Q"}}]}, "checks[0].params.operator"),
        ({"checks": [{"name": "membership", "params": {"candidates": [3]}}]}, "checks[0].params.candidates"),
        ({"checks": [{"name": "closedness-witness", "params": {"expect": "yes"}}]}, "checks[0].params.expect"),
        ({"scale": {"kind": "constant", "value": -1}}, "scale"),
        ({"scale": {"kind": "constant", "value": 1}, "extra": 1}, "scenario"),
        ({"candidates": {}}, "candidates"),
        ([], "scenario"),
    ],
)
def test_schema_errors(doc, field):
    with pytest.raises(ConfigError) as exc:
        Scenario.from_dict(doc)
    assert exc.value.field == field


def test_check_spec_fills_defaults():
    c = CheckSpec.from_dict({"name": "commutator", "params": {"N": 8}})
    assert c.params == {"N": 8, "vectors": 100, "tolerance": 1e-12}


# ---------------------------------------------------------------------------
# running


def test_commutator_scenario_passes():
    s = Scenario.from_dict({"scale": {"kind": "geometric", "ratio": 2}, "alpha": {"kind": "sqrt-index"},
                            "checks": [{"name": "commutator", "params": {"N": 32}}]})
    r = run_scenario(s)
    assert r.summary == {"pass": 1, "fail": 0, "inconclusive": 0}
    ev = r.records[0].evidence
    assert ev["identity_band"] and ev["band_prefix"] == {"0": [1.0] * 8}


def test_compare_domains_scenario():
    r = run_scenario(Scenario.from_dict(SEPARATION))
    rec = r.records[0]
    assert rec.outcome == "pass" and rec.evidence["in_b_only"] == [0]
    assert rec.evidence["a"] == "H" and rec.evidence["in_a_only"] == []


def test_empty_checks():
    r = run_scenario(Scenario.from_dict({}))
    assert r.records == () and r.exit_code == 0
    assert r.to_dict()["summary"] == {"pass": 0, "fail": 0, "inconclusive": 0}


def test_expectation_mismatch_fails():
    doc = dict(SEPARATION, checks=[{"name": "membership", "params": {"expect": ["Converges"]}}])
    r = run_scenario(Scenario.from_dict(doc))
    assert r.records[0].outcome == "fail" and r.exit_code == 1
    assert r.records[0].evidence["outcomes"] == ["Diverges"]


def test_inconclusive_does_not_fail():
    # (n+1)^-1/2 on even indices only, with the annotation hidden: the probe cannot decide
    spikes = {"kind": "product", "factors": [
        {"kind": "unannotated", "of": {"kind": "tabulated", "values": [1, 0]}},
        {"kind": "polynomial-power", "exponent": "-1/2"}]}
    doc = {"alpha": {"kind": "constant", "value": 1}, "candidates": [spikes], "checks": [{"name": "membership"}]}
    r = run_scenario(Scenario.from_dict(doc))
    assert r.records[0].outcome == "inconclusive"
    assert r.summary["inconclusive"] == 1 and r.exit_code == 0


def test_witness_scenario():
    doc = {"scale": {"kind": "geometric", "ratio": "1/2"}, "alpha": {"kind": "constant", "value": 1},
           "checks": [{"name": "closedness-witness", "params": {"expect": "witness"}},
                      {"name": "closedness-witness", "params": {"dagger": True, "expect": "none"}}]}
    r = run_scenario(Scenario.from_dict(doc))
    assert [x.outcome for x in r.records] == ["pass", "pass"]


def test_riesz_and_lemma_checks():
    doc = {"alpha": {"kind": "index", "exponent": 1},
           "checks": [{"name": "riesz-consistency", "params": {"matrix": m}} for m in
                      ("hermitian-positive", "invertible", "diagonal")] + [{"name": "lemma22", "params": {"count": 5}}]}
    r = run_scenario(Scenario.from_dict(doc))
    assert all(x.outcome == "pass" for x in r.records)


def test_tolerance_scale_reaches_checks():
    s = Scenario.from_dict({"scale": {"kind": "polynomial-power", "exponent": "1/3"},
                            "checks": [{"name": "biorthogonality"}]})
    assert run_scenario(s, tolerance_scale=2).records[0].evidence["tolerance"] == 2e-12
    with pytest.raises(ConfigError):
        run_scenario(s, tolerance_scale=0)


def test_identical_runs_are_byte_identical():
    s = Scenario.from_dict({"scale": {"kind": "geometric", "ratio": 2},
                            "checks": [{"name": "commutator"}, {"name": "lemma22", "params": {"count": 3}},
                                       {"name": "riesz-consistency"}]})
    a, b = render_json(run_scenario(s, seed=4)), render_json(run_scenario(s, seed=4))
    assert a == b
    assert render_json(run_scenario(s, seed=5)) != a


def test_json_is_strict():
    r = run_scenario(Scenario.from_dict(SEPARATION))
    json.loads(render_json(r), parse_constant=lambda c: pytest.fail(f"non-standard constant {c}"))


# ---------------------------------------------------------------------------
# emitting and the command line


def test_emit_text_and_file(tmp_path, capsys):
    r = Report((CheckRecord("ladder", {"N": 4}, "pass", {}),))
    emit_report(r, "text")
    out = capsys.readouterr().out
    assert out.startswith("[pass] ladder N=4\n") and "pass=1 fail=0" in out
    path = tmp_path / "r.json"
    emit_report(r, "json", str(path))
    d = json.loads(path.read_text())
    assert d["summary"] == {"pass": 1, "fail": 0, "inconclusive": 0}
    assert d["tool"]["name"] == "rieszops" and d["schema"] == 1
    assert render_text(r).count("\n") == 2


def test_main_exit_codes(tmp_path, capsys):
    assert main(["run", _write(tmp_path, SEPARATION), "--format", "json"]) == 0
    failing = dict(SEPARATION, checks=[{"name": "compare-domains", "params": {"expect": {"in_both": [0]}}}])
    assert main(["run", _write(tmp_path, failing, "f.json")]) == 1
    assert main(["run", _write(tmp_path, {"checks": [{"name": "x"}]}, "bad.json")]) == 2
    assert main(["run", _write(tmp_path, "{not json", "broken.json")]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert "checks[0].name" in capsys.readouterr().err


def test_main_rejects_bad_seed(tmp_path):
    assert main(["run", _write(tmp_path, SEPARATION), "--seed", "-1"]) == 2


def test_main_write_failure(tmp_path):
    assert main(["run", _write(tmp_path, SEPARATION), "--out", str(tmp_path / "no" / "r.json")]) == 1


def test_demo_corollary(capsys):
    assert main(["demo", "corollary33", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in d["records"]] == ["commutator", "ladder"]


def test_demo_hermite_csv(tmp_path, capsys):
    csv = tmp_path / "f3.csv"
    assert main(["demo", "hermite", "--csv", str(csv), "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["records"][0]["evidence"]["csv_path"] == str(csv) and csv.exists()


def test_lemma22_subcommand(tmp_path):
    out = tmp_path / "r.json"
    assert main(["lemma22", "--order", "6", "--count", "4", "--seed", "3", "--format", "json", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())["records"][0]
    assert rec["parameters"] == {"order": 6, "count": 4} and rec["outcome"] == "pass"


@pytest.mark.parametrize("name", ["corollary33", "separation", "finite"])
def test_shipped_configs_pass(name, tmp_path):
    from pathlib import Path

    cfg = Path(__file__).resolve().parents[1] / "configs" / f"{name}.json"
    assert main(["run", str(cfg), "--out", str(tmp_path / "r.txt")]) == 0
