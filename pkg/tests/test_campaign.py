from __future__ import annotations

import json
from pathlib import Path

import pytest

from cypherfuzz import query_ast as qa
from cypherfuzz.campaign import (
    CampaignConfig,
    build_database,
    derive_child_seed,
    emit_bug_report,
    graph_from_json,
    graph_to_json,
    render_outcomes_json,
    replay_bundle,
    run_campaign,
    summary_dict,
)
from cypherfuzz.errors import ConfigError
from cypherfuzz.executor import ExecOutcome, ResultSet
from cypherfuzz.generate import GenLimits, create_script
from cypherfuzz.model import Node, Relationship
from cypherfuzz.oracle import VerdictKind
from cypherfuzz.parser import parse_query


def small_config(**overrides) -> CampaignConfig:
    base = dict(
        targets=["reference", "reference!agg-empty-zero-rows"],
        seed=3,
        iterations=1,
        num_generated=30,
        num_mutated=30,
        timeout=120,
    )
    base.update(overrides)
    return CampaignConfig(**base)


class TestConfig:
    def test_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            CampaignConfig.from_dict({"no_such_key": 1})

    def test_rejects_unknown_limit_keys(self):
        with pytest.raises(ConfigError):
            CampaignConfig.from_dict({"limits": {"bogus": 1}})

    def test_accepts_nested_limits(self):
        config = CampaignConfig.from_dict(
            {"seed": 5, "limits": {"node_count": 4, "int_range": [-5, 5]}}
        )
        assert config.limits.node_count == 4
        assert config.limits.int_range == (-5, 5)

    def test_from_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 9, "num_generated": 2, "num_mutated": 0}))
        config = CampaignConfig.from_file(path)
        assert config.seed == 9

    def test_validation(self):
        with pytest.raises(ConfigError):
            CampaignConfig(num_generated=0, num_mutated=0).validate()
        with pytest.raises(ConfigError):
            CampaignConfig(targets=[]).validate()
        with pytest.raises(ConfigError):
            CampaignConfig(min_len=4, max_len=3).validate()


class TestCampaign:
    def test_fault_pair_yields_bug_reports(self, tmp_path):
        config = small_config(out_dir=str(tmp_path / "out"))
        result = run_campaign(config)
        assert result.bugs, "fault-injected pair must disagree somewhere"
        assert all(b.verdict.kind == VerdictKind.WRONG_RESULT_BUG for b in result.bugs)
        bundle = tmp_path / "out" / "0000"
        for name in (
            "manifest.json", "schema.cypher", "graph.cypher", "query.cypher", "outcomes.json",
        ):
            assert (bundle / name).exists()

    def test_two_bugs_two_bundles(self, tmp_path):
        config = small_config(out_dir=str(tmp_path / "out"))
        result = run_campaign(config)
        if len(result.bugs) >= 2:
            assert (tmp_path / "out" / "0001").exists()

    def test_stop_on_first_bug(self):
        config = small_config(stop_on_first_bug=True, num_generated=100, num_mutated=0)
        result = run_campaign(config)
        assert len(result.bugs) == 1

    def test_no_mutation_arm_never_mutates(self):
        config = small_config(
            targets=["reference"], num_generated=25, num_mutated=0, seed=8
        )
        result = run_campaign(config)
        assert result.metrics.queries_total == 25

    def test_determinism_byte_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            run_campaign(small_config(out_dir=str(out), save_corpus=True))
        files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            if rel.suffix == ".png":
                continue  # matplotlib may embed library-version metadata
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel

    def test_reports_written(self, tmp_path):
        out = tmp_path / "out"
        result = run_campaign(small_config(out_dir=str(out), save_corpus=True))
        summary = json.loads((out / "summary.json").read_text())
        assert summary["metrics"]["queries_total"] == result.metrics.queries_total
        assert summary["campaign"]["bugs_found"] == len(result.bugs)
        assert (out / "metrics.csv").exists()
        assert (out / "figures" / "non_empty_by_length.png").exists()
        assert (out / "figures" / "grammar_coverage.png").exists()
        corpus = list((out / "corpus").glob("iter-*.cypher"))
        assert corpus, "save_corpus writes per-iteration query files"

    def test_liveness_default_scale_single_iteration(self):
        import time

        config = CampaignConfig(
            targets=["reference"], seed=0, iterations=1, timeout=60
        )
        started = time.monotonic()
        result = run_campaign(config)
        assert time.monotonic() - started < 60
        assert result.iterations_run == 1
        assert result.metrics.queries_total == 200


class TestBundles:
    def test_replay_reproduces_verdict(self, tmp_path):
        out = tmp_path / "out"
        result = run_campaign(small_config(out_dir=str(out)))
        assert result.bugs
        for bug in result.bugs[:3]:
            replayed = replay_bundle(out / f"{bug.index:04d}")
            assert replayed.reproduced, replayed

    def test_manifest_contents(self, tmp_path):
        out = tmp_path / "out"
        result = run_campaign(small_config(out_dir=str(out)))
        manifest = json.loads((out / "0000" / "manifest.json").read_text())
        bug = result.bugs[0]
        assert manifest["child_seed"] == derive_child_seed(3, bug.iteration)
        assert manifest["targets"] == ["reference", "reference!agg-empty-zero-rows"]
        assert manifest["verdict"]["kind"] == "wrong_result_bug"
        assert "gen_limits" in manifest

    def test_graph_script_matches_database(self, tmp_path):
        out = tmp_path / "out"
        result = run_campaign(small_config(out_dir=str(out)))
        bug = result.bugs[0]
        _, graph, _ = build_database(bug.child_seed, bug.limits, bug.index_count)
        recorded = (out / "0000" / "graph.cypher").read_text()
        assert recorded == create_script(graph)

    def test_query_file_parses_and_matches(self, tmp_path):
        out = tmp_path / "out"
        result = run_campaign(small_config(out_dir=str(out)))
        text = (out / "0000" / "query.cypher").read_text().strip()
        assert qa.render(parse_query(text)) == text
        assert text == result.bugs[0].query_text


class TestOutcomeSerialization:
    def test_success_rows(self):
        outcome = ExecOutcome.success(
            ResultSet(("a", "b"), [(1, None), (True, "x")], ordered=False)
        )
        text = render_outcomes_json({"reference": outcome})
        payload = json.loads(text)
        assert payload["reference"]["rows"] == [[1, None], [True, "x"]]

    def test_float_17_digits(self):
        outcome = ExecOutcome.success(ResultSet(("a",), [(1 / 3,)]))
        text = render_outcomes_json({"reference": outcome})
        assert "0.33333333333333331" in text
        assert json.loads(text)["reference"]["rows"][0][0] == 1 / 3

    def test_entity_cells(self):
        node = Node(4, ("L",), {"k": 1})
        rel = Relationship(2, "T", 0, 1, {"w": 2.5})
        outcome = ExecOutcome.success(ResultSet(("n", "r"), [(node, rel)]))
        payload = json.loads(render_outcomes_json({"reference": outcome}))
        assert payload["reference"]["rows"][0][0] == {
            "node": {"labels": ["L"], "properties": {"k": 1}}
        }
        assert payload["reference"]["rows"][0][1]["relationship"]["type"] == "T"

    def test_error_outcome(self):
        text = render_outcomes_json({"reference": ExecOutcome.error("boom")})
        payload = json.loads(text)
        assert payload["reference"] == {"kind": "runtime_error", "message": "boom"}


class TestGraphJson:
    def test_round_trip(self, seeded_graph):
        rebuilt = graph_from_json(graph_to_json(seeded_graph))
        assert create_script(rebuilt) == create_script(seeded_graph)
        assert rebuilt.schema == seeded_graph.schema
