"""Command line coverage: every pipeline stage driven through main(argv).

A module fixture runs synth-corpus → templates → ground-truth → features →
train → evaluate once and the tests inspect the artifacts; error paths and
usage errors run their own short invocations. One class drives the installed
console script in a subprocess, which is the only way to observe the logging
configuration (the in-process handler binds stderr before we could swap it).
"""

import contextlib
import io
import json
import os
import re
import subprocess
from types import SimpleNamespace

import numpy as np
import pytest

from news_placer.aep import load_aep_matrix
from news_placer.asp import load_asp_matrix
from news_placer.cli import main
from news_placer.corpus import (
    SurfaceDictionary,
    link_entities,
    load_aep_pairs,
    load_asp_triples,
    load_news_corpus,
)
from news_placer.evaluate import RunConfig
from news_placer.forest import load_forest
from news_placer.report import load_report
from news_placer.templates import load_templates

CONFIG_OVERRIDES = {
    "seed": 0,
    "rf_trees": 20,
    "rf_max_depth": 10,
    "n_topics": 8,
    "topic_iterations": 30,
}

SYNTH_OVERRIDES = {
    "n_entities": 48,
    "n_classes": 4,
    "n_articles": 40,
    "first_year": 2009,
    "n_years": 2,
    "mentions_per_article": 14,
    "cited_per_article": 2,
    "n_slots": 4,
    "seed": 5,
    "signal": {"salience": 1.0, "authority": 1.0, "novelty": 1.0},
}


def _run(argv):
    """Invoke the CLI in-process, returning (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def _tree_bytes(root):
    """Map of relative path -> file bytes for a whole directory tree."""
    found = {}
    for base, _, names in os.walk(root):
        for name in names:
            path = os.path.join(base, name)
            with open(path, "rb") as fh:
                found[os.path.relpath(path, root)] = fh.read()
    return found


@pytest.fixture(scope="module")
def pipeline(smoke_data_dir, tmp_path_factory):
    """One full CLI pass over the smoke corpus; stages keep their stdout."""
    root = tmp_path_factory.mktemp("cli")
    data = str(smoke_data_dir)
    cfg = root / "config.json"
    cfg.write_text(json.dumps(CONFIG_OVERRIDES), encoding="utf-8")
    common = ["--config", str(cfg)]

    stdout = {}

    tmpl = root / "templates.json"
    code, stdout["templates"], _ = _run(
        ["templates", "--data", data, "--year", "2008", "--out", str(tmpl)] + common
    )
    assert code == 0

    pairs = root / "pairs_2010.csv"
    triples = root / "triples_2010.csv"
    code, stdout["ground-truth"], _ = _run(
        ["ground-truth", "--data", data, "--year", "2010", "--out", str(pairs),
         "--templates", str(tmpl), "--triples-out", str(triples)] + common
    )
    assert code == 0

    feat_aep = root / "aep_2009.csv"
    code, stdout["features-aep"], _ = _run(
        ["features", "--data", data, "--year", "2009", "--task", "aep",
         "--out", str(feat_aep)] + common
    )
    assert code == 0

    feat_asp = root / "asp_2009.csv"
    code, stdout["features-asp"], _ = _run(
        ["features", "--data", data, "--year", "2009", "--task", "asp",
         "--out", str(feat_asp)] + common
    )
    assert code == 0

    models = root / "models"
    code, stdout["train-aep"], _ = _run(
        ["train", "--features", str(feat_aep), "--task", "aep",
         "--out", str(models / "aep")] + common
    )
    assert code == 0
    code, stdout["train-asp"], _ = _run(
        ["train", "--features", str(feat_asp), "--task", "asp",
         "--out", str(models / "asp")] + common
    )
    assert code == 0

    reports = root / "reports"
    code, stdout["evaluate"], _ = _run(
        ["evaluate", "--data", data, "--out", str(reports), "--threads", "1"] + common
    )
    assert code == 0

    return SimpleNamespace(
        root=root, data=data, config=cfg, templates=tmpl, pairs=pairs,
        triples=triples, feat_aep=feat_aep, feat_asp=feat_asp, models=models,
        reports=reports, stdout=stdout,
    )


class TestSynth:
    def test_writes_loadable_corpus(self, tmp_path):
        cfg = tmp_path / "synth.json"
        cfg.write_text(json.dumps(SYNTH_OVERRIDES), encoding="utf-8")
        out = tmp_path / "corpus"
        code, stdout, _ = _run(["synth", "--out", str(out), "--config", str(cfg)])
        assert code == 0
        assert re.match(r"\d+ articles, snapshots 2008-2010, \d+ surface entries -> ", stdout)
        names = {p.name for p in out.iterdir()}
        assert {"corpus.jsonl", "dictionary.tsv", "meta.json"} <= names
        assert {f"snapshot_{y}.json" for y in (2008, 2009, 2010)} <= names
        articles = load_news_corpus(out / "corpus.jsonl")
        # 40 spread over two years plus the archive-year backfill of 40 // 2
        assert len(articles) == 60

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "synth.json"
        cfg.write_text(json.dumps(SYNTH_OVERRIDES), encoding="utf-8")
        outs = {}
        for name, seed in (("a", "9"), ("b", "9"), ("c", "10")):
            out = tmp_path / name
            code, _, _ = _run(
                ["synth", "--out", str(out), "--config", str(cfg), "--seed", seed]
            )
            assert code == 0
            outs[name] = (out / "corpus.jsonl").read_bytes()
        assert outs["a"] == outs["b"]
        assert outs["a"] != outs["c"]

    def test_rejects_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "synth.json"
        cfg.write_text(json.dumps({"n_entitties": 12}), encoding="utf-8")
        code, _, stderr = _run(["synth", "--out", str(tmp_path / "x"), "--config", str(cfg)])
        assert code == 1
        assert stderr.startswith("error:")
        assert "unknown synth keys" in stderr

    def test_rejects_non_object_config(self, tmp_path):
        cfg = tmp_path / "synth.json"
        cfg.write_text("[1, 2]", encoding="utf-8")
        code, _, stderr = _run(["synth", "--out", str(tmp_path / "x"), "--config", str(cfg)])
        assert code == 1
        assert "must be a JSON object" in stderr


class TestIngest:
    def test_summarizes_corpus(self, smoke_data_dir):
        corpus_path = str(smoke_data_dir / "corpus.jsonl")
        code, stdout, _ = _run(["ingest", "--corpus", corpus_path])
        assert code == 0
        articles = load_news_corpus(corpus_path)
        linked = sum(1 for a in articles if a.entity_ids())
        years = sorted({a.year for a in articles})
        assert stdout.strip() == (
            f"{len(articles)} articles, years {years[0]}-{years[-1]}, "
            f"{linked} with linked entities"
        )
        # the synthetic corpus ships raw text; mentions only appear after `link`
        assert linked == 0

    def test_out_round_trips(self, smoke_data_dir, tmp_path):
        corpus_path = str(smoke_data_dir / "corpus.jsonl")
        out = tmp_path / "copy.jsonl"
        code, _, _ = _run(["ingest", "--corpus", corpus_path, "--out", str(out)])
        assert code == 0
        assert load_news_corpus(out) == load_news_corpus(corpus_path)

    def test_missing_corpus_errors(self, tmp_path):
        code, _, stderr = _run(["ingest", "--corpus", str(tmp_path / "nope.jsonl")])
        assert code == 1
        assert stderr.startswith("error:")


class TestLink:
    def test_relinks_mentions(self, smoke_data_dir, tmp_path):
        out = tmp_path / "linked.jsonl"
        code, stdout, _ = _run(
            ["link", "--corpus", str(smoke_data_dir / "corpus.jsonl"),
             "--dictionary", str(smoke_data_dir / "dictionary.tsv"),
             "--out", str(out), "--min-prior", "0.3"]
        )
        assert code == 0
        linked = load_news_corpus(out)
        n_mentions = sum(len(a.mentions) for a in linked)
        assert stdout.strip() == f"{len(linked)} articles linked, {n_mentions} mentions"
        assert n_mentions > 0
        assert all(a.entity_ids() for a in linked)
        code, stdout, _ = _run(["ingest", "--corpus", str(out)])
        assert code == 0
        assert f"{len(linked)} with linked entities" in stdout


class TestTemplates:
    def test_builds_class_templates(self, pipeline):
        templates = load_templates(pipeline.templates)
        assert len(templates) == 4
        for template in templates.values():
            assert len(template.slots) >= 2
            for slot in template.slots:
                assert re.match(r"s\d\d$", slot.slot_id)
        assert pipeline.stdout["templates"].startswith("4 class templates")

    def test_unknown_year_errors(self, smoke_data_dir, tmp_path):
        code, _, stderr = _run(
            ["templates", "--data", str(smoke_data_dir), "--year", "1999",
             "--out", str(tmp_path / "t.json")]
        )
        assert code == 1
        assert "no snapshot for year 1999" in stderr


class TestGroundTruth:
    def test_pairs_file(self, pipeline):
        pairs = load_aep_pairs(pipeline.pairs)
        assert pairs
        assert all(p.year == 2010 for p in pairs)
        positives = sum(1 for p in pairs if p.relevant)
        assert 0 < positives < len(pairs)
        assert pipeline.stdout["ground-truth"].startswith(
            f"{len(pairs)} pairs ({positives} relevant)"
        )

    def test_triples_file(self, pipeline):
        triples = load_asp_triples(pipeline.triples)
        assert triples
        for t in triples:
            assert t.year == 2010
            assert t.news_id and t.entity_id
            assert re.match(r"s\d\d$", t.slot_id) or t.slot_id.startswith("sec:")

    def test_triples_require_templates(self, smoke_data_dir, tmp_path):
        code, _, stderr = _run(
            ["ground-truth", "--data", str(smoke_data_dir), "--year", "2010",
             "--out", str(tmp_path / "p.csv"), "--triples-out", str(tmp_path / "t.csv")]
        )
        assert code == 1
        assert "requires --templates" in stderr

    def test_needs_adjacent_snapshots(self, smoke_data_dir, tmp_path):
        code, _, stderr = _run(
            ["ground-truth", "--data", str(smoke_data_dir), "--year", "2008",
             "--out", str(tmp_path / "p.csv")]
        )
        assert code == 1
        assert "needs snapshots for 2008 and 2007" in stderr


class TestFeatures:
    def test_aep_matrix(self, pipeline):
        x, y, keys = load_aep_matrix(pipeline.feat_aep)
        assert x.shape == (len(keys), 11)
        assert len(keys) > 0
        assert np.isfinite(x).all()
        assert set(np.unique(y)) <= {0, 1}
        assert all(year == 2009 for _, _, year in keys)
        assert pipeline.stdout["features-aep"].startswith(f"{len(keys)} pair rows")

    def test_asp_matrix(self, pipeline):
        rows = load_asp_matrix(pipeline.feat_asp)
        assert rows
        for row in rows:
            assert len(row.features) == 33
            assert np.isfinite(row.features).all()
            assert row.label in (0, 1)
        assert pipeline.stdout["features-asp"].startswith(f"{len(rows)} candidate rows")


class TestTrain:
    def test_saves_loadable_forests(self, pipeline):
        for task, n_features, weighted in (("aep", 11, True), ("asp", 33, False)):
            model_dir = pipeline.models / task
            assert {p.name for p in model_dir.iterdir()} == {"forest.json", "forest.npz"}
            forest = load_forest(model_dir)
            assert forest.n_features == n_features
            assert forest.config.n_trees == 20
            assert forest.config.class_weighting is weighted
        assert pipeline.stdout["train-aep"].startswith("forest of 20 trees")

    def test_empty_matrix_errors(self, tmp_path):
        from news_placer.aep import save_aep_matrix

        empty = tmp_path / "empty.csv"
        save_aep_matrix(empty, [])
        code, _, stderr = _run(
            ["train", "--features", str(empty), "--task", "aep",
             "--out", str(tmp_path / "m")]
        )
        assert code == 1
        assert "no rows to train on" in stderr


class TestEvaluate:
    def test_writes_both_report_trees(self, pipeline):
        aep = {p.name for p in (pipeline.reports / "aep").iterdir()}
        assert aep == {"report.json", "metrics.csv", "pr_curve.csv", "predictions.csv"}
        asp = {p.name for p in (pipeline.reports / "asp").iterdir()}
        assert asp == {
            "report.json", "metrics.csv", "per_class.csv", "expansion.csv",
            "predictions.csv",
        }

    def test_reports_echo_resolved_config(self, pipeline):
        expected = RunConfig(**CONFIG_OVERRIDES).echo()
        for task in ("aep", "asp"):
            report = load_report(pipeline.reports / task)
            assert report["config"] == expected
            assert report["train_year"] == 2009
            assert report["test_years"] == [2010, 2011]

    def test_stdout_summarizes_both_tasks(self, pipeline):
        stdout = pipeline.stdout["evaluate"]
        aep = re.search(
            r"aep train=2009 test=\[2010, 2011\] F1 full=(\d\.\d{3}) "
            r"salience=(\d\.\d{3}) title=(\d\.\d{3}) kappa=(\d\.\d{3})", stdout
        )
        assert aep is not None
        assert float(aep.group(1)) >= float(aep.group(2))
        asp = re.search(
            r"asp train=2009 test=\[2010, 2011\] acc full=(\d\.\d{3}) "
            r"cosine=(\d\.\d{3}) modal=(\d\.\d{3}) kappa=(\d\.\d{3})", stdout
        )
        assert asp is not None
        assert float(asp.group(1)) >= float(asp.group(3))

    def test_task_filter_and_train_year_flag(self, pipeline, tmp_path):
        out = tmp_path / "aep_only"
        code, _, _ = _run(
            ["evaluate", "--data", pipeline.data, "--task", "aep", "--out", str(out),
             "--config", str(pipeline.config), "--train-year", "2010"]
        )
        assert code == 0
        assert (out / "aep").is_dir()
        assert not (out / "asp").exists()
        report = load_report(out / "aep")
        assert report["train_year"] == 2010
        assert report["test_years"] == [2011]
        assert report["config"]["train_year"] == 2010

    def test_threads_do_not_change_reports(self, pipeline, tmp_path):
        out = tmp_path / "threads8"
        code, _, _ = _run(
            ["evaluate", "--data", pipeline.data, "--out", str(out),
             "--config", str(pipeline.config), "--threads", "8"]
        )
        assert code == 0
        assert _tree_bytes(out) == _tree_bytes(pipeline.reports)


@pytest.fixture(scope="module")
def article_ids(smoke_data_dir):
    """First article of each year, linked the same way the CLI links them."""
    articles = load_news_corpus(smoke_data_dir / "corpus.jsonl")
    dictionary = SurfaceDictionary.load(smoke_data_dir / "dictionary.tsv")
    by_year = {}
    for a in sorted(articles, key=lambda a: a.id):
        if a.year in by_year:
            continue
        linked = link_entities(a, dictionary, min_prior=0.3)
        if linked.entity_ids():
            by_year[a.year] = linked
    return by_year


class TestSuggest:
    def test_ranked_suggestions(self, pipeline, article_ids):
        article = article_ids[2010]
        code, stdout, _ = _run(
            ["suggest", "--data", pipeline.data, "--models", str(pipeline.models),
             "--article", article.id, "--threshold", "0.1",
             "--config", str(pipeline.config)]
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["news_id"] == article.id
        assert payload["year"] == 2010
        assert payload["threshold"] == 0.1
        suggestions = payload["suggestions"]
        assert suggestions
        ranked = sorted(suggestions, key=lambda s: (-s["confidence"], s["entity_id"]))
        assert suggestions == ranked
        linked = set(article.entity_ids())
        for s in suggestions:
            assert set(s) == {"entity_id", "confidence", "slot_id", "slot_label"}
            assert s["entity_id"] in linked
            assert 0.1 <= s["confidence"] <= 1.0
            assert isinstance(s["slot_id"], str)
            assert isinstance(s["slot_label"], str)

    def test_threshold_above_one_empties_list(self, pipeline, article_ids):
        article = article_ids[2010]
        code, stdout, _ = _run(
            ["suggest", "--data", pipeline.data, "--models", str(pipeline.models),
             "--article", article.id, "--threshold", "1.01",
             "--config", str(pipeline.config)]
        )
        assert code == 0
        assert json.loads(stdout)["suggestions"] == []

    def test_unknown_article_errors(self, pipeline):
        code, _, stderr = _run(
            ["suggest", "--data", pipeline.data, "--models", str(pipeline.models),
             "--article", "zzz"]
        )
        assert code == 1
        assert "'zzz' not in corpus" in stderr

    def test_archive_year_lacks_prior_snapshot(self, pipeline, article_ids):
        article = article_ids[2008]
        code, _, stderr = _run(
            ["suggest", "--data", pipeline.data, "--models", str(pipeline.models),
             "--article", article.id]
        )
        assert code == 1
        assert "no prior snapshot for year 2008" in stderr


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["frobnicate"],
            ["evaluate", "--data", "d", "--out", "o", "--bogus"],
            ["features", "--data", "d", "--year", "2009", "--task", "nope", "--out", "o"],
            ["link", "--corpus", "c.jsonl", "--dictionary", "d.tsv"],
        ],
        ids=["no-subcommand", "unknown-subcommand", "unknown-flag", "bad-choice",
             "missing-required"],
    )
    def test_exit_code_2(self, argv):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


class TestConsoleScript:
    def _run_script(self, argv, **env_overrides):
        env = dict(os.environ, **env_overrides)
        return subprocess.run(
            ["news-placer"] + argv, capture_output=True, text=True, env=env
        )

    def test_data_error_exit_code(self, tmp_path):
        proc = self._run_script(["ingest", "--corpus", str(tmp_path / "nope.jsonl")])
        assert proc.returncode == 1
        assert proc.stderr.startswith("error:")
        assert "DEBUG" not in proc.stderr

    def test_debug_logging_env(self, tmp_path):
        proc = self._run_script(
            ["ingest", "--corpus", str(tmp_path / "nope.jsonl")],
            NEWS_PLACER_LOG="debug",
        )
        assert proc.returncode == 1
        assert "DEBUG news_placer: command failed" in proc.stderr
        assert "Traceback" in proc.stderr
        assert "error:" in proc.stderr

    def test_usage_error_exit_code(self):
        proc = self._run_script(["--bogus"])
        assert proc.returncode == 2
        assert "usage:" in proc.stderr
