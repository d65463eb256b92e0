"""Candidate construction and the 33 section-placement features."""

import math
from dataclasses import replace

import pytest

from news_placer.asp import (
    ASP_CSV_COLUMNS,
    ASP_FEATURE_NAMES,
    AspAssemblyStats,
    AspYearContext,
    assemble_asp_matrix,
    assemble_asp_rows,
    covered_slots,
    finalize_sentinels,
    load_asp_matrix,
    save_asp_matrix,
)
from news_placer.corpus import AspTriple
from news_placer.templates import build_template
from news_placer.textproc import jaccard, word_tokens

from conftest import make_article, make_mention, make_profile, make_section, make_snapshot

CAREER = "campaign election parliament vote minister office policy cabinet"
WORKS = "album record tour studio release chart single producer"
HOBBY = "garden chess sailing painting pottery"
PROBE = "Obama met 3"

F = {name: i for i, name in enumerate(ASP_FEATURE_NAMES)}


def _profiles(with_private):
    """Three person profiles; the private extras exist only in the live snapshot."""
    out = []
    for i in range(3):
        sections = [
            make_section("Career", f"{CAREER} term{i}", anchors=("E2", "E3")),
            make_section("Works", f"{WORKS} disc{i}"),
        ]
        if with_private and i == 0:
            sections.append(make_section("Hobbies", HOBBY))
        if with_private and i == 2:
            sections.append(make_section("Probe", PROBE))
        out.append(make_profile(f"Q{i}", sections, classes=("person",), year=2009))
    return out


@pytest.fixture(scope="module")
def fixture():
    template = build_template(
        "person", make_snapshot(2009, _profiles(False)), seed=0, k_min=2, k_max=4, min_df=2
    )
    assert [s.canonical_label for s in template.slots] == ["Career", "Works"]
    career, works = (s.slot_id for s in template.slots)
    snapshot = make_snapshot(
        2009,
        _profiles(True)
        + [
            make_profile("E1", [], classes=("L",), year=2009),
            make_profile("E2", [], classes=("P",), year=2009),
        ],
    )
    articles = [
        make_article(
            "n1",
            [f"{CAREER} fresh news.", "More follows."],
            mentions=[
                make_mention("E1", 0, 0, 1, "E1"),
                make_mention("E2", 0, 1, 2, "E2"),
                make_mention("Q0", 1, 0, 1, "Q0"),
            ],
            title="campaign election update",
            year=2010,
        ),
        make_article(
            "n2",
            [f"{WORKS} again."],
            mentions=[make_mention("E1", 0, 0, 1, "E1"), make_mention("E2", 0, 1, 2, "E2")],
            title="n2",
            year=2010,
        ),
        make_article("n3", ["Smith met"], title="n3", year=2010),
        make_article("n4", [PROBE], title="n4", year=2010),
    ]
    ctx = AspYearContext(
        year=2010,
        articles=articles,
        snapshot_tm1=snapshot,
        templates={"person": template},
        n_topics=2,
        topic_iterations=60,
        seed=0,
    )
    return snapshot, template, career, works, ctx


def _features(ctx, news_id, entity_id, candidate_id, slot_for_label="") -> tuple:
    rows = assemble_asp_rows(
        AspTriple(news_id, entity_id, slot_for_label, 2010), ctx, 0, require_slot=False
    )
    return next(r for r in rows if r.candidate == candidate_id).features


class TestFeatureNames:
    def test_thirty_three_unique_names(self):
        assert len(ASP_FEATURE_NAMES) == 33
        assert len(set(ASP_FEATURE_NAMES)) == 33
        assert ASP_CSV_COLUMNS[5:-1] == ASP_FEATURE_NAMES


class TestCandidates:
    def test_private_section_becomes_candidate(self, fixture):
        _, template, career, works, ctx = fixture
        ids = [c.candidate_id for c in ctx.candidates_for("Q0", template)]
        assert ids == [career, works, "sec:2"]
        private = ctx.candidates_for("Q0", template)[-1]
        assert private.title == "Hobbies"
        assert private.refs_doc is None

    def test_covered_entity_has_only_slots(self, fixture):
        _, template, career, works, ctx = fixture
        ids = [c.candidate_id for c in ctx.candidates_for("Q1", template)]
        assert ids == [career, works]

    def test_empty_private_section_skipped(self, fixture):
        snapshot, template, career, works, _ = fixture
        degraded = make_snapshot(
            2009,
            [
                make_profile(
                    "QX",
                    [make_section("Career", CAREER), make_section("Blank", "")],
                    year=2009,
                )
            ],
        )
        ctx = AspYearContext(
            year=2010,
            articles=[make_article("m1", ["x"], year=2010)],
            snapshot_tm1=degraded,
            templates={"person": template},
            n_topics=2,
            topic_iterations=10,
            seed=0,
        )
        ids = [c.candidate_id for c in ctx.candidates_for("QX", template)]
        assert ids == [career, works]


class TestCoveredSlots:
    def test_full_coverage(self, fixture):
        snapshot, template, career, works, _ = fixture
        assert covered_slots("Q1", template, snapshot) == {career, works}

    def test_partial_coverage(self, fixture):
        snapshot, template, career, _, _ = fixture
        partial = make_snapshot(
            2009, [make_profile("QX", [make_section("Career", CAREER)], year=2009)]
        )
        assert covered_slots("QX", template, partial) == {career}

    def test_unknown_entity_empty(self, fixture):
        snapshot, template, _, _, _ = fixture
        assert covered_slots("ghost", template, snapshot) == frozenset()


class TestRowAssembly:
    def test_one_positive_per_triple(self, fixture):
        _, _, career, works, ctx = fixture
        rows = assemble_asp_rows(AspTriple("n1", "Q0", career, 2010), ctx, 7)
        assert [r.candidate for r in rows] == [career, works, "sec:2"]
        assert [r.label for r in rows] == [1, 0, 0]
        assert all(r.triple == 7 for r in rows)

    def test_unknown_slot_skipped_when_required(self, fixture):
        _, _, _, _, ctx = fixture
        assert assemble_asp_rows(AspTriple("n1", "Q0", "s99", 2010), ctx, 0) is None

    def test_unknown_slot_allowed_for_inference(self, fixture):
        _, _, _, _, ctx = fixture
        rows = assemble_asp_rows(AspTriple("n1", "Q0", "", 2010), ctx, 0, require_slot=False)
        assert rows is not None
        assert all(r.label == 0 for r in rows)

    def test_unknown_article_raises(self, fixture):
        _, _, career, _, ctx = fixture
        with pytest.raises(KeyError):
            assemble_asp_rows(AspTriple("ghost", "Q0", career, 2010), ctx, 0)

    def test_untempled_class_yields_none(self, fixture):
        _, _, career, _, ctx = fixture
        assert assemble_asp_rows(AspTriple("n1", "E1", career, 2010), ctx, 0) is None


class TestFeatureValues:
    def test_topic_separation(self, fixture):
        _, _, career, works, ctx = fixture
        career_row = _features(ctx, "n1", "Q0", career)
        works_row = _features(ctx, "n1", "Q0", works)
        assert career_row[F["topic_slot_jaccard"]] == 1.0
        assert works_row[F["topic_slot_jaccard"]] < 1.0

    def test_refs_jaccard_zero_without_lookup(self, fixture):
        _, _, career, works, ctx = fixture
        for cid in (career, works, "sec:2"):
            assert _features(ctx, "n1", "Q0", cid)[F["topic_refs_jaccard"]] == 0.0

    def test_pos_ngram_hand_values(self, fixture):
        _, _, _, _, ctx = fixture
        # article {NNP,VB} vs probe section {NNP,VB,CD}
        feats = _features(ctx, "n3", "Q2", "sec:2")
        assert feats[F["pos_unigram_jaccard"]] == pytest.approx(2 / 3, abs=1e-12)
        assert feats[F["pos_bigram_jaccard"]] == pytest.approx(1 / 2, abs=1e-12)
        assert feats[F["pos_trigram_jaccard"]] == 0.0

    def test_identical_text_pos_ngrams_are_one(self, fixture):
        _, _, _, _, ctx = fixture
        feats = _features(ctx, "n4", "Q2", "sec:2")
        assert feats[F["pos_unigram_jaccard"]] == 1.0
        assert feats[F["pos_bigram_jaccard"]] == 1.0
        assert feats[F["pos_trigram_jaccard"]] == 1.0

    def test_title_jaccard_hand_value(self, fixture):
        _, template, career, _, ctx = fixture
        feats = _features(ctx, "n1", "Q0", career)
        expected = jaccard(
            set(word_tokens("campaign election update")),
            set(word_tokens(template.slot(career).text)),
        )
        assert feats[F["title_jaccard"]] == pytest.approx(expected, abs=1e-12)
        assert 0.0 < feats[F["title_jaccard"]] < 1.0

    def test_entity_and_class_jaccard_hand_values(self, fixture):
        _, _, career, works, ctx = fixture
        # mentions {E1,E2} vs career anchors {E2,E3}; classes {L,P} vs {P}
        feats = _features(ctx, "n2", "Q1", career)
        assert feats[F["entity_anchor_jaccard"]] == pytest.approx(1 / 3, abs=1e-12)
        assert feats[F["class_anchor_jaccard"]] == pytest.approx(1 / 2, abs=1e-12)
        feats = _features(ctx, "n2", "Q1", works)  # works slot has no anchors
        assert feats[F["entity_anchor_jaccard"]] == 0.0
        assert feats[F["class_anchor_jaccard"]] == 0.0

    def test_paragraph_kl_zero_on_identical_text(self, fixture):
        _, _, _, _, ctx = fixture
        feats = _features(ctx, "n4", "Q2", "sec:2")
        assert feats[F["kl_para_1"]] == 0.0

    def test_cosine_prefers_matching_vocabulary(self, fixture):
        _, _, career, works, ctx = fixture
        career_cos = _features(ctx, "n1", "Q0", career)[F["cosine_tfidf"]]
        works_cos = _features(ctx, "n1", "Q0", works)[F["cosine_tfidf"]]
        assert works_cos == 0.0  # disjoint vocabulary under the template idf
        assert career_cos > 0.5

    def test_similarity_features_bounded(self, fixture):
        _, _, career, works, ctx = fixture
        bounded = [
            "topic_slot_jaccard",
            "topic_refs_jaccard",
            "pos_unigram_jaccard",
            "pos_bigram_jaccard",
            "pos_trigram_jaccard",
            "title_jaccard",
            "cosine_tfidf",
            "entity_anchor_jaccard",
            "class_anchor_jaccard",
        ]
        for cid in (career, works, "sec:2"):
            feats = _features(ctx, "n1", "Q0", cid)
            for name in bounded:
                assert 0.0 <= feats[F[name]] <= 1.0, name
            for k in range(1, 6):
                v = feats[F[f"kl_para_{k}"]]
                assert math.isnan(v) or v >= 0.0

    def test_frequency_counts(self, fixture):
        _, _, career, _, ctx = fixture
        feats = _features(ctx, "n1", "Q0", career)
        assert feats[F["n_paragraphs"]] == 2.0
        assert feats[F["n_tokens"]] == 12.0
        assert feats[F["n_entities"]] == 3.0
        assert feats[F["count_vb"]] == 0.0
        article = ctx.articles_by_id["n1"]
        assert feats[F["count_nnp"]] == float(
            sum(1 for p in article.pos for _, t in p if t == "NNP")
        )

    def test_top_entity_indicators(self, fixture):
        _, _, career, _, ctx = fixture
        feats = _features(ctx, "n1", "Q0", career)
        # E1, E2, Q0 are the only mentioned entities corpus-wide
        assert feats[F["top_entity_1"]] == 1.0
        assert feats[F["top_entity_4"]] == 0.0
        assert feats[F["top_class_1"]] == 1.0


class TestSentinels:
    def test_short_article_kl_padded(self, fixture):
        _, _, career, _, ctx = fixture
        raw = assemble_asp_rows(AspTriple("n4", "Q2", career, 2010), ctx, 0)
        assert all(math.isnan(r.features[F["kl_para_2"]]) for r in raw)

        finalized = finalize_sentinels(raw)
        assert all(math.isfinite(v) for r in finalized for v in r.features)
        # single-paragraph rows only: columns 2..5 never observe a value
        assert all(r.features[F["kl_para_2"]] == 1.0 for r in finalized)
        assert all(r.features[F["kl_para_1"]] >= 0.0 for r in finalized)

    def test_sentinel_is_column_max_plus_one(self, fixture):
        _, _, career, _, ctx = fixture
        rows = assemble_asp_rows(AspTriple("n4", "Q2", career, 2010), ctx, 0)
        idx = F["kl_para_1"]
        observed = [r.features[idx] for r in rows]
        extra = replace(
            rows[0],
            triple=1,
            features=tuple(
                math.nan if i == idx else v for i, v in enumerate(rows[0].features)
            ),
        )
        padded = finalize_sentinels(rows + [extra])
        assert padded[-1].features[idx] == pytest.approx(max(observed) + 1.0, abs=1e-12)

    def test_no_nan_rows_returned_unchanged(self, fixture):
        _, _, career, _, ctx = fixture
        rows = finalize_sentinels(assemble_asp_rows(AspTriple("n4", "Q2", career, 2010), ctx, 0))
        assert finalize_sentinels(rows) is rows


class TestMatrixAssembly:
    def test_indexes_and_stats(self, fixture):
        _, _, career, _, ctx = fixture
        triples = [
            AspTriple("n1", "ghost", career, 2010),  # no profile at t-1
            AspTriple("n1", "Q0", career, 2010),
            AspTriple("n1", "Q0", "s99", 2010),  # slot not among candidates
            AspTriple("n1", "E1", career, 2010),  # class without template
        ]
        stats = AspAssemblyStats()
        rows = assemble_asp_matrix(triples, ctx, stats)
        assert stats.skipped_missing_profile == 1
        assert stats.skipped_unknown_slot == 1
        assert stats.skipped_no_template == 1
        assert {r.triple for r in rows} == {1}

    def test_year_mismatch_raises(self, fixture):
        _, _, career, _, ctx = fixture
        with pytest.raises(ValueError):
            assemble_asp_matrix([AspTriple("n1", "Q0", career, 2011)], ctx)

    def test_matrix_is_sentinel_finalized(self, fixture):
        _, _, career, _, ctx = fixture
        rows = assemble_asp_matrix([AspTriple("n4", "Q2", career, 2010)], ctx)
        assert all(math.isfinite(v) for r in rows for v in r.features)

    def test_csv_round_trip(self, fixture, tmp_path):
        _, _, career, _, ctx = fixture
        rows = assemble_asp_matrix(
            [AspTriple("n1", "Q0", career, 2010), AspTriple("n4", "Q2", career, 2010)], ctx
        )
        path = tmp_path / "asp.csv"
        save_asp_matrix(path, rows)
        assert load_asp_matrix(path) == rows

    def test_load_rejects_foreign_header(self, fixture, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_asp_matrix(path)
