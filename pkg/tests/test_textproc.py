"""Tokenization, tf-idf vectors, language models, and similarity measures."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from news_placer.textproc import (
    TermRegistry,
    TermVector,
    build_idf,
    cosine,
    jaccard,
    kl_divergence,
    kl_smoothed,
    language_model,
    load_idf,
    save_idf,
    term_vector,
    tokenize,
    tokenize_and_tag,
    word_tokens,
)

TOKENS = st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=30)


class TestTokenize:
    def test_splits_words_and_punctuation(self):
        assert tokenize("Obama met 3 senators.") == [
            "Obama",
            "met",
            "3",
            "senators",
            ".",
        ]

    def test_empty_text(self):
        assert tokenize("") == []
        assert tokenize_and_tag([""]) == [[]]

    def test_word_tokens_drop_punctuation(self):
        assert word_tokens("a, b.") == ["a", "b"]


class TestTagging:
    def test_rule_table(self):
        (tags,) = tokenize_and_tag(["Obama met 3 senators."])
        by_token = dict(tags)
        assert by_token["Obama"] == "NNP"
        assert by_token["3"] == "CD"
        assert by_token["met"] == "VB"
        assert by_token["."] == "OTHER"

    def test_closed_class_beats_capitalization(self):
        (tags,) = tokenize_and_tag(["The dog barked. The cat Purred."])
        by_token = dict(tags)
        assert by_token["The"] == "OTHER"
        assert by_token["Purred"] == "NNP"
        assert by_token["dog"] == "NN"

    def test_deterministic(self):
        paragraphs = ["Alpha beta 12 gamma.", "Delta!"]
        assert tokenize_and_tag(paragraphs) == tokenize_and_tag(paragraphs)


class TestTermVector:
    def test_counts(self):
        assert term_vector("a b a").weights == {"a": 2.0, "b": 1.0}

    def test_case_folded(self):
        assert term_vector("A a").weights == {"a": 2.0}

    def test_zero_idf_annihilates(self):
        vec = term_vector("a b a", idf={"a": 0.0, "b": 1.0})
        assert vec.weights.get("a", 0.0) == 0.0
        assert vec.weights["b"] == 1.0

    def test_build_idf_hand_values(self):
        idf = build_idf(["x", "x y"])
        assert idf["x"] == 0.0
        assert idf["y"] == pytest.approx(math.log(2.0), abs=1e-12)

    def test_idf_round_trip(self, tmp_path):
        idf = build_idf(["x y", "x z", "x"])
        path = tmp_path / "idf.tsv"
        save_idf(path, idf)
        assert load_idf(path) == idf


class TestLanguageModel:
    def test_mle_when_beta_zero(self):
        lm = language_model(["a", "a", "b"], {"a", "b"}, beta=0.0)
        assert lm.prob("a") == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert lm.prob("b") == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_smoothed_floor(self):
        lm = language_model(["a"], {"a", "b"}, beta=0.1)
        assert lm.prob("b") == pytest.approx(0.05, abs=1e-12)
        assert lm.prob("a") == pytest.approx(0.95, abs=1e-12)

    def test_empty_text_is_error(self):
        with pytest.raises(ValueError):
            language_model([], {"a", "b"}, beta=0.1)
        with pytest.raises(ValueError):
            language_model(["a"], set(), beta=0.1)

    @given(TOKENS, st.floats(min_value=0.0, max_value=1.0))
    def test_sums_to_one(self, tokens, beta):
        lm = language_model(tokens, set(tokens), beta=beta)
        assert sum(lm.probs.values()) == pytest.approx(1.0, abs=1e-9)
        if beta > 0:
            assert all(p > 0 for p in lm.probs.values())


class TestKlDivergence:
    def _pair(self):
        p = language_model(["a", "b"], {"a", "b"}, beta=0.0)
        q = language_model(["a", "b", "b", "b"], {"a", "b"}, beta=0.0)
        return p, q

    def test_identical_models(self):
        p, _ = self._pair()
        assert kl_divergence(p, p) == 0.0

    def test_hand_value(self):
        p, q = self._pair()
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        assert kl_divergence(p, q) == pytest.approx(expected, abs=1e-12)
        assert kl_divergence(p, q) == pytest.approx(0.14384, abs=5e-6)

    def test_asymmetry_hand_value(self):
        p, q = self._pair()
        expected = 0.25 * math.log(0.5) + 0.75 * math.log(1.5)
        assert kl_divergence(q, p) == pytest.approx(expected, abs=1e-12)
        assert kl_divergence(q, p) == pytest.approx(0.13081, abs=5e-6)

    def test_vocabulary_mismatch_is_error(self):
        p = language_model(["a"], {"a"}, beta=0.0)
        q = language_model(["b"], {"b"}, beta=0.0)
        with pytest.raises(ValueError):
            kl_divergence(p, q)

    def test_zero_q_where_p_positive_is_error(self):
        p = language_model(["a", "b"], {"a", "b"}, beta=0.0)
        q = language_model(["b"], {"a", "b"}, beta=0.0)
        with pytest.raises(ValueError):
            kl_divergence(p, q)

    @given(TOKENS, TOKENS)
    def test_non_negative_on_smoothed_pairs(self, left, right):
        vocab = set(left) | set(right)
        p = language_model(left, vocab, beta=0.1)
        q = language_model(right, vocab, beta=0.1)
        assert kl_divergence(p, q) >= -1e-12


class TestKlSmoothed:
    """The id-based fast path must match the dict-based reference exactly."""

    @given(TOKENS, TOKENS, st.floats(min_value=0.01, max_value=0.9))
    def test_matches_language_model_path(self, left, right, beta):
        registry = TermRegistry()
        fast = kl_smoothed(
            registry.profile(left), registry.profile(right), beta=beta
        )
        vocab = set(left) | set(right)
        slow = kl_divergence(
            language_model(left, vocab, beta=beta),
            language_model(right, vocab, beta=beta),
        )
        assert fast == pytest.approx(slow, abs=1e-12)

    def test_registry_ids_are_stable(self):
        registry = TermRegistry()
        assert registry.id_of("a") == 0
        assert registry.id_of("b") == 1
        assert registry.id_of("a") == 0


class TestJaccard:
    def test_hand_value(self):
        assert jaccard({"a", "b"}, {"b", "c"}) == pytest.approx(1.0 / 3.0)

    def test_both_empty(self):
        assert jaccard(set(), set()) == 0.0

    def test_identical(self):
        assert jaccard({"a"}, {"a"}) == 1.0

    def test_disjoint(self):
        assert jaccard({"a"}, {"b"}) == 0.0

    @given(
        st.sets(st.integers(0, 10), max_size=8),
        st.sets(st.integers(0, 10), max_size=8),
    )
    def test_symmetric_and_bounded(self, a, b):
        assert jaccard(a, b) == jaccard(b, a)
        assert 0.0 <= jaccard(a, b) <= 1.0


class TestCosine:
    def test_hand_value(self):
        u = TermVector({"x": 1.0, "y": 1.0})
        v = TermVector({"x": 1.0})
        assert cosine(u, v) == pytest.approx(0.70711, abs=5e-6)

    def test_identical(self):
        u = term_vector("a b b")
        assert cosine(u, u) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine(term_vector("a"), term_vector("b")) == 0.0

    def test_zero_vector(self):
        assert cosine(TermVector({}), term_vector("a")) == 0.0

    @given(TOKENS, TOKENS, st.floats(min_value=0.1, max_value=9.0))
    def test_symmetric_and_scale_invariant(self, left, right, scale):
        u = term_vector(" ".join(left))
        v = term_vector(" ".join(right))
        assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-12)
        scaled = TermVector({t: w * scale for t, w in u.weights.items()})
        assert cosine(scaled, u) == pytest.approx(1.0, abs=1e-9)
