"""Shared hand-sized fixture builders for the test suite."""

import datetime

import pytest

from news_placer.corpus import (
    EntityMention,
    EntityProfile,
    EntitySnapshot,
    NewsArticle,
    NewsRef,
    Section,
    extract_domain,
)
from news_placer.evaluate import DataBundle, RunConfig
from news_placer.synthetic import (
    SignalStrengths,
    SyntheticCorpusSpec,
    generate_synthetic_corpus,
    write_synthetic_corpus,
)
from news_placer.textproc import tokenize_and_tag


def make_mention(entity_id, paragraph=0, start=0, end=1, surface=None):
    return EntityMention(
        entity_id=entity_id,
        paragraph=paragraph,
        start=start,
        end=end,
        surface=surface if surface is not None else entity_id,
    )


def make_article(
    article_id,
    paragraphs,
    mentions=(),
    title="untitled",
    year=2010,
    url=None,
    domain=None,
):
    url = url or f"http://daily.example.com/{article_id}"
    paragraphs = tuple(paragraphs)
    return NewsArticle(
        id=article_id,
        url=url,
        domain=domain or extract_domain(url),
        title=title,
        date=datetime.date(year, 6, 15),
        paragraphs=paragraphs,
        pos=tuple(tuple(p) for p in tokenize_and_tag(list(paragraphs))),
        mentions=tuple(mentions),
    )


def make_section(title, text, anchors=(), ref_urls=(), year=2009):
    return Section(
        title=title,
        text=text,
        anchors=tuple(anchors),
        news_refs=tuple(
            NewsRef(url=u, date=datetime.date(year, 3, 1)) for u in ref_urls
        ),
    )


def make_profile(entity_id, sections, classes=("person",), year=2009, title=None):
    return EntityProfile(
        entity_id=entity_id,
        title=title if title is not None else entity_id.replace("_", " "),
        classes=tuple(classes),
        year=year,
        sections=tuple(sections),
    )


def make_snapshot(year, profiles):
    return EntitySnapshot(year=year, profiles={p.entity_id: p for p in profiles})


SMOKE_SPEC = SyntheticCorpusSpec(
    n_entities=48,
    n_classes=4,
    n_articles=160,
    first_year=2009,
    n_years=3,
    mentions_per_article=14,
    cited_per_article=1,
    n_slots=4,
    seed=3,
    signal=SignalStrengths(salience=1.0, authority=1.0, novelty=1.0),
)

SMOKE_CONFIG = RunConfig(
    seed=0,
    rf_trees=20,
    rf_max_depth=10,
    n_topics=8,
    topic_iterations=30,
)


@pytest.fixture(scope="session")
def smoke_corpus():
    """Small planted corpus shared by the experiment-level tests."""
    return generate_synthetic_corpus(SMOKE_SPEC)


@pytest.fixture(scope="session")
def smoke_bundle(smoke_corpus):
    return DataBundle(
        articles=list(smoke_corpus.articles),
        snapshots=dict(smoke_corpus.snapshots),
        dictionary=smoke_corpus.dictionary,
    )


@pytest.fixture(scope="session")
def smoke_data_dir(smoke_corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke_corpus")
    write_synthetic_corpus(smoke_corpus, out)
    return out
