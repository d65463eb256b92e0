"""Features for the article-to-section placement stage.

Each labeled (article, entity, section) triple expands into one candidate
row per template slot plus one per private entity section the template does
not cover; exactly one row is positive. Rows combine topic, part-of-speech,
lexical, entity-overlap and frequency signals between the article and the
candidate section group.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import EntitySnapshot, NewsArticle, normalize_surface
from .templates import ClassTemplate, TemplateSlot
from .corpus import pick_template_class
from .textproc import (
    POS_TAGS,
    TermRegistry,
    TermVector,
    cosine,
    jaccard,
    kl_smoothed,
    tokenize_and_tag,
    word_tokens,
)
from .topics import TopicModel, fit_topics

N_KL_PARAGRAPHS = 5
TOP_K = 5

ASP_FEATURE_NAMES = (
    "topic_slot_jaccard",
    "topic_refs_jaccard",
    "pos_unigram_jaccard",
    "pos_bigram_jaccard",
    "pos_trigram_jaccard",
    "title_jaccard",
    "kl_para_1",
    "kl_para_2",
    "kl_para_3",
    "kl_para_4",
    "kl_para_5",
    "cosine_tfidf",
    "entity_anchor_jaccard",
    "class_anchor_jaccard",
    "count_nnp",
    "count_nn",
    "count_cd",
    "count_vb",
    "count_jj",
    "count_other",
    "n_paragraphs",
    "n_tokens",
    "n_entities",
    "top_entity_1",
    "top_entity_2",
    "top_entity_3",
    "top_entity_4",
    "top_entity_5",
    "top_class_1",
    "top_class_2",
    "top_class_3",
    "top_class_4",
    "top_class_5",
)

ASP_CSV_COLUMNS = (
    "news_id",
    "entity_id",
    "year",
    "triple",
    "candidate",
    *ASP_FEATURE_NAMES,
    "label",
)


@dataclass(frozen=True)
class AspRow:
    """One candidate row of the section-placement matrix."""

    news_id: str
    entity_id: str
    year: int
    triple: int
    candidate: str
    features: tuple[float, ...]
    label: int


@dataclass(frozen=True)
class _Candidate:
    """A section group an article can be placed into."""

    candidate_id: str
    title: str
    token_set: frozenset[str]
    pos_ngrams: tuple[frozenset, frozenset, frozenset]
    profile: object
    vector: TermVector
    anchors: frozenset[str]
    topic_doc: str
    refs_doc: str | None


def _pos_ngram_sets(tagged) -> tuple[frozenset, frozenset, frozenset]:
    """Type sets of tag 1/2/3-grams; paragraphs do not bridge."""
    grams: tuple[set, set, set] = (set(), set(), set())
    for para in tagged:
        tags = [tag for _, tag in para]
        for n in (1, 2, 3):
            grams[n - 1].update(
                tuple(tags[i : i + n]) for i in range(len(tags) - n + 1)
            )
    return tuple(frozenset(g) for g in grams)


def _entity_classes(entity_ids, snapshot: EntitySnapshot) -> set[str]:
    classes: set[str] = set()
    for entity_id in entity_ids:
        profile = snapshot.profiles.get(entity_id)
        if profile is not None:
            classes.update(profile.classes)
    return classes


@dataclass
class _ArticleView:
    """Per-article feature inputs, computed once."""

    title_tokens: frozenset[str]
    tag_counts: tuple[float, ...]
    n_paragraphs: float
    n_tokens: float
    entity_counts: dict[str, int]
    top_entities: tuple[str, ...]
    top_classes: tuple[str, ...]
    entity_classes: frozenset[str]
    pos_ngrams: tuple[frozenset, frozenset, frozenset]
    paragraph_profiles: list
    vectors: dict[str, TermVector] = field(default_factory=dict)


class AspYearContext:
    """Shared state for assembling one pair-year's candidate rows.

    Everything profile- or template-derived comes from the snapshot
    preceding the year; the year's own articles are the only same-year
    input. The topic model covers the articles, the per-slot aggregate and
    referenced-article texts, and every prior entity section.
    """

    def __init__(
        self,
        year: int,
        articles,
        snapshot_tm1: EntitySnapshot,
        templates: dict[str, ClassTemplate],
        registry=None,
        article_lookup=None,
        n_topics: int = 50,
        topic_iterations: int = 200,
        seed: int = 0,
        top_m: int = 20,
        beta: float = 0.1,
    ):
        self.year = year
        self.snapshot_tm1 = snapshot_tm1
        self.templates = templates
        self.registry = registry
        self.article_lookup = article_lookup
        self.top_m = top_m
        self.beta = beta
        self.articles_by_id = {a.id: a for a in articles}
        self.term_registry = TermRegistry()
        self._class_sizes = {c: t.n_entities for c, t in templates.items()}
        self._views: dict[str, _ArticleView] = {}
        self._topic_term_sets: dict[int, frozenset[str]] = {}

        docs = []
        for article in sorted(articles, key=lambda a: a.id):
            tokens = [t for p in article.paragraphs for t in word_tokens(p)]
            docs.append(("a:" + article.id, tokens))
        self._slot_candidates: dict[tuple[str, str], _Candidate] = {}
        slot_texts: list[tuple[str, str, TemplateSlot]] = []
        for class_id in sorted(templates):
            for slot in templates[class_id].slots:
                slot_texts.append((class_id, slot.slot_id, slot))
        for class_id, slot_id, slot in slot_texts:
            docs.append((f"slot:{class_id}:{slot_id}", word_tokens(slot.text)))
            refs_tokens = self._referenced_tokens(slot.news_ref_urls)
            if refs_tokens:
                docs.append((f"refs:{class_id}:{slot_id}", refs_tokens))
        for entity_id in sorted(snapshot_tm1.profiles):
            profile = snapshot_tm1.profiles[entity_id]
            for i, section in enumerate(profile.sections):
                tokens = word_tokens(section.text)
                if tokens:
                    docs.append((f"sec:{entity_id}:{i}", tokens))
        self.topics: TopicModel = fit_topics(
            docs, n_topics=n_topics, iterations=topic_iterations, seed=seed
        )
        self._topic_docs = frozenset(self.topics.doc_ids)

        for class_id, slot_id, slot in slot_texts:
            refs_doc = f"refs:{class_id}:{slot_id}"
            self._slot_candidates[(class_id, slot_id)] = self._make_candidate(
                candidate_id=slot_id,
                title=slot.canonical_label,
                text=slot.text,
                vector=slot.aggregate,
                anchors=slot.anchors,
                topic_doc=f"slot:{class_id}:{slot_id}",
                refs_doc=refs_doc if refs_doc in self._topic_docs else None,
            )

        mention_totals: Counter = Counter()
        class_totals: Counter = Counter()
        for article in articles:
            for mention in article.mentions:
                mention_totals[mention.entity_id] += 1
                profile = snapshot_tm1.profiles.get(mention.entity_id)
                if profile is not None:
                    for class_id in profile.classes:
                        class_totals[class_id] += 1
        self.global_top_entities = frozenset(
            e for e, _ in sorted(mention_totals.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_K]
        )
        self.global_top_classes = frozenset(
            c for c, _ in sorted(class_totals.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_K]
        )

    # -- caches ------------------------------------------------------------

    def _referenced_tokens(self, urls) -> list[str]:
        if self.article_lookup is None:
            return []
        tokens: list[str] = []
        for url in urls:
            article = self.article_lookup(url)
            if article is not None:
                for para in article.paragraphs:
                    tokens.extend(word_tokens(para))
        return tokens

    def _make_candidate(self, candidate_id, title, text, vector, anchors, topic_doc, refs_doc):
        tagged = tokenize_and_tag(text.split("\n"))
        tokens = word_tokens(text)
        return _Candidate(
            candidate_id=candidate_id,
            title=title,
            token_set=frozenset(tokens),
            pos_ngrams=_pos_ngram_sets(tagged),
            profile=self.term_registry.profile(tokens) if tokens else None,
            vector=vector,
            anchors=frozenset(anchors),
            topic_doc=topic_doc,
            refs_doc=refs_doc,
        )

    def topic_terms(self, doc_id: str) -> frozenset[str]:
        topic = self.topics.dominant_topic(doc_id)
        cached = self._topic_term_sets.get(topic)
        if cached is None:
            cached = frozenset(self.topics.top_terms(topic, self.top_m))
            self._topic_term_sets[topic] = cached
        return cached

    def article_view(self, article: NewsArticle) -> _ArticleView:
        view = self._views.get(article.id)
        if view is not None:
            return view
        tagged = article.pos if article.pos else tokenize_and_tag(list(article.paragraphs))
        tag_counter: Counter = Counter(tag for para in tagged for _, tag in para)
        entity_counts: Counter = Counter(m.entity_id for m in article.mentions)
        top_entities = tuple(
            e for e, _ in sorted(entity_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_K]
        )
        class_counts: Counter = Counter()
        for entity_id, count in entity_counts.items():
            profile = self.snapshot_tm1.profiles.get(entity_id)
            if profile is not None:
                for class_id in profile.classes:
                    class_counts[class_id] += count
        top_classes = tuple(
            c for c, _ in sorted(class_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_K]
        )
        profiles = []
        for para in article.paragraphs[:N_KL_PARAGRAPHS]:
            tokens = word_tokens(para)
            profiles.append(self.term_registry.profile(tokens) if tokens else None)
        view = _ArticleView(
            title_tokens=frozenset(word_tokens(article.title)),
            tag_counts=tuple(float(tag_counter.get(t, 0)) for t in POS_TAGS),
            n_paragraphs=float(len(article.paragraphs)),
            n_tokens=float(sum(len(word_tokens(p)) for p in article.paragraphs)),
            entity_counts=dict(entity_counts),
            top_entities=top_entities,
            top_classes=top_classes,
            entity_classes=frozenset(_entity_classes(entity_counts, self.snapshot_tm1)),
            pos_ngrams=_pos_ngram_sets(tagged),
            paragraph_profiles=profiles,
        )
        self._views[article.id] = view
        return view

    def article_vector(self, article: NewsArticle, template: ClassTemplate) -> TermVector:
        view = self.article_view(article)
        vec = view.vectors.get(template.class_id)
        if vec is None:
            counts = Counter(
                t for p in article.paragraphs for t in word_tokens(p)
            )
            weights = {}
            for term, count in counts.items():
                idf = template.idf.get(term)
                if idf:
                    weights[term] = count * idf
            vec = TermVector(weights)
            view.vectors[template.class_id] = vec
        return vec

    def candidates_for(self, entity_id: str, template: ClassTemplate) -> list[_Candidate]:
        """Template slots plus the entity's private prior sections.

        A prior section is private when its normalized title matches no slot
        member. Private candidates have no referenced-article topic doc, so
        that feature reads 0 for them.
        """
        out = [
            self._slot_candidates[(template.class_id, slot.slot_id)]
            for slot in template.slots
        ]
        covered = {
            normalize_surface(t)
            for slot in template.slots
            for t in slot.member_titles
        }
        profile = self.snapshot_tm1.profiles.get(entity_id)
        if profile is not None:
            for i, section in enumerate(profile.sections):
                if normalize_surface(section.title) in covered:
                    continue
                doc = f"sec:{entity_id}:{i}"
                if doc not in self._topic_docs:
                    continue
                out.append(
                    self._make_candidate(
                        candidate_id=f"sec:{i}",
                        title=section.title,
                        text=section.text,
                        vector=term_vector_under(section.text, template.idf),
                        anchors=section.anchors,
                        topic_doc=doc,
                        refs_doc=None,
                    )
                )
        return out

    def pick_class(self, entity_id: str) -> str | None:
        profile = self.snapshot_tm1.profiles.get(entity_id)
        if profile is None:
            return None
        return pick_template_class(
            profile.classes, self.templates, self.registry, self._class_sizes
        )


def covered_slots(
    entity_id: str, template: ClassTemplate, snapshot_tm1: EntitySnapshot
) -> frozenset[str]:
    """Slot ids the entity already realizes in the prior-year snapshot.

    A slot is covered when the normalized title of one of the entity's prior
    sections appears among that slot's member titles — the same exact-title
    rule that decides which prior sections are private candidates. Predicting
    an uncovered template slot is a profile expansion.
    """
    profile = snapshot_tm1.profiles.get(entity_id)
    if profile is None:
        return frozenset()
    titles = {normalize_surface(s.title) for s in profile.sections}
    return frozenset(
        slot.slot_id
        for slot in template.slots
        if any(normalize_surface(t) in titles for t in slot.member_titles)
    )


def term_vector_under(text: str, idf: dict[str, float]) -> TermVector:
    counts = Counter(word_tokens(text))
    weights = {}
    for term, count in counts.items():
        w = idf.get(term)
        if w:
            weights[term] = count * w
    return TermVector(weights)


def compute_asp_features(
    article: NewsArticle, candidate: _Candidate, ctx: AspYearContext, template: ClassTemplate
) -> list[float]:
    """The 33 features of one (article, candidate) pairing.

    Inapplicable divergence slots (missing or empty paragraph, empty
    candidate text) are NaN placeholders until the matrix-level sentinel
    pass replaces them.
    """
    view = ctx.article_view(article)
    article_terms = ctx.topic_terms("a:" + article.id)
    slot_terms = ctx.topic_terms(candidate.topic_doc)
    refs_sim = (
        jaccard(article_terms, ctx.topic_terms(candidate.refs_doc))
        if candidate.refs_doc is not None
        else 0.0
    )
    features = [
        jaccard(article_terms, slot_terms),
        refs_sim,
        jaccard(view.pos_ngrams[0], candidate.pos_ngrams[0]),
        jaccard(view.pos_ngrams[1], candidate.pos_ngrams[1]),
        jaccard(view.pos_ngrams[2], candidate.pos_ngrams[2]),
        jaccard(view.title_tokens, candidate.token_set),
    ]
    for k in range(N_KL_PARAGRAPHS):
        profile = view.paragraph_profiles[k] if k < len(view.paragraph_profiles) else None
        if profile is None or candidate.profile is None:
            features.append(math.nan)
        else:
            features.append(kl_smoothed(profile, candidate.profile, beta=ctx.beta))
    features.append(cosine(ctx.article_vector(article, template), candidate.vector))
    features.append(jaccard(view.entity_counts, candidate.anchors))
    features.append(
        jaccard(view.entity_classes, _entity_classes(candidate.anchors, ctx.snapshot_tm1))
    )
    features.extend(view.tag_counts)
    features.append(view.n_paragraphs)
    features.append(view.n_tokens)
    features.append(float(len(view.entity_counts)))
    for i in range(TOP_K):
        features.append(
            1.0
            if i < len(view.top_entities) and view.top_entities[i] in ctx.global_top_entities
            else 0.0
        )
    for i in range(TOP_K):
        features.append(
            1.0
            if i < len(view.top_classes) and view.top_classes[i] in ctx.global_top_classes
            else 0.0
        )
    return features


@dataclass
class AspAssemblyStats:
    skipped_no_template: int = 0
    skipped_unknown_slot: int = 0
    skipped_missing_profile: int = 0


def assemble_asp_rows(
    triple, ctx: AspYearContext, triple_index: int, require_slot: bool = True
) -> list[AspRow] | None:
    """Candidate rows of one triple; None when the triple cannot be placed.

    With require_slot=False (inference on an unlabeled pair) the row set is
    produced even when triple.slot_id matches no candidate; all labels are 0.
    """
    article = ctx.articles_by_id.get(triple.news_id)
    if article is None:
        raise KeyError(f"article {triple.news_id!r} not in context year {ctx.year}")
    class_id = ctx.pick_class(triple.entity_id)
    if class_id is None:
        return None
    template = ctx.templates[class_id]
    candidates = ctx.candidates_for(triple.entity_id, template)
    if require_slot and not any(c.candidate_id == triple.slot_id for c in candidates):
        return None
    rows = []
    for candidate in candidates:
        rows.append(
            AspRow(
                news_id=triple.news_id,
                entity_id=triple.entity_id,
                year=triple.year,
                triple=triple_index,
                candidate=candidate.candidate_id,
                features=tuple(compute_asp_features(article, candidate, ctx, template)),
                label=1 if candidate.candidate_id == triple.slot_id else 0,
            )
        )
    return rows


_KL_SLICE = slice(6, 6 + N_KL_PARAGRAPHS)


def finalize_sentinels(rows: list[AspRow]) -> list[AspRow]:
    """Replace NaN divergence placeholders with (column max + 1).

    The fill marks "no such paragraph" as farther than any observed
    divergence. Columns that never observe a finite value fill with 1.0.
    Call this once per assembled year matrix.
    """
    if not rows:
        return rows
    matrix = np.asarray([r.features for r in rows], dtype=np.float64)
    kl = matrix[:, _KL_SLICE]
    out_rows = rows
    sentinels = []
    for j in range(kl.shape[1]):
        col = kl[:, j]
        finite = col[np.isfinite(col)]
        sentinels.append(float(finite.max()) + 1.0 if finite.size else 1.0)
    changed = False
    result = []
    for row in rows:
        feats = list(row.features)
        fixed = False
        for j in range(N_KL_PARAGRAPHS):
            idx = _KL_SLICE.start + j
            if math.isnan(feats[idx]):
                feats[idx] = sentinels[j]
                fixed = True
        if fixed:
            changed = True
            result.append(replace(row, features=tuple(feats)))
        else:
            result.append(row)
    return result if changed else out_rows


def assemble_asp_matrix(
    triples, ctx: AspYearContext, stats: AspAssemblyStats | None = None
) -> list[AspRow]:
    """Expand triples of one year into finalized candidate rows.

    Triple indexes refer to positions in the input sequence, so dropped
    triples leave holes rather than renumbering survivors.
    """
    stats = stats if stats is not None else AspAssemblyStats()
    rows: list[AspRow] = []
    for i, triple in enumerate(triples):
        if triple.year != ctx.year:
            raise ValueError(
                f"triple year {triple.year} does not match context year {ctx.year}"
            )
        if ctx.snapshot_tm1.profiles.get(triple.entity_id) is None:
            stats.skipped_missing_profile += 1
            continue
        expanded = assemble_asp_rows(triple, ctx, i)
        if expanded is None:
            if ctx.pick_class(triple.entity_id) is None:
                stats.skipped_no_template += 1
            else:
                stats.skipped_unknown_slot += 1
            continue
        rows.extend(expanded)
    return finalize_sentinels(rows)


def save_asp_matrix(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(ASP_CSV_COLUMNS) + "\n")
        for row in rows:
            parts = [row.news_id, row.entity_id, str(row.year), str(row.triple), row.candidate]
            parts += [repr(x) for x in row.features]
            parts.append(str(row.label))
            fh.write(",".join(parts) + "\n")


def load_asp_matrix(path) -> list[AspRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if tuple(header) != ASP_CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        n = len(ASP_CSV_COLUMNS)
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != n:
                raise ValueError(f"{path}: ragged row")
            rows.append(
                AspRow(
                    news_id=parts[0],
                    entity_id=parts[1],
                    year=int(parts[2]),
                    triple=int(parts[3]),
                    candidate=parts[4],
                    features=tuple(float(x) for x in parts[5 : 5 + len(ASP_FEATURE_NAMES)]),
                    label=int(parts[-1]),
                )
            )
    return rows
