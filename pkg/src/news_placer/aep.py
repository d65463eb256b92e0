"""Features for the article-to-entity placement stage.

Salience of an entity inside an article (paragraph-decayed relative
frequency plus simple positional features), a-priori and relative entity
authority, source-domain authority, and novelty of the article against the
entity's prior references.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import EntitySnapshot, NewsArticle, normalize_url
from .textproc import (
    CountProfile,
    TermRegistry,
    is_word,
    jaccard,
    kl_smoothed,
    tokenize,
)

_SENTENCE_END = frozenset({".", "!", "?"})

SALIENCE_FEATURE_NAMES = (
    "mention_count",
    "log_mention_count",
    "first_paragraph",
    "first_sentence",
    "in_title",
    "in_first_paragraph",
    "distinct_surfaces",
)

AEP_FEATURE_NAMES = (
    "rel_entity_freq",
    *SALIENCE_FEATURE_NAMES,
    "rel_authority",
    "domain_authority",
    "novelty",
)

AEP_CSV_COLUMNS = (
    "news_id",
    "entity_id",
    "year",
    *AEP_FEATURE_NAMES,
    "apriori_authority",
    "label",
)


def relative_entity_frequency(article: NewsArticle, entity_id: str) -> float:
    """Paragraph-decayed ratio of entity mentions to co-entity mentions.

    Per paragraph k (1-based) the ratio tf(e, k) / sum of co-entity counts
    is raised to 1/k; the sum over paragraphs is scaled by the fraction of
    paragraphs mentioning the entity. A paragraph with no co-entities falls
    back to the raw count. Absent entity -> 0.
    """
    n_paragraphs = len(article.paragraphs)
    tf = [0] * n_paragraphs
    co = [0] * n_paragraphs
    for mention in article.mentions:
        if mention.entity_id == entity_id:
            tf[mention.paragraph] += 1
        else:
            co[mention.paragraph] += 1
    covered = sum(1 for c in tf if c > 0)
    if covered == 0:
        return 0.0
    total = 0.0
    for idx, (t, c) in enumerate(zip(tf, co)):
        if t == 0:
            continue
        ratio = t / c if c > 0 else float(t)
        total += ratio ** (1.0 / (idx + 1))
    return (covered / n_paragraphs) * total


def _title_contains(article: NewsArticle, surfaces) -> bool:
    title = [t.casefold() for t in tokenize(article.title)]
    for surface in surfaces:
        needle = [t.casefold() for t in tokenize(surface)]
        if not needle or len(needle) > len(title):
            continue
        for i in range(len(title) - len(needle) + 1):
            if title[i : i + len(needle)] == needle:
                return True
    return False


def baseline_salience_features(
    article: NewsArticle,
    entity_id: str,
    entity_title: str | None = None,
) -> tuple[float, ...]:
    """The seven positional salience features.

    (body mention count, ln(1 + count), 1-based first-mention paragraph,
    1-based first-mention sentence, title flag, first-paragraph flag,
    distinct surface count). An absent entity yields all zeros; the zero in
    the index slots doubles as the "no mention" sentinel.
    """
    mentions = [m for m in article.mentions if m.entity_id == entity_id]
    if not mentions:
        return (0.0,) * 7
    surfaces = {m.surface for m in mentions}
    if entity_title:
        surfaces.add(entity_title)
    in_title = 1.0 if _title_contains(article, surfaces) else 0.0
    first = min(mentions, key=lambda m: (m.paragraph, m.start))
    return (
        float(len(mentions)),
        math.log(1.0 + len(mentions)),
        float(first.paragraph + 1),
        float(_sentence_index(article, first.paragraph, first.start)),
        in_title,
        1.0 if any(m.paragraph == 0 for m in mentions) else 0.0,
        float(len({m.surface.casefold() for m in mentions})),
    )


def _sentence_index(article: NewsArticle, paragraph: int, start: int) -> int:
    """1-based sentence index of a token position, counted over the body.

    A paragraph without terminal punctuation still counts as one sentence.
    Requires token/tag rows; falls back to 1 + paragraph when absent.
    """
    if not article.pos:
        return paragraph + 1
    count = 0
    for p in range(paragraph):
        para = article.pos[p]
        ends = sum(1 for tok, _ in para if tok in _SENTENCE_END)
        count += max(ends, 1 if para else 0)
    before = sum(
        1 for tok, _ in article.pos[paragraph][:start] if tok in _SENTENCE_END
    )
    return count + before + 1


# ---------------------------------------------------------------------------
# Authority.


@dataclass(frozen=True)
class AuthorityIndex:
    """Per-entity a-priori authority scores normalized to sum 1."""

    mode: str
    scores: dict[str, float]
    raw: dict[str, float] | None = None

    def score(self, entity_id: str) -> float:
        return self.scores[entity_id]


def frequency_authority(articles) -> AuthorityIndex:
    """Authority as the entity's share of all mention occurrences."""
    counts: Counter = Counter()
    total = 0
    for article in articles:
        for mention in article.mentions:
            counts[mention.entity_id] += 1
            total += 1
    if total == 0:
        raise ValueError("authority index requires at least one mention")
    return AuthorityIndex(
        mode="frequency",
        scores={e: c / total for e, c in counts.items()},
    )


@dataclass(frozen=True)
class EntityNewsGraph:
    """Directed graph over entity and article vertices.

    Articles link to the entities they mention; entities link to the
    entities anchored from their page sections. Vertex names are prefixed
    ("e:" / "n:") so ids cannot collide across the two kinds.
    """

    vertices: tuple[str, ...]
    out_edges: dict[str, tuple[str, ...]]

    @staticmethod
    def entity_vertex(entity_id: str) -> str:
        return "e:" + entity_id

    @staticmethod
    def article_vertex(news_id: str) -> str:
        return "n:" + news_id


def build_entity_news_graph(articles, snapshot: EntitySnapshot) -> EntityNewsGraph:
    """Graph over the corpus and the entity pages of one snapshot.

    Anchors pointing outside the known entity set are skipped; self loops
    and duplicate edges collapse.
    """
    entity_ids = set(snapshot.profiles)
    for article in articles:
        entity_ids.update(article.entity_ids())
    vertices = sorted("e:" + e for e in entity_ids)
    vertices += sorted("n:" + a.id for a in articles)
    out_edges: dict[str, set[str]] = {}
    for article in articles:
        targets = {"e:" + e for e in article.entity_ids()}
        if targets:
            out_edges["n:" + article.id] = targets
    for entity_id, profile in snapshot.profiles.items():
        targets = set()
        for section in profile.sections:
            for anchor in section.anchors:
                if anchor != entity_id and anchor in entity_ids:
                    targets.add("e:" + anchor)
        if targets:
            out_edges.setdefault("e:" + entity_id, set()).update(targets)
    return EntityNewsGraph(
        vertices=tuple(vertices),
        out_edges={v: tuple(sorted(t)) for v, t in out_edges.items()},
    )


def pagerank(
    graph: EntityNewsGraph,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> dict[str, float]:
    """Power-iteration PageRank with uniform teleport.

    Dangling mass redistributes uniformly. Stops when the L1 change drops
    below tol; raises RuntimeError (carrying the last residual) when
    max_iter sweeps do not converge.
    """
    vertices = graph.vertices
    n = len(vertices)
    if n == 0:
        raise ValueError("pagerank requires a non-empty graph")
    index = {v: i for i, v in enumerate(vertices)}
    src = []
    dst = []
    inv_deg = []
    dangling = np.ones(n, dtype=bool)
    for v, targets in graph.out_edges.items():
        if not targets:
            continue
        i = index[v]
        dangling[i] = False
        w = 1.0 / len(targets)
        for t in targets:
            src.append(i)
            dst.append(index[t])
            inv_deg.append(w)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    inv_deg = np.asarray(inv_deg, dtype=np.float64)

    rank = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    for _ in range(max_iter):
        flow = np.bincount(dst, weights=rank[src] * inv_deg, minlength=n)
        dangling_mass = rank[dangling].sum() / n
        new = damping * (flow + dangling_mass) + teleport
        residual = float(np.abs(new - rank).sum())
        rank = new
        if residual < tol:
            return {v: float(rank[index[v]]) for v in vertices}
    raise RuntimeError(
        f"pagerank did not converge within {max_iter} iterations (residual {residual:.3e})"
    )


def pagerank_authority(
    graph: EntityNewsGraph,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> AuthorityIndex:
    """Entity authority from PageRank scores, renormalized over entities."""
    scores = pagerank(graph, damping=damping, tol=tol, max_iter=max_iter)
    raw = {v[2:]: s for v, s in scores.items() if v.startswith("e:")}
    total = sum(raw.values())
    if total == 0:
        raise ValueError("no entity vertices carry rank")
    return AuthorityIndex(
        mode="pagerank",
        scores={e: s / total for e, s in raw.items()},
        raw=raw,
    )


def relative_authority(
    entity_id: str,
    article: NewsArticle,
    index: AuthorityIndex,
    tau: float = 1.0,
) -> float:
    """Share of the article's entities with strictly higher authority.

    The entity itself never counts; tau < 1 relaxes the comparison to
    score > tau * score(entity). Raises when the entity is not in the
    article's entity set (KeyError when any co-entity is unscored).
    """
    entities = article.entity_ids()
    if entity_id not in entities:
        raise ValueError(f"entity {entity_id!r} does not occur in article {article.id!r}")
    own = index.score(entity_id)
    higher = sum(
        1 for e in entities if e != entity_id and index.score(e) > tau * own
    )
    return higher / len(entities)


@dataclass(frozen=True)
class DomainAuthorityIndex:
    """Share of snapshot news references contributed by each source domain."""

    counts: dict[str, int]
    total: int
    laplace: bool = False

    def score(self, domain: str) -> float:
        count = self.counts.get(domain, 0)
        if self.laplace:
            return (count + 1) / (self.total + len(self.counts) + 1)
        if count == 0:
            return 0.0
        return count / self.total


def domain_authority(snapshots, laplace: bool = False) -> DomainAuthorityIndex:
    """Count reference domains over one or more snapshots.

    Raises ValueError when the snapshots carry no references at all.
    """
    counts: Counter = Counter()
    for snapshot in snapshots:
        for profile in snapshot.profiles.values():
            for section in profile.sections:
                for ref in section.news_refs:
                    counts[_ref_domain(ref.url)] += 1
    total = sum(counts.values())
    if total == 0:
        raise ValueError("domain authority requires at least one news reference")
    return DomainAuthorityIndex(counts=dict(counts), total=total, laplace=laplace)


def _ref_domain(url: str) -> str:
    from .corpus import extract_domain

    return extract_domain(url)


# ---------------------------------------------------------------------------
# Novelty.


@dataclass(frozen=True)
class NoveltyResult:
    score: float
    min_raw_kl: float | None
    n_candidates: int
    n_skipped: int


def profile_reference_urls(profile) -> list[str]:
    """Distinct normalized reference urls of a profile, first-seen order."""
    seen = []
    known = set()
    for section in profile.sections:
        for ref in section.news_refs:
            url = normalize_url(ref.url)
            if url not in known:
                known.add(url)
                seen.append(url)
    return seen


def novelty_detail(
    article: NewsArticle,
    profile,
    article_lookup,
    lam: float = 0.5,
    mode: str = "corrected",
    beta: float = 0.1,
    registry: TermRegistry | None = None,
    profile_cache: dict | None = None,
) -> NoveltyResult:
    """Novelty of an article against the entity's previously referenced ones.

    Per candidate: lam * KL_norm + (1 - lam) * (1 - entity-set jaccard) in
    the corrected mode; the literal mode adds the jaccard positively instead.
    KL(candidate || article) normalizes to [0, 1] via x / (1 + x); the
    minimum over candidates wins. No retrievable candidates -> 1.0.
    """
    if mode not in ("corrected", "literal"):
        raise ValueError(f"unknown novelty mode {mode!r}")
    registry = registry if registry is not None else TermRegistry()
    candidates = []
    skipped = 0
    if profile is not None:
        for url in profile_reference_urls(profile):
            ref_article = article_lookup(url)
            if ref_article is None:
                skipped += 1
            else:
                candidates.append(ref_article)
    if not candidates:
        return NoveltyResult(1.0, None, 0, skipped)

    own_profile = _article_profile(article, registry, profile_cache)
    own_entities = article.entity_ids()
    best = None
    best_kl = None
    for ref_article in candidates:
        ref_profile = _article_profile(ref_article, registry, profile_cache)
        raw_kl = kl_smoothed(ref_profile, own_profile, beta=beta)
        kl_norm = raw_kl / (1.0 + raw_kl)
        overlap = jaccard(ref_article.entity_ids(), own_entities)
        if mode == "corrected":
            score = lam * kl_norm + (1.0 - lam) * (1.0 - overlap)
        else:
            score = lam * kl_norm + (1.0 - lam) * overlap
        if best is None or score < best:
            best = score
            best_kl = raw_kl
    return NoveltyResult(best, best_kl, len(candidates), skipped)


def novelty(article, profile, article_lookup, lam=0.5, mode="corrected", beta=0.1) -> float:
    return novelty_detail(article, profile, article_lookup, lam, mode, beta).score


def _article_profile(article, registry, cache) -> CountProfile:
    if cache is not None:
        cached = cache.get(article.id)
        if cached is not None:
            return cached
    tokens = []
    for para in article.paragraphs:
        tokens.extend(t.casefold() for t in tokenize(para) if is_word(t))
    profile = registry.profile(tokens)
    if cache is not None:
        cache[article.id] = profile
    return profile


# ---------------------------------------------------------------------------
# Assembly.


@dataclass(frozen=True)
class AepFeatureVector:
    """All entity-placement features of one pair, fixed field order.

    The training row excludes the raw a-priori authority, which is kept as a
    diagnostic column (the rank statistic rel_authority is the feature).
    """

    news_id: str
    entity_id: str
    year: int
    rel_entity_freq: float
    mention_count: float
    log_mention_count: float
    first_paragraph: float
    first_sentence: float
    in_title: float
    in_first_paragraph: float
    distinct_surfaces: float
    rel_authority: float
    domain_authority: float
    novelty: float
    apriori_authority: float
    label: int

    def feature_row(self) -> tuple[float, ...]:
        return (
            self.rel_entity_freq,
            self.mention_count,
            self.log_mention_count,
            self.first_paragraph,
            self.first_sentence,
            self.in_title,
            self.in_first_paragraph,
            self.distinct_surfaces,
            self.rel_authority,
            self.domain_authority,
            self.novelty,
        )


@dataclass
class AepFeatureContext:
    """Shared state for assembling pair features against one prior snapshot."""

    authority: AuthorityIndex
    domains: DomainAuthorityIndex
    snapshot_tm1: EntitySnapshot
    article_lookup: object
    lam: float = 0.5
    novelty_mode: str = "corrected"
    beta: float = 0.1
    tau: float = 1.0
    allow_unlinked: bool = False
    registry: TermRegistry = field(default_factory=TermRegistry)
    profile_cache: dict = field(default_factory=dict)


def assemble_aep_vector(pair, article: NewsArticle, ctx: AepFeatureContext) -> AepFeatureVector:
    """Compute the full feature vector of one labeled pair.

    Every profile-derived quantity comes from the snapshot preceding the
    pair's year; the article text itself is the only same-year input. A pair
    whose entity the linker never attached to the article is a linking
    inconsistency and raises, unless the context opts into keeping such
    citation-only pairs (their mention-derived features are all zero).
    """
    profile_tm1 = ctx.snapshot_tm1.profiles.get(pair.entity_id)
    entity_title = profile_tm1.title if profile_tm1 is not None else None
    salience = baseline_salience_features(article, pair.entity_id, entity_title)
    nov = novelty_detail(
        article,
        profile_tm1,
        ctx.article_lookup,
        lam=ctx.lam,
        mode=ctx.novelty_mode,
        beta=ctx.beta,
        registry=ctx.registry,
        profile_cache=ctx.profile_cache,
    )
    if pair.entity_id in article.entity_ids():
        rel_auth = relative_authority(pair.entity_id, article, ctx.authority, tau=ctx.tau)
    elif ctx.allow_unlinked:
        rel_auth = 0.0
    else:
        raise ValueError(
            f"pair ({pair.news_id!r}, {pair.entity_id!r}): entity not linked in article"
        )
    try:
        apriori = ctx.authority.score(pair.entity_id)
    except KeyError:
        apriori = 0.0
    return AepFeatureVector(
        news_id=pair.news_id,
        entity_id=pair.entity_id,
        year=pair.year,
        rel_entity_freq=relative_entity_frequency(article, pair.entity_id),
        mention_count=salience[0],
        log_mention_count=salience[1],
        first_paragraph=salience[2],
        first_sentence=salience[3],
        in_title=salience[4],
        in_first_paragraph=salience[5],
        distinct_surfaces=salience[6],
        rel_authority=rel_auth,
        domain_authority=ctx.domains.score(article.domain),
        novelty=nov.score,
        apriori_authority=apriori,
        label=1 if pair.relevant else 0,
    )


def assemble_aep_matrix(pairs, articles_by_id, ctx: AepFeatureContext) -> list[AepFeatureVector]:
    return [assemble_aep_vector(pair, articles_by_id[pair.news_id], ctx) for pair in pairs]


def save_aep_matrix(path, vectors) -> None:
    """Write feature rows as CSV; label column last, floats via repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(AEP_CSV_COLUMNS) + "\n")
        for v in vectors:
            row = [v.news_id, v.entity_id, str(v.year)]
            row += [repr(x) for x in v.feature_row()]
            row.append(repr(v.apriori_authority))
            row.append(str(v.label))
            fh.write(",".join(row) + "\n")


def load_aep_matrix(path) -> tuple[np.ndarray, np.ndarray, list[tuple[str, str, int]]]:
    """Read a feature CSV back into (X, labels, pair keys)."""
    rows = []
    labels = []
    keys = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if tuple(header) != AEP_CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(AEP_CSV_COLUMNS):
                raise ValueError(f"{path}: ragged row")
            keys.append((parts[0], parts[1], int(parts[2])))
            rows.append([float(x) for x in parts[3:14]])
            labels.append(int(parts[15]))
    x = np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, len(AEP_FEATURE_NAMES)))
    return x, np.asarray(labels, dtype=np.int64), keys
