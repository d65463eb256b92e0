"""Corpus data model and ingestion.

News articles (JSONL), yearly entity-page snapshots (JSONL), surface-form
dictionaries (TSV), dictionary-based entity linking and the ground-truth
builders for the two placement tasks.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
from dataclasses import dataclass, field
from urllib.parse import urlsplit, urlunsplit

from .textproc import tokenize, tokenize_and_tag

MIN_LINK_PRIOR = 0.3


@dataclass(frozen=True, slots=True)
class EntityMention:
    """One linked mention; start/end are token offsets within the paragraph."""

    entity_id: str
    paragraph: int
    start: int
    end: int
    surface: str


@dataclass(frozen=True, slots=True)
class NewsArticle:
    id: str
    url: str
    domain: str
    title: str
    date: datetime.date
    paragraphs: tuple[str, ...]
    pos: tuple[tuple[tuple[str, str], ...], ...] = ()
    mentions: tuple[EntityMention, ...] = ()

    @property
    def year(self) -> int:
        return self.date.year

    def entity_ids(self) -> set[str]:
        """Distinct linked entity ids (the article's entity set)."""
        return {m.entity_id for m in self.mentions}

    def tokens(self, paragraph: int) -> list[str]:
        return [tok for tok, _ in self.pos[paragraph]]


@dataclass(frozen=True, slots=True)
class NewsRef:
    url: str
    date: datetime.date


@dataclass(frozen=True, slots=True)
class Section:
    title: str
    text: str
    anchors: tuple[str, ...] = ()
    news_refs: tuple[NewsRef, ...] = ()


@dataclass(frozen=True, slots=True)
class EntityProfile:
    entity_id: str
    title: str
    classes: tuple[str, ...]
    year: int
    sections: tuple[Section, ...]

    def text_length(self) -> int:
        return sum(len(s.text) for s in self.sections)


@dataclass(frozen=True)
class EntitySnapshot:
    """All entity profiles of one snapshot year."""

    year: int
    profiles: dict[str, EntityProfile]


@dataclass(frozen=True, slots=True)
class EntityClass:
    id: str
    parent: str | None = None


class ClassRegistry:
    """Entity-class catalogue with optional parent links."""

    def __init__(self, classes: dict[str, EntityClass]):
        self.classes = classes

    @classmethod
    def from_snapshots(cls, snapshots, parents: dict[str, str] | None = None) -> "ClassRegistry":
        parents = parents or {}
        ids = set()
        for snapshot in snapshots:
            for profile in snapshot.profiles.values():
                ids.update(profile.classes)
        ids.update(parents)
        ids.update(p for p in parents.values() if p)
        return cls({cid: EntityClass(cid, parents.get(cid)) for cid in sorted(ids)})

    def depth(self, class_id: str) -> int:
        depth = 0
        seen = set()
        cur = self.classes.get(class_id)
        while cur is not None and cur.parent is not None:
            if cur.id in seen:
                raise ValueError(f"class hierarchy cycle at {cur.id!r}")
            seen.add(cur.id)
            depth += 1
            cur = self.classes.get(cur.parent)
        return depth


def extract_domain(url: str) -> str:
    """Lowercased host of a url; scheme, path, and port stripped."""
    parts = urlsplit(url)
    host = parts.hostname
    if not parts.scheme or not host:
        raise ValueError(f"cannot extract a domain from {url!r}")
    return host.lower()


def normalize_url(url: str) -> str:
    """Lowercase scheme and host, drop the fragment and any trailing slash."""
    parts = urlsplit(url)
    path = parts.path.rstrip("/")
    netloc = parts.netloc.lower()
    return urlunsplit((parts.scheme.lower(), netloc, path, parts.query, ""))


def _parse_date(value, where: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(value)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}: bad date {value!r}, expected YYYY-MM-DD") from exc


def _parse_mention(raw, n_paragraphs: int, where: str) -> EntityMention:
    try:
        mention = EntityMention(
            entity_id=str(raw["entity_id"]),
            paragraph=int(raw["paragraph"]),
            start=int(raw["start"]),
            end=int(raw["end"]),
            surface=str(raw["surface"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{where}: malformed mention {raw!r}") from exc
    if not 0 <= mention.paragraph < n_paragraphs:
        raise ValueError(f"{where}: mention paragraph {mention.paragraph} out of range")
    if mention.start < 0 or mention.end <= mention.start:
        raise ValueError(f"{where}: mention span [{mention.start}, {mention.end}) invalid")
    return mention


def article_from_dict(raw: dict, where: str = "article") -> NewsArticle:
    try:
        paragraphs = tuple(str(p) for p in raw["paragraphs"])
        article = NewsArticle(
            id=str(raw["id"]),
            url=str(raw["url"]),
            domain=extract_domain(str(raw["url"])),
            title=str(raw["title"]),
            date=_parse_date(raw["date"], where),
            paragraphs=paragraphs,
            pos=tuple(
                tuple((str(tok), str(tag)) for tok, tag in para) for para in raw.get("pos") or ()
            ),
            mentions=tuple(
                _parse_mention(m, len(paragraphs), where) for m in raw.get("mentions") or ()
            ),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{where}: malformed article record") from exc
    if not article.paragraphs:
        raise ValueError(f"{where}: article {article.id!r} has no paragraphs")
    if article.pos and len(article.pos) != len(article.paragraphs):
        raise ValueError(f"{where}: pos rows do not match paragraph count")
    return article


def article_to_dict(article: NewsArticle) -> dict:
    return {
        "id": article.id,
        "url": article.url,
        "title": article.title,
        "date": article.date.isoformat(),
        "paragraphs": list(article.paragraphs),
        "pos": [[[tok, tag] for tok, tag in para] for para in article.pos],
        "mentions": [
            {
                "entity_id": m.entity_id,
                "paragraph": m.paragraph,
                "start": m.start,
                "end": m.end,
                "surface": m.surface,
            }
            for m in article.mentions
        ],
    }


def load_news_corpus(path) -> list[NewsArticle]:
    """Read a news JSONL file; one article object per line.

    Raises ValueError with the offending line number on malformed input or
    duplicate article ids.
    """
    articles = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc}") from exc
            article = article_from_dict(raw, where)
            if article.id in seen:
                raise ValueError(f"{where}: duplicate article id {article.id!r}")
            seen.add(article.id)
            articles.append(article)
    return articles


def save_news_corpus(path, articles) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for article in articles:
            fh.write(json.dumps(article_to_dict(article), sort_keys=True) + "\n")


def load_snapshot(path, year: int) -> EntitySnapshot:
    """Read one snapshot JSONL file; every profile must carry the given year."""
    profiles: dict[str, EntityProfile] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc}") from exc
            try:
                profile = EntityProfile(
                    entity_id=str(raw["entity_id"]),
                    title=str(raw["title"]),
                    classes=tuple(str(c) for c in raw["classes"]),
                    year=int(raw["year"]),
                    sections=tuple(
                        Section(
                            title=str(s["title"]),
                            text=str(s["text"]),
                            anchors=tuple(str(a) for a in s.get("anchors") or ()),
                            news_refs=tuple(
                                NewsRef(url=str(r["url"]), date=_parse_date(r["date"], where))
                                for r in s.get("news_refs") or ()
                            ),
                        )
                        for s in raw["sections"]
                    ),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{where}: malformed profile record") from exc
            if profile.year != year:
                raise ValueError(
                    f"{where}: profile year {profile.year} does not match snapshot year {year}"
                )
            if profile.entity_id in profiles:
                raise ValueError(f"{where}: duplicate entity id {profile.entity_id!r}")
            for section in profile.sections:
                for ref in section.news_refs:
                    if ref.date.year > year:
                        raise ValueError(
                            f"{where}: reference {ref.url!r} dated {ref.date} is later "
                            f"than snapshot year {year}"
                        )
            profiles[profile.entity_id] = profile
    return EntitySnapshot(year=year, profiles=profiles)


def save_snapshot(path, snapshot: EntitySnapshot) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entity_id in snapshot.profiles:
            profile = snapshot.profiles[entity_id]
            record = {
                "entity_id": profile.entity_id,
                "title": profile.title,
                "classes": list(profile.classes),
                "year": profile.year,
                "sections": [
                    {
                        "title": s.title,
                        "text": s.text,
                        "anchors": list(s.anchors),
                        "news_refs": [
                            {"url": r.url, "date": r.date.isoformat()} for r in s.news_refs
                        ],
                    }
                    for s in profile.sections
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Surface-form dictionary and linking.


def normalize_surface(surface: str) -> str:
    """Canonical surface key: case-folded tokens joined by single spaces."""
    return " ".join(t.casefold() for t in tokenize(surface))


class SurfaceDictionary:
    """surface key -> candidate (entity_id, prior) list, highest prior first."""

    def __init__(self, entries):
        candidates: dict[str, list[tuple[str, float]]] = {}
        for surface, entity_id, prior in entries:
            key = normalize_surface(surface)
            if not key:
                raise ValueError(f"empty surface for entity {entity_id!r}")
            if not 0.0 <= prior <= 1.0:
                raise ValueError(f"prior {prior} for {surface!r} outside [0, 1]")
            candidates.setdefault(key, []).append((entity_id, float(prior)))
        for key, cands in candidates.items():
            total = sum(p for _, p in cands)
            if total > 1.0 + 1e-9:
                raise ValueError(f"priors for surface {key!r} sum to {total} > 1")
            cands.sort(key=lambda c: (-c[1], c[0]))
        self.candidates = candidates
        self.max_tokens = max((key.count(" ") + 1 for key in candidates), default=0)

    def __len__(self):
        return len(self.candidates)

    @classmethod
    def load(cls, path) -> "SurfaceDictionary":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected surface<TAB>entity<TAB>prior")
                try:
                    entries.append((parts[0], parts[1], float(parts[2])))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad prior {parts[2]!r}") from exc
        return cls(entries)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self.candidates):
                for entity_id, prior in self.candidates[key]:
                    fh.write(f"{key}\t{entity_id}\t{prior!r}\n")


def link_entities(
    article: NewsArticle,
    dictionary: SurfaceDictionary,
    min_prior: float = MIN_LINK_PRIOR,
) -> NewsArticle:
    """Greedy longest-match dictionary linking over token sequences.

    Spans never overlap; an ambiguous surface resolves to the candidate with
    the highest prior at or above min_prior (ties to the smallest entity id).
    Runs the fallback tagger first when the article has no tokens. Idempotent:
    existing mentions are recomputed from scratch.
    """
    pos = article.pos if article.pos else tuple(
        tuple(para) for para in tokenize_and_tag(list(article.paragraphs))
    )
    mentions = []
    for p, para in enumerate(pos):
        tokens = [tok for tok, _ in para]
        folded = [t.casefold() for t in tokens]
        i = 0
        n = len(tokens)
        while i < n:
            match = None
            longest = min(dictionary.max_tokens, n - i)
            for length in range(longest, 0, -1):
                key = " ".join(folded[i : i + length])
                cands = dictionary.candidates.get(key)
                if not cands:
                    continue
                eligible = [c for c in cands if c[1] >= min_prior]
                if eligible:
                    match = (length, eligible[0][0])
                    break
            if match is None:
                i += 1
                continue
            length, entity_id = match
            mentions.append(
                EntityMention(
                    entity_id=entity_id,
                    paragraph=p,
                    start=i,
                    end=i + length,
                    surface=" ".join(tokens[i : i + length]),
                )
            )
            i += length
    mentions.sort(key=lambda m: (m.paragraph, m.start))
    return dataclasses.replace(article, pos=pos, mentions=tuple(mentions))


# ---------------------------------------------------------------------------
# Ground truth.


@dataclass(frozen=True, slots=True)
class AepPair:
    """Article/entity candidate with its placement label."""

    news_id: str
    entity_id: str
    relevant: bool
    year: int


@dataclass(frozen=True, slots=True)
class AspTriple:
    """Relevant article/entity pair resolved to a template slot."""

    news_id: str
    entity_id: str
    slot_id: str
    year: int


@dataclass
class GroundTruthStats:
    unlinked_citations: int = 0
    already_referenced: int = 0
    articles_without_entities: int = 0
    missing_profiles: int = 0
    unmapped_sections: int = 0
    untemplated_entities: int = 0


def _reference_index(snapshot: EntitySnapshot) -> dict[str, set[str]]:
    """normalized url -> entity ids whose profile references it."""
    index: dict[str, set[str]] = {}
    for entity_id, profile in snapshot.profiles.items():
        for section in profile.sections:
            for ref in section.news_refs:
                index.setdefault(normalize_url(ref.url), set()).add(entity_id)
    return index


def build_aep_ground_truth(
    articles,
    snapshot_t: EntitySnapshot,
    snapshot_tm1: EntitySnapshot,
    include_unlinked_citations: bool = True,
    stats: GroundTruthStats | None = None,
) -> list[AepPair]:
    """Label every (article, linked entity) pair for the entity-placement task.

    A pair is relevant when the entity's page at year t references the
    article's url. Citations already present at t-1 belong to an earlier year
    and are skipped (counted). Citations from entities the linker missed are
    emitted as relevant with a counter; include_unlinked_citations=False
    drops them instead.
    """
    if snapshot_tm1.year != snapshot_t.year - 1:
        raise ValueError(
            f"snapshots must be consecutive years, got {snapshot_tm1.year} and {snapshot_t.year}"
        )
    stats = stats if stats is not None else GroundTruthStats()
    refs_t = _reference_index(snapshot_t)
    refs_tm1 = _reference_index(snapshot_tm1)
    pairs = []
    for article in articles:
        url = normalize_url(article.url)
        citing_t = refs_t.get(url, set())
        citing_tm1 = refs_tm1.get(url, set())
        entities = sorted(article.entity_ids())
        if not entities:
            stats.articles_without_entities += 1
        for entity_id in entities:
            if entity_id in citing_tm1:
                stats.already_referenced += 1
                continue
            pairs.append(
                AepPair(
                    news_id=article.id,
                    entity_id=entity_id,
                    relevant=entity_id in citing_t,
                    year=snapshot_t.year,
                )
            )
        for entity_id in sorted(citing_t - set(entities)):
            if entity_id in citing_tm1:
                stats.already_referenced += 1
                continue
            stats.unlinked_citations += 1
            if include_unlinked_citations:
                pairs.append(
                    AepPair(
                        news_id=article.id,
                        entity_id=entity_id,
                        relevant=True,
                        year=snapshot_t.year,
                    )
                )
    return pairs


def pick_template_class(
    classes,
    templates: dict,
    registry: ClassRegistry | None = None,
    class_sizes: dict[str, int] | None = None,
) -> str | None:
    """Choose the entity class whose template applies.

    Deepest class in the hierarchy wins; ties break toward the class with the
    most member entities, then the smallest id. Returns None when no class
    has a template.
    """
    with_templates = [c for c in classes if c in templates]
    if not with_templates:
        return None

    def rank(class_id: str):
        depth = registry.depth(class_id) if registry is not None else 0
        size = class_sizes.get(class_id, 0) if class_sizes else 0
        return (-depth, -size, class_id)

    return min(with_templates, key=rank)


def build_asp_ground_truth(
    pairs,
    articles_by_id: dict[str, NewsArticle],
    snapshot_t: EntitySnapshot,
    templates: dict,
    registry: ClassRegistry | None = None,
    stats: GroundTruthStats | None = None,
) -> list[AspTriple]:
    """Resolve each relevant pair to the template slot of its citing section.

    Uses the templates built from the preceding snapshot. Triples whose
    entity has no templated class, or whose citing section cannot be mapped,
    are dropped and counted.
    """
    from .templates import map_section_to_template

    stats = stats if stats is not None else GroundTruthStats()
    # tie-break by template membership so class choice never depends on the
    # pair-year snapshot
    class_sizes = {
        c: getattr(t, "n_entities", 0) for c, t in templates.items()
    }
    triples = []
    for pair in pairs:
        if not pair.relevant:
            continue
        profile = snapshot_t.profiles.get(pair.entity_id)
        if profile is None:
            stats.missing_profiles += 1
            continue
        article = articles_by_id[pair.news_id]
        url = normalize_url(article.url)
        class_id = pick_template_class(profile.classes, templates, registry, class_sizes)
        if class_id is None:
            stats.untemplated_entities += 1
            continue
        template = templates[class_id]
        for section in profile.sections:
            if not any(normalize_url(r.url) == url for r in section.news_refs):
                continue
            slot_id = map_section_to_template(section, template)
            if slot_id is None:
                stats.unmapped_sections += 1
                continue
            triples.append(
                AspTriple(
                    news_id=pair.news_id,
                    entity_id=pair.entity_id,
                    slot_id=slot_id,
                    year=pair.year,
                )
            )
    return triples


def save_aep_pairs(path, pairs) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("news_id,entity_id,label,year\n")
        for pair in pairs:
            label = "relevant" if pair.relevant else "non-relevant"
            fh.write(f"{pair.news_id},{pair.entity_id},{label},{pair.year}\n")


def load_aep_pairs(path) -> list[AepPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "news_id,entity_id,label,year":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            news_id, entity_id, label, year = line.split(",")
            if label not in ("relevant", "non-relevant"):
                raise ValueError(f"{path}:{lineno}: bad label {label!r}")
            pairs.append(AepPair(news_id, entity_id, label == "relevant", int(year)))
    return pairs


def save_asp_triples(path, triples) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("news_id,entity_id,slot_id,year\n")
        for t in triples:
            fh.write(f"{t.news_id},{t.entity_id},{t.slot_id},{t.year}\n")


def load_asp_triples(path) -> list[AspTriple]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "news_id,entity_id,slot_id,year":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            news_id, entity_id, slot_id, year = line.split(",")
            triples.append(AspTriple(news_id, entity_id, slot_id, int(year)))
    return triples
