"""Synthetic news/entity corpus with plantable placement signals.

Generates a multi-year corpus of articles, yearly entity snapshots, and a
linking dictionary in which the strength of each relevance cue — salience
(who the story is about), authority (long-tail versus celebrity), and
novelty (fresh story versus re-report of an already-cited one) — is an
independent dial. At strength zero the citation labels are sampled
uniformly over each article's entity roster, so no feature carries signal;
at strength one the planted principals are cited almost surely.

Articles also carry a section-level theme: per (class, slot) vocabularies
drive the body text, anchor-pool members appear in the roster, and each
citation lands in the theme slot of the cited entity's own class. The
adversarial mode shifts most body vocabulary to a decoy slot so that pure
lexical matching picks the wrong section.
"""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    EntityProfile,
    EntitySnapshot,
    NewsArticle,
    NewsRef,
    Section,
    SurfaceDictionary,
    save_news_corpus,
    save_snapshot,
)

# Citation-propensity logits at full signal strength. Salient and long-tail
# cues pull a roster member toward citation; being the planted re-report
# entity pushes it out.
SALIENCE_LOGIT = 7.0
AUTHORITY_LOGIT = 7.0
NOVELTY_LOGIT = 18.0

TRAP_ARTICLE_RATE = 0.35  # per-article probability scale of re-report stories
CELEBRITY_FILL_BIAS = 0.35  # background roster slots drawn from celebrities
TITLE_VARIANT_RATE = 0.2  # sections titled with the variant wording
ADVERSARIAL_DECOY = 0.45
ADVERSARIAL_TRUE = 0.15
PLAIN_TRUE = 0.55

SLOT_WEIGHT_BASE = (5.0, 3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.8)

SECTION_LABELS = (
    "Overview",
    "History",
    "Career",
    "Reception",
    "Controversies",
    "Personal life",
    "Awards",
    "Legacy",
)

SECTION_VARIANTS = (
    "Overview notes",
    "History notes",
    "Career highlights",
    "Reception notes",
    "Controversies and disputes",
    "Personal life details",
    "Awards and honors",
    "Legacy notes",
)

FIRST_NAMES = (
    "Alice", "Boris", "Carmen", "Dmitri", "Elena", "Farid", "Greta", "Hugo",
    "Ines", "Jonas", "Kira", "Lars", "Mona", "Nikos", "Olga", "Pavel",
    "Quinn", "Rosa", "Sven", "Tara", "Ulrich", "Vera", "Wade", "Xenia",
    "Yusuf", "Zelda",
)

SURNAMES = (
    "Abbott", "Brook", "Calder", "Drake", "Ellison", "Forde", "Grieg",
    "Halder", "Irving", "Jansen", "Keller", "Lindt", "Moss", "Norden",
    "Olsen", "Pratt", "Quist", "Rourke", "Strand", "Thorne",
)

DOMAINS = ("daily.example.com", "herald.example.net", "courier.example.org")
DOMAIN_PROBS = (0.5, 0.3, 0.2)


@dataclass(frozen=True)
class SignalStrengths:
    salience: float = 1.0
    authority: float = 1.0
    novelty: float = 1.0

    def __post_init__(self):
        for name, value in (
            ("salience", self.salience),
            ("authority", self.authority),
            ("novelty", self.novelty),
        ):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"signal strength {name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_entities: int = 200
    n_classes: int = 4
    n_articles: int = 1000
    first_year: int = 2009
    n_years: int = 4
    mentions_per_article: int = 30
    cited_per_article: int = 2
    signal: SignalStrengths = field(default_factory=SignalStrengths)
    n_slots: int = 8
    expansion_fraction: float = 0.3
    adversarial_lexical: bool = False
    celebrity_fraction: float = 0.2
    context_per_article: int = 4
    anchor_mentions: int = 3
    anchor_pool_size: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1 or self.n_entities < self.n_classes:
            raise ValueError("need at least one entity per class")
        if not 2 <= self.n_slots <= len(SLOT_WEIGHT_BASE):
            raise ValueError(f"n_slots must be in [2, {len(SLOT_WEIGHT_BASE)}]")
        if self.n_years < 1:
            raise ValueError("n_years must be positive")
        if self.cited_per_article < 1:
            raise ValueError("cited_per_article must be positive")
        floor = (
            self.cited_per_article
            + self.anchor_mentions
            + self.context_per_article
            + 2
        )
        if self.mentions_per_article < floor:
            raise ValueError(
                f"mentions_per_article must be at least {floor} for this composition"
            )
        per_class = self.n_entities // self.n_classes
        celebrities = max(1, int(np.ceil(self.celebrity_fraction * per_class)))
        if per_class - celebrities < self.cited_per_article + 2:
            raise ValueError("not enough long-tail entities per class")
        if self.anchor_pool_size < self.anchor_mentions:
            raise ValueError("anchor pool smaller than anchor mentions per article")


@dataclass
class _Entity:
    entity_id: str
    name: str
    class_idx: int
    celebrity: bool
    missing_slot: int | None = None


@dataclass
class SyntheticCorpus:
    spec: SyntheticCorpusSpec
    articles: list[NewsArticle]
    snapshots: dict[int, EntitySnapshot]
    dictionary: SurfaceDictionary
    meta: dict


def _slot_vocab(class_idx: int, slot_idx: int) -> list[str]:
    return [f"topic{class_idx}{slot_idx}w{k:02d}" for k in range(40)]


def _common_vocab() -> list[str]:
    return [f"common{k:03d}" for k in range(80)]


def generate_synthetic_corpus(spec: SyntheticCorpusSpec) -> SyntheticCorpus:
    """Build the full corpus deterministically from the spec's seed."""
    rng = np.random.default_rng(spec.seed)
    classes = [f"class{j:02d}" for j in range(spec.n_classes)]

    entities: list[_Entity] = []
    for i in range(spec.n_entities):
        name = (
            f"{FIRST_NAMES[i % len(FIRST_NAMES)]} "
            f"{SURNAMES[(i // len(FIRST_NAMES)) % len(SURNAMES)]}{i:04d}"
        )
        entities.append(
            _Entity(
                entity_id=f"E{i:04d}",
                name=name,
                class_idx=i % spec.n_classes,
                celebrity=False,
            )
        )
    by_class: list[list[_Entity]] = [[] for _ in classes]
    for e in entities:
        by_class[e.class_idx].append(e)
    celebrity_ids: list[str] = []
    longtail_ids: list[str] = []
    for members in by_class:
        n_celebs = max(1, int(np.ceil(spec.celebrity_fraction * len(members))))
        for j, e in enumerate(members):
            e.celebrity = j < n_celebs
            (celebrity_ids if e.celebrity else longtail_ids).append(e.entity_id)
    entity_by_id = {e.entity_id: e for e in entities}

    # profile expansion cohort: long-tail entities missing the last slot
    expansion_slot = spec.n_slots - 1
    expansion: dict[str, int] = {}
    for members in by_class:
        tail = [e for e in members if not e.celebrity]
        k = int(spec.expansion_fraction * len(tail))
        if k:
            chosen = rng.choice(len(tail), size=k, replace=False)
            for idx in sorted(int(c) for c in chosen):
                tail[idx].missing_slot = expansion_slot
                expansion[tail[idx].entity_id] = expansion_slot

    commons = _common_vocab()
    slot_vocabs = {
        (c, s): _slot_vocab(c, s)
        for c in range(spec.n_classes)
        for s in range(spec.n_slots)
    }
    all_ids = [e.entity_id for e in entities]
    anchor_pools: dict[tuple[int, int], list[str]] = {}
    for c in range(spec.n_classes):
        for s in range(spec.n_slots):
            picks = rng.choice(len(all_ids), size=spec.anchor_pool_size, replace=False)
            anchor_pools[(c, s)] = sorted(all_ids[int(p)] for p in picks)

    # fixed per-(entity, slot) section titles and texts
    section_title: dict[tuple[str, int], str] = {}
    section_text: dict[tuple[str, int], str] = {}
    for e in entities:
        for s in range(spec.n_slots):
            variant = rng.random() < TITLE_VARIANT_RATE
            section_title[(e.entity_id, s)] = (
                SECTION_VARIANTS[s] if variant else SECTION_LABELS[s]
            )
            vocab = slot_vocabs[(e.class_idx, s)]
            tokens = [vocab[int(k)] for k in rng.integers(0, len(vocab), size=26)]
            tokens += [commons[int(k)] for k in rng.integers(0, len(commons), size=6)]
            section_text[(e.entity_id, s)] = " ".join(tokens) + " ."

    slot_weights = np.asarray(SLOT_WEIGHT_BASE[: spec.n_slots])
    slot_weights = slot_weights / slot_weights.sum()

    per_year = [spec.n_articles // spec.n_years] * spec.n_years
    for i in range(spec.n_articles - sum(per_year)):
        per_year[i] += 1
    archive_year = spec.first_year - 1
    schedule = [(archive_year, spec.n_articles // spec.n_years)]
    schedule += [(spec.first_year + i, per_year[i]) for i in range(spec.n_years)]

    citations: dict[tuple[str, int], list[NewsRef]] = {}
    activation: dict[str, int] = {}
    history: list[tuple[str, int, int]] = []  # (entity, article idx, year)
    articles: list[NewsArticle] = []
    meta_articles: dict[str, dict] = {}

    sig = spec.signal
    celeb_list = sorted(celebrity_ids)

    def draw_distinct(pool: list[str], k: int, taken: set[str]) -> list[str]:
        avail = [p for p in pool if p not in taken]
        if len(avail) < k:
            return avail
        picks = rng.choice(len(avail), size=k, replace=False)
        return [avail[int(p)] for p in picks]

    def theme_word(theme_class: int, theme_slot: int) -> str:
        r = rng.random()
        true_vocab = slot_vocabs[(theme_class, theme_slot)]
        if spec.adversarial_lexical:
            decoy = slot_vocabs[(theme_class, (theme_slot + 1) % spec.n_slots)]
            if r < ADVERSARIAL_DECOY:
                return decoy[int(rng.integers(len(decoy)))]
            if r < ADVERSARIAL_DECOY + ADVERSARIAL_TRUE:
                return true_vocab[int(rng.integers(len(true_vocab)))]
        else:
            if r < PLAIN_TRUE:
                return true_vocab[int(rng.integers(len(true_vocab)))]
        return commons[int(rng.integers(len(commons)))]

    article_index = 0
    for year, count in schedule:
        eligible_history = [h for h in history if h[2] < year]
        for _ in range(count):
            article_id = f"n{article_index:05d}"
            theme_class = int(rng.integers(spec.n_classes))
            theme_slot = int(rng.choice(spec.n_slots, p=slot_weights))
            domain = DOMAINS[int(rng.choice(len(DOMAINS), p=np.asarray(DOMAIN_PROBS)))]
            date = datetime.date(
                year, int(rng.integers(1, 13)), int(rng.integers(1, 29))
            )
            url = f"https://{domain}/{year}/{article_id}"

            taken: set[str] = set()
            tail_pool = [
                e.entity_id for e in by_class[theme_class] if not e.celebrity
            ]
            candidates = draw_distinct(tail_pool, spec.cited_per_article, taken)
            taken.update(candidates)
            anchors = draw_distinct(
                anchor_pools[(theme_class, theme_slot)], spec.anchor_mentions, taken
            )
            taken.update(anchors)
            context = draw_distinct(celeb_list, spec.context_per_article, taken)
            taken.update(context)

            trap_id = None
            trap_source = None
            if eligible_history and rng.random() < TRAP_ARTICLE_RATE * sig.novelty:
                for _ in range(8):
                    entity_id, src_idx, _ = eligible_history[
                        int(rng.integers(len(eligible_history)))
                    ]
                    if entity_id not in taken:
                        trap_id = entity_id
                        trap_source = articles[src_idx]
                        taken.add(entity_id)
                        break

            roster = list(candidates) + anchors + context
            if trap_id is not None:
                roster.append(trap_id)
            fill = spec.mentions_per_article - len(roster)
            old_roster: list[str] = []
            if trap_source is not None:
                old_roster = sorted(meta_articles[trap_source.id]["roster"])
                extra = draw_distinct(old_roster, min(fill, len(old_roster)), taken)
                roster += extra
                taken.update(extra)
                fill = spec.mentions_per_article - len(roster)
            for _ in range(fill):
                pool = celeb_list if rng.random() < CELEBRITY_FILL_BIAS else all_ids
                pick = draw_distinct(pool, 1, taken) or draw_distinct(all_ids, 1, taken)
                if not pick:
                    break
                roster += pick
                taken.update(pick)

            salient = set(candidates) | set(context)
            if trap_id is not None:
                salient.add(trap_id)

            logits = np.empty(len(roster))
            for i, entity_id in enumerate(roster):
                z = 0.0
                if entity_id in salient:
                    z += SALIENCE_LOGIT * sig.salience
                if not entity_by_id[entity_id].celebrity:
                    z += AUTHORITY_LOGIT * sig.authority
                if entity_id == trap_id:
                    z -= NOVELTY_LOGIT * sig.novelty
                logits[i] = z
            gumbel = rng.gumbel(size=len(roster))
            order = np.argsort(-(logits + gumbel), kind="stable")
            cited = [roster[int(i)] for i in order[: spec.cited_per_article]]

            if rng.random() < sig.salience:
                title_ids = [cited[0]] + [c for c in context if c != cited[0]][:3]
            else:
                picks = rng.choice(len(roster), size=min(4, len(roster)), replace=False)
                title_ids = [roster[int(p)] for p in picks]
            title = " ".join(entity_by_id[t].name for t in title_ids)
            title += " " + commons[int(rng.integers(len(commons)))]

            old_words: list[str] = []
            if trap_source is not None:
                for para in trap_source.paragraphs:
                    for token in para.split(" "):
                        if token and token != "." and not token[0].isupper():
                            old_words.append(token)

            n_para = int(rng.integers(5, 8))
            paragraphs_items: list[list[str]] = []
            for _ in range(n_para):
                n_words = int(rng.integers(22, 28))
                items: list[str] = []
                sentence_len = 0
                next_break = int(rng.integers(8, 12))
                for _ in range(n_words):
                    if old_words and rng.random() < 0.5:
                        items.append(old_words[int(rng.integers(len(old_words)))])
                    else:
                        items.append(theme_word(theme_class, theme_slot))
                    sentence_len += 1
                    if sentence_len >= next_break:
                        items.append(".")
                        sentence_len = 0
                        next_break = int(rng.integers(8, 12))
                if items and items[-1] != ".":
                    items.append(".")
                paragraphs_items.append(items)

            for entity_id in roster:
                name = entity_by_id[entity_id].name
                if entity_id in salient:
                    pattern = {0: 2, 1: 1, 2: 1}
                else:
                    pattern = {int(rng.integers(n_para // 2, n_para)): 1}
                for paragraph, count in pattern.items():
                    items = paragraphs_items[paragraph]
                    for _ in range(count):
                        pos = int(rng.integers(len(items) + 1))
                        items.insert(pos, name)

            article = NewsArticle(
                id=article_id,
                url=url,
                domain=domain,
                title=title,
                date=date,
                paragraphs=tuple(" ".join(items) for items in paragraphs_items),
            )
            articles.append(article)
            meta_articles[article_id] = {
                "year": year,
                "archive": year == archive_year,
                "theme_class": classes[theme_class],
                "theme_slot": theme_slot,
                "cited": list(cited),
                "trap": trap_id,
                "trap_source": trap_source.id if trap_source is not None else None,
                "roster": list(roster),
            }

            for entity_id in cited:
                entity = entity_by_id[entity_id]
                slot = theme_slot
                if entity.missing_slot == slot and entity_id not in activation:
                    activation[entity_id] = year
                citations.setdefault((entity_id, slot), []).append(
                    NewsRef(url=url, date=date)
                )
                history.append((entity_id, article_index, year))
            article_index += 1

    snapshots: dict[int, EntitySnapshot] = {}
    for snap_year in range(archive_year, spec.first_year + spec.n_years):
        profiles = {}
        for e in entities:
            sections = []
            for s in range(spec.n_slots):
                if e.missing_slot == s and activation.get(e.entity_id, 10**9) > snap_year:
                    continue
                refs = tuple(
                    sorted(
                        (
                            r
                            for r in citations.get((e.entity_id, s), [])
                            if r.date.year <= snap_year
                        ),
                        key=lambda r: (r.date, r.url),
                    )
                )
                anchors = tuple(
                    a for a in anchor_pools[(e.class_idx, s)] if a != e.entity_id
                )
                sections.append(
                    Section(
                        title=section_title[(e.entity_id, s)],
                        text=section_text[(e.entity_id, s)],
                        anchors=anchors,
                        news_refs=refs,
                    )
                )
            profiles[e.entity_id] = EntityProfile(
                entity_id=e.entity_id,
                title=e.name,
                classes=(classes[e.class_idx],),
                year=snap_year,
                sections=tuple(sections),
            )
        snapshots[snap_year] = EntitySnapshot(year=snap_year, profiles=profiles)

    dictionary = SurfaceDictionary(
        (e.name, e.entity_id, 0.95) for e in entities
    )
    meta = {
        "classes": classes,
        "celebrities": sorted(celebrity_ids),
        "long_tail": sorted(longtail_ids),
        "expansion": dict(sorted(expansion.items())),
        "expansion_slot": expansion_slot,
        "activation": dict(sorted(activation.items())),
        "slot_labels": list(SECTION_LABELS[: spec.n_slots]),
        "slot_weights": [float(w) for w in slot_weights],
        "anchor_pools": {
            f"{classes[c]}|{s}": pool
            for (c, s), pool in sorted(anchor_pools.items())
        },
        "articles": meta_articles,
        "archive_year": archive_year,
    }
    return SyntheticCorpus(
        spec=spec,
        articles=articles,
        snapshots=snapshots,
        dictionary=dictionary,
        meta=meta,
    )


def write_synthetic_corpus(corpus: SyntheticCorpus, out_dir) -> None:
    """Write corpus.jsonl, per-year snapshots, dictionary.tsv and meta.json."""
    os.makedirs(out_dir, exist_ok=True)
    save_news_corpus(os.path.join(out_dir, "corpus.jsonl"), corpus.articles)
    for year in sorted(corpus.snapshots):
        save_snapshot(
            os.path.join(out_dir, f"snapshot_{year}.json"), corpus.snapshots[year]
        )
    corpus.dictionary.save(os.path.join(out_dir, "dictionary.tsv"))
    spec = corpus.spec
    meta = dict(corpus.meta)
    meta["spec"] = {
        "n_entities": spec.n_entities,
        "n_classes": spec.n_classes,
        "n_articles": spec.n_articles,
        "first_year": spec.first_year,
        "n_years": spec.n_years,
        "mentions_per_article": spec.mentions_per_article,
        "cited_per_article": spec.cited_per_article,
        "signal": {
            "salience": spec.signal.salience,
            "authority": spec.signal.authority,
            "novelty": spec.signal.novelty,
        },
        "n_slots": spec.n_slots,
        "expansion_fraction": spec.expansion_fraction,
        "adversarial_lexical": spec.adversarial_lexical,
        "celebrity_fraction": spec.celebrity_fraction,
        "context_per_article": spec.context_per_article,
        "anchor_mentions": spec.anchor_mentions,
        "anchor_pool_size": spec.anchor_pool_size,
        "seed": spec.seed,
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")
