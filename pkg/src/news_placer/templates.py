"""Class-level section templates.

Sections of every entity in a class are embedded as tf-idf vectors and
clustered with a BIC-guided spherical k-means that picks its own cluster
count. Each cluster becomes a template slot; new sections and articles are
matched against slots by title or centroid similarity.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import EntitySnapshot, Section, normalize_surface, normalize_url
from .textproc import TermVector, cosine, term_vector, word_tokens

TEMPLATE_FORMAT_VERSION = 1


def collect_class_sections(snapshot: EntitySnapshot, class_id: str):
    """All (entity_id, section) pairs of a class, ordered by entity id.

    Sections with empty text are dropped. Raises ValueError when no entity
    in the snapshot carries the class.
    """
    members = [
        p for p in snapshot.profiles.values() if class_id in p.classes
    ]
    if not members:
        raise ValueError(f"no entity in snapshot {snapshot.year} has class {class_id!r}")
    out = []
    for profile in sorted(members, key=lambda p: p.entity_id):
        for section in profile.sections:
            if section.text.strip():
                out.append((profile.entity_id, section))
    return out


# ---------------------------------------------------------------------------
# Spherical k-means with BIC-guided cluster-count search.


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    # squared Euclidean on unit vectors = 2 - 2*cos
    d2 = np.maximum(2.0 - 2.0 * (x @ centers[0]), 0.0)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r))
            idx = min(idx, n - 1)
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.maximum(2.0 - 2.0 * (x @ centers[j]), 0.0))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 100):
    """Spherical Lloyd iterations; empty clusters reseed from the farthest point."""
    n = x.shape[0]
    labels = None
    for _ in range(max_iter):
        sims = x @ centers.T
        new_labels = np.argmax(sims, axis=1)
        assigned = sims[np.arange(n), new_labels]
        for j in range(centers.shape[0]):
            if not np.any(new_labels == j):
                worst = int(np.argmin(assigned))
                new_labels[worst] = j
                assigned[worst] = np.inf
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(centers.shape[0]):
            members = x[labels == j]
            if members.shape[0]:
                centers[j] = _normalize(members.sum(axis=0))
    objective = float((x @ centers.T)[np.arange(n), labels].sum())
    return labels, centers, objective


def _kmeans(x: np.ndarray, k: int, rng: np.random.Generator, restarts: int = 3):
    best = None
    for _ in range(restarts):
        centers = _kmeanspp_init(x, k, rng)
        labels, centers, objective = _lloyd(x, centers.copy())
        if best is None or objective > best[2]:
            best = (labels, centers, objective)
    return best[0], best[1]


def _bic(x: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    """BIC of a hard spherical-Gaussian mixture with pooled variance.

    Free parameter count is k*(d+1): means plus mixture weights and the
    shared variance.
    """
    n, d = x.shape
    k = centers.shape[0]
    dof = max(n - k, 1)
    sq = float(((x - centers[labels]) ** 2).sum())
    var = max(sq / dof, 1e-12)
    counts = np.bincount(labels, minlength=k)
    counts = counts[counts > 0]
    ll = float((counts * np.log(counts / n)).sum())
    ll -= 0.5 * n * d * math.log(2.0 * math.pi * var)
    ll -= 0.5 * max(n - k, 0)
    return ll - 0.5 * k * (d + 1) * math.log(n)


def xmeans(
    x: np.ndarray,
    k_min: int = 2,
    k_max: int = 12,
    seed: int = 0,
    restarts: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster unit-normalized rows, choosing k in [k_min, k_max] by BIC.

    Starts from k_min spherical k-means clusters; each round trial-splits
    every cluster in two, refines the whole partition, and keeps the split
    whose refined partition has the best global BIC — stopping as soon as no
    split improves it. Returns (labels, centers). Fewer rows than k_min
    collapse to one cluster per row.
    """
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("xmeans requires a non-empty 2d array")
    if k_min < 1 or k_max < k_min:
        raise ValueError(f"bad cluster range [{k_min}, {k_max}]")
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.linalg.norm(x, axis=1) == 0.0):
        raise ValueError("xmeans requires nonzero vectors")
    x = _unit_rows(x)
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    if n <= k_min:
        return np.arange(n), x.copy()

    k_max = min(k_max, n)
    labels, centers = _kmeans(x, k_min, rng, restarts)
    best_bic = _bic(x, labels, centers)
    while centers.shape[0] < k_max:
        candidates = []
        for j in range(centers.shape[0]):
            members = np.flatnonzero(labels == j)
            if members.size < 2:
                continue
            sub_labels, sub_centers = _kmeans(x[members], 2, rng, restarts)
            if np.unique(sub_labels).size < 2:
                continue
            cand_centers = np.vstack([np.delete(centers, j, axis=0), sub_centers])
            cand_labels, cand_centers, _ = _lloyd(x, cand_centers)
            candidates.append(
                (_bic(x, cand_labels, cand_centers), -j, cand_labels, cand_centers)
            )
        if not candidates:
            break
        cand_bic, _, cand_labels, cand_centers = max(
            candidates, key=lambda c: (c[0], c[1])
        )
        if cand_bic <= best_bic:
            break
        best_bic = cand_bic
        labels, centers = cand_labels, cand_centers
    return labels, centers


# ---------------------------------------------------------------------------
# Template construction.


@dataclass(frozen=True)
class TemplateSlot:
    """One clustered section group of a class template."""

    slot_id: str
    canonical_label: str
    member_titles: tuple[str, ...]
    member_entity_ids: tuple[str, ...]
    top_terms: tuple[str, ...]
    centroid: TermVector
    aggregate: TermVector
    anchors: frozenset[str]
    text: str
    news_ref_urls: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return len(self.member_titles)


@dataclass(frozen=True)
class ClassTemplate:
    class_id: str
    year: int
    slots: tuple[TemplateSlot, ...]
    idf: dict[str, float]
    n_sections: int
    n_entities: int

    def slot(self, slot_id: str) -> TemplateSlot:
        for s in self.slots:
            if s.slot_id == slot_id:
                return s
        raise KeyError(slot_id)

    def slot_ids(self) -> tuple[str, ...]:
        return tuple(s.slot_id for s in self.slots)


def _template_vocabulary(texts, max_terms: int = 5000, min_df: int = 3):
    """Terms with document frequency above min_df - 1, capped by df.

    Falls back to every observed term when the filter empties the table.
    """
    df: Counter = Counter()
    for text in texts:
        df.update(set(word_tokens(text)))
    kept = {t: c for t, c in df.items() if c >= min_df}
    if not kept:
        kept = dict(df)
    if len(kept) > max_terms:
        ranked = sorted(kept.items(), key=lambda kv: (-kv[1], kv[0]))[:max_terms]
        kept = dict(ranked)
    n = len(texts)
    return {t: math.log(n / c) for t, c in kept.items()}


def build_template(
    class_id: str,
    snapshot: EntitySnapshot,
    seed: int = 0,
    k_min: int = 2,
    k_max: int = 12,
    max_terms: int = 5000,
    min_df: int = 3,
    restarts: int = 3,
    top_terms: int = 100,
) -> ClassTemplate:
    """Cluster one class's sections into labeled template slots.

    Sections whose text vector is empty under the class vocabulary join a
    cluster after the fact: first by exact normalized title, else the
    largest cluster. Slots are ordered by (canonical label, first member
    index) and numbered s00, s01, ...
    """
    pairs = collect_class_sections(snapshot, class_id)
    if not pairs:
        raise ValueError(f"class {class_id!r} has no usable sections in {snapshot.year}")
    texts = [section.text for _, section in pairs]
    idf = _template_vocabulary(texts, max_terms=max_terms, min_df=min_df)
    terms = sorted(idf)
    term_index = {t: i for i, t in enumerate(terms)}
    rows = np.zeros((len(pairs), len(terms)))
    for i, text in enumerate(texts):
        for token, count in Counter(word_tokens(text)).items():
            j = term_index.get(token)
            if j is not None:
                rows[i, j] = count * idf[token]

    nonzero = np.linalg.norm(rows, axis=1) > 0.0
    active = np.flatnonzero(nonzero)
    if active.size == 0:
        assignments = np.zeros(len(pairs), dtype=np.int64)
        n_clusters = 1
    else:
        labels, centers = xmeans(rows[active], k_min=k_min, k_max=k_max, seed=seed, restarts=restarts)
        n_clusters = centers.shape[0]
        assignments = np.full(len(pairs), -1, dtype=np.int64)
        assignments[active] = labels
        title_votes: dict[str, Counter] = {}
        for i in active:
            title_votes.setdefault(
                normalize_surface(pairs[i][1].title), Counter()
            )[int(assignments[i])] += 1
        sizes = Counter(int(c) for c in labels)
        largest = min(sizes, key=lambda c: (-sizes[c], c))
        for i in np.flatnonzero(~nonzero):
            votes = title_votes.get(normalize_surface(pairs[i][1].title))
            if votes:
                assignments[i] = min(votes, key=lambda c: (-votes[c], c))
            else:
                assignments[i] = largest

    slots = []
    for cluster in range(n_clusters):
        member_idx = [i for i in range(len(pairs)) if assignments[i] == cluster]
        if not member_idx:
            continue
        titles = [pairs[i][1].title.strip() for i in member_idx]
        counts = Counter(titles)
        canonical = min(counts, key=lambda t: (-counts[t], t))
        nz_members = [i for i in member_idx if nonzero[i]]
        unit = _unit_rows(rows[nz_members if nz_members else member_idx])
        centroid_vec = _normalize(unit.sum(axis=0))
        aggregate_vec = _normalize(rows[member_idx].sum(axis=0))
        centroid = TermVector(
            {terms[j]: float(centroid_vec[j]) for j in np.flatnonzero(centroid_vec)}
        )
        aggregate = TermVector(
            {terms[j]: float(aggregate_vec[j]) for j in np.flatnonzero(aggregate_vec)}
        )
        ranked = sorted(aggregate.weights.items(), key=lambda kv: (-kv[1], kv[0]))
        anchors = frozenset(
            a for i in member_idx for a in pairs[i][1].anchors
        )
        ref_urls = []
        seen_urls = set()
        for i in member_idx:
            for ref in pairs[i][1].news_refs:
                url = normalize_url(ref.url)
                if url not in seen_urls:
                    seen_urls.add(url)
                    ref_urls.append(url)
        slots.append(
            (
                canonical,
                min(member_idx),
                TemplateSlot(
                    slot_id="",
                    canonical_label=canonical,
                    member_titles=tuple(titles),
                    member_entity_ids=tuple(pairs[i][0] for i in member_idx),
                    top_terms=tuple(t for t, _ in ranked[:top_terms]),
                    centroid=centroid,
                    aggregate=aggregate,
                    anchors=anchors,
                    text="\n".join(pairs[i][1].text for i in member_idx),
                    news_ref_urls=tuple(ref_urls),
                ),
            )
        )
    slots.sort(key=lambda item: (item[0], item[1]))
    final = tuple(
        TemplateSlot(
            slot_id=f"s{idx:02d}",
            canonical_label=s.canonical_label,
            member_titles=s.member_titles,
            member_entity_ids=s.member_entity_ids,
            top_terms=s.top_terms,
            centroid=s.centroid,
            aggregate=s.aggregate,
            anchors=s.anchors,
            text=s.text,
            news_ref_urls=s.news_ref_urls,
        )
        for idx, (_, _, s) in enumerate(slots)
    )
    return ClassTemplate(
        class_id=class_id,
        year=snapshot.year,
        slots=final,
        idf=idf,
        n_sections=len(pairs),
        n_entities=len({e for e, _ in pairs}),
    )


def build_templates(
    snapshot: EntitySnapshot,
    seed: int = 0,
    min_sections: int = 2,
    **kwargs,
) -> dict[str, ClassTemplate]:
    """Templates for every class with at least min_sections usable sections."""
    by_class: Counter = Counter()
    for profile in snapshot.profiles.values():
        usable = sum(1 for s in profile.sections if s.text.strip())
        for class_id in profile.classes:
            by_class[class_id] += usable
    out = {}
    for class_id in sorted(by_class):
        if by_class[class_id] >= min_sections:
            out[class_id] = build_template(class_id, snapshot, seed=seed, **kwargs)
    return out


def map_section_to_template(section: Section, template: ClassTemplate) -> str | None:
    """Slot id of the template slot a section belongs to.

    An exact normalized-title match against slot members wins (most matching
    members, then smallest slot id); otherwise the centroid with the highest
    cosine to the section's tf-idf vector under the template vocabulary.
    Unmatched titles with empty vectors map to None.
    """
    wanted = normalize_surface(section.title)
    best_slot = None
    best_count = 0
    for slot in template.slots:
        count = sum(1 for t in slot.member_titles if normalize_surface(t) == wanted)
        if count > best_count:
            best_slot, best_count = slot.slot_id, count
    if best_slot is not None:
        return best_slot
    vec = term_vector(section.text, template.idf)
    if vec.norm == 0.0:
        return None
    best_slot = None
    best_sim = -1.0
    for slot in template.slots:
        sim = cosine(vec, slot.centroid)
        if sim > best_sim:
            best_slot, best_sim = slot.slot_id, sim
    return best_slot


# ---------------------------------------------------------------------------
# Persistence.


def _template_to_dict(template: ClassTemplate) -> dict:
    return {
        "class_id": template.class_id,
        "year": template.year,
        "n_sections": template.n_sections,
        "n_entities": template.n_entities,
        "idf": template.idf,
        "slots": [
            {
                "slot_id": s.slot_id,
                "canonical_label": s.canonical_label,
                "member_titles": list(s.member_titles),
                "member_entity_ids": list(s.member_entity_ids),
                "top_terms": list(s.top_terms),
                "centroid": s.centroid.weights,
                "aggregate": s.aggregate.weights,
                "anchors": sorted(s.anchors),
                "text": s.text,
                "news_ref_urls": list(s.news_ref_urls),
            }
            for s in template.slots
        ],
    }


def _template_from_dict(raw: dict) -> ClassTemplate:
    slots = tuple(
        TemplateSlot(
            slot_id=s["slot_id"],
            canonical_label=s["canonical_label"],
            member_titles=tuple(s["member_titles"]),
            member_entity_ids=tuple(s["member_entity_ids"]),
            top_terms=tuple(s["top_terms"]),
            centroid=TermVector(s["centroid"]),
            aggregate=TermVector(s["aggregate"]),
            anchors=frozenset(s["anchors"]),
            text=s["text"],
            news_ref_urls=tuple(s.get("news_ref_urls", ())),
        )
        for s in raw["slots"]
    )
    return ClassTemplate(
        class_id=raw["class_id"],
        year=raw["year"],
        slots=slots,
        idf=dict(raw["idf"]),
        n_sections=raw["n_sections"],
        n_entities=raw["n_entities"],
    )


def save_templates(path, templates: dict[str, ClassTemplate]) -> None:
    payload = {
        "format_version": TEMPLATE_FORMAT_VERSION,
        "templates": [
            _template_to_dict(templates[c]) for c in sorted(templates)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_templates(path) -> dict[str, ClassTemplate]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != TEMPLATE_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported template format")
    out = {}
    for raw in payload["templates"]:
        template = _template_from_dict(raw)
        out[template.class_id] = template
    return out
