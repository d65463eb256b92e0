"""Temporal experiment runners for both placement stages.

The protocol is train-on-one-year, test-on-strictly-later-years. Every
profile-derived input for year y (snapshots, templates, novelty candidates,
domain shares) comes from year y-1, so feature rows for a year never change
when later years change.
"""

from __future__ import annotations

import dataclasses
import glob
import json
import math
import os
import re
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from .aep import (
    AepFeatureContext,
    assemble_aep_matrix,
    build_entity_news_graph,
    domain_authority,
    frequency_authority,
    pagerank_authority,
)
from .asp import (
    ASP_FEATURE_NAMES,
    AspAssemblyStats,
    AspYearContext,
    assemble_asp_matrix,
    covered_slots,
)
from .corpus import (
    ClassRegistry,
    EntitySnapshot,
    GroundTruthStats,
    NewsArticle,
    SurfaceDictionary,
    build_aep_ground_truth,
    build_asp_ground_truth,
    link_entities,
    load_news_corpus,
    load_snapshot,
    normalize_url,
)
from .forest import ForestConfig, RandomForest, train_forest
from .metrics import accuracy, cohen_kappa, f1, pr_curve, precision_recall_f1
from .templates import build_templates

IN_TITLE_COLUMN = 5  # position of the in_title flag in the feature row
SALIENCE_COLUMNS = slice(1, 8)  # the seven baseline columns
COSINE_COLUMN = ASP_FEATURE_NAMES.index("cosine_tfidf")


@dataclass(frozen=True)
class RunConfig:
    """Every knob of an experiment run; one JSON file round-trips it.

    threads is accepted for interface compatibility but never changes the
    computation: all work is single-threaded so equal seeds give equal bytes.
    """

    seed: int = 0
    train_year: int | None = None
    authority_mode: str = "frequency"
    tau: float = 1.0
    novelty_mode: str = "corrected"
    novelty_lambda: float = 0.5
    lm_beta: float = 0.1
    laplace_domains: bool = False
    include_unlinked_citations: bool = True
    min_link_prior: float = 0.3
    decision_threshold: float = 0.5
    rf_trees: int = 100
    rf_max_depth: int = 12
    rf_min_leaf: int = 2
    rf_class_weighting_aep: bool = True
    rf_class_weighting_asp: bool = False
    n_topics: int = 50
    topic_iterations: int = 200
    top_m_topic_terms: int = 20
    template_k_min: int = 2
    template_k_max: int = 12
    template_max_terms: int = 5000
    template_min_df: int = 3
    template_restarts: int = 3
    template_min_sections: int = 2
    threads: int = 1

    def __post_init__(self):
        if self.authority_mode not in ("frequency", "pagerank"):
            raise ValueError(f"unknown authority_mode {self.authority_mode!r}")
        if self.novelty_mode not in ("corrected", "literal"):
            raise ValueError(f"unknown novelty_mode {self.novelty_mode!r}")
        if not 0.0 <= self.novelty_lambda <= 1.0:
            raise ValueError("novelty_lambda must lie in [0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        return cls(**raw)

    def echo(self) -> dict:
        """Reportable form: everything that affects the outputs."""
        out = dataclasses.asdict(self)
        del out["threads"]
        return out

    def forest_config(self, task: str) -> ForestConfig:
        weighting = (
            self.rf_class_weighting_aep if task == "aep" else self.rf_class_weighting_asp
        )
        return ForestConfig(
            n_trees=self.rf_trees,
            max_depth=self.rf_max_depth,
            min_leaf=self.rf_min_leaf,
            class_weighting=weighting,
            seed=self.seed,
        )


@dataclass
class DataBundle:
    """A corpus with its yearly snapshots and linking dictionary."""

    articles: list[NewsArticle]
    snapshots: dict[int, EntitySnapshot]
    dictionary: SurfaceDictionary | None = None

    def pair_years(self) -> list[int]:
        """Years with articles plus both the current and prior snapshot."""
        with_articles = {a.year for a in self.articles}
        return sorted(
            y
            for y in self.snapshots
            if y in with_articles and (y - 1) in self.snapshots
        )


_SNAPSHOT_RE = re.compile(r"snapshot_(\d{4})\.json$")


def load_data_dir(path) -> DataBundle:
    """Load corpus.jsonl, snapshot_YYYY.json files and dictionary.tsv."""
    corpus_path = os.path.join(path, "corpus.jsonl")
    if not os.path.exists(corpus_path):
        raise FileNotFoundError(f"{path}: no corpus.jsonl")
    articles = load_news_corpus(corpus_path)
    snapshots = {}
    for snap_path in sorted(glob.glob(os.path.join(path, "snapshot_*.json"))):
        m = _SNAPSHOT_RE.search(os.path.basename(snap_path))
        if not m:
            continue
        year = int(m.group(1))
        snapshots[year] = load_snapshot(snap_path, year)
    if not snapshots:
        raise FileNotFoundError(f"{path}: no snapshot_YYYY.json files")
    dict_path = os.path.join(path, "dictionary.tsv")
    dictionary = SurfaceDictionary.load(dict_path) if os.path.exists(dict_path) else None
    return DataBundle(articles=articles, snapshots=snapshots, dictionary=dictionary)


def temporal_split(items, train_year: int, year_of=lambda item: item.year):
    """(train, test, n_excluded): year==t trains, later years test, earlier drop."""
    train = [it for it in items if year_of(it) == train_year]
    test = [it for it in items if year_of(it) > train_year]
    n_excluded = len(items) - len(train) - len(test)
    if not train:
        raise ValueError(f"no items in training year {train_year}")
    if not test:
        raise ValueError(f"no items after training year {train_year}")
    return train, test, n_excluded


def _linked_articles(bundle: DataBundle, config: RunConfig) -> list[NewsArticle]:
    if bundle.dictionary is None:
        return bundle.articles
    return [
        link_entities(a, bundle.dictionary, min_prior=config.min_link_prior)
        for a in bundle.articles
    ]


def _authority_index(articles_upto, snapshot_tm1, config: RunConfig):
    if config.authority_mode == "pagerank":
        graph = build_entity_news_graph(articles_upto, snapshot_tm1)
        return pagerank_authority(graph)
    return frequency_authority(articles_upto)


def _positive_confidence(forest: RandomForest, x: np.ndarray) -> np.ndarray:
    """P(label==1) per row; 0 when the forest never saw the positive class."""
    if x.shape[0] == 0:
        return np.zeros(0)
    proba = forest.predict_proba(x)
    where = np.flatnonzero(forest.classes == 1)
    if where.size == 0:
        return np.zeros(x.shape[0])
    return proba[:, where[0]]


def _binary_metrics_row(scope, model, y_true, y_pred, support=None) -> dict:
    p, r, f = precision_recall_f1(y_true, y_pred)
    return {
        "scope": scope,
        "model": model,
        "precision": p,
        "recall": r,
        "f1": f,
        "support": int(support if support is not None else len(y_true)),
    }


@dataclass
class AepPrediction:
    news_id: str
    entity_id: str
    year: int
    label: int
    confidence: float
    pred_full: int
    pred_salience: int
    pred_title: int


@dataclass
class AepExperimentResult:
    config: dict
    train_year: int
    test_years: list[int]
    counters: dict
    metrics: list[dict]
    pr_points: list[tuple[float, float, float]]
    kappa: dict
    p_value_vs_salience: float | None
    predictions: list[AepPrediction]
    forest: RandomForest | None = None
    salience_forest: RandomForest | None = None

    def aggregate(self, model: str) -> dict:
        for row in self.metrics:
            if row["scope"] == "aggregate" and row["model"] == model:
                return row
        raise KeyError(model)


def build_aep_datasets(bundle: DataBundle, config: RunConfig, years=None):
    """Per-year labeled feature vectors plus ground-truth counters."""
    articles = _linked_articles(bundle, config)
    by_year: dict[int, list[NewsArticle]] = {}
    for article in articles:
        by_year.setdefault(article.year, []).append(article)
    stats = GroundTruthStats()
    vectors_by_year: dict[int, list] = {}
    wanted = bundle.pair_years() if years is None else sorted(years)
    for year in wanted:
        if year not in bundle.snapshots or (year - 1) not in bundle.snapshots:
            raise ValueError(f"year {year} needs snapshots for {year} and {year - 1}")
        year_articles = by_year.get(year, [])
        if not year_articles:
            continue
        snapshot_t = bundle.snapshots[year]
        snapshot_tm1 = bundle.snapshots[year - 1]
        pairs = build_aep_ground_truth(
            year_articles,
            snapshot_t,
            snapshot_tm1,
            include_unlinked_citations=config.include_unlinked_citations,
            stats=stats,
        )
        upto = [a for a in articles if a.year <= year]
        lookup = {
            normalize_url(a.url): a for a in articles if a.year <= year - 1
        }
        ctx = AepFeatureContext(
            authority=_authority_index(upto, snapshot_tm1, config),
            domains=domain_authority([snapshot_tm1], laplace=config.laplace_domains),
            snapshot_tm1=snapshot_tm1,
            article_lookup=lookup.get,
            lam=config.novelty_lambda,
            novelty_mode=config.novelty_mode,
            beta=config.lm_beta,
            tau=config.tau,
            allow_unlinked=config.include_unlinked_citations,
        )
        articles_by_id = {a.id: a for a in year_articles}
        vectors_by_year[year] = assemble_aep_matrix(pairs, articles_by_id, ctx)
    return vectors_by_year, stats


def run_aep_experiment(bundle: DataBundle, config: RunConfig) -> AepExperimentResult:
    """Train the placement forest on one year, score all later years.

    Three models run on identical splits: the full feature set, the
    salience-only forest, and the entity-in-title rule.
    """
    vectors_by_year, gt_stats = build_aep_datasets(bundle, config)
    vectors = [v for year in sorted(vectors_by_year) for v in vectors_by_year[year]]
    if not vectors:
        raise ValueError("no labeled pairs; check snapshots and corpus years")
    train_year = config.train_year
    if train_year is None:
        train_year = min(vectors_by_year)
    train, test, n_excluded = temporal_split(vectors, train_year)

    x_train = np.asarray([v.feature_row() for v in train])
    y_train = np.asarray([v.label for v in train], dtype=np.int64)
    x_test = np.asarray([v.feature_row() for v in test])
    y_test = np.asarray([v.label for v in test], dtype=np.int64)

    forest = train_forest(x_train, y_train, config.forest_config("aep"))
    sal_forest = train_forest(
        x_train[:, SALIENCE_COLUMNS], y_train, config.forest_config("aep")
    )

    conf_full = _positive_confidence(forest, x_test)
    pred_full = forest.predict(x_test)
    pred_sal = sal_forest.predict(x_test[:, SALIENCE_COLUMNS])
    pred_title = (x_test[:, IN_TITLE_COLUMN] >= 1.0).astype(np.int64)

    predictions = [
        AepPrediction(
            news_id=v.news_id,
            entity_id=v.entity_id,
            year=v.year,
            label=int(y_test[i]),
            confidence=float(conf_full[i]),
            pred_full=int(pred_full[i]),
            pred_salience=int(pred_sal[i]),
            pred_title=int(pred_title[i]),
        )
        for i, v in enumerate(test)
    ]

    test_years = sorted({v.year for v in test})
    named = (("full", pred_full), ("salience", pred_sal), ("title", pred_title))
    metrics = [
        _binary_metrics_row("aggregate", name, y_test, pred) for name, pred in named
    ]
    per_year_f1: dict[str, list[float]] = {name: [] for name, _ in named}
    for year in test_years:
        mask = np.asarray([v.year == year for v in test])
        for name, pred in named:
            row = _binary_metrics_row(f"year:{year}", name, y_test[mask], pred[mask])
            metrics.append(row)
            per_year_f1[name].append(row["f1"])

    if len(test_years) >= 2:
        p_value = float(
            sstats.ttest_ind(
                per_year_f1["full"], per_year_f1["salience"], equal_var=False
            ).pvalue
        )
        if np.isnan(p_value):
            p_value = None
    else:
        p_value = None

    kappa = {
        name: cohen_kappa(y_test.tolist(), list(map(int, pred)))
        for name, pred in named
    }
    counters = {
        "train_pairs": len(train),
        "test_pairs": len(test),
        "excluded_earlier_pairs": n_excluded,
        "train_positives": int(y_train.sum()),
        "test_positives": int(y_test.sum()),
        "unlinked_citations": gt_stats.unlinked_citations,
        "already_referenced": gt_stats.already_referenced,
        "articles_without_entities": gt_stats.articles_without_entities,
    }
    return AepExperimentResult(
        config=config.echo(),
        train_year=train_year,
        test_years=test_years,
        counters=counters,
        metrics=metrics,
        pr_points=pr_curve(y_test.tolist(), conf_full.tolist()),
        kappa=kappa,
        p_value_vs_salience=p_value,
        predictions=predictions,
        forest=forest,
        salience_forest=sal_forest,
    )


@dataclass
class AspPrediction:
    news_id: str
    entity_id: str
    year: int
    triple: int
    class_id: str
    true_slot: str
    pred_full: str
    pred_cosine: str
    pred_modal: str
    covered: tuple[str, ...]
    expansion_true: bool
    expansion_pred: bool


@dataclass
class AspExperimentResult:
    config: dict
    train_year: int
    test_years: list[int]
    counters: dict
    metrics: list[dict]
    per_class: list[dict]
    expansion: list[dict]
    kappa: dict
    predictions: list[AspPrediction]
    forest: RandomForest | None = None

    def aggregate(self, model: str) -> dict:
        for row in self.metrics:
            if row["scope"] == "aggregate" and row["model"] == model:
                return row
        raise KeyError(model)


@dataclass
class _TripleRecord:
    """One placeable triple with its candidate rows and slot bookkeeping."""

    news_id: str
    entity_id: str
    year: int
    index: int
    class_id: str
    true_slot: str
    candidate_ids: list[str]
    rows: list
    covered: frozenset[str]
    template_slots: frozenset[str]


def build_asp_datasets(bundle: DataBundle, config: RunConfig, years=None):
    """Per-year triple records with finalized candidate feature rows."""
    articles = _linked_articles(bundle, config)
    by_year: dict[int, list[NewsArticle]] = {}
    for article in articles:
        by_year.setdefault(article.year, []).append(article)
    registry = ClassRegistry.from_snapshots(bundle.snapshots.values())
    gt_stats = GroundTruthStats()
    asm_stats = AspAssemblyStats()
    records_by_year: dict[int, list[_TripleRecord]] = {}
    wanted = bundle.pair_years() if years is None else sorted(years)
    for year in wanted:
        if year not in bundle.snapshots or (year - 1) not in bundle.snapshots:
            raise ValueError(f"year {year} needs snapshots for {year} and {year - 1}")
        year_articles = by_year.get(year, [])
        if not year_articles:
            continue
        snapshot_t = bundle.snapshots[year]
        snapshot_tm1 = bundle.snapshots[year - 1]
        pairs = build_aep_ground_truth(
            year_articles,
            snapshot_t,
            snapshot_tm1,
            include_unlinked_citations=config.include_unlinked_citations,
            stats=gt_stats,
        )
        templates = build_templates(
            snapshot_tm1,
            seed=config.seed,
            min_sections=config.template_min_sections,
            k_min=config.template_k_min,
            k_max=config.template_k_max,
            max_terms=config.template_max_terms,
            min_df=config.template_min_df,
            restarts=config.template_restarts,
        )
        if not templates:
            continue
        articles_by_id = {a.id: a for a in year_articles}
        triples = build_asp_ground_truth(
            pairs, articles_by_id, snapshot_t, templates, registry, stats=gt_stats
        )
        lookup = {
            normalize_url(a.url): a for a in articles if a.year <= year - 1
        }
        ctx = AspYearContext(
            year=year,
            articles=year_articles,
            snapshot_tm1=snapshot_tm1,
            templates=templates,
            registry=registry,
            article_lookup=lookup.get,
            n_topics=config.n_topics,
            topic_iterations=config.topic_iterations,
            seed=config.seed,
            top_m=config.top_m_topic_terms,
            beta=config.lm_beta,
        )
        rows = assemble_asp_matrix(triples, ctx, stats=asm_stats)
        rows_by_triple: dict[int, list] = {}
        for row in rows:
            rows_by_triple.setdefault(row.triple, []).append(row)
        records = []
        for i, triple in enumerate(triples):
            triple_rows = rows_by_triple.get(i)
            if not triple_rows:
                continue
            class_id = ctx.pick_class(triple.entity_id)
            template = templates[class_id]
            records.append(
                _TripleRecord(
                    news_id=triple.news_id,
                    entity_id=triple.entity_id,
                    year=year,
                    index=i,
                    class_id=class_id,
                    true_slot=triple.slot_id,
                    candidate_ids=[r.candidate for r in triple_rows],
                    rows=triple_rows,
                    covered=covered_slots(triple.entity_id, template, snapshot_tm1),
                    template_slots=frozenset(template.slot_ids()),
                )
            )
        records_by_year[year] = records
    return records_by_year, gt_stats, asm_stats


def _modal_slots(train_records) -> tuple[dict[str, str], str | None]:
    """Most frequent training slot per class (ties toward the smaller id)."""
    per_class: dict[str, dict[str, int]] = {}
    overall: dict[str, int] = {}
    for rec in train_records:
        per_class.setdefault(rec.class_id, {})
        per_class[rec.class_id][rec.true_slot] = (
            per_class[rec.class_id].get(rec.true_slot, 0) + 1
        )
        overall[rec.true_slot] = overall.get(rec.true_slot, 0) + 1
    def pick(counts: dict[str, int]) -> str:
        return min(counts, key=lambda s: (-counts[s], s))

    modal = {c: pick(counts) for c, counts in per_class.items()}
    return modal, (pick(overall) if overall else None)


def _slot_metric_rows(scope_prefix, records, attr) -> tuple[list[dict], dict]:
    """One-vs-rest precision/recall/F1 per slot plus the weighted aggregate.

    The aggregate row averages slot precision and recall by true-slot support
    and reports the harmonic mean of those two averages as its F1.
    """
    y_true = [r.true_slot for r in records]
    y_pred = [getattr(r, attr) for r in records]
    slots = sorted(set(y_true) | set(y_pred))
    rows = []
    total = len(records)
    w_precision = 0.0
    w_recall = 0.0
    for slot in slots:
        p, r, f = precision_recall_f1(y_true, y_pred, positive=slot)
        support = sum(1 for t in y_true if t == slot)
        rows.append(
            {
                "scope": f"{scope_prefix}:slot:{slot}",
                "model": attr.removeprefix("pred_"),
                "precision": p,
                "recall": r,
                "f1": f,
                "support": support,
            }
        )
        w_precision += p * support
        w_recall += r * support
    if total:
        w_precision /= total
        w_recall /= total
    agg = {
        "scope": scope_prefix,
        "model": attr.removeprefix("pred_"),
        "precision": w_precision,
        "recall": w_recall,
        "f1": f1(w_precision, w_recall),
        "accuracy": accuracy(y_true, y_pred) if records else 0.0,
        "support": total,
    }
    return rows, agg


def run_asp_experiment(bundle: DataBundle, config: RunConfig) -> AspExperimentResult:
    """Train the slot-choice forest on one year, score all later years.

    Candidate rows are scored binarily; the predicted slot of a triple is its
    highest-confidence candidate (ties keep candidate order: template slots
    in id order, then private prior sections). Two baselines run on the same
    splits: nearest slot text by tf-idf cosine, and the per-class modal
    training slot.
    """
    records_by_year, gt_stats, asm_stats = build_asp_datasets(bundle, config)
    records = [r for year in sorted(records_by_year) for r in records_by_year[year]]
    if not records:
        raise ValueError("no placeable triples; check snapshots and templates")
    train_year = config.train_year
    if train_year is None:
        train_year = min(records_by_year)
    train, test, n_excluded = temporal_split(records, train_year)

    train_rows = [row for rec in train for row in rec.rows]
    x_train = np.asarray([row.features for row in train_rows])
    y_train = np.asarray([row.label for row in train_rows], dtype=np.int64)
    forest = train_forest(x_train, y_train, config.forest_config("asp"))

    modal, global_modal = _modal_slots(train)

    scored: list[AspPrediction] = []
    for rec in test:
        x = np.asarray([row.features for row in rec.rows])
        conf = _positive_confidence(forest, x)
        pred_full = rec.candidate_ids[int(np.argmax(conf))]
        cosines = x[:, COSINE_COLUMN]
        pred_cosine = rec.candidate_ids[int(np.argmax(cosines))]
        scored.append(
            AspPrediction(
                news_id=rec.news_id,
                entity_id=rec.entity_id,
                year=rec.year,
                triple=rec.index,
                class_id=rec.class_id,
                true_slot=rec.true_slot,
                pred_full=pred_full,
                pred_cosine=pred_cosine,
                pred_modal=modal.get(rec.class_id, global_modal),
                covered=tuple(sorted(rec.covered)),
                expansion_true=(
                    rec.true_slot in rec.template_slots
                    and rec.true_slot not in rec.covered
                ),
                expansion_pred=(
                    pred_full in rec.template_slots and pred_full not in rec.covered
                ),
            )
        )

    test_years = sorted({r.year for r in scored})
    metrics = []
    per_class = []
    for attr in ("pred_full", "pred_cosine", "pred_modal"):
        slot_rows, agg = _slot_metric_rows("aggregate", scored, attr)
        metrics.append(agg)
        per_class.extend(slot_rows)
        for year in test_years:
            year_scored = [r for r in scored if r.year == year]
            yr_rows, yr_agg = _slot_metric_rows(f"year:{year}", year_scored, attr)
            metrics.append(yr_agg)
            per_class.extend(yr_rows)

    kappa = {
        attr.removeprefix("pred_"): cohen_kappa(
            [r.true_slot for r in scored], [getattr(r, attr) for r in scored]
        )
        for attr in ("pred_full", "pred_cosine", "pred_modal")
    }
    expansion = profile_expansion_analysis(scored, bundle.snapshots)

    counters = {
        "train_triples": len(train),
        "test_triples": len(test),
        "excluded_earlier_triples": n_excluded,
        "train_rows": len(train_rows),
        "unmapped_sections": gt_stats.unmapped_sections,
        "untemplated_entities": gt_stats.untemplated_entities,
        "missing_profiles": gt_stats.missing_profiles,
        "skipped_no_template": asm_stats.skipped_no_template,
        "skipped_unknown_slot": asm_stats.skipped_unknown_slot,
        "skipped_missing_profile": asm_stats.skipped_missing_profile,
    }
    return AspExperimentResult(
        config=config.echo(),
        train_year=train_year,
        test_years=test_years,
        counters=counters,
        metrics=metrics,
        per_class=per_class,
        expansion=expansion,
        kappa=kappa,
        predictions=scored,
        forest=forest,
    )


LONG_TAIL_FRACTION = 0.27  # shortest-text share of entities treated as long-tail


def _long_tail_threshold(snapshot: EntitySnapshot, fraction: float) -> int:
    """Text length at or below which an entity counts as long-tail."""
    lengths = sorted(p.text_length() for p in snapshot.profiles.values())
    if not lengths:
        return 0
    return lengths[max(0, math.ceil(fraction * len(lengths)) - 1)]


def profile_expansion_analysis(
    predictions, snapshots, long_tail_fraction: float = LONG_TAIL_FRACTION
) -> list[dict]:
    """How well placements land in sections the entity did not yet have.

    An expansion triple is one whose true slot is a template slot with no
    exact-title match among the entity's prior-year sections; the expansion
    ratio is the fraction of those triples placed correctly, reported as
    absent (None) where no expansion triples exist. Each row also splits the
    ratio between long-tail and trunk entities — the shortest-profile share
    of the prior snapshot versus the rest — and counts placements that
    *predict* into an uncovered slot. Rows cover every (year, class) pair
    plus per-year and overall totals.
    """
    thresholds = {}
    for year in sorted({p.year for p in predictions}):
        prior = snapshots.get(year - 1)
        if prior is None:
            raise ValueError(f"expansion analysis needs the {year - 1} snapshot")
        thresholds[year] = _long_tail_threshold(prior, long_tail_fraction)

    def is_long_tail(p) -> bool:
        profile = snapshots[p.year - 1].profiles.get(p.entity_id)
        length = profile.text_length() if profile is not None else 0
        return length <= thresholds[p.year]

    def ratio(group) -> tuple[int, int, float | None]:
        n = len(group)
        correct = sum(1 for p in group if p.pred_full == p.true_slot)
        return n, correct, (correct / n if n else None)

    def summarize(scope: str, group) -> dict:
        expansions = [p for p in group if p.expansion_true]
        n_exp, n_correct, exp_ratio = ratio(expansions)
        n_lt, _, lt_ratio = ratio([p for p in expansions if is_long_tail(p)])
        n_tr, _, tr_ratio = ratio([p for p in expansions if not is_long_tail(p)])
        return {
            "scope": scope,
            "n_triples": len(group),
            "n_expansions": n_exp,
            "n_expansion_correct": n_correct,
            "expansion_ratio": exp_ratio,
            "n_expansion_pred": sum(1 for p in group if p.expansion_pred),
            "n_expansions_long_tail": n_lt,
            "expansion_ratio_long_tail": lt_ratio,
            "n_expansions_trunk": n_tr,
            "expansion_ratio_trunk": tr_ratio,
        }

    rows = [summarize("all", predictions)]
    for year in sorted(thresholds):
        of_year = [p for p in predictions if p.year == year]
        rows.append(summarize(f"year:{year}", of_year))
        for class_id in sorted({p.class_id for p in of_year}):
            rows.append(
                summarize(
                    f"year:{year}:class:{class_id}",
                    [p for p in of_year if p.class_id == class_id],
                )
            )
    return rows
