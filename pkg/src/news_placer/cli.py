"""Command line interface.

Subcommands mirror the pipeline stages: ingest and link a corpus, derive
ground truth, build section templates, assemble feature matrices, train
forests, run the temporal evaluation, and suggest placements for one
article. `synth` generates a labeled corpus for end-to-end runs.

Exit codes: 0 on success, 1 on data or processing errors, 2 on usage
errors. NEWS_PLACER_LOG={error,info,debug} controls logging verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .aep import (
    AepFeatureContext,
    assemble_aep_matrix,
    domain_authority,
    load_aep_matrix,
    save_aep_matrix,
)
from .asp import (
    AspYearContext,
    assemble_asp_rows,
    finalize_sentinels,
    load_asp_matrix,
    save_asp_matrix,
)
from .corpus import (
    AepPair,
    AspTriple,
    ClassRegistry,
    GroundTruthStats,
    SurfaceDictionary,
    build_aep_ground_truth,
    build_asp_ground_truth,
    link_entities,
    load_news_corpus,
    normalize_url,
    save_aep_pairs,
    save_asp_triples,
    save_news_corpus,
)
from .evaluate import (
    RunConfig,
    _authority_index,
    _linked_articles,
    _positive_confidence,
    build_aep_datasets,
    build_asp_datasets,
    load_data_dir,
    run_aep_experiment,
    run_asp_experiment,
)
from .forest import load_forest, save_forest, train_forest
from .report import emit_report
from .synthetic import (
    SignalStrengths,
    SyntheticCorpusSpec,
    generate_synthetic_corpus,
    write_synthetic_corpus,
)
from .templates import build_templates, load_templates, save_templates

log = logging.getLogger("news_placer")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    wanted = os.environ.get("NEWS_PLACER_LOG", "error").strip().lower()
    level = _LOG_LEVELS.get(wanted, logging.ERROR)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def _run_config(args) -> RunConfig:
    config = (
        RunConfig.from_file(args.config)
        if getattr(args, "config", None)
        else RunConfig()
    )
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if getattr(args, "train_year", None) is not None:
        config = dataclasses.replace(config, train_year=args.train_year)
    if getattr(args, "threads", None) is not None:
        config = dataclasses.replace(config, threads=args.threads)
    return config


def _common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file of run settings")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument(
        "--threads",
        type=int,
        help="accepted for compatibility; outputs never depend on it",
    )


def _cmd_ingest(args) -> int:
    articles = load_news_corpus(args.corpus)
    years = sorted({a.year for a in articles})
    linked = sum(1 for a in articles if a.entity_ids())
    print(
        f"{len(articles)} articles, years {years[0]}-{years[-1]}, "
        f"{linked} with linked entities"
    )
    if args.out:
        save_news_corpus(args.out, articles)
        log.info("normalized corpus written to %s", args.out)
    return 0


def _cmd_link(args) -> int:
    articles = load_news_corpus(args.corpus)
    dictionary = SurfaceDictionary.load(args.dictionary)
    linked = [
        link_entities(a, dictionary, min_prior=args.min_prior) for a in articles
    ]
    n_mentions = sum(len(a.mentions) for a in linked)
    save_news_corpus(args.out, linked)
    print(f"{len(linked)} articles linked, {n_mentions} mentions")
    return 0


def _cmd_ground_truth(args) -> int:
    config = _run_config(args)
    bundle = load_data_dir(args.data)
    year = args.year
    if year not in bundle.snapshots or (year - 1) not in bundle.snapshots:
        raise ValueError(f"year {year} needs snapshots for {year} and {year - 1}")
    articles = [a for a in _linked_articles(bundle, config) if a.year == year]
    stats = GroundTruthStats()
    pairs = build_aep_ground_truth(
        articles,
        bundle.snapshots[year],
        bundle.snapshots[year - 1],
        include_unlinked_citations=config.include_unlinked_citations,
        stats=stats,
    )
    save_aep_pairs(args.out, pairs)
    positives = sum(1 for p in pairs if p.relevant)
    print(f"{len(pairs)} pairs ({positives} relevant) -> {args.out}")
    if args.triples_out:
        if not args.templates:
            raise ValueError("--triples-out requires --templates")
        templates = load_templates(args.templates)
        registry = ClassRegistry.from_snapshots(bundle.snapshots.values())
        triples = build_asp_ground_truth(
            pairs,
            {a.id: a for a in articles},
            bundle.snapshots[year],
            templates,
            registry,
            stats=stats,
        )
        save_asp_triples(args.triples_out, triples)
        print(f"{len(triples)} triples -> {args.triples_out}")
    return 0


def _cmd_templates(args) -> int:
    config = _run_config(args)
    bundle = load_data_dir(args.data)
    if args.year not in bundle.snapshots:
        raise ValueError(f"no snapshot for year {args.year}")
    templates = build_templates(
        bundle.snapshots[args.year],
        seed=config.seed,
        min_sections=config.template_min_sections,
        k_min=config.template_k_min,
        k_max=config.template_k_max,
        max_terms=config.template_max_terms,
        min_df=config.template_min_df,
        restarts=config.template_restarts,
    )
    save_templates(args.out, templates)
    slots = {c: len(t.slots) for c, t in sorted(templates.items())}
    print(f"{len(templates)} class templates {slots} -> {args.out}")
    return 0


def _cmd_features(args) -> int:
    config = _run_config(args)
    bundle = load_data_dir(args.data)
    if args.task == "aep":
        vectors_by_year, _ = build_aep_datasets(bundle, config, years=[args.year])
        vectors = vectors_by_year.get(args.year, [])
        save_aep_matrix(args.out, vectors)
        print(f"{len(vectors)} pair rows -> {args.out}")
    else:
        records_by_year, _, _ = build_asp_datasets(bundle, config, years=[args.year])
        rows = [
            row
            for rec in records_by_year.get(args.year, [])
            for row in rec.rows
        ]
        save_asp_matrix(args.out, rows)
        print(f"{len(rows)} candidate rows -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = _run_config(args)
    if args.task == "aep":
        x, y, _ = load_aep_matrix(args.features)
    else:
        rows = load_asp_matrix(args.features)
        x = np.asarray([r.features for r in rows])
        y = np.asarray([r.label for r in rows], dtype=np.int64)
    if x.shape[0] == 0:
        raise ValueError(f"{args.features}: no rows to train on")
    forest = train_forest(x, y, config.forest_config(args.task))
    os.makedirs(args.out, exist_ok=True)
    save_forest(args.out, forest)
    print(
        f"forest of {forest.config.n_trees} trees on {x.shape[0]} rows "
        f"({int(np.sum(y == 1))} positive) -> {args.out}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    config = _run_config(args)
    bundle = load_data_dir(args.data)
    if args.task in ("aep", "both"):
        result = run_aep_experiment(bundle, config)
        emit_report(os.path.join(args.out, "aep"), result)
        full = result.aggregate("full")
        sal = result.aggregate("salience")
        title = result.aggregate("title")
        print(
            f"aep train={result.train_year} test={result.test_years} "
            f"F1 full={full['f1']:.3f} salience={sal['f1']:.3f} "
            f"title={title['f1']:.3f} kappa={result.kappa['full']:.3f}"
        )
    if args.task in ("asp", "both"):
        result = run_asp_experiment(bundle, config)
        emit_report(os.path.join(args.out, "asp"), result)
        full = result.aggregate("full")
        cosine = result.aggregate("cosine")
        modal = result.aggregate("modal")
        print(
            f"asp train={result.train_year} test={result.test_years} "
            f"acc full={full['accuracy']:.3f} cosine={cosine['accuracy']:.3f} "
            f"modal={modal['accuracy']:.3f} kappa={result.kappa['full']:.3f}"
        )
    return 0


def _cmd_suggest(args) -> int:
    config = _run_config(args)
    bundle = load_data_dir(args.data)
    articles = _linked_articles(bundle, config)
    by_id = {a.id: a for a in articles}
    article = by_id.get(args.article)
    if article is None:
        raise ValueError(f"article {args.article!r} not in corpus")
    year = article.year
    if (year - 1) not in bundle.snapshots:
        raise ValueError(f"no prior snapshot for year {year}")
    snapshot_tm1 = bundle.snapshots[year - 1]

    aep_forest = load_forest(os.path.join(args.models, "aep"))
    upto = [a for a in articles if a.year <= year]
    lookup = {normalize_url(a.url): a for a in articles if a.year <= year - 1}
    ctx = AepFeatureContext(
        authority=_authority_index(upto, snapshot_tm1, config),
        domains=domain_authority([snapshot_tm1], laplace=config.laplace_domains),
        snapshot_tm1=snapshot_tm1,
        article_lookup=lookup.get,
        lam=config.novelty_lambda,
        novelty_mode=config.novelty_mode,
        beta=config.lm_beta,
        tau=config.tau,
    )
    entity_ids = sorted(article.entity_ids())
    pairs = [
        AepPair(news_id=article.id, entity_id=e, relevant=False, year=year)
        for e in entity_ids
    ]
    vectors = assemble_aep_matrix(pairs, {article.id: article}, ctx)
    x = np.asarray([v.feature_row() for v in vectors]) if vectors else np.zeros((0, 11))
    conf = _positive_confidence(aep_forest, x)
    selected = [
        (entity_ids[i], float(conf[i]))
        for i in range(len(entity_ids))
        if conf[i] >= args.threshold
    ]

    suggestions = []
    if selected:
        asp_forest = load_forest(os.path.join(args.models, "asp"))
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
        year_articles = [a for a in articles if a.year == year]
        registry = ClassRegistry.from_snapshots(bundle.snapshots.values())
        asp_ctx = AspYearContext(
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
        all_rows = []
        spans = []
        for i, (entity_id, _) in enumerate(selected):
            triple = AspTriple(
                news_id=article.id, entity_id=entity_id, slot_id="", year=year
            )
            rows = assemble_asp_rows(triple, asp_ctx, i, require_slot=False)
            spans.append((len(all_rows), len(rows) if rows else 0))
            if rows:
                all_rows.extend(rows)
        all_rows = finalize_sentinels(all_rows)
        for (entity_id, score), (start, count) in zip(selected, spans):
            slot_id = None
            slot_label = None
            if count:
                rows = all_rows[start : start + count]
                xr = np.asarray([r.features for r in rows])
                pick = int(np.argmax(_positive_confidence(asp_forest, xr)))
                slot_id = rows[pick].candidate
                slot_label = _slot_label(
                    slot_id, asp_ctx, entity_id, snapshot_tm1
                )
            suggestions.append(
                {
                    "entity_id": entity_id,
                    "confidence": score,
                    "slot_id": slot_id,
                    "slot_label": slot_label,
                }
            )
    suggestions.sort(key=lambda s: (-s["confidence"], s["entity_id"]))
    print(
        json.dumps(
            {
                "news_id": article.id,
                "year": year,
                "threshold": args.threshold,
                "suggestions": suggestions,
            },
            indent=1,
            sort_keys=True,
        )
    )
    return 0


def _slot_label(slot_id, ctx: AspYearContext, entity_id, snapshot_tm1):
    """Human-readable name of a predicted candidate."""
    if slot_id.startswith("sec:"):
        profile = snapshot_tm1.profiles.get(entity_id)
        index = int(slot_id.split(":", 1)[1])
        if profile is not None and index < len(profile.sections):
            return profile.sections[index].title
        return None
    class_id = ctx.pick_class(entity_id)
    if class_id is None:
        return None
    template = ctx.templates[class_id]
    for slot in template.slots:
        if slot.slot_id == slot_id:
            return slot.canonical_label
    return None


def _cmd_synth(args) -> int:
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(SyntheticCorpusSpec)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"{args.config}: unknown synth keys {unknown}")
    if isinstance(raw.get("signal"), dict):
        raw["signal"] = SignalStrengths(**raw["signal"])
    if args.seed is not None:
        raw["seed"] = args.seed
    spec = SyntheticCorpusSpec(**raw)
    corpus = generate_synthetic_corpus(spec)
    write_synthetic_corpus(corpus, args.out)
    years = sorted(corpus.snapshots)
    print(
        f"{len(corpus.articles)} articles, snapshots {years[0]}-{years[-1]}, "
        f"{len(corpus.dictionary)} surface entries -> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="news-placer",
        description="Suggest Wikipedia-style entity pages and sections for news articles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate a news corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write the normalized corpus here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("link", help="link entity mentions via a surface dictionary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-prior", type=float, default=0.3)
    p.set_defaults(func=_cmd_link)

    p = sub.add_parser("ground-truth", help="derive labeled pairs (and triples) for a year")
    p.add_argument("--data", required=True, help="directory with corpus and snapshots")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--out", required=True, help="pairs CSV path")
    p.add_argument("--templates", help="templates JSON for triple derivation")
    p.add_argument("--triples-out", help="triples CSV path")
    _common_options(p)
    p.set_defaults(func=_cmd_ground_truth)

    p = sub.add_parser("templates", help="cluster one snapshot's sections into templates")
    p.add_argument("--data", required=True)
    p.add_argument("--year", type=int, required=True, help="snapshot year to cluster")
    p.add_argument("--out", required=True)
    _common_options(p)
    p.set_defaults(func=_cmd_templates)

    p = sub.add_parser("features", help="assemble one year's feature matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--task", choices=("aep", "asp"), required=True)
    p.add_argument("--out", required=True)
    _common_options(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train a random forest on a feature matrix")
    p.add_argument("--features", required=True)
    p.add_argument("--task", choices=("aep", "asp"), required=True)
    p.add_argument("--out", required=True, help="model directory")
    _common_options(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="run the temporal experiment")
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=("aep", "asp", "both"), default="both")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument(
        "--train-year", type=int, help="override the training year (default: earliest)"
    )
    _common_options(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("suggest", help="suggest placements for one article")
    p.add_argument("--data", required=True)
    p.add_argument("--models", required=True, help="directory with aep/ and asp/ forests")
    p.add_argument("--article", required=True, help="article id")
    p.add_argument("--threshold", type=float, default=0.5)
    _common_options(p)
    p.set_defaults(func=_cmd_suggest)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON overrides for the corpus spec")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
