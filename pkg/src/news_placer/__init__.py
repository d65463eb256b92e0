"""Two-stage placement of news articles onto encyclopedia entity pages.

Stage one (entity placement) decides which of an article's linked entities
should cite it; stage two (section placement) picks the section of each
chosen entity's page. Both stages are random forests over hand-crafted
features; section candidates come from per-class templates clustered out of
the prior year's pages.
"""

from .aep import (
    AEP_FEATURE_NAMES,
    SALIENCE_FEATURE_NAMES,
    AepFeatureContext,
    AuthorityIndex,
    DomainAuthorityIndex,
    EntityNewsGraph,
    assemble_aep_matrix,
    baseline_salience_features,
    build_entity_news_graph,
    domain_authority,
    frequency_authority,
    load_aep_matrix,
    novelty,
    pagerank,
    pagerank_authority,
    relative_authority,
    relative_entity_frequency,
    save_aep_matrix,
)
from .asp import (
    ASP_FEATURE_NAMES,
    AspRow,
    AspYearContext,
    assemble_asp_matrix,
    covered_slots,
    load_asp_matrix,
    save_asp_matrix,
)
from .corpus import (
    AepPair,
    AspTriple,
    ClassRegistry,
    EntityMention,
    EntityProfile,
    EntitySnapshot,
    NewsArticle,
    NewsRef,
    Section,
    SurfaceDictionary,
    build_aep_ground_truth,
    build_asp_ground_truth,
    link_entities,
    load_news_corpus,
    load_snapshot,
    save_news_corpus,
    save_snapshot,
)
from .evaluate import (
    DataBundle,
    RunConfig,
    load_data_dir,
    run_aep_experiment,
    run_asp_experiment,
    temporal_split,
)
from .forest import ForestConfig, RandomForest, load_forest, save_forest, train_forest
from .metrics import accuracy, cohen_kappa, f1, pr_curve, precision_recall_f1
from .report import emit_report, load_report
from .synthetic import (
    SignalStrengths,
    SyntheticCorpusSpec,
    generate_synthetic_corpus,
    write_synthetic_corpus,
)
from .templates import (
    ClassTemplate,
    TemplateSlot,
    build_template,
    build_templates,
    load_templates,
    map_section_to_template,
    save_templates,
    xmeans,
)
from .textproc import (
    LanguageModel,
    TermVector,
    build_idf,
    cosine,
    jaccard,
    kl_divergence,
    kl_smoothed,
    language_model,
    term_vector,
    tokenize,
    word_tokens,
)
from .topics import TopicModel, fit_topics

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
