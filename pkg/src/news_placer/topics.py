"""Latent topic model fitted by collapsed Gibbs sampling.

Symmetric priors alpha = 50 / T and eta = 0.01, a fixed sweep count and a
single final sample. The per-sweep kernel is jit-compiled when numba is
available; the pure-Python fallback runs the identical statements on the
same pre-drawn uniform stream, so results do not depend on numba being
installed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]

DEFAULT_TOPICS = 50
DEFAULT_ITERATIONS = 200


def _sweep(doc_of, term_of, z, ndk, nkw, nk, alpha, eta, u, cum):
    """One Gibbs sweep over all tokens in corpus order.

    u holds one uniform draw per token; cum is scratch space of size T.
    """
    n_topics = nk.shape[0]
    vocab_eta = eta * nkw.shape[1]
    for i in range(doc_of.shape[0]):
        d = doc_of[i]
        w = term_of[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(n_topics):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + eta) / (nk[t] + vocab_eta)
            cum[t] = total
        r = u[i] * total
        k = 0
        while cum[k] < r and k < n_topics - 1:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


_sweep_jit = njit(cache=False)(_sweep)


@dataclass
class TopicModel:
    """Fitted topic assignments with count matrices.

    doc_topic[d, t] and topic_term[t, w] are the final-sample counts; the
    dominant topic of a document is the argmax of its count row (ties break
    toward the lowest topic id).
    """

    n_topics: int
    alpha: float
    eta: float
    seed: int
    vocabulary: list[str]
    doc_ids: list[str]
    doc_topic: np.ndarray
    topic_term: np.ndarray
    _doc_index: dict = field(repr=False, default_factory=dict)
    _term_sort: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self._doc_index:
            self._doc_index = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}

    def dominant_topic(self, doc_id: str) -> int:
        row = self.doc_topic[self._doc_index[doc_id]]
        return int(np.argmax(row))

    def top_terms(self, topic: int, m: int = 20) -> list[str]:
        """The m highest-count terms of a topic; ties break lexicographically."""
        counts = self.topic_term[topic]
        order = sorted(range(len(self.vocabulary)), key=lambda w: (-counts[w], self.vocabulary[w]))
        return [self.vocabulary[w] for w in order[:m]]


def fit_topics(
    docs: list[tuple[str, list[str]]],
    n_topics: int = DEFAULT_TOPICS,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> TopicModel:
    """Fit a topic model over (doc_id, tokens) pairs.

    Deterministic for a fixed seed and corpus. Raises ValueError when the
    corpus is empty, a doc id repeats, or n_topics exceeds vocabulary size.
    """
    if not docs:
        raise ValueError("topic model requires at least one document")
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    doc_ids = [doc_id for doc_id, _ in docs]
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("duplicate document ids in topic model input")

    term_ids: dict[str, int] = {}
    doc_of = []
    term_of = []
    for d, (_, tokens) in enumerate(docs):
        for tok in tokens:
            w = term_ids.get(tok)
            if w is None:
                w = len(term_ids)
                term_ids[tok] = w
            doc_of.append(d)
            term_of.append(w)
    vocab_size = len(term_ids)
    if vocab_size == 0:
        raise ValueError("topic model requires at least one token")
    if n_topics > vocab_size:
        raise ValueError(f"n_topics={n_topics} exceeds vocabulary size {vocab_size}")

    n_tokens = len(doc_of)
    doc_of = np.asarray(doc_of, dtype=np.int64)
    term_of = np.asarray(term_of, dtype=np.int64)
    alpha = 50.0 / n_topics
    eta = 0.01

    rng = np.random.default_rng(seed)
    z = np.minimum((rng.random(n_tokens) * n_topics).astype(np.int64), n_topics - 1)

    ndk = np.zeros((len(docs), n_topics), dtype=np.int64)
    nkw = np.zeros((n_topics, vocab_size), dtype=np.int64)
    nk = np.zeros(n_topics, dtype=np.int64)
    np.add.at(ndk, (doc_of, z), 1)
    np.add.at(nkw, (z, term_of), 1)
    np.add.at(nk, z, 1)

    cum = np.zeros(n_topics, dtype=np.float64)
    kernel = _sweep_jit
    for _ in range(iterations):
        u = rng.random(n_tokens)
        kernel(doc_of, term_of, z, ndk, nkw, nk, alpha, eta, u, cum)

    vocabulary = [None] * vocab_size
    for term, w in term_ids.items():
        vocabulary[w] = term
    return TopicModel(
        n_topics=n_topics,
        alpha=alpha,
        eta=eta,
        seed=seed,
        vocabulary=vocabulary,
        doc_ids=list(doc_ids),
        doc_topic=ndk,
        topic_term=nkw,
    )
