"""Text processing primitives.

Tokenization, a small heuristic part-of-speech tagger, sparse term vectors,
inverse document frequency, smoothed unigram language models and the
similarity measures (cosine, Jaccard, KL divergence) used by the feature
extractors.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

TOKEN_RE = re.compile(r"\w+(?:'\w+)?|[^\w\s]", re.UNICODE)
_WORD_RE = re.compile(r"\w", re.UNICODE)
_NUMBER_RE = re.compile(r"\d[\d,./-]*")

POS_TAGS = ("NNP", "NN", "CD", "VB", "JJ", "OTHER")

_SENTENCE_END = frozenset({".", "!", "?"})

# Closed-class words. The fallback tagger only needs to be deterministic and
# roughly right; callers with real tags should supply them in the input.
CLOSED_CLASS = frozenset(
    """
    a an the this that these those some any each every no
    i you he she it we they me him her us them my your his its our their
    and or but nor so yet if while because although though since when where
    of in on at by for with from to into over under between through during
    is are was were be been being am do does did has have had will would
    shall should can could may might must not
    as than then there here also just only very too
    """.split()
)

VERB_LEXICON = frozenset(
    """
    say says said tell told meet met make made take took go went come came
    announce announced win won lose lost play played give gave get got
    see saw show showed call called lead led hold held become became
    report reported claim claimed sign signed join joined leave left
    elect elected appoint appointed release released launch launched
    visit visited open opened close closed start started end ended
    write wrote run ran buy bought sell sold find found
    """.split()
)

ADJ_LEXICON = frozenset(
    """
    new old big small large major minor good bad great former current
    national international public private political economic financial
    first last next early late recent local foreign young senior
    """.split()
)


def tokenize(text: str) -> list[str]:
    """Split text into word and punctuation tokens, order preserved."""
    return TOKEN_RE.findall(text)


def is_word(token: str) -> bool:
    return bool(_WORD_RE.search(token))


def word_tokens(text: str) -> list[str]:
    """Case-folded word tokens only; punctuation dropped."""
    return [t.casefold() for t in tokenize(text) if is_word(t)]


def _tag_token(token: str, sentence_start: bool) -> str:
    if not is_word(token):
        return "OTHER"
    low = token.casefold()
    if _NUMBER_RE.fullmatch(token):
        return "CD"
    if low in CLOSED_CLASS:
        return "OTHER"
    if low in VERB_LEXICON:
        return "VB"
    if low in ADJ_LEXICON:
        return "JJ"
    if token[:1].isupper():
        # Capitalised tokens tag as proper nouns. Sentence-initial capitals
        # count too unless the closed-class lexicon already claimed them.
        return "NNP"
    return "NN"


def tokenize_and_tag(paragraphs: list[str]) -> list[list[tuple[str, str]]]:
    """Tokenize each paragraph and attach heuristic tags from POS_TAGS.

    Pre-tagged input is the caller's concern: this always runs the fallback
    rules. Deterministic for identical input.
    """
    tagged = []
    for text in paragraphs:
        tokens = tokenize(text)
        pairs = []
        sentence_start = True
        for tok in tokens:
            pairs.append((tok, _tag_token(tok, sentence_start)))
            if is_word(tok):
                sentence_start = False
            elif tok in _SENTENCE_END:
                sentence_start = True
        tagged.append(pairs)
    return tagged


class TermVector:
    """Sparse term -> weight mapping with a cached L2 norm."""

    __slots__ = ("weights", "norm")

    def __init__(self, weights):
        self.weights = dict(weights)
        self.norm = math.sqrt(sum(w * w for w in self.weights.values()))

    def __len__(self):
        return len(self.weights)

    def __eq__(self, other):
        return isinstance(other, TermVector) and self.weights == other.weights

    def __repr__(self):
        return f"TermVector({self.weights!r})"


def term_vector(text: str, idf: dict[str, float] | None = None) -> TermVector:
    """Case-folded unigram counts, optionally reweighted by an idf table.

    Terms missing from the idf table get weight 0 and are dropped.
    """
    counts = Counter(word_tokens(text))
    if idf is None:
        return TermVector(counts)
    weights = {}
    for term, c in counts.items():
        w = c * idf.get(term, 0.0)
        if w != 0.0:
            weights[term] = w
    return TermVector(weights)


def build_idf(texts) -> dict[str, float]:
    """idf(term) = ln(N / df) over case-folded unigram presence.

    Raises ValueError on an empty collection.
    """
    df: Counter = Counter()
    n = 0
    for text in texts:
        n += 1
        df.update(set(word_tokens(text)))
    if n == 0:
        raise ValueError("idf requires at least one document")
    return {term: math.log(n / d) for term, d in df.items()}


def save_idf(path, idf: dict[str, float]) -> None:
    """Write an idf table as term<TAB>value lines, terms sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for term in sorted(idf):
            fh.write(f"{term}\t{idf[term]!r}\n")


def load_idf(path) -> dict[str, float]:
    idf = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                term, value = line.split("\t")
                idf[term] = float(value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed idf line") from exc
    return idf


def jaccard(a, b) -> float:
    """|A & B| / |A | B| on sets; both empty -> 0.0."""
    a = set(a)
    b = set(b)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def cosine(u: TermVector, v: TermVector) -> float:
    """Cosine similarity between sparse vectors; any zero vector -> 0.0."""
    if u.norm == 0.0 or v.norm == 0.0:
        return 0.0
    small, big = (u.weights, v.weights) if len(u.weights) <= len(v.weights) else (v.weights, u.weights)
    dot = 0.0
    for term, w in small.items():
        other = big.get(term)
        if other is not None:
            dot += w * other
    return dot / (u.norm * v.norm)


@dataclass(frozen=True)
class LanguageModel:
    """Unigram model interpolated against a uniform background.

    p(w) = (1 - beta) * tf(w) / len + beta / |V| for every w in the supplied
    vocabulary. With beta > 0 every probability is strictly positive.
    """

    probs: dict[str, float]
    beta: float

    def prob(self, term: str) -> float:
        return self.probs[term]

    def vocabulary(self) -> frozenset:
        return frozenset(self.probs)


def language_model(tokens, vocabulary, beta: float = 0.1) -> LanguageModel:
    """Build a smoothed unigram model over an explicit vocabulary.

    The vocabulary is normally the union of the token sets being compared.
    Tokens outside the vocabulary are ignored. Raises ValueError when no
    usable tokens remain or the vocabulary is empty.
    """
    vocab = set(vocabulary)
    if not vocab:
        raise ValueError("language model requires a non-empty vocabulary")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be within [0, 1], got {beta}")
    counts = Counter(t for t in tokens if t in vocab)
    length = sum(counts.values())
    if length == 0:
        raise ValueError("language model requires at least one in-vocabulary token")
    background = beta / len(vocab)
    scale = (1.0 - beta) / length
    probs = {term: counts.get(term, 0) * scale + background for term in vocab}
    return LanguageModel(probs=probs, beta=beta)


def kl_divergence(p: LanguageModel, q: LanguageModel) -> float:
    """Kullback-Leibler divergence KL(P || Q) over a shared vocabulary.

    Terms with p = 0 contribute nothing. Raises ValueError when the
    vocabularies differ or q = 0 where p > 0.
    """
    if set(p.probs) != set(q.probs):
        raise ValueError("KL divergence requires identical vocabularies")
    total = 0.0
    for term, pw in p.probs.items():
        if pw == 0.0:
            continue
        qw = q.probs[term]
        if qw <= 0.0:
            raise ValueError(f"KL divergence undefined: q({term!r}) = 0 while p > 0")
        total += pw * math.log(pw / qw)
    return total


# ---------------------------------------------------------------------------
# Fast sparse-count profiles for the feature-extraction hot loops. These are
# numerically identical to the LanguageModel / kl_divergence pair above
# (cross-checked by tests) but operate on integer term ids and numpy arrays.


class TermRegistry:
    """Assigns stable integer ids to terms in first-seen order."""

    __slots__ = ("ids",)

    def __init__(self):
        self.ids: dict[str, int] = {}

    def id_of(self, term: str) -> int:
        i = self.ids.get(term)
        if i is None:
            i = len(self.ids)
            self.ids[term] = i
        return i

    def profile(self, tokens) -> "CountProfile":
        counts = Counter(tokens)
        ids = np.fromiter((self.id_of(t) for t in counts), dtype=np.int64, count=len(counts))
        vals = np.fromiter(counts.values(), dtype=np.float64, count=len(counts))
        order = np.argsort(ids)
        return CountProfile(ids[order], vals[order])


class CountProfile:
    """Sorted unique term ids with their counts."""

    __slots__ = ("ids", "counts", "length")

    def __init__(self, ids, counts):
        self.ids = ids
        self.counts = counts
        self.length = float(counts.sum())


def kl_smoothed(p: CountProfile, q: CountProfile, beta: float = 0.1) -> float:
    """KL(P || Q) with both models smoothed over the union vocabulary."""
    if p.length == 0 or q.length == 0:
        raise ValueError("KL divergence requires non-empty token profiles")
    ids = np.union1d(p.ids, q.ids)
    v = ids.size
    pc = np.zeros(v)
    qc = np.zeros(v)
    pc[np.searchsorted(ids, p.ids)] = p.counts
    qc[np.searchsorted(ids, q.ids)] = q.counts
    background = beta / v
    pp = (1.0 - beta) * pc / p.length + background
    qp = (1.0 - beta) * qc / q.length + background
    mask = pp > 0.0
    if np.any(qp[mask] <= 0.0):
        raise ValueError("KL divergence undefined: q = 0 where p > 0")
    return float(np.sum(pp[mask] * np.log(pp[mask] / qp[mask])))
