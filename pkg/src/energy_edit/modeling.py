"""Adapter interfaces and deterministic toy models.

Three adapter roles connect the pipeline to models: a constraint scorer (logit
per text, with gradient/attention introspection), a mask filler (per-slot
distributions over its vocabulary), and a causal LM (per-token conditional
log-probabilities for fluency). Real pretrained models can be wrapped behind
the same protocols; the toys here are exact, seeded, and fast enough to back
the full oracle test suite on one CPU core.

The toy scorer and the toy mask filler deliberately use different
segmentations (character pieces vs whitespace words) so that span mapping
between token spaces is exercised on every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .energy import sigmoid
from .errors import ContractError
from .tokenization import (
    TokenizedView,
    piece_tokenize,
    stable_token_id,
    whitespace_tokenize,
)

__all__ = [
    "AdapterCapabilities",
    "ScorerAdapter",
    "MaskFillerAdapter",
    "CausalLMAdapter",
    "TokenEmbedder",
    "TextClassifier",
    "AdapterBundle",
    "LexiconScorer",
    "CountMaskFiller",
    "NgramCausalLM",
    "StaticWordEmbedder",
    "ScoreProbabilityClassifier",
    "toy_lexicon_scorer",
    "toy_mask_filler",
    "toy_causal_lm",
]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


@dataclass(frozen=True)
class AdapterCapabilities:
    """What an adapter can do beyond plain scoring."""

    grad: bool = False
    attn: bool = False
    concurrent_safe: bool = True


@runtime_checkable
class ScorerAdapter(Protocol):
    """Constraint scorer: text -> logit, with optional introspection.

    ``score_batch`` returns the raw logit g per text (higher = more satisfied;
    the energy layer applies the sigmoid squash). ``embedding_gradients``
    returns the gradient of the squashed energy with respect to each input
    token embedding, aligned 1:1 with ``tokenize``'s tokens.
    """

    model_id: str
    capabilities: AdapterCapabilities

    def tokenize(self, text: str) -> TokenizedView: ...

    def score_batch(self, texts: Sequence[str]) -> np.ndarray: ...

    def embedding_gradients(self, text: str) -> np.ndarray: ...

    def attention_maps(self, text: str) -> np.ndarray: ...


@runtime_checkable
class MaskFillerAdapter(Protocol):
    """Bidirectional mask filler: per-slot distributions over its vocabulary."""

    model_id: str
    mask_token: str
    capabilities: AdapterCapabilities

    def tokenize(self, text: str) -> TokenizedView: ...

    def fill(self, tokens: Sequence[str], slots: Sequence[int]) -> list[dict[str, float]]: ...

    def token_id(self, token: str) -> int: ...


@runtime_checkable
class CausalLMAdapter(Protocol):
    """Left-to-right LM exposing per-token conditional log-probabilities."""

    model_id: str
    capabilities: AdapterCapabilities

    def tokenize(self, text: str) -> TokenizedView: ...

    def token_logprobs(self, text: str) -> np.ndarray: ...


@runtime_checkable
class TokenEmbedder(Protocol):
    """Static token embeddings for content-preservation scoring."""

    model_id: str

    def embed(self, text: str) -> tuple[TokenizedView, np.ndarray]: ...


@runtime_checkable
class TextClassifier(Protocol):
    """External judge: probability in [0, 1] per text."""

    model_id: str

    def score_batch(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass
class AdapterBundle:
    """All adapters a run needs, keyed for term binding."""

    scorers: dict[str, ScorerAdapter]
    mask_filler: MaskFillerAdapter | None = None
    causal_lm: CausalLMAdapter | None = None

    def scorer_for(self, binding: str) -> ScorerAdapter:
        try:
            return self.scorers[binding]
        except KeyError:
            raise ContractError(f"no scorer adapter bound for id '{binding}'") from None


def _orthogonal_noise(rng: np.random.Generator, w: np.ndarray) -> np.ndarray:
    raw = rng.normal(size=w.shape)
    return raw - (raw @ w) / (w @ w) * w


class LexiconScorer:
    """Differentiable bag-of-embeddings scorer driven by a word lexicon.

    Words carry signed weights (negative = violates the constraint). Each word
    is split into character pieces of at most ``piece_len``; a word's weight is
    shared equally among its pieces. Embeddings are constructed so that the
    projection u_t = w . e(token_t) recovers the piece weight exactly, and the
    logit is

        g = bias + sum_t u_t * |u_t|

    The signed-square transform keeps the sign of each contribution while
    making the per-token gradient scale with |u_t|, so gradient-norm saliency
    has signal (a plain linear sum has an identical gradient at every
    position). All gradients are analytic; ``energy_from_embeddings`` exposes
    the same computation for finite-difference checks.
    """

    def __init__(
        self,
        lexicon: Mapping[str, float],
        embedding_dim: int = 8,
        seed: int = 0,
        bias: float = 0.0,
        piece_len: int | None = 3,
        n_layers: int = 2,
        n_heads: int = 2,
        model_id: str | None = None,
    ):
        if not lexicon and lexicon != {}:
            raise ContractError("lexicon must be a mapping")
        if embedding_dim < 2:
            raise ContractError("embedding_dim must be >= 2")
        self.embedding_dim = embedding_dim
        self.seed = seed
        self.bias = float(bias)
        self.piece_len = piece_len
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.model_id = model_id or f"lexicon-scorer:{seed}"
        self.capabilities = AdapterCapabilities(
            grad=True, attn=n_layers >= 1, concurrent_safe=True
        )

        rng = np.random.default_rng(seed)
        w = rng.normal(size=embedding_dim)
        w[0] += math.copysign(1.0, w[0])  # keep the projection away from zero
        self._w = w
        self._proj = np.stack(
            [
                [rng.normal(size=(embedding_dim, embedding_dim)) for _ in range(n_heads)]
                for _ in range(n_layers)
            ]
        ) if n_layers else np.zeros((0, n_heads, embedding_dim, embedding_dim))

        self._piece_weights: dict[str, float] = {}
        for word, weight in lexicon.items():
            pieces = self._split(word)
            share = float(weight) / len(pieces)
            for piece in pieces:
                self._piece_weights[piece] = self._piece_weights.get(piece, 0.0) + share
        self._emb_cache: dict[str, np.ndarray] = {}

    def _split(self, word: str) -> list[str]:
        if self.piece_len is None:
            return [word]
        return [word[i : i + self.piece_len] for i in range(0, len(word), self.piece_len)]

    def tokenize(self, text: str) -> TokenizedView:
        if self.piece_len is None:
            return whitespace_tokenize(text, self.model_id)
        return piece_tokenize(text, self.model_id, self.piece_len)

    def embedding(self, token: str) -> np.ndarray:
        cached = self._emb_cache.get(token)
        if cached is not None:
            return cached
        target = self._piece_weights.get(token, 0.0)
        rng = np.random.default_rng([self.seed, stable_token_id(token)])
        noise = _orthogonal_noise(rng, self._w)
        emb = target / (self._w @ self._w) * self._w + noise
        self._emb_cache[token] = emb  # benign race: value is deterministic
        return emb

    def embeddings(self, text: str) -> tuple[TokenizedView, np.ndarray]:
        view = self.tokenize(text)
        if not len(view):
            return view, np.zeros((0, self.embedding_dim))
        return view, np.stack([self.embedding(tok) for tok in view.tokens])

    def logit_from_embeddings(self, emb: np.ndarray) -> float:
        u = emb @ self._w if len(emb) else np.zeros(0)
        return self.bias + float(np.sum(u * np.abs(u)))

    def energy_from_embeddings(self, emb: np.ndarray) -> float:
        """Energy -log sigmoid(g) as a function of raw embeddings."""
        g = self.logit_from_embeddings(emb)
        return float(np.logaddexp(0.0, -g))

    def score(self, text: str) -> float:
        _, emb = self.embeddings(text)
        return self.logit_from_embeddings(emb)

    def score_batch(self, texts: Sequence[str]) -> np.ndarray:
        return np.array([self.score(t) for t in texts], dtype=float)

    def embedding_gradients(self, text: str) -> np.ndarray:
        view, emb = self.embeddings(text)
        if not len(view):
            return np.zeros((0, self.embedding_dim))
        u = emb @ self._w
        g = self.bias + float(np.sum(u * np.abs(u)))
        # d(-log sigmoid(g))/dg = sigmoid(g) - 1;  dg/de_t = 2|u_t| w
        df_dg = sigmoid(g) - 1.0
        return df_dg * 2.0 * np.abs(u)[:, None] * self._w[None, :]

    def attention_maps(self, text: str) -> np.ndarray:
        view, emb = self.embeddings(text)
        n = len(view)
        if n == 0:
            return np.zeros((self.n_layers, self.n_heads, 0, 0))
        maps = np.zeros((self.n_layers, self.n_heads, n, n))
        scale = math.sqrt(self.embedding_dim)
        for layer in range(self.n_layers):
            for head in range(self.n_heads):
                logits = emb @ self._proj[layer, head] @ emb.T / scale
                shifted = logits - logits.max(axis=1, keepdims=True)
                weights = np.exp(shifted)
                maps[layer, head] = weights / weights.sum(axis=1, keepdims=True)
        return maps


class CountMaskFiller:
    """Count-based mask filler over whitespace tokens.

    Fill distributions condition on the two nearest *unmasked* neighbors of a
    slot (left, right), backing off to the corpus unigram distribution when
    the context pair was never observed. Because masked positions are skipped
    when finding neighbors, filling several slots at once is genuinely
    different from filling them one at a time.
    """

    def __init__(self, corpus: Sequence[str], model_id: str = "count-filler", mask_token: str = "<mask>"):
        if not corpus:
            raise ContractError("corpus must be nonempty")
        self.model_id = model_id
        self.mask_token = mask_token
        self.capabilities = AdapterCapabilities(concurrent_safe=True)

        pair_counts: dict[tuple[str, str], dict[str, int]] = {}
        unigram: dict[str, int] = {}
        for sentence in corpus:
            tokens = sentence.split()
            for i, tok in enumerate(tokens):
                left = tokens[i - 1] if i > 0 else BOS
                right = tokens[i + 1] if i + 1 < len(tokens) else EOS
                slot = pair_counts.setdefault((left, right), {})
                slot[tok] = slot.get(tok, 0) + 1
                unigram[tok] = unigram.get(tok, 0) + 1
        self._pair_counts = pair_counts
        self._unigram = unigram
        self._vocab = {tok: i for i, tok in enumerate(sorted(unigram))}

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return tuple(sorted(self._vocab, key=self._vocab.get))

    def token_id(self, token: str) -> int:
        idx = self._vocab.get(token)
        if idx is not None:
            return idx
        return 2**32 + stable_token_id(token)

    def tokenize(self, text: str) -> TokenizedView:
        base = whitespace_tokenize(text, self.model_id)
        ids = tuple(self.token_id(tok) for tok in base.tokens)
        return TokenizedView(base.text, ids, base.char_spans, self.model_id)

    def fill(self, tokens: Sequence[str], slots: Sequence[int]) -> list[dict[str, float]]:
        slot_set = set(slots)
        for s in slot_set:
            if not 0 <= s < len(tokens):
                raise ContractError(f"slot {s} out of range for {len(tokens)} tokens")
        out = []
        for s in slots:
            left = BOS
            for j in range(s - 1, -1, -1):
                if j not in slot_set:
                    left = tokens[j]
                    break
            right = EOS
            for j in range(s + 1, len(tokens)):
                if j not in slot_set:
                    right = tokens[j]
                    break
            counts = self._pair_counts.get((left, right)) or self._unigram
            total = sum(counts.values())
            out.append({tok: c / total for tok, c in counts.items()})
        return out


class NgramCausalLM:
    """Add-one-smoothed n-gram LM with exact count-table log-probabilities."""

    def __init__(self, corpus: Sequence[str], order: int = 2, model_id: str = "ngram-lm"):
        if not corpus:
            raise ContractError("corpus must be nonempty")
        if order < 1:
            raise ContractError("order must be >= 1")
        self.model_id = model_id
        self.order = order
        self.capabilities = AdapterCapabilities(concurrent_safe=True)

        counts: dict[tuple[str, ...], dict[str, int]] = {}
        totals: dict[tuple[str, ...], int] = {}
        vocab: set[str] = set()
        pad = (BOS,) * (order - 1)
        for sentence in corpus:
            tokens = tuple(sentence.split())
            vocab.update(tokens)
            padded = pad + tokens
            for i, tok in enumerate(tokens):
                ctx = padded[i : i + order - 1]
                counts.setdefault(ctx, {})
                counts[ctx][tok] = counts[ctx].get(tok, 0) + 1
                totals[ctx] = totals.get(ctx, 0) + 1
        self._counts = counts
        self._totals = totals
        self._vocab = {tok: i for i, tok in enumerate(sorted(vocab))}
        self._n_classes = len(vocab) + 1  # + UNK

    @property
    def vocab_size(self) -> int:
        return len(self._vocab)

    def token_id(self, token: str) -> int:
        idx = self._vocab.get(token)
        return idx if idx is not None else 2**32 + stable_token_id(token)

    def tokenize(self, text: str) -> TokenizedView:
        base = whitespace_tokenize(text, self.model_id)
        ids = tuple(self.token_id(tok) for tok in base.tokens)
        return TokenizedView(base.text, ids, base.char_spans, self.model_id)

    def token_logprobs(self, text: str) -> np.ndarray:
        tokens = [t if t in self._vocab else UNK for t in text.split()]
        pad = (BOS,) * (self.order - 1)
        padded = pad + tuple(tokens)
        out = np.zeros(len(tokens))
        for i, tok in enumerate(tokens):
            ctx = padded[i : i + self.order - 1]
            ctx_counts = self._counts.get(ctx, {})
            num = ctx_counts.get(tok, 0) + 1
            den = self._totals.get(ctx, 0) + self._n_classes
            out[i] = math.log(num / den)
        return out


class StaticWordEmbedder:
    """Seeded static unit vectors per word; whitespace tokenization."""

    def __init__(self, dim: int = 16, seed: int = 0, model_id: str = "static-words"):
        if dim < 2:
            raise ContractError("dim must be >= 2")
        self.dim = dim
        self.seed = seed
        self.model_id = model_id
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, word: str) -> np.ndarray:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        rng = np.random.default_rng([self.seed, stable_token_id(word)])
        v = rng.normal(size=self.dim)
        v /= np.linalg.norm(v)
        self._cache[word] = v
        return v

    def embed(self, text: str) -> tuple[TokenizedView, np.ndarray]:
        view = whitespace_tokenize(text, self.model_id)
        if not len(view):
            return view, np.zeros((0, self.dim))
        return view, np.stack([self.vector(tok) for tok in view.tokens])


class ScoreProbabilityClassifier:
    """Wrap a scorer adapter as an external classifier: p = sigmoid(g)."""

    def __init__(self, scorer: ScorerAdapter, invert: bool = False):
        self._scorer = scorer
        self._invert = invert
        self.model_id = f"prob:{scorer.model_id}"

    def score_batch(self, texts: Sequence[str]) -> np.ndarray:
        p = sigmoid(np.asarray(self._scorer.score_batch(texts), dtype=float))
        return 1.0 - p if self._invert else p


def toy_lexicon_scorer(lexicon: Mapping[str, float], embedding_dim: int = 8, **kwargs) -> LexiconScorer:
    """Build the deterministic lexicon scorer (see LexiconScorer)."""
    return LexiconScorer(lexicon, embedding_dim=embedding_dim, **kwargs)


def toy_mask_filler(corpus: Sequence[str], **kwargs) -> CountMaskFiller:
    """Build the count-based mask filler from a sentence corpus."""
    return CountMaskFiller(corpus, **kwargs)


def toy_causal_lm(corpus: Sequence[str], order: int = 2, **kwargs) -> NgramCausalLM:
    """Build the add-one-smoothed n-gram causal LM from a sentence corpus."""
    return NgramCausalLM(corpus, order=order, **kwargs)
