"""Tokenized text views and character-span utilities.

A TokenizedView ties one text to one model's token sequence via character
offsets. All cross-model hand-offs (scorer -> mask filler -> fluency LM) go
through character spans, so no two adapters need to share a vocabulary.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

from .errors import ContractError

__all__ = [
    "TokenizedView",
    "whitespace_tokenize",
    "piece_tokenize",
    "word_span_at",
    "merge_spans",
    "stable_token_id",
]


@dataclass(frozen=True)
class TokenizedView:
    """One text rendered in one model's tokenization.

    char_spans are half-open (start, end) offsets into ``text``, ordered and
    non-overlapping; slicing a span reproduces the token's surface form.
    """

    text: str
    token_ids: tuple[int, ...]
    char_spans: tuple[tuple[int, int], ...]
    model_id: str

    def __post_init__(self):
        if len(self.token_ids) != len(self.char_spans):
            raise ContractError("token_ids and char_spans must align 1:1")
        prev_end = 0
        for start, end in self.char_spans:
            if not (0 <= start < end <= len(self.text)):
                raise ContractError(f"char span ({start}, {end}) out of text bounds")
            if start < prev_end:
                raise ContractError("char spans must be ordered and non-overlapping")
            prev_end = end

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.text[s:e] for s, e in self.char_spans)

    def token_at(self, index: int) -> str:
        s, e = self.char_spans[index]
        return self.text[s:e]


def stable_token_id(token: str) -> int:
    """Deterministic integer id for a token string (stable across processes)."""
    return zlib.crc32(token.encode("utf-8"))


def whitespace_tokenize(text: str, model_id: str) -> TokenizedView:
    """Split into maximal non-whitespace runs with char offsets."""
    spans = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        spans.append((i, j))
        i = j
    ids = tuple(stable_token_id(text[s:e]) for s, e in spans)
    return TokenizedView(text=text, token_ids=ids, char_spans=tuple(spans), model_id=model_id)


def piece_tokenize(text: str, model_id: str, piece_len: int) -> TokenizedView:
    """Split words into fixed-width character pieces (a stand-in subword scheme).

    Each maximal non-whitespace run is chopped left-to-right into chunks of at
    most ``piece_len`` characters, e.g. piece_len=3 renders "moron" as
    ["mor", "on"].
    """
    if piece_len < 1:
        raise ContractError("piece_len must be >= 1")
    spans = []
    for ws, we in whitespace_tokenize(text, model_id).char_spans:
        for start in range(ws, we, piece_len):
            spans.append((start, min(start + piece_len, we)))
    ids = tuple(stable_token_id(text[s:e]) for s, e in spans)
    return TokenizedView(text=text, token_ids=ids, char_spans=tuple(spans), model_id=model_id)


def word_span_at(text: str, pos: int) -> tuple[int, int]:
    """Character span of the whitespace-delimited word containing ``pos``."""
    if pos >= len(text) or text[pos].isspace():
        raise ContractError(f"position {pos} is not inside a word")
    start = pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    end = pos
    while end < len(text) and not text[end].isspace():
        end += 1
    return (start, end)


def merge_spans(spans: list[tuple[int, int]], text: str) -> tuple[tuple[int, int], ...]:
    """Merge overlapping spans and spans separated only by whitespace."""
    if not spans:
        return ()
    ordered = sorted(spans)
    merged = [list(ordered[0])]
    for start, end in ordered[1:]:
        gap = text[merged[-1][1]:start]
        if start <= merged[-1][1] or (gap and gap.isspace()) or not gap:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return tuple((s, e) for s, e in merged)
