"""Word tokenization and token normalization shared by every stage."""

from __future__ import annotations

import re
import unicodedata

_WS = re.compile(r"\s+")


def tokenize(text: str) -> list[str]:
    """Split ``text`` into words: maximal runs of non-whitespace characters.

    Case and attached punctuation are preserved, so
    ``tokenize("Self-harm is common.") == ["Self-harm", "is", "common."]``.
    """
    return text.split()


def detokenize(tokens: list[str]) -> str:
    return " ".join(tokens)


def _is_punct(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] in ("P", "S")


def strip_punct(token: str) -> str:
    """Remove leading and trailing punctuation/symbol characters."""
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def normalize_tokens(tokens: list[str]) -> list[str]:
    """Lowercase, strip surrounding punctuation and drop tokens left empty."""
    out = []
    for tok in tokens:
        tok = strip_punct(tok.lower())
        if tok:
            out.append(tok)
    return out


def clean_text(text: str) -> str:
    """Drop control characters and collapse whitespace to single spaces."""
    chars = []
    for ch in text:
        if ch.isspace():
            chars.append(" ")
        elif unicodedata.category(ch) in ("Cc", "Cf", "Cs", "Co"):
            continue
        else:
            chars.append(ch)
    return _WS.sub(" ", "".join(chars)).strip()
