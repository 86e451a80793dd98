"""Keyword-based section typing for article bodies and abstracts."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from pathlib import Path

from structsum.jats import Article, RawSection
from structsum.text import strip_punct, tokenize


class SectionType(str, enum.Enum):
    INTRODUCTION = "introduction"
    LITERATURE = "literature"
    METHODS = "methods"
    RESULTS = "results"
    DISCUSSION = "discussion"
    CONCLUSION = "conclusion"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value

    @property
    def heading(self) -> str:
        return self.value.capitalize()


class KeywordTableError(ValueError):
    pass


@dataclass(frozen=True)
class KeywordTable:
    """Ordered ``(SectionType, keywords)`` rows; earlier rows win ties."""

    rows: tuple[tuple[SectionType, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        seen: dict[str, SectionType] = {}
        for section_type, keywords in self.rows:
            if section_type is SectionType.OTHER:
                raise KeywordTableError("'other' is the fallback type and takes no keywords")
            for kw in keywords:
                if kw != kw.lower() or len(kw.split()) != 1 or kw != kw.strip():
                    raise KeywordTableError(f"keyword {kw!r} must be a single lowercase token")
                if kw in seen and seen[kw] is not section_type:
                    raise KeywordTableError(
                        f"keyword {kw!r} listed under both {seen[kw]} and {section_type}"
                    )
                seen[kw] = section_type

    @classmethod
    def from_mapping(cls, mapping) -> KeywordTable:
        return cls(
            tuple((SectionType(t), tuple(kws)) for t, kws in mapping.items())
        )

    @classmethod
    def load(cls, path: str | os.PathLike) -> KeywordTable:
        """Read ``type: kw1, kw2, ...`` lines; ``#`` starts a comment."""
        rows = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, rest = line.partition(":")
            if not sep:
                raise KeywordTableError(f"{path}:{lineno}: expected 'type: keywords'")
            try:
                section_type = SectionType(name.strip().lower())
            except ValueError:
                raise KeywordTableError(
                    f"{path}:{lineno}: unknown section type {name.strip()!r}"
                ) from None
            keywords = tuple(kw.strip() for kw in rest.split(",") if kw.strip())
            rows.append((section_type, keywords))
        return cls(tuple(rows))

    def keywords(self) -> list[str]:
        return [kw for _, kws in self.rows for kw in kws]


DEFAULT_KEYWORD_TABLE = KeywordTable(
    (
        (SectionType.INTRODUCTION, ("introduction", "case")),
        (SectionType.LITERATURE, ("background", "literature", "related")),
        (SectionType.METHODS, ("methods", "method", "techniques", "methodology")),
        (SectionType.RESULTS, ("result", "results", "experimental", "experiments", "experiment")),
        (SectionType.DISCUSSION, ("discussion", "limitations")),
        (SectionType.CONCLUSION, ("conclusion", "conclusions", "concluding")),
    )
)


@dataclass(frozen=True)
class AnnotatedSection:
    section_type: SectionType
    header: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class StructuredArticle:
    pmcid: str
    abstract: tuple[AnnotatedSection, ...]
    body: tuple[AnnotatedSection, ...]
    title: str = ""


def annotate_header(header: str, table: KeywordTable = DEFAULT_KEYWORD_TABLE) -> SectionType:
    """Return the first table row with a keyword equal to some header token.

    >>> annotate_header("Materials and Methods")
    <SectionType.METHODS: 'methods'>
    >>> annotate_header("Acknowledgements")
    <SectionType.OTHER: 'other'>
    """
    words = {strip_punct(tok) for tok in tokenize(header.lower())}
    for section_type, keywords in table.rows:
        if any(kw in words for kw in keywords):
            return section_type
    return SectionType.OTHER


def annotate_section(section: RawSection, table: KeywordTable) -> AnnotatedSection:
    return AnnotatedSection(
        section_type=annotate_header(section.header, table),
        header=section.header,
        tokens=tuple(section.tokens()),
    )


def annotate_article(
    article: Article, table: KeywordTable = DEFAULT_KEYWORD_TABLE
) -> StructuredArticle:
    return StructuredArticle(
        pmcid=article.pmcid,
        title=article.title,
        abstract=tuple(annotate_section(s, table) for s in article.abstract_sections),
        body=tuple(annotate_section(s, table) for s in article.body_sections),
    )


def parse_section_types(text: str) -> list[SectionType]:
    """Parse a comma list such as ``intro,methods,conclusion``.

    Each item may be any unambiguous prefix of a section type name.
    """
    names = [t.value for t in SectionType if t is not SectionType.OTHER]
    out: list[SectionType] = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        matches = [n for n in names if n == item] or [n for n in names if n.startswith(item)]
        if len(matches) != 1:
            raise ValueError(f"unknown or ambiguous section type {item!r}")
        out.append(SectionType(matches[0]))
    return out
