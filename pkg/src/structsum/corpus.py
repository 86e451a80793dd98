"""Flat and per-section training corpora, truncation curricula and statistics.

A *flat* example concatenates the selected body sections, each capped at
``floor(L / n)`` words, and pairs the result with the concatenation of the
matching abstract sections. A *SUSIE* example pairs one section type of the
body with the same section type of the abstract.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from structsum.sections import AnnotatedSection, SectionType, StructuredArticle
from structsum.text import detokenize, tokenize

WHOLE = "whole"
Label = Union[SectionType, str]  # a SectionType, or WHOLE for flat examples

DEFAULT_SECTIONS = (SectionType.INTRODUCTION, SectionType.METHODS, SectionType.CONCLUSION)
DEFAULT_SCHEDULE = ((50, 10), (100, 20), (200, 40), (300, 60), (400, 80), (500, 100))


class EmptyYield(ValueError):
    """No selected section type qualifies for this article."""


class Method(str, enum.Enum):
    FLAT = "flat"
    SUSIE = "susie"

    def __str__(self) -> str:
        return self.value


def label_str(label: Label) -> str:
    return label.value if isinstance(label, SectionType) else str(label)


def parse_label(value: str) -> Label:
    return WHOLE if value == WHOLE else SectionType(value)


@dataclass(frozen=True)
class BuildConfig:
    selected_types: tuple[SectionType, ...] = DEFAULT_SECTIONS
    flat_source_budget: int = 500
    flat_summary_budget: int = 100
    susie_source_budget: int = 500
    susie_summary_budget: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected_types", tuple(self.selected_types))
        if not self.selected_types:
            raise ValueError("selected_types must not be empty")
        if len(set(self.selected_types)) != len(self.selected_types):
            raise ValueError("selected_types contains duplicates")
        for name in (
            "flat_source_budget",
            "flat_summary_budget",
            "susie_source_budget",
            "susie_summary_budget",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class TrainingExample:
    pmcid: str
    method: Method
    section_type: Label
    source_tokens: tuple[str, ...]
    reference_tokens: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "pmcid": self.pmcid,
            "method": self.method.value,
            "section_type": label_str(self.section_type),
            "source": detokenize(list(self.source_tokens)),
            "reference": detokenize(list(self.reference_tokens)),
        }

    @classmethod
    def from_record(cls, rec: dict) -> TrainingExample:
        return cls(
            pmcid=rec["pmcid"],
            method=Method(rec["method"]),
            section_type=parse_label(rec["section_type"]),
            source_tokens=tuple(tokenize(rec["source"])),
            reference_tokens=tuple(tokenize(rec["reference"])),
        )


@dataclass(frozen=True, order=True)
class CurriculumStage:
    max_source: int
    max_summary: int

    def __post_init__(self) -> None:
        if self.max_source <= 0 or self.max_summary <= 0:
            raise ValueError("curriculum limits must be positive")


def validate_schedule(stages: Sequence[CurriculumStage]) -> None:
    for prev, cur in zip(stages, stages[1:]):
        if not (cur.max_source > prev.max_source and cur.max_summary > prev.max_summary):
            raise ValueError(f"curriculum stages must strictly increase: {prev} -> {cur}")


def default_schedule() -> list[CurriculumStage]:
    return [CurriculumStage(s, r) for s, r in DEFAULT_SCHEDULE]


# -- example construction ----------------------------------------------------


def group_by_type(sections: Iterable[AnnotatedSection]) -> dict[SectionType, list[str]]:
    """Concatenate same-type section tokens in document order."""
    grouped: dict[SectionType, list[str]] = {}
    for sec in sections:
        if sec.tokens:
            grouped.setdefault(sec.section_type, []).extend(sec.tokens)
    return grouped


def paired_types(article: StructuredArticle, cfg: BuildConfig) -> list[SectionType]:
    body = group_by_type(article.body)
    abstract = group_by_type(article.abstract)
    return [t for t in cfg.selected_types if t in body and t in abstract]


def build_susie_examples(article: StructuredArticle, cfg: BuildConfig) -> list[TrainingExample]:
    body = group_by_type(article.body)
    abstract = group_by_type(article.abstract)
    examples = []
    for t in cfg.selected_types:
        if t in body and t in abstract:
            examples.append(
                TrainingExample(
                    pmcid=article.pmcid,
                    method=Method.SUSIE,
                    section_type=t,
                    source_tokens=tuple(body[t][: cfg.susie_source_budget]),
                    reference_tokens=tuple(abstract[t][: cfg.susie_summary_budget]),
                )
            )
    if not examples:
        raise EmptyYield(f"{article.pmcid}: no selected section type on both sides")
    return examples


def flat_source(
    body: dict[SectionType, list[str]], types: Sequence[SectionType], budget: int
) -> list[str]:
    """Concatenate ``types`` in order, each truncated to ``budget // len(types)``."""
    if not types:
        raise EmptyYield("no qualifying sections")
    cap = budget // len(types)
    out: list[str] = []
    for t in types:
        out.extend(body[t][:cap])
    return out


def build_flat_example(article: StructuredArticle, cfg: BuildConfig) -> TrainingExample:
    body = group_by_type(article.body)
    abstract = group_by_type(article.abstract)
    types = [t for t in cfg.selected_types if t in body and t in abstract]
    if not types:
        raise EmptyYield(f"{article.pmcid}: no selected section type on both sides")
    reference: list[str] = []
    for t in types:
        reference.extend(abstract[t])
    return TrainingExample(
        pmcid=article.pmcid,
        method=Method.FLAT,
        section_type=WHOLE,
        source_tokens=tuple(flat_source(body, types, cfg.flat_source_budget)),
        reference_tokens=tuple(reference[: cfg.flat_summary_budget]),
    )


def apply_curriculum(example: TrainingExample, stage: CurriculumStage) -> TrainingExample:
    return dataclasses.replace(
        example,
        source_tokens=example.source_tokens[: stage.max_source],
        reference_tokens=example.reference_tokens[: stage.max_summary],
    )


@dataclass
class BuildCounters:
    """Bookkeeping for sections and articles that produce no example."""

    articles: int = 0
    skipped_articles: int = 0
    other_sections: int = 0
    unselected_sections: int = 0
    unpaired_sections: int = 0
    total_sections: int = 0

    def merge(self, other: BuildCounters) -> BuildCounters:
        return BuildCounters(
            *(getattr(self, f.name) + getattr(other, f.name) for f in dataclasses.fields(self))
        )

    @property
    def dropped_rate(self) -> float | None:
        if not self.total_sections:
            return None
        dropped = self.other_sections + self.unselected_sections + self.unpaired_sections
        return dropped / self.total_sections


def build_examples(
    articles: Iterable[StructuredArticle], cfg: BuildConfig, method: Method
) -> tuple[list[TrainingExample], BuildCounters]:
    """Build one method's corpus over many articles, skipping empty yields."""
    examples: list[TrainingExample] = []
    counters = BuildCounters()
    for article in articles:
        counters.articles += 1
        body = group_by_type(article.body)
        abstract = group_by_type(article.abstract)
        for sec in (*article.body, *article.abstract):
            counters.total_sections += 1
            if sec.section_type is SectionType.OTHER:
                counters.other_sections += 1
            elif sec.section_type not in cfg.selected_types:
                counters.unselected_sections += 1
            elif sec.section_type not in body or sec.section_type not in abstract:
                counters.unpaired_sections += 1
        try:
            if method is Method.FLAT:
                examples.append(build_flat_example(article, cfg))
            else:
                examples.extend(build_susie_examples(article, cfg))
        except EmptyYield:
            counters.skipped_articles += 1
    return examples, counters


# -- splitting ---------------------------------------------------------------


def _unit_hash(pmcid: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}\x00{pmcid}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_corpus(
    pmcids: Iterable[str], ratios: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0
) -> tuple[list[str], list[str], list[str]]:
    """Deterministically partition ids into train/validation/test.

    Each id goes to a bucket by a hash of ``(seed, pmcid)``, so assignment
    does not depend on input order or on the other ids present.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative fractions")
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError("ratios must sum to 1")
    cut1 = ratios[0]
    cut2 = ratios[0] + ratios[1]
    train, val, test = [], [], []
    for pmcid in pmcids:
        u = _unit_hash(pmcid, seed)
        if u < cut1:
            train.append(pmcid)
        elif u < cut2 or ratios[2] == 0:
            val.append(pmcid)
        else:
            test.append(pmcid)
    return train, val, test


# -- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    """Exact (count, sum, sum of squares) of integer lengths; merges associatively."""

    n: int = 0
    total: int = 0
    squares: int = 0

    @classmethod
    def of(cls, values: Iterable[int]) -> Moments:
        n = total = squares = 0
        for v in values:
            n += 1
            total += v
            squares += v * v
        return cls(n, total, squares)

    def __add__(self, other: Moments) -> Moments:
        return Moments(self.n + other.n, self.total + other.total, self.squares + other.squares)

    @property
    def mean(self) -> float | None:
        return None if self.n == 0 else float(Fraction(self.total, self.n))

    @property
    def std(self) -> float | None:
        """Population standard deviation."""
        if self.n == 0:
            return None
        var = Fraction(self.squares, self.n) - Fraction(self.total, self.n) ** 2
        return math.sqrt(var)


@dataclass(frozen=True)
class TypeStats:
    count: int
    source: Moments
    reference: Moments


@dataclass(frozen=True)
class CorpusStats:
    per_type: dict[str, TypeStats]
    article_count: int
    example_count: int
    source: Moments = field(default_factory=Moments)
    reference: Moments = field(default_factory=Moments)

    @property
    def mean_source_length(self) -> float | None:
        return self.source.mean

    @property
    def mean_summary_length(self) -> float | None:
        return self.reference.mean

    @property
    def examples_per_article(self) -> float | None:
        return None if not self.article_count else self.example_count / self.article_count

    def to_dict(self) -> dict:
        def r2(x):
            return None if x is None else round(x, 2)

        return {
            "articles": self.article_count,
            "examples": self.example_count,
            "examples_per_article": r2(self.examples_per_article),
            "mean_source_length": r2(self.mean_source_length),
            "mean_summary_length": r2(self.mean_summary_length),
            "per_type": {
                name: {
                    "count": ts.count,
                    "source_mean": r2(ts.source.mean),
                    "source_std": r2(ts.source.std),
                    "abstract_mean": r2(ts.reference.mean),
                    "abstract_std": r2(ts.reference.std),
                }
                for name, ts in self.per_type.items()
            },
        }


def compute_stats(examples: Iterable[TrainingExample]) -> CorpusStats:
    per_type: dict[str, tuple[Moments, Moments]] = {}
    pmcids: set[str] = set()
    n = 0
    for ex in examples:
        n += 1
        pmcids.add(ex.pmcid)
        key = label_str(ex.section_type)
        src, ref = per_type.get(key, (Moments(), Moments()))
        per_type[key] = (
            src + Moments.of([len(ex.source_tokens)]),
            ref + Moments.of([len(ex.reference_tokens)]),
        )
    order = [t.value for t in SectionType] + [WHOLE]
    typed = {
        k: TypeStats(per_type[k][0].n, per_type[k][0], per_type[k][1])
        for k in sorted(per_type, key=order.index)
    }
    src_all = sum((ts.source for ts in typed.values()), Moments())
    ref_all = sum((ts.reference for ts in typed.values()), Moments())
    return CorpusStats(
        per_type=typed,
        article_count=len(pmcids),
        example_count=n,
        source=src_all,
        reference=ref_all,
    )


def _fmt(x: float | int | None, decimals: int = 2) -> str:
    if x is None:
        return "-"
    if isinstance(x, int):
        return f"{x:,}"
    return f"{x:,.{decimals}f}"


def render_section_table(stats: CorpusStats) -> str:
    """Per-section-type source/abstract length table."""
    rows = [
        (
            name,
            _fmt(ts.count),
            _fmt(ts.source.mean),
            _fmt(ts.source.std),
            _fmt(ts.reference.mean),
            _fmt(ts.reference.std),
        )
        for name, ts in stats.per_type.items()
    ]
    head1 = ("", "", "Source length", "", "Abstract length", "")
    head2 = ("section type", "count", "mean", "std", "mean", "std")
    return _aligned([head1, head2, *rows], left_cols=1)


def render_method_table(by_method: dict[str, CorpusStats]) -> str:
    """Training-set summary with one column per method."""
    names = list(by_method)
    lines = [
        ("", *names),
        ("# articles", *(_fmt(by_method[m].article_count) for m in names)),
        ("# examples", *(_fmt(by_method[m].example_count) for m in names)),
        ("examples per article", *(_fmt(by_method[m].examples_per_article) for m in names)),
        ("avg. source length (words)", *(_fmt(by_method[m].mean_source_length) for m in names)),
        ("avg. summary length (words)", *(_fmt(by_method[m].mean_summary_length) for m in names)),
    ]
    return _aligned(lines, left_cols=1)


def _aligned(rows: Sequence[Sequence[str]], left_cols: int = 1) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for r in rows:
        cells = [
            c.ljust(w) if i < left_cols else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))
        ]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out)


# -- serialization -----------------------------------------------------------


def write_examples(path: str | os.PathLike, examples: Iterable[TrainingExample]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_record(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_examples(path: str | os.PathLike) -> Iterator[TrainingExample]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield TrainingExample.from_record(json.loads(line))


def corpus_path(directory: str | os.PathLike, split: str, method: Method) -> Path:
    return Path(directory) / f"{split}.{method.value}.jsonl"
