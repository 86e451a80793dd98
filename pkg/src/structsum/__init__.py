"""Structured (per-section) summarization of scientific articles.

The pipeline parses JATS XML, tags sections by header keywords, builds flat
and per-section corpora, summarizes with pluggable backends and scores the
results with ROUGE-1/2/L F1.
"""

from structsum.text import tokenize
from structsum.jats import Article, RawSection, parse_article
from structsum.sections import (
    DEFAULT_KEYWORD_TABLE,
    AnnotatedSection,
    KeywordTable,
    SectionType,
    StructuredArticle,
    annotate_article,
    annotate_header,
)
from structsum.corpus import (
    WHOLE,
    BuildConfig,
    CorpusStats,
    CurriculumStage,
    Method,
    TrainingExample,
    apply_curriculum,
    build_flat_example,
    build_susie_examples,
    compute_stats,
    split_corpus,
)
from structsum.rouge import RougeScore, EvalReport, evaluate_corpus, rouge_l, rouge_n
from structsum.pipeline import StructuredSummary, compare_methods, summarize_flat, summarize_susie

__version__ = "0.1.0"

__all__ = [
    "Article",
    "AnnotatedSection",
    "BuildConfig",
    "CorpusStats",
    "CurriculumStage",
    "DEFAULT_KEYWORD_TABLE",
    "EvalReport",
    "KeywordTable",
    "Method",
    "RawSection",
    "RougeScore",
    "SectionType",
    "StructuredArticle",
    "StructuredSummary",
    "TrainingExample",
    "WHOLE",
    "annotate_article",
    "annotate_header",
    "apply_curriculum",
    "build_flat_example",
    "build_susie_examples",
    "compare_methods",
    "compute_stats",
    "evaluate_corpus",
    "parse_article",
    "rouge_l",
    "rouge_n",
    "split_corpus",
    "summarize_flat",
    "summarize_susie",
    "tokenize",
]
