"""JSON-lines storage for annotated articles and summaries."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Iterator

from structsum.sections import AnnotatedSection, SectionType, StructuredArticle
from structsum.text import detokenize, tokenize

ARTICLES_FILE = "articles.jsonl"
REJECTIONS_FILE = "rejections.tsv"


def _section_record(sec: AnnotatedSection) -> dict:
    return {
        "header": sec.header,
        "section_type": sec.section_type.value,
        "text": detokenize(list(sec.tokens)),
    }


def _section_from(rec: dict) -> AnnotatedSection:
    return AnnotatedSection(
        section_type=SectionType(rec["section_type"]),
        header=rec["header"],
        tokens=tuple(tokenize(rec["text"])),
    )


def article_to_record(article: StructuredArticle) -> dict:
    return {
        "pmcid": article.pmcid,
        "title": article.title,
        "abstract": [_section_record(s) for s in article.abstract],
        "body": [_section_record(s) for s in article.body],
    }


def article_from_record(rec: dict) -> StructuredArticle:
    return StructuredArticle(
        pmcid=rec["pmcid"],
        title=rec.get("title", ""),
        abstract=tuple(_section_from(s) for s in rec["abstract"]),
        body=tuple(_section_from(s) for s in rec["body"]),
    )


def dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False) + "\n"


def write_jsonl(path: str | os.PathLike, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dump_line(rec))
            n += 1
    return n


def read_jsonl(path: str | os.PathLike) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def store_file(store: str | os.PathLike) -> Path:
    """Accept either the store directory or the articles file itself."""
    path = Path(store)
    return path / ARTICLES_FILE if path.is_dir() else path


def read_articles(store: str | os.PathLike) -> list[StructuredArticle]:
    return [article_from_record(r) for r in read_jsonl(store_file(store))]
