"""Parse PMC JATS XML into :class:`Article` objects.

Only articles whose abstract is split into at least two titled ``<sec>``
elements are accepted. Body sections are taken at top-level granularity:
nested sub-sections are flattened into their top-level parent, and figures,
tables, reference lists and math are dropped entirely.
"""

from __future__ import annotations

import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from structsum.text import clean_text, tokenize

log = logging.getLogger(__name__)

__all__ = [
    "Article",
    "IngestError",
    "MalformedXml",
    "MissingBody",
    "RawSection",
    "UnstructuredAbstract",
    "iter_xml_files",
    "parse_article",
    "parse_file",
    "tokenize",
]

# Elements whose whole subtree is discarded (their tail text is kept).
DROPPED = frozenset(
    {
        "fig",
        "fig-group",
        "table-wrap",
        "table-wrap-group",
        "table",
        "ref-list",
        "disp-formula",
        "disp-formula-group",
        "inline-formula",
        "math",
        "tex-math",
        "graphic",
        "inline-graphic",
        "media",
        "supplementary-material",
        "alternatives",
        "chem-struct-wrap",
        "fn-group",
        "glossary",
    }
)
# Structural children of a section that are never paragraph text.
_SKIPPED_IN_SEC = frozenset({"title", "label", "sec-meta"})


class IngestError(Exception):
    """Base class for articles that cannot enter the corpus."""

    reason = "error"


class MalformedXml(IngestError):
    reason = "malformed_xml"


class UnstructuredAbstract(IngestError):
    reason = "unstructured_abstract"


class MissingBody(IngestError):
    reason = "missing_body"


@dataclass(frozen=True)
class RawSection:
    header: str
    paragraphs: tuple[str, ...]

    def tokens(self) -> list[str]:
        out: list[str] = []
        for para in self.paragraphs:
            out.extend(tokenize(para))
        return out


@dataclass(frozen=True)
class Article:
    pmcid: str
    title: str
    abstract_sections: tuple[RawSection, ...]
    body_sections: tuple[RawSection, ...] = field(default=())


def _local(tag) -> str:
    if not isinstance(tag, str):
        # comments and processing instructions
        return ""
    return tag.rsplit("}", 1)[-1]


def _dropped(el: ET.Element) -> bool:
    tag = _local(el.tag)
    if not tag or tag in DROPPED:
        return True
    # citation markers ("[12]") point into the reference list
    return tag == "xref" and el.get("ref-type") == "bibr"


def _collect_text(el: ET.Element, parts: list[str]) -> None:
    if el.text:
        parts.append(el.text)
    for child in el:
        if not _dropped(child):
            _collect_text(child, parts)
        if child.tail:
            parts.append(child.tail)


def element_text(el: ET.Element) -> str:
    """Markup-stripped, whitespace-normalized text of ``el``."""
    parts: list[str] = []
    _collect_text(el, parts)
    return clean_text("".join(parts))


def _section_paragraphs(sec: ET.Element) -> list[str]:
    paras: list[str] = []

    def walk(el: ET.Element) -> None:
        for child in el:
            tag = _local(child.tag)
            if _dropped(child) or tag in _SKIPPED_IN_SEC:
                continue
            if tag == "p":
                text = element_text(child)
                if text:
                    paras.append(text)
            else:
                walk(child)

    walk(sec)
    return paras


def _section(sec: ET.Element) -> RawSection | None:
    title_el = sec.find("title")
    header = element_text(title_el) if title_el is not None else ""
    paras = _section_paragraphs(sec)
    if not paras:
        return None
    return RawSection(header=header, paragraphs=tuple(paras))


def _find_pmcid(meta: ET.Element | None) -> str:
    if meta is None:
        return ""
    for art_id in meta.findall("article-id"):
        kind = art_id.get("pub-id-type", "")
        if kind in ("pmc", "pmcid"):
            value = clean_text(art_id.text or "")
            if value:
                return value if value.upper().startswith("PMC") else f"PMC{value}"
    return ""


def _pick_abstract(meta: ET.Element) -> ET.Element | None:
    abstracts = meta.findall("abstract")
    for ab in abstracts:
        if ab.get("abstract-type") is None:
            return ab
    return abstracts[0] if abstracts else None


def parse_article(xml: bytes | str, default_pmcid: str | None = None) -> Article:
    """Parse one JATS document.

    ``default_pmcid`` is used when the document carries no PMC article id
    (e.g. the file stem of a batch input).

    Raises :class:`MalformedXml`, :class:`UnstructuredAbstract` or
    :class:`MissingBody`.
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc

    article_el = root if _local(root.tag) == "article" else root.find(".//article")
    if article_el is None:
        raise MalformedXml("no <article> element")

    meta = article_el.find("front/article-meta")
    pmcid = _find_pmcid(meta) or (default_pmcid or "")
    if not pmcid:
        raise MalformedXml("no PMC identifier")

    title = ""
    if meta is not None:
        title_el = meta.find("title-group/article-title")
        if title_el is not None:
            title = element_text(title_el)

    abstract_el = _pick_abstract(meta) if meta is not None else None
    abstract_sections = []
    if abstract_el is not None:
        for sec in abstract_el.findall("sec"):
            section = _section(sec)
            if section is not None and section.header:
                abstract_sections.append(section)
    if len(abstract_sections) < 2:
        raise UnstructuredAbstract(
            f"{pmcid}: abstract has {len(abstract_sections)} titled section(s)"
        )

    body_sections = []
    body_el = article_el.find("body")
    if body_el is not None:
        for sec in body_el.findall("sec"):
            section = _section(sec)
            if section is not None:
                body_sections.append(section)
    if not body_sections:
        raise MissingBody(f"{pmcid}: no body sections")

    return Article(
        pmcid=pmcid,
        title=title,
        abstract_sections=tuple(abstract_sections),
        body_sections=tuple(body_sections),
    )


def parse_file(path: str | os.PathLike) -> Article:
    path = Path(path)
    return parse_article(path.read_bytes(), default_pmcid=path.stem)


def iter_xml_files(root: str | os.PathLike) -> Iterator[Path]:
    """Yield ``*.xml``/``*.nxml`` files under ``root`` in sorted order."""
    root = Path(root)
    found = [
        p
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in (".xml", ".nxml")
    ]
    yield from sorted(found)
