"""End-to-end flat and per-section (SUSIE) inference and method comparison."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from structsum.corpus import (
    WHOLE,
    BuildConfig,
    EmptyYield,
    Label,
    Method,
    flat_source,
    group_by_type,
    label_str,
    parse_label,
)
from structsum.rouge import METRICS, EvalReport
from structsum.sections import SectionType, StructuredArticle
from structsum.summarizers.base import DEFAULT_MAX_OUTPUT, SummarizeRequest, Summarizer
from structsum.summarizers.external import BackendError
from structsum.text import detokenize, tokenize

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class StructuredSummary:
    pmcid: str
    method: Method
    parts: tuple[tuple[Label, tuple[str, ...]], ...]
    failed: tuple[Label, ...] = ()

    @property
    def flattened_tokens(self) -> list[str]:
        out: list[str] = []
        for _, tokens in self.parts:
            out.extend(tokens)
        return out

    def to_record(self) -> dict:
        return {
            "pmcid": self.pmcid,
            "method": self.method.value,
            "parts": [
                {"section": label_str(label), "text": detokenize(list(tokens))}
                for label, tokens in self.parts
            ],
            "failed": [label_str(label) for label in self.failed],
        }

    @classmethod
    def from_record(cls, rec: dict) -> StructuredSummary:
        return cls(
            pmcid=rec["pmcid"],
            method=Method(rec["method"]),
            parts=tuple(
                (parse_label(p["section"]), tuple(tokenize(p["text"]))) for p in rec["parts"]
            ),
            failed=tuple(parse_label(x) for x in rec.get("failed", ())),
        )


def render_summary(summary: StructuredSummary) -> str:
    """Plain-text rendering with ``**Section**`` markers before each part."""
    lines = [f"# {summary.pmcid} ({summary.method.value})"]
    for label, tokens in summary.parts:
        text = detokenize(list(tokens))
        if isinstance(label, SectionType):
            lines.append(f"**{label.heading}** {text}".rstrip())
        else:
            lines.append(text)
    return "\n".join(lines)


def reference_for(article: StructuredArticle, cfg: BuildConfig) -> list[str]:
    """Concatenated abstract sections of the selected types, in selected order.

    Flat and SUSIE outputs for an article are always scored against this
    same token list.
    """
    abstract = group_by_type(article.abstract)
    out: list[str] = []
    for t in cfg.selected_types:
        out.extend(abstract.get(t, ()))
    return out


def summarize_susie(
    article: StructuredArticle,
    summarizer: Summarizer,
    cfg: BuildConfig,
    max_output_tokens: int = DEFAULT_MAX_OUTPUT,
) -> StructuredSummary:
    """Summarize each selected body section separately and recombine in order.

    Abstract counterparts are not required. A section whose backend call
    fails becomes an empty part and is listed in ``failed``.
    """
    body = group_by_type(article.body)
    abstract = group_by_type(article.abstract)
    types = [t for t in cfg.selected_types if t in body]
    if not types:
        raise EmptyYield(f"{article.pmcid}: no selected section in body")
    full_reference = tuple(reference_for(article, cfg)) or None
    parts = []
    failed = []
    for t in types:
        request = SummarizeRequest(
            id=f"{article.pmcid}:{t.value}",
            source_tokens=tuple(body[t][: cfg.susie_source_budget]),
            max_output_tokens=max_output_tokens,
            reference_tokens=tuple(abstract[t]) if t in abstract else full_reference,
        )
        try:
            tokens = summarizer.summarize(request).summary_tokens[:max_output_tokens]
        except BackendError as exc:
            log.warning("section %s of %s failed: %s", t.value, article.pmcid, exc)
            tokens = ()
            failed.append(t)
        parts.append((t, tuple(tokens)))
    return StructuredSummary(article.pmcid, Method.SUSIE, tuple(parts), tuple(failed))


def flat_inference_source(article: StructuredArticle, cfg: BuildConfig) -> list[str]:
    body = group_by_type(article.body)
    types = [t for t in cfg.selected_types if t in body]
    if not types:
        raise EmptyYield(f"{article.pmcid}: no selected section in body")
    return flat_source(body, types, cfg.flat_source_budget)


def summarize_flat(
    article: StructuredArticle,
    summarizer: Summarizer,
    cfg: BuildConfig,
    max_output_tokens: int = DEFAULT_MAX_OUTPUT,
) -> StructuredSummary:
    """Summarize the truncated concatenation of the selected sections at once.

    Backend errors propagate.
    """
    request = SummarizeRequest(
        id=f"{article.pmcid}:{WHOLE}",
        source_tokens=tuple(flat_inference_source(article, cfg)),
        max_output_tokens=max_output_tokens,
        reference_tokens=tuple(reference_for(article, cfg)) or None,
    )
    tokens = summarizer.summarize(request).summary_tokens[:max_output_tokens]
    return StructuredSummary(article.pmcid, Method.FLAT, ((WHOLE, tuple(tokens)),))


def summarize(
    article: StructuredArticle,
    summarizer: Summarizer,
    cfg: BuildConfig,
    method: Method,
    max_output_tokens: int = DEFAULT_MAX_OUTPUT,
) -> StructuredSummary:
    fn = summarize_flat if method is Method.FLAT else summarize_susie
    return fn(article, summarizer, cfg, max_output_tokens)


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> Iterator[R]:
    """``map`` over a bounded thread pool; results keep input order."""
    if workers <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, item) for item in items]
        try:
            for fut in futures:
                yield fut.result()
        except BaseException:
            for fut in futures:
                fut.cancel()
            raise


@dataclass
class Outcome:
    summary: StructuredSummary | None
    error: str | None = None


def run_pipeline(
    articles: Sequence[StructuredArticle],
    summarizer: Summarizer,
    cfg: BuildConfig,
    method: Method,
    max_output_tokens: int = DEFAULT_MAX_OUTPUT,
    workers: int = 1,
) -> Iterator[Outcome]:
    """Summarize every article; per-article failures become error outcomes."""

    def one(article: StructuredArticle) -> Outcome:
        try:
            return Outcome(summarize(article, summarizer, cfg, method, max_output_tokens))
        except (BackendError, EmptyYield) as exc:
            log.warning("%s (%s) failed: %s", article.pmcid, method.value, exc)
            return Outcome(None, f"{type(exc).__name__}: {exc}")

    return ordered_map(one, articles, workers)


@dataclass
class MethodResult:
    report: EvalReport = field(default_factory=EvalReport)
    failed_articles: int = 0
    failed_sections: int = 0


@dataclass
class ComparisonRow:
    name: str
    results: dict[Method, MethodResult]


@dataclass
class ComparisonReport:
    """Model x {flat, SUSIE} grid of mean ROUGE F1 scores."""

    rows: list[ComparisonRow]

    def cell(self, name: str, method: Method, metric: str) -> float | None:
        for row in self.rows:
            if row.name == name:
                return row.results[method].report.mean(metric)
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = {}
        for row in self.rows:
            out[row.name] = {
                m.value: {
                    **{
                        metric: (
                            None
                            if row.results[m].report.mean(metric) is None
                            else round(row.results[m].report.mean(metric), 4)
                        )
                        for metric in METRICS
                    },
                    "scored": row.results[m].report.scored,
                    "skipped": row.results[m].report.skipped,
                    "failed_articles": row.results[m].failed_articles,
                    "failed_sections": row.results[m].failed_sections,
                }
                for m in Method
            }
        return out

    def render(self) -> str:
        """Text grid; ``*`` marks the better method per model and metric."""
        name_w = max([len("model")] + [len(r.name) for r in self.rows])
        cell_w = 8
        head1 = " " * name_w + "".join(
            f"  {m.upper() + ' F1':^{2 * cell_w + 1}}" for m in METRICS
        )
        head2 = f"{'model':<{name_w}}" + "".join(
            f"  {'Flat':>{cell_w}} {'SUSIE':>{cell_w}}" for _ in METRICS
        )
        lines = [head1.rstrip(), head2]
        for row in self.rows:
            line = f"{row.name:<{name_w}}"
            for metric in METRICS:
                flat = row.results[Method.FLAT].report.mean(metric)
                susie = row.results[Method.SUSIE].report.mean(metric)
                cells = []
                for value, other in ((flat, susie), (susie, flat)):
                    if value is None:
                        cells.append("-")
                    else:
                        best = other is None or value > other
                        cells.append(f"{value:.4f}" + ("*" if best else ""))
                line += f"  {cells[0]:>{cell_w}} {cells[1]:>{cell_w}}"
            lines.append(line.rstrip())
        return "\n".join(lines)


def compare_methods(
    articles: Sequence[StructuredArticle],
    summarizers: Sequence[Summarizer],
    cfg: BuildConfig,
    max_output_tokens: int = DEFAULT_MAX_OUTPUT,
    workers: int = 1,
) -> ComparisonReport:
    references = [reference_for(a, cfg) for a in articles]
    rows = []
    for summarizer in summarizers:
        results = {}
        for method in Method:
            result = MethodResult()
            outcomes = run_pipeline(articles, summarizer, cfg, method, max_output_tokens, workers)
            for outcome, reference in zip(outcomes, references):
                if outcome.summary is None:
                    result.failed_articles += 1
                    continue
                result.failed_sections += len(outcome.summary.failed)
                result.report.add(outcome.summary.flattened_tokens, reference)
            results[method] = result
        rows.append(ComparisonRow(summarizer.name, results))
    return ComparisonReport(rows)
