"""Command-line entry point: ingest, build, stats, run, eval, compare.

Settings come from built-in defaults, then a JSON config file (``--config``
or ``$STRUCTSUM_CONFIG``), then command-line flags; later sources win.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Iterator, Sequence

from structsum.corpus import (
    DEFAULT_SCHEDULE,
    BuildConfig,
    CurriculumStage,
    Method,
    apply_curriculum,
    build_examples,
    compute_stats,
    corpus_path,
    read_examples,
    render_method_table,
    render_section_table,
    split_corpus,
    validate_schedule,
    write_examples,
)
from structsum.jats import IngestError, iter_xml_files, parse_file
from structsum.pipeline import (
    StructuredSummary,
    compare_methods,
    reference_for,
    render_summary,
    run_pipeline,
)
from structsum.rouge import EvalReport
from structsum.sections import (
    DEFAULT_KEYWORD_TABLE,
    KeywordTable,
    KeywordTableError,
    annotate_article,
    parse_section_types,
)
from structsum.store import (
    ARTICLES_FILE,
    REJECTIONS_FILE,
    article_to_record,
    dump_line,
    read_articles,
    read_jsonl,
    store_file,
)
from structsum.summarizers import BackendError, make_summarizer

log = logging.getLogger("structsum")

CONFIG_ENV = "STRUCTSUM_CONFIG"
SPLITS = ("train", "val", "test")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3

DEFAULTS = {
    "sections": "introduction,methods,conclusion",
    "flat_budget": 500,
    "flat_summary_budget": 100,
    "susie_budget": 500,
    "susie_summary_budget": 100,
    "out_budget": 120,
    "workers": 1,
    "seed": 0,
    "timeout": 120.0,
    "keywords": None,
    "ratios": "0.8,0.1,0.1",
    "curriculum": [list(stage) for stage in DEFAULT_SCHEDULE],
    "backends": ["lead", "freq"],
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Settings:
    """Flag value if given, else config file value, else built-in default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args = args
        self.config = config

    def __getattr__(self, key):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return DEFAULTS.get(key)

    def build_config(self) -> BuildConfig:
        sections = self.sections
        if not isinstance(sections, str):
            sections = ",".join(sections)
        try:
            sections = parse_section_types(sections)
            return BuildConfig(
                selected_types=tuple(sections),
                flat_source_budget=int(self.flat_budget),
                flat_summary_budget=int(self.flat_summary_budget),
                susie_source_budget=int(self.susie_budget),
                susie_summary_budget=int(self.susie_summary_budget),
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def schedule(self) -> list[CurriculumStage]:
        try:
            stages = [CurriculumStage(int(s), int(r)) for s, r in self.curriculum]
            validate_schedule(stages)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad curriculum schedule: {exc}") from exc
        return stages

    def keyword_table(self) -> KeywordTable:
        if not self.keywords:
            return DEFAULT_KEYWORD_TABLE
        try:
            return KeywordTable.load(self.keywords)
        except (OSError, KeywordTableError) as exc:
            raise UsageError(f"cannot load keyword table: {exc}") from exc

    def workers_count(self) -> int:
        n = int(self.workers)
        if n < 1:
            raise UsageError("--workers must be at least 1")
        return n


def load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in config.items()}


@contextlib.contextmanager
def partial_output(path: Path) -> Iterator[Path]:
    """Write to ``<path>.partial`` and rename on success.

    An interrupted or failed run leaves the ``.partial`` file behind.
    """
    tmp = path.with_name(path.name + ".partial")
    yield tmp
    os.replace(tmp, path)


# -- ingest ------------------------------------------------------------------


def _ingest_one(path: Path, root: Path, table: KeywordTable) -> tuple:
    rel = path.relative_to(root).as_posix()
    try:
        article = parse_file(path)
    except IngestError as exc:
        return ("reject", rel, exc.reason, str(exc))
    except OSError as exc:
        return ("reject", rel, "read_error", str(exc))
    return ("ok", rel, article_to_record(annotate_article(article, table)))


def cmd_ingest(s: Settings) -> int:
    root = Path(s.xml_dir)
    if not root.is_dir():
        raise DataError(f"input directory not found: {root}")
    table = s.keyword_table()
    out = Path(s.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = list(iter_xml_files(root))
    if not paths:
        log.warning("no XML files under %s", root)

    work = partial(_ingest_one, root=root, table=table)
    workers = s.workers_count()
    stored = 0
    reasons: Counter = Counter()
    seen: set[str] = set()
    with contextlib.ExitStack() as stack:
        if workers > 1:
            pool = stack.enter_context(ProcessPoolExecutor(max_workers=workers))
            results = pool.map(work, paths, chunksize=16)
        else:
            results = map(work, paths)
        art_tmp = stack.enter_context(partial_output(out / ARTICLES_FILE))
        rej_tmp = stack.enter_context(partial_output(out / REJECTIONS_FILE))
        with open(art_tmp, "w", encoding="utf-8", newline="\n") as art_fh, open(
            rej_tmp, "w", encoding="utf-8", newline="\n"
        ) as rej_fh:
            rej_fh.write("path\treason\tdetail\n")
            for result in results:
                if result[0] == "ok":
                    _, rel, record = result
                    if record["pmcid"] in seen:
                        result = ("reject", rel, "duplicate_pmcid", record["pmcid"])
                    else:
                        seen.add(record["pmcid"])
                        art_fh.write(dump_line(record))
                        stored += 1
                        continue
                _, rel, reason, detail = result
                reasons[reason] += 1
                detail = " ".join(detail.split())
                rej_fh.write(f"{rel}\t{reason}\t{detail}\n")
                log.info("rejected %s: %s", rel, reason)

    rejected = sum(reasons.values())
    by_reason = ", ".join(f"{k}={v}" for k, v in sorted(reasons.items()))
    print(f"stored {stored} article(s), rejected {rejected}" + (f" ({by_reason})" if by_reason else ""))
    return EXIT_OK


# -- build / stats -------------------------------------------------------------


def _load_store(store) -> list:
    path = store_file(store)
    if not path.is_file():
        raise DataError(f"article store not found: {path}")
    try:
        return read_articles(path)
    except (KeyError, ValueError) as exc:
        raise DataError(f"corrupt article store {path}: {exc}") from exc


def _methods(value: str) -> list[Method]:
    return list(Method) if value == "both" else [Method(value)]


def _parse_ratios(value) -> tuple[float, float, float]:
    try:
        parts = [float(x) for x in (value.split(",") if isinstance(value, str) else value)]
    except ValueError as exc:
        raise UsageError(f"bad --ratios {value!r}") from exc
    if len(parts) != 3:
        raise UsageError("--ratios needs three comma-separated fractions")
    return parts[0], parts[1], parts[2]


def stats_report(by_method: dict) -> tuple[str, dict]:
    blocks = []
    payload = {}
    for method, stats in by_method.items():
        blocks.append(f"[{method}] per section type\n" + render_section_table(stats))
        payload[method] = stats.to_dict()
    blocks.append("[training sets]\n" + render_method_table(by_method))
    return "\n\n".join(blocks) + "\n", payload


def cmd_build(s: Settings) -> int:
    cfg = s.build_config()
    articles = _load_store(s.store)
    stage = None
    if s.stage is not None:
        schedule = s.schedule()
        if not 0 <= s.stage < len(schedule):
            raise UsageError(f"--stage must be in 0..{len(schedule) - 1}")
        stage = schedule[s.stage]

    try:
        splits = split_corpus([a.pmcid for a in articles], _parse_ratios(s.ratios), int(s.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    by_id = {a.pmcid: a for a in articles}
    out = Path(s.out)
    out.mkdir(parents=True, exist_ok=True)

    by_method = {}
    extra = {}
    total = 0
    for method in _methods(s.method):
        everything = []
        counters = None
        split_sizes = {}
        for name, ids in zip(SPLITS, splits):
            examples, c = build_examples((by_id[i] for i in ids), cfg, method)
            if stage is not None:
                examples = [apply_curriculum(ex, stage) for ex in examples]
            with partial_output(corpus_path(out, name, method)) as tmp:
                write_examples(tmp, examples)
            split_sizes[name] = len(examples)
            everything.extend(examples)
            counters = c if counters is None else counters.merge(c)
        total += len(everything)
        by_method[method.value] = compute_stats(everything)
        extra[method.value] = {
            "split_examples": split_sizes,
            "skipped_articles": counters.skipped_articles,
            "other_sections": counters.other_sections,
            "unselected_sections": counters.unselected_sections,
            "unpaired_sections": counters.unpaired_sections,
            "dropped_section_rate": (
                None if counters.dropped_rate is None else round(counters.dropped_rate, 4)
            ),
        }

    text, payload = stats_report(by_method)
    for method, info in extra.items():
        payload[method].update(info)
        text += (
            f"\n[{method}] examples per split: "
            + ", ".join(f"{k}={v}" for k, v in info["split_examples"].items())
            + f"; skipped articles: {info['skipped_articles']}"
            + f"; dropped section rate: {info['dropped_section_rate']}\n"
        )
    (out / "stats.txt").write_text(text, encoding="utf-8")
    (out / "stats.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(text)
    if total == 0:
        raise DataError("zero examples built")
    return EXIT_OK


def cmd_stats(s: Settings) -> int:
    files: list[Path] = []
    for item in s.paths:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("*.jsonl")))
        elif p.is_file():
            files.append(p)
        else:
            raise DataError(f"not found: {p}")
    grouped: dict[str, list] = {}
    for f in files:
        for ex in read_examples(f):
            grouped.setdefault(ex.method.value, []).append(ex)
    if not grouped:
        raise DataError("no examples found")
    by_method = {m.value: compute_stats(grouped[m.value]) for m in Method if m.value in grouped}
    text, payload = stats_report(by_method)
    sys.stdout.write(text)
    if s.json:
        Path(s.json).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


# -- run / eval / compare ------------------------------------------------------


def _summarizer(s: Settings, backend: str):
    summarizer = make_summarizer(backend, workers=s.workers_count(), timeout=float(s.timeout))
    start = getattr(summarizer, "start", None)
    if start is not None:
        start()
    return summarizer


def _close(summarizer) -> None:
    close = getattr(summarizer, "close", None)
    if close is not None:
        close()


def cmd_run(s: Settings) -> int:
    cfg = s.build_config()
    articles = _load_store(s.store)
    method = Method(s.method)
    summarizer = _summarizer(s, s.backend)
    ok = failed = failed_sections = 0
    out = Path(s.out)
    try:
        with partial_output(out) as tmp, open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            text_fh = open(s.text, "w", encoding="utf-8") if s.text else None
            try:
                for outcome in run_pipeline(
                    articles, summarizer, cfg, method, int(s.out_budget), s.workers_count()
                ):
                    if outcome.summary is None:
                        failed += 1
                        continue
                    ok += 1
                    failed_sections += len(outcome.summary.failed)
                    fh.write(dump_line(outcome.summary.to_record()))
                    if text_fh:
                        text_fh.write(render_summary(outcome.summary) + "\n\n")
            finally:
                if text_fh:
                    text_fh.close()
    finally:
        _close(summarizer)
    print(f"summarized {ok} article(s); {failed} failed; {failed_sections} failed section(s)")
    return EXIT_OK


def cmd_eval(s: Settings) -> int:
    cfg = s.build_config()
    by_id = {a.pmcid: a for a in _load_store(s.store)}
    path = Path(s.summaries)
    if not path.is_file():
        raise DataError(f"summaries file not found: {path}")
    report = EvalReport()
    unknown = 0
    for rec in read_jsonl(path):
        summary = StructuredSummary.from_record(rec)
        article = by_id.get(summary.pmcid)
        if article is None:
            unknown += 1
            report.skipped += 1
            continue
        report.add(summary.flattened_tokens, reference_for(article, cfg))
    if unknown:
        log.warning("%d summaries have no article in the store", unknown)
    print(report.render())
    if s.json:
        Path(s.json).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_compare(s: Settings) -> int:
    cfg = s.build_config()
    articles = _load_store(s.store)
    backends = s.backend or s.backends
    if isinstance(backends, str):
        backends = [backends]
    summarizers = []
    try:
        for backend in backends:
            summarizers.append(_summarizer(s, backend))
        report = compare_methods(
            articles, summarizers, cfg, int(s.out_budget), s.workers_count()
        )
    finally:
        for summarizer in summarizers:
            _close(summarizer)
    print(report.render())
    if s.json:
        Path(s.json).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--workers", type=int, help="worker count (default 1)")
    common.add_argument("--seed", type=int, help="split seed (default 0)")

    build_opts = argparse.ArgumentParser(add_help=False)
    build_opts.add_argument("--sections", help="selected section types, e.g. intro,methods,conclusion")
    build_opts.add_argument("--flat-budget", type=int, help="flat source length L (default 500)")
    build_opts.add_argument("--flat-summary-budget", type=int, help="flat reference cap (default 100)")
    build_opts.add_argument("--susie-budget", type=int, help="per-section source cap (default 500)")
    build_opts.add_argument("--susie-summary-budget", type=int,
                            help="per-section reference cap (default 100)")

    gen_opts = argparse.ArgumentParser(add_help=False)
    gen_opts.add_argument("--out-budget", type=int, help="summary length cap in words (default 120)")
    gen_opts.add_argument("--timeout", type=float, help="per-request backend timeout, seconds")

    parser = _Parser(prog="structsum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="parse and annotate JATS XML files")
    p.add_argument("xml_dir")
    p.add_argument("-o", "--out", required=True, help="article store directory")
    p.add_argument("--keywords", help="keyword table file ('type: kw1, kw2' lines)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", parents=[common, build_opts], help="build flat/SUSIE corpora")
    p.add_argument("store")
    p.add_argument("-o", "--out", required=True, help="corpus directory")
    p.add_argument("--method", choices=["flat", "susie", "both"], default="both")
    p.add_argument("--stage", type=int, help="apply curriculum stage N (0-based)")
    p.add_argument("--ratios", help="train,val,test fractions (default 0.8,0.1,0.1)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("stats", parents=[common], help="length statistics of corpus files")
    p.add_argument("paths", nargs="+", help="corpus files or directories")
    p.add_argument("--json", help="also write statistics as JSON")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", parents=[common, build_opts, gen_opts], help="summarize articles")
    p.add_argument("store")
    p.add_argument("--method", choices=["flat", "susie"], required=True)
    p.add_argument("--backend", required=True,
                   help="lead, freq, oracle, or an external command line")
    p.add_argument("-o", "--out", required=True, help="summaries JSON-lines file")
    p.add_argument("--text", help="also write a plain-text rendering")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", parents=[common, build_opts], help="score summaries with ROUGE")
    p.add_argument("summaries")
    p.add_argument("--store", required=True)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", parents=[common, build_opts, gen_opts],
                       help="flat vs SUSIE ROUGE grid per backend")
    p.add_argument("store")
    p.add_argument("--backend", action="append", help="repeatable; default lead and freq")
    p.add_argument("--json", help="also write the grid as JSON")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = Settings(args, load_config(args.config))
        return args.func(settings)
    except UsageError as exc:
        print(f"structsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"structsum: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as exc:
        print(f"structsum: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except KeyboardInterrupt:
        print("structsum: interrupted; partial output kept with .partial suffix", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
