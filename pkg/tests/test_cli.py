import json
from pathlib import Path

import pytest

from structsum.cli import main
from structsum.corpus import WHOLE, BuildConfig, Method, read_examples
from structsum.pipeline import StructuredSummary, reference_for
from structsum.store import read_articles, read_jsonl

from synthetic import C, I, M, jats_xml, words


def _text(prefix, n):
    return " ".join(words(prefix, n))


def _structured(pmcid, with_conclusion=True):
    abstract = [
        ("Introduction", [_text("bg", 30)]),
        ("Methods", [_text("am", 25)]),
    ]
    body = [
        ("Introduction", [_text("intro", 120), _text("intro2x", 40)]),
        ("Materials and Methods", [_text("meth", 200)]),
        ("Results", [_text("res", 80)]),
    ]
    if with_conclusion:
        abstract.append(("Conclusions", [_text("ac", 20)]))
        body.append(("Conclusion", [_text("conc", 60)]))
    return jats_xml(pmcid, abstract=abstract, body=body)


@pytest.fixture
def xml_dir(tmp_path):
    d = tmp_path / "xml"
    d.mkdir()
    for i in range(1, 5):
        (d / f"a{i}.xml").write_text(_structured(f"PMC10{i}"), encoding="utf-8")
    (d / "flat.xml").write_text(
        jats_xml("PMC999", flat_abstract="One unstructured paragraph."), encoding="utf-8"
    )
    return d


@pytest.fixture
def store(tmp_path, xml_dir):
    out = tmp_path / "store"
    assert main(["ingest", str(xml_dir), "-o", str(out)]) == 0
    return out


def test_ingest_stores_structured_and_logs_rejection(store, capsys):
    assert len(read_articles(store)) == 4
    rows = (store / "rejections.tsv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "path\treason\tdetail"
    assert len(rows) == 2
    assert rows[1].startswith("flat.xml\tunstructured_abstract\t")


def test_ingest_summary_line(tmp_path, xml_dir, capsys):
    main(["ingest", str(xml_dir), "-o", str(tmp_path / "s")])
    assert "stored 4 article(s), rejected 1 (unstructured_abstract=1)" in capsys.readouterr().out


def test_ingest_empty_dir(tmp_path, capsys, caplog):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["ingest", str(empty), "-o", str(tmp_path / "s")]) == 0
    assert "stored 0 article(s)" in capsys.readouterr().out
    assert "no XML files" in caplog.text
    assert (tmp_path / "s" / "articles.jsonl").read_bytes() == b""


def test_ingest_rerun_is_byte_identical(tmp_path, xml_dir, store):
    again = tmp_path / "again"
    assert main(["ingest", str(xml_dir), "-o", str(again), "--workers", "2"]) == 0
    for name in ("articles.jsonl", "rejections.tsv"):
        assert (again / name).read_bytes() == (store / name).read_bytes()


def test_ingest_missing_dir_is_data_error(tmp_path):
    assert main(["ingest", str(tmp_path / "nope"), "-o", str(tmp_path / "s")]) == 2


def test_ingest_duplicate_pmcid_rejected(tmp_path):
    d = tmp_path / "xml"
    d.mkdir()
    (d / "x1.xml").write_text(_structured("PMC7"), encoding="utf-8")
    (d / "x2.xml").write_text(_structured("PMC7"), encoding="utf-8")
    out = tmp_path / "s"
    assert main(["ingest", str(d), "-o", str(out)]) == 0
    assert len(read_articles(out)) == 1
    assert "duplicate_pmcid" in (out / "rejections.tsv").read_text(encoding="utf-8")


def test_ingest_custom_keyword_table(tmp_path, xml_dir):
    kw = tmp_path / "kw.txt"
    kw.write_text("# only one row\nresults: results\n", encoding="utf-8")
    out = tmp_path / "s"
    assert main(["ingest", str(xml_dir), "-o", str(out), "--keywords", str(kw)]) == 0
    types = {s.section_type.value for a in read_articles(out) for s in a.body}
    assert types == {"results", "other"}


def test_bad_keyword_file_is_usage_error(tmp_path, xml_dir):
    kw = tmp_path / "kw.txt"
    kw.write_text("nonsense: foo\n", encoding="utf-8")
    assert main(["ingest", str(xml_dir), "-o", str(tmp_path / "s"), "--keywords", str(kw)]) == 1


def _all_examples(out: Path, method: str):
    found = []
    for split in ("train", "val", "test"):
        found.extend(read_examples(out / f"{split}.{method}.jsonl"))
    return found


def test_build_both_methods(tmp_path, store, capsys):
    out = tmp_path / "corpus"
    assert main(["build", str(store), "-o", str(out)]) == 0
    flat = _all_examples(out, "flat")
    susie = _all_examples(out, "susie")
    assert len(susie) >= len(flat)
    # 4 articles, each with introduction, methods and conclusion paired
    assert len(flat) == 4 and len(susie) == 12
    assert (out / "stats.txt").read_text(encoding="utf-8") == capsys.readouterr().out
    stats = json.loads((out / "stats.json").read_text(encoding="utf-8"))
    assert stats["susie"]["examples"] == 12
    assert stats["flat"]["examples"] == 4


def test_build_is_idempotent(tmp_path, store):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["build", str(store), "-o", str(a), "--seed", "3"]) == 0
    assert main(["build", str(store), "-o", str(b), "--seed", "3"]) == 0
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_build_zero_examples_is_data_error(tmp_path, capsys):
    d = tmp_path / "xml"
    d.mkdir()
    for i in range(3):
        (d / f"n{i}.xml").write_text(_structured(f"PMC5{i}", with_conclusion=False), encoding="utf-8")
    store = tmp_path / "s"
    assert main(["ingest", str(d), "-o", str(store)]) == 0
    code = main(["build", str(store), "-o", str(tmp_path / "c"), "--sections", "conclusion"])
    assert code == 2
    assert "zero examples" in capsys.readouterr().err


def test_build_stage_zero_caps_lengths(tmp_path, store):
    out = tmp_path / "corpus"
    assert main(["build", str(store), "-o", str(out), "--stage", "0"]) == 0
    for method in ("flat", "susie"):
        examples = _all_examples(out, method)
        assert examples
        assert all(len(ex.source_tokens) <= 50 for ex in examples)
        assert all(len(ex.reference_tokens) <= 10 for ex in examples)


def test_build_stage_out_of_range(tmp_path, store):
    assert main(["build", str(store), "-o", str(tmp_path / "c"), "--stage", "6"]) == 1


def test_build_missing_store(tmp_path):
    assert main(["build", str(tmp_path / "none"), "-o", str(tmp_path / "c")]) == 2


def test_stats_reads_corpus_dir(tmp_path, store, capsys):
    out = tmp_path / "corpus"
    main(["build", str(store), "-o", str(out)])
    capsys.readouterr()
    assert main(["stats", str(out), "--json", str(tmp_path / "s.json")]) == 0
    text = capsys.readouterr().out
    assert "[susie] per section type" in text and "[flat] per section type" in text
    payload = json.loads((tmp_path / "s.json").read_text(encoding="utf-8"))
    assert payload["susie"]["examples"] == 12


def test_compare_grid_shape(tmp_path, store, capsys):
    js = tmp_path / "grid.json"
    assert main(["compare", str(store), "--json", str(js)]) == 0
    grid = json.loads(js.read_text(encoding="utf-8"))
    assert list(grid) == ["lead", "freq"]
    for row in grid.values():
        assert set(row) == {"flat", "susie"}
        for cell in row.values():
            for metric in ("rouge-1", "rouge-2", "rouge-l"):
                assert 0.0 <= cell[metric] <= 1.0
            assert cell["scored"] == 4
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split() == ["model"] + ["Flat", "SUSIE"] * 3
    assert [ln.split()[0] for ln in lines[2:]] == ["lead", "freq"]


def test_eval_reference_against_itself(tmp_path, store, capsys):
    cfg = BuildConfig()
    summaries = tmp_path / "refs.jsonl"
    with open(summaries, "w", encoding="utf-8") as fh:
        for a in read_articles(store):
            s = StructuredSummary(a.pmcid, Method.FLAT, ((WHOLE, tuple(reference_for(a, cfg))),))
            fh.write(json.dumps(s.to_record()) + "\n")
    js = tmp_path / "eval.json"
    assert main(["eval", str(summaries), "--store", str(store), "--json", str(js)]) == 0
    report = json.loads(js.read_text(encoding="utf-8"))
    for metric in ("rouge-1", "rouge-2", "rouge-l"):
        assert report[metric]["f1"] == 1.0


def test_run_susie_with_echo_backend(tmp_path, store, capsys):
    out = tmp_path / "sums.jsonl"
    text = tmp_path / "sums.txt"
    code = main(["run", str(store), "--method", "susie", "--backend", "echo-backend",
                 "-o", str(out), "--text", str(text), "--workers", "2"])
    assert code == 0
    records = list(read_jsonl(out))
    assert len(records) == 4
    for rec in records:
        assert [p["section"] for p in rec["parts"]] == [I.value, M.value, C.value]
        assert all(len(p["text"].split()) <= 120 for p in rec["parts"])
        assert rec["failed"] == []
    assert not out.with_name(out.name + ".partial").exists()
    assert text.read_text(encoding="utf-8").count("**Introduction**") == 4


def test_run_handshake_failure_exits_backend_error(tmp_path, store, capsys):
    code = main(["run", str(store), "--method", "flat", "--backend", "echo-backend --no-ready",
                 "-o", str(tmp_path / "x.jsonl"), "--timeout", "1"])
    assert code == 3
    assert "backend error" in capsys.readouterr().err


def test_run_unlaunchable_backend(tmp_path, store):
    code = main(["run", str(store), "--method", "flat", "--backend", "/nonexistent/backend",
                 "-o", str(tmp_path / "x.jsonl"), "--timeout", "1"])
    assert code == 3


def _exit_code(argv) -> int:
    # argparse failures surface as SystemExit, the rest as main's return value
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["build"],
        ["run", "store", "--method", "sideways", "--backend", "lead", "-o", "x"],
        ["build", "store", "-o", "x", "--sections", "nonsense"],
        ["build", "store", "-o", "x", "--ratios", "0.5,0.5"],
        ["ingest", "d", "-o", "x", "--workers", "0"],
    ],
)
def test_usage_errors_exit_one(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "d").mkdir()
    (tmp_path / "store").mkdir()
    (tmp_path / "store" / "articles.jsonl").write_text("", encoding="utf-8")
    assert _exit_code(argv) == 1


def test_config_file_via_env(tmp_path, store, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sections": ["methods"], "seed": 5}), encoding="utf-8")
    monkeypatch.setenv("STRUCTSUM_CONFIG", str(cfg))
    out = tmp_path / "c"
    assert main(["build", str(store), "-o", str(out), "--method", "susie"]) == 0
    examples = _all_examples(out, "susie")
    assert {ex.section_type for ex in examples} == {M}


def test_flag_overrides_config(tmp_path, store, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sections": "methods"}), encoding="utf-8")
    out = tmp_path / "c"
    code = main(["build", str(store), "-o", str(out), "--method", "susie",
                 "--config", str(cfg), "--sections", "intro"])
    assert code == 0
    assert {ex.section_type for ex in _all_examples(out, "susie")} == {I}


def test_unreadable_config_is_usage_error(tmp_path, store):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["build", str(store), "-o", str(tmp_path / "c"), "--config", str(bad)]) == 1
