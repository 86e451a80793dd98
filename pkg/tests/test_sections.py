from __future__ import annotations

import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from structsum.jats import Article, RawSection
from structsum.sections import (
    DEFAULT_KEYWORD_TABLE,
    KeywordTable,
    KeywordTableError,
    SectionType,
    annotate_article,
    annotate_header,
    parse_section_types,
)

T = SectionType


@pytest.mark.parametrize(
    "header, expected",
    [
        ("Materials and Methods", T.METHODS),
        ("Concluding Remarks", T.CONCLUSION),
        ("Acknowledgements", T.OTHER),
        ("Results and Discussion", T.RESULTS),
        ("Discussion and Results", T.RESULTS),
        ("BACKGROUND:", T.LITERATURE),
        ("2. Methods", T.METHODS),
        ("Case presentation", T.INTRODUCTION),
        ("Related work", T.LITERATURE),
        ("Study limitations", T.DISCUSSION),
        ("", T.OTHER),
    ],
)
def test_annotate_header(header, expected):
    assert annotate_header(header) is expected


def test_results_and_discussion_tie_break_is_table_order():
    words = {"results", "discussion"}
    matching = [t for t, kws in DEFAULT_KEYWORD_TABLE.rows if words & set(kws)]
    assert matching == [T.RESULTS, T.DISCUSSION]
    assert annotate_header("Results and Discussion") is matching[0]


@pytest.mark.parametrize("header", ["Methodological notes", "Cases", "Introductory", "Resultant"])
def test_no_substring_matches(header):
    assert annotate_header(header) is T.OTHER


# ASCII only: Unicode case mapping is not round-trip (e.g. dotless "ı" upper-cases to "I")
_header_words = st.one_of(
    st.sampled_from(DEFAULT_KEYWORD_TABLE.keywords()),
    st.text(alphabet=string.ascii_letters + string.punctuation + string.digits, max_size=8),
)


@given(st.lists(_header_words, max_size=5), st.randoms())
def test_case_insensitive(words, rnd):
    header = " ".join("".join(c.upper() if rnd.random() < 0.5 else c for c in w) for w in words)
    assert annotate_header(header) is annotate_header(header.upper())
    assert annotate_header(header) is annotate_header(header.lower())


@given(st.lists(st.sampled_from(DEFAULT_KEYWORD_TABLE.keywords() + ["and", "of", "data"]), max_size=6))
def test_earliest_row_wins(words):
    header = " ".join(words)
    rows = [t for t, kws in DEFAULT_KEYWORD_TABLE.rows if set(kws) & set(words)]
    assert annotate_header(header) is (rows[0] if rows else T.OTHER)


def test_annotate_article():
    article = Article(
        pmcid="PMC1",
        title="t",
        abstract_sections=(
            RawSection("Background", ("a b.",)),
            RawSection("Methods", ("c.",)),
            RawSection("Conclusions", ("d e", "f.")),
        ),
        body_sections=(
            RawSection("Introduction", ("x.",)),
            RawSection("Patients", ("y.",)),
            RawSection("Statistical analysis results", ("z.",)),
            RawSection("", ("w.",)),
        ),
    )
    sa = annotate_article(article)
    assert [s.section_type for s in sa.abstract] == [T.LITERATURE, T.METHODS, T.CONCLUSION]
    assert [s.section_type for s in sa.body] == [T.INTRODUCTION, T.OTHER, T.RESULTS, T.OTHER]
    assert sa.abstract[2].tokens == ("d", "e", "f.")
    assert len(sa.body) == len(article.body_sections)


def test_keyword_table_validation():
    with pytest.raises(KeywordTableError):
        KeywordTable(((T.METHODS, ("method",)), (T.RESULTS, ("method",))))
    with pytest.raises(KeywordTableError):
        KeywordTable(((T.METHODS, ("Methods",)),))
    with pytest.raises(KeywordTableError):
        KeywordTable(((T.METHODS, ("two words",)),))
    with pytest.raises(KeywordTableError):
        KeywordTable(((T.OTHER, ("misc",)),))


def test_keyword_table_file(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("# custom\nmethods: methods, protocol\n\nconclusion: summary\n")
    table = KeywordTable.load(path)
    assert annotate_header("Study protocol", table) is T.METHODS
    assert annotate_header("Summary", table) is T.CONCLUSION
    assert annotate_header("Introduction", table) is T.OTHER

    path.write_text("procedures: protocol\n")
    with pytest.raises(KeywordTableError, match="unknown section type"):
        KeywordTable.load(path)


def test_parse_section_types():
    assert parse_section_types("intro,methods,conclusion") == [T.INTRODUCTION, T.METHODS, T.CONCLUSION]
    assert parse_section_types("lit, res") == [T.LITERATURE, T.RESULTS]
    with pytest.raises(ValueError):
        parse_section_types("con,bogus")
