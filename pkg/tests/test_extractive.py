from __future__ import annotations

from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from structsum.summarizers import (
    FrequencySummarizer,
    LeadSummarizer,
    OracleSummarizer,
    SentenceSpan,
    SummarizeRequest,
    freq_extractive_summarize,
    lead_summarize,
    oracle_extractive_summarize,
    split_sentences,
)
from structsum.text import normalize_tokens

from oracles import brute_ngram_overlap, exact_prf, is_subsequence


def req(tokens, budget=120, reference=None):
    return SummarizeRequest("r", tuple(tokens), budget, reference)


def test_lead():
    five = "a b c d e".split()
    assert lead_summarize(req(five)).summary_tokens == tuple(five)
    many = [f"t{i}" for i in range(300)]
    assert lead_summarize(req(many)).summary_tokens == tuple(many[:120])
    assert lead_summarize(req([])).summary_tokens == ()


def test_request_validation():
    with pytest.raises(ValueError):
        SummarizeRequest("r", ("a",), 0)


def test_split_sentences():
    tokens = "One two. Three! Four five six? tail end".split()
    assert split_sentences(tokens) == [
        SentenceSpan(0, 2),
        SentenceSpan(2, 3),
        SentenceSpan(3, 6),
        SentenceSpan(6, 8),
    ]
    assert split_sentences(['He', 'said', '"stop."', 'Then']) == [SentenceSpan(0, 3), SentenceSpan(3, 4)]
    assert split_sentences([]) == []


def test_freq_single_sentence():
    tokens = "Only one sentence here.".split()
    assert freq_extractive_summarize(req(tokens, 10)).summary_tokens == tuple(tokens)


def test_freq_prefers_repeated_tokens():
    # 12 tokens: a sentence of hapaxes, then one whose two words each occur 3 times;
    # hand scores: mean frequency 1.0 vs 3.0
    hapax = "alpha beta gamma delta epsilon zeta.".split()
    repeated = "x y x y x y.".split()
    out = freq_extractive_summarize(req(hapax + repeated, 6)).summary_tokens
    assert out == tuple(repeated)


def test_freq_stopwords_and_order():
    tokens = "the the the cat. dog dog bird. dog fish.".split()
    # with "the" stopped, sentence 2 (dog x2, bird) scores highest
    out = freq_extractive_summarize(req(tokens, 7), stopwords={"the"}).summary_tokens
    assert out == tuple("dog dog bird. dog fish.".split())  # emitted in source order


def test_freq_deterministic():
    tokens = "a b. b c. c a. a a.".split()
    outs = {freq_extractive_summarize(req(tokens, 4)).summary_tokens for _ in range(5)}
    assert len(outs) == 1


def test_freq_oversized_sentence_keeps_prefix():
    tokens = [f"w{i}" for i in range(50)] + ["end."]
    out = freq_extractive_summarize(req(tokens, 10)).summary_tokens
    assert out == tuple(tokens[:10])


def _f1(summary, reference):
    cand, ref = normalize_tokens(summary), normalize_tokens(reference)
    return exact_prf(*brute_ngram_overlap(cand, ref, 1))[2]


def test_oracle_exact_sentence():
    source = "First sentence here. The target sentence is this. Last one.".split()
    reference = "The target sentence is this.".split()
    out = oracle_extractive_summarize(source, reference, 120)
    assert _f1(out, reference) == 1


def test_oracle_matches_exhaustive_search():
    s1 = "alpha beta gamma.".split()
    s2 = "alpha eta kappa lambda.".split()
    s3 = "eta theta iota.".split()
    source = s1 + s2 + s3
    reference = "alpha beta gamma eta theta iota".split()
    sentences = [s1, s2, s3]
    best = max(
        (subset for k in range(4) for subset in combinations(range(3), k)),
        key=lambda subset: (_f1([t for i in subset for t in sentences[i]], reference), -len(subset)),
    )
    assert best == (0, 2)
    assert oracle_extractive_summarize(source, reference, 120) == s1 + s3


def test_oracle_respects_budget():
    source = "a b c d. e f.".split()
    out = oracle_extractive_summarize(source, "a b c d e f".split(), 3)
    assert out == ["e", "f."]


def test_oracle_summarizer_needs_reference():
    with pytest.raises(ValueError):
        OracleSummarizer().summarize(req(["a."]))


sentence_tokens = st.lists(
    st.text(alphabet="abcde.!?", min_size=1, max_size=4), max_size=40
)


@given(sentence_tokens, st.integers(1, 25))
def test_budgets_and_subsequences(tokens, budget):
    reference = tuple(tokens[::2]) or ("a",)
    for summarizer in (LeadSummarizer(), FrequencySummarizer(), OracleSummarizer()):
        out = summarizer.summarize(req(tokens, budget, reference)).summary_tokens
        assert len(out) <= budget
        assert is_subsequence(out, tokens)


@given(sentence_tokens, sentence_tokens, st.integers(1, 40))
def test_oracle_at_least_best_single_sentence(source, reference, budget):
    if not normalize_tokens(reference):
        return
    out = oracle_extractive_summarize(source, reference, budget)
    singles = [
        _f1(source[s.start : s.end], reference)
        for s in split_sentences(source)
        if len(s) <= budget
    ]
    assert _f1(out, reference) >= max(singles, default=0)
