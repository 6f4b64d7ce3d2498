import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topiclass.corpus import SyntheticSpec, generate_synthetic_corpus, planted_blocks
from topiclass.features import (MinMaxScaler, TermDocMatrix, Vocabulary, build_term_doc_matrix,
                                build_vocabulary, information_gain, read_triplets, select_top_k,
                                tokenize, write_triplets)


def entropy(ps):
    return -sum(p * math.log2(p) for p in ps if p > 0)


def ig_bruteforce(present, labels):
    """IG from explicit conditional label counts."""
    n = len(labels)
    classes = sorted(set(labels))

    def h(subset):
        if not subset:
            return 0.0
        return entropy([subset.count(c) / len(subset) for c in classes])

    with_t = [lab for p, lab in zip(present, labels) if p]
    without = [lab for p, lab in zip(present, labels) if not p]
    return h(list(labels)) - len(with_t) / n * h(with_t) - len(without) / n * h(without)


def tdm_from_rows(rows, terms):
    import scipy.sparse as sp
    return TermDocMatrix(sp.csr_matrix(np.array(rows)), Vocabulary(terms))


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_case_and_stopwords():
    assert tokenize("The cat, the CAT!") == ["cat", "cat"]


def test_tokenize_digits_and_hyphens():
    assert tokenize("SVM-based 2-class models") == ["svm", "based", "class", "models"]


def test_tokenize_without_stoplist():
    assert tokenize("the cat", stopwords=None) == ["the", "cat"]


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=80))
def test_tokenize_idempotent(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks
    assert all(len(t) >= 2 and not t.isdigit() and t == t.lower() for t in toks)


def test_vocabulary_min_df():
    docs = [["a", "b"], ["b", "c"]]
    assert build_vocabulary(docs, 1).terms == ("a", "b", "c")
    assert build_vocabulary(docs, 2).terms == ("b",)


def test_vocabulary_all_filtered():
    with pytest.raises(ValueError, match="empty vocabulary"):
        build_vocabulary([["a"], ["b"]], 2)


def test_vocabulary_synthetic_blocks():
    spec = SyntheticSpec(n_classes=2, pages_per_class=40, words_per_class=5, words_per_group=0,
                         group_word_rate=0.0, background_words=0, class_word_rate=1.0, doc_length=20, seed=3)
    class_words, _, _ = planted_blocks(spec)
    vocab = build_vocabulary(generate_synthetic_corpus(spec), 1)
    assert set(vocab.terms) == set(class_words[0]) | set(class_words[1])


def test_vocabulary_index_inverse():
    v = Vocabulary(["x", "y", "z"])
    assert [v.terms[v.index(t)] for t in v] == list(v)
    with pytest.raises(ValueError):
        Vocabulary(["a", "a"])


def test_term_counts():
    vocab = Vocabulary(["a", "b", "c"])
    m = build_term_doc_matrix([["a", "a", "b"], ["zz"]], vocab).toarray()
    assert m.tolist() == [[2, 1, 0], [0, 0, 0]]


def test_term_counts_hand_corpus():
    docs = [["apple", "pear", "apple"], ["pear", "plum", "fig"], ["plum", "plum", "plum", "kiwi"]]
    vocab = Vocabulary(["apple", "pear", "plum"])
    expected = [[2, 1, 0], [0, 1, 1], [0, 0, 3]]
    assert build_term_doc_matrix(docs, vocab).toarray().tolist() == expected


def test_ig_term_everywhere_is_zero():
    m = tdm_from_rows([[1], [2], [1], [5]], ["t"])
    assert information_gain(m, ["A", "A", "B", "B"])[0] == pytest.approx(0.0, abs=1e-12)


def test_ig_perfect_indicator_is_one_bit():
    m = tdm_from_rows([[1], [3], [0], [0]], ["t"])
    assert information_gain(m, ["A", "A", "B", "B"])[0] == pytest.approx(1.0, abs=1e-12)


def test_ig_partial_split():
    m = tdm_from_rows([[1], [1], [1], [0]], ["t"])
    expected = 1 - 0.75 * entropy([2 / 3, 1 / 3]) - 0.25 * entropy([0, 1])
    assert expected == pytest.approx(0.3113, abs=1e-4)
    assert information_gain(m, ["A", "A", "B", "B"])[0] == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(1, 6), st.integers(2, 4), st.integers(0, 10_000))
def test_ig_matches_bruteforce_and_bounds(n_docs, n_terms, n_classes, seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 3, size=(n_docs, n_terms))
    labels = [f"c{x}" for x in rng.integers(0, n_classes, size=n_docs)]
    ig = information_gain(tdm_from_rows(rows, [f"t{j}" for j in range(n_terms)]), labels)
    h_c = entropy([labels.count(c) / n_docs for c in set(labels)])
    for j in range(n_terms):
        assert ig[j] == pytest.approx(ig_bruteforce(rows[:, j] > 0, labels), abs=1e-12)
    assert np.all(ig >= 0) and np.all(ig <= h_c + 1e-12)
    perm = rng.permutation(n_docs)
    ig_perm = information_gain(tdm_from_rows(rows[perm], [f"t{j}" for j in range(n_terms)]),
                               [labels[i] for i in perm])
    np.testing.assert_allclose(ig_perm, ig, atol=1e-12)


def test_select_top_k_identity():
    m = tdm_from_rows([[1, 2, 3], [4, 5, 6]], ["a", "b", "c"])
    vocab, proj = select_top_k(np.array([0.3, 0.1, 0.2]), 3, m)
    assert vocab.terms == ("a", "b", "c")
    assert proj.toarray().tolist() == m.toarray().tolist()


def test_select_top_k_keeps_highest():
    m = tdm_from_rows([[1, 2, 3]], ["a", "b", "c"])
    vocab, proj = select_top_k(np.array([0.9, 0.1, 0.9]), 2, m)
    assert vocab.terms == ("a", "c")
    assert proj.toarray().tolist() == [[1, 3]]


def test_select_top_k_tie_break():
    m = tdm_from_rows([[1, 2, 3]], ["a", "b", "c"])
    vocab, _ = select_top_k(np.array([0.5, 0.5, 0.1]), 1, m)
    assert vocab.terms == ("a",)


@pytest.mark.parametrize("k", [0, 4])
def test_select_top_k_range(k):
    m = tdm_from_rows([[1, 2, 3]], ["a", "b", "c"])
    with pytest.raises(ValueError):
        select_top_k(np.zeros(3), k, m)


def test_triplet_roundtrip(tmp_path):
    m = tdm_from_rows([[0, 2, 0], [1, 0, 4]], ["a", "b", "c"])
    write_triplets(m, tmp_path / "m.txt", ["config {}"])
    text = (tmp_path / "m.txt").read_text().splitlines()
    assert text[1] == "2 3"
    assert text[2:] == ["0 1 2", "1 0 1", "1 2 4"]
    assert read_triplets(tmp_path / "m.txt").toarray().tolist() == m.toarray().tolist()


def test_minmax_scaler_constant_columns():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    s = MinMaxScaler().fit(X)
    assert s.transform(X).tolist() == [[0.0, 0.0], [1.0, 0.0]]
