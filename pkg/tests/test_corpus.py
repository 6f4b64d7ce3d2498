import json
import itertools

import pytest
from hypothesis import given, settings, strategies as st

from topiclass.corpus import (Corpus, CorpusError, SyntheticSpec, WebPage, generate_synthetic_corpus,
                              load_corpus, planted_blocks, resolve_neighbors, write_corpus)


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def rec(pid, cat="x", text="", links=()):
    return {"id": pid, "category": cat, "text": text, "links": list(links)}


def graph(edges, nodes=None):
    nodes = sorted(set(nodes or []) | {a for a, _ in edges} | {b for _, b in edges})
    out = {n: [] for n in nodes}
    for a, b in edges:
        out[a].append(b)
    return Corpus(WebPage(n, "x", "", tuple(out[n])) for n in nodes)


def test_dangling_outlink_dropped(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [rec("a", links=["b", "zz"]), rec("b"), rec("c", links=["c"])])
    corpus = load_corpus(path)
    assert len(corpus) == 3
    assert corpus["a"].outlinks == ("b",)
    assert corpus["c"].outlinks == ()
    assert corpus.dropped_links == 2


def test_duplicate_id_names_the_id(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [rec("p1"), rec("p2"), rec("p1")])
    with pytest.raises(CorpusError, match="p1"):
        load_corpus(path)


@pytest.mark.parametrize("line, message", [
    ("{not json", "line 2"),
    (json.dumps({"id": "q", "category": "x", "text": ""}), "links"),
    (json.dumps({"id": "q", "category": "", "text": "", "links": []}), "empty label"),
    (json.dumps({"id": "q", "category": "x", "text": 3, "links": []}), "text"),
])
def test_malformed_records_report_line(tmp_path, line, message):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(rec("a")) + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(CorpusError, match=message):
        load_corpus(path)


def test_empty_corpus_rejected(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="empty"):
        load_corpus(path)


def test_categories_sorted_and_table_histogram(tmp_path):
    # 15 categories with the article counts of the Wikipedia Selection for Schools collection
    table = {"Art": 74, "Business Studies": 88, "Citizenship": 224, "Countries": 220,
             "Design and Technology": 250, "Everyday life": 380, "Geography": 650, "History": 400,
             "IT": 64, "Language and literature": 196, "Mathematics": 45, "Music": 140,
             "People": 680, "Religion": 146, "Science": 1068}
    records = [rec(f"{cat}-{i}", cat) for cat, n in table.items() for i in range(n)]
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", records))
    assert len(corpus) == 4625
    assert len(corpus.categories) == 15
    assert list(corpus.categories) == sorted(table)
    assert corpus.label_histogram() == table


def test_resolve_single_parent():
    corpus = graph([("a", "b"), ("a", "c")])
    n = resolve_neighbors(corpus, "b")
    assert n.parents == ("a",) and n.children == () and n.siblings == ("c",)


def test_resolve_isolated_page():
    corpus = graph([], nodes=["solo"])
    n = resolve_neighbors(corpus, "solo")
    assert n.parents == n.children == n.siblings == ()


def test_resolve_two_parents():
    corpus = graph([("a", "c"), ("b", "c"), ("c", "d"), ("a", "e")])
    n = resolve_neighbors(corpus, "c")
    assert n.parents == ("a", "b")
    assert n.children == ("d",)
    assert n.siblings == ("e",)


def test_resolve_unknown_page():
    with pytest.raises(KeyError):
        resolve_neighbors(graph([("a", "b")]), "nope")


edges_strategy = st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=30)


@settings(max_examples=60, deadline=None)
@given(edges_strategy)
def test_link_index_and_neighbor_invariants(edges):
    corpus = graph([(f"n{a}", f"n{b}") for a, b in edges], nodes=[f"n{i}" for i in range(8)])
    for p, c in itertools.product(corpus.ids, repeat=2):
        assert (p in corpus.parents(c)) == (c in corpus.children(p))
    sets = {pid: resolve_neighbors(corpus, pid) for pid in corpus.ids}
    for pid, n in sets.items():
        assert pid not in n.parents + n.children + n.siblings
        assert resolve_neighbors(corpus, pid) == n
        for s in n.siblings:
            assert pid in sets[s].siblings


def test_synthetic_is_deterministic(tmp_path):
    spec = SyntheticSpec(n_classes=2, pages_per_class=10, seed=7)
    write_corpus(generate_synthetic_corpus(spec), tmp_path / "a.jsonl")
    write_corpus(generate_synthetic_corpus(spec), tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_synthetic_round_trips_through_file(tmp_path):
    corpus = generate_synthetic_corpus(SyntheticSpec(n_classes=3, pages_per_class=5, seed=2))
    write_corpus(corpus, tmp_path / "c.jsonl")
    again = load_corpus(tmp_path / "c.jsonl")
    assert list(again) == list(corpus)


def test_zero_link_noise_keeps_links_within_class():
    corpus = generate_synthetic_corpus(SyntheticSpec(n_classes=4, pages_per_class=12, link_noise=0.0, seed=3))
    for page in corpus:
        for target in page.outlinks:
            assert corpus[target].label == page.label


def test_synthetic_label_histogram():
    corpus = generate_synthetic_corpus(SyntheticSpec(n_classes=8, pages_per_class=50, seed=1))
    assert set(corpus.label_histogram().values()) == {50}
    assert len(corpus.categories) == 8


def test_synthetic_links_mostly_intra_class():
    corpus = generate_synthetic_corpus(SyntheticSpec(link_noise=0.2, seed=5))
    pairs = [(p.label, corpus[t].label) for p in corpus for t in p.outlinks]
    intra = sum(a == b for a, b in pairs) / len(pairs)
    assert 0.7 < intra < 0.9


def test_synthetic_planted_blocks_in_text():
    spec = SyntheticSpec(n_classes=2, pages_per_class=6, seed=4)
    class_words, _, _ = planted_blocks(spec)
    corpus = generate_synthetic_corpus(spec)
    for page in corpus:
        c = corpus.categories.index(page.label)
        other = set(class_words[1 - c])
        assert not other.intersection(page.text.split())


@pytest.mark.parametrize("kwargs", [dict(n_classes=1), dict(pages_per_class=1), dict(link_noise=1.5),
                                    dict(class_word_rate=0.7, group_word_rate=0.5)])
def test_synthetic_rejects_bad_spec(kwargs):
    with pytest.raises(ValueError):
        generate_synthetic_corpus(SyntheticSpec(**kwargs))
