"""Labeled web-page collections with their hyperlink graph.

A corpus file holds one JSON object per line::

    {"id": "p1", "category": "art", "text": "...", "links": ["p7", "p9"]}

Pages are always ordered by id, and categories are kept sorted. Every
matrix built downstream uses these two orderings.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

NEIGHBOR_KINDS = ("parent", "child", "sibling")


class CorpusError(ValueError):
    """Raised for invalid corpus files or page collections."""


@dataclass(frozen=True)
class WebPage:
    id: str
    label: str
    text: str
    outlinks: tuple[str, ...] = ()


@dataclass(frozen=True)
class NeighborSets:
    parents: tuple[str, ...]
    children: tuple[str, ...]
    siblings: tuple[str, ...]

    def of_kind(self, kind: str) -> tuple[str, ...]:
        if kind == "parent":
            return self.parents
        if kind == "child":
            return self.children
        if kind == "sibling":
            return self.siblings
        raise ValueError(f"unknown neighbor kind {kind!r}")


class Corpus:
    """Immutable id-indexed page collection with forward and reverse link indexes.

    Outlinks to ids outside the collection and self-links are dropped on
    construction; the number dropped is logged and kept in
    ``dropped_links``.
    """

    def __init__(self, pages: Iterable[WebPage]):
        by_id: dict[str, WebPage] = {}
        for page in pages:
            if page.id in by_id:
                raise CorpusError(f"duplicate page id {page.id!r}")
            if not page.label:
                raise CorpusError(f"page {page.id!r} has an empty label")
            by_id[page.id] = page
        if not by_id:
            raise CorpusError("empty corpus")

        dropped = 0
        cleaned: dict[str, WebPage] = {}
        for pid in sorted(by_id):
            page = by_id[pid]
            keep = []
            seen = set()
            for target in page.outlinks:
                if target == pid or target not in by_id:
                    dropped += 1
                    continue
                if target not in seen:
                    seen.add(target)
                    keep.append(target)
            cleaned[pid] = WebPage(pid, page.label, page.text, tuple(keep))
        if dropped:
            logger.warning("dropped %d dangling or self-referencing links", dropped)

        self.dropped_links = dropped
        self._pages = cleaned
        self.ids: tuple[str, ...] = tuple(cleaned)
        self.categories: tuple[str, ...] = tuple(sorted({p.label for p in cleaned.values()}))
        self._position = {pid: i for i, pid in enumerate(self.ids)}

        children: dict[str, tuple[str, ...]] = {}
        parents: dict[str, list[str]] = {pid: [] for pid in self.ids}
        for pid, page in cleaned.items():
            children[pid] = tuple(sorted(page.outlinks))
            for target in page.outlinks:
                parents[target].append(pid)
        self._children = children
        self._parents = {pid: tuple(sorted(ps)) for pid, ps in parents.items()}

    def __len__(self) -> int:
        return len(self._pages)

    def __iter__(self):
        return iter(self._pages.values())

    def __getitem__(self, page_id: str) -> WebPage:
        try:
            return self._pages[page_id]
        except KeyError:
            raise KeyError(f"unknown page id {page_id!r}") from None

    def __contains__(self, page_id: str) -> bool:
        return page_id in self._pages

    def position(self, page_id: str) -> int:
        """Row index of ``page_id`` in every corpus-aligned matrix."""
        return self._position[page_id]

    @property
    def labels(self) -> list[str]:
        return [self._pages[pid].label for pid in self.ids]

    @property
    def label_indices(self) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.categories)}
        return np.array([lookup[label] for label in self.labels], dtype=np.int64)

    @property
    def texts(self) -> list[str]:
        return [self._pages[pid].text for pid in self.ids]

    def children(self, page_id: str) -> tuple[str, ...]:
        self[page_id]
        return self._children[page_id]

    def parents(self, page_id: str) -> tuple[str, ...]:
        self[page_id]
        return self._parents[page_id]

    def label_histogram(self) -> dict[str, int]:
        hist = dict.fromkeys(self.categories, 0)
        for page in self:
            hist[page.label] += 1
        return hist

    def subset(self, page_ids: Sequence[str]) -> "Corpus":
        """Corpus restricted to ``page_ids``; links leaving the subset are dropped."""
        return Corpus(self[pid] for pid in page_ids)


def resolve_neighbors(corpus: Corpus, page_id: str) -> NeighborSets:
    """Parent, child and sibling pages of ``page_id``.

    Siblings are the union of the children of every parent, minus the page
    itself. All three tuples are sorted by id.
    """
    parents = corpus.parents(page_id)
    children = corpus.children(page_id)
    siblings: set[str] = set()
    for parent in parents:
        siblings.update(corpus.children(parent))
    siblings.discard(page_id)
    return NeighborSets(parents, children, tuple(sorted(siblings)))


def _parse_record(line: str, lineno: int) -> WebPage:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"line {lineno}: malformed record ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise CorpusError(f"line {lineno}: record must be an object")
    for key, kind in (("id", str), ("category", str), ("text", str), ("links", list)):
        if key not in rec:
            raise CorpusError(f"line {lineno}: missing field {key!r}")
        if not isinstance(rec[key], kind):
            raise CorpusError(f"line {lineno}: field {key!r} must be {kind.__name__}")
    if not all(isinstance(x, str) for x in rec["links"]):
        raise CorpusError(f"line {lineno}: links must be strings")
    if not rec["category"]:
        raise CorpusError(f"line {lineno}: page {rec['id']!r} has an empty label")
    return WebPage(rec["id"], rec["category"], rec["text"], tuple(rec["links"]))


def read_pages(path: str | Path) -> list[WebPage]:
    pages = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            page = _parse_record(line, lineno)
            if page.id in seen:
                raise CorpusError(
                    f"line {lineno}: duplicate page id {page.id!r} (first on line {seen[page.id]})"
                )
            seen[page.id] = lineno
            pages.append(page)
    return pages


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSON-lines corpus file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    return Corpus(read_pages(path))


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for page in corpus:
            rec = {"id": page.id, "category": page.label, "text": page.text,
                   "links": list(page.outlinks)}
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a planted-topic corpus.

    Classes come in groups of ``group_size``; each class owns a block of
    ``words_per_class`` words and each group shares a block of
    ``words_per_group`` words, so classes in one group are confusable.
    A page draws roughly ``class_word_rate`` of its tokens from its class
    block, ``group_word_rate`` from its group block, and the rest from a
    background block shared by everyone. Each page links to
    ``links_per_page`` others; a link leaves the page's class with
    probability ``link_noise``.
    """

    n_classes: int = 8
    pages_per_class: int = 60
    words_per_class: int = 150
    words_per_group: int = 40
    background_words: int = 400
    doc_length: int = 30
    class_word_rate: float = 0.2
    group_word_rate: float = 0.2
    links_per_page: int = 4
    link_noise: float = 0.3
    group_size: int = 2
    background_zipf: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.pages_per_class < 2:
            raise ValueError("pages_per_class must be >= 2")
        if self.words_per_class < 1 or self.words_per_group < 0 or self.background_words < 0:
            raise ValueError("vocabulary block sizes must be positive")
        if self.doc_length < 1:
            raise ValueError("doc_length must be >= 1")
        rates = (self.class_word_rate, self.group_word_rate, self.link_noise)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("rates must lie in [0, 1]")
        if self.class_word_rate + self.group_word_rate > 1.0:
            raise ValueError("class_word_rate + group_word_rate must be <= 1")
        if self.group_word_rate > 0 and self.words_per_group < 1:
            raise ValueError("group_word_rate > 0 needs words_per_group >= 1")
        if self.class_word_rate + self.group_word_rate < 1.0 and self.background_words < 1:
            raise ValueError("background tokens requested but background_words is 0")
        if self.links_per_page < 0:
            raise ValueError("links_per_page must be >= 0")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.background_zipf < 0:
            raise ValueError("background_zipf must be >= 0")


# Pinned recipe for the end-to-end experiments: 8 classes x 60 pages.
BUNDLED_SYNTHETIC = SyntheticSpec(
    n_classes=8, pages_per_class=60, words_per_class=150, words_per_group=40, background_words=400,
    doc_length=30, class_word_rate=0.2, group_word_rate=0.2, links_per_page=4, link_noise=0.3,
    group_size=2, background_zipf=1.0, seed=1,
)


def class_name(c: int) -> str:
    return f"class{c:02d}"


def planted_blocks(spec: SyntheticSpec) -> tuple[list[list[str]], list[list[str]], list[str]]:
    """Class, group and background word blocks of a synthetic recipe."""
    n_groups = -(-spec.n_classes // spec.group_size)
    class_words = [[f"cls{c:02d}w{j:03d}" for j in range(spec.words_per_class)]
                   for c in range(spec.n_classes)]
    group_words = [[f"grp{g:02d}w{j:03d}" for j in range(spec.words_per_group)]
                   for g in range(n_groups)]
    background = [f"bgw{j:04d}" for j in range(spec.background_words)]
    return class_words, group_words, background


def generate_synthetic_corpus(spec: SyntheticSpec = BUNDLED_SYNTHETIC) -> Corpus:
    """Build a deterministic corpus from ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    class_words, group_words, background = planted_blocks(spec)

    n_pages = spec.n_classes * spec.pages_per_class
    labels = np.repeat(np.arange(spec.n_classes), spec.pages_per_class)
    order = rng.permutation(n_pages)
    width = len(str(n_pages - 1))
    ids = [f"p{i:0{width}d}" for i in range(n_pages)]
    label_of = np.empty(n_pages, dtype=np.int64)
    label_of[order] = labels
    members = [np.flatnonzero(label_of == c) for c in range(spec.n_classes)]

    bg_p = 1.0 / np.arange(1, len(background) + 1) ** spec.background_zipf
    bg_p /= bg_p.sum() if len(bg_p) else 1.0
    rates = np.array([spec.class_word_rate, spec.group_word_rate,
                      1.0 - spec.class_word_rate - spec.group_word_rate])
    pages = []
    for i in range(n_pages):
        c = int(label_of[i])
        blocks = (class_words[c], group_words[c // spec.group_size], background)
        length = max(1, int(rng.poisson(spec.doc_length)))
        source = rng.choice(3, size=length, p=rates)
        tokens = []
        for s in source:
            block = blocks[s]
            if s == 2:
                tokens.append(block[int(rng.choice(len(block), p=bg_p))])
            else:
                tokens.append(block[int(rng.integers(len(block)))])

        links = []
        for _ in range(spec.links_per_page):
            if rng.random() < spec.link_noise:
                pool = np.flatnonzero(label_of != c)
            else:
                pool = members[c][members[c] != i]
            if len(pool):
                links.append(ids[int(pool[rng.integers(len(pool))])])
        pages.append(WebPage(ids[i], class_name(c), " ".join(tokens), tuple(links)))
    return Corpus(pages)
