"""
Corpus and hyperlink neighbors
==============================

A corpus is a list of pages, each with a category and outgoing links.
Parents link to a page, children are linked from it, and siblings share
a parent with it.
"""
from topiclass.corpus import BUNDLED_SYNTHETIC, Corpus, WebPage, generate_synthetic_corpus, resolve_neighbors

# A toy graph: a links to b and c, b links to d.
toy = Corpus([WebPage("a", "x", "", ("b", "c")), WebPage("b", "x", "", ("d",)),
              WebPage("c", "y", "", ()), WebPage("d", "y", "", ())])
for pid in toy.ids:
    n = resolve_neighbors(toy, pid)
    print(f"{pid}: parents={n.parents} children={n.children} siblings={n.siblings}")

# The bundled synthetic corpus: 8 classes in confusable pairs, 60 pages each.
corpus = generate_synthetic_corpus(BUNDLED_SYNTHETIC)
print(len(corpus), "pages;", corpus.label_histogram())
page = corpus[corpus.ids[0]]
print(page.id, page.label, page.text[:80], "...")
same = sum(corpus[t].label == page.label for t in page.outlinks)
print(f"{same}/{len(page.outlinks)} of its links stay inside its class")
