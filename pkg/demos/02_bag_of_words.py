"""
Bag of words with information-gain selection
============================================
"""
import numpy as np

from topiclass.corpus import BUNDLED_SYNTHETIC, generate_synthetic_corpus
from topiclass.features import build_term_doc_matrix, build_vocabulary, information_gain, select_top_k, tokenize

print(tokenize("The SVM-based 2-class models, and the CAT!"))

corpus = generate_synthetic_corpus(BUNDLED_SYNTHETIC)
vocab = build_vocabulary(corpus, min_df=3)
tdm = build_term_doc_matrix(corpus, vocab)
print("vocabulary:", len(vocab), "terms; matrix", tdm.shape)

# Class-block words carry the most information about the label,
# background words the least.
ig = information_gain(tdm, corpus.labels)
order = np.argsort(-ig)
print("top terms:", [(vocab.terms[i], round(float(ig[i]), 3)) for i in order[:5]])
print("bottom terms:", [(vocab.terms[i], round(float(ig[i]), 4)) for i in order[-3:]])

kept, reduced = select_top_k(ig, 300, tdm)
print("kept", len(kept), "terms; reduced matrix", reduced.shape)
