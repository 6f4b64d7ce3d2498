"""
A class hierarchy from a confusion matrix
=========================================

Cross-validate a flat SVM, symmetrize its confusions, and merge the most
confused classes first. The bundled corpus plants classes in pairs that
share vocabulary, and the tree recovers those pairs.
"""
import numpy as np

from topiclass.corpus import BUNDLED_SYNTHETIC, generate_synthetic_corpus
from topiclass.evaluation import BUNDLED_EXPERIMENT, corpus_topics, cross_validate
from topiclass.hierarchy import build_dendrogram, compute_apcm, train_hsvm

corpus = generate_synthetic_corpus(BUNDLED_SYNTHETIC)
theta = corpus_topics(corpus, BUNDLED_EXPERIMENT)
flat = cross_validate(corpus, "topic_current", "svm", BUNDLED_EXPERIMENT, theta)
print(flat.confusion.counts)

apcm = compute_apcm(flat.confusion)
tree = build_dendrogram(apcm, corpus.categories)
print(tree.to_text())

p = BUNDLED_EXPERIMENT.svm
hsvm = train_hsvm(tree, theta, corpus.labels, p.C, p.kernel, p.tol)
print("HSVM training accuracy:", np.mean(np.array(hsvm.predict(theta)) == np.array(corpus.labels)))
