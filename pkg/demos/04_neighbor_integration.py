"""
Adding neighbor topics to a page
================================

Each page's topic row is combined with the mean topic rows of its
parents, children and siblings. Rows are not renormalized, so a page
with all three kinds of neighbor sums to ``1 + wp + wc + ws``.
"""
import numpy as np

from topiclass.corpus import BUNDLED_SYNTHETIC, generate_synthetic_corpus
from topiclass.evaluation import BUNDLED_EXPERIMENT, corpus_topics
from topiclass.neighbors import NeighborTopicMatrices, NeighborWeights, inp_integrate

corpus = generate_synthetic_corpus(BUNDLED_SYNTHETIC)
theta = corpus_topics(corpus, BUNDLED_EXPERIMENT)
neigh = NeighborTopicMatrices.from_corpus(corpus, theta)

weights = NeighborWeights(0.4, 0.0, 0.3)
idt = inp_integrate(theta, neigh, weights)
print("row sums:", np.round(idt.sum(axis=1)[:5], 6))

# A page's own mixture is noisy; its neighbors mostly share its class,
# so their rows sharpen the class signal.
i = 0
top = np.argsort(-theta[i])[:3]
print("own top topics:", top, np.round(theta[i, top], 3))
print("parents' mean on them:", np.round(neigh.pdt[i, top], 3))
print("integrated:", np.round(idt[i, top], 3))
