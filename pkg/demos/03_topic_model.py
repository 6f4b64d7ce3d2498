"""
LDA topics by collapsed Gibbs sampling
======================================

Train on the bundled corpus and look at what the topics picked up.
Planted class words are named ``clsNNw...``, group words ``grpNNw...``.
"""
import numpy as np

from topiclass.corpus import BUNDLED_SYNTHETIC, generate_synthetic_corpus
from topiclass.features import build_vocabulary, tokenize_corpus
from topiclass.topicmodel import LdaConfig, infer_topics, train_lda

corpus = generate_synthetic_corpus(BUNDLED_SYNTHETIC)
tokens = tokenize_corpus(corpus)
vocab = build_vocabulary(tokens, min_df=3)
tokens = [[t for t in doc if t in vocab] for doc in tokens]

config = LdaConfig(n_topics=16, epochs=200, alpha=0.1, beta=0.01, seed=0)
model, theta = train_lda(tokens, vocab, config)
# Top words are dominated by the frequent background words, so summarize
# each topic by the planted block that holds most of its probability mass.
block = np.array([t[:5] if not t.startswith("bgw") else "bg" for t in vocab.terms])
names, idx = np.unique(block, return_inverse=True)
for k in range(model.n_topics):
    mass = np.bincount(idx, weights=model.phi[k])
    planted = mass.copy()
    planted[names == "bg"] = 0
    best = int(np.argmax(planted))
    print(f"topic {k:2d}: background {mass[names == 'bg'][0]:.2f}, "
          f"largest planted block {names[best]} {mass[best]:.2f}")

# log-likelihood at initialization and at the sampled sweeps
print("log-likelihood:", [round(ll) for _, ll in model.log_likelihoods[::5]])

# Fold-in keeps the topics fixed and re-infers a page's mixture.
row = infer_topics(model, tokens[0], iterations=50, seed=0)
print("training row vs fold-in, total variation:", round(0.5 * np.abs(row - theta[0]).sum(), 3))
