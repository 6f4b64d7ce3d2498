"""
Comparing feature approaches
============================

Bag of words against the page's own topics against topics plus
neighbors, each under a flat and a hierarchical SVM. Neighbor weights
are picked by a grid sweep. Takes about a minute on one core.
"""
from topiclass.corpus import BUNDLED_SYNTHETIC, generate_synthetic_corpus
from topiclass.evaluation import BUNDLED_EXPERIMENT, BUNDLED_SWEEP_STEP, compare_approaches, format_results_table

corpus = generate_synthetic_corpus(BUNDLED_SYNTHETIC)
comparison = compare_approaches(corpus, BUNDLED_EXPERIMENT, BUNDLED_SWEEP_STEP)
print(format_results_table(list(comparison.results.values())))

sweep = comparison.sweeps["svm"]
print("best five weight triples for the flat SVM:")
print(format_results_table(sweep.rows[:5]))
