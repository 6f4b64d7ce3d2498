"""
Kernel SVM by SMO
=================
"""
import numpy as np

from topiclass.svm import KernelSpec, train_binary, train_multiclass

# XOR is not linearly separable, but it is under a degree-2 polynomial kernel.
X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
y = np.array([-1, -1, 1, 1])
for degree in (1, 2):
    model = train_binary(X, y, C=10, kernel=KernelSpec(degree, 1.0))
    print(f"degree {degree}: predictions {model.predict(X).tolist()}, "
          f"{len(model.dual_coef)} support vectors, {model.n_iter} SMO steps")

# One-vs-one over three clouds.
rng = np.random.default_rng(0)
centers = {"A": (0, 0), "B": (4, 0), "C": (2, 3)}
Xm = np.vstack([rng.normal(c, 0.6, size=(20, 2)) for c in centers.values()])
labels = [k for k in centers for _ in range(20)]
multi = train_multiclass(Xm, labels, C=1.0)
print("pairs:", sorted(multi.models))
print("training accuracy:", np.mean(np.array(multi.predict(Xm)) == np.array(labels)))
print("(2, 1) ->", multi.predict(np.array([[2.0, 1.0]]))[0])
