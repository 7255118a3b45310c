"""Writes the local multiclass CSV datasets used by the correlation study.

iris, wine and digits are the UCI copies bundled with scikit-learn; blobs5 is a
seeded synthetic 5-class Gaussian mixture with overlapping classes.
Output: data/<name>.csv with a header row and the label in the last column.
"""
import pathlib

import numpy as np
from sklearn import datasets

out = pathlib.Path(__file__).resolve().parent.parent / "data"
out.mkdir(exist_ok=True)


def write(name, X, y):
    cols = [f"f{j}" for j in range(X.shape[1])] + ["label"]
    with open(out / f"{name}.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row, lab in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")


iris = datasets.load_iris()
write("iris", iris.data, [iris.target_names[t] for t in iris.target])
wine = datasets.load_wine()
write("wine", wine.data, [f"cultivar{t}" for t in wine.target])
digits = datasets.load_digits()
write("digits", digits.data, digits.target)

rng = np.random.default_rng(20150601)
centers = rng.normal(scale=2.0, size=(5, 6))
y = rng.integers(0, 5, size=600)
X = centers[y] + rng.normal(scale=1.6, size=(600, 6))
write("blobs5", np.round(X, 6), [f"k{t}" for t in y])
