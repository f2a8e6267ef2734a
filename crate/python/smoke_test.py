"""Smoke test for the coblock_py extension module.

Builds nothing itself: run `cargo build -p coblock-py` (or --release) first,
then `python3 python/smoke_test.py`. The compiled cdylib is copied into a
temp directory under the importable name coblock_py.so.
"""

import math
import os
import shutil
import sys
import tempfile


def locate_library(root):
    for profile in ("release", "debug"):
        path = os.path.join(root, "target", profile, "libcoblock_py.so")
        if os.path.exists(path):
            return path
    sys.exit("libcoblock_py.so not found; run `cargo build -p coblock-py` first")


def main():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    lib = locate_library(root)
    with tempfile.TemporaryDirectory() as tmp:
        shutil.copy(lib, os.path.join(tmp, "coblock_py.so"))
        sys.path.insert(0, tmp)
        import coblock_py

        # end to end on planted structure: simulate, fit, score
        adj, rows, cols = coblock_py.simulate_diagonal(90, 70, 3, 0.04, seed=11)
        assert adj.shape() == (90, 70)
        assert adj.model() == "bernoulli"
        out = coblock_py.fit(adj, kmax=8, gmax=8, restarts=3, seed=1)
        assert out.k == 3 and out.g == 3, (out.k, out.g)
        score = coblock_py.combined_nmi(out.row_labels, rows, out.col_labels, cols)
        assert score > 1.99, score

        # the objective never decreases along the recorded trace
        assert all(b >= a - 1e-9 for a, b in zip(out.trace, out.trace[1:]))
        assert out.icl == out.trace[-1]
        assert out.min_accepted_delta > 0

        # same seed, same answer
        again = coblock_py.fit(adj, kmax=8, gmax=8, restarts=3, seed=1)
        assert again.icl == out.icl
        assert again.row_labels == out.row_labels

        # constructing from lists matches the generated matrix cell by cell
        dense = adj.to_dense()
        rebuilt = coblock_py.Adjacency.from_dense(dense, "bernoulli")
        assert rebuilt.nnz() == adj.nnz()
        assert rebuilt.get(0, 0) == adj.get(0, 0)

        # label-permutation invariance of the score
        relabeled = [(l + 1) % 3 for l in rows]
        assert math.isclose(coblock_py.nmi(list(rows), relabeled), 1.0)

        # errors surface as Python exceptions
        try:
            coblock_py.Adjacency.from_dense([[0.0, 2.0]], "bernoulli")
        except ValueError:
            pass
        else:
            raise AssertionError("domain violation should raise ValueError")

        print(f"smoke test passed: icl={out.icl:.3f} k={out.k} g={out.g} nmi={score:.3f}")


if __name__ == "__main__":
    main()
