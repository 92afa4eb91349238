"""The worst-case smooth convex quadratic used throughout the benchmarks.

A chain of coupled differences that makes first-order methods crawl:
information propagates one coordinate per gradient touch, so plain
gradient descent needs O(n^2) work to resolve the tail.  The function
has a closed-form minimum, which makes it a sharp test problem.
"""

import os
import tempfile

import numpy as np

from subspace_descent.objectives import (
    load_quadratic_problem,
    nesterov_worst,
    quadratic_minimizer,
    save_quadratic_problem,
)


def closed_form(r, lipschitz):
    return (lipschitz / 16.0) * (-1.0 + 1.0 / (r + 1.0))


def main():
    n, lip = 15, 2.0
    obj = nesterov_worst(n, lipschitz=lip)
    print(f"n={n}  L={lip}  f(0)={obj.value(np.zeros(n))}")
    print(f"known minimum  {obj.known_minimum:.12f}")
    print(f"closed form    {closed_form(n, lip):.12f}")

    # The minimizer decays linearly from 1/2 toward 0 along the chain.
    xstar = obj.minimizer()
    print("minimizer:", np.array2string(xstar, precision=4))
    solved = quadratic_minimizer(obj)
    print(f"solver agrees with closed form: {np.allclose(solved, xstar, atol=1e-12)}")
    print(f"value at solved minimizer {obj.value(solved):.12f}")

    # Gradient sanity by central differences (exact for quadratics).
    rng = np.random.default_rng(2)
    x = rng.standard_normal(n)
    h = 1e-4
    g = obj.gradient(x)
    fd = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fd[i] = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
    print(f"max |grad - central difference| = {np.max(np.abs(g - fd)):.2e}")

    # Shortening the active range r < n leaves trailing flat directions,
    # so the Hessian goes singular there (handled as semidefinite).
    short = nesterov_worst(n, 6, lip)
    print(f"r=6 active length: {short.active_length}, "
          f"strongly convex: {short.strongly_convex}")

    # Problems round-trip through a plain text format (upper-triangle
    # triplets plus an rhs file).
    with tempfile.TemporaryDirectory() as tmp:
        mpath = os.path.join(tmp, "chain_matrix.txt")
        rpath = os.path.join(tmp, "chain_rhs.txt")
        save_quadratic_problem(obj, mpath, rpath)
        back = load_quadratic_problem(mpath, rpath)
        same = np.array_equal(back.hessian_matrix.dense(),
                              obj.hessian_matrix.dense())
        print(f"text round trip exact: {same}")


if __name__ == "__main__":
    main()
