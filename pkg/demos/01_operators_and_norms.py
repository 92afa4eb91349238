"""Tridiagonal SPD operators, energy norms, and their closed forms.

The whole library leans on one small linear-algebra layer: a symmetric
positive definite operator with a cached Cholesky factor, plus inner
products and norms measured against it.  This script pokes at that
layer directly.
"""

import numpy as np

from subspace_descent.linalg import (
    SpdOperator,
    a_inner_product,
    a_norm,
    dirichlet_laplacian,
    dual_norm,
    spd_solve,
)


def main():
    n = 15
    lap = dirichlet_laplacian(n)  # tridiag(-1, 2, -1), banded storage
    print(f"operator: {n}x{n} second-difference matrix, banded={lap.is_banded}")

    # Eigenvalues have the classical closed form 2 - 2 cos(k pi / (n+1)).
    lo, hi = lap.extreme_eigenvalues()
    k = np.arange(1, n + 1)
    exact = 2.0 - 2.0 * np.cos(k * np.pi / (n + 1))
    print(f"lambda_min {lo:.12f}  (exact {exact[0]:.12f})")
    print(f"lambda_max {hi:.12f}  (exact {exact[-1]:.12f})")
    print(f"condition  {hi / lo:.2f}")

    # Solving against the factorization, then checking the residual.
    rng = np.random.default_rng(7)
    b = rng.standard_normal(n)
    x = spd_solve(lap, b)
    r = b - lap.matvec(x)
    print(f"solve residual {np.linalg.norm(r):.3e} (rhs norm {np.linalg.norm(b):.3f})")

    # Energy inner product (x, y)_A = x' A y and its dual counterpart
    # (r, r)_{A^{-1}}.  For r = A x the two norms coincide.
    y = rng.standard_normal(n)
    print(f"(x, y)_A        = {a_inner_product(lap, x, y): .6f}")
    print(f"|x|_A           = {a_norm(lap, x):.6f}")
    print(f"|Ax|_{{A^-1}}     = {dual_norm(lap, lap.matvec(x)):.6f}  (equal by design)")

    # Cauchy-Schwarz in the energy inner product, sampled.
    worst = 0.0
    for _ in range(1000):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        worst = max(worst, abs(a_inner_product(lap, u, v)) / (a_norm(lap, u) * a_norm(lap, v)))
    print(f"max |(u,v)_A| / (|u|_A |v|_A) over 1000 pairs: {worst:.6f} (<= 1)")

    # Dense storage works the same way; banded just saves memory.
    dense = SpdOperator.from_dense(lap.dense())
    print(f"banded vs dense solve agree: {np.allclose(spd_solve(dense, b), x, rtol=1e-14)}")


if __name__ == "__main__":
    main()
