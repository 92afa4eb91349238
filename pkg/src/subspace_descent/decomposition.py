"""Space decompositions: coordinates, blocks, and multilevel nodal hats.

A decomposition is a finite family of low-dimensional subspaces of R^n,
each given by a sparse prolongation (basis columns living on a small
support set), together with a metric operator A.  Each subspace carries
its Galerkin local matrix ``A_i = P_i^T A P_i`` and a local Lipschitz
constant used for step sizes and sampling weights.

Index convention: all supports, basis rows, and subspace indices are
0-based throughout the package.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .linalg import (
    DENSE_EIG_LIMIT,
    DimensionMismatchError,
    NotSpdError,
    SpdOperator,
    a_norm,
    as_vector,
    dirichlet_laplacian,
)

__all__ = [
    "Subspace",
    "Decomposition",
    "coordinate_decomposition",
    "block_decomposition",
    "multilevel_nodal_decomposition",
    "galerkin_local_matrix",
    "local_lipschitz_quadratic",
    "rcd_column_lipschitz",
    "with_quadratic_lipschitz",
    "with_local_lipschitz",
    "stability_constant",
    "export_decomposition",
]


def _metric_window(m, support):
    """Dense submatrix ``m[support, support]`` for operator or array ``m``."""
    if isinstance(m, SpdOperator):
        if m.is_banded:
            d, e = m.bands
            w = np.diag(d[support])
            if support.size > 1:
                adj = np.where(np.diff(support) == 1)[0]
                w[adj, adj + 1] = e[support[adj]]
                w[adj + 1, adj] = e[support[adj]]
            return w
        m = m.dense()
    else:
        m = np.asarray(m, dtype=np.float64)
    return m[np.ix_(support, support)]


class Subspace:
    """One subspace of a decomposition.

    Parameters
    ----------
    ambient_dimension : int
    support : array of int
        Strictly increasing 0-based row indices where basis columns are
        nonzero.
    basis : (len(support), k) array
        Basis columns restricted to the support; must have full column
        rank k >= 1.
    local_matrix : SpdOperator
        The k-by-k local SPD matrix (normally the Galerkin product with
        the decomposition metric).
    local_lipschitz : float
        Smoothness constant of the objective restricted to this
        subspace, measured against ``local_matrix``; defaults to 1.
    level : int
        Grid level for multilevel constructions (finest = largest);
        0 for flat families like coordinates and blocks.

    Instances are treated as immutable.
    """

    __slots__ = (
        "ambient_dimension",
        "support",
        "basis",
        "local_matrix",
        "local_lipschitz",
        "level",
        "_scalar",
    )

    def __init__(
        self,
        ambient_dimension,
        support,
        basis,
        local_matrix,
        local_lipschitz=1.0,
        level=0,
    ):
        support = np.asarray(support, dtype=np.intp)
        if support.ndim != 1 or support.size == 0:
            raise ValueError("support must be a nonempty 1-D index array")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support indices must be strictly increasing")
        if support[0] < 0 or support[-1] >= ambient_dimension:
            raise ValueError("support index out of range")
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.shape[0] != support.size:
            raise DimensionMismatchError(
                "basis must have one row per support index"
            )
        k = basis.shape[1]
        if not isinstance(local_matrix, SpdOperator):
            local_matrix = SpdOperator.from_dense(np.atleast_2d(local_matrix))
        if local_matrix.dimension != k:
            raise DimensionMismatchError(
                f"local matrix is {local_matrix.dimension}-dim, basis has {k} columns"
            )
        if k == 1:
            if not np.any(basis):
                raise ValueError("basis columns are linearly dependent")
        elif np.linalg.matrix_rank(basis) != k:
            raise ValueError("basis columns are linearly dependent")
        if not local_lipschitz > 0:
            raise ValueError("local Lipschitz constant must be positive")
        self.ambient_dimension = int(ambient_dimension)
        self.support = support
        self.basis = basis
        self.local_matrix = local_matrix
        self.local_lipschitz = float(local_lipschitz)
        self.level = int(level)
        # Scalar fast path for one-dimensional subspaces.
        self._scalar = float(local_matrix.dense()[0, 0]) if k == 1 else None

    @property
    def dimension(self):
        """Number of basis columns k (not the ambient dimension)."""
        return self.basis.shape[1]

    @property
    def column(self):
        """Support-restricted basis vector; only for k = 1."""
        if self.dimension != 1:
            raise ValueError("column is only defined for one-dimensional subspaces")
        return self.basis[:, 0]

    def restrict(self, full):
        """Apply ``P_i^T`` to a full-space vector."""
        return self.basis.T @ full[self.support]

    def prolong(self, coeffs):
        """Apply ``P_i`` to local coefficients, returning a full vector."""
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
        out = np.zeros(self.ambient_dimension)
        out[self.support] = self.basis @ coeffs
        return out

    def add_prolonged(self, x, coeffs):
        """In-place ``x += P_i @ coeffs``."""
        x[self.support] += self.basis @ np.atleast_1d(coeffs)

    def prolongation_dense(self):
        """The full (n, k) prolongation matrix."""
        p = np.zeros((self.ambient_dimension, self.dimension))
        p[self.support, :] = self.basis
        return p

    def solve_local(self, v):
        """Solve ``A_i w = v`` in the local matrix."""
        if self._scalar is not None:
            return np.atleast_1d(np.asarray(v, dtype=np.float64)) / self._scalar
        return self.local_matrix.solve(v)

    def with_lipschitz(self, value):
        """Copy of this subspace with a different local Lipschitz constant."""
        return Subspace(
            self.ambient_dimension,
            self.support,
            self.basis,
            self.local_matrix,
            local_lipschitz=value,
            level=self.level,
        )

    def __repr__(self):
        return (
            f"Subspace(k={self.dimension}, support=[{self.support[0]}..."
            f"{self.support[-1]}], level={self.level}, L={self.local_lipschitz:g})"
        )


class Decomposition:
    """An ordered family of subspaces sharing a metric operator.

    The metric (``preconditioner``) is the SPD operator A in which all
    norms, Galerkin products, and the stability constant are measured.
    """

    def __init__(self, subspaces, preconditioner):
        subspaces = tuple(subspaces)
        if not subspaces:
            raise ValueError("decomposition needs at least one subspace")
        n = preconditioner.dimension
        for s in subspaces:
            if s.ambient_dimension != n:
                raise DimensionMismatchError(
                    "subspace ambient dimension does not match the metric"
                )
        self.subspaces = subspaces
        self.preconditioner = preconditioner
        self._stability = None

    def __len__(self):
        return len(self.subspaces)

    def __iter__(self):
        return iter(self.subspaces)

    def __getitem__(self, i):
        return self.subspaces[i]

    @property
    def ambient_dimension(self):
        return self.preconditioner.dimension

    @property
    def lipschitz(self):
        """Vector of local Lipschitz constants (length J)."""
        return np.array([s.local_lipschitz for s in self.subspaces])

    @property
    def mean_lipschitz(self):
        return float(np.mean(self.lipschitz))

    @property
    def stability_constant(self):
        """Stability constant of the splitting; computed lazily, cached."""
        if self._stability is None:
            self._stability = stability_constant(self)
        return self._stability

    def __repr__(self):
        return (
            f"Decomposition(J={len(self)}, n={self.ambient_dimension}, "
            f"metric={'banded' if self.preconditioner.is_banded else 'dense'})"
        )


# -- builders ----------------------------------------------------------


def coordinate_decomposition(n, metric=None):
    """One subspace per coordinate direction.

    With the identity metric this realizes plain (randomized) coordinate
    descent; local matrices are the diagonal entries of the metric.
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    metric = SpdOperator.identity(n) if metric is None else metric
    if metric.dimension != n:
        raise DimensionMismatchError("metric dimension does not match n")
    diag = metric.diagonal()
    subspaces = [
        Subspace(n, [i], [[1.0]], SpdOperator.from_dense([[diag[i]]]))
        for i in range(n)
    ]
    return Decomposition(subspaces, metric)


def block_decomposition(partition, metric):
    """One subspace per block of a partition of {0, ..., n-1}.

    ``partition`` is an iterable of index collections that must be
    disjoint and cover every coordinate.  Basis vectors are the
    coordinate directions of each block (indices sorted ascending), and
    local matrices are the corresponding principal submatrices of the
    metric.
    """
    n = metric.dimension
    blocks = [np.array(sorted(int(i) for i in b), dtype=np.intp) for b in partition]
    if not blocks:
        raise ValueError("partition must contain at least one block")
    flat = np.concatenate(blocks)
    if flat.size != n or np.unique(flat).size != flat.size or np.any(
        (flat < 0) | (flat >= n)
    ):
        raise ValueError("partition must cover {0..n-1} with disjoint blocks")
    subspaces = []
    for b in blocks:
        if b.size == 0:
            raise ValueError("empty block in partition")
        local = SpdOperator.from_dense(_metric_window(metric, b))
        subspaces.append(Subspace(n, b, np.eye(b.size), local))
    return Decomposition(subspaces, metric)


def multilevel_nodal_decomposition(level, metric=None):
    """All nodal hat functions of a nested hierarchy of 1-D grids.

    Level ``l`` grids have ``2**l - 1`` interior nodes; the finest grid
    (l = level) has n = 2**level - 1 nodes and its hats are the
    coordinate vectors.  A hat at node j of level l peaks (value 1) at
    fine-grid index ``j * 2**(level-l)`` and decays linearly to 0 over a
    stride of ``2**(level-l)`` fine cells on each side.  Subspaces are
    ordered finest level first, left to right within a level, giving
    ``J = 2n - level`` subspaces in total.

    The default metric is ``tridiag(-1, 2, -1)``.
    """
    if level < 1:
        raise ValueError("level must be at least 1")
    n = 2**level - 1
    metric = dirichlet_laplacian(n) if metric is None else metric
    if metric.dimension != n:
        raise DimensionMismatchError(
            f"metric dimension {metric.dimension} != 2**level - 1 = {n}"
        )
    bands = metric.bands if metric.is_banded else None
    subspaces = []
    for l in range(level, 0, -1):
        stride = 2 ** (level - l)
        for j in range(1, 2**l):
            center = j * stride
            lo = max(1, center - stride + 1)
            hi = min(n, center + stride - 1)
            idx = np.arange(lo, hi + 1)
            vals = 1.0 - np.abs(idx - center) / stride
            support = idx - 1
            if bands is not None:
                # Hat supports are contiguous, so the energy v'Av needs
                # only the band entries under the support.
                energy = bands[0][support] @ (vals * vals)
                if support.size > 1:
                    energy += 2.0 * (
                        bands[1][support[:-1]] @ (vals[:-1] * vals[1:])
                    )
            else:
                energy = vals @ (_metric_window(metric, support) @ vals)
            local = SpdOperator.from_dense([[float(energy)]])
            subspaces.append(Subspace(n, support, vals, local, level=l))
    return Decomposition(subspaces, metric)


# -- per-subspace quantities -------------------------------------------


def galerkin_local_matrix(metric, prolongation):
    """Galerkin product ``P^T A P`` as an SpdOperator.

    ``prolongation`` is a dense (n, k) matrix or a Subspace.  The result
    is symmetrized exactly before factorization; linearly dependent
    columns make the product singular and raise ``NotSpdError``.
    """
    if isinstance(prolongation, Subspace):
        sub = prolongation
        w = _metric_window(metric, sub.support)
        m = sub.basis.T @ w @ sub.basis
        return SpdOperator.from_dense(np.atleast_2d(m))
    p = np.asarray(prolongation, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    a = metric if isinstance(metric, SpdOperator) else SpdOperator.from_dense(metric)
    ap = np.column_stack([a.matvec(p[:, c]) for c in range(p.shape[1])])
    return SpdOperator.from_dense(p.T @ ap)


def local_lipschitz_quadratic(hessian, subspace):
    """Largest eigenvalue of ``A_i^{-1} (P_i^T H P_i)`` for quadratic f.

    This is the smoothness constant of a quadratic with Hessian ``H``
    restricted to the subspace, measured in the local matrix norm.
    """
    hloc = subspace.basis.T @ _metric_window(hessian, subspace.support) @ subspace.basis
    if subspace.dimension == 1:
        return float(hloc[0, 0]) / subspace._scalar
    w = sla.eigh(
        hloc, subspace.local_matrix.dense(), eigvals_only=True, check_finite=False
    )
    return float(w[-1])


def rcd_column_lipschitz(hessian, i):
    """Euclidean norm of column ``i`` of the Hessian.

    The classical coordinate-descent benchmark protocol uses column
    norms (not diagonal entries) as per-coordinate step constants.
    """
    if isinstance(hessian, SpdOperator):
        if hessian.is_banded:
            d, e = hessian.bands
            n = d.size
            if not 0 <= i < n:
                raise IndexError(f"column index {i} out of range")
            v = d[i] ** 2
            if i > 0:
                v += e[i - 1] ** 2
            if i + 1 < n:
                v += e[i] ** 2
            return float(np.sqrt(v))
        hessian = hessian.dense()
    hessian = np.asarray(hessian, dtype=np.float64)
    return float(np.linalg.norm(hessian[:, i]))


def with_quadratic_lipschitz(decomposition, hessian):
    """Copy of a decomposition with local Lipschitz constants of a
    quadratic objective with the given Hessian."""
    subs = [
        s.with_lipschitz(local_lipschitz_quadratic(hessian, s))
        for s in decomposition.subspaces
    ]
    return Decomposition(subs, decomposition.preconditioner)


def with_local_lipschitz(decomposition, values):
    """Copy of a decomposition with explicitly given Lipschitz constants."""
    values = as_vector(values, len(decomposition))
    if np.any(values <= 0):
        raise ValueError("Lipschitz constants must be positive")
    subs = [
        s.with_lipschitz(v) for s, v in zip(decomposition.subspaces, values)
    ]
    return Decomposition(subs, decomposition.preconditioner)


# -- stability constant ------------------------------------------------


def _apply_splitting_sum(decomposition, v):
    """Apply ``B = sum_i P_i A_i^{-1} P_i^T`` to a vector."""
    out = np.zeros_like(v)
    for s in decomposition.subspaces:
        out[s.support] += s.basis @ s.solve_local(s.basis.T @ v[s.support])
    return out


def stability_constant(decomposition, dense_limit=DENSE_EIG_LIMIT, tol=1e-6):
    """Stability constant of the splitting in the decomposition metric.

    Defined as ``1 / lambda_min(B A)`` with
    ``B = sum_i P_i A_i^{-1} P_i^T`` and metric A; equivalently the
    smallest constant c such that every v splits as ``v = sum_i P_i v_i``
    with ``sum_i ||v_i||_{A_i}^2 <= c ||v||_A^2``.  Equals 1 for a
    single-block decomposition or for coordinates under the identity
    metric, and is at least 1 whenever local matrices are Galerkin.

    Up to ``dense_limit`` ambient dimensions this is a dense generalized
    eigensolve; beyond it, shifted power iteration in the metric inner
    product with relative tolerance ``tol``.  Raises if the subspaces do
    not span R^n.
    """
    a = decomposition.preconditioner
    n = a.dimension
    if n <= dense_limit:
        b = np.zeros((n, n))
        for s in decomposition.subspaces:
            if s.dimension == 1:
                col = s.basis[:, 0]
                blk = np.outer(col, col) / s._scalar
            else:
                blk = s.basis @ s.local_matrix.solve_columns(s.basis.T)
            b[np.ix_(s.support, s.support)] += blk
        ad = a.dense()
        m = ad @ b @ ad
        w = sla.eigh(m, ad, eigvals_only=True, check_finite=False)
        lo = float(w[0])
        if lo <= 1e-12 * max(float(w[-1]), 1.0):
            raise ValueError("subspaces do not span the ambient space")
        return 1.0 / lo

    def apply_p(v):
        return _apply_splitting_sum(decomposition, a.matvec(v))

    lam_max = _power_iteration(apply_p, a, n, tol=tol, seed=7)
    shift = 1.01 * lam_max

    def apply_shifted(v):
        return shift * v - apply_p(v)

    lam_min = shift - _power_iteration(apply_shifted, a, n, tol=tol, seed=11)
    if lam_min <= 0:
        raise ValueError("subspaces do not span the ambient space")
    return 1.0 / lam_min


def _power_iteration(apply_op, metric, n, tol, seed, max_iter=20000):
    """Largest eigenvalue of a metric-self-adjoint operator by power
    iteration in the metric inner product.

    Stops when the metric-norm eigenresidual drops below ``tol`` times
    the Rayleigh quotient; for a self-adjoint operator that residual
    bounds the eigenvalue error, so the returned value carries a real
    accuracy guarantee (unlike a quotient-stagnation test, which can
    stall early on slowly converging iterates).
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= a_norm(metric, v)
    for _ in range(max_iter):
        w = apply_op(v)
        rho = float(np.dot(metric.matvec(v), w))
        resid = a_norm(metric, w - rho * v)
        if resid <= tol * max(abs(rho), 1e-300):
            return rho
        nw = a_norm(metric, w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    raise ValueError(
        f"power iteration did not converge to relative tolerance {tol:g}"
    )


# -- export ------------------------------------------------------------


def export_decomposition(decomposition, path):
    """Write a decomposition as one text line per subspace.

    Each line is ``index level k L`` followed by the basis columns,
    every column a run of 0-based ``row:value`` pairs, columns separated
    by `` | ``.
    """
    with open(path, "w") as fh:
        for i, s in enumerate(decomposition.subspaces):
            cols = []
            for c in range(s.dimension):
                cols.append(
                    " ".join(
                        f"{int(r)}:{float(v)!r}"
                        for r, v in zip(s.support, s.basis[:, c])
                    )
                )
            fh.write(
                f"{i} {s.level} {s.dimension} {float(s.local_lipschitz)!r} "
                + " | ".join(cols)
                + "\n"
            )
