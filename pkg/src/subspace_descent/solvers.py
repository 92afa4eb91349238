"""Iteration engines.

All solvers share one loop skeleton: test the stopping rule, record the
current state, pick a direction, take a step.  The stopping rule is a
relative gradient-norm test, ``||grad f(x_k)|| <= tol * ||grad f(x_0)||``
in the Euclidean norm, evaluated before every update, so the reported
iteration count is the number of updates actually performed.

Methods
-------
``gd``
    Full gradient descent, step ``1 / lambda_max(H)`` for quadratics.
``pgd``
    Preconditioned gradient descent ``x - (1/L_A) A^{-1} grad f(x)``.
``rcd`` / ``rbcd`` / ``rfasd``
    Subspace descent over a decomposition: restrict the gradient, solve
    the local (Galerkin) system, prolong, step by the inverse local
    Lipschitz constant.  The three names differ only in which
    decomposition the caller supplies (coordinates, blocks, multilevel).
``rfas``
    Full-approximation variant: the local problem is a nonlinear
    stationarity equation built from a local objective and a
    restriction of the current gradient; with the canonical quadratic
    local energies it reproduces ``rfasd`` exactly, bit for bit.

For quadratic objectives the gradient and objective value are carried
incrementally (rank-one updates through the Hessian), which makes a
single iteration O(support size) for banded Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .decomposition import _metric_window
from .linalg import (
    DENSE_EIG_LIMIT,
    NotSpdError,
    SpdOperator,
    as_vector,
    extreme_eigenvalues,
)
from .sampling import SAMPLER_KINDS, make_sampler

__all__ = [
    "METHODS",
    "SolverConfig",
    "RunTrace",
    "DivergenceError",
    "LocalSolveError",
    "QuadraticEnergyLocal",
    "subspace_search_direction",
    "rfasd_step",
    "fas_search_direction",
    "solve_local_stationarity",
    "run_solver",
]

METHODS = ("gd", "pgd", "rcd", "rbcd", "rfasd", "rfas")

# Divergence guard: this many consecutive epochs of objective increase,
# combined with a 1e3-fold growth over the window, aborts the run.
_GUARD_EPOCHS = 10
_GUARD_GROWTH = 1e3


class DivergenceError(RuntimeError):
    """The iteration is growing the objective instead of shrinking it."""


class LocalSolveError(RuntimeError):
    """A nonlinear local solve failed to converge within its budget."""


@dataclass
class SolverConfig:
    """What to run and how.

    ``step_size=None`` means the canonical step ``1 / L_i`` with the
    per-subspace Lipschitz constant (or ``1 / L`` for the full-space
    methods); a float forces that fixed step everywhere.
    """

    method: str
    sampler: str = "uniform"
    step_size: float | None = None
    tolerance: float = 1e-6
    max_iterations: int = 2_000_000
    seed: int = 0


@dataclass
class RunTrace:
    """Complete record of one solver run.

    ``objective_values`` and ``gradient_norms`` have one entry per
    visited state (iteration count + 1); ``chosen`` lists the subspace
    index used at each update.  ``gaps`` is ``f - f_star`` when the
    objective knows its minimum, else None.
    """

    method: str
    sampler: str
    seed: int
    tolerance: float
    subspace_count: int
    converged: bool
    chosen: np.ndarray
    objective_values: np.ndarray
    gradient_norms: np.ndarray
    gaps: np.ndarray | None
    final_x: np.ndarray = field(repr=False)

    @property
    def iteration_count(self):
        return int(self.chosen.size)

    @property
    def epoch_count(self):
        """Iterations divided by the number of subspaces (real-valued)."""
        return self.iteration_count / self.subspace_count

    def write_csv(self, path):
        """Write ``k,i_k,f,gnorm,gap`` rows, one per visited state.

        The terminal state has no chosen index and stores ``i_k = -1``;
        the gap column is empty when the optimal value is unknown.
        Output is byte-stable for a fixed run.
        """
        k_total = self.objective_values.size
        with open(path, "w") as fh:
            fh.write("k,i_k,f,gnorm,gap\n")
            for k in range(k_total):
                i_k = int(self.chosen[k]) if k < self.chosen.size else -1
                gap = "" if self.gaps is None else repr(float(self.gaps[k]))
                fh.write(
                    f"{k},{i_k},{float(self.objective_values[k])!r},"
                    f"{float(self.gradient_norms[k])!r},{gap}\n"
                )

    def __repr__(self):
        return (
            f"RunTrace({self.method}/{self.sampler}, iters={self.iteration_count}, "
            f"epochs={self.epoch_count:.2f}, converged={self.converged})"
        )


class QuadraticEnergyLocal:
    """Canonical local objective ``w -> 1/2 (A_i w, w)`` of a subspace.

    Its stationarity equation ``A_i eta = tau`` is linear, so the
    full-approximation solver can shortcut the Newton loop; using these
    locals makes ``rfas`` coincide with ``rfasd`` exactly.
    """

    def __init__(self, subspace):
        self.subspace = subspace
        self.matrix = subspace.local_matrix

    @property
    def dimension(self):
        return self.subspace.dimension

    def value(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        return 0.5 * float(np.dot(self.matrix.matvec(w), w))

    def gradient(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        return self.matrix.matvec(w)

    def hessian(self, w):
        return self.matrix.dense()


def solve_local_stationarity(local, target, start, tol=1e-10, max_iter=100):
    """Solve ``grad f_i(w) = target`` by damped Newton iteration.

    ``local`` needs ``gradient(w)`` and ``hessian(w)``.  Converges to
    residual ``tol * max(1, ||target||)``; raises ``LocalSolveError``
    when the budget runs out or a step cannot reduce the residual.
    """
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    w = np.atleast_1d(np.asarray(start, dtype=np.float64)).copy()
    r = local.gradient(w) - target
    rn = float(np.linalg.norm(r))
    goal = tol * max(1.0, float(np.linalg.norm(target)))
    for _ in range(max_iter):
        if rn <= goal:
            return w
        h = local.hessian(w)
        h = h.dense() if isinstance(h, SpdOperator) else np.atleast_2d(h)
        try:
            delta = np.linalg.solve(h, -r)
        except np.linalg.LinAlgError as exc:
            raise LocalSolveError(f"singular local Hessian: {exc}") from exc
        t = 1.0
        while t > 2.0**-40:
            wt = w + t * delta
            rt = local.gradient(wt) - target
            rtn = float(np.linalg.norm(rt))
            if rtn <= (1.0 - 0.25 * t) * rn:
                break
            t *= 0.5
        else:
            raise LocalSolveError(
                f"damped Newton stalled at residual {rn:.3e} (goal {goal:.3e})"
            )
        w, r, rn = wt, rt, rtn
    if rn <= goal:
        return w
    raise LocalSolveError(
        f"local solve did not reach residual {goal:.3e} in {max_iter} Newton steps"
    )


# -- single-step operations (reference implementations) -----------------


def subspace_search_direction(gradient, subspace):
    """Direction ``-P_i A_i^{-1} P_i^T g`` as a full-space vector."""
    g_i = subspace.restrict(as_vector(gradient, subspace.ambient_dimension))
    return subspace.prolong(subspace.solve_local(np.negative(g_i)))


def rfasd_step(x, subspace, objective, step=None):
    """One subspace-descent update from ``x``; returns the new iterate."""
    x = as_vector(x, subspace.ambient_dimension)
    s = subspace_search_direction(objective.gradient(x), subspace)
    alpha = (1.0 / subspace.local_lipschitz) if step is None else float(step)
    return x + alpha * s


def fas_search_direction(x, subspace, local_objective, objective, projection=None):
    """Full-approximation direction as a full-space vector.

    Builds the corrected local target
    ``tau = grad f_i(q) - P_i^T grad f(x)`` with ``q`` the local
    projection of ``x`` (zero when no projection is given), solves the
    stationarity equation ``grad f_i(eta) = tau``, and prolongs
    ``eta - q``.  With the canonical quadratic local energy and no
    projection this equals :func:`subspace_search_direction` exactly.
    """
    x = as_vector(x, subspace.ambient_dimension)
    g_i = subspace.restrict(objective.gradient(x))
    if projection is None:
        q = np.zeros(subspace.dimension)
    else:
        q = np.atleast_1d(np.asarray(projection(x), dtype=np.float64))
    tau = local_objective.gradient(q) - g_i
    if (
        isinstance(local_objective, QuadraticEnergyLocal)
        and local_objective.subspace is subspace
    ):
        eta = subspace.solve_local(tau)
    else:
        eta = solve_local_stationarity(local_objective, tau, q)
    return subspace.prolong(eta - q)


# -- the run loop -------------------------------------------------------


class _Recorder:
    """Growable per-iteration storage (amortized numpy buffers)."""

    def __init__(self, capacity=4096):
        self.f = np.empty(capacity)
        self.gn = np.empty(capacity)
        self.idx = np.empty(capacity, dtype=np.int64)
        self.count = 0

    def _grow(self):
        cap = 2 * self.f.size
        self.f = np.resize(self.f, cap)
        self.gn = np.resize(self.gn, cap)
        self.idx = np.resize(self.idx, cap)

    def state(self, k, f, gn):
        if k >= self.f.size:
            self._grow()
        self.f[k] = f
        self.gn[k] = gn

    def choice(self, k, i):
        self.idx[k] = i


def _full_space_setup(config, objective, decomposition):
    """Metric operator (pgd only) and step size for the full-space methods."""
    method = config.method.lower()
    precond = None
    if method == "pgd":
        precond = (
            decomposition.preconditioner
            if decomposition is not None
            else objective.hessian
        )
        if precond is None:
            raise ValueError(
                "pgd needs a decomposition (for its metric) or an SPD Hessian"
            )
    if config.step_size is not None:
        return precond, float(config.step_size)
    if not objective.is_quadratic:
        raise ValueError(
            f"{method} on a non-quadratic objective needs an explicit step_size"
        )
    h = objective.hessian if objective.hessian is not None else objective.hessian_matrix
    if method == "gd":
        return None, 1.0 / extreme_eigenvalues(h)[1]
    if objective.hessian is precond:
        return precond, 1.0
    hd = h.dense() if isinstance(h, SpdOperator) else h
    if hd.shape[0] > DENSE_EIG_LIMIT:
        raise ValueError(
            "pgd smoothness constant needs a dense generalized eigensolve; "
            f"n={hd.shape[0]} exceeds {DENSE_EIG_LIMIT}, pass step_size explicitly"
        )
    w = sla.eigvalsh(hd, precond.dense(), check_finite=False)
    return precond, 1.0 / float(w[-1])


def run_solver(
    config,
    objective,
    decomposition=None,
    *,
    x0=None,
    local_objectives=None,
    projections=None,
    allow_semidefinite=False,
):
    """Run a solver to the relative gradient-norm tolerance.

    Parameters
    ----------
    config : SolverConfig
    objective : Objective
    decomposition : Decomposition, optional
        Required for the subspace methods; supplies the metric for pgd.
    x0 : array, optional
        Starting point, default all ones.
    local_objectives : sequence, optional
        Per-subspace local objectives for ``rfas``; defaults to the
        canonical quadratic energies of the decomposition.
    projections : sequence of callables, optional
        Per-subspace maps from a full iterate to local coordinates used
        by ``rfas`` (zero maps when omitted).
    allow_semidefinite : bool
        Opt-in for quadratics whose Hessian is only positive
        semidefinite.

    Returns
    -------
    RunTrace

    Raises
    ------
    DivergenceError
        If the objective rises for 10 consecutive epochs and grows a
        thousandfold over that window (measured against the magnitude
        of the value at the window start).
    """
    method = config.method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {config.method!r}; choose from {METHODS}")
    if not config.tolerance > 0:
        raise ValueError("tolerance must be positive")
    if config.max_iterations < 0:
        raise ValueError("max_iterations must be nonnegative")
    if method not in ("gd", "pgd") and decomposition is None:
        raise ValueError(f"method {method!r} needs a decomposition")
    if (
        objective.is_quadratic
        and objective.hessian is None
        and not allow_semidefinite
    ):
        raise NotSpdError(
            "objective Hessian is positive semidefinite only; "
            "pass allow_semidefinite=True to proceed"
        )

    n = objective.dimension
    x = np.ones(n) if x0 is None else as_vector(x0, n).copy()

    if method in ("gd", "pgd"):
        return _run_full_space(config, objective, decomposition, x)
    return _run_subspace(
        config, objective, decomposition, x, local_objectives, projections
    )


def _finish(rec, k, config, j, converged, x, objective):
    f = rec.f[: k + 1].copy()
    gn = rec.gn[: k + 1].copy()
    chosen = rec.idx[:k].copy()
    gaps = None
    if objective.known_minimum is not None:
        gaps = f - objective.known_minimum
    return RunTrace(
        method=config.method.lower(),
        sampler=config.sampler if config.method.lower() not in ("gd", "pgd") else "none",
        seed=config.seed,
        tolerance=config.tolerance,
        subspace_count=j,
        converged=converged,
        chosen=chosen,
        objective_values=f,
        gradient_norms=gn,
        gaps=gaps,
        final_x=x.copy(),
    )


class _Guard:
    """Epoch-boundary divergence watchdog."""

    def __init__(self, f0):
        self.ref = f0
        self.prev = f0
        self.streak = 0

    def check(self, f, k):
        if not np.isfinite(f):
            raise DivergenceError(
                f"objective is no longer finite at iteration {k}; "
                "the step size is too large for this problem"
            )
        if f > self.prev:
            self.streak += 1
            if self.streak >= _GUARD_EPOCHS and f > _GUARD_GROWTH * max(
                abs(self.ref), np.finfo(float).tiny
            ):
                raise DivergenceError(
                    f"objective rose for {self.streak} consecutive epochs "
                    f"(iteration {k}, f {self.ref:.6e} -> {f:.6e}); "
                    "the step size is too large for this problem"
                )
        else:
            self.streak = 0
            self.ref = f
        self.prev = f


def _run_full_space(config, objective, decomposition, x):
    precond, alpha = _full_space_setup(config, objective, decomposition)
    pgd = config.method.lower() == "pgd"

    g = objective.gradient(x)
    f = objective.value(x)
    gn = float(np.linalg.norm(g))
    threshold = config.tolerance * gn
    rec = _Recorder()
    guard = _Guard(f)
    k = 0
    converged = False
    while True:
        rec.state(k, f, gn)
        if gn <= threshold:
            converged = True
            break
        if k >= config.max_iterations:
            break
        rec.choice(k, 0)
        if pgd:
            x -= alpha * precond.solve(g)
        else:
            x -= alpha * g
        g = objective.gradient(x)
        f = objective.value(x)
        gn = float(np.linalg.norm(g))
        k += 1
        guard.check(f, k)
    return _finish(rec, k, config, 1, converged, x, objective)


def _hessian_rep(objective):
    """(kind, data) for fast incremental updates of a quadratic gradient."""
    h = objective.hessian if objective.hessian is not None else objective.hessian_matrix
    if isinstance(h, SpdOperator):
        if h.is_banded:
            d, e = h.bands
            return "banded", (d, e)
        return "dense", h.dense()
    return "dense", np.asarray(h, dtype=np.float64)


def _run_subspace(config, objective, decomposition, x, local_objectives, projections):
    subs = decomposition.subspaces
    j = len(subs)
    n = decomposition.ambient_dimension
    if objective.dimension != n:
        raise ValueError("objective and decomposition dimensions disagree")
    fas = config.method.lower() == "rfas"
    if fas and local_objectives is None:
        local_objectives = [QuadraticEnergyLocal(s) for s in subs]
    if local_objectives is not None and len(local_objectives) != j:
        raise ValueError("need one local objective per subspace")
    if projections is not None and len(projections) != j:
        raise ValueError("need one projection per subspace")

    if config.sampler not in SAMPLER_KINDS:
        raise ValueError(
            f"unknown sampler {config.sampler!r}; choose from {SAMPLER_KINDS}"
        )
    sampler = make_sampler(
        config.sampler,
        size=j,
        lipschitz=decomposition.lipschitz if config.sampler == "proportional" else None,
        seed=config.seed,
    )

    quadratic = objective.is_quadratic
    if quadratic:
        kind, hdata = _hessian_rep(objective)
        banded = kind == "banded"
    else:
        banded = False

    # Per-subspace caches, index-aligned with the decomposition.
    alpha = np.empty(j)
    single = np.zeros(j, dtype=bool)  # k = 1 and quadratic fast path
    canonical = np.zeros(j, dtype=bool)
    lo_arr = np.zeros(j, dtype=np.intp)
    b0_arr = np.zeros(j, dtype=np.intp)  # support start
    b1_arr = np.zeros(j, dtype=np.intp)  # support end + 1
    hi_arr = np.zeros(j, dtype=np.intp)
    cols = [None] * j
    scal = np.ones(j)
    hscal = np.zeros(j)
    hloc = [None] * j

    for i, s in enumerate(subs):
        alpha[i] = (
            float(config.step_size)
            if config.step_size is not None
            else 1.0 / s.local_lipschitz
        )
        if fas:
            loc = local_objectives[i]
            canonical[i] = (
                isinstance(loc, QuadraticEnergyLocal)
                and loc.subspace is s
                and (projections is None or projections[i] is None)
            )
        contiguous = s.support.size == (s.support[-1] - s.support[0] + 1)
        if quadratic:
            hw = s.basis.T @ _metric_window(
                objective.hessian_matrix, s.support
            ) @ s.basis
            hloc[i] = hw
            fastable = s.dimension == 1 and contiguous and (not fas or canonical[i])
            if fastable:
                single[i] = True
                cols[i] = np.ascontiguousarray(s.basis[:, 0])
                scal[i] = s._scalar
                hscal[i] = float(hw[0, 0])
                a, b = int(s.support[0]), int(s.support[-1])
                b0_arr[i], b1_arr[i] = a, b + 1
                lo_arr[i] = max(a - 1, 0)
                hi_arr[i] = min(b + 1, n - 1) + 1

    g = objective.gradient(x)
    f = objective.value(x)
    gn = float(np.linalg.norm(g))
    threshold = config.tolerance * gn
    rec = _Recorder()
    guard = _Guard(f)
    if banded:
        dband, eband = hdata

    k = 0
    converged = False
    next_index = sampler.next_index
    norm = np.linalg.norm
    while True:
        rec.state(k, f, gn)
        if gn <= threshold:
            converged = True
            break
        if k >= config.max_iterations:
            break
        i = next_index()
        rec.choice(k, i)
        if single[i]:
            a = b0_arr[i]
            b1 = b1_arr[i]
            col = cols[i]
            gi = float(col @ g[a:b1])
            if fas:
                c = alpha[i] * ((0.0 - gi) / scal[i])
            else:
                c = alpha[i] * (-gi / scal[i])
            x[a:b1] += c * col
            f += c * gi + 0.5 * c * c * hscal[i]
            lo = lo_arr[i]
            hi1 = hi_arr[i]
            if banded:
                w = np.zeros(hi1 - lo)
                w[a - lo : b1 - lo] = c * col
                prod = dband[lo:hi1] * w
                prod[:-1] += eband[lo : hi1 - 1] * w[1:]
                prod[1:] += eband[lo : hi1 - 1] * w[:-1]
                g[lo:hi1] += prod
            else:
                g += hdata[:, a:b1] @ (c * col)
            gn = float(norm(g))
        else:
            s = subs[i]
            gi = s.restrict(g)
            if not fas:
                sloc = s.solve_local(np.negative(gi))
            elif canonical[i]:
                sloc = s.solve_local(0.0 - gi)
            else:
                loc = local_objectives[i]
                if projections is not None and projections[i] is not None:
                    q = np.atleast_1d(
                        np.asarray(projections[i](x), dtype=np.float64)
                    )
                else:
                    q = np.zeros(s.dimension)
                tau = loc.gradient(q) - gi
                sloc = solve_local_stationarity(loc, tau, q) - q
            delta = alpha[i] * sloc
            s.add_prolonged(x, delta)
            if quadratic:
                f += float(gi @ delta) + 0.5 * float(delta @ (hloc[i] @ delta))
                dx = s.basis @ delta
                if banded:
                    a, b = int(s.support[0]), int(s.support[-1])
                    lo, hi1 = max(a - 1, 0), min(b + 1, n - 1) + 1
                    w = np.zeros(hi1 - lo)
                    w[s.support - lo] = dx
                    prod = dband[lo:hi1] * w
                    prod[:-1] += eband[lo : hi1 - 1] * w[1:]
                    prod[1:] += eband[lo : hi1 - 1] * w[:-1]
                    g[lo:hi1] += prod
                else:
                    g += hdata[:, s.support] @ dx
                gn = float(norm(g))
            else:
                g = objective.gradient(x)
                f = objective.value(x)
                gn = float(norm(g))
        k += 1
        if k % j == 0:
            guard.check(f, k)
    return _finish(rec, k, config, j, converged, x, objective)
