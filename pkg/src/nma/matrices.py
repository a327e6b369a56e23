"""Column-stochastic matrix algebra.

Matrices follow the left-stochastic convention throughout: entry ``(i, j)``
is the transition probability *into* state ``i`` *given* current state ``j``,
so every column sums to one. All public accessors are phrased as
``into``/``given`` to keep the orientation unambiguous.

The module provides structural classification (positive, quasi-positive,
primitive, irreducible, non-traceless, nice), stationary distributions by
power iteration, a reversibility test via the Kolmogorov criterion with a
stationary witness, and the two matrix generating functions of a stopping
number N:

    f_N(B) = sum_n P[N = n] B^n        (probability generating matrix)
    g_N(B) = sum_n P[N > n] B^n        (survival generating matrix)

evaluated either by truncated series or by spectral decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ColumnSumViolation,
    EigenFailure,
    NoConvergenceError,
    NonSquareError,
    NotPositiveError,
    NotPrimitiveError,
    NotReversibleError,
)
from .stopping import StoppingNumber

__all__ = [
    "StochasticMatrix",
    "MatrixFlags",
    "KolmogorovResult",
    "build_stochastic_matrix",
    "classify",
    "stationary_distribution",
    "kolmogorov_check",
    "matrix_generating_function",
    "survival_generating_matrix",
    "spectral_generating_matrices",
    "probability_vector",
]


def probability_vector(raw, tol: float = 1e-12) -> np.ndarray:
    """Validate and return a point of the standard simplex.

    Parameters
    ----------
    raw : array_like
        Candidate vector of probabilities.
    tol : float
        Structural tolerance for the sum-to-one check. The vector is
        renormalized exactly when the deviation is within ``tol``.

    Returns
    -------
    ndarray
        Non-negative vector summing to one.
    """
    p = np.asarray(raw, dtype=float).copy()
    if p.ndim != 1:
        raise ValueError("probability vector must be one-dimensional")
    p[(p < 0) & (p > -tol)] = 0.0
    if np.any(p < 0):
        raise ValueError("probability vector has negative entries")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"probability vector sums to {total!r}, expected 1")
    return p / total


class StochasticMatrix:
    """Validated column-stochastic square matrix.

    Immutable after construction; build instances through
    :func:`build_stochastic_matrix`.

    Attributes
    ----------
    order : int
        Number of states.
    entries : ndarray
        ``entries[i, j]`` is the probability of moving into ``i`` given ``j``.
        The array is a read-only view.
    """

    __slots__ = ("order", "entries")

    def __init__(self, entries: np.ndarray):
        entries = np.asarray(entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "order", entries.shape[0])

    def __setattr__(self, name, value):
        raise AttributeError("StochasticMatrix is immutable")

    def into_given(self, into: int, given: int) -> float:
        """Transition probability into state ``into`` given state ``given``."""
        return float(self.entries[into, given])

    def column(self, given: int) -> np.ndarray:
        """Distribution over next states given current state ``given``."""
        return self.entries[:, given].copy()

    def __matmul__(self, other):
        if isinstance(other, StochasticMatrix):
            return self.entries @ other.entries
        return self.entries @ np.asarray(other)

    def __repr__(self):
        return f"StochasticMatrix(order={self.order})"


@dataclass(frozen=True)
class MatrixFlags:
    positive: bool
    quasi_positive: bool
    primitive: bool
    irreducible: bool
    non_traceless: bool
    nice: bool


@dataclass(frozen=True)
class KolmogorovResult:
    reversible: bool
    witness: np.ndarray | None

    def __bool__(self):
        return self.reversible


def build_stochastic_matrix(raw, tol: float = 1e-12) -> StochasticMatrix:
    """Validate a raw square array as a column-stochastic matrix.

    Tiny negative entries (>= -tol) are clamped to zero and columns whose sums
    deviate from one by less than ``tol`` are renormalized; larger deviations
    raise :class:`ColumnSumViolation`.

    Parameters
    ----------
    raw : array_like
        Square array of transition probabilities, column-indexed.
    tol : float
        Structural validation tolerance.

    Returns
    -------
    StochasticMatrix
    """
    a = np.asarray(raw, dtype=float).copy()
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(f"expected a square array, got shape {a.shape}")
    if a.shape[0] < 1:
        raise NonSquareError("matrix must have positive order")
    a[(a < 0) & (a > -tol)] = 0.0
    if np.any(a < 0):
        i, j = np.argwhere(a < 0)[0]
        raise ColumnSumViolation(int(j), float(a[:, j].sum()))
    sums = a.sum(axis=0)
    bad = np.abs(sums - 1.0) >= tol
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ColumnSumViolation(j, float(sums[j]))
    return StochasticMatrix(a / sums)


def _boolean_power_positive(adj: np.ndarray, bound: int) -> bool:
    # Positivity of powers is monotone for non-negative matrices with
    # non-vanishing columns, so repeated squaring up to the Wielandt bound
    # decides whether any power at all is positive.
    a = adj.copy()
    steps = max(1, math.ceil(math.log2(bound))) if bound > 1 else 1
    if a.all():
        return True
    for _ in range(steps):
        a = (a.astype(np.uint8) @ a.astype(np.uint8)) > 0
        if a.all():
            return True
    return False


def classify(B: StochasticMatrix) -> MatrixFlags:
    """Compute the structural classification flags of a stochastic matrix.

    Primitivity is decided by checking positivity of a power within the
    Wielandt bound ``(order - 1)^2 + 1``; irreducibility by reachability
    closure. ``nice`` means symmetric and quasi-positive.
    """
    a = B.entries
    n = B.order
    adj = a > 0
    off = ~np.eye(n, dtype=bool)
    positive = bool(adj.all())
    quasi_positive = bool(adj[off].all())
    non_traceless = bool(np.diag(a).sum() > 0)
    # reachability closure: (I | adj)^(n-1)
    reach = np.eye(n, dtype=bool) | adj
    closure = np.eye(n, dtype=bool)
    for _ in range(max(1, n - 1)):
        closure = (closure.astype(np.uint8) @ reach.astype(np.uint8)) > 0
    irreducible = bool(closure.all())
    wielandt = (n - 1) ** 2 + 1
    primitive = irreducible and _boolean_power_positive(adj, wielandt)
    nice = quasi_positive and bool(np.allclose(a, a.T, rtol=0.0, atol=1e-12))
    return MatrixFlags(
        positive=positive,
        quasi_positive=quasi_positive,
        primitive=primitive,
        irreducible=irreducible,
        non_traceless=non_traceless,
        nice=nice,
    )


def stationary_distribution(
    B: StochasticMatrix, tol: float = 1e-12, max_iter: int = 500_000
) -> np.ndarray:
    """Unique fixed point p = Bp of a primitive stochastic matrix.

    Power iteration from the uniform vector; primitivity is required first so
    convergence is guaranteed and geometric.

    Raises
    ------
    NotPrimitiveError
        If the matrix is not primitive.
    NoConvergenceError
        If the iteration budget is exhausted.
    """
    if not classify(B).primitive:
        raise NotPrimitiveError("stationary distribution requires a primitive matrix")
    a = B.entries
    p = np.full(B.order, 1.0 / B.order)
    for _ in range(max_iter):
        q = a @ p
        q /= q.sum()
        if np.abs(q - p).sum() <= tol:
            return q
        p = q
    raise NoConvergenceError(max_iter)


def kolmogorov_check(
    P: StochasticMatrix, tol: float = 1e-9
) -> KolmogorovResult:
    """Reversibility test for a positive stochastic matrix.

    Checks, over all distinct triples (i, j, k), equality of the two cyclic
    products

        P(j|i) P(k|j) P(i|k)  =  P(k|i) P(j|k) P(i|j)

    within relative tolerance ``tol``. When the criterion holds the stationary
    witness is returned: with reference state ``i* = 0`` and detailed-balance
    ratios ``r(j|i*) = P(j|i*) / P(i*|j)``,

        pi(j) = r(j|i*) / sum_k r(k|i*).

    Raises
    ------
    NotPositiveError
        If any entry of P is not strictly positive.
    """
    a = P.entries
    n = P.order
    if not np.all(a > 0):
        raise NotPositiveError("the Kolmogorov criterion requires a positive matrix")
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                forward = a[j, i] * a[k, j] * a[i, k]
                backward = a[k, i] * a[j, k] * a[i, j]
                if abs(forward - backward) > tol * max(forward, backward, 1e-300):
                    return KolmogorovResult(False, None)
    r = a[:, 0] / a[0, :]
    return KolmogorovResult(True, r / r.sum())


def _require_non_deadline(N: StoppingNumber):
    # Deadline stopping raises DeadlineNotSupported on any pmf access; surface
    # the error eagerly with the same type for a clear message.
    N.survival(0)


def matrix_generating_function(
    N: StoppingNumber, B: StochasticMatrix, tail_tol: float = 1e-12
) -> np.ndarray:
    """Probability generating matrix f_N(B) = sum_n P[N = n] B^n.

    The series is truncated at the smallest K whose residual pmf mass
    P[N > K] is at most ``tail_tol``; since every entry of B^n lies in
    [0, 1], the entrywise truncation error is bounded by the same amount.

    Returns
    -------
    ndarray
        Square matrix, column-stochastic within ``tail_tol``.
    """
    _require_non_deadline(N)
    k_max = N.pmf_tail_index(tail_tol)
    a = B.entries
    power = np.eye(B.order)
    acc = N.pmf(0) * power
    for n in range(1, k_max + 1):
        power = a @ power
        acc += N.pmf(n) * power
    return acc


def survival_generating_matrix(
    N: StoppingNumber, B: StochasticMatrix, tail_tol: float = 1e-12
) -> np.ndarray:
    """Survival generating matrix g_N(B) = sum_n P[N > n] B^n.

    Truncated so the residual survival mass is at most ``tail_tol``. Each
    column sums to E[N] up to the truncation error (the z -> 1 limit
    convention g_N(1) = E[N]).
    """
    _require_non_deadline(N)
    k_max = N.survival_tail_index(tail_tol)
    a = B.entries
    power = np.eye(B.order)
    acc = N.survival(0) * power
    for n in range(1, k_max + 1):
        power = a @ power
        acc += N.survival(n) * power
    return acc


def spectral_generating_matrices(
    B: StochasticMatrix, N: StoppingNumber, tol: float = 1e-9
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate (f_N(B), g_N(B)) through the eigendecomposition of B.

    Requires B reversible (Kolmogorov criterion), which guarantees real
    diagonalization: with the stationary witness pi and D = diag(sqrt(pi)),
    the conjugate D B D^-1 is symmetric, so a stable symmetric eigensolver
    applies. The scalar pgf f_N is mapped over the eigenvalues, and
    (1 - f_N(l)) / (1 - l) with the l = 1 convention g = E[N] gives g_N.

    Raises
    ------
    NotReversibleError
        If the Kolmogorov criterion fails.
    NotPositiveError
        If B has non-positive entries (criterion precondition).
    EigenFailure
        If the eigensolver does not converge.
    """
    _require_non_deadline(N)
    kol = kolmogorov_check(B, tol)
    if not kol.reversible:
        raise NotReversibleError("spectral route requires a reversible matrix")
    d = np.sqrt(kol.witness)
    # columns carry the given-j direction: B[i,j] pi(j) = B[j,i] pi(i),
    # so D^-1 B D is the symmetric conjugate for D = diag(sqrt(pi))
    sym = (B.entries * d[None, :]) / d[:, None]
    sym = (sym + sym.T) / 2.0
    try:
        lams, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise EigenFailure(str(exc)) from exc
    f_scalars = np.array([N.pgf(lam) for lam in lams])
    mean = N.mean()
    g_scalars = np.array(
        [
            mean if abs(1.0 - lam) < tol else (1.0 - f) / (1.0 - lam)
            for lam, f in zip(lams, f_scalars)
        ]
    )
    back = vecs * d[:, None]  # D V
    fore = vecs.T / d[None, :]  # V^T D^-1
    f_mat = back @ (f_scalars[:, None] * fore)
    g_mat = back @ (g_scalars[:, None] * fore)
    return f_mat, g_mat
