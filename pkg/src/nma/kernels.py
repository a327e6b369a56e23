"""Binary choice kernels, tandems, and value representations.

A kernel rho over a menu stores acceptance probabilities with the
orientation ``rho[i, j] = P(accept proposal i | incumbent j)``. Off the
diagonal the defining axiom is

    rho(i|j) = 1  <=>  rho(j|i) = 0,

and the diagonal carries the conventional value epsilon in (0, 1). A tandem
couples a kernel with expected response times tau, where deterministic
choices are exactly the instantaneous ones, and symmetric times on a pair
force unbiased probabilities on it.

Transitive kernels decompose into a three-part value representation:
an integer Paretian utility w (deterministic rankings), a real Fechnerian
utility v (log-odds within w-levels), and a symmetric status-quo index s.
The decomposition here follows the constructive existence proof, so outputs
are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidSError,
    KernelAxiomViolation,
    NotChronometricError,
    NotTransitiveError,
    TandemAxiomViolation,
)

_SNAP = 1e-12  # entries this close to {0, 1} are treated as deterministic
_REL_TOL = 1e-9
_ABS_FLOOR = 1e-12


def _close(a: float, b: float, tol: float = _REL_TOL) -> bool:
    return abs(a - b) <= max(tol * max(abs(a), abs(b)), _ABS_FLOOR)


def _lt(a: float, b: float, tol: float = _REL_TOL) -> bool:
    return a < b and not _close(a, b, tol)


class BinaryChoiceKernel:
    """Square array of binary acceptance probabilities over a menu.

    Parameters
    ----------
    menu : sequence of labels
    rho : array_like
        rho[i, j] = probability proposal i is accepted over incumbent j.
        The diagonal is overwritten with ``epsilon``.
    epsilon : float
        Diagonal convention value in (0, 1). Never affects outcomes.
    validate : bool
        When False (empirical data), the deterministic-pair axiom is not
        enforced; violations are collected in ``axiom_warnings`` instead.
    """

    __slots__ = ("menu", "rho", "epsilon", "axiom_warnings", "_index")

    def __init__(self, menu, rho, epsilon: float = 0.5, validate: bool = True):
        menu = tuple(menu)
        if len(menu) < 2:
            raise KernelAxiomViolation("a menu needs at least two alternatives")
        if len(set(menu)) != len(menu):
            raise KernelAxiomViolation("menu labels must be distinct")
        if not 0.0 < epsilon < 1.0:
            raise KernelAxiomViolation("epsilon must lie in (0, 1)")
        r = np.asarray(rho, dtype=float).copy()
        n = len(menu)
        if r.shape != (n, n):
            raise KernelAxiomViolation(
                f"rho has shape {r.shape}, expected ({n}, {n})"
            )
        if np.any(r < -_SNAP) or np.any(r > 1.0 + _SNAP):
            raise KernelAxiomViolation("acceptance probabilities must lie in [0, 1]")
        r = np.clip(r, 0.0, 1.0)
        r[np.abs(r) < _SNAP] = 0.0
        r[np.abs(r - 1.0) < _SNAP] = 1.0
        np.fill_diagonal(r, epsilon)
        warnings = []
        for i in range(n):
            for j in range(i + 1, n):
                one_ij, zero_ji = r[i, j] == 1.0, r[j, i] == 0.0
                if one_ij != zero_ji:
                    warnings.append(
                        f"pair ({menu[i]}, {menu[j]}): "
                        f"rho={r[i, j]!r} vs complementary rho={r[j, i]!r}"
                    )
                one_ji, zero_ij = r[j, i] == 1.0, r[i, j] == 0.0
                if one_ji != zero_ij:
                    warnings.append(
                        f"pair ({menu[j]}, {menu[i]}): "
                        f"rho={r[j, i]!r} vs complementary rho={r[i, j]!r}"
                    )
        if validate and warnings:
            raise KernelAxiomViolation(
                "deterministic acceptance must be mirrored by deterministic "
                "rejection: " + "; ".join(warnings)
            )
        r.setflags(write=False)
        object.__setattr__(self, "menu", menu)
        object.__setattr__(self, "rho", r)
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "axiom_warnings", tuple(warnings))
        object.__setattr__(self, "_index", {a: k for k, a in enumerate(menu)})

    def __setattr__(self, name, value):
        raise AttributeError("BinaryChoiceKernel is immutable")

    @property
    def order(self) -> int:
        return len(self.menu)

    def index(self, label) -> int:
        return self._index[label]

    def prob(self, proposal, incumbent) -> float:
        """rho(proposal | incumbent) by label."""
        return float(self.rho[self._index[proposal], self._index[incumbent]])

    def with_epsilon(self, epsilon: float) -> "BinaryChoiceKernel":
        return BinaryChoiceKernel(self.menu, self.rho, epsilon, validate=False)

    def __repr__(self):
        return f"BinaryChoiceKernel(menu={self.menu}, epsilon={self.epsilon})"


class Tandem:
    """Kernel plus expected response times (seconds; diagonal stored 0)."""

    __slots__ = ("kernel", "tau", "axiom_warnings")

    def __init__(self, kernel: BinaryChoiceKernel, tau, validate: bool = True):
        t = np.asarray(tau, dtype=float).copy()
        n = kernel.order
        if t.shape != (n, n):
            raise TandemAxiomViolation(f"tau has shape {t.shape}, expected ({n}, {n})")
        if np.any(t < -_SNAP):
            raise TandemAxiomViolation("response times must be non-negative")
        t = np.clip(t, 0.0, None)
        t[t < _SNAP] = 0.0
        np.fill_diagonal(t, 0.0)
        r = kernel.rho
        warnings = []
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                deterministic = r[i, j] in (0.0, 1.0)
                if deterministic != (t[i, j] == 0.0):
                    warnings.append(
                        f"pair ({kernel.menu[i]}, {kernel.menu[j]}): "
                        f"rho={r[i, j]!r} with tau={t[i, j]!r}"
                    )
        for i in range(n):
            for j in range(i + 1, n):
                if t[i, j] > 0 and _close(t[i, j], t[j, i]):
                    if not _close(r[i, j], 1.0 - r[j, i]):
                        warnings.append(
                            f"pair ({kernel.menu[i]}, {kernel.menu[j]}): symmetric "
                            f"times but biased probabilities"
                        )
        if validate and warnings:
            raise TandemAxiomViolation("; ".join(warnings))
        t.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "tau", t)
        object.__setattr__(self, "axiom_warnings", tuple(warnings))

    def __setattr__(self, name, value):
        raise AttributeError("Tandem is immutable")

    @property
    def menu(self):
        return self.kernel.menu

    def time(self, proposal, incumbent) -> float:
        return float(self.tau[self.kernel.index(proposal), self.kernel.index(incumbent)])


@dataclass(frozen=True)
class KernelFlags:
    unbiased: bool
    positive: bool
    dirac: bool


@dataclass(frozen=True)
class TransitivityReport:
    holds: bool
    worst_triple: tuple | None
    max_violation: float

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class PreferenceRelations:
    strict: frozenset  # i >* j: proposal i surely accepted over j
    weak: frozenset  # i >= j: rho(i|j) >= rho(j|i)
    incomparable_classes: tuple  # partition of the menu by the stochastic relation
    stochastic_weak: frozenset  # weak restricted to stochastically compared pairs


@dataclass(frozen=True, eq=False)
class ValueRepresentation:
    """w: integer levels 1..m; v: log strict utility; s: status-quo index.

    ``phi_samples`` (log-odds -> response time) and ``threshold_l`` are only
    present for representations built from tandems; ``even_phi`` records
    whether the time profile is symmetric in the log-odds.
    """

    menu: tuple
    w: dict
    v: dict
    s: np.ndarray
    phi_samples: dict | None = None
    threshold_l: float | None = None
    even_phi: bool | None = None
    _levels: tuple = field(default=(), repr=False)

    def level_sets(self) -> tuple:
        """Menu partition by w, ascending level (1 = most dominated)."""
        return self._levels


def classify_kernel(k: BinaryChoiceKernel, tol: float = _REL_TOL) -> KernelFlags:
    """Flags: unbiased (rho(i|j)=1-rho(j|i)), positive, dirac."""
    r = k.rho
    n = k.order
    off = ~np.eye(n, dtype=bool)
    unbiased = all(
        _close(r[i, j], 1.0 - r[j, i], tol)
        for i in range(n)
        for j in range(n)
        if i != j
    )
    positive = bool(np.all(r[off] > 0.0))
    dirac = bool(np.all((r[off] == 0.0) | (r[off] == 1.0)))
    return KernelFlags(unbiased=unbiased, positive=positive, dirac=dirac)


def is_transitive(k: BinaryChoiceKernel, tol: float = _REL_TOL) -> TransitivityReport:
    """Product rule over all distinct triples.

    Transitivity means the two cyclic products rho(j|i)rho(k|j)rho(i|k) and
    rho(k|i)rho(j|k)rho(i|j) agree for every triple: cycles of acceptances
    are equally likely in both directions. Vacuously true for menus with
    fewer than three alternatives.
    """
    r = k.rho
    n = k.order
    worst, worst_violation = None, 0.0
    for i in range(n):
        for j in range(i + 1, n):
            for kk in range(j + 1, n):
                forward = r[j, i] * r[kk, j] * r[i, kk]
                backward = r[kk, i] * r[j, kk] * r[i, j]
                scale = max(forward, backward, _ABS_FLOOR)
                violation = abs(forward - backward) / scale
                if violation > worst_violation:
                    worst_violation = violation
                    worst = (k.menu[i], k.menu[j], k.menu[kk])
    if worst_violation > tol:
        return TransitivityReport(False, worst, worst_violation)
    return TransitivityReport(True, None, worst_violation)


def _stochastic_components(k: BinaryChoiceKernel) -> list:
    # connected components of the "both directions stochastic" graph;
    # under transitivity these are exactly the incomparability classes
    n = k.order
    r = k.rho
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if 0.0 < r[i, j] < 1.0 and 0.0 < r[j, i] < 1.0:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def induced_relations(k: BinaryChoiceKernel) -> PreferenceRelations:
    """Read the preference relations literally off the kernel.

    The strict relation holds where acceptance is sure; the weak relation
    compares the two orientations; the incomparability partition groups
    alternatives whose comparisons are stochastic both ways. Lemma-level
    structure (equivalence classes, completeness) is only guaranteed for
    transitive kernels, but the definitions apply to any kernel.
    """
    r = k.rho
    menu = k.menu
    n = k.order
    strict = frozenset(
        (menu[i], menu[j]) for i in range(n) for j in range(n) if i != j and r[i, j] == 1.0
    )
    weak = frozenset(
        (menu[i], menu[j])
        for i in range(n)
        for j in range(n)
        if r[i, j] >= r[j, i] or _close(r[i, j], r[j, i])
    )
    comps = _stochastic_components(k)
    classes = tuple(tuple(menu[i] for i in comp) for comp in comps)
    stochastic = {
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and 0.0 < r[i, j] < 1.0 and 0.0 < r[j, i] < 1.0
    }
    stochastic_weak = frozenset(
        {(menu[i], menu[j]) for i, j in stochastic if r[i, j] >= r[j, i] or _close(r[i, j], r[j, i])}
        | {(a, a) for a in menu}  # self-comparison is never strict
    )
    return PreferenceRelations(strict, weak, classes, stochastic_weak)


def build_value_representation(k: BinaryChoiceKernel) -> ValueRepresentation:
    """Constructive decomposition of a transitive kernel into (w, v, s).

    Follows the existence proof: the incomparability classes, linearly
    ordered by the strict relation, become integer levels 1..m of w. Within
    level h the first alternative by menu order is the representative i*_h;
    strict utilities are the odds u*_h(j) = rho(j|i*_h)/rho(i*_h|j), scaled
    by constants sigma_1 = 1 and

        sigma_h = 2 sigma_{h-1} max u*_{h-1} / min u*_h

    (factor two keeps the proof's strict inequality away from float
    equality), and v = log(sigma_h u*_h). The status-quo index is
    s = rho(i|j) + rho(j|i) within levels and 1 across.

    Raises
    ------
    NotTransitiveError
        With the worst violating triple when the product rule fails.
    """
    report = is_transitive(k)
    if not report.holds:
        raise NotTransitiveError(report.worst_triple, report.max_violation)
    r = k.rho
    menu = k.menu
    comps = _stochastic_components(k)
    # linear order on classes: a class is above another when its members are
    # surely accepted against the other's members
    def dominated_count(comp):
        i = comp[0]
        return sum(
            1 for other in comps if other is not comp and r[i, other[0]] == 1.0
        )

    comps_sorted = sorted(comps, key=dominated_count)  # ascending: bottom first
    w = {}
    levels = []
    for h, comp in enumerate(comps_sorted, start=1):
        levels.append(tuple(menu[i] for i in comp))
        for i in comp:
            w[menu[i]] = h
    # per-level strict utilities against the representative
    u_levels = []
    for comp in comps_sorted:
        rep = comp[0]
        u_levels.append({j: r[j, rep] / r[rep, j] for j in comp})
    sigma = 1.0
    v = {}
    prev_max = None  # unscaled maximum of the previous level's utilities
    for u in u_levels:
        if prev_max is not None:
            sigma = 2.0 * sigma * prev_max / min(u.values())
        for j, uj in u.items():
            v[menu[j]] = math.log(sigma * uj)
        prev_max = max(u.values())
    n = k.order
    s = np.ones((n, n))
    for comp in comps_sorted:
        for i in comp:
            for j in comp:
                if i != j:
                    s[i, j] = r[i, j] + r[j, i]
    rep_obj = ValueRepresentation(
        menu=menu, w=w, v=v, s=s, _levels=tuple(levels)
    )
    rebuilt = reconstruct_kernel(rep_obj, k.epsilon)
    if np.max(np.abs(rebuilt.rho - r)) > 1e-9:
        raise RuntimeError("internal error: representation failed to reproduce rho")
    return rep_obj


def reconstruct_kernel(
    rep: ValueRepresentation, epsilon: float = 0.5
) -> BinaryChoiceKernel:
    """Rebuild the kernel from a value representation.

    rho(i|j) is 1 (0) across levels by the sign of w(i) - w(j), and
    s(i, j) e^{v(i)} / (e^{v(i)} + e^{v(j)}) within a level. Raises
    :class:`InvalidSError` when the within-level formula leaves (0, 1)
    for either orientation.
    """
    menu = rep.menu
    n = len(menu)
    rho = np.full((n, n), epsilon)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            wi, wj = rep.w[menu[i]], rep.w[menu[j]]
            if wi > wj:
                rho[i, j] = 1.0
            elif wi < wj:
                rho[i, j] = 0.0
            else:
                logistic = 1.0 / (1.0 + math.exp(rep.v[menu[j]] - rep.v[menu[i]]))
                val = rep.s[i, j] * logistic
                if not 0.0 < val < 1.0:
                    raise InvalidSError((menu[i], menu[j]), val)
                rho[i, j] = val
    return BinaryChoiceKernel(menu, rho, epsilon)


def log_odds(k: BinaryChoiceKernel) -> np.ndarray:
    """Antisymmetric matrix l[i, j] = ln(rho(i|j) / rho(j|i)).

    Defined only on stochastic pairs; deterministic pairs and the diagonal
    are flagged NaN.
    """
    r = k.rho
    n = k.order
    out = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if i != j and 0.0 < r[i, j] < 1.0 and 0.0 < r[j, i] < 1.0:
                out[i, j] = math.log(r[i, j]) - math.log(r[j, i])
    return out


def complementary_log_odds(k: BinaryChoiceKernel) -> np.ndarray:
    """Matrix lbar[i, j] = ln((1 - rho(j|i)) / (1 - rho(i|j))) on stochastic pairs."""
    r = k.rho
    n = k.order
    out = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if i != j and 0.0 < r[i, j] < 1.0 and 0.0 < r[j, i] < 1.0:
                out[i, j] = math.log1p(-r[j, i]) - math.log1p(-r[i, j])
    return out


def error_rates(k: BinaryChoiceKernel) -> tuple[np.ndarray, np.ndarray]:
    """First- and second-type error probabilities per unordered pair.

    ER_I[i, j] = min(1 - rho(i|j), 1 - rho(j|i)): rejecting the superior
    alternative; ER_II[i, j] = min(rho(i|j), rho(j|i)): accepting the
    inferior one. Both symmetric; diagonal set to 0.
    """
    r = k.rho
    er1 = np.minimum(1.0 - r, 1.0 - r.T)
    er2 = np.minimum(r, r.T)
    np.fill_diagonal(er1, 0.0)
    np.fill_diagonal(er2, 0.0)
    return er1, er2


@dataclass(frozen=True)
class ChronometricReport:
    holds: bool
    threshold_l: float | None

    def __bool__(self):
        return self.holds


def _timed_points(t: Tandem, tol: float):
    """(log-odds, time) for ordered pairs with nonzero response times,
    grouped into clusters of equal log-odds."""
    ell = log_odds(t.kernel)
    n = t.kernel.order
    pts = [
        (ell[i, j], t.tau[i, j])
        for i in range(n)
        for j in range(n)
        if i != j and t.tau[i, j] > 0.0 and not math.isnan(ell[i, j])
    ]
    pts.sort()
    clusters = []  # [(l value, [taus])]
    for l, tau in pts:
        if clusters and _close(clusters[-1][0], l, tol):
            clusters[-1][1].append(tau)
        else:
            clusters.append((l, [tau]))
    return clusters


def is_chronometric(t: Tandem, tol: float = _REL_TOL) -> ChronometricReport:
    """Single-peakedness of response times in the log-odds.

    Holds when equal log-odds imply equal times, and some threshold l splits
    the observed log-odds so that times strictly increase below l and
    strictly decrease above it. Candidate thresholds are the observed values,
    the midpoints between consecutive distinct values, and +-infinity; the
    first admissible one is reported.
    """
    report = is_transitive(t.kernel, tol)
    if not report.holds:
        raise NotTransitiveError(report.worst_triple, report.max_violation)
    clusters = _timed_points(t, tol)
    for _, taus in clusters:
        if any(not _close(taus[0], x, tol) for x in taus[1:]):
            return ChronometricReport(False, None)
    ls = [l for l, _ in clusters]
    taus = [ts[0] for _, ts in clusters]
    if not ls:
        return ChronometricReport(True, 0.0)  # all choices instantaneous

    def admissible(l):
        for a in range(len(ls)):
            for b in range(a + 1, len(ls)):
                # ls[a] < ls[b] by sort order
                if l <= ls[a] or _close(l, ls[a], tol):  # both above threshold
                    if not _lt(taus[b], taus[a], tol):
                        return False
                if ls[b] <= l or _close(l, ls[b], tol):  # both below threshold
                    if not _lt(taus[a], taus[b], tol):
                        return False
        return True

    candidates = list(ls)
    candidates += [(ls[i] + ls[i + 1]) / 2.0 for i in range(len(ls) - 1)]
    candidates += [-math.inf, math.inf]
    for cand in candidates:
        if admissible(cand):
            return ChronometricReport(True, cand)
    return ChronometricReport(False, None)


def is_psychometric(t: Tandem, tol: float = _REL_TOL) -> bool:
    """Monotonicity of both error rates in the expected response times.

    Strictly shorter times must come with strictly lower first- and
    second-type errors, and weakly shorter times with weakly lower ones,
    over all pairs with nonzero response times.
    """
    report = is_transitive(t.kernel, tol)
    if not report.holds:
        raise NotTransitiveError(report.worst_triple, report.max_violation)
    er1, er2 = error_rates(t.kernel)
    n = t.kernel.order
    pts = [
        (t.tau[i, j], er1[i, j], er2[i, j])
        for i in range(n)
        for j in range(n)
        if i != j and t.tau[i, j] > 0.0
    ]
    for ta, e1a, e2a in pts:
        for tb, e1b, e2b in pts:
            if _lt(ta, tb, tol):
                if not (_lt(e1a, e1b, tol) and _lt(e2a, e2b, tol)):
                    return False
            if ta <= tb or _close(ta, tb, tol):
                if _lt(e1b, e1a, tol) or _lt(e2b, e2a, tol):
                    return False
    return True


def build_tandem_representation(t: Tandem, tol: float = _REL_TOL) -> ValueRepresentation:
    """Value representation of the kernel plus the observed time profile.

    The time profile phi is returned as the finite map from observed
    log-odds to response times (no extension off the observed set is
    fabricated), together with the fitted threshold and whether the profile
    is even (equivalently, the tandem is psychometric).

    Raises
    ------
    NotChronometricError
        When no admissible threshold exists.
    """
    chrono = is_chronometric(t, tol)
    if not chrono.holds:
        raise NotChronometricError("response times are not single-peaked in the log-odds")
    base = build_value_representation(t.kernel)
    clusters = _timed_points(t, tol)
    phi_samples = {l: taus[0] for l, taus in clusters}
    return ValueRepresentation(
        menu=base.menu,
        w=base.w,
        v=base.v,
        s=base.s,
        phi_samples=phi_samples,
        threshold_l=chrono.threshold_l,
        even_phi=is_psychometric(t, tol),
        _levels=base.level_sets(),
    )
