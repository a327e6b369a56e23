"""The neural Metropolis algorithm.

A run starts from an incumbent drawn from mu; each iteration proposes a
challenger from the exploration column Q(.|incumbent), resolves the binary
comparison through the choice model, and the winner becomes the incumbent.
A stopping number N ends the run; the output is the incumbent held when it
fires. Iterations are indexed 0, 1, ...: after n completed iterations the
incumbent's law is M^n mu, where M is the induced transition matrix.

For simple stopping numbers (independent of the realized path) the outcome
has exact expressions through the generating matrices,

    p_N = f_N(M) mu,        tau_N = taubar . g_N(M) mu,

with taubar the mean iteration duration per incumbent. Deadline stopping is
path-dependent: runs stop at the iteration straddling the deadline and
report the incumbent entering it; only Monte Carlo and the long-deadline
limit are available.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DeadlineNotExact,
    DimensionMismatch,
    IterationCap,
    NotNiceExploration,
    NotPositiveError,
    NotReversibleError,
    RegularityViolated,
    SamplerRequired,
    SingularSolve,
    TandemRequired,
)
from .kernels import (
    BinaryChoiceKernel,
    Tandem,
    build_value_representation,
    classify_kernel,
    is_transitive,
)
from .matrices import (
    StochasticMatrix,
    build_stochastic_matrix,
    classify,
    matrix_generating_function,
    probability_vector,
    spectral_generating_matrices,
    stationary_distribution,
    survival_generating_matrix,
)
from .stopping import (
    CustomPmf,
    Deadline,
    Fixed,
    Geometric,
    NegativeBinomial,
    StoppingNumber,
)

_DEFAULT_ITERATION_CAP = 10**9


def _iteration_cap() -> int:
    raw = os.environ.get("NMA_MAX_ITER")
    return int(raw) if raw else _DEFAULT_ITERATION_CAP


@dataclass(frozen=True, eq=False)
class AlgorithmSpec:
    """The quartet driving a run: menu, first-fixation mu, exploration Q,
    and a choice model.

    The model is a tandem (exact paths and tandem-driven Monte Carlo)
    and/or a sampler with signature (proposal_idx, incumbent_idx, rng) ->
    (accept bool array, rt array). A bare kernel supports the limit
    analyses only. ``tau_self`` is the duration charged when the incumbent
    proposes itself (self-comparisons take essentially no time; default 0).
    """

    menu: tuple
    mu: np.ndarray
    Q: StochasticMatrix
    tandem: Tandem | None = None
    kernel: BinaryChoiceKernel | None = None
    sampler: object = None
    tau_self: float = 0.0

    def __post_init__(self):
        menu = tuple(self.menu)
        object.__setattr__(self, "menu", menu)
        object.__setattr__(self, "mu", probability_vector(self.mu))
        kernel = self.kernel
        if kernel is None and self.tandem is not None:
            kernel = self.tandem.kernel
            object.__setattr__(self, "kernel", kernel)
        if kernel is None and self.sampler is None:
            raise TandemRequired(
                "spec needs a model: a tandem, a kernel, or a trial sampler"
            )
        if kernel is not None and kernel.menu != menu:
            raise DimensionMismatch(
                f"kernel menu {kernel.menu} does not match spec menu {menu}"
            )
        if self.tandem is not None and self.tandem.kernel.menu != menu:
            raise DimensionMismatch("tandem menu does not match spec menu")
        if self.Q.order != len(menu) or len(self.mu) != len(menu):
            raise DimensionMismatch(
                f"menu has {len(menu)} alternatives, Q order {self.Q.order}, "
                f"mu length {len(self.mu)}"
            )


@dataclass(frozen=True, eq=False)
class OutcomeReport:
    """Choice distribution and mean decision time, with provenance."""

    p: np.ndarray
    tau: float
    method: str  # closed_form | truncated_series | spectral | monte_carlo
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Full record of one run.

    ``iterations`` holds (n, incumbent, proposal, duration) for completed
    iterations; ``total_time`` is their duration sum. For deadline runs the
    straddling iteration is not included: the run is interrupted mid-
    comparison, and ``chosen`` is the incumbent it entered with.
    """

    iterations: tuple
    stop_iteration: int
    chosen: object
    total_time: float


def transition_matrix(Q: StochasticMatrix, k: BinaryChoiceKernel) -> StochasticMatrix:
    """M(i|j) = Q(i|j) rho(i|j) off the diagonal, residual mass on it.

    The kernel's diagonal epsilon never enters: self-proposals keep the
    incumbent either way, so all rejected and self mass lands on M(j|j).
    """
    if Q.order != k.order:
        raise DimensionMismatch(
            f"Q has order {Q.order}, kernel has {k.order} alternatives"
        )
    a = Q.entries * k.rho
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(a, 1.0 - a.sum(axis=0))
    return build_stochastic_matrix(a)


def mean_iteration_durations(
    Q: StochasticMatrix, t: Tandem, tau_self: float = 0.0
) -> np.ndarray:
    """taubar_j = sum_i Q(i|j) tau(i|j), with tau(j|j) = tau_self."""
    if Q.order != t.kernel.order:
        raise DimensionMismatch(
            f"Q has order {Q.order}, tandem has {t.kernel.order} alternatives"
        )
    tau = t.tau.copy()
    np.fill_diagonal(tau, tau_self)
    return (Q.entries * tau).sum(axis=0)


def inverse_time_exploration(t: Tandem, weight: float | None = None) -> StochasticMatrix:
    """Exploration with Q(i|j) = w / tau(i|j) off the diagonal.

    Equalizes mean iteration durations across incumbents (taubar_j =
    (|A|-1) w when tau_self = 0), which turns the deadline limit into the
    plain stationary distribution. ``weight`` defaults to the largest w
    keeping every diagonal non-negative.
    """
    n = t.kernel.order
    off = ~np.eye(n, dtype=bool)
    if np.any(t.tau[off] <= 0.0):
        raise RegularityViolated(
            "inverse-time exploration needs positive response times off the diagonal"
        )
    inv = np.zeros((n, n))
    inv[off] = 1.0 / t.tau[off]
    load = inv.sum(axis=0)
    w_max = 1.0 / load.max()
    w = w_max if weight is None else float(weight)
    if not 0.0 < w <= w_max * (1.0 + 1e-12):
        raise ValueError(f"weight must lie in (0, {w_max!r}]")
    q = w * inv
    np.fill_diagonal(q, 1.0 - q.sum(axis=0))
    return build_stochastic_matrix(q)


# --------------------------------------------------------------------------
# exact outcomes


def negbin_generating_matrices(
    M: StochasticMatrix, r: int, zeta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms of (f_N(M), g_N(M)) for N ~ NegativeBinomial(r, zeta).

        f = (1-zeta)^r (I - zeta M)^{-r}
        g = -( sum_{k=0}^{r} C(r,k) (-zeta)^k sum_{j<k} M^j ) (I - zeta M)^{-r}

    (empty inner sum = 0). Inverse powers are applied by repeated linear
    solves; every factor is a power series in M, so all factors commute and
    the side of the solve is immaterial.
    """
    if not (isinstance(r, int) and r >= 1):
        raise ValueError("r must be an integer >= 1")
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    n = M.order
    eye = np.eye(n)
    a = eye - zeta * M.entries  # invertible: column norm of zeta M is zeta < 1
    f = eye
    partial = np.zeros((n, n))  # sum_{j<k} M^j, updated as k grows
    power = eye.copy()
    g0 = np.zeros((n, n))
    for k in range(r + 1):
        g0 += math.comb(r, k) * (-zeta) ** k * partial
        partial = partial + power
        power = M.entries @ power
    g = -g0
    try:
        for _ in range(r):
            f = np.linalg.solve(a, f)
            g = np.linalg.solve(a, g)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - zeta < 1 forbids this
        raise SingularSolve(str(exc)) from exc
    f *= (1.0 - zeta) ** r
    return f, g


def _closed_form_matrices(M: StochasticMatrix, N: StoppingNumber, tail_tol: float):
    if isinstance(N, Geometric):
        return negbin_generating_matrices(M, 1, N.zeta)
    if isinstance(N, NegativeBinomial):
        return negbin_generating_matrices(M, N.r, N.zeta)
    if isinstance(N, Fixed):
        f = np.linalg.matrix_power(M.entries, N.n)
        g = np.zeros((M.order, M.order))
        power = np.eye(M.order)
        for _ in range(N.n):
            g = g + power
            power = M.entries @ power
        return f, g
    # finite-support pmf: the series is exact, not truncated
    return (
        matrix_generating_function(N, M, tail_tol),
        survival_generating_matrix(N, M, tail_tol),
    )


def exact_outcome(
    spec: AlgorithmSpec,
    N: StoppingNumber,
    strategy: str = "auto",
    tail_tol: float = 1e-12,
) -> OutcomeReport:
    """p_N = f_N(M) mu and tau_N = taubar . g_N(M) mu for a simple N.

    Strategies: ``closed_form`` (exact for fixed, geometric, negative
    binomial, and finite custom pmfs), ``spectral`` (requires M reversible),
    ``series`` (pmf-tail truncation at ``tail_tol``), or ``auto``, which
    picks closed_form when one exists for the stopping kind, then spectral
    when M is positive and reversible, else series. All strategies agree to
    1e-8 on any valid input.
    """
    if isinstance(N, Deadline):
        raise DeadlineNotExact(
            "deadline stopping is path-dependent; use monte_carlo_outcome or "
            "deadline_limit_distribution"
        )
    if spec.tandem is None:
        raise TandemRequired("exact outcomes need response times (a tandem)")
    M = transition_matrix(spec.Q, spec.kernel)
    taubar = mean_iteration_durations(spec.Q, spec.tandem, spec.tau_self)
    diagnostics = {}
    if strategy == "auto":
        if isinstance(N, (Geometric, NegativeBinomial, Fixed)):
            strategy = "closed_form"
        else:
            try:
                f, g = spectral_generating_matrices(M, N)
                strategy = "spectral"
            except (NotReversibleError, NotPositiveError):
                strategy = "series"
        diagnostics["auto"] = True
    if strategy == "closed_form":
        f, g = _closed_form_matrices(M, N, tail_tol)
    elif strategy == "spectral":
        f, g = spectral_generating_matrices(M, N)
    elif strategy == "series":
        f = matrix_generating_function(N, M, tail_tol)
        g = survival_generating_matrix(N, M, tail_tol)
        diagnostics["truncation_index"] = N.pmf_tail_index(tail_tol)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    p = f @ spec.mu
    tau = float(taubar @ (g @ spec.mu))
    diagnostics["p_raw_sum"] = float(p.sum())
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    return OutcomeReport(
        p=p, tau=max(tau, 0.0), method=strategy, diagnostics=diagnostics
    )


# --------------------------------------------------------------------------
# simulation


def tandem_sampler(t: Tandem, durations: str = "deterministic"):
    """Trial sampler from a tandem: choices Bernoulli(rho), durations at tau.

    ``durations="deterministic"`` returns tau(i|j) itself — exact for every
    mean-based quantity. ``"exponential"`` draws exponential times with the
    same means, providing the continuous duration distributions the deadline
    limit requires while leaving all means (hence all simple-stopping
    outcomes) unchanged.
    """
    if durations not in ("deterministic", "exponential"):
        raise ValueError(f"unknown duration scheme {durations!r}")
    rho = t.kernel.rho
    tau = t.tau
    exponential = durations == "exponential"

    def sampler(prop_idx, inc_idx, rng):
        pr = rho[prop_idx, inc_idx]
        accept = rng.random(pr.shape) < pr
        rt = tau[prop_idx, inc_idx]
        if exponential:
            rt = rt * rng.standard_exponential(rt.shape)
        return accept, rt

    return sampler


def _resolve_sampler(spec: AlgorithmSpec, deadline: bool):
    if spec.sampler is not None:
        return spec.sampler
    if deadline:
        # deadline outcomes depend on duration distributions, not just means;
        # make the modeling choice explicit instead of defaulting silently
        raise SamplerRequired(
            "deadline runs need an explicit trial sampler (e.g. "
            "tandem_sampler(t, durations='exponential'))"
        )
    if spec.tandem is not None:
        return tandem_sampler(spec.tandem)
    raise SamplerRequired("Monte Carlo needs a sampler or a tandem")


def _column_cdfs(Q: StochasticMatrix) -> np.ndarray:
    cdf = np.cumsum(Q.entries, axis=0)
    cdf[-1, :] = 1.0
    return cdf


def _draw_categorical(cdf_cols: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # cdf_cols: (order, m) column cdfs; one draw per column
    u = rng.random(cdf_cols.shape[1])
    idx = (u[None, :] >= cdf_cols).sum(axis=0)
    return np.minimum(idx, cdf_cols.shape[0] - 1)


def _sample_counts(N: StoppingNumber, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(N, Fixed):
        return np.full(size, N.n, dtype=np.int64)
    if isinstance(N, Geometric):
        return rng.geometric(1.0 - N.zeta, size).astype(np.int64) - 1
    if isinstance(N, NegativeBinomial):
        return rng.negative_binomial(N.r, 1.0 - N.zeta, size).astype(np.int64)
    if isinstance(N, CustomPmf):
        ns = np.array([n for n, _ in N.entries], dtype=np.int64)
        ps = np.array([p for _, p in N.entries])
        return rng.choice(ns, size=size, p=ps / ps.sum())
    return np.array([N.sample(rng) for _ in range(size)], dtype=np.int64)


def simulate_run(spec: AlgorithmSpec, N: StoppingNumber, seed: int) -> RunTrace:
    """Execute one run faithfully and return its trace.

    Two independent streams are derived from the seed: one for the stopping
    draw, one for the chain, so a simple N is independent of the realized
    path by construction. Deadline runs stop at the iteration whose
    completion would pass the deadline and report the incumbent entering it
    (the interrupted comparison is not part of the trace).
    """
    deadline = isinstance(N, Deadline)
    sampler = _resolve_sampler(spec, deadline)
    rng_stop = np.random.default_rng([seed, 0])
    rng_chain = np.random.default_rng([seed, 1])
    cdf_q = _column_cdfs(spec.Q)
    j = int(_draw_categorical(np.cumsum(spec.mu)[:, None], rng_chain)[0])
    iterations = []
    total = 0.0
    if deadline:
        cap = _iteration_cap()
        n = 0
        while True:
            if n >= cap:
                raise IterationCap(cap)
            prop = int(_draw_categorical(cdf_q[:, [j]], rng_chain)[0])
            accept, rt = sampler(np.array([prop]), np.array([j]), rng_chain)
            duration = float(rt[0])
            if total + duration > N.t:
                return RunTrace(tuple(iterations), n, spec.menu[j], total)
            iterations.append((n, spec.menu[j], spec.menu[prop], duration))
            if bool(accept[0]):
                j = prop
            total += duration
            n += 1
    n_stop = int(_sample_counts(N, rng_stop, 1)[0])
    for n in range(n_stop):
        prop = int(_draw_categorical(cdf_q[:, [j]], rng_chain)[0])
        accept, rt = sampler(np.array([prop]), np.array([j]), rng_chain)
        duration = float(rt[0])
        iterations.append((n, spec.menu[j], spec.menu[prop], duration))
        if bool(accept[0]):
            j = prop
        total += duration
    return RunTrace(tuple(iterations), n_stop, spec.menu[j], total)


def monte_carlo_outcome(
    spec: AlgorithmSpec, N: StoppingNumber, runs: int, seed: int
) -> OutcomeReport:
    """Empirical outcome over many runs, vectorized across the whole batch.

    Deterministic per (seed, runs); stopping draws and chain draws use
    separate streams. Reports binomial standard errors per alternative and
    the CLT standard error of the mean time.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    deadline = isinstance(N, Deadline)
    sampler = _resolve_sampler(spec, deadline)
    rng_stop = np.random.default_rng([seed, 0])
    rng_chain = np.random.default_rng([seed, 1])
    n_alt = len(spec.menu)
    cdf_q = _column_cdfs(spec.Q)
    cdf_mu = np.cumsum(spec.mu)
    incumbents = _draw_categorical(
        np.broadcast_to(cdf_mu[:, None], (n_alt, runs)), rng_chain
    )
    total = np.zeros(runs)
    if deadline:
        final, total = _deadline_chain(
            spec, N.t, sampler, incumbents, cdf_q, rng_chain
        )
        p_hat = np.bincount(final, minlength=n_alt) / runs
        se_p = np.sqrt(p_hat * (1.0 - p_hat) / runs)
        return OutcomeReport(
            p=p_hat,
            tau=float(N.t),
            method="monte_carlo",
            diagnostics={
                "runs": runs,
                "se_p": se_p,
                "mean_completed_time": float(total.mean()),
                "deadline": float(N.t),
            },
        )
    counts = _sample_counts(N, rng_stop, runs)
    step = 0
    while True:
        alive = np.nonzero(counts > step)[0]
        if alive.size == 0:
            break
        j = incumbents[alive]
        prop = _draw_categorical(cdf_q[:, j], rng_chain)
        accept, rt = sampler(prop, j, rng_chain)
        incumbents[alive] = np.where(accept, prop, j)
        total[alive] += rt
        step += 1
    p_hat = np.bincount(incumbents, minlength=n_alt) / runs
    se_p = np.sqrt(p_hat * (1.0 - p_hat) / runs)
    tau_hat = float(total.mean())
    se_tau = float(total.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return OutcomeReport(
        p=p_hat,
        tau=tau_hat,
        method="monte_carlo",
        diagnostics={"runs": runs, "se_p": se_p, "se_tau": se_tau},
    )


def _deadline_chain(spec, deadline_t, sampler, incumbents, cdf_q, rng):
    """Advance all runs to their deadline; returns (final incumbents,
    completed time per run). Compacts finished runs out of the hot loop."""
    runs = len(incumbents)
    final = incumbents.copy()
    completed = np.zeros(runs)
    alive = np.arange(runs)
    j = incumbents.copy()
    t = np.zeros(runs)
    cap = _iteration_cap()
    step = 0
    while alive.size:
        if step >= cap:
            raise IterationCap(cap)
        cur = j[alive]
        prop = _draw_categorical(cdf_q[:, cur], rng)
        accept, rt = sampler(prop, cur, rng)
        t_next = t[alive] + rt
        over = t_next > deadline_t
        if over.any():
            done = alive[over]
            final[done] = cur[over]  # incumbent entering the straddling iteration
            completed[done] = t[done]
        keep = ~over
        stay = alive[keep]
        j[stay] = np.where(accept[keep], prop[keep], cur[keep])
        t[stay] = t_next[keep]
        alive = stay
        step += 1
    return final, completed


# --------------------------------------------------------------------------
# limits


def limit_distribution(spec: AlgorithmSpec) -> np.ndarray:
    """Limit of p_N along divergent simple stopping rules.

    For a transitive kernel and nice (symmetric, off-diagonal positive)
    exploration, the limit is the softmax of v restricted to the top w
    level, zero elsewhere. Cross-validated against the stationary
    distribution of M whenever M is primitive.
    """
    if spec.kernel is None:
        raise TandemRequired("limit analysis needs a kernel, not just a sampler")
    if not classify(spec.Q).nice:
        raise NotNiceExploration(
            "the softmax limit needs symmetric exploration with positive "
            "off-diagonal entries"
        )
    rep = build_value_representation(spec.kernel)  # raises NotTransitiveError
    top = rep.level_sets()[-1]
    logits = np.full(len(spec.menu), -np.inf)
    for a in top:
        logits[spec.menu.index(a)] = rep.v[a]
    shifted = logits - logits.max()
    weights = np.where(np.isfinite(shifted), np.exp(shifted), 0.0)
    pi = weights / weights.sum()
    M = transition_matrix(spec.Q, spec.kernel)
    if classify(M).primitive:
        fixed_point = stationary_distribution(M, tol=1e-14)
        if np.max(np.abs(fixed_point - pi)) > 1e-8:  # pragma: no cover
            raise RuntimeError("internal error: softmax limit disagrees with pi(M)")
    return pi


def convergence_profile(spec: AlgorithmSpec, horizons) -> list[float]:
    """l1 distances ||M^n mu - pi||_1 at the requested horizons."""
    horizons = [int(n) for n in horizons]
    if any(n < 0 for n in horizons):
        raise ValueError("horizons must be non-negative")
    pi = limit_distribution(spec)
    M = transition_matrix(spec.Q, spec.kernel)
    wanted = set(horizons)
    values = {}
    x = spec.mu.copy()
    for n in range(max(horizons, default=0) + 1):
        if n in wanted:
            values[n] = float(np.abs(x - pi).sum())
        x = M.entries @ x
    return [values[n] for n in horizons]


def deadline_limit_distribution(spec: AlgorithmSpec) -> np.ndarray:
    """Long-deadline choice frequencies pi(j) taubar_j / sum_k pi(k) taubar_k.

    The incumbent process under a deadline is semi-Markov: the chance of
    being caught holding j weights the stationary mass by the mean time an
    iteration with incumbent j takes. Requires a positive transitive kernel,
    irreducible exploration, and positive off-diagonal response times.
    """
    if spec.tandem is None:
        raise TandemRequired("the deadline limit needs response times (a tandem)")
    k = spec.kernel
    if not classify_kernel(k).positive:
        raise RegularityViolated("kernel must be positive off the diagonal")
    report = is_transitive(k)
    if not report.holds:
        raise RegularityViolated(
            f"kernel must be transitive (worst triple {report.worst_triple})"
        )
    if not classify(spec.Q).irreducible:
        raise RegularityViolated("exploration matrix must be irreducible")
    off = ~np.eye(k.order, dtype=bool)
    if np.any(spec.tandem.tau[off] <= 0.0):
        raise RegularityViolated("response times must be positive off the diagonal")
    M = transition_matrix(spec.Q, k)
    pi = stationary_distribution(M, tol=1e-14)
    taubar = mean_iteration_durations(spec.Q, spec.tandem, spec.tau_self)
    weights = pi * taubar
    return weights / weights.sum()
