"""Concrete binary choice models.

Drift-diffusion closed forms and their exact inverse (parameter
identification from a tandem), trial-level samplers (Euler-Maruyama first
passage, discrete-time Ornstein-Uhlenbeck / extrema detection), empirical
tandem estimation from trial records, and the standard kernel constructors
(dirac order, logit).

The drift-diffusion model compares proposal i against incumbent j by running
a Brownian evidence process with drift gap = nu(i) - nu(j) and infinitesimal
variance 2 between an acceptance barrier at +lambda and a rejection barrier
at -beta. Acceptance probability and mean decision time have closed forms;
everything downstream (kernels, tandems, value representations) is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCell,
    InconsistentTandem,
    MaxStepsExceeded,
    NoInformativePair,
    NonInjectiveNu,
    StepTooLarge,
)
from .kernels import (
    BinaryChoiceKernel,
    Tandem,
    ValueRepresentation,
    complementary_log_odds,
    log_odds,
    reconstruct_kernel,
)

_MIN_NU_GAP = 1e-12


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class DdmParams:
    """Drift-diffusion parameters: neural utilities and the two barriers.

    ``nu`` maps labels to neural utilities and must be injective (pairwise
    gaps above 1e-12): tied utilities with unequal barriers produce a pair
    violating the tandem axioms in the limit, so ties are rejected rather
    than given a meaning. Pass ``validate=False`` only for diagnostics
    (e.g. sampling a forced zero-drift trial).
    """

    nu: dict
    lam: float
    beta: float
    validate: bool = True

    def __post_init__(self):
        if self.lam <= 0 or self.beta <= 0:
            raise ValueError("barriers lambda and beta must be positive")
        if not self.nu:
            raise ValueError("nu must map at least one label")
        if self.validate:
            _require_injective(self.nu, tuple(self.nu))

    @property
    def menu(self) -> tuple:
        return tuple(self.nu)

    def gap(self, proposal, incumbent) -> float:
        return self.nu[proposal] - self.nu[incumbent]


def _require_injective(nu: dict, menu) -> None:
    vals = sorted((nu[a], a) for a in menu)
    for (x, a), (y, b) in zip(vals, vals[1:]):
        if y - x <= _MIN_NU_GAP:
            raise NonInjectiveNu(f"nu({a!r}) and nu({b!r}) differ by {y - x!r}")


@dataclass(frozen=True, eq=False)
class OuParams:
    """Discrete-time Ornstein-Uhlenbeck comparison process.

    Z(t) = (1-eta) Z(t-1) + gap * mu_signal(t-1) + sigma * noise, absorbed at
    +lambda / -beta. eta = 0, sigma = sqrt(2), mu_signal = 1 is the
    discrete-time drift-diffusion walk; eta = 1 is extrema detection (no
    accumulation). One step is one time unit; ``time_unit`` rescales
    reported response times to seconds.
    """

    nu: dict
    lam: float
    beta: float
    eta: float = 0.0
    sigma: float = math.sqrt(2.0)
    mu_signal: object = 1.0  # constant, or callable iteration -> float
    max_steps: int = 10**6
    time_unit: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.lam <= 0 or self.beta <= 0:
            raise ValueError("barriers lambda and beta must be positive")

    def signal(self, t: int) -> float:
        return self.mu_signal(t) if callable(self.mu_signal) else float(self.mu_signal)


@dataclass(frozen=True)
class TrialRecord:
    """One binary comparison: who was proposed, who won, how long it took.

    Censored trials (sampler hit its step cap) carry choice None and rt NaN
    and are excluded from empirical estimates, never silently dropped.
    """

    proposal: object
    incumbent: object
    choice: object
    rt: float
    censored: bool = False

    def __post_init__(self):
        if self.censored:
            return
        if self.choice not in (self.proposal, self.incumbent):
            raise ValueError("choice must be the proposal or the incumbent")
        if not self.rt >= 0:
            raise ValueError("response time must be non-negative")


# --------------------------------------------------------------------------
# closed forms


def ddm_choice_probability(lam: float, beta: float, gap: float) -> float:
    """P(accept proposal) for drift gap between barriers +lam and -beta.

    rho = (1 - e^{beta gap}) / (e^{-lam gap} - e^{beta gap}), evaluated in
    expm1 form on the side that keeps every exponent non-positive; the
    removable singularity at gap = 0 is filled with beta / (lam + beta).
    """
    if gap == 0.0:
        return beta / (lam + beta)
    if gap > 0.0:
        return math.expm1(-beta * gap) / math.expm1(-(lam + beta) * gap)
    return (math.exp(lam * gap) - math.exp((lam + beta) * gap)) / (
        -math.expm1((lam + beta) * gap)
    )


def ddm_mean_time(lam: float, beta: float, gap: float) -> float:
    """Mean decision time [rho (lam+beta) - beta] / gap.

    Near gap = 0 the numerator cancels; below |gap| (lam+beta) < 1e-7 the
    analytic limit lam beta / 2 is returned (relative error ~1e-8 at the
    switch point, far below the formula's cancellation error there).
    """
    if abs(gap) * (lam + beta) < 1e-7:
        return lam * beta / 2.0
    rho = ddm_choice_probability(lam, beta, gap)
    return (rho * (lam + beta) - beta) / gap


def ddm_status_quo(lam: float, beta: float, gap: float) -> float:
    """Status-quo index s = 1 + (e^{lam|gap|} - e^{beta|gap|}) / (1 - e^{(lam+beta)|gap|}).

    Identically 1 when lam = beta; otherwise strictly between 2 min(lam,beta)
    / (lam+beta) and 1. Equals rho(i|j) + rho(j|i).
    """
    a = abs(gap)
    if a == 0.0:
        return 2.0 * beta / (lam + beta)
    num = math.expm1(-beta * a) - math.expm1(-lam * a)  # e^{-beta a} - e^{-lam a}
    den = math.expm1(-(lam + beta) * a)
    return 1.0 + num / den


def response_time_profile(p: DdmParams):
    """The map phi from log-odds x = lam * gap to mean decision time.

    phi(x) = (lam^2/x) [ (1 - e^{(beta/lam) x}) / (e^{-x} - e^{(beta/lam) x})
    (1 + beta/lam) - beta/lam ], with phi(0) = lam beta / 2 filling the
    removable singularity. For lam = beta this reduces to the even function
    (lam^2/x) tanh(x/2).
    """
    lam, beta = p.lam, p.beta

    def phi(x: float) -> float:
        return ddm_mean_time(lam, beta, x / lam)

    return phi


def ddm_tandem(p: DdmParams, menu=None, epsilon: float = 0.5) -> Tandem:
    """Exact kernel and response times for every ordered pair of the menu.

    The resulting tandem is always chronometric; it is psychometric exactly
    when the barriers are symmetric (lam = beta).
    """
    menu = tuple(menu) if menu is not None else p.menu
    _require_injective(p.nu, menu)
    n = len(menu)
    rho = np.full((n, n), epsilon)
    tau = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            gap = p.nu[menu[i]] - p.nu[menu[j]]
            rho[i, j] = ddm_choice_probability(p.lam, p.beta, gap)
            tau[i, j] = ddm_mean_time(p.lam, p.beta, gap)
    return Tandem(BinaryChoiceKernel(menu, rho, epsilon), tau)


def ddm_value_representation(p: DdmParams, menu=None):
    """(ValueRepresentation, phi) induced by the closed forms.

    w is constant (every comparison is stochastic), v = lam * nu, and s is
    the closed-form status-quo index; phi is the response-time profile
    handle. v here differs from the constructive builder's output only by
    the per-level additive constant both are unique up to.
    """
    menu = tuple(menu) if menu is not None else p.menu
    _require_injective(p.nu, menu)
    n = len(menu)
    w = {a: 1 for a in menu}
    v = {a: p.lam * p.nu[a] for a in menu}
    s = np.ones((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                s[i, j] = ddm_status_quo(p.lam, p.beta, p.nu[menu[i]] - p.nu[menu[j]])
    rep = ValueRepresentation(menu=menu, w=w, v=v, s=s, _levels=(menu,))
    return rep, response_time_profile(p)


def identify_ddm(
    t: Tandem,
    reference=None,
    informative_tol: float = 1e-6,
    tol: float = 1e-6,
) -> DdmParams:
    """Recover (nu, lam, beta) from a tandem, exactly when one generated it.

    Uses the first pair by menu order with |log-odds| above
    ``informative_tol``: with l = ln(rho_ij/rho_ji) and
    lbar = ln((1-rho_ji)/(1-rho_ij)),

        lam = |l| sqrt(tau_ij / (l rho_ij + lbar (rho_ij - 1))),
        beta = lam lbar / l,

    and nu(i) = l_{i,reference} / lam with nu(reference) = 0. Every other
    pair is then cross-checked against the regenerated tandem; deviations
    above ``tol`` (absolute in rho, relative in tau) raise
    :class:`InconsistentTandem` — the input was not DDM-generated.
    """
    k = t.kernel
    menu = k.menu
    n = k.order
    ell = log_odds(k)
    ellbar = complementary_log_odds(k)
    pair = None
    for i in range(n):
        for j in range(i + 1, n):
            if not math.isnan(ell[i, j]) and abs(ell[i, j]) > informative_tol:
                pair = (i, j)
                break
        if pair:
            break
    if pair is None:
        raise NoInformativePair(
            "identification needs a stochastic pair with distinct log-odds"
        )
    i, j = pair
    l, lbar = ell[i, j], ellbar[i, j]
    rho_ij, tau_ij = k.rho[i, j], t.tau[i, j]
    denom = l * rho_ij + lbar * (rho_ij - 1.0)
    if denom <= 0.0:
        raise InconsistentTandem(math.inf)
    lam = abs(l) * math.sqrt(tau_ij / denom)
    beta = lam * lbar / l
    if beta <= 0.0 or not math.isfinite(lam) or not math.isfinite(beta):
        raise InconsistentTandem(math.inf)
    ref = reference if reference is not None else menu[0]
    ref_idx = k.index(ref)
    nu = {}
    for a_idx, a in enumerate(menu):
        if a_idx == ref_idx:
            nu[a] = 0.0
            continue
        la = ell[a_idx, ref_idx]
        if math.isnan(la):
            raise NoInformativePair(
                f"pair ({a!r}, {ref!r}) is deterministic; nu({a!r}) unidentifiable"
            )
        nu[a] = la / lam
    try:
        params = DdmParams(nu, lam, beta)
        regenerated = ddm_tandem(params, menu=menu, epsilon=k.epsilon)
    except NonInjectiveNu as exc:
        raise InconsistentTandem(math.inf) from exc
    dev_rho = np.max(np.abs(regenerated.kernel.rho - k.rho))
    with np.errstate(invalid="ignore"):
        dev_tau = np.max(
            np.abs(regenerated.tau - t.tau) / np.maximum(np.abs(t.tau), 1e-12)
        )
    deviation = max(float(dev_rho), float(dev_tau))
    if deviation > tol:
        raise InconsistentTandem(deviation)
    return params


# --------------------------------------------------------------------------
# samplers


def _em_step_guard(p: DdmParams, dt: float) -> None:
    if dt <= 0:
        raise StepTooLarge("dt must be positive")
    if dt > min(p.lam, p.beta) ** 2 / 100.0:
        raise StepTooLarge(
            f"dt={dt!r} too coarse for barriers ({p.lam}, {p.beta}); "
            f"need dt <= min(lam, beta)^2 / 100"
        )


def sample_ddm_trial(
    p: DdmParams,
    proposal,
    incumbent,
    dt: float = 1e-4,
    seed=None,
    max_steps: int = 10**8,
) -> TrialRecord:
    """One Euler-Maruyama first-passage trial.

    Z(t+dt) = Z(t) + gap dt + sqrt(2 dt) N(0,1) from Z(0) = 0, absorbed at
    +lam (accept proposal) or -beta (keep incumbent); rt is the crossing
    time on the dt grid. Crossings between grid points are missed, giving
    the documented O(sqrt(dt)) bias; the closed forms are the ground truth.
    Identical seeds give identical records.
    """
    _em_step_guard(p, dt)
    rng = _as_generator(seed)
    gap = p.nu[proposal] - p.nu[incumbent]
    drift = gap * dt
    scale = math.sqrt(2.0 * dt)
    z = 0.0
    block = 4096
    steps = 0
    while steps < max_steps:
        incr = drift + scale * rng.standard_normal(block)
        path = z + np.cumsum(incr)
        hits = (path >= p.lam) | (path <= -p.beta)
        idx = int(np.argmax(hits))
        if hits[idx]:
            steps += idx + 1
            accepted = path[idx] >= p.lam
            return TrialRecord(
                proposal,
                incumbent,
                proposal if accepted else incumbent,
                steps * dt,
            )
        z = float(path[-1])
        steps += block
    raise MaxStepsExceeded(max_steps)


def sample_ddm_trials(
    p: DdmParams,
    proposal,
    incumbent,
    n: int,
    dt: float = 1e-4,
    seed=None,
    max_steps: int = 10**8,
    block: int = 512,
    chunk: int = 8192,
) -> list:
    """Vectorized batch of Euler-Maruyama trials (same law as the scalar sampler).

    Trials are advanced in blocks of ``block`` steps with finished paths
    compacted out, ``chunk`` trials at a time; deterministic per seed.
    """
    _em_step_guard(p, dt)
    rng = _as_generator(seed)
    gap = p.nu[proposal] - p.nu[incumbent]
    accept, rt = _em_batch(
        np.full(n, gap), p.lam, p.beta, dt, rng, max_steps, block, chunk
    )
    out = []
    for a, r in zip(accept, rt):
        if math.isnan(r):
            out.append(TrialRecord(proposal, incumbent, None, math.nan, censored=True))
        else:
            out.append(TrialRecord(proposal, incumbent, proposal if a else incumbent, r))
    return out


def _em_batch(gaps, lam, beta, dt, rng, max_steps, block, chunk):
    """First-passage for many walkers with per-walker drift. Returns
    (accepted bool array, rt array with NaN where censored).

    Float32 inner arithmetic: rounding perturbs the effective barriers by
    ~1e-6, three orders below the O(sqrt(dt)) discretization bias, and
    halves the memory traffic of the hot loop.
    """
    n = len(gaps)
    accept = np.zeros(n, dtype=bool)
    rt = np.full(n, np.nan)
    scale = np.float32(math.sqrt(2.0 * dt))
    lam32 = np.float32(lam)
    neg_beta32 = np.float32(-beta)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        m = hi - lo
        alive = np.arange(lo, hi)  # global indices of unfinished walkers
        z = np.zeros(m, dtype=np.float32)
        done_steps = np.zeros(m, dtype=np.int64)
        drift = (gaps[lo:hi] * dt).astype(np.float32)
        while alive.size:
            incr = rng.standard_normal((alive.size, block), dtype=np.float32)
            incr *= scale
            incr += drift[:, None]
            np.cumsum(incr, axis=1, out=incr)
            incr += z[:, None]
            hit = incr >= lam32
            hit |= incr <= neg_beta32
            first = np.argmax(hit, axis=1)
            finished = hit[np.arange(alive.size), first]
            if finished.any():
                rows = np.nonzero(finished)[0]
                cols = first[rows]
                steps = done_steps[rows] + cols + 1
                idx = alive[rows]
                rt[idx] = steps * dt
                accept[idx] = incr[rows, cols] >= lam32
            live = ~finished
            alive = alive[live]
            z = incr[live, -1]
            drift = drift[live]
            done_steps = done_steps[live] + block
            over = done_steps >= max_steps
            if over.any():  # censor runaways: rt stays NaN
                keep = ~over
                alive, z = alive[keep], z[keep]
                drift, done_steps = drift[keep], done_steps[keep]
    return accept, rt


def ddm_sampler(p: DdmParams, menu, dt: float = 1e-4, max_steps: int = 10**8):
    """Vectorized trial sampler over index pairs, for Monte Carlo engines.

    Returns a callable (proposal_idx, incumbent_idx, rng) -> (accept, rt)
    running one Euler-Maruyama first passage per element.
    """
    _em_step_guard(p, dt)
    menu = tuple(menu)
    values = np.array([p.nu[a] for a in menu])

    def sampler(prop_idx, inc_idx, rng):
        gaps = values[prop_idx] - values[inc_idx]
        accept, rt = _em_batch(gaps, p.lam, p.beta, dt, rng, max_steps, 512, 8192)
        if np.isnan(rt).any():
            raise MaxStepsExceeded(max_steps)
        return accept, rt

    return sampler


def sample_ou_trial(p: OuParams, proposal, incumbent, seed=None) -> TrialRecord:
    """One discrete-time OU comparison trial.

    Iterates Z(t) = (1-eta) Z(t-1) + gap * mu_signal(t-1) + sigma N(0,1)
    from Z(0) = 0 until Z >= lam (accept) or Z <= -beta (keep); rt counts
    steps times ``time_unit``.

    Raises
    ------
    MaxStepsExceeded
        When the cap is hit; batch helpers convert this into a censored
        record instead.
    """
    rng = _as_generator(seed)
    gap = p.nu[proposal] - p.nu[incumbent]
    keep = 1.0 - p.eta
    z = 0.0
    block = 1024
    t = 0
    while t < p.max_steps:
        noise = p.sigma * rng.standard_normal(block)
        for eps in noise:
            z = keep * z + gap * p.signal(t) + eps
            t += 1
            if z >= p.lam:
                return TrialRecord(proposal, incumbent, proposal, t * p.time_unit)
            if z <= -p.beta:
                return TrialRecord(proposal, incumbent, incumbent, t * p.time_unit)
            if t >= p.max_steps:
                break
    raise MaxStepsExceeded(p.max_steps)


def sample_ou_trials(p: OuParams, proposal, incumbent, n: int, seed=None) -> list:
    """Batch of OU trials with per-trial derived seeds (seed, index);
    censored trials become flagged records."""
    out = []
    for k in range(n):
        rng = np.random.default_rng([0 if seed is None else seed, k])
        try:
            out.append(sample_ou_trial(p, proposal, incumbent, rng))
        except MaxStepsExceeded:
            out.append(TrialRecord(proposal, incumbent, None, math.nan, censored=True))
    return out


def ou_sampler(p: OuParams, menu):
    """Vectorized OU trial sampler over index pairs (Monte Carlo protocol).

    Censored comparisons raise MaxStepsExceeded: a chain cannot continue
    without a choice.
    """
    menu = tuple(menu)
    values = np.array([p.nu[a] for a in menu])
    keep = 1.0 - p.eta

    def sampler(prop_idx, inc_idx, rng):
        m = len(prop_idx)
        gaps = values[prop_idx] - values[inc_idx]
        accept = np.zeros(m, dtype=bool)
        rt = np.full(m, np.nan)
        alive = np.arange(m)
        z = np.zeros(m)
        t = 0
        while alive.size:
            if t >= p.max_steps:
                raise MaxStepsExceeded(p.max_steps)
            z = keep * z + gaps[alive] * p.signal(t) + p.sigma * rng.standard_normal(
                alive.size
            )
            t += 1
            up = z >= p.lam
            down = z <= -p.beta
            hit = up | down
            if hit.any():
                idx = alive[hit]
                accept[idx] = up[hit]
                rt[idx] = t * p.time_unit
                alive = alive[~hit]
                z = z[~hit]
        return accept, rt

    return sampler


# --------------------------------------------------------------------------
# empirical estimation and standard constructors


@dataclass(frozen=True, eq=False)
class EmpiricalTandem:
    """Per-cell estimates from trial records.

    ``tandem`` is populated (leniently validated, axiom violations collected
    as warnings) only when every ordered pair has at least one usable trial;
    otherwise it is None and ``missing_cells`` lists the gaps. Censored
    trials count toward ``censored`` only.
    """

    menu: tuple
    rho_hat: np.ndarray
    tau_hat: np.ndarray
    counts: np.ndarray
    censored: np.ndarray
    missing_cells: tuple
    tandem: Tandem | None
    warnings: tuple = ()


def empirical_tandem(
    trials, menu, epsilon: float = 0.5, strict: bool = False
) -> EmpiricalTandem:
    """Estimate a tandem by equating probabilities and frequencies.

    rho_hat(i|j) is the fraction of (proposal=i, incumbent=j) trials choosing
    i; tau_hat(i|j) the mean response time. Kernel axioms are enforced only
    as warnings: finite samples can produce 0/1 cells with positive times.

    Raises
    ------
    EmptyCell
        In strict mode, when some ordered pair has no usable trial.
    """
    menu = tuple(menu)
    n = len(menu)
    index = {a: k for k, a in enumerate(menu)}
    counts = np.zeros((n, n), dtype=np.int64)
    chose = np.zeros((n, n), dtype=np.int64)
    time_sum = np.zeros((n, n))
    cens = np.zeros((n, n), dtype=np.int64)
    for tr in trials:
        i, j = index[tr.proposal], index[tr.incumbent]
        if tr.censored:
            cens[i, j] += 1
            continue
        counts[i, j] += 1
        chose[i, j] += tr.choice == tr.proposal
        time_sum[i, j] += tr.rt
    missing = tuple(
        (menu[i], menu[j]) for i in range(n) for j in range(n) if i != j and counts[i, j] == 0
    )
    if strict and missing:
        raise EmptyCell(missing)
    with np.errstate(invalid="ignore"):
        rho_hat = np.where(counts > 0, chose / np.maximum(counts, 1), np.nan)
        tau_hat = np.where(counts > 0, time_sum / np.maximum(counts, 1), np.nan)
    np.fill_diagonal(rho_hat, epsilon)
    np.fill_diagonal(tau_hat, 0.0)
    tandem = None
    warnings = ()
    if not missing:
        kernel = BinaryChoiceKernel(menu, rho_hat, epsilon, validate=False)
        tandem = Tandem(kernel, tau_hat, validate=False)
        warnings = kernel.axiom_warnings + tandem.axiom_warnings
    return EmpiricalTandem(
        menu=menu,
        rho_hat=rho_hat,
        tau_hat=tau_hat,
        counts=counts,
        censored=cens,
        missing_cells=missing,
        tandem=tandem,
        warnings=warnings,
    )


def dirac_kernel(order, menu=None, epsilon: float = 0.5) -> BinaryChoiceKernel:
    """Deterministic kernel of a linear order (earlier in ``order`` wins)."""
    order = tuple(order)
    menu = tuple(menu) if menu is not None else order
    if sorted(map(str, order)) != sorted(map(str, menu)):
        raise ValueError("order must be a permutation of the menu")
    rank = {a: k for k, a in enumerate(order)}  # 0 = best
    n = len(menu)
    rho = np.full((n, n), epsilon)
    for i in range(n):
        for j in range(n):
            if i != j:
                rho[i, j] = 1.0 if rank[menu[i]] < rank[menu[j]] else 0.0
    return BinaryChoiceKernel(menu, rho, epsilon)


def logit_kernel(v, menu=None, s=None, epsilon: float = 0.5) -> BinaryChoiceKernel:
    """Strict-utility (logit) kernel rho(i|j) = s(i,j) e^{v(i)}/(e^{v(i)}+e^{v(j)}).

    ``v`` is a label -> value mapping, or a sequence aligned with ``menu``.
    ``s`` defaults to all ones (the unbiased case); an explicit symmetric
    array rescales pairs, with :class:`InvalidSError` raised if any
    probability leaves (0, 1).
    """
    if menu is None:
        menu = tuple(v)
    else:
        menu = tuple(menu)
    if not isinstance(v, dict):
        v = dict(zip(menu, v))
    n = len(menu)
    s_arr = np.ones((n, n)) if s is None else np.asarray(s, dtype=float)
    rep = ValueRepresentation(
        menu=menu, w={a: 1 for a in menu}, v=dict(v), s=s_arr, _levels=(menu,)
    )
    return reconstruct_kernel(rep, epsilon)
