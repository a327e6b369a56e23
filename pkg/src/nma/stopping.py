"""Stopping numbers: distributions over iteration counts.

A stopping number N is a random non-negative integer that terminates the
algorithm after N comparisons. The supported kinds are fixed, geometric,
negative binomial, custom finite pmf, and deadline. The deadline kind is
path-dependent (it stops on realized durations, not on a pmf) and is only
consumable by the engine's simulation paths; every pmf-style query on it
raises :class:`~nma.errors.DeadlineNotSupported`.

Conventions: ``pmf(n)`` is P[N = n], ``survival(n)`` is P[N > n], and
``pgf(z)`` is the probability generating function E[z^N].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DeadlineNotSupported, NoConvergenceError

_MAX_TERMS = 10**7  # guard for tail walks; desk-scale pmfs stay far below this


class StoppingNumber:
    """Base class. Subclasses implement pmf/survival/mean/pgf/sample."""

    kind = "abstract"

    def pmf(self, n: int) -> float:
        raise NotImplementedError

    def survival(self, n: int) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def pgf(self, z: float) -> float:
        raise NotImplementedError

    def sample(self, rng) -> int:
        raise NotImplementedError

    # -- truncation indices for the matrix series ---------------------------

    def pmf_tail_index(self, tail_tol: float) -> int:
        """Smallest K with P[N > K] <= tail_tol."""
        for n in range(_MAX_TERMS):
            if self.survival(n) <= tail_tol:
                return n
        raise NoConvergenceError(_MAX_TERMS)

    def survival_tail_index(self, tail_tol: float) -> int:
        """Smallest K with sum_{n>K} P[N > n] <= tail_tol."""
        remaining = self.mean()
        for n in range(_MAX_TERMS):
            remaining -= self.survival(n)
            if remaining <= tail_tol:
                return n
        raise NoConvergenceError(_MAX_TERMS)

    def dominates(self, other: "StoppingNumber", tol: float = 1e-12) -> bool:
        """Stochastic dominance: P[N > n] >= P[other > n] for all n."""
        horizon = max(self.pmf_tail_index(tol), other.pmf_tail_index(tol)) + 1
        return all(
            self.survival(n) >= other.survival(n) - tol for n in range(horizon + 1)
        )


@dataclass(frozen=True)
class Fixed(StoppingNumber):
    n: int

    kind = "fixed"

    def __post_init__(self):
        if self.n < 0 or self.n != int(self.n):
            raise ValueError("fixed stopping number needs an integer n >= 0")

    def pmf(self, n):
        return 1.0 if n == self.n else 0.0

    def survival(self, n):
        return 1.0 if n < self.n else 0.0

    def mean(self):
        return float(self.n)

    def pgf(self, z):
        return z**self.n

    def sample(self, rng):
        return self.n


@dataclass(frozen=True)
class Geometric(StoppingNumber):
    """P[N = n] = zeta^n (1 - zeta): stop at the first 'stop' signal."""

    zeta: float

    kind = "geometric"

    def __post_init__(self):
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")

    def pmf(self, n):
        return self.zeta**n * (1.0 - self.zeta)

    def survival(self, n):
        return self.zeta ** (n + 1)

    def mean(self):
        return self.zeta / (1.0 - self.zeta)

    def pgf(self, z):
        return (1.0 - self.zeta) / (1.0 - self.zeta * z)

    def sample(self, rng):
        # numpy's geometric counts trials until the first success (support >= 1)
        return int(rng.geometric(1.0 - self.zeta)) - 1

    def pmf_tail_index(self, tail_tol):
        # survival(K) = zeta^(K+1) <= tol
        k = math.log(tail_tol) / math.log(self.zeta) - 1.0
        return max(0, math.ceil(k))


@dataclass(frozen=True)
class NegativeBinomial(StoppingNumber):
    """P[N = n] = C(n+r-1, r-1) zeta^n (1-zeta)^r: stop at the r-th signal."""

    r: int
    zeta: float

    kind = "negative_binomial"

    def __post_init__(self):
        if self.r < 1 or self.r != int(self.r):
            raise ValueError("r must be an integer >= 1")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")

    def pmf(self, n):
        if n < 0:
            return 0.0
        # lgamma form stays finite far into the tail
        log_p = (
            math.lgamma(n + self.r)
            - math.lgamma(self.r)
            - math.lgamma(n + 1)
            + n * math.log(self.zeta)
            + self.r * math.log1p(-self.zeta)
        )
        return math.exp(log_p)

    def survival(self, n):
        if n < 0:
            return 1.0
        acc = 0.0
        for m in range(n + 1):
            acc += self.pmf(m)
        return max(0.0, 1.0 - acc)

    def mean(self):
        return self.r * self.zeta / (1.0 - self.zeta)

    def pgf(self, z):
        return ((1.0 - self.zeta) / (1.0 - self.zeta * z)) ** self.r

    def sample(self, rng):
        # failures before the r-th success, failure probability zeta
        return int(rng.negative_binomial(self.r, 1.0 - self.zeta))


@dataclass(frozen=True)
class CustomPmf(StoppingNumber):
    """Finite support pmf given as ((n, P[N=n]), ...); must sum to 1."""

    entries: tuple

    kind = "custom"

    def __post_init__(self):
        entries = tuple(sorted((int(n), float(p)) for n, p in self.entries))
        object.__setattr__(self, "entries", entries)
        if any(n < 0 or p < 0 for n, p in entries):
            raise ValueError("pmf entries need n >= 0 and P[N=n] >= 0")
        ns = [n for n, _ in entries]
        if len(set(ns)) != len(ns):
            raise ValueError("duplicate support point")
        total = sum(p for _, p in entries)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {total!r}, expected 1 (declared tail mass 0)")

    def pmf(self, n):
        return dict(self.entries).get(n, 0.0)

    def survival(self, n):
        return sum(p for m, p in self.entries if m > n)

    def mean(self):
        return sum(n * p for n, p in self.entries)

    def pgf(self, z):
        return sum(p * z**n for n, p in self.entries)

    def sample(self, rng):
        ns = [n for n, _ in self.entries]
        ps = [p for _, p in self.entries]
        total = sum(ps)
        return int(ns[rng.choice(len(ns), p=[p / total for p in ps])])

    def pmf_tail_index(self, tail_tol):
        return max(n for n, _ in self.entries)


@dataclass(frozen=True)
class Deadline(StoppingNumber):
    """Hard time constraint t: stops the iteration running at time t.

    Carries no pmf; only the engine's simulation paths consume it.
    """

    t: float

    kind = "deadline"

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("deadline t must be positive")

    def _unsupported(self):
        raise DeadlineNotSupported(
            "deadline stopping is path-dependent and has no iteration pmf"
        )

    def pmf(self, n):
        self._unsupported()

    def survival(self, n):
        self._unsupported()

    def mean(self):
        self._unsupported()

    def pgf(self, z):
        self._unsupported()

    def sample(self, rng):
        self._unsupported()
