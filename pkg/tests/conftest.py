"""Shared fixtures: one small menu exercised from every angle.

The workhorse system is the three-alternative menu (a, b, c) with strict
utilities u = (4, 2, 1), explored uniformly (probability 1/2 on each of the
two non-incumbents). Its kernel is exactly the symmetric drift-diffusion
tandem with lam = beta = 1 and nu = (ln 4, ln 2, 0), so closed forms,
spectral routes, samplers, and representations can all be cross-checked on
the same object.
"""

import math

import numpy as np
import pytest

from nma import (
    AlgorithmSpec,
    BinaryChoiceKernel,
    DdmParams,
    Tandem,
    build_stochastic_matrix,
    ddm_tandem,
    logit_kernel,
    reconstruct_kernel,
)
from nma.kernels import ValueRepresentation

MENU = ("a", "b", "c")
LN4, LN2 = math.log(4.0), math.log(2.0)

# u = (4, 2, 1) kernel with exploration 1/2 off-diagonal: transition columns
M3_COLUMNS = [
    [11 / 15, 1 / 6, 1 / 10],  # from a
    [1 / 3, 1 / 2, 1 / 6],  # from b
    [2 / 5, 1 / 3, 4 / 15],  # from c
]
PI_421 = np.array([4 / 7, 2 / 7, 1 / 7])

# exact outcomes for the spec above with mu uniform (frozen from an
# independent dense-linear-algebra computation)
P_GEOM_09 = np.array([0.5364050056882821, 0.2974971558589305, 0.16609783845278722])
TAU_GEOM_09 = 4.176060517248984
P_NEGBIN_3_07 = np.array([0.5561148109504057, 0.2927545110225511, 0.15113067802704291])
TAU_NEGBIN_3_07 = 3.248898419529818
DEADLINE_LIMIT = np.array([0.5629629629629629, 0.2962962962962963, 0.14074074074074072])

# symmetric-DDM response times on that menu: tau = (lam^2/x) tanh(x/2), x = gap
TAU_LN2 = 0.4808983469629877  # gap ln 2, also 1/(3 ln 2)
TAU_LN4 = 0.4328085122666891  # gap ln 4
TAUBAR_421 = np.array([0.45685342961483844, 0.48089834696298783, 0.45685342961483844])


@pytest.fixture
def u421_kernel():
    return logit_kernel({"a": LN4, "b": LN2, "c": 0.0})


@pytest.fixture
def half_q():
    """Uniform exploration over the two non-incumbents (zero diagonal)."""
    return build_stochastic_matrix([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])


@pytest.fixture
def uniform_q():
    """Uniform exploration including self-proposals."""
    return build_stochastic_matrix(np.full((3, 3), 1 / 3))


@pytest.fixture
def sym_ddm_params():
    return DdmParams({"a": LN4, "b": LN2, "c": 0.0}, 1.0, 1.0)


@pytest.fixture
def sym_ddm_tandem(sym_ddm_params):
    return ddm_tandem(sym_ddm_params)


@pytest.fixture
def u421_spec(sym_ddm_tandem, half_q):
    return AlgorithmSpec(
        menu=MENU, mu=np.full(3, 1 / 3), Q=half_q, tandem=sym_ddm_tandem
    )


@pytest.fixture
def two_level_kernel():
    # a and b each surely beat c; between themselves rho(a|b) = 2/3 unbiased
    rho = [[0.5, 2 / 3, 1.0], [1 / 3, 0.5, 1.0], [0.0, 0.0, 0.5]]
    return BinaryChoiceKernel(MENU, rho)


@pytest.fixture
def cyclic_kernel():
    # a beats b beats c beats a: dirac but intransitive
    rho = [[0.5, 1.0, 0.0], [0.0, 0.5, 1.0], [1.0, 0.0, 0.5]]
    return BinaryChoiceKernel(MENU, rho)


def random_transitive_kernel(rng, n, force_single_level=False):
    """Random transitive kernel: random w-levels, v values, symmetric s.

    Transitivity holds by construction (reconstruction from any value
    representation satisfies the product rule), so these are valid round-trip
    inputs without invoking the code under test.
    """
    menu = tuple(f"x{i}" for i in range(n))
    if force_single_level:
        labels = np.zeros(n, dtype=int)
    else:
        m = int(rng.integers(1, n + 1))
        labels = rng.integers(0, m, size=n)
    order = {lv: rank for rank, lv in enumerate(sorted(set(labels)))}
    w = {a: order[lv] + 1 for a, lv in zip(menu, labels)}
    v = {a: float(rng.uniform(-2.0, 2.0)) for a in menu}
    s = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if w[menu[i]] == w[menu[j]]:
                # keep both orientations of s * logistic strictly inside (0, 1)
                gap = abs(v[menu[i]] - v[menu[j]])
                hi = min(1.2, (1.0 + math.exp(-gap)) * 0.999)
                s[i, j] = s[j, i] = rng.uniform(0.3, hi)
    levels = []
    for lv in sorted(set(labels)):
        levels.append(tuple(a for a in menu if w[a] == order[lv] + 1))
    rep = ValueRepresentation(menu=menu, w=w, v=v, s=s, _levels=tuple(levels))
    return reconstruct_kernel(rep)


def random_positive_kernel(rng, n):
    """Single-level random transitive kernel: every comparison stochastic."""
    return random_transitive_kernel(rng, n, force_single_level=True)


def perturb_intransitive(rng, kernel):
    """Damage one stochastic entry of a positive kernel so the product rule
    fails by a relative margin far above every tolerance in use."""
    rho = kernel.rho.copy()
    n = kernel.order
    i, j = 0, 1
    delta = float(rng.uniform(0.08, 0.30))
    rho[i, j] = rho[i, j] * (1.0 - delta)
    return BinaryChoiceKernel(kernel.menu, rho, kernel.epsilon)


def total_variation(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
