"""Concentration of the fidelity between two independent Haar states.

For independent Haar states in dimension D the fidelity F = |<psi|psi'>|^2
has mean 1/D. The closed-form expression

    4 exp[-(D/4) (D eps / (1 + D eps))^2]

is offered as an upper bound on P(|F - 1/D| >= eps). It is assembled from an
upper-tail and a lower-tail piece, each of which trades two chi-square tail
bounds against each other through a free parameter eta;
:func:`bound_components` evaluates those pieces.

F is exactly Beta(1, D - 1), and :func:`exact_tail` gives the true tail.
For D eps of order one the true tail stays near exp(-1 - D eps) while the
expression above decays like exp(-D), so the expression is not a valid bound
there. :func:`empirical_tail` reports both for comparison.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidArgumentError, InvalidDimensionError
from .metric import pair_fidelities
from .states import sample_ensemble

MIN_PAIRS = 1000
CI_LEVEL = 0.99


def _check(dim: int, epsilon: float) -> None:
    if dim < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {dim}")
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon!r}")


def analytic_bound(dim: int, epsilon: float) -> float:
    """4 exp[-(D/4) (D eps/(1 + D eps))^2]; exceeds 1 (vacuous) for small eps."""
    _check(dim, epsilon)
    de = dim * epsilon
    return 4.0 * math.exp(-dim / 4.0 * (de / (1.0 + de)) ** 2)


def lower_bound_plb(dim: int) -> float:
    """1 - 4 exp(-D/16), offered as a lower bound on P(|F - 1/D| < 1/D).

    The true probability tends to 1 - exp(-2); compare with ``1 - exact_tail(D, 1/D)``.
    """
    return 1.0 - analytic_bound(dim, 1.0 / dim)


def exact_tail(dim: int, epsilon: float) -> float:
    """Exact P(|F - 1/D| >= eps) for independent Haar pairs.

    F follows Beta(1, D - 1), whose survival function is (1 - x)^(D - 1).
    """
    _check(dim, epsilon)
    hi = 1.0 / dim + epsilon
    lo = 1.0 / dim - epsilon
    upper = (1.0 - hi) ** (dim - 1) if hi < 1.0 else 0.0
    lower = -math.expm1((dim - 1) * math.log1p(-lo)) if lo >= 0.0 else 0.0
    return upper + lower


def chi_square_tail(n: int, t: float) -> float:
    """Bound 2 exp(-n t^2 / 8) on P(|mean of n squared std normals - 1| >= t)."""
    if n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    if not 0.0 < t < 1.0:
        raise InvalidArgumentError(f"t must lie in (0, 1), got {t!r}")
    return 2.0 * math.exp(-n * t * t / 8.0)


@dataclass(frozen=True)
class BoundComponents:
    """Upper (``plus``) and lower (``minus``) tail pieces of the bound.

    ``x_*_max`` / ``y_*_max`` are the suprema of the two exponents over the
    admissible eta range; ``*_bound`` are the resulting tail bounds.
    """

    dim: int
    epsilon: float
    p_plus_bound: float
    p_minus_bound: float
    x_plus_max: float
    y_plus_max: float
    x_minus_max: float
    y_minus_max: float
    x_plus_bound: float
    x_minus_bound: float
    y_minus_bound: float
    eta_plus_range: tuple[float, float]
    eta_minus_range: tuple[float, float]
    lower_tail_empty: bool


def eta_plus_range(dim: int, epsilon: float) -> tuple[float, float]:
    de = dim * epsilon
    return 1.0 / (1.0 + de), min(1.0, 2.0 / (1.0 + de))


def eta_minus_range(dim: int, epsilon: float) -> tuple[float, float]:
    de = dim * epsilon
    return 1.0, (min(2.0, 1.0 / (1.0 - de)) if de < 1.0 else 2.0)


def x_plus(eta, dim: int, epsilon: float):
    return ((1.0 + dim * epsilon) * eta - 1.0) ** 2


def y_plus(eta, dim: int, epsilon: float):
    return dim * (1.0 - eta) ** 2


def x_minus(eta, dim: int, epsilon: float):
    return (1.0 - eta * (1.0 - dim * epsilon)) ** 2


def y_minus(eta, dim: int, epsilon: float):
    return dim * (eta - 1.0) ** 2


def bound_components(dim: int, epsilon: float) -> BoundComponents:
    _check(dim, epsilon)
    D = float(dim)
    de = D * epsilon

    # upper tail: X+ grows from 0 to the right end of the eta range,
    # Y+ is largest at the left end
    x_p = de * de if de <= 1.0 else 1.0
    y_p = D * (de / (1.0 + de)) ** 2

    # lower tail: X- is largest at eta = 1 while the range is non-degenerate,
    # Y- at the right end of the eta range
    if de <= 1.0:
        x_m = de * de
    else:
        x_m = (2.0 * de - 1.0) ** 2
    if de < 0.5:
        y_m = D * (de / (1.0 - de)) ** 2
    else:
        y_m = D

    p_plus = 2.0 * math.exp(-y_p / 4.0)
    # relaxing min{1, (De/(1-De))^2} to (De/(1+De))^2 makes both tails equal
    p_minus = 2.0 * math.exp(-D / 4.0 * (de / (1.0 + de)) ** 2)
    return BoundComponents(
        dim=dim,
        epsilon=float(epsilon),
        p_plus_bound=p_plus,
        p_minus_bound=p_minus,
        x_plus_max=x_p,
        y_plus_max=y_p,
        x_minus_max=x_m,
        y_minus_max=y_m,
        x_plus_bound=2.0 * math.exp(-x_p / 4.0),
        x_minus_bound=2.0 * math.exp(-x_m / 4.0),
        y_minus_bound=2.0 * math.exp(-y_m / 4.0),
        eta_plus_range=eta_plus_range(dim, epsilon),
        eta_minus_range=eta_minus_range(dim, epsilon),
        lower_tail_empty=de >= 1.0,
    )


def clopper_pearson(k: int, n: int, level: float = CI_LEVEL) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class ConcentrationBoundReport:
    dim: int
    epsilon: float
    analytic_bound: float
    lower_bound_plb: float
    exact_tail: float
    empirical_tail: float
    n_samples: int
    ci_halfwidth: float
    ci_low: float
    ci_high: float
    tail_count: int
    mean_fidelity: float
    seed: int


def _fidelity_block(args) -> np.ndarray:
    dim, seed, start, stop = args
    left = np.empty((stop - start, dim), dtype=np.complex128)
    right = np.empty_like(left)
    for i, k in enumerate(range(start, stop)):
        amps = sample_ensemble(2, dim, seed, k).amplitudes
        left[i], right[i] = amps[0], amps[1]
    return pair_fidelities(left, right)


def sample_fidelities(dim: int, n_pairs: int, seed: int, workers: int = 1, block: int = 4096) -> np.ndarray:
    """Fidelities of ``n_pairs`` independent Haar pairs; pair k uses stream (seed, k)."""
    blocks = [(dim, seed, s, min(s + block, n_pairs)) for s in range(0, n_pairs, block)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_fidelity_block, blocks))
    else:
        parts = [_fidelity_block(b) for b in blocks]
    return np.concatenate(parts)


def empirical_tail(
    dim: int, epsilon: float, n_pairs: int, seed: int, workers: int = 1, fidelities=None
) -> ConcentrationBoundReport:
    """Monte Carlo estimate of P(|F - 1/D| >= eps) next to the analytic and exact values.

    ``fidelities`` may carry precomputed samples (e.g. shared across several
    epsilons); otherwise they are drawn from (seed, 0..n_pairs-1).
    """
    _check(dim, epsilon)
    if n_pairs < MIN_PAIRS:
        raise InvalidArgumentError(f"need at least {MIN_PAIRS} pairs, got {n_pairs}")
    if fidelities is None:
        fidelities = sample_fidelities(dim, n_pairs, seed, workers)
    f = np.asarray(fidelities)
    if f.size != n_pairs:
        raise InvalidArgumentError(f"expected {n_pairs} fidelities, got {f.size}")
    k = int(np.count_nonzero(np.abs(f - 1.0 / dim) >= epsilon))
    p = k / n_pairs
    lo, hi = clopper_pearson(k, n_pairs)
    return ConcentrationBoundReport(
        dim=dim,
        epsilon=float(epsilon),
        analytic_bound=analytic_bound(dim, epsilon),
        lower_bound_plb=lower_bound_plb(dim),
        exact_tail=exact_tail(dim, epsilon),
        empirical_tail=p,
        n_samples=n_pairs,
        ci_halfwidth=max(p - lo, hi - p),
        ci_low=lo,
        ci_high=hi,
        tail_count=k,
        mean_fidelity=float(np.mean(f)),
        seed=seed,
    )
