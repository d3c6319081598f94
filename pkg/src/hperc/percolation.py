"""Critical connection threshold of maximal span clusters, and grid sweeps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clusters import ClusterPartition, MscReport, build_clusters, detect_msc
from .errors import InvalidArgumentError, NoCriticalThresholdError, ResourceLimitError
from .metric import HALF_PI, DistanceMatrix, distance_matrix
from .states import sample_ensemble

DEFAULT_TOL = 1e-4
DEFAULT_MEMORY_BUDGET = 4 * 2**30


def msc_report(dm: DistanceMatrix, delta_s: float, epsilon: float | None = None) -> tuple[ClusterPartition, MscReport]:
    partition = build_clusters(dm, delta_s)
    return partition, detect_msc(partition, delta_s if epsilon is None else epsilon)


def msc_indicator(dm: DistanceMatrix, delta_s: float, epsilon: float | None = None) -> bool:
    """Whether a maximal span cluster exists at threshold ``delta_s``.

    ``epsilon`` defaults to ``delta_s`` itself.
    """
    return msc_report(dm, delta_s, epsilon)[1].has_msc


@dataclass(frozen=True)
class CriticalThresholdResult:
    dim: int | None
    n_states: int
    seed: int | None
    sample_index: int | None
    critical_delta_s: float
    msc_witness: tuple[int, int]
    bisection_iterations: int
    tol: float
    epsilon: float | None = None

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_states": self.n_states,
            "seed": self.seed,
            "sample_index": self.sample_index,
            "critical_delta_s": self.critical_delta_s,
            "msc_witness": list(self.msc_witness),
            "bisection_iterations": self.bisection_iterations,
            "tol": self.tol,
            "epsilon": self.epsilon,
        }


def critical_threshold(
    dm: DistanceMatrix,
    tol: float = DEFAULT_TOL,
    epsilon: float | None = None,
    *,
    dim: int | None = None,
    seed: int | None = None,
    sample_index: int | None = None,
) -> CriticalThresholdResult:
    """Smallest threshold (within ``tol``) at which an MSC exists.

    Bisects [0, pi/2] on the monotone indicator. The returned value ``t``
    satisfies indicator(t) is True and indicator(t - tol) is False. With the
    default ``epsilon=None`` (epsilon tied to the threshold) the indicator is
    always true at pi/2; a fixed ``epsilon`` may leave no root, which raises
    :class:`NoCriticalThresholdError`.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol!r}")
    lo, hi = 0.0, HALF_PI
    _, rep_hi = msc_report(dm, hi, epsilon)
    if not rep_hi.has_msc:
        raise NoCriticalThresholdError(f"no maximal span cluster even at pi/2 with epsilon={epsilon!r}")
    iterations = 0
    _, rep_lo = msc_report(dm, lo, epsilon)
    if rep_lo.has_msc:
        hi, rep_hi = lo, rep_lo
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            iterations += 1
            _, rep = msc_report(dm, mid, epsilon)
            if rep.has_msc:
                hi, rep_hi = mid, rep
            else:
                lo = mid
    return CriticalThresholdResult(
        dim=dim,
        n_states=dm.size,
        seed=seed,
        sample_index=sample_index,
        critical_delta_s=float(hi),
        msc_witness=rep_hi.witness,
        bisection_iterations=iterations,
        tol=float(tol),
        epsilon=epsilon,
    )


def ensemble_critical_threshold(
    dim: int, n_states: int, seed: int, sample_index: int, tol: float = DEFAULT_TOL, epsilon: float | None = None
) -> CriticalThresholdResult:
    ens = sample_ensemble(n_states, dim, seed, sample_index)
    return critical_threshold(
        distance_matrix(ens), tol, epsilon, dim=dim, seed=seed, sample_index=sample_index
    )


@dataclass(frozen=True)
class SweepRecord:
    dim: int
    n_states: int
    n_samples: int
    mean_critical_delta_s: float
    std_error: float
    samples: tuple[float, ...] = field(default=(), repr=False)

    @classmethod
    def from_samples(cls, dim: int, n_states: int, values) -> SweepRecord:
        v = np.asarray(values, dtype=np.float64)
        se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
        return cls(dim, n_states, int(v.size), float(np.mean(v)), se, tuple(float(x) for x in v))


def estimate_memory(dim: int, n_states: int) -> int:
    """Rough peak bytes for one replicate: amplitudes, one product buffer,
    and the packed and square distance matrices."""
    return 2 * 16 * n_states * dim + 8 * n_states * n_states * 2


def check_budget(dims, state_counts, memory_budget: int, workers: int = 1) -> None:
    for dim in dims:
        for M in state_counts:
            need = estimate_memory(dim, M) * max(workers, 1)
            if need > memory_budget:
                raise ResourceLimitError(
                    f"D={dim}, M={M} needs ~{need} bytes with {workers} worker(s); "
                    f"memory budget is {memory_budget} bytes"
                )


def _sample_task(args) -> float:
    dim, M, seed, idx, tol, epsilon = args
    return ensemble_critical_threshold(dim, M, seed, idx, tol, epsilon).critical_delta_s


def default_workers() -> int:
    env = os.environ.get("HPERC_WORKERS")
    if env:
        n = int(env)
        if n < 1:
            raise InvalidArgumentError(f"HPERC_WORKERS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def run_sweep(
    dims,
    state_counts,
    n_samples: int,
    seed: int,
    tol: float = DEFAULT_TOL,
    *,
    epsilon: float | None = None,
    workers: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    skip=frozenset(),
    progress=None,
) -> list[SweepRecord]:
    """Critical thresholds over a (D, M) grid, ``n_samples`` replicates each.

    Replicate ``k`` of every grid point uses stream (seed, k). Records come
    back in grid order (dims outer, state counts inner) and do not depend on
    ``workers``. Grid points listed in ``skip`` as (D, M) are left out.
    """
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be >= 1, got {n_samples}")
    dims = [int(d) for d in dims]
    state_counts = [int(m) for m in state_counts]
    if not dims or not state_counts:
        raise InvalidArgumentError("dims and state_counts must be non-empty")
    if any(m < 2 for m in state_counts):
        raise InvalidArgumentError("every M must be >= 2")
    if any(d < 2 for d in dims):
        raise InvalidArgumentError("every D must be >= 2")
    check_budget(dims, state_counts, memory_budget, workers)

    points = [(d, m) for d in dims for m in state_counts if (d, m) not in skip]
    tasks = [(d, m, seed, k, tol, epsilon) for d, m in points for k in range(n_samples)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            values = list(ex.map(_sample_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        values = []
        for t in tasks:
            values.append(_sample_task(t))
            if progress is not None:
                progress(len(values), len(tasks))

    records = []
    for i, (d, m) in enumerate(points):
        chunk = values[i * n_samples : (i + 1) * n_samples]
        records.append(SweepRecord.from_samples(d, m, chunk))
    return records


def log_spaced_counts(m_min: int = 2, m_max: int = 200, n: int = 25) -> list[int]:
    """``n`` distinct integers, approximately log-spaced in [m_min, m_max].

    Rounded geometric points that collide at the low end are pushed up to
    the next free integer.
    """
    if n > m_max - m_min + 1:
        raise InvalidArgumentError(f"cannot place {n} distinct integers in [{m_min}, {m_max}]")
    if n == 1:
        return [m_min]
    out = [int(round(x)) for x in np.geomspace(m_min, m_max, n)]
    for i in range(1, n):
        out[i] = max(out[i], out[i - 1] + 1)
    for i in range(n - 1, -1, -1):
        out[i] = min(out[i], m_max - (n - 1 - i))
    return out
