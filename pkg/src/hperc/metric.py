"""Fubini-Study distances between pure states.

All overlaps go through :func:`_overlap_abs`, which reduces the elementwise
products with ``numpy.sum``. Rows of a C-contiguous (M, D) array reduce the
same way as a lone vector. On contiguous data numpy uses pairwise (tree)
summation, so rounding error grows like O(log D) rather than O(D), and the
single-pair and matrix code paths produce bit-identical values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, InvalidPairError
from .states import QuantumState, StateEnsemble

HALF_PI = np.pi / 2


def _norm2(a: np.ndarray) -> np.ndarray:
    return np.sum(a.real * a.real + a.imag * a.imag, axis=-1)


def _overlap_abs(a: np.ndarray, b: np.ndarray, na=None, nb=None) -> np.ndarray:
    """|<a|b>| / (|a| |b|) along the last axis; ``a`` broadcasts against ``b``.

    Written in real arithmetic so that swapping the arguments only negates
    the imaginary part exactly. Dividing by the computed norms makes the
    overlap of a state with itself exactly 1.
    """
    ar, ai, br, bi = a.real, a.imag, b.real, b.imag
    re = np.sum(ar * br + ai * bi, axis=-1)
    im = np.sum(ar * bi - ai * br, axis=-1)
    na = _norm2(a) if na is None else na
    nb = _norm2(b) if nb is None else nb
    return np.hypot(re, im) / np.sqrt(na * nb)


def _check_pair(a: QuantumState, b: QuantumState) -> None:
    if a.dim != b.dim:
        raise InvalidPairError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _distance_from_overlap(ov):
    return np.arccos(np.clip(ov, 0.0, 1.0))


def fubini_study_distance(a: QuantumState, b: QuantumState) -> float:
    """arccos |<a|b>|, in [0, pi/2]."""
    _check_pair(a, b)
    return float(_distance_from_overlap(_overlap_abs(a.amplitudes, b.amplitudes)))


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """|<a|b>|^2, clamped to [0, 1]."""
    _check_pair(a, b)
    ov = min(float(_overlap_abs(a.amplitudes, b.amplitudes)), 1.0)
    return ov * ov


def pair_fidelities(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Row-wise fidelities of two (K, D) amplitude arrays."""
    left = np.asarray(left)
    right = np.asarray(right)
    if left.shape != right.shape:
        raise InvalidPairError(f"shape mismatch: {left.shape} vs {right.shape}")
    ov = np.minimum(_overlap_abs(left, right), 1.0)
    return ov * ov


def packed_index(m: int, n: int, size: int) -> int:
    """Position of pair (m, n), m != n, in the packed upper triangle."""
    if m == n:
        raise InvalidArgumentError("diagonal entries are not stored")
    if m > n:
        m, n = n, m
    return m * size - m * (m + 1) // 2 + (n - m - 1)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric M x M distances with zero diagonal, stored as the packed
    upper triangle in row-major order (pairs (0,1), (0,2), ..., (M-2,M-1))."""

    size: int
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if self.size < 2:
            raise InvalidArgumentError(f"distance matrix needs size >= 2, got {self.size}")
        if e.shape != (self.size * (self.size - 1) // 2,):
            raise InvalidArgumentError(
                f"expected {self.size * (self.size - 1) // 2} packed entries, got shape {e.shape}"
            )
        if np.any(np.isnan(e)) or np.any(e < 0.0) or np.any(e > HALF_PI):
            raise InvalidArgumentError("distances must lie in [0, pi/2]")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_square(cls, square) -> DistanceMatrix:
        sq = np.asarray(square, dtype=np.float64)
        iu = np.triu_indices(sq.shape[0], k=1)
        return cls(sq.shape[0], sq[iu])

    @cached_property
    def pair_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of each packed entry."""
        return np.triu_indices(self.size, k=1)

    @cached_property
    def square(self) -> np.ndarray:
        sq = np.zeros((self.size, self.size))
        m, n = self.pair_indices
        sq[m, n] = self.entries
        sq[n, m] = self.entries
        sq.flags.writeable = False
        return sq

    def __getitem__(self, mn: tuple[int, int]) -> float:
        m, n = mn
        if m == n:
            return 0.0
        return float(self.entries[packed_index(m, n, self.size)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "n", "d"])
            for (m, n), d in zip(zip(*self.pair_indices), self.entries):
                w.writerow([int(m), int(n), f"{d:.17g}"])

    @classmethod
    def from_csv(cls, path) -> DistanceMatrix:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        size = 1 + max(max(int(r["m"]), int(r["n"])) for r in rows)
        e = np.empty(size * (size - 1) // 2)
        for r in rows:
            e[packed_index(int(r["m"]), int(r["n"]), size)] = float(r["d"])
        return cls(size, e)


def distance_matrix(ensemble: StateEnsemble) -> DistanceMatrix:
    """All M(M-1)/2 pairwise Fubini-Study distances of an ensemble."""
    X = ensemble.amplitudes
    M = X.shape[0]
    norms = _norm2(X)
    out = np.empty(M * (M - 1) // 2)
    k = 0
    for m in range(M - 1):
        rest = M - m - 1
        ov = _overlap_abs(X[m], X[m + 1 :], norms[m], norms[m + 1 :])
        out[k : k + rest] = _distance_from_overlap(ov)
        k += rest
    return DistanceMatrix(M, out)
