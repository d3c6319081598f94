"""Haar-uniform random pure states with reproducible, splittable streams.

Each state is drawn by filling 2D standard normals, pairing them into D
complex amplitudes and normalizing by the Euclidean norm of the real vector.
That distribution is invariant under every unitary on C^D.

Reproducibility contract (frozen for 0.x):

* bit generator: ``numpy.random.Philox`` (counter based),
* stream key: ``SeedSequence(entropy=seed, spawn_key=(sample_index,))``,
  i.e. a hash of ``(seed, sample_index)``,
* normals: ``Generator.standard_normal`` (ziggurat), drawn state by state,
  2D values per state in the order ``re_1, im_1, re_2, im_2, ...``.

Amplitudes are held as ``complex128`` arrays, which numpy lays out as
interleaved real/imaginary float64 pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidDimensionError, InvalidEnsembleError

MAX_SEED = 2**64 - 1
NORM_TOL = 1e-12


def qubits_to_dim(n_qubits: int) -> int:
    if n_qubits < 1:
        raise InvalidDimensionError(f"need at least one qubit, got {n_qubits}")
    return 2**n_qubits


def make_stream(seed: int, sample_index: int) -> np.random.Generator:
    """Return the independent random stream for one Monte Carlo replicate."""
    if not 0 <= seed <= MAX_SEED:
        raise InvalidEnsembleError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if sample_index < 0:
        raise InvalidEnsembleError(f"sample_index must be >= 0, got {sample_index}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(sample_index,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A normalized pure state; ``amplitudes`` is a read-only complex vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2:
            raise InvalidDimensionError(f"state needs a 1-d amplitude vector of length >= 2, got shape {amps.shape}")
        norm2 = float(np.sum(amps.real**2 + amps.imag**2))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: sum |u_j|^2 = {norm2!r}")
        if amps.flags.writeable:
            amps = amps.copy()
            amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, dim: int, index: int) -> QuantumState:
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_unnormalized(cls, vector) -> QuantumState:
        v = np.asarray(vector, dtype=np.complex128)
        return cls(v / np.linalg.norm(v))


def _draw_normalized(dim: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        x = rng.standard_normal(2 * dim)
        r = np.sqrt(np.sum(x * x))
        # measure-zero event; redraw keeps the distribution intact
        if r > 0.0:
            break
    return (x / r).view(np.complex128)


def sample_state(dim: int, rng: np.random.Generator) -> QuantumState:
    """Draw one Haar-uniform state of dimension ``dim`` from ``rng``."""
    if dim < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {dim}")
    return QuantumState(_draw_normalized(dim, rng))


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    """M states of a common dimension, stored row-wise in one (M, D) array."""

    amplitudes: np.ndarray
    seed: int | None = None
    sample_index: int | None = None

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2:
            raise InvalidEnsembleError("ensemble amplitudes must be a 2-d (M, D) array")
        if amps.shape[0] < 2:
            raise InvalidEnsembleError(f"ensemble needs M >= 2 states, got {amps.shape[0]}")
        if amps.shape[1] < 2:
            raise InvalidDimensionError(f"dimension must be >= 2, got {amps.shape[1]}")
        norms = np.sum(amps.real**2 + amps.imag**2, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise InvalidEnsembleError("every ensemble member must be normalized")
        if amps.flags.writeable:
            amps = amps.copy()
            amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_states(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[1]

    def __len__(self) -> int:
        return self.n_states

    def __getitem__(self, n: int) -> QuantumState:
        return QuantumState(self.amplitudes[n])

    def __iter__(self) -> Iterator[QuantumState]:
        for n in range(self.n_states):
            yield self[n]

    @property
    def states(self) -> list[QuantumState]:
        return list(self)

    @classmethod
    def from_states(cls, states, seed=None, sample_index=None) -> StateEnsemble:
        states = list(states)
        dims = {s.dim for s in states}
        if len(dims) > 1:
            raise InvalidEnsembleError(f"states have mixed dimensions {sorted(dims)}")
        if len(states) < 2:
            raise InvalidEnsembleError(f"ensemble needs M >= 2 states, got {len(states)}")
        return cls(np.stack([s.amplitudes for s in states]), seed, sample_index)

    def dump_csv(self, path) -> None:
        """Write amplitudes as ``n,j,re,im`` rows (debug / cross-checking)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "j", "re", "im"])
            for n, row in enumerate(self.amplitudes):
                for j, u in enumerate(row):
                    w.writerow([n, j, f"{u.real:.17g}", f"{u.imag:.17g}"])


def sample_ensemble(M: int, dim: int, seed: int, sample_index: int = 0) -> StateEnsemble:
    """Draw M independent Haar states for replicate ``sample_index``.

    Identical arguments give bit-identical amplitudes; different
    ``sample_index`` values use statistically independent streams.
    """
    if M < 2:
        raise InvalidEnsembleError(f"ensemble needs M >= 2 states, got {M}")
    if dim < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {dim}")
    rng = make_stream(seed, sample_index)
    amps = np.empty((M, dim), dtype=np.complex128)
    for n in range(M):
        amps[n] = _draw_normalized(dim, rng)
    return StateEnsemble(amps, seed, sample_index)
