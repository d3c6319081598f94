import numpy as np
import pytest
from scipy import stats

from hperc.errors import InvalidDimensionError, InvalidEnsembleError
from hperc.metric import HALF_PI, fubini_study_distance
from hperc.states import QuantumState, StateEnsemble, make_stream, qubits_to_dim, sample_ensemble, sample_state


def brute_force_haar(dim, rng):
    """Independent reference sampler: complex Gaussian vector, normalized."""
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def test_sample_state_normalized_dim2():
    s = sample_state(2, make_stream(3, 0))
    assert s.dim == 2
    assert abs(np.sum(np.abs(s.amplitudes) ** 2) - 1) < 1e-12


def test_sample_state_deterministic_from_same_position():
    a = sample_state(4, make_stream(11, 5))
    b = sample_state(4, make_stream(11, 5))
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)


def test_sample_state_rejects_small_dim():
    with pytest.raises(InvalidDimensionError):
        sample_state(1, make_stream(0, 0))


def test_resamples_degenerate_draw():
    class ZerosThenNormal:
        def __init__(self):
            self.calls = 0
            self.rng = np.random.default_rng(0)

        def standard_normal(self, n):
            self.calls += 1
            return np.zeros(n) if self.calls == 1 else self.rng.standard_normal(n)

    fake = ZerosThenNormal()
    s = sample_state(3, fake)
    assert fake.calls == 2
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12


def test_mean_first_population_dim2():
    # exact mean is 1/D by symmetry; sd of |u_1|^2 ~ U(0,1) is 0.2887
    rng = make_stream(2024, 0)
    n = 100_000
    vals = np.array([abs(sample_state(2, rng).amplitudes[0]) ** 2 for _ in range(n)])
    assert abs(vals.mean() - 0.5) < 3 * 0.2887 / np.sqrt(n)
    # the independent sampler agrees with the same exact mean
    ref = np.random.default_rng(1)
    ref_vals = np.array([abs(brute_force_haar(2, ref)[0]) ** 2 for _ in range(20_000)])
    assert abs(ref_vals.mean() - 0.5) < 3 * 0.2887 / np.sqrt(20_000)


@pytest.mark.parametrize("dim", [2, 8, 64])
def test_first_population_is_beta_1_dm1(dim):
    ens = sample_ensemble(10_000, dim, 99, 0)
    p = np.abs(ens.amplitudes[:, 0]) ** 2
    # 1% critical value of the one-sample KS statistic
    crit = stats.kstwo.ppf(0.99, p.size)
    assert stats.kstest(p, stats.beta(1, dim - 1).cdf).statistic < crit


def test_ensemble_reproducible_and_normalized():
    a = sample_ensemble(3, 2, 1, 0)
    b = sample_ensemble(3, 2, 1, 0)
    assert a.n_states == 3 and a.dim == 2
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    np.testing.assert_allclose(np.sum(np.abs(a.amplitudes) ** 2, axis=1), 1, atol=1e-12)
    assert a.seed == 1 and a.sample_index == 0


def test_ensemble_equals_sequential_state_draws():
    rng = make_stream(5, 3)
    seq = np.stack([sample_state(16, rng).amplitudes for _ in range(4)])
    np.testing.assert_array_equal(sample_ensemble(4, 16, 5, 3).amplitudes, seq)


def test_ensemble_errors():
    with pytest.raises(InvalidEnsembleError):
        sample_ensemble(1, 4, 0, 0)
    with pytest.raises(InvalidDimensionError):
        sample_ensemble(3, 1, 0, 0)
    with pytest.raises(InvalidEnsembleError):
        sample_ensemble(3, 4, -1, 0)
    with pytest.raises(InvalidEnsembleError):
        sample_ensemble(3, 4, 0, -2)


def test_ensemble_is_immutable():
    ens = sample_ensemble(3, 4, 0, 0)
    with pytest.raises(ValueError):
        ens.amplitudes[0, 0] = 1


def test_high_dim_pair_nearly_orthogonal():
    ens = sample_ensemble(2, 1024, 7, 0)
    d = fubini_study_distance(ens[0], ens[1])
    assert HALF_PI - 0.15 <= d <= HALF_PI
    # brute-force view of the distance distribution at D=1024
    ref = np.random.default_rng(0)
    ds = [np.arccos(abs(np.vdot(brute_force_haar(1024, ref), brute_force_haar(1024, ref)))) for _ in range(2000)]
    assert np.mean(np.array(ds) >= HALF_PI - 0.15) > 0.999


def test_stream_splitting_uncorrelated():
    M, D = 50, 64
    a = sample_ensemble(M, D, 8, 0).amplitudes.real.ravel()
    b = sample_ensemble(M, D, 8, 1).amplitudes.real.ravel()
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) < 5 / np.sqrt(2 * D * M)
    assert not np.array_equal(a, b)


def test_seed_full_u64_range():
    ens = sample_ensemble(2, 2, 2**64 - 1, 0)
    assert ens.n_states == 2


def test_quantum_state_validation():
    with pytest.raises(ValueError):
        QuantumState(np.array([1.0, 1.0]))
    with pytest.raises(InvalidDimensionError):
        QuantumState(np.array([1.0]))
    s = QuantumState.from_unnormalized([1, 1j])
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-15


def test_from_states_mixed_dims():
    with pytest.raises(InvalidEnsembleError):
        StateEnsemble.from_states([QuantumState.basis(2, 0), QuantumState.basis(4, 0)])


def test_qubits_to_dim():
    assert qubits_to_dim(1) == 2
    assert qubits_to_dim(10) == 1024
    with pytest.raises(InvalidDimensionError):
        qubits_to_dim(0)


def test_dump_csv(tmp_path):
    ens = sample_ensemble(2, 2, 0, 0)
    path = tmp_path / "amps.csv"
    ens.dump_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,j,re,im"
    assert len(lines) == 1 + 4
    n, j, re, im = lines[1].split(",")
    assert complex(float(re), float(im)) == ens.amplitudes[0, 0]
