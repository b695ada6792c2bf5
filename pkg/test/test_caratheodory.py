import pytest

import numpy as np

from freespec.caratheodory import (
  FreeSeries, MobiusSeed, TwoByTwoKind, WeightedShift,
  eval_free_series, extreme_toeplitz, is_nilpotent, mobius_coeffs,
  nilpotent_shift_family, rigidity_check, seed_for_mobius,
  toeplitz_from_coeffs, two_by_two_classify, univariate_series,
  word_product, word_residual,
)
from freespec.exceptions import NotNilpotentError, PreconditionError, ShapeError
from freespec.linalg import op_norm
from freespec.pencil import shift_matrix

def test_mobius_coeffs():
  assert np.allclose(mobius_coeffs(MobiusSeed(0), 3), [0, -1, 0, 0])
  assert np.allclose(mobius_coeffs(MobiusSeed(0.5), 2), [0.5, -0.75, -0.375])

  with pytest.raises(ValueError):
    mobius_coeffs(MobiusSeed(0.5), 0)

  with pytest.raises(ValueError):
    MobiusSeed(1.0)

def test_seed_for_mobius_matches_disc_map():
  b, theta, z = 0.4 - 0.2j, 0.9, 0.3 * np.exp(0.4j)
  coeffs = mobius_coeffs(seed_for_mobius(b, theta), 80)
  series = np.sum(coeffs * z ** np.arange(81))
  rotated = np.exp(1j * theta) * z
  assert series == pytest.approx((b + rotated) / (1 + np.conj(b) * rotated))

def test_two_by_two_classify():
  result = two_by_two_classify(0, 1)
  assert result.kind == TwoByTwoKind.NORM_ONE
  assert np.allclose(result.kernel_vector, [1, 0])

  result = two_by_two_classify(0.5, -0.75)
  assert result.kind == TwoByTwoKind.NORM_ONE
  assert result.theta == pytest.approx(0)
  M = np.array([[0.5, -0.75], [0, 0.5]])
  assert np.linalg.norm(M.conj().T @ result.kernel_vector) == pytest.approx(1)

  result = two_by_two_classify(0.5, 0.5)
  assert result.kind == TwoByTwoKind.STRICT_CONTRACTION
  assert result.slack == pytest.approx(0.25)
  assert result.kernel_vector is None

  assert two_by_two_classify(0.9, 0.5).kind == TwoByTwoKind.NORM_EXCEEDS_ONE

def test_weighted_shift():
  shift = WeightedShift.unweighted(3)
  assert shift.order == 3
  assert np.allclose(shift.matrix(), np.eye(4, k=1))

  with pytest.raises(ValueError):
    WeightedShift((0.5, 1))
  with pytest.raises(ShapeError):
    WeightedShift(())

def test_toeplitz_from_coeffs():
  shift = WeightedShift((1, 0.5))
  T = toeplitz_from_coeffs([1, 2, 3], shift)
  assert np.allclose(T, [[1, 2, 1.5], [0, 1, 1], [0, 0, 1]])

  with pytest.raises(ShapeError):
    toeplitz_from_coeffs([1, 2], shift)

def test_extreme_toeplitz_has_norm_one():
  for c0 in (0, 0.5, 0.3 + 0.6j):
    for n in (1, 2, 4):
      T = extreme_toeplitz(MobiusSeed(c0, 0.7), WeightedShift.unweighted(n))
      assert op_norm(T) == pytest.approx(1, abs=1e-10)

  with pytest.raises(ValueError):
    extreme_toeplitz(MobiusSeed(0.5), WeightedShift((1, 0)))
  with pytest.raises(ValueError):
    extreme_toeplitz(MobiusSeed(0.5), WeightedShift((1, 2)))

def _random_seed(rng):
  c0 = 0.95 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
  return MobiusSeed(c0, rng.uniform(0, 2 * np.pi))

def _random_weights(rng, n):
  moduli = rng.uniform(0.1, 1, size=n - 1)
  moduli[rng.uniform(size=n - 1) < 0.25] = 1
  phases = np.exp(2j * np.pi * rng.uniform(size=n - 1))
  return (1,) + tuple(moduli * phases)

def test_extreme_toeplitz_on_weighted_shifts():
  rng = np.random.default_rng(3)
  for _ in range(200):
    n = int(rng.integers(1, 7))
    shift = WeightedShift(_random_weights(rng, n))
    T = extreme_toeplitz(_random_seed(rng), shift)
    assert T.shape == (n + 1, n + 1)
    assert op_norm(T) == pytest.approx(1, abs=1e-9)

def test_extension_is_unique():
  rng = np.random.default_rng(4)
  for _ in range(20):
    seed = MobiusSeed(0.6 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()), rng.uniform(0, 2 * np.pi))
    for n in (2, 3, 4):
      shift = WeightedShift.unweighted(n)
      coeffs = mobius_coeffs(seed, n)
      for j in range(2, n + 1):
        shifted = coeffs.copy()
        shifted[j] += 1e-2
        assert op_norm(toeplitz_from_coeffs(shifted, shift)) > 1 + 1e-6

def test_corner_is_rigid():
  for c0 in (0, 0.5, -0.2 + 0.4j):
    T = extreme_toeplitz(MobiusSeed(c0), WeightedShift.unweighted(3))
    for modulus in (1e-3, 1e-2, 1e-1):
      for phase in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        assert rigidity_check(T, modulus * np.exp(1j * phase)) > 1e-12

  with pytest.raises(ShapeError):
    rigidity_check(np.eye(2), 0.1)

def test_corner_excess_grows_along_ray():
  T = extreme_toeplitz(MobiusSeed(0.3 - 0.2j), WeightedShift.unweighted(2))
  direction = np.exp(0.7j)
  excess = [ rigidity_check(T, t * direction) for t in (0.05, 0.2, 0.5, 1.0) ]
  assert np.all(np.diff(excess) > 0)

def test_free_series_validation():
  with pytest.raises(ShapeError):
    FreeSeries(2, { (3,): 1 })
  with pytest.raises(ShapeError):
    FreeSeries(2, { (1, 1, 2): 1 }, max_degree=2)
  with pytest.raises(ShapeError):
    FreeSeries(0)

  series = FreeSeries(2, { (): 1, (1, 2): 0.5, (2,): 0 })
  assert len(series) == 2
  assert series.max_degree == 2
  assert series.coeff((1, 2)) == 0.5
  assert series.coeff((2, 1)) == 0

def test_eval_free_series_on_nilpotent():
  S = shift_matrix(2)
  T = np.stack([ S, np.zeros((2, 2)) ])
  series = univariate_series([1, 2, 3], 1, 2)
  assert np.allclose(eval_free_series(series, T), np.eye(2) + 2 * S)

  with pytest.raises(NotNilpotentError):
    eval_free_series(series, np.stack([ 0.5 * np.eye(2), np.zeros((2, 2)) ]))

  value = eval_free_series(series, np.stack([ 0.5 * np.eye(2), np.zeros((2, 2)) ]), strict=False)
  assert np.allclose(value, (1 + 1 + 0.75) * np.eye(2))

def test_word_residual():
  S = shift_matrix(3)
  T = np.stack([ S, S ])
  assert word_residual(T, 1) == pytest.approx(np.sqrt(2))
  assert not is_nilpotent(T, 2)
  assert is_nilpotent(T, 3)
  assert np.allclose(word_product(T, (1, 2)), S @ S)

def test_nilpotent_shift_family():
  T = nilpotent_shift_family([[1, 0.5], [0.3, 0.2]])
  assert T.shape == (2, 3, 3)
  assert word_product(T, (1, 2))[0, 2] == pytest.approx(0.2)
  assert word_product(T, (2, 1))[0, 2] == pytest.approx(0.15)
  assert is_nilpotent(T, 3)

  with pytest.raises(PreconditionError):
    nilpotent_shift_family([[1, 0.5], [0.3, 0.2]], k=2)
  with pytest.raises(ShapeError):
    nilpotent_shift_family([[1, 0.5]], k=2)
