import pytest

import numpy as np

from freespec.exceptions import NonConvergenceError, ShapeError
from freespec.linalg import op_norm, unitary_defect
from freespec.pencil import MembershipVerdict, chain_pencil, scalar_point
from freespec.sampling import (
  MIN_COUPLING, ZERO_COUPLING,
  default_rng, neighbor_couplings, random_block, random_contraction,
  random_pencil, random_unitary, sample_interior, sample_interiors,
  scale_into_interior, top_singular_vectors,
)

def test_seeds_replay():
  a = random_contraction(3, 7)
  b = random_contraction(3, 7)
  assert np.all(a == b)

  rng = default_rng(1)
  assert default_rng(rng) is rng

def test_random_unitary():
  rng = default_rng(0)
  for n in (1, 2, 4):
    assert unitary_defect(random_unitary(n, rng)) < 1e-10

  with pytest.raises(ShapeError):
    random_unitary(0)

def test_random_contraction_norm():
  assert op_norm(random_contraction(4, 0, norm=0.3)) == pytest.approx(0.3)

def test_random_block():
  rng = default_rng(3)
  C = random_block(3, 2, rng)
  assert op_norm(C) == pytest.approx(1)
  s = np.linalg.svd(C, compute_uv=False)
  assert s[1] <= 0.9

  u, v = top_singular_vectors(C)
  assert np.allclose(C @ v, u)

  avoid = np.array([1, 0, 0], dtype=np.complex128)
  C = random_block(3, 3, rng, avoid_range=avoid)
  assert np.allclose(avoid.conj() @ C, 0)

  with pytest.raises(ShapeError):
    random_block(1, 2, rng, avoid_range=np.array([1.0]))

def test_random_pencil_couplings_are_resolvable():
  rng = default_rng(9)
  for _ in range(30):
    p = random_pencil(3, rng, min_coupling=MIN_COUPLING)
    assert len(p.dims) == 4
    for C in p.blocks:
      assert op_norm(C) == pytest.approx(1)
    for j in range(1, p.g):
      for c in neighbor_couplings(p.block(j), p.block(j+1)):
        assert c < ZERO_COUPLING or c >= MIN_COUPLING

  p = random_pencil(2, rng, dims=[1, 2, 1])
  assert p.dims == (1, 2, 1)

  with pytest.raises(ShapeError):
    random_pencil(2, rng, dims=[1, 1])

def test_sample_interior():
  p = chain_pencil()
  for X in sample_interiors(p, 6, [1, 2, 3], rng=4):
    assert p.membership(X).verdict == MembershipVerdict.INTERIOR

  X = sample_interior(p, 2, 5)
  assert X.shape == (2, 2, 2)

def test_scale_into_interior():
  p = chain_pencil()
  X = scale_into_interior(p, scalar_point([3, 3]))
  assert np.allclose(X[:,0,0], [0.375, 0.375])

  with pytest.raises(NonConvergenceError):
    scale_into_interior(p, scalar_point([3, 3]), max_halvings=2)
