"""
Seeded random generators for matrices, tuples and pencils.

Every function accepts `rng` as either an int seed or a
numpy Generator so that runs are replayable from a seed.
"""
from typing import List, Optional

import numpy as np
from scipy.stats import unitary_group

from .exceptions import NonConvergenceError, ShapeError
from .linalg import adjoint, op_norm
from .pencil import LinearPencil, MembershipVerdict, Pencil, build_pencil
from .settings import DEFAULT_TOL
from .types import ComplexMatrix, MatrixTuple

# a coupling this large is resolved by the eps-grid oracle at any grid eps
MIN_COUPLING = 0.25
ZERO_COUPLING = 1e-12
MAX_SECONDARY_SINGULAR_VALUE = 0.9

def default_rng(rng = None) -> np.random.Generator:
  if isinstance(rng, np.random.Generator):
    return rng
  return np.random.default_rng(rng)

def ginibre(rows:int, cols:int, rng = None) -> ComplexMatrix:
  rng = default_rng(rng)
  return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)

def random_unitary(n:int, rng = None) -> ComplexMatrix:
  """Haar distributed n x n unitary."""
  rng = default_rng(rng)
  if n < 1:
    raise ShapeError(f"Unitary size must be positive. Got: {n}")
  if n == 1:
    return np.exp(2j * np.pi * rng.uniform()) * np.ones((1,1), dtype=np.complex128)
  return unitary_group.rvs(n, random_state=rng).astype(np.complex128)

def random_phases(g:int, rng = None) -> np.ndarray:
  rng = default_rng(rng)
  return np.exp(2j * np.pi * rng.uniform(size=g))

def random_contraction(n:int, rng = None, norm:Optional[float] = None) -> ComplexMatrix:
  """Random n x n matrix with operator norm `norm` (uniform in [0,1) if None)."""
  rng = default_rng(rng)
  if norm is None:
    norm = rng.uniform()
  G = ginibre(n, n, rng)
  return G * (norm / op_norm(G))

def random_tuple(g:int, n:int, rng = None, norm:Optional[float] = None) -> MatrixTuple:
  rng = default_rng(rng)
  return np.stack([ random_contraction(n, rng, norm) for _ in range(g) ])

def random_scalar_point(g:int, rng = None, radius:float = 1.0) -> MatrixTuple:
  rng = default_rng(rng)
  r = radius * np.sqrt(rng.uniform(size=g))
  return (r * random_phases(g, rng)).reshape(g, 1, 1)

def scale_into_interior(
  p:LinearPencil, X, tol:float = DEFAULT_TOL, max_halvings:int = 60,
) -> MatrixTuple:
  """Halves X until it lies in the interior of the spectrahedron."""
  X = np.asarray(X, dtype=np.complex128)
  for _ in range(max_halvings):
    if p.membership(X, tol).verdict == MembershipVerdict.INTERIOR:
      return X
    X = X / 2
  raise NonConvergenceError(f"No interior point found after {max_halvings} halvings.")

def sample_interior(
  p:LinearPencil, n:int, rng = None,
  tol:float = DEFAULT_TOL, max_halvings:int = 60,
) -> MatrixTuple:
  """A random contraction tuple scaled by u in (0,1) and then into the interior."""
  rng = default_rng(rng)
  X = random_tuple(p.g, n, rng) * rng.uniform(0.05, 1)
  return scale_into_interior(p, X, tol, max_halvings)

def sample_interiors(p:LinearPencil, count:int, levels, rng = None, tol:float = DEFAULT_TOL) -> List[MatrixTuple]:
  rng = default_rng(rng)
  levels = list(levels)
  return [ sample_interior(p, levels[i % len(levels)], rng, tol) for i in range(count) ]

def _isometric_columns(rows:int, rank:int, rng, avoid:Optional[np.ndarray]) -> ComplexMatrix:
  G = ginibre(rows, rank, rng)
  if avoid is not None:
    G = G - np.outer(avoid, np.conj(avoid) @ G)
  Q, _ = np.linalg.qr(G)
  return Q[:, :rank]

def random_block(rows:int, cols:int, rng = None, avoid_range:Optional[np.ndarray] = None) -> ComplexMatrix:
  """
  Random rows x cols matrix of norm one with a simple top singular
  value; remaining singular values lie in [0, 0.9]. When avoid_range
  is given (a unit vector in C^rows) the range is orthogonal to it.
  """
  rng = default_rng(rng)
  rank = min(rows, cols)
  if avoid_range is not None:
    rank = min(rank, rows - 1)
  if rank < 1:
    raise ShapeError(f"A {rows}x{cols} block cannot avoid a vector of C^{rows}.")

  U = _isometric_columns(rows, rank, rng, avoid_range)
  V = _isometric_columns(cols, rank, rng, None)
  s = np.concatenate([ [1.0], rng.uniform(0, MAX_SECONDARY_SINGULAR_VALUE, size=rank - 1) ])
  return (U * s) @ adjoint(V)

def top_singular_vectors(C:ComplexMatrix):
  """(u, v) with C v = u, ||u|| = ||v|| = 1 for the top singular value."""
  U, _, Vh = np.linalg.svd(C)
  return U[:, 0], np.conj(Vh[0])

def neighbor_couplings(C_prev:ComplexMatrix, C_next:ComplexMatrix):
  """
  (||C_next^* v_prev||, ||C_prev u_next||) where v_prev and u_next
  are the top right / left singular vectors of C_prev / C_next.
  """
  _, v_prev = top_singular_vectors(C_prev)
  u_next, _ = top_singular_vectors(C_next)
  return (
    float(np.linalg.norm(adjoint(C_next) @ v_prev)),
    float(np.linalg.norm(C_prev @ u_next)),
  )

def _resolvable(coupling:float, min_coupling:float) -> bool:
  return coupling < ZERO_COUPLING or coupling >= min_coupling

def random_pencil(
  g:int, rng = None, max_dim:int = 3, decouple:float = 0.5,
  dims:Optional[List[int]] = None, min_coupling:float = 0.0, attempts:int = 200,
) -> Pencil:
  """
  Random hyper-Reinhardt pencil. With probability `decouple` the
  range of C_j is chosen orthogonal to the top right singular
  vector of C_{j-1} (when d_j >= 2), which removes j-1 from Z+.
  With min_coupling > 0, neighbor couplings are redrawn until each is
  either zero or at least min_coupling.
  """
  rng = default_rng(rng)
  if g < 1:
    raise ShapeError(f"g must be positive. Got: {g}")
  if dims is None:
    dims = list(rng.integers(1, max_dim + 1, size=g + 1))
  if len(dims) != g + 1:
    raise ShapeError(f"dims must have g+1 = {g+1} entries. Got: {len(dims)}")

  blocks = [ random_block(dims[0], dims[1], rng) ]
  for j in range(1, g):
    rows, cols = dims[j], dims[j+1]
    for _ in range(attempts):
      avoid = None
      if rows >= 2 and rng.uniform() < decouple:
        _, avoid = top_singular_vectors(blocks[-1])
      C = random_block(rows, cols, rng, avoid)
      if min_coupling <= 0 or all(_resolvable(c, min_coupling) for c in neighbor_couplings(blocks[-1], C)):
        break
    else:
      raise NonConvergenceError(f"Could not draw block C_{j+1} with resolvable couplings in {attempts} attempts.")
    blocks.append(C)

  return build_pencil(dims, blocks)
