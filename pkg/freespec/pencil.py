"""
Hyper-Reinhardt pencils and the membership oracle.

A pencil is built from norm one blocks C_1..C_g where C_j is
d_j x d_{j+1}. The assembled coefficient A_j is d x d with
d = sum(d_j), zero except for block (j, j+1) which equals C_j.
Evaluation at a tuple X of n x n matrices is

  L_A(X) = I + sum_j A_j (x) X_j + (A_j (x) X_j)*

with the pencil index as the outer Kronecker factor.

Coordinates are 1-indexed in every public function
(j in 1..g) and sandwich tuples W are indexed 0..g.
"""
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence
import warnings

import numpy as np
from scipy.linalg import block_diag

from .exceptions import (
  NormViolationError, NotUnimodularError, PreconditionError,
  ShapeError, ToleranceFinding,
)
from .linalg import (
  PsdClass, adjoint, as_matrix, check_unitary,
  hermitian_spectrum, min_eigenvalue, op_norm,
)
from .settings import DEFAULT_TOL
from .types import ComplexMatrix, Indices, MatrixTuple

NORM_SLACK = 1e-6
UNIMODULAR_SLACK = 1e-10
ETA_SLACK = 1e-12
ETA_ROUNDOFF = 1e-14
ETA_SCALED_SLACK = 1e-10
ETA_RESOLUTION = 1e-6
ETA_BRACKET = 2.0
ETA_ITERATIONS = 60

class MembershipVerdict(Enum):
  INTERIOR = "Interior"
  BOUNDARY = "Boundary"
  OUTSIDE = "Outside"

VERDICT_OF_CLASS = {
  PsdClass.POSITIVE_DEFINITE: MembershipVerdict.INTERIOR,
  PsdClass.PSD_WITH_KERNEL: MembershipVerdict.BOUNDARY,
  PsdClass.INDEFINITE: MembershipVerdict.OUTSIDE,
}

class Membership(NamedTuple):
  verdict: MembershipVerdict
  margin: float
  kernel: Optional[np.ndarray] # only populated for Boundary

  @property
  def in_closure(self) -> bool:
    return self.verdict != MembershipVerdict.OUTSIDE

class EtaMode(Enum):
  FULL = "full"
  RIGHT_ONLY = "right-only" # coordinate k-1 held at zero
  LEFT_ONLY = "left-only" # coordinate k+1 held at zero

class BoundaryKind(Enum):
  SINGLE_SHIFT = "single-shift"
  ADJACENT_PAIR = "adjacent-pair"
  STAGGERED = "staggered"
  WEIGHTED_PAIR = "weighted-pair"

class LinkInequality(NamedTuple):
  matrix: ComplexMatrix
  psd_class: PsdClass
  margin: float

def shift_matrix(n:int = 2) -> ComplexMatrix:
  """n x n matrix with ones on the first superdiagonal."""
  return np.eye(n, k=1, dtype=np.complex128)

def matrix_unit(n:int, i:int, j:int) -> ComplexMatrix:
  """e_i e_j^* in M_n, 1-indexed."""
  E = np.zeros((n,n), dtype=np.complex128)
  E[i-1, j-1] = 1
  return E

def as_tuple(X, g:Optional[int] = None) -> MatrixTuple:
  """
  Coerce a sequence of square matrices (or of scalars, which are
  read as a level 1 point) into a g x n x n complex array.
  """
  if isinstance(X, np.ndarray) and X.ndim == 3:
    T = X.astype(np.complex128, copy=False)
  else:
    mats = [ np.atleast_2d(np.asarray(x, dtype=np.complex128)) for x in X ]
    if len(mats) == 0:
      raise ShapeError("A matrix tuple needs at least one coordinate.")
    shapes = set(m.shape for m in mats)
    if len(shapes) != 1:
      raise ShapeError(f"Tuple coordinates must share one square size. Got: {sorted(shapes)}")
    T = np.stack(mats)

  if T.shape[1] != T.shape[2]:
    raise ShapeError(f"Tuple coordinates must be square. Got: {T.shape[1:]}")
  if T.shape[1] == 0:
    raise ShapeError("Tuple level must be at least 1.")
  if not np.all(np.isfinite(T)):
    raise ShapeError("Tuple contains non-finite entries.")
  if g is not None and T.shape[0] != g:
    raise ShapeError(f"Expected a tuple of length {g}. Got: {T.shape[0]}")
  return T

def scalar_point(values) -> MatrixTuple:
  values = np.asarray(values, dtype=np.complex128).reshape(-1)
  return values.reshape(-1, 1, 1)

def zero_tuple(g:int, n:int) -> MatrixTuple:
  return np.zeros((g, n, n), dtype=np.complex128)

def _coordinates(indices:Indices, g:int) -> List[int]:
  indices = sorted(set(int(j) for j in indices))
  for j in indices:
    if not (1 <= j <= g):
      raise ShapeError(f"Coordinate index {j} is outside 1..{g}.")
  return indices

class LinearPencil:
  """
  A monic linear pencil L(X) = I + sum_j B_j (x) X_j + adjoint
  with arbitrary d x d coefficients B_1..B_g.
  """
  def __init__(self, coefficients):
    coefficients = np.array(coefficients, dtype=np.complex128)
    if coefficients.ndim != 3 or coefficients.shape[1] != coefficients.shape[2]:
      raise ShapeError(f"Coefficients must have shape (g, d, d). Got: {coefficients.shape}")
    if coefficients.shape[0] == 0:
      raise ShapeError("A pencil needs at least one coefficient.")
    coefficients.flags.writeable = False
    self._coefficients = coefficients

  @property
  def coefficients(self) -> np.ndarray:
    return self._coefficients

  @property
  def g(self) -> int:
    return self._coefficients.shape[0]

  @property
  def d(self) -> int:
    return self._coefficients.shape[1]

  def lambda_eval(self, X) -> ComplexMatrix:
    X = as_tuple(X, self.g)
    n = X.shape[1]
    # block (a,b) of the d x d grid of n x n blocks is sum_j B_j[a,b] X_j
    out = np.einsum('jab,jkl->akbl', self._coefficients, X)
    return out.reshape(self.d * n, self.d * n)

  def L_eval(self, X) -> ComplexMatrix:
    X = as_tuple(X, self.g)
    Lam = self.lambda_eval(X)
    return np.eye(Lam.shape[0], dtype=np.complex128) + Lam + adjoint(Lam)

  def membership(self, X, tol:float = DEFAULT_TOL) -> Membership:
    spectrum = hermitian_spectrum(self.L_eval(X), tol)
    verdict = VERDICT_OF_CLASS[spectrum.psd_class]
    kernel = spectrum.kernel if verdict == MembershipVerdict.BOUNDARY else None
    return Membership(verdict, spectrum.margin, kernel)

  def margin(self, X) -> float:
    return min_eigenvalue(self.L_eval(X))

  def scalar_radius(self, k:int = 1, iterations:int = ETA_ITERATIONS) -> float:
    """
    sup { r >= 0 : L(r delta_k) >= 0 } at level one, along the
    positive real axis. Returns inf for an unbounded direction.
    """
    k = _coordinates([k], self.g)[0]

    def feasible(r):
      point = np.zeros(self.g, dtype=np.complex128)
      point[k-1] = r
      return self.margin(scalar_point(point)) >= -ETA_SLACK

    hi = 1.0
    while feasible(hi):
      hi *= 2
      if hi > 1e12:
        return np.inf
    return _bisect(feasible, 0.0, hi, iterations)

  def __repr__(self):
    return f"{self.__class__.__name__}(g={self.g}, d={self.d})"

class Pencil(LinearPencil):
  """Hyper-Reinhardt pencil assembled from norm one blocks."""
  def __init__(self, dims, blocks):
    dims = tuple(int(d) for d in dims)
    blocks = tuple(blocks)
    offsets = np.concatenate([ [0], np.cumsum(dims) ]).astype(int)
    d = int(offsets[-1])

    coefficients = np.zeros((len(blocks), d, d), dtype=np.complex128)
    for j, C in enumerate(blocks):
      coefficients[j, offsets[j]:offsets[j+1], offsets[j+1]:offsets[j+2]] = C

    for C in blocks:
      C.flags.writeable = False

    super().__init__(coefficients)
    self._dims = dims
    self._blocks = blocks
    self._offsets = offsets

  @property
  def dims(self) -> tuple:
    return self._dims

  @property
  def blocks(self) -> tuple:
    return self._blocks

  def block(self, j:int) -> ComplexMatrix:
    """C_j, 1-indexed."""
    return self._blocks[_coordinates([j], self.g)[0] - 1]

  def block_slice(self, k:int) -> slice:
    """Rows of the d x d grid occupied by diagonal block k (1-indexed, 1..g+1)."""
    return slice(self._offsets[k-1], self._offsets[k])

  def __repr__(self):
    return f"Pencil(dims={list(self.dims)})"

def build_pencil(dims, blocks, rescale:bool = False, tol:float = NORM_SLACK) -> Pencil:
  dims = [ int(d) for d in dims ]
  if len(dims) < 2:
    raise ShapeError(f"dims must list g+1 >= 2 block sizes. Got: {dims}")
  if any(d <= 0 for d in dims):
    raise ShapeError(f"Block sizes must be positive. Got: {dims}")

  g = len(dims) - 1
  if len(blocks) != g:
    raise ShapeError(f"Expected {g} blocks for dims {dims}. Got: {len(blocks)}")

  normalized = []
  for j, C in enumerate(blocks, start=1):
    C = as_matrix(C)
    expected = (dims[j-1], dims[j])
    if C.shape != expected:
      raise ShapeError(f"C_{j} must be {expected[0]}x{expected[1]} to chain dims {dims}. Got: {C.shape[0]}x{C.shape[1]}")

    norm = op_norm(C)
    if abs(norm - 1) > tol:
      if not rescale or norm == 0:
        raise NormViolationError(j, norm, tol)
      C = C / norm
    normalized.append(C.copy())

  return Pencil(dims, normalized)

def lambda_eval(p:LinearPencil, X) -> ComplexMatrix:
  return p.lambda_eval(X)

def L_eval(p:LinearPencil, X) -> ComplexMatrix:
  return p.L_eval(X)

def membership(p:LinearPencil, X, tol:float = DEFAULT_TOL) -> Membership:
  return p.membership(X, tol)

def direct_sum(X, Y) -> MatrixTuple:
  X = as_tuple(X)
  Y = as_tuple(Y)
  if X.shape[0] != Y.shape[0]:
    raise ShapeError(f"Direct sum needs equal tuple lengths. Got: {X.shape[0]} and {Y.shape[0]}")
  return np.stack([ block_diag(x, y) for x, y in zip(X, Y) ]).astype(np.complex128)

def unitary_conj(U, X, tol:float = DEFAULT_TOL) -> MatrixTuple:
  X = as_tuple(X)
  U = check_unitary(U, tol)
  if U.shape[0] != X.shape[1]:
    raise ShapeError(f"Unitary is {U.shape[0]}x{U.shape[0]} but the tuple level is {X.shape[1]}.")
  return adjoint(U) @ X @ U

def trivial_scale(gamma, X) -> MatrixTuple:
  X = as_tuple(X)
  gamma = np.asarray(gamma, dtype=np.complex128).reshape(-1)
  if len(gamma) != X.shape[0]:
    raise ShapeError(f"Expected {X.shape[0]} scalars. Got: {len(gamma)}")
  defect = np.max(np.abs(np.abs(gamma) - 1))
  if defect > UNIMODULAR_SLACK:
    raise NotUnimodularError(f"Scalars must be unimodular. Largest ||gamma_j| - 1| = {defect:.3e}")
  return gamma[:, None, None] * X

def _check_sandwich(W, g:int, n:int, tol:float) -> np.ndarray:
  W = np.asarray(W, dtype=np.complex128)
  if W.ndim != 3 or W.shape[0] != g + 1:
    raise ShapeError(f"Sandwich tuple needs g+1 = {g+1} unitaries. Got shape: {W.shape}")
  if W.shape[1:] != (n, n):
    raise ShapeError(f"Sandwich unitaries must be {n}x{n}. Got: {W.shape[1:]}")
  for Wj in W:
    check_unitary(Wj, tol)
  return W

def w_compose(W, T, tol:float = DEFAULT_TOL) -> MatrixTuple:
  """(W o T)_j = W_{j-1}^* T_j W_j for W indexed 0..g."""
  T = as_tuple(T)
  g, n = T.shape[0], T.shape[1]
  W = _check_sandwich(W, g, n, tol)
  return adjoint(W[:-1]) @ T @ W[1:]

def sandwich_matrix(p:Pencil, W, tol:float = DEFAULT_TOL) -> ComplexMatrix:
  """
  D_W = diag(I_{d_1} (x) W_0, ..., I_{d_{g+1}} (x) W_g) so that
  D_W^* L_A(T) D_W = L_A(W o T).
  """
  W = np.asarray(W, dtype=np.complex128)
  if W.ndim != 3:
    raise ShapeError(f"Sandwich tuple must have shape (g+1, n, n). Got: {W.shape}")
  W = _check_sandwich(W, p.g, W.shape[1], tol)
  return block_diag(*[ np.kron(np.eye(dk), Wk) for dk, Wk in zip(p.dims, W) ])

def project(J:Indices, T) -> MatrixTuple:
  """pi_J: zero the coordinates listed in J."""
  T = as_tuple(T).copy()
  for j in _coordinates(J, T.shape[0]):
    T[j-1] = 0
  return T

def projection_margins(p:LinearPencil, J:Indices, T, slack:float = 1e-10):
  """
  (margin of T, margin of project(J,T)). Emits a ToleranceFinding
  when zeroing the coordinates lowered the margin.
  """
  full = p.margin(T)
  projected = p.margin(project(J, T))
  if projected < full - slack:
    warnings.warn(
      f"Projection onto coordinates outside {sorted(J)} lowered the margin from {full:.3e} to {projected:.3e}.",
      ToleranceFinding,
    )
  return full, projected

def _along_ray(p:LinearPencil, point, eta:float) -> bool:
  # lambda_min leaves zero quadratically in eta at a boundary point
  return p.margin(scalar_point(point)) >= -(ETA_ROUNDOFF + ETA_SCALED_SLACK * eta**2)

def _snap(radius:float) -> float:
  return 0.0 if radius < ETA_RESOLUTION else radius

def _bisect(feasible, lo:float, hi:float, iterations:int) -> float:
  for _ in range(iterations):
    mid = (lo + hi) / 2
    if feasible(mid):
      lo = mid
    else:
      hi = mid
  return lo

def eta_radius(p:LinearPencil, k:int, mode = EtaMode.FULL) -> float:
  """
  sup { eta >= 0 : L_A(delta_k + eta * sum_{j != k} delta_j) >= 0 }
  at level one. Returns inf when no other coordinate participates.
  """
  mode = EtaMode(mode)
  k = _coordinates([k], p.g)[0]

  others = [ j for j in range(1, p.g + 1) if j != k ]
  if mode == EtaMode.RIGHT_ONLY:
    others = [ j for j in others if j != k - 1 ]
  elif mode == EtaMode.LEFT_ONLY:
    others = [ j for j in others if j != k + 1 ]

  if not others:
    return np.inf

  def feasible(eta):
    point = np.zeros(p.g, dtype=np.complex128)
    point[np.array(others) - 1] = eta
    point[k-1] = 1
    return _along_ray(p, point, eta)

  if not feasible(0.0):
    return 0.0
  return _snap(_bisect(feasible, 0.0, ETA_BRACKET, ETA_ITERATIONS))

def neighbor_radius(p:LinearPencil, k:int, neighbor:int) -> float:
  """sup { e >= 0 : L_A(delta_k + e delta_neighbor) >= 0 } at level one."""
  k, neighbor = _coordinates([k], p.g)[0], _coordinates([neighbor], p.g)[0]

  def feasible(eps):
    point = np.zeros(p.g, dtype=np.complex128)
    point[k-1] = 1
    point[neighbor-1] = eps
    return _along_ray(p, point, eps)

  return _snap(_bisect(feasible, 0.0, ETA_BRACKET, ETA_ITERATIONS))

def link_inequality(p:Pencil, T, j:int, tol:float = DEFAULT_TOL) -> LinkInequality:
  """
  I - (T_j^* T_j (x) C_j^* C_j + T_{j+1} T_{j+1}^* (x) C_{j+1} C_{j+1}^*)

  which is positive semidefinite whenever L_A(T) is.
  """
  T = as_tuple(T, p.g)
  if not (1 <= j <= p.g - 1):
    raise ShapeError(f"Link index must lie in 1..{p.g - 1}. Got: {j}")

  Tj, Tn = T[j-1], T[j]
  Cj, Cn = p.block(j), p.block(j+1)
  M = np.kron(adjoint(Tj) @ Tj, adjoint(Cj) @ Cj) + np.kron(Tn @ adjoint(Tn), Cn @ adjoint(Cn))
  M = np.eye(M.shape[0]) - M
  spectrum = hermitian_spectrum(M, tol)
  return LinkInequality(M, spectrum.psd_class, spectrum.margin)

def _placed(g:int, n:int, entries:dict) -> MatrixTuple:
  T = zero_tuple(g, n)
  for j, M in entries.items():
    T[j-1] = M
  return T

def structured_boundary_tuples(
  p:Pencil, kind, k:int, epsilon:Optional[float] = None
) -> List[MatrixTuple]:
  """
  Test tuples on the boundary of the closed spectrahedron.

  single-shift   T_k = S (and S^*), rest 0, level 2
  adjacent-pair  T_k = T_{k+1} = S (and S^*), level 2
  staggered      T_k = e1 e2^*, T_{k-1} = e2 e3^*, level 3
  weighted-pair  T_k = e1 e2^* + e2 e3^*,
                 T_{k+1} = e1 e2^* + epsilon e2 e3^*, level 3

  The weighted pair needs L_A(delta_k + epsilon delta_{k+1}) >= 0;
  when epsilon is omitted it is half of the feasible sup (capped at 1).
  """
  kind = BoundaryKind(kind)
  g = p.g
  if not (1 <= k <= g):
    raise ShapeError(f"Coordinate index {k} is outside 1..{g}.")

  S = shift_matrix(2)
  if kind == BoundaryKind.SINGLE_SHIFT:
    return [ _placed(g, 2, { k: S }), _placed(g, 2, { k: adjoint(S) }) ]

  elif kind == BoundaryKind.ADJACENT_PAIR:
    if k + 1 > g:
      raise ShapeError(f"adjacent-pair needs k+1 <= g. Got k={k}, g={g}")
    return [
      _placed(g, 2, { k: S, k+1: S }),
      _placed(g, 2, { k: adjoint(S), k+1: adjoint(S) }),
    ]

  elif kind == BoundaryKind.STAGGERED:
    if k - 1 < 1:
      raise ShapeError(f"staggered needs k-1 >= 1. Got k={k}")
    return [ _placed(g, 3, { k: matrix_unit(3,1,2), k-1: matrix_unit(3,2,3) }) ]

  if k + 1 > g:
    raise ShapeError(f"weighted-pair needs k+1 <= g. Got k={k}, g={g}")

  if epsilon is None:
    sup = neighbor_radius(p, k, k+1)
    if sup == 0:
      raise PreconditionError(
        f"weighted-pair needs L_A(delta_{k} + e delta_{k+1}) >= 0 for some e > 0, but none exists."
      )
    epsilon = 0.5 * min(sup, 1.0)

  J = shift_matrix(3)
  Tn = matrix_unit(3,1,2) + epsilon * matrix_unit(3,2,3)
  return [ _placed(g, 3, { k: J, k+1: Tn }) ]

def all_structured_boundary_tuples(p:Pencil):
  """Yields (kind, k, tuple) over every admissible kind and index."""
  for kind in BoundaryKind:
    for k in range(1, p.g + 1):
      try:
        tuples = structured_boundary_tuples(p, kind, k)
      except (ShapeError, PreconditionError):
        continue
      for T in tuples:
        yield kind, k, T

def disc_pencil() -> Pencil:
  return build_pencil([1, 1], [ [[1]] ])

def chain_pencil(g:int = 2) -> Pencil:
  return build_pencil([1] * (g + 1), [ [[1]] ] * g)

def polydisc_pencil(g:int = 2) -> Pencil:
  """
  dims all 2 with C_j = diag(1,0) for odd j and diag(0,1) for even j.
  Neighboring coordinates touch disjoint basis vectors so the
  spectrahedron is the free polydisc.
  """
  odd, even = np.diag([1, 0]), np.diag([0, 1])
  return build_pencil([2] * (g + 1), [ odd if j % 2 else even for j in range(1, g + 1) ])

def split_pencil() -> Pencil:
  return polydisc_pencil(2)
