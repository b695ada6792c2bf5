"""
Extreme Caratheodory interpolation along weighted shifts and
truncated free power series on nilpotent tuples.

Coefficients follow the disc automorphism

  f(z) = (c0 - e^{i theta} z) / (1 - conj(c0) e^{i theta} z)

whose Taylor coefficients are c_j = e^{i theta} (e^{i theta} conj(c0))^{j-1} (|c0|^2 - 1).
Free maps use m_b(e^{i theta} x) = (b + e^{i theta} x) / (1 + conj(b) e^{i theta} x)
instead; `seed_for_mobius` converts between the two.
"""
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Dict, Iterable, NamedTuple, Optional, Tuple

import numpy as np

from .exceptions import NotNilpotentError, PreconditionError, ShapeError
from .linalg import adjoint, op_norm
from .pencil import as_tuple
from .types import ComplexMatrix, MatrixTuple, Word

NORM_ONE_SLACK = 1e-10
NILPOTENT_SLACK = 1e-10
DISC_MARGIN = 1e-12

class TwoByTwoKind(Enum):
  NORM_ONE = "NormOne"
  STRICT_CONTRACTION = "StrictContraction"
  NORM_EXCEEDS_ONE = "NormExceedsOne"

class TwoByTwo(NamedTuple):
  kind: TwoByTwoKind
  slack: float # 1 - |c0|^2 - |c1|
  kernel_vector: Optional[np.ndarray]
  theta: Optional[float]

def two_by_two_classify(c0:complex, c1:complex, tol:float = NORM_ONE_SLACK) -> TwoByTwo:
  """
  Norm of [[c0, c1], [0, c0]] relative to one.

  When the norm is one, c1 = e^{i theta}(|c0|^2 - 1) and the unit
  vector v along (1, -e^{-i theta} c0) satisfies ||M^* v|| = 1.
  """
  c0, c1 = complex(c0), complex(c1)
  slack = 1 - abs(c0) ** 2 - abs(c1)

  if abs(slack) <= tol and abs(c0) <= 1 + tol:
    phase = -c1 / abs(c1) if abs(c1) > 0 else 1.0
    v = np.array([ 1, -np.conj(phase) * c0 ], dtype=np.complex128)
    return TwoByTwo(TwoByTwoKind.NORM_ONE, slack, v / np.linalg.norm(v), float(np.angle(phase)))
  elif slack > 0:
    return TwoByTwo(TwoByTwoKind.STRICT_CONTRACTION, slack, None, None)
  return TwoByTwo(TwoByTwoKind.NORM_EXCEEDS_ONE, slack, None, None)

@dataclass(frozen=True)
class MobiusSeed:
  c0: complex
  theta: float = 0.0

  def __post_init__(self):
    object.__setattr__(self, "c0", complex(self.c0))
    object.__setattr__(self, "theta", float(self.theta))
    if not abs(self.c0) < 1 - DISC_MARGIN:
      raise ValueError(f"Seed center must lie in the open unit disc. Got: |c0| = {abs(self.c0)}")

def seed_for_mobius(b:complex, theta:float) -> MobiusSeed:
  """The seed whose f equals z -> m_b(e^{i theta} z)."""
  return MobiusSeed(b, theta + np.pi)

@dataclass(frozen=True)
class WeightedShift:
  """(n+1) x (n+1) matrix with weights lambda_1..lambda_n on the superdiagonal."""
  weights: Tuple[complex, ...]

  def __post_init__(self):
    weights = tuple(complex(w) for w in self.weights)
    if len(weights) == 0:
      raise ShapeError("A weighted shift needs at least one weight.")
    if weights[0] != 1:
      raise ValueError(f"The first weight must equal 1. Got: {weights[0]}")
    object.__setattr__(self, "weights", weights)

  @classmethod
  def unweighted(cls, n:int) -> "WeightedShift":
    return cls((1,) * n)

  @property
  def order(self) -> int:
    return len(self.weights)

  def matrix(self) -> ComplexMatrix:
    return np.diag(np.array(self.weights, dtype=np.complex128), k=1)

def mobius_coeffs(seed:MobiusSeed, N:int) -> np.ndarray:
  if N < 1:
    raise ValueError(f"N must be at least 1. Got: {N}")
  c0, phase = seed.c0, np.exp(1j * seed.theta)
  j = np.arange(1, N + 1)
  tail = phase * (phase * np.conj(c0)) ** (j - 1) * (abs(c0) ** 2 - 1)
  return np.concatenate([ [c0], tail ]).astype(np.complex128)

def toeplitz_from_coeffs(coeffs, shift:WeightedShift) -> ComplexMatrix:
  """sum_j c_j S^j for the weighted shift S, with len(coeffs) = n+1."""
  coeffs = np.asarray(coeffs, dtype=np.complex128)
  if len(coeffs) != shift.order + 1:
    raise ShapeError(f"Expected {shift.order + 1} coefficients for a shift of order {shift.order}. Got: {len(coeffs)}")

  S = shift.matrix()
  T = np.zeros_like(S)
  power = np.eye(S.shape[0], dtype=np.complex128)
  for c in coeffs:
    T += c * power
    power = power @ S
  return T

def extreme_toeplitz(seed:MobiusSeed, shift:WeightedShift) -> ComplexMatrix:
  weights = np.abs(np.array(shift.weights))
  if np.any(weights > 1 + NORM_ONE_SLACK):
    raise ValueError(f"Weights must lie in the closed unit disc. Got moduli: {weights.tolist()}")
  if np.any(weights == 0):
    raise ValueError("Zero weights are not supported.")
  return toeplitz_from_coeffs(mobius_coeffs(seed, shift.order), shift)

def corner_unit(n:int) -> ComplexMatrix:
  P = np.zeros((n, n), dtype=np.complex128)
  P[0, -1] = 1
  return P

def rigidity_check(T:ComplexMatrix, mu:complex) -> float:
  """
  ||T + mu P|| - 1 with P the (1, n+1) matrix unit.

  For n = 1 the corner is the c_1 slot itself, so shifts of order
  at least two are required.
  """
  T = np.asarray(T, dtype=np.complex128)
  if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 3:
    raise ShapeError(f"Rigidity needs a square matrix of size at least 3. Got: {T.shape}")
  return op_norm(T + mu * corner_unit(T.shape[0])) - 1

class FreeSeries:
  """
  Sparse noncommutative polynomial sum_alpha a_alpha x^alpha in g
  variables. Words are tuples of 1-indexed letters; the empty word
  is the constant term.
  """
  def __init__(self, g:int, terms:Optional[Dict[Word, complex]] = None, max_degree:Optional[int] = None):
    if g < 1:
      raise ShapeError(f"g must be positive. Got: {g}")
    self.g = int(g)
    self.terms = {}
    for word, coeff in (terms or {}).items():
      word = tuple(int(x) for x in word)
      if any(not (1 <= x <= g) for x in word):
        raise ShapeError(f"Word {word} uses a letter outside 1..{g}.")
      if coeff != 0:
        self.terms[word] = self.terms.get(word, 0) + complex(coeff)

    longest = max((len(w) for w in self.terms), default=0)
    if max_degree is None:
      max_degree = longest
    elif longest > max_degree:
      raise ShapeError(f"Series has a word of length {longest} above max degree {max_degree}.")
    self.max_degree = int(max_degree)

  def __len__(self):
    return len(self.terms)

  def __iter__(self):
    return iter(sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])))

  def __eq__(self, other):
    return isinstance(other, FreeSeries) and self.g == other.g and self.terms == other.terms

  def __repr__(self):
    return f"FreeSeries(g={self.g}, terms={len(self)}, max_degree={self.max_degree})"

  def words(self) -> Iterable[Word]:
    return self.terms.keys()

  def coeff(self, word:Word) -> complex:
    return self.terms.get(tuple(word), 0j)

def univariate_series(coeffs, k:int, g:int) -> FreeSeries:
  """sum_m coeffs[m] x_k^m as a free series."""
  terms = { (k,) * m: c for m, c in enumerate(coeffs) }
  return FreeSeries(g, terms, max_degree=len(coeffs) - 1)

def word_product(T:MatrixTuple, word:Word) -> ComplexMatrix:
  n = T.shape[1]
  return reduce(lambda acc, x: acc @ T[x-1], word, np.eye(n, dtype=np.complex128))

def word_residual(T, length:int) -> float:
  """
  sqrt(||Phi^length(I)||) for Phi(Q) = sum_j T_j Q T_j^*, which equals
  the norm of the row of all length-`length` products.
  """
  T = as_tuple(T)
  Q = np.eye(T.shape[1], dtype=np.complex128)
  for _ in range(length):
    Q = np.einsum('jab,bc,jdc->ad', T, Q, np.conj(T))
  return float(np.sqrt(op_norm(Q)))

def is_nilpotent(T, length:int, tol:float = NILPOTENT_SLACK) -> bool:
  """True when every product of `length` coordinates vanishes to tol."""
  return word_residual(T, length) <= tol

def eval_free_series(series:FreeSeries, T, strict:bool = True, tol:float = NILPOTENT_SLACK) -> ComplexMatrix:
  T = as_tuple(T, series.g)
  if strict:
    residual = word_residual(T, series.max_degree + 1)
    if residual > tol:
      raise NotNilpotentError(
        f"Products of length {series.max_degree + 1} do not vanish (residual {residual:.3e} > {tol:g}); "
        "the truncated series does not represent the full map here."
      )

  n = T.shape[1]
  out = np.zeros((n, n), dtype=np.complex128)
  cache = { (): np.eye(n, dtype=np.complex128) }
  for word, coeff in series:
    prefix = word[:-1]
    if prefix not in cache:
      cache[prefix] = word_product(T, prefix)
    cache[word] = cache[prefix] @ T[word[-1]-1] if word else cache[()]
    out += coeff * cache[word]
  return out

def nilpotent_shift_family(weights, k:Optional[int] = None) -> MatrixTuple:
  """
  weights is g x N. Coordinate l is the (N+1) x (N+1) matrix with
  weights[l, u] on the superdiagonal, so the (1, N+1) entry of a
  length N word product T_{j1}..T_{jN} is prod_u weights[j_u, u].
  When k is given its first weight must be 1.
  """
  weights = np.atleast_2d(np.asarray(weights, dtype=np.complex128))
  if weights.ndim != 2 or weights.shape[1] < 1:
    raise ShapeError(f"Weights must be a g x N array. Got shape: {weights.shape}")
  if not np.all(np.isfinite(weights)):
    raise ShapeError("Weights must be finite.")
  if k is not None:
    if not (1 <= k <= weights.shape[0]):
      raise ShapeError(f"Designated coordinate {k} is outside 1..{weights.shape[0]}.")
    if abs(weights[k-1, 0] - 1) > DISC_MARGIN:
      raise PreconditionError(f"The designated coordinate {k} must have first weight 1. Got: {weights[k-1, 0]}")
  return np.stack([ np.diag(row, k=1) for row in weights ])
