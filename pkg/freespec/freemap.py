"""
Candidate free automorphisms in permutation-Mobius form

  phi_j(X) = m_{b_j}(e^{i theta_j} X_{pi(j)}) + h_j(X)
  m_b(w) = (b + w)(1 + conj(b) w)^{-1}

with optional higher order terms h_j (free series with words of
length >= 2 that are not pure powers of x_{pi(j)}).

Permutations are stored 1-indexed: perm[j-1] = pi(j).
"""
from dataclasses import dataclass, field
import math
import multiprocessing as mp
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve
from tqdm import tqdm

from .caratheodory import (
  FreeSeries, eval_free_series, mobius_coeffs,
  nilpotent_shift_family, seed_for_mobius, univariate_series,
)
from .codec import (
  decode_candidate, encode_complex, encode_series,
  encode_tuple, series_from_terms,
)
from .exceptions import (
  FreespecError, NonConvergenceError, NotUnimodularError,
  ExtractionError, PreconditionError, SchemaError, ShapeError,
  SingularMatrixError,
)
from .linalg import as_matrix
from .pencil import (
  MembershipVerdict, Pencil, all_structured_boundary_tuples,
  as_tuple, scalar_point, shift_matrix, zero_tuple,
)
from .reports import SampleRecord, StructureReport, Verdict
from .sampling import default_rng, sample_interiors, scale_into_interior
from .settings import (
  DEFAULT_LEVELS, DEFAULT_PARALLEL, DEFAULT_SEED, DEFAULT_TOL, DISC_MARGIN, SCHEMA,
)
from .types import ComplexMatrix, MatrixTuple

CONDITION_LIMIT = 1e12
EXTRACT_TOL = 1e-9

class CandidateAutomorphism:
  def __init__(self, perm, theta = None, b = None, higher = None):
    perm = tuple(int(k) for k in perm)
    g = len(perm)
    if g == 0 or sorted(perm) != list(range(1, g + 1)):
      raise ShapeError(f"perm must be a permutation of 1..{g}. Got: {list(perm)}")

    theta = np.zeros(g) if theta is None else np.asarray(theta, dtype=float).reshape(-1)
    b = np.zeros(g, dtype=np.complex128) if b is None else np.asarray(b, dtype=np.complex128).reshape(-1)
    if len(theta) != g or len(b) != g:
      raise ShapeError(f"theta and b need {g} entries. Got: {len(theta)} and {len(b)}")
    if np.any(np.abs(b) >= 1 - DISC_MARGIN):
      raise PreconditionError(f"Centers must lie in the open unit disc. Got moduli: {np.abs(b).tolist()}")

    if higher is not None:
      higher = tuple(higher)
      if len(higher) != g:
        raise ShapeError(f"higher needs one entry per coordinate ({g}). Got: {len(higher)}")
      for j, series in enumerate(higher, start=1):
        if series is None:
          continue
        if series.g != g:
          raise ShapeError(f"Higher terms of coordinate {j} use {series.g} variables, expected {g}.")
        for word in series.words():
          if len(word) < 2:
            raise ShapeError(f"Higher terms of coordinate {j} must have degree >= 2. Got word {word}.")
          if all(x == perm[j-1] for x in word):
            raise ShapeError(f"Higher terms of coordinate {j} cannot contain the pure power {word} of x_{perm[j-1]}.")
      if all(series is None or len(series) == 0 for series in higher):
        higher = None

    theta.flags.writeable = False
    b.flags.writeable = False
    self.perm = perm
    self.theta = theta
    self.b = b
    self.higher = higher

  @classmethod
  def identity(cls, g:int) -> "CandidateAutomorphism":
    return cls(range(1, g + 1))

  @classmethod
  def trivial(cls, gamma, perm = None) -> "CandidateAutomorphism":
    """phi_gamma(X) = (gamma_1 X_{pi(1)}, ...) for unimodular gamma."""
    gamma = np.asarray(gamma, dtype=np.complex128).reshape(-1)
    if np.max(np.abs(np.abs(gamma) - 1)) > 1e-10:
      raise NotUnimodularError(f"Trivial scalings must be unimodular. Got moduli: {np.abs(gamma).tolist()}")
    perm = range(1, len(gamma) + 1) if perm is None else perm
    return cls(perm, theta=np.angle(gamma))

  @property
  def g(self) -> int:
    return len(self.perm)

  @property
  def has_higher(self) -> bool:
    return self.higher is not None

  @property
  def max_degree(self) -> int:
    if self.higher is None:
      return 1
    return max([1] + [ s.max_degree for s in self.higher if s is not None ])

  def inverse_perm(self) -> Tuple[int, ...]:
    inv = [0] * self.g
    for j, k in enumerate(self.perm, start=1):
      inv[k-1] = j
    return tuple(inv)

  def is_trivial(self, tol:float = DEFAULT_TOL) -> bool:
    return (
      self.perm == tuple(range(1, self.g + 1))
      and np.all(np.abs(self.b) <= tol)
      and not self.has_higher
    )

  def allclose(self, other:"CandidateAutomorphism", atol:float = 1e-10) -> bool:
    phases = np.exp(1j * self.theta) - np.exp(1j * other.theta)
    return (
      self.perm == other.perm
      and np.all(np.abs(phases) <= atol)
      and np.all(np.abs(self.b - other.b) <= atol)
      and self.has_higher == other.has_higher
    )

  def __call__(self, X, strict:bool = True) -> MatrixTuple:
    return evaluate(self, X, strict=strict)

  def __repr__(self):
    b = ", ".join(f"{z:.4g}" for z in self.b)
    return f"CandidateAutomorphism(perm={list(self.perm)}, b=[{b}], higher={self.has_higher})"

  def to_dict(self) -> dict:
    doc = {
      "schema": SCHEMA,
      "perm": list(self.perm),
      "theta": [ float(t) for t in self.theta ],
      "b": [ encode_complex(z) for z in self.b ],
    }
    if self.higher is not None:
      doc["higher"] = [ None if s is None else encode_series(s) for s in self.higher ]
    return doc

  @classmethod
  def from_dict(cls, doc, pointer:str = "") -> "CandidateAutomorphism":
    doc = decode_candidate(doc, pointer)
    g = len(doc.perm)
    higher = doc.higher
    if higher is not None:
      higher = [ None if terms is None else series_from_terms(terms, g) for terms in higher ]
    try:
      return cls(doc.perm, doc.theta, doc.b, higher)
    except ShapeError as err:
      raise SchemaError(f"{pointer}/higher", str(err))

class AffineLinearPart(NamedTuple):
  b: np.ndarray
  L: np.ndarray
  is_scaled_permutation: bool # exactly one nonzero entry in each row and column

  def permutation(self, tol:float = EXTRACT_TOL) -> Optional[Tuple[int, ...]]:
    """pi with L[j, pi(j)] != 0 when L is a scaled permutation."""
    if not self.is_scaled_permutation:
      return None
    return tuple(int(np.argmax(np.abs(row))) + 1 for row in self.L)

class FixedSupport(NamedTuple):
  indices: frozenset
  outside_normal: Optional[frozenset] = None # F minus N when a classification was supplied

  @property
  def within_normal(self) -> Optional[bool]:
    if self.outside_normal is None:
      return None
    return len(self.outside_normal) == 0

def mobius_matrix(b:complex, theta:float, X) -> ComplexMatrix:
  """(b I + e^{i theta} X)(I + conj(b) e^{i theta} X)^{-1}"""
  X = as_matrix(X)
  if X.shape[0] != X.shape[1]:
    raise ShapeError(f"Mobius argument must be square. Got: {X.shape}")
  b = complex(b)
  phase = np.exp(1j * theta)
  I = np.eye(X.shape[0], dtype=np.complex128)
  resolvent = I + np.conj(b) * phase * X
  numerator = b * I + phase * X

  cond = np.linalg.cond(resolvent)
  if not np.isfinite(cond) or cond > CONDITION_LIMIT:
    raise SingularMatrixError(f"I + conj(b) e^(i theta) X is near singular (condition number {cond:.3e}).")
  # numerator and resolvent commute
  return solve(resolvent, numerator)

def evaluate(candidate:CandidateAutomorphism, X, strict:bool = True) -> MatrixTuple:
  X = as_tuple(X, candidate.g)
  out = np.stack([
    mobius_matrix(candidate.b[j], candidate.theta[j], X[candidate.perm[j] - 1])
    for j in range(candidate.g)
  ])
  if candidate.higher is not None:
    for j, series in enumerate(candidate.higher):
      if series is not None:
        out[j] += eval_free_series(series, X, strict=strict)
  return out

def evaluate_scalar(candidate:CandidateAutomorphism, z) -> np.ndarray:
  return evaluate(candidate, scalar_point(z)).reshape(-1)

def extract_affine_linear(f:Callable, g:int, tol:float = EXTRACT_TOL) -> AffineLinearPart:
  """
  Reads b = f(0) and L from level two inputs T(delta_k) = S delta_k,
  using f(T(t)) = b + T(L t) on the square-zero shift S.
  """
  def sample(T, label):
    try:
      Y = np.asarray(f(T), dtype=np.complex128)
    except Exception as err:
      raise ExtractionError(f"Free map failed on the {label} input: {err}") from err
    if Y.shape != (g, 2, 2):
      raise ExtractionError(f"Free map returned shape {Y.shape} on the {label} input, expected {(g, 2, 2)}.")
    if not np.all(np.isfinite(Y)):
      raise ExtractionError(f"Free map returned non-finite entries on the {label} input.")
    return Y

  b = sample(zero_tuple(g, 2), "zero")[:, 0, 0]
  L = np.zeros((g, g), dtype=np.complex128)
  S = shift_matrix(2)
  for k in range(g):
    T = zero_tuple(g, 2)
    T[k] = S
    L[:, k] = sample(T, f"delta_{k+1}")[:, 0, 1]

  nonzero = np.abs(L) > tol
  scaled_perm = bool(np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1))
  return AffineLinearPart(b, L, scaled_perm)

def fixed_support(candidate:CandidateAutomorphism, tol:float = DEFAULT_TOL, classification = None) -> FixedSupport:
  indices = frozenset(j + 1 for j, z in enumerate(candidate.b) if abs(z) > tol)
  if classification is None:
    return FixedSupport(indices)
  return FixedSupport(indices, frozenset(indices - frozenset(classification.N)))

def normalizing_scalings(candidate:CandidateAutomorphism) -> Tuple[np.ndarray, np.ndarray]:
  """
  (gamma, alpha) with psi = rho o phi o tau normalized, where
  rho(X) = gamma X and tau(X) = alpha X.

  gamma_j = conj(b_j)/|b_j| (1 when b_j = 0)
  alpha_k = e^{-i theta_j} conj(gamma_j) for j = pi^{-1}(k)
  """
  g = candidate.g
  gamma = np.ones(g, dtype=np.complex128)
  nonzero = np.abs(candidate.b) > 0
  gamma[nonzero] = np.conj(candidate.b[nonzero]) / np.abs(candidate.b[nonzero])

  alpha = np.ones(g, dtype=np.complex128)
  for j, k in enumerate(candidate.perm):
    alpha[k-1] = np.exp(-1j * candidate.theta[j]) * np.conj(gamma[j])
  return gamma, alpha

def _rescale_series(series:FreeSeries, gamma:complex, alpha:np.ndarray) -> FreeSeries:
  terms = {
    word: gamma * coeff * np.prod([ alpha[x-1] for x in word ])
    for word, coeff in series
  }
  return FreeSeries(series.g, terms, max_degree=series.max_degree)

def normalize(candidate:CandidateAutomorphism) -> CandidateAutomorphism:
  """All phases zero and all centers real nonnegative, |b_j| preserved."""
  gamma, alpha = normalizing_scalings(candidate)
  higher = None
  if candidate.higher is not None:
    higher = [
      None if s is None else _rescale_series(s, gamma[j], alpha)
      for j, s in enumerate(candidate.higher)
    ]
  return CandidateAutomorphism(
    candidate.perm,
    theta=np.zeros(candidate.g),
    b=np.abs(candidate.b),
    higher=higher,
  )

def is_normalized(candidate:CandidateAutomorphism, tol:float = 1e-12) -> bool:
  phases = np.abs(np.exp(1j * candidate.theta) - 1)
  return bool(np.all(phases <= tol) and np.all(np.abs(candidate.b.imag) <= tol) and np.all(candidate.b.real >= -tol))

def disc_matrix(b:complex, theta:float) -> ComplexMatrix:
  """[[p, q], [r, s]] for z -> m_b(e^{i theta} z) = (p z + q)/(r z + s)."""
  phase = np.exp(1j * theta)
  return np.array([ [ phase, b ], [ np.conj(b) * phase, 1 ] ], dtype=np.complex128)

def disc_from_matrix(M, tol:float = 1e-9) -> Tuple[complex, float]:
  M = np.asarray(M, dtype=np.complex128)
  s = M[1,1]
  if abs(s) < 1e-300:
    raise SingularMatrixError("Matrix does not represent a disc automorphism (s = 0).")
  N = M / s
  phase, center = N[0,0], N[0,1]
  if abs(abs(phase) - 1) > tol or abs(N[1,0] - np.conj(center) * phase) > tol:
    raise ValueError(f"Matrix does not have disc automorphism form: {N.tolist()}")
  return complex(center), float(np.angle(phase))

def _require_symbolic(*candidates):
  for c in candidates:
    if c.has_higher:
      raise PreconditionError(
        "Symbolic composition is only available without higher order terms. "
        "Use compose_evaluator for black-box composition."
      )

def compose(outer:CandidateAutomorphism, inner:CandidateAutomorphism) -> CandidateAutomorphism:
  """outer o inner, with tau(j) = pi_inner(pi_outer(j))."""
  if outer.g != inner.g:
    raise ShapeError(f"Cannot compose maps on {outer.g} and {inner.g} variables.")
  _require_symbolic(outer, inner)

  perm, theta, b = [], [], []
  for j in range(outer.g):
    k = outer.perm[j] - 1
    M = disc_matrix(outer.b[j], outer.theta[j]) @ disc_matrix(inner.b[k], inner.theta[k])
    center, phase = disc_from_matrix(M)
    perm.append(inner.perm[k])
    theta.append(phase)
    b.append(center)
  return CandidateAutomorphism(perm, theta, b)

def compose_evaluator(outer:CandidateAutomorphism, inner:CandidateAutomorphism, strict:bool = True) -> Callable:
  if outer.g != inner.g:
    raise ShapeError(f"Cannot compose maps on {outer.g} and {inner.g} variables.")
  def composed(X):
    return evaluate(outer, evaluate(inner, X, strict=strict), strict=strict)
  return composed

def invert(candidate:CandidateAutomorphism) -> CandidateAutomorphism:
  _require_symbolic(candidate)
  inv = candidate.inverse_perm()
  theta, b = [], []
  for k in range(candidate.g):
    j = inv[k] - 1
    M = np.linalg.inv(disc_matrix(candidate.b[j], candidate.theta[j]))
    center, phase = disc_from_matrix(M)
    theta.append(phase)
    b.append(center)
  return CandidateAutomorphism(inv, theta, b)

def mobius_series(b:complex, theta:float, k:int, N:int, g:int) -> FreeSeries:
  """Taylor expansion of m_b(e^{i theta} x_k) through degree N."""
  return univariate_series(mobius_coeffs(seed_for_mobius(b, theta), N), k, g)

def support_of_composition(outer:CandidateAutomorphism, inner:CandidateAutomorphism, tol:float = DEFAULT_TOL) -> frozenset:
  """F_outer union pi_outer^{-1}(F_inner), valid for normalized inputs."""
  outer_support = fixed_support(outer, tol).indices
  inner_support = fixed_support(inner, tol).indices
  pulled_back = frozenset(j for j, k in enumerate(outer.perm, start=1) if k in inner_support)
  return outer_support | pulled_back

def power(candidate:CandidateAutomorphism, n:int) -> CandidateAutomorphism:
  if n < 1:
    raise ValueError(f"Power must be positive. Got: {n}")
  result = candidate
  for _ in range(n - 1):
    result = compose(candidate, result)
  return result

def power_stabilize(
  candidate:CandidateAutomorphism, classification = None, tol:float = DEFAULT_TOL,
) -> Tuple[int, CandidateAutomorphism]:
  """
  Smallest n such that psi = phi^(n) (phi normalized) fixes every
  index of N under its permutation and F_{psi^(m)} is the same
  for m = 1, 2, 3. Without a classification N is all of 1..g.
  """
  _require_symbolic(candidate)
  phi = normalize(candidate)
  g = phi.g
  normal = range(1, g + 1) if classification is None else sorted(classification.N)

  psi = phi
  for n in range(1, math.factorial(g) + 1):
    if n > 1:
      psi = compose(phi, psi)
    if any(psi.perm[j-1] != j for j in normal):
      continue
    psi2 = compose(psi, psi)
    psi3 = compose(psi, psi2)
    supports = [ fixed_support(x, tol).indices for x in (psi, psi2, psi3) ]
    if supports[0] == supports[1] == supports[2]:
      return n, psi

  raise NonConvergenceError(
    f"No stabilizing power within {math.factorial(g)} iterations; the candidate is not an automorphism."
  )

def normalized_mobius(c:float, z):
  return (c + z) / (1 + c * z)

def mobius_origin_orbit(b:float, m:int) -> float:
  """m-fold iterate of z -> (b + z)/(1 + b z) at 0."""
  if not (0 <= b < 1):
    raise ValueError(f"b must lie in [0, 1). Got: {b}")
  z = 0.0
  for _ in range(m):
    z = normalized_mobius(b, z)
  return z

def orbit_crossing(b:float, threshold:float, max_iterations:int = 100000) -> int:
  """First m >= 0 with mobius_origin_orbit(b, m) >= threshold."""
  if not (0 <= b < 1):
    raise ValueError(f"b must lie in [0, 1). Got: {b}")
  z = 0.0
  for m in range(max_iterations + 1):
    if z >= threshold:
      return m
    z = normalized_mobius(b, z)
  raise NonConvergenceError(f"Orbit of b={b} did not reach {threshold} within {max_iterations} iterations.")

@dataclass
class SamplePlan:
  levels: Sequence[int] = DEFAULT_LEVELS
  interior_count: int = 200
  include_structured: bool = True
  include_nilpotent: bool = True
  nilpotent_count: int = 20
  nilpotent_degree: int = 2
  tol: float = DEFAULT_TOL
  seed: int = DEFAULT_SEED
  strict: bool = True
  parallel: int = DEFAULT_PARALLEL
  progress: bool = False

def _nilpotent_inputs(p:Pencil, candidate, plan:SamplePlan, rng) -> List[MatrixTuple]:
  N = max(plan.nilpotent_degree, candidate.max_degree)
  tuples = []
  for _ in range(plan.nilpotent_count):
    weights = np.sqrt(rng.uniform(size=(p.g, N))) * np.exp(2j * np.pi * rng.uniform(size=(p.g, N)))
    k = int(rng.integers(1, p.g + 1))
    weights[k-1, 0] = 1
    T = nilpotent_shift_family(weights, k)
    tuples.append(scale_into_interior(p, T * rng.uniform(0.05, 1), plan.tol))
  return tuples

def verification_inputs(p:Pencil, candidate:CandidateAutomorphism, plan:SamplePlan) -> List[Tuple[str, MatrixTuple]]:
  rng = default_rng(plan.seed)
  inputs = [ ("interior", X) for X in sample_interiors(p, plan.interior_count, plan.levels, rng, plan.tol) ]
  if plan.include_structured:
    inputs += [ (f"{kind.value}@{k}", T) for kind, k, T in all_structured_boundary_tuples(p) ]
  if plan.include_nilpotent:
    inputs += [ ("nilpotent", T) for T in _nilpotent_inputs(p, candidate, plan, rng) ]
  return inputs

def _check_sample(job) -> Tuple[SampleRecord, Optional[MatrixTuple]]:
  p, candidate, source, X, tol, strict = job
  record = SampleRecord(source=source, level=int(X.shape[1]))
  try:
    before = p.membership(X, tol)
    record.input_verdict = before.verdict.value
    record.input_margin = before.margin
    if before.verdict == MembershipVerdict.OUTSIDE:
      return record, None

    Y = evaluate(candidate, X, strict=strict)
    after = p.membership(Y, tol)
    record.output_verdict = after.verdict.value
    record.output_margin = after.margin
    record.passed = not (
      after.verdict == MembershipVerdict.OUTSIDE
      or (before.verdict == MembershipVerdict.BOUNDARY and after.verdict == MembershipVerdict.INTERIOR)
    )
    return record, Y
  except (FreespecError, np.linalg.LinAlgError) as err:
    record.error = f"{type(err).__name__}: {err}"
    return record, None

def verify_automorphism(p:Pencil, candidate:CandidateAutomorphism, plan:Optional[SamplePlan] = None) -> StructureReport:
  """
  Refutation search: evaluates the candidate on interior samples,
  structured boundary tuples and nilpotent shift tuples. Any image
  outside the spectrahedron, or a boundary input sent to the
  interior, refutes it. A PASS means "not refuted".
  """
  plan = plan or SamplePlan()
  if candidate.g != p.g:
    raise ShapeError(f"Candidate acts on {candidate.g} variables but the pencil has g={p.g}.")

  inputs = verification_inputs(p, candidate, plan)
  jobs = [ (p, candidate, source, X, plan.tol, plan.strict) for source, X in inputs ]

  parallel = plan.parallel if plan.parallel > 0 else mp.cpu_count()
  if parallel > 1 and len(jobs) > 1:
    with mp.Pool(parallel) as pool:
      results = list(tqdm(pool.imap(_check_sample, jobs), total=len(jobs), disable=not plan.progress, desc="Verifying"))
  else:
    results = [ _check_sample(job) for job in tqdm(jobs, disable=not plan.progress, desc="Verifying") ]

  report = StructureReport(kind="verify", seed=plan.seed)
  skipped = errors = 0
  failed_sources = set()
  for (source, X), (record, image) in zip(inputs, results):
    report.samples.append(record)
    if record.error is not None:
      errors += 1
      continue
    if record.passed is None:
      skipped += 1
      continue
    report.trials += 1
    report.margins.append(record.output_margin)
    if not record.passed:
      failed_sources.add(source)
      if report.witness is None:
        report.details["witness_image"] = encode_tuple(image)
      report.refute(X, record.output_margin, source)

  if not report.refuted:
    report.verdict = Verdict.CERTIFIED if report.trials > 0 else Verdict.UNKNOWN
  if errors:
    report.findings.append(f"{errors} samples could not be evaluated.")

  report.details.update({
    "candidate": candidate.to_dict(),
    "skipped_outside_inputs": skipped,
    "failed_sources": sorted(failed_sources),
    "errors": errors,
    "levels": list(plan.levels),
  })
  return report
