"""
Rigidity index sets, auxiliary spectrahedra and structure detectors.

Z+ holds the j for which L_A(delta_j + eps delta_{j+1}) fails to be
positive semidefinite for every eps > 0, Z- the mirror condition
with delta_{j-1}, and N is the complement of Z = Z+ | Z-.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence
import warnings

import numpy as np
from tqdm import tqdm

from .exceptions import PreconditionError, ShapeError, ToleranceFinding
from .linalg import adjoint, inv_sqrt, min_eigenvalue
from .pencil import (
  LinearPencil, Pencil, _coordinates, as_tuple,
  project, projection_margins, scalar_point,
)
from .reports import StructureReport, Verdict
from .sampling import default_rng, random_contraction, random_tuple, scale_into_interior
from .settings import DEFAULT_BUDGET, DEFAULT_LEVELS, DEFAULT_SEED, DEFAULT_TOL
from .types import IndexSet, Indices, MatrixTuple

EIGENSPACE_SLACK = 1e-7
LEAK_SLACK = 1e-7
DEFAULT_GRID = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
GRID_SLACK = 1e-8 # relative to eps^2, the scale of the smallest eigenvalue
SCALAR_RADII = (0.5, 0.9, 0.99, 0.999)
LAMBDA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)

@dataclass(frozen=True)
class IndexClassification:
  g: int
  Zplus: IndexSet
  Zminus: IndexSet

  @property
  def Z(self) -> IndexSet:
    return self.Zplus | self.Zminus

  @property
  def N(self) -> IndexSet:
    return frozenset(range(1, self.g + 1)) - self.Z

  def to_dict(self) -> dict:
    return {
      "g": self.g,
      "Zplus": sorted(self.Zplus),
      "Zminus": sorted(self.Zminus),
      "Z": sorted(self.Z),
      "N": sorted(self.N),
    }

def _unit_eigenspace(M:np.ndarray) -> np.ndarray:
  eigenvalues, V = np.linalg.eigh((M + adjoint(M)) / 2)
  return V[:, np.abs(eigenvalues - 1) <= EIGENSPACE_SLACK]

def classify_indices(p:Pencil) -> IndexClassification:
  """
  j in Z+ iff the eigenspace of C_j^* C_j at 1 is not inside ker C_{j+1}^*.
  j in Z- iff the eigenspace of C_j C_j^* at 1 is not inside ker C_{j-1}.
  """
  zplus, zminus = set(), set()
  for j in range(1, p.g):
    C, Cn = p.block(j), p.block(j+1)
    E = _unit_eigenspace(adjoint(C) @ C)
    if E.shape[1] and np.linalg.norm(adjoint(Cn) @ E, 2) > LEAK_SLACK:
      zplus.add(j)

  for j in range(2, p.g + 1):
    C, Cp = p.block(j), p.block(j-1)
    E = _unit_eigenspace(C @ adjoint(C))
    if E.shape[1] and np.linalg.norm(Cp @ E, 2) > LEAK_SLACK:
      zminus.add(j)

  return IndexClassification(p.g, frozenset(zplus), frozenset(zminus))

def _grid_feasible(p:LinearPencil, weights:Dict[int, float], eps:float) -> bool:
  point = np.zeros(p.g, dtype=np.complex128)
  for j, w in weights.items():
    point[j-1] = w
  return min_eigenvalue(p.L_eval(scalar_point(point))) >= -GRID_SLACK * eps ** 2

def _check_grid(grid) -> tuple:
  grid = tuple(float(e) for e in grid)
  if not grid or any(e <= 0 for e in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
    raise ValueError(f"The eps grid must be positive and strictly decreasing. Got: {grid}")
  return grid

def classify_oracle_grid(p:Pencil, grid:Sequence[float] = DEFAULT_GRID) -> IndexClassification:
  """Brute force: j leaves Z+ as soon as L_A(delta_j + eps delta_{j+1}) >= 0 for a grid eps."""
  grid = _check_grid(grid)
  zplus = {
    j for j in range(1, p.g)
    if not any(_grid_feasible(p, { j: 1, j+1: eps }, eps) for eps in grid)
  }
  zminus = {
    j for j in range(2, p.g + 1)
    if not any(_grid_feasible(p, { j-1: eps, j: 1 }, eps) for eps in grid)
  }
  return IndexClassification(p.g, frozenset(zplus), frozenset(zminus))

def two_sided_normal_set(p:Pencil, grid:Sequence[float] = DEFAULT_GRID) -> IndexSet:
  """k such that L_A(eps delta_{k-1} + delta_k + eps delta_{k+1}) >= 0 for some grid eps."""
  grid = _check_grid(grid)
  normal = set()
  for k in range(1, p.g + 1):
    for eps in grid:
      weights = { k: 1 }
      if k > 1:
        weights[k-1] = eps
      if k < p.g:
        weights[k+1] = eps
      if _grid_feasible(p, weights, eps):
        normal.add(k)
        break
  return frozenset(normal)

def classification_report(p:Pencil, grid:Sequence[float] = DEFAULT_GRID) -> StructureReport:
  """classify_indices cross-checked against the grid oracle and the two-sided criterion."""
  kernel = classify_indices(p)
  oracle = classify_oracle_grid(p, grid)
  two_sided = two_sided_normal_set(p, grid)

  report = StructureReport(kind="classify", trials=1)
  if (kernel.Zplus, kernel.Zminus) != (oracle.Zplus, oracle.Zminus):
    report.findings.append(
      f"Kernel criterion {kernel.to_dict()} disagrees with the eps-grid oracle {oracle.to_dict()}."
    )
  if two_sided != kernel.N:
    report.findings.append(
      f"Two-sided criterion gives N = {sorted(two_sided)} but the one-sided classification gives N = {sorted(kernel.N)}."
    )
  for finding in report.findings:
    warnings.warn(finding, ToleranceFinding)

  report.verdict = Verdict.UNKNOWN if report.findings else Verdict.CERTIFIED
  report.details.update({
    "classification": kernel.to_dict(),
    "oracle": oracle.to_dict(),
    "two_sided_N": sorted(two_sided),
    "grid": list(_check_grid(grid)),
  })
  return report

class AuxiliaryPencil(LinearPencil):
  """
  LMI in the coordinates outside F obtained by freezing the
  coordinates in F at the scalar centers b:
  Y is feasible iff (b on F, Y elsewhere) is in the spectrahedron.
  """
  def __init__(self, coefficients, g:int, fixed:Dict[int, complex]):
    super().__init__(coefficients)
    self.parent_g = g
    self.fixed = dict(fixed)
    self.free_indices = tuple(j for j in range(1, g + 1) if j not in self.fixed)

  def lift(self, Y) -> MatrixTuple:
    """(b I on F, Y elsewhere) as a tuple of the parent pencil."""
    Y = as_tuple(Y, self.g)
    n = Y.shape[1]
    T = np.zeros((self.parent_g, n, n), dtype=np.complex128)
    for j, c in self.fixed.items():
      T[j-1] = c * np.eye(n)
    for i, j in enumerate(self.free_indices):
      T[j-1] = Y[i]
    return T

def aux_pencil(p:Pencil, F:Indices, b_hat = None, tol:float = DEFAULT_TOL) -> AuxiliaryPencil:
  """
  B_j = P^{-1/2} A_j P^{-1/2} for j not in F, where
  P = I + sum_{j in F} b_j A_j + conj(b_j) A_j^*.
  """
  F = _coordinates(F, p.g)
  if len(F) == p.g:
    raise ShapeError("F must leave at least one free coordinate.")
  b_hat = np.zeros(len(F)) if b_hat is None else np.asarray(b_hat, dtype=np.complex128).reshape(-1)
  if len(b_hat) != len(F):
    raise ShapeError(f"Expected {len(F)} centers for F = {F}. Got: {len(b_hat)}")

  A = p.coefficients
  P = np.eye(p.d, dtype=np.complex128)
  for j, c in zip(F, b_hat):
    P += c * A[j-1] + np.conj(c) * adjoint(A[j-1])

  margin = min_eigenvalue(P)
  if margin <= tol:
    raise PreconditionError(
      f"The scalar point with centers {b_hat.tolist()} on F = {F} is not interior (margin {margin:.3e})."
    )
  R = inv_sqrt(P, tol)
  free = [ j for j in range(1, p.g + 1) if j not in F ]
  coefficients = np.stack([ R @ A[j-1] @ R for j in free ])
  return AuxiliaryPencil(coefficients, p.g, dict(zip(F, b_hat)))

def lifted_tuple(Y, I:Indices, lam, T = None) -> MatrixTuple:
  """
  Z_j = lam_j T_j for j in I and Y_j otherwise. With T omitted the
  identity is substituted, giving the tuple Y^lam.
  """
  Y = as_tuple(Y)
  g, n = Y.shape[0], Y.shape[1]
  I = _coordinates(I, g)
  lam = np.broadcast_to(np.asarray(lam, dtype=float), (len(I),)) if np.ndim(lam) == 0 else np.asarray(lam, dtype=float)
  if len(lam) != len(I):
    raise ShapeError(f"Expected {len(I)} scalars. Got: {len(lam)}")

  Z = Y.copy()
  for j, l in zip(I, lam):
    Z[j-1] = l * (np.eye(n) if T is None else as_tuple(T, g)[j-1])
  return Z

def _tally(report:StructureReport, full:float, source:str, T, tol:float) -> bool:
  """Records one trial; True when it landed in the tolerance zone."""
  report.trials += 1
  report.margins.append(full)
  if full < -tol:
    report.refute(T, full, source)
  return abs(full) <= tol

def _finish(report:StructureReport, tolerance_zone:int):
  if not report.refuted:
    report.verdict = Verdict.UNKNOWN if tolerance_zone else Verdict.CERTIFIED
  report.details["tolerance_zone"] = tolerance_zone

def detect_polydisc_summand(
  p:Pencil, J:Indices, budget:int = DEFAULT_BUDGET, seed:int = DEFAULT_SEED,
  levels:Sequence[int] = DEFAULT_LEVELS, tol:float = DEFAULT_TOL,
  lambda_grid:Sequence[float] = LAMBDA_GRID, lambda_samples:int = 10,
  progress:bool = False,
) -> StructureReport:
  """
  Searches for T with ||T_j|| < 1 on J and project(J, T) interior
  but T outside. Without one, the identity substitution test on a
  lambda grid backs the certificate, along with the contraction
  lift of each substituted tuple.
  """
  J = _coordinates(J, p.g)
  if not J:
    raise ShapeError("J must be non-empty.")
  rest = [ j for j in range(1, p.g + 1) if j not in J ]
  rng = default_rng(seed)
  levels = list(levels)

  report = StructureReport(kind="polydisc-summand", seed=seed, details={ "J": J })
  zone = 0

  def trial(T, source):
    nonlocal zone
    full, projected = projection_margins(p, J, T)
    if projected <= tol:
      return
    zone += _tally(report, full, source, T, tol)

  for r in SCALAR_RADII:
    T = scale_into_interior(p, project(J, scalar_point([r] * p.g)), tol)
    T[np.array(J) - 1] = r
    trial(T, f"scalar point r={r}")

  interiors = []
  for i in tqdm(range(budget), disable=not progress, desc="Polydisc summand"):
    n = levels[i % len(levels)]
    Y = scale_into_interior(p, project(J, random_tuple(p.g, n, rng) * rng.uniform(0.05, 1)), tol)
    T = Y.copy()
    for j in J:
      T[j-1] = random_contraction(n, rng, norm=rng.uniform(0.5, 0.999))
    trial(T, "random")
    if len(interiors) < lambda_samples:
      interiors.append(Y)

  if not rest:
    interiors = interiors or [ np.zeros((p.g, 1, 1), dtype=np.complex128) ]

  lift_failures = 0
  for Y in interiors:
    n = Y.shape[1]
    for lam in lambda_grid:
      substituted = lifted_tuple(Y, J, lam)
      substituted_margin = p.margin(substituted)
      zone += _tally(report, substituted_margin, f"identity substitution lambda={lam}", substituted, tol)

      contractions = np.stack([ random_contraction(n, rng, norm=1.0) for _ in range(p.g) ])
      Z = lifted_tuple(Y, J, lam, contractions)
      Z_margin = p.margin(Z)
      if substituted_margin >= -tol and Z_margin < -tol:
        lift_failures += 1
      if lam < 1:
        zone += _tally(report, Z_margin, f"contraction lift lambda={lam}", Z, tol)

  if lift_failures:
    finding = f"{lift_failures} contraction lifts left the spectrahedron although the identity substitution did not."
    report.findings.append(finding)
    warnings.warn(finding, ToleranceFinding)

  _finish(report, zone)
  return report

def build_nopi_tuple(p:Pencil, X, mu:int, ells:Optional[Sequence[int]] = None, tol:float = DEFAULT_TOL) -> MatrixTuple:
  """
  Level 2n tuple Z with
    Z_j = e1 e1^* (x) X_j          j < mu
    Z_mu = e1 e2^* (x) X_mu
    Z_{mu+1} = e1 e1^* (x) X_{mu+1}
    Z_j = e_l e_l^* (x) X_j        j > mu+1, l = ells[j - mu - 2]
  which lies in the closed spectrahedron whenever both halves
  (X_1..X_mu, 0..) and (0.., X_{mu+1}..X_g) do.
  """
  X = as_tuple(X, p.g)
  if not (1 <= mu <= p.g - 1):
    raise ShapeError(f"mu must lie in 1..{p.g - 1}. Got: {mu}")
  tail = max(p.g - mu - 1, 0)
  ells = [1] * tail if ells is None else [ int(l) for l in ells ]
  if len(ells) != tail or any(l not in (1, 2) for l in ells):
    raise ShapeError(f"ells needs {tail} entries from {{1, 2}}. Got: {ells}")

  left = range(1, mu + 1)
  right = range(mu + 1, p.g + 1)
  for name, zeroed in (("left", right), ("right", left)):
    margin = p.margin(project(zeroed, X))
    if margin < -tol:
      raise PreconditionError(f"The {name} half of X is outside the spectrahedron (margin {margin:.3e}).")

  E = lambda i, k: np.outer(np.eye(2)[i-1], np.eye(2)[k-1])
  Z = []
  for j in range(1, p.g + 1):
    if j < mu:
      unit = E(1, 1)
    elif j == mu:
      unit = E(1, 2)
    elif j == mu + 1:
      unit = E(1, 1)
    else:
      l = ells[j - mu - 2]
      unit = E(l, l)
    Z.append(np.kron(unit, X[j-1]))
  return np.stack(Z).astype(np.complex128)

def nopi_inverse_tuple(T, nu:int) -> MatrixTuple:
  """
  Z_j = e1 e1^* (x) T_j (j < nu), e1 e2^* (x) T_nu, e2 e2^* (x) T_j (j > nu).
  L_A(Z) is unitarily equivalent to L_A(T) plus an identity summand.
  """
  T = as_tuple(T)
  g = T.shape[0]
  if not (1 <= nu <= g):
    raise ShapeError(f"nu must lie in 1..{g}. Got: {nu}")
  units = { -1: np.diag([1, 0]), 0: np.array([[0, 1], [0, 0]]), 1: np.diag([0, 1]) }
  return np.stack([
    np.kron(units[int(np.sign(j - nu))], T[j-1]) for j in range(1, g + 1)
  ]).astype(np.complex128)

def check_nopi_inverse(p:Pencil, T, nu:int, slack:float = 1e-10):
  """(margin of Z, margin of T); min(margin T, 1) equals margin Z."""
  T = as_tuple(T, p.g)
  Z = nopi_inverse_tuple(T, nu)
  margin_Z, margin_T = p.margin(Z), p.margin(T)
  if abs(margin_Z - min(margin_T, 1.0)) > slack:
    warnings.warn(
      f"Companion tuple margin {margin_Z:.3e} differs from min(margin T, 1) = {min(margin_T, 1.0):.3e}.",
      ToleranceFinding,
    )
  return margin_Z, margin_T

def detect_direct_sum(
  p:Pencil, nu:int, budget:int = DEFAULT_BUDGET, seed:int = DEFAULT_SEED,
  levels:Sequence[int] = DEFAULT_LEVELS, tol:float = DEFAULT_TOL,
  progress:bool = False,
) -> StructureReport:
  """
  Searches for T whose halves (T_1..T_nu, 0..) and (0.., T_{nu+1}..)
  are interior while T is outside. Each random sample also
  contributes its doubled level tuple from build_nopi_tuple.
  """
  if p.g < 2 or not (1 <= nu < p.g):
    raise ShapeError(f"A split index needs 1 <= nu < g = {p.g}. Got: {nu}")

  left = list(range(1, nu + 1))
  right = list(range(nu + 1, p.g + 1))
  rng = default_rng(seed)
  levels = list(levels)

  report = StructureReport(kind="direct-sum", seed=seed, details={ "nu": nu })
  zone = 0
  closure_failures = 0

  def trial(T, source):
    nonlocal zone
    if p.margin(project(right, T)) <= tol or p.margin(project(left, T)) <= tol:
      return
    zone += _tally(report, p.margin(T), source, T, tol)

  def halves(T):
    return scale_into_interior(p, project(right, T), tol) + scale_into_interior(p, project(left, T), tol)

  for r in SCALAR_RADII:
    trial(halves(scalar_point([r] * p.g)), f"scalar point r={r}")

  tail = max(p.g - nu - 1, 0)
  for i in tqdm(range(budget), disable=not progress, desc="Direct sum"):
    n = levels[i % len(levels)]
    T = halves(random_tuple(p.g, n, rng) * rng.uniform(0.05, 1))
    trial(T, "random")

    ells = list(rng.integers(1, 3, size=tail))
    Z = build_nopi_tuple(p, T, nu, ells, tol)
    if p.margin(Z) < -tol:
      closure_failures += 1
    trial(Z, "nopi+")

  if closure_failures:
    finding = f"{closure_failures} doubled level tuples left the closed spectrahedron."
    report.findings.append(finding)
    warnings.warn(finding, ToleranceFinding)

  _finish(report, zone)
  return report
