"""
Dense complex matrix primitives.

Every other module goes through these helpers for Kronecker
assembly, Hermitian eigendecomposition and the three way
positive definite / semidefinite / indefinite decision so that
boundary calls share one tolerance convention:

  tol=None  -> DEFAULT_TOL * (1 + ||M||)  (scaled)
  tol=float -> used as an absolute threshold on eigenvalues
"""
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import (
  NotHermitianError, NotUnitaryError, PreconditionError, ShapeError, SingularMatrixError,
)
from .settings import DEFAULT_TOL
from .types import ComplexMatrix

HERMITIAN_SLACK = 1e-9

class PsdClass(Enum):
  POSITIVE_DEFINITE = "PositiveDefinite"
  PSD_WITH_KERNEL = "PositiveSemidefiniteWithKernel"
  INDEFINITE = "Indefinite"

class SpectralData(NamedTuple):
  eigenvalues: np.ndarray # ascending
  eigenvectors: np.ndarray # columns
  psd_class: PsdClass
  margin: float
  kernel: np.ndarray # columns with |eigenvalue| <= tol

def as_matrix(M) -> ComplexMatrix:
  M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
  if M.ndim != 2:
    raise ShapeError(f"Expected a matrix, got an array of shape {M.shape}.")
  if not np.all(np.isfinite(M)):
    raise ShapeError("Matrix contains non-finite entries.")
  return M

def adjoint(M:ComplexMatrix) -> ComplexMatrix:
  return np.conj(np.swapaxes(M, -1, -2))

def kron(S:ComplexMatrix, T:ComplexMatrix) -> ComplexMatrix:
  """
  Kronecker product with the outer index taken from S.

  Block (i,j) of the result is S[i,j] * T. Rectangular inputs
  follow (sr x sc) (x) (tr x tc) -> (sr*tr x sc*tc).
  """
  S = as_matrix(S)
  T = as_matrix(T)
  return np.kron(S, T)

def op_norm(M:ComplexMatrix) -> float:
  """Largest singular value. Empty matrices have norm 0."""
  M = as_matrix(M)
  if M.size == 0:
    return 0.0
  return float(np.linalg.norm(M, 2))

def classify_margin(margin:float, tol:float) -> PsdClass:
  if margin > tol:
    return PsdClass.POSITIVE_DEFINITE
  elif margin < -tol:
    return PsdClass.INDEFINITE
  return PsdClass.PSD_WITH_KERNEL

def hermitian_part(M:ComplexMatrix) -> ComplexMatrix:
  """
  Returns (M + M*)/2 after checking that M is Hermitian
  up to HERMITIAN_SLACK * (1 + ||M||).
  """
  M = as_matrix(M)
  if M.shape[0] != M.shape[1]:
    raise ShapeError(f"Hermitian input must be square. Got: {M.shape}")
  asymmetry = op_norm(M - adjoint(M))
  bound = HERMITIAN_SLACK * (1 + op_norm(M))
  if asymmetry > bound:
    raise NotHermitianError(asymmetry, bound)
  return (M + adjoint(M)) / 2

def resolve_tol(M:ComplexMatrix, tol:Optional[float]) -> float:
  if tol is None:
    return DEFAULT_TOL * (1 + op_norm(M))
  if tol <= 0:
    raise ValueError(f"tol must be positive. Got: {tol}")
  return float(tol)

def hermitian_spectrum(M:ComplexMatrix, tol:Optional[float] = None) -> SpectralData:
  H = hermitian_part(M)
  tol = resolve_tol(H, tol)
  eigenvalues, eigenvectors = np.linalg.eigh(H)
  margin = float(eigenvalues[0]) if len(eigenvalues) else np.inf
  kernel = eigenvectors[:, np.abs(eigenvalues) <= tol]
  return SpectralData(
    eigenvalues, eigenvectors,
    classify_margin(margin, tol), margin, kernel,
  )

def min_eigenvalue(M:ComplexMatrix) -> float:
  H = hermitian_part(M)
  if H.size == 0:
    return np.inf
  return float(np.linalg.eigvalsh(H)[0])

def inv_sqrt(M:ComplexMatrix, tol:Optional[float] = None) -> ComplexMatrix:
  """Inverse square root of a Hermitian positive definite matrix."""
  H = hermitian_part(M)
  tol = resolve_tol(H, tol)
  eigenvalues, V = np.linalg.eigh(H)
  if eigenvalues[0] <= tol:
    raise SingularMatrixError(
      f"inv_sqrt needs a positive definite input. Smallest eigenvalue: {eigenvalues[0]:.3e} (tol {tol:.1e})"
    )
  R = (V * (1.0 / np.sqrt(eigenvalues))) @ adjoint(V)
  return (R + adjoint(R)) / 2

def unitary_defect(U:ComplexMatrix) -> float:
  U = as_matrix(U)
  if U.shape[0] != U.shape[1]:
    return np.inf
  return op_norm(adjoint(U) @ U - np.eye(U.shape[0]))

def check_unitary(U:ComplexMatrix, tol:float = DEFAULT_TOL) -> ComplexMatrix:
  U = as_matrix(U)
  defect = unitary_defect(U)
  if defect > tol:
    raise NotUnitaryError(defect, tol)
  return U

def kernel_leakage(R:ComplexMatrix, Q:ComplexMatrix, tol:Optional[float] = None) -> float:
  """
  If R +/- Q >= 0 and R g = 0 then Q g = 0.

  Returns max ||Q g|| over an orthonormal basis of ker R.
  Raises PreconditionError when R +/- Q is not positive semidefinite.
  """
  R = hermitian_part(R)
  Q = hermitian_part(Q)
  for sign in (1, -1):
    spectrum = hermitian_spectrum(R + sign * Q, tol)
    if spectrum.psd_class == PsdClass.INDEFINITE:
      raise PreconditionError(f"R {'+' if sign > 0 else '-'} Q is not positive semidefinite (margin {spectrum.margin:.3e}).")

  kernel = hermitian_spectrum(R, tol).kernel
  if kernel.shape[1] == 0:
    return 0.0
  return float(np.max(np.linalg.norm(Q @ kernel, axis=0)))
