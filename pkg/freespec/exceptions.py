class FreespecError(Exception):
  """Base class for every error raised by freespec."""
  pass

class ShapeError(FreespecError, ValueError):
  pass

class NormViolationError(FreespecError, ValueError):
  """A pencil block does not have operator norm one."""
  def __init__(self, index, norm, tol):
    self.index = index
    self.norm = norm
    super().__init__(
      f"C_{index} has norm {norm:.12g} which is not within {tol:g} of 1. "
      "Pass rescale=True (--rescale-norms) to normalize it."
    )

class NotHermitianError(FreespecError, ValueError):
  def __init__(self, asymmetry, bound):
    self.asymmetry = asymmetry
    super().__init__(
      f"Matrix is not Hermitian: ||M - M*|| = {asymmetry:.3e} exceeds {bound:.3e}."
    )

class NotUnitaryError(FreespecError, ValueError):
  def __init__(self, defect, tol):
    self.defect = defect
    super().__init__(f"Matrix is not unitary: ||U*U - I|| = {defect:.3e} > {tol:g}.")

class NotUnimodularError(FreespecError, ValueError):
  pass

class PreconditionError(FreespecError, ValueError):
  pass

class SchemaError(FreespecError, ValueError):
  """Malformed JSON input. `pointer` is a JSON pointer into the document."""
  def __init__(self, pointer, message):
    self.pointer = pointer or "/"
    super().__init__(f"{self.pointer}: {message}")

class SingularMatrixError(FreespecError, ArithmeticError):
  pass

class NotNilpotentError(FreespecError, ArithmeticError):
  pass

class NonConvergenceError(FreespecError, ArithmeticError):
  pass

class ExtractionError(FreespecError, ArithmeticError):
  """A black box free map failed on one of the extraction inputs."""
  pass

class ToleranceFinding(UserWarning):
  """A numerical observation near the tolerance that deserves a look."""
  pass
