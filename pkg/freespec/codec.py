"""
JSON encoding for the "freespec/1" document schema.

Complex scalars are [re, im] pairs (a bare real is accepted) and
matrices are row-major nested lists of such pairs. Documents are
validated with pydantic models; failures raise SchemaError carrying
a JSON pointer to the offending value.
"""
from enum import Enum
import json
import os
import tempfile
from typing import Annotated, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
  AfterValidator, BaseModel, BeforeValidator, ConfigDict, Field,
  TypeAdapter, ValidationError, ValidationInfo,
  confloat, conint, conlist, field_validator, model_validator,
)
from pydantic_core import PydanticCustomError

from .caratheodory import FreeSeries
from .exceptions import SchemaError
from .pencil import Pencil, build_pencil
from .settings import DISC_MARGIN, SCHEMA
from .types import ComplexMatrix, MatrixTuple

Real = confloat(strict=True, allow_inf_nan=False)
PositiveInt = conint(strict=True, gt=0)

def _real(x):
  x = float(x)
  return int(x) if x.is_integer() and abs(x) < 2**53 else x

def _promote(value):
  return value if isinstance(value, (list, tuple)) else [ value, 0 ]

def _as_matrix(rows) -> ComplexMatrix:
  widths = sorted(set(len(row) for row in rows))
  if len(widths) != 1:
    raise ValueError(f"Rows have unequal lengths: {widths}")
  return np.array(rows, dtype=np.complex128)

Complex = Annotated[
  Tuple[Real, Real],
  BeforeValidator(_promote),
  AfterValidator(lambda pair: complex(*pair)),
]
Matrix = Annotated[
  conlist(conlist(Complex, min_length=1), min_length=1),
  AfterValidator(_as_matrix),
]

def _located(pointer:str, message:str) -> PydanticCustomError:
  return PydanticCustomError("freespec_schema", message, { "pointer": pointer })

class Document(BaseModel):
  model_config = ConfigDict(populate_by_name=True)

  schema_tag: Optional[Literal[SCHEMA]] = Field(None, alias="schema")

class PencilDoc(Document):
  dims: conlist(PositiveInt, min_length=2)
  C: List[Matrix]

  @model_validator(mode="after")
  def _chain(self):
    dims = self.dims
    if len(self.C) != len(dims) - 1:
      raise _located("/C", f"Expected {len(dims) - 1} blocks for dims {dims}. Got: {len(self.C)}")
    for j, C in enumerate(self.C):
      if C.shape != (dims[j], dims[j+1]):
        raise _located(
          f"/C/{j}",
          f"C_{j+1} is {C.shape[0]}x{C.shape[1]} but dims {dims} require {dims[j]}x{dims[j+1]}."
        )
    return self

class TupleDoc(Document):
  n: Optional[PositiveInt] = None
  X: conlist(Matrix, min_length=1)

  @model_validator(mode="after")
  def _square(self):
    n = self.n or self.X[0].shape[0]
    for j, M in enumerate(self.X):
      if M.shape != (n, n):
        raise _located(f"/X/{j}", f"Expected a {n}x{n} matrix. Got: {M.shape[0]}x{M.shape[1]}")
    return self

class SeriesTerm(BaseModel):
  word: List[PositiveInt]
  coeff: Complex

  @field_validator("word")
  @classmethod
  def _letters(cls, word, info:ValidationInfo):
    g = (info.context or {}).get("g")
    if g is not None and any(x > g for x in word):
      raise ValueError(f"Expected letters in 1..{g}. Got: {word}")
    return word

class CandidateDoc(Document):
  perm: conlist(PositiveInt, min_length=1)
  theta: Optional[List[Real]] = None
  b: Optional[List[Complex]] = None
  higher: Optional[List[Optional[List[SeriesTerm]]]] = None

  @model_validator(mode="after")
  def _consistent(self):
    g = len(self.perm)
    if sorted(self.perm) != list(range(1, g + 1)):
      raise _located("/perm", f"Expected a permutation of 1..{g}. Got: {self.perm}")
    for name in ("theta", "b", "higher"):
      value = getattr(self, name)
      if value is not None and len(value) != g:
        raise _located(f"/{name}", f"Expected one entry per coordinate ({g}). Got: {len(value)}")
    for j, z in enumerate(self.b or ()):
      if abs(z) >= 1 - DISC_MARGIN:
        raise _located(f"/b/{j}", f"Center {z} is not in the open unit disc.")
    for j, terms in enumerate(self.higher or ()):
      for i, term in enumerate(terms or ()):
        if any(x > g for x in term.word):
          raise _located(f"/higher/{j}/{i}/word", f"Expected letters in 1..{g}. Got: {term.word}")
    return self

_COMPLEX = TypeAdapter(Complex)
_PENCIL = TypeAdapter(PencilDoc)
_TUPLE = TypeAdapter(TupleDoc)
_SERIES = TypeAdapter(List[SeriesTerm])
_CANDIDATE = TypeAdapter(CandidateDoc)

def validate(adapter:TypeAdapter, value, pointer:str = "", **context):
  """Run a pydantic adapter, turning the first error into a located SchemaError."""
  try:
    return adapter.validate_python(value, context=(context or None))
  except ValidationError as err:
    error = err.errors()[0]
    location = "".join(f"/{part}" for part in error["loc"])
    location += (error.get("ctx") or {}).get("pointer", "")
    raise SchemaError(pointer + location, error["msg"]) from None

def encode_complex(z) -> list:
  z = complex(z)
  return [ _real(z.real), _real(z.imag) ]

def decode_complex(value, pointer:str = "") -> complex:
  return validate(_COMPLEX, value, pointer)

def encode_matrix(M:ComplexMatrix) -> list:
  M = np.atleast_2d(M)
  return [ [ encode_complex(z) for z in row ] for row in M ]

def encode_tuple(T:MatrixTuple) -> dict:
  T = np.asarray(T)
  return { "schema": SCHEMA, "n": int(T.shape[1]), "X": [ encode_matrix(X) for X in T ] }

def decode_tuple(doc, pointer:str = "") -> MatrixTuple:
  return np.stack(validate(_TUPLE, doc, pointer).X)

def encode_pencil(p:Pencil) -> dict:
  return {
    "schema": SCHEMA,
    "dims": list(p.dims),
    "C": [ encode_matrix(C) for C in p.blocks ],
  }

def decode_pencil(doc, rescale:bool = False, pointer:str = "") -> Pencil:
  doc = validate(_PENCIL, doc, pointer)
  return build_pencil(doc.dims, doc.C, rescale=rescale)

def encode_series(series:FreeSeries) -> list:
  return [ { "word": list(word), "coeff": encode_complex(coeff) } for word, coeff in series ]

def series_from_terms(terms:List[SeriesTerm], g:int) -> FreeSeries:
  coeffs = {}
  for term in terms:
    word = tuple(term.word)
    coeffs[word] = coeffs.get(word, 0) + term.coeff
  return FreeSeries(g, coeffs)

def decode_series(value, g:int, pointer:str = "") -> FreeSeries:
  return series_from_terms(validate(_SERIES, value, pointer, g=g), g)

def decode_candidate(doc, pointer:str = "") -> CandidateDoc:
  return validate(_CANDIDATE, doc, pointer)

def to_jsonable(value):
  """Recursively replace numpy scalars, complex numbers and enums."""
  if isinstance(value, dict):
    return { str(k): to_jsonable(v) for k, v in value.items() }
  if isinstance(value, (list, tuple)):
    return [ to_jsonable(v) for v in value ]
  if isinstance(value, (set, frozenset)):
    return sorted(to_jsonable(v) for v in value)
  if isinstance(value, np.ndarray):
    return to_jsonable(value.tolist())
  if isinstance(value, (complex, np.complexfloating)):
    return encode_complex(value)
  if isinstance(value, np.bool_):
    return bool(value)
  if isinstance(value, np.integer):
    return int(value)
  if isinstance(value, (float, np.floating)):
    value = float(value)
    if np.isinf(value):
      return "inf" if value > 0 else "-inf"
    if np.isnan(value):
      return None
    return value
  if isinstance(value, Enum):
    return value.value
  return value

def dumps(doc) -> str:
  return json.dumps(to_jsonable(doc), indent=2, sort_keys=True)

def load_json(path:str):
  try:
    with open(path, "rt") as f:
      return json.load(f)
  except json.JSONDecodeError as err:
    raise SchemaError("", f"{path} is not valid JSON: {err}")

def write_atomic(path:str, text:str):
  directory = os.path.dirname(os.path.abspath(path))
  fd, tmp = tempfile.mkstemp(dir=directory, prefix=".freespec-", suffix=".tmp")
  try:
    with os.fdopen(fd, "wt") as f:
      f.write(text)
    os.replace(tmp, path)
  except BaseException:
    if os.path.exists(tmp):
      os.unlink(tmp)
    raise

def load_pencil(path:str, rescale:bool = False) -> Pencil:
  return decode_pencil(load_json(path), rescale=rescale)

def load_tuple(path:str) -> MatrixTuple:
  return decode_tuple(load_json(path))
