from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from .codec import encode_tuple, to_jsonable
from .settings import SCHEMA
from .types import MatrixTuple

class Verdict(Enum):
  CERTIFIED = "Certified-at-scale" # sampling evidence at the tested levels, never a proof
  REFUTED = "Refuted"
  UNKNOWN = "Unknown"

@dataclass
class SampleRecord:
  """One evaluated input of a verification or detection run."""
  source: str
  level: int
  input_verdict: Optional[str] = None
  input_margin: Optional[float] = None
  output_verdict: Optional[str] = None
  output_margin: Optional[float] = None
  passed: Optional[bool] = None
  error: Optional[str] = None

  def to_dict(self) -> Dict[str, Any]:
    return {
      "source": self.source,
      "level": self.level,
      "input_verdict": self.input_verdict,
      "input_margin": self.input_margin,
      "output_verdict": self.output_verdict,
      "output_margin": self.output_margin,
      "passed": self.passed,
      "error": self.error,
    }

@dataclass
class StructureReport:
  kind: str
  verdict: Verdict = Verdict.UNKNOWN
  witness: Optional[MatrixTuple] = None
  witness_margin: Optional[float] = None
  witness_source: Optional[str] = None
  trials: int = 0
  margins: List[float] = field(default_factory=list)
  samples: List[SampleRecord] = field(default_factory=list)
  findings: List[str] = field(default_factory=list)
  details: Dict[str, Any] = field(default_factory=dict)
  seed: Optional[int] = None

  @property
  def refuted(self) -> bool:
    return self.verdict == Verdict.REFUTED

  @property
  def status(self) -> str:
    """PASS means not refuted."""
    return "FAIL" if self.refuted else "PASS"

  def refute(self, witness, margin:float, source:str):
    """Keeps the first witness found."""
    self.verdict = Verdict.REFUTED
    if self.witness is None:
      self.witness = np.asarray(witness)
      self.witness_margin = float(margin)
      self.witness_source = source

  def margin_summary(self) -> Dict[str, Any]:
    if not self.margins:
      return { "count": 0, "min": None, "max": None, "mean": None }
    margins = np.asarray(self.margins, dtype=float)
    return {
      "count": int(len(margins)),
      "min": float(margins.min()),
      "max": float(margins.max()),
      "mean": float(margins.mean()),
    }

  def to_dict(self) -> Dict[str, Any]:
    return to_jsonable({
      "schema": SCHEMA,
      "kind": self.kind,
      "verdict": self.verdict.value,
      "status": self.status,
      "witness": None if self.witness is None else encode_tuple(self.witness),
      "witness_margin": self.witness_margin,
      "witness_source": self.witness_source,
      "trials": self.trials,
      "margins": self.margin_summary(),
      "samples": [ s.to_dict() for s in self.samples ],
      "findings": list(self.findings),
      "details": self.details,
      "seed": self.seed,
    })
