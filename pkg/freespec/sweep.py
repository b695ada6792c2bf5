from typing import List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from .classify import classification_report, detect_direct_sum, detect_polydisc_summand
from .freemap import CandidateAutomorphism, SamplePlan, verify_automorphism
from .pencil import Pencil
from .reports import StructureReport, Verdict
from .sampling import default_rng
from .settings import DEFAULT_BUDGET
from .types import IndexSet

def random_candidates(
  g:int, count:int, rng = None,
  min_center:float = 0.1, max_center:float = 0.9,
) -> List[CandidateAutomorphism]:
  """
  Random Mobius-permutation candidates whose largest center
  modulus lies in [min_center, max_center).
  """
  if not (0 <= min_center < max_center < 1):
    raise ValueError(f"Need 0 <= min_center < max_center < 1. Got: {min_center}, {max_center}")
  rng = default_rng(rng)
  candidates = []
  for _ in range(count):
    perm = rng.permutation(g) + 1
    theta = rng.uniform(-np.pi, np.pi, size=g)
    moduli = rng.uniform(0, max_center, size=g)
    moduli[rng.integers(g)] = rng.uniform(min_center, max_center)
    b = moduli * np.exp(2j * np.pi * rng.uniform(size=g))
    candidates.append(CandidateAutomorphism(perm, theta, b))
  return candidates

def trivial_candidates(g:int, count:int, rng = None) -> List[CandidateAutomorphism]:
  rng = default_rng(rng)
  return [
    CandidateAutomorphism.trivial(np.exp(1j * rng.uniform(-np.pi, np.pi, size=g)))
    for _ in range(count)
  ]

def triviality_sweep(
  p:Pencil, candidates:Sequence[CandidateAutomorphism],
  plan:Optional[SamplePlan] = None, budget:int = DEFAULT_BUDGET,
  summands:Optional[Sequence[IndexSet]] = None,
) -> StructureReport:
  """
  Small-scale triviality audit: when no detector finds a
  distinguished polydisc summand or a coordinate direct sum, every
  nontrivial candidate should be refuted and every trivial one kept.

  summands defaults to the singletons {j}.
  """
  plan = plan or SamplePlan()
  report = StructureReport(kind="sweep", seed=plan.seed)

  classification = classification_report(p)
  report.findings += classification.findings

  summands = [ {j} for j in range(1, p.g + 1) ] if summands is None else summands
  detectors = []
  for J in summands:
    r = detect_polydisc_summand(p, J, budget=budget, seed=plan.seed, levels=plan.levels, tol=plan.tol)
    detectors.append({ "kind": r.kind, "J": sorted(J), "verdict": r.verdict.value, "witness_margin": r.witness_margin })
    report.findings += r.findings
  for nu in range(1, p.g):
    r = detect_direct_sum(p, nu, budget=budget, seed=plan.seed, levels=plan.levels, tol=plan.tol)
    detectors.append({ "kind": r.kind, "nu": nu, "verdict": r.verdict.value, "witness_margin": r.witness_margin })
    report.findings += r.findings

  hypotheses = all(d["verdict"] == Verdict.REFUTED.value for d in detectors)

  rows = []
  unexpected = 0
  for candidate in tqdm(candidates, disable=not plan.progress, desc="Sweep"):
    verdict = verify_automorphism(p, candidate, plan)
    trivial = candidate.is_trivial(plan.tol)
    report.trials += 1
    if trivial == verdict.refuted:
      unexpected += 1
    rows.append({
      "candidate": candidate.to_dict(),
      "trivial": trivial,
      "status": verdict.status,
      "witness_source": verdict.witness_source,
      "witness_margin": verdict.witness_margin,
    })

  if not hypotheses:
    report.findings.append("A polydisc summand or direct sum was not refuted; the rigidity hypotheses are not established.")
  if unexpected:
    report.findings.append(f"{unexpected} candidates were not classified as expected (trivial kept, nontrivial refuted).")

  report.verdict = Verdict.CERTIFIED if hypotheses and not unexpected else Verdict.UNKNOWN
  report.details.update({
    "classification": classification.details["classification"],
    "detectors": detectors,
    "hypotheses_hold": hypotheses,
    "candidates": rows,
    "unexpected": unexpected,
  })
  return report
