import pytest

import numpy as np

from freespec.freemap import CandidateAutomorphism, SamplePlan
from freespec.pencil import chain_pencil, split_pencil
from freespec.reports import Verdict
from freespec.sampling import default_rng
from freespec.sweep import random_candidates, trivial_candidates, triviality_sweep

def plan():
  return SamplePlan(levels=(1, 2), interior_count=5, nilpotent_count=3, parallel=1, seed=2)

def test_random_candidates():
  candidates = random_candidates(3, 20, default_rng(0), min_center=0.2, max_center=0.6)
  assert len(candidates) == 20
  for c in candidates:
    assert 0.2 <= np.max(np.abs(c.b)) < 0.6
    assert sorted(c.perm) == [1, 2, 3]
    assert not c.is_trivial()

  with pytest.raises(ValueError):
    random_candidates(2, 1, min_center=0.5, max_center=0.4)
  with pytest.raises(ValueError):
    random_candidates(2, 1, max_center=1.0)

def test_trivial_candidates():
  for c in trivial_candidates(2, 5, default_rng(1)):
    assert c.is_trivial()

def test_sweep_on_chain():
  rng = default_rng(5)
  candidates = random_candidates(2, 3, rng) + trivial_candidates(2, 2, rng)
  report = triviality_sweep(chain_pencil(), candidates, plan(), budget=5)

  assert report.verdict == Verdict.CERTIFIED
  assert report.trials == 5
  assert report.details["hypotheses_hold"]
  assert report.details["unexpected"] == 0
  assert report.details["classification"]["Zplus"] == [1]
  assert [ row["trivial"] for row in report.details["candidates"] ] == [False] * 3 + [True] * 2
  assert [ row["status"] for row in report.details["candidates"] ] == ["FAIL"] * 3 + ["PASS"] * 2

def test_sweep_on_split_lacks_hypotheses():
  candidates = [ CandidateAutomorphism([1, 2], b=[0.5, 0]) ]
  report = triviality_sweep(split_pencil(), candidates, plan(), budget=5)

  assert report.verdict == Verdict.UNKNOWN
  assert not report.details["hypotheses_hold"]
  assert report.details["unexpected"] == 1
  assert len(report.findings) == 2
