import json
import os

import pytest
from click.testing import CliRunner

from freespec_cli import main

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")

def data(name):
  return os.path.join(DATA, name)

def run(*args):
  return CliRunner().invoke(main, [ str(a) for a in args ])

def run_json(*args):
  result = run("--format", "json", *args)
  return result, json.loads(result.output)

def test_classify_chain():
  result, doc = run_json("classify", data("chain.json"))
  assert result.exit_code == 0
  assert doc["schema"] == "freespec/1"
  assert doc["command"]["verb"] == "classify"
  assert doc["verdict"] == "Certified-at-scale"
  assert doc["summary"]["Z+"] == [1]
  assert doc["summary"]["Z-"] == [2]
  assert doc["summary"]["N"] == []

  result, doc = run_json("classify", data("split.json"))
  assert doc["summary"]["N"] == [1, 2]

def test_member():
  result, doc = run_json("member", data("disc.json"), data("x05.json"))
  assert result.exit_code == 0
  assert doc["verdict"] == "Interior"
  assert doc["result"]["margin"] == pytest.approx(0.5)

  result = run("member", data("chain.json"), data("x05.json"))
  assert result.exit_code == 2
  assert "ShapeError" in result.output

def test_eta():
  result, doc = run_json("eta", data("split.json"), 1)
  assert result.exit_code == 0
  assert doc["result"]["eta"] == pytest.approx(1, abs=1e-6)

  result, doc = run_json("eta", data("disc.json"), 1)
  assert doc["result"]["eta"] == "inf"

def test_verify_refutes_chain_candidate():
  result = run("-p", 1, "verify", data("chain.json"), data("candidate_b05.json"), "--interior-count", 5, "--no-nilpotent")
  assert result.exit_code == 1
  assert result.output.splitlines()[0] == "Refuted (FAIL)"
  assert "adjacent-pair@1" in result.output

def test_verify_keeps_trivial_candidate():
  result, doc = run_json("-p", 1, "verify", data("chain.json"), data("candidate_trivial.json"), "--interior-count", 5)
  assert result.exit_code == 0
  assert doc["status"] == "PASS"
  assert doc["verdict"] == "Certified-at-scale"
  assert doc["command"]["params"]["interior_count"] == 5

def test_normalize_and_compose():
  result, doc = run_json("normalize", data("candidate_b05.json"), "--pencil", data("chain.json"))
  assert result.exit_code == 0
  assert doc["result"]["fixed_support"] == [1]
  assert doc["result"]["fixed_support_within_N"] is False
  assert doc["result"]["stabilizing_power"]["n"] == 1

  result, doc = run_json("compose", data("candidate_b05.json"), data("candidate_b05.json"), "--invert-inner")
  assert result.exit_code == 0
  assert doc["summary"]["trivial"] is True

  result, doc = run_json("compose", data("candidate_b05.json"), data("candidate_b05.json"))
  assert doc["summary"]["trivial"] is False
  assert doc["summary"]["b"][0] == [pytest.approx(0.8), pytest.approx(0)]

def test_detect():
  result, doc = run_json("--budget", 5, "detect", data("chain.json"))
  assert result.exit_code == 1
  assert doc["status"] == "FAIL"
  assert doc["summary"]["direct-sum nu=1"] == "Refuted"

  result, doc = run_json("--budget", 5, "detect", data("split.json"), "--summand", "1", "--nu", 1)
  assert result.exit_code == 0
  assert doc["verdict"] == "Certified-at-scale"

def test_caratheodory():
  result, doc = run_json("caratheodory")
  assert result.exit_code == 0
  assert doc["status"] == "PASS"
  assert doc["summary"]["norm"] == pytest.approx(1)

  result = run("caratheodory", "--c0", "0.3+0.4j", "--weights", "1,0.5,0.8")
  assert result.exit_code in (0, 1)

  result = run("caratheodory", "--c0", "1.5")
  assert result.exit_code == 2

  result, doc = run_json("caratheodory", "--c0", "0.3+0.4j", "--weights", "1,0.5j,-0.8")
  assert result.exit_code in (0, 1)
  assert doc["summary"]["norm"] == pytest.approx(1)

  result = run("caratheodory", "--weights", "1,x")
  assert result.exit_code == 2

def test_sample():
  result, doc = run_json("sample", data("chain.json"), "--kind", "single-shift")
  assert result.exit_code == 0
  assert doc["verdict"] == "4 structured tuples"
  assert doc["summary"] == { "Boundary": 4 }

def test_sweep():
  result, doc = run_json(
    "--budget", 5, "--levels", "1,2",
    "sweep", data("chain.json"), "--count", 2, "--trivial-count", 1, "--interior-count", 5,
  )
  assert result.exit_code == 0
  assert doc["summary"]["candidates"] == 3
  assert doc["summary"]["hypotheses hold"] is True
  assert doc["summary"]["unexpected"] == 0
  assert doc["verdict"] == "Certified-at-scale"

def test_out_file(tmp_path):
  out = tmp_path / "report.json"
  result = run("--format", "json", "--out", out, "classify", data("disc.json"))
  assert result.exit_code == 0
  assert result.output == ""
  doc = json.loads(out.read_text())
  assert doc["summary"]["N"] == [1]

def test_input_errors(tmp_path):
  bad = tmp_path / "bad.json"
  bad.write_text("{ not json")
  result = run("classify", bad)
  assert result.exit_code == 2
  assert "SchemaError" in result.output

  heavy = tmp_path / "heavy.json"
  heavy.write_text(json.dumps({ "schema": "freespec/1", "dims": [1, 1], "C": [ [[[2, 0]]] ] }))
  result = run("classify", heavy)
  assert result.exit_code == 2
  assert "NormViolationError" in result.output

  result = run("--rescale-norms", "classify", heavy)
  assert result.exit_code == 0

  result = run("classify", tmp_path / "missing.json")
  assert result.exit_code == 2

  result = run("--levels", "0,1", "classify", data("disc.json"))
  assert result.exit_code == 2

def _without_wall_time(doc):
  doc = dict(doc)
  doc.pop("wall_time")
  return doc

def test_same_seed_reports_match():
  args = ("-p", 1, "--seed", 7, "verify", data("chain.json"), data("candidate_b05.json"), "--interior-count", 5)
  _, first = run_json(*args)
  _, second = run_json(*args)
  assert _without_wall_time(first) == _without_wall_time(second)

  _, first = run_json("--budget", 5, "detect", data("chain.json"))
  _, second = run_json("--budget", 5, "detect", data("chain.json"))
  assert _without_wall_time(first) == _without_wall_time(second)

def test_witnesses_recheck_through_member(tmp_path):
  _, doc = run_json("--budget", 5, "detect", data("chain.json"))
  refuted = [ d for d in doc["result"]["detectors"] if d["verdict"] == "Refuted" ]
  assert refuted
  for i, detector in enumerate(refuted):
    path = tmp_path / f"witness{i}.json"
    path.write_text(json.dumps(detector["witness"]))
    result, member = run_json("member", data("chain.json"), path)
    assert result.exit_code == 0
    assert member["verdict"] == "Outside"
    assert member["result"]["margin"] == pytest.approx(detector["witness_margin"])

  _, doc = run_json("-p", 1, "verify", data("chain.json"), data("candidate_b05.json"), "--interior-count", 5)
  path = tmp_path / "image.json"
  path.write_text(json.dumps(doc["result"]["details"]["witness_image"]))
  _, member = run_json("member", data("chain.json"), path)
  assert member["verdict"] == "Outside"
  assert member["result"]["margin"] == pytest.approx(doc["result"]["witness_margin"])

def test_empty_verify_run():
  result, doc = run_json(
    "-p", 1, "verify", data("chain.json"), data("candidate_b05.json"),
    "--interior-count", 0, "--no-structured", "--no-nilpotent",
  )
  assert result.exit_code == 0
  assert doc["verdict"] == "Unknown"
  assert doc["summary"]["trials"] == 0
  assert doc["result"]["samples"] == []
  assert doc["result"]["margins"]["count"] == 0
  assert doc["result"]["witness"] is None
