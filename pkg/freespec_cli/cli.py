from dataclasses import dataclass, field
import functools
import multiprocessing as mp
import time
from typing import Any, Dict, List, Optional
import warnings

import click
import numpy as np

from freespec import caratheodory as ca
from freespec import classify as cl
from freespec import freemap as fm
from freespec import pencil as pc
from freespec.codec import (
  dumps, encode_matrix, encode_tuple, load_json,
  load_pencil, load_tuple, to_jsonable, write_atomic,
)
from freespec.exceptions import ToleranceFinding
from freespec.reports import Verdict
from freespec.settings import (
  DEFAULT_BUDGET, DEFAULT_LEVELS, DEFAULT_PARALLEL,
  DEFAULT_SEED, DEFAULT_TOL, SCHEMA,
)
from freespec.sweep import random_candidates, trivial_candidates, triviality_sweep

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

RIGIDITY_MODULI = (1e-3, 1e-2, 1e-1)
RIGIDITY_PHASES = 8
PERTURBATION = 1e-2

def yellow(txt:str) -> str:
  return click.style(txt, fg="yellow")

def red(txt:str) -> str:
  return click.style(txt, fg="red")

class TupleN(click.ParamType):
  """A command line option type consisting of comma-separated integers."""
  name = 'tupleN'
  def convert(self, value, param, ctx):
    if isinstance(value, str):
      try:
        value = tuple(map(int, value.split(',')))
      except ValueError:
        self.fail(f"'{value}' does not contain a comma delimited list of integers.")
    return value

class FloatList(click.ParamType):
  """A command line option type consisting of comma-separated floats."""
  name = 'floats'
  def convert(self, value, param, ctx):
    if isinstance(value, str):
      try:
        value = tuple(map(float, value.split(',')))
      except ValueError:
        self.fail(f"'{value}' does not contain a comma delimited list of numbers.")
    return value

class ComplexType(click.ParamType):
  """A complex scalar written like 0.3+0.4j."""
  name = 'complex'
  def convert(self, value, param, ctx):
    if isinstance(value, str):
      try:
        value = complex(value.replace(" ", ""))
      except ValueError:
        self.fail(f"'{value}' is not a complex number (e.g. 0.3+0.4j).")
    return value

class ComplexList(click.ParamType):
  """Comma-separated complex scalars, e.g. 1,0.5j,0.8."""
  name = 'complexes'
  def convert(self, value, param, ctx):
    if isinstance(value, str):
      try:
        value = tuple(complex(x.replace(" ", "")) for x in value.split(','))
      except ValueError:
        self.fail(f"'{value}' does not contain a comma delimited list of complex numbers.")
    return value

@dataclass
class RunReport:
  """Everything one command invocation reports."""
  verb: str
  verdict: str
  status: Optional[str] = None
  summary: Dict[str, Any] = field(default_factory=dict)
  result: Dict[str, Any] = field(default_factory=dict)
  findings: List[str] = field(default_factory=list)
  params: Dict[str, Any] = field(default_factory=dict)
  seed: Optional[int] = None
  wall_time: float = 0.0

  @property
  def exit_code(self) -> int:
    return EXIT_REFUTED if self.status == "FAIL" else EXIT_OK

  def to_dict(self) -> dict:
    return to_jsonable({
      "schema": SCHEMA,
      "command": { "verb": self.verb, "params": self.params },
      "verdict": self.verdict,
      "status": self.status,
      "summary": self.summary,
      "result": self.result,
      "findings": self.findings,
      "seed": self.seed,
      "wall_time": self.wall_time,
    })

def emit(run:RunReport, fmt:str = "text") -> str:
  if fmt == "json":
    return dumps(run.to_dict())

  headline = run.verdict if run.status is None else f"{run.verdict} ({run.status})"
  lines = [ headline if run.status != "FAIL" else red(headline) ]
  lines.append(f"  command: {run.verb}")
  for key, value in run.summary.items():
    lines.append(f"  {key}: {to_jsonable(value)}")
  lines.append(f"  seed: {run.seed}")
  lines.append(f"  wall time: {run.wall_time:.2f} sec")
  for finding in run.findings:
    lines.append(yellow(f"  warning: {finding}"))
  return "\n".join(lines)

def reported(fn):
  """
  Runs a command body returning a RunReport, then prints or writes it
  and exits with the report's code. Input errors exit 2 and numeric
  errors exit 3.
  """
  @functools.wraps(fn)
  def wrapped(ctx, *args, **kwargs):
    start = time.time()
    code = None
    with warnings.catch_warnings(record=True) as caught:
      warnings.simplefilter("always", ToleranceFinding)
      try:
        run = fn(ctx, *args, **kwargs)
      except (ArithmeticError, np.linalg.LinAlgError) as err:
        message, code = err, EXIT_NUMERIC
      except (ValueError, OSError) as err:
        message, code = err, EXIT_USAGE

    if code is not None:
      click.echo(red(f"freespec {ctx.info_name}: {type(message).__name__}: {message}"), err=True)
      ctx.exit(code)

    for w in caught:
      if issubclass(w.category, ToleranceFinding) and str(w.message) not in run.findings:
        run.findings.append(str(w.message))

    run.verb = ctx.info_name
    run.params = dict(ctx.parent.params, **ctx.params)
    run.seed = ctx.obj["seed"]
    run.wall_time = time.time() - start

    text = emit(run, ctx.obj["format"])
    if ctx.obj["out"]:
      write_atomic(ctx.obj["out"], text + "\n")
    else:
      click.echo(text)
    ctx.exit(run.exit_code)
  return wrapped

def _pencil(ctx, path:str) -> pc.Pencil:
  return load_pencil(path, rescale=ctx.obj["rescale_norms"])

def _candidate(path:str) -> fm.CandidateAutomorphism:
  return fm.CandidateAutomorphism.from_dict(load_json(path))

@click.group()
@click.option("-p", "--parallel", default=DEFAULT_PARALLEL, help="Run with this number of parallel processes. If 0, use number of cores.", show_default=True)
@click.option("--tol", default=DEFAULT_TOL, type=float, help="Absolute eigenvalue tolerance of the membership oracle.", show_default=True)
@click.option("--seed", default=DEFAULT_SEED, type=int, help="Seed of every random sampler. Reports record it.", show_default=True)
@click.option("--budget", default=DEFAULT_BUDGET, type=int, help="Random samples per structure detector.", show_default=True)
@click.option("--levels", default=",".join(map(str, DEFAULT_LEVELS)), type=TupleN(), help="Matrix levels n to sample at. e.g. 1,2,3", show_default=True)
@click.option("--format", "fmt", default="text", type=click.Choice(["text", "json"]), help="Output format.", show_default=True)
@click.option("--rescale-norms", is_flag=True, default=False, help="Divide each pencil block by its norm instead of rejecting blocks whose norm is not one.")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write the report to this file (atomically) instead of stdout.")
@click.option("--progress", is_flag=True, default=False, help="Show progress bars on sampling loops.")
@click.version_option(version="0.1.0")
@click.pass_context
def main(ctx, parallel, tol, seed, budget, levels, fmt, rescale_norms, out, progress):
  """
  Numerical toolkit for hyper-Reinhardt free spectrahedra.

  Reads pencils, matrix tuples and candidate automorphisms
  as "freespec/1" JSON documents and tests membership,
  rigidity index sets, structure (polydisc summands and
  coordinate direct sums) and candidate automorphisms.

  Exit codes: 0 ok, 1 refuted, 2 bad input, 3 numeric failure.
  """
  parallel = int(parallel)
  if parallel == 0:
    parallel = mp.cpu_count()
  if any(n < 1 for n in levels) or len(levels) == 0:
    raise click.BadParameter(f"Levels must be positive integers. Got: {levels}", param_hint="--levels")

  ctx.ensure_object(dict)
  ctx.obj.update({
    "parallel": max(min(parallel, mp.cpu_count()), 1),
    "tol": tol,
    "seed": seed,
    "budget": budget,
    "levels": tuple(levels),
    "format": fmt,
    "rescale_norms": rescale_norms,
    "out": out,
    "progress": progress,
  })

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid", type=FloatList(), default=None, help="Decreasing eps grid of the brute force oracle. e.g. 1,0.1,0.01")
@click.pass_context
@reported
def classify(ctx, pencil, grid):
  """Compute Z+, Z- and N, cross-checked against the eps-grid oracle."""
  p = _pencil(ctx, pencil)
  report = cl.classification_report(p, grid or cl.DEFAULT_GRID)
  classification = report.details["classification"]
  return RunReport(
    verb="classify",
    verdict=report.verdict.value,
    summary={
      "Z+": classification["Zplus"],
      "Z-": classification["Zminus"],
      "N": classification["N"],
      "oracle": "agrees" if not report.findings else "disagrees",
    },
    result=report.to_dict(),
    findings=list(report.findings),
  )

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.argument("tuple_path", metavar="TUPLE", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@reported
def member(ctx, pencil, tuple_path):
  """Decide Interior, Boundary or Outside for a matrix tuple."""
  p = _pencil(ctx, pencil)
  X = load_tuple(tuple_path)
  m = p.membership(X, ctx.obj["tol"])
  return RunReport(
    verb="member",
    verdict=m.verdict.value,
    summary={ "margin": m.margin, "level": int(X.shape[1]), "kernel dim": 0 if m.kernel is None else int(m.kernel.shape[1]) },
    result={ "verdict": m.verdict.value, "margin": m.margin, "level": int(X.shape[1]) },
  )

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.argument("k", type=int)
@click.option("--mode", default="full", type=click.Choice([ m.value for m in pc.EtaMode ]), help="Which other coordinates are raised together.", show_default=True)
@click.pass_context
@reported
def eta(ctx, pencil, k, mode):
  """Largest eta with delta_k + eta (other coordinates) in the closed scalar spectrahedron."""
  p = _pencil(ctx, pencil)
  radius = pc.eta_radius(p, k, mode)
  return RunReport(
    verb="eta",
    verdict=f"eta = {radius:.10g}",
    summary={ "k": k, "mode": mode },
    result={ "k": k, "mode": mode, "eta": radius },
  )

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.argument("candidate", type=click.Path(exists=True, dir_okay=False))
@click.option("--interior-count", default=200, help="Number of random interior samples.", show_default=True)
@click.option("--structured/--no-structured", default=True, help="Include the structured boundary tuples.", show_default=True)
@click.option("--nilpotent/--no-nilpotent", default=True, help="Include nilpotent weighted shift tuples.", show_default=True)
@click.option("--lenient", is_flag=True, default=False, help="Evaluate truncated series without checking nilpotency.")
@click.pass_context
@reported
def verify(ctx, pencil, candidate, interior_count, structured, nilpotent, lenient):
  """
  Search for a refutation of a candidate automorphism.

  PASS means no sampled input refuted it, never a proof.
  """
  p = _pencil(ctx, pencil)
  phi = _candidate(candidate)
  plan = fm.SamplePlan(
    levels=ctx.obj["levels"],
    interior_count=interior_count,
    include_structured=structured,
    include_nilpotent=nilpotent,
    tol=ctx.obj["tol"],
    seed=ctx.obj["seed"],
    strict=not lenient,
    parallel=ctx.obj["parallel"],
    progress=ctx.obj["progress"],
  )
  report = fm.verify_automorphism(p, phi, plan)
  return RunReport(
    verb="verify",
    verdict=report.verdict.value,
    status=report.status,
    summary={
      "trials": report.trials,
      "witness source": report.witness_source,
      "witness margin": report.witness_margin,
      "failed sources": report.details["failed_sources"],
      "skipped outside inputs": report.details["skipped_outside_inputs"],
    },
    result=report.to_dict(),
    findings=list(report.findings),
  )

@main.command()
@click.argument("candidate", type=click.Path(exists=True, dir_okay=False))
@click.option("--pencil", "pencil_path", default=None, type=click.Path(exists=True, dir_okay=False), help="Use this pencil's N set for the fixed support and the stabilizing power.")
@click.pass_context
@reported
def normalize(ctx, candidate, pencil_path):
  """Normalize a candidate: phases zero, centers real and nonnegative."""
  phi = _candidate(candidate)
  classification = None
  if pencil_path is not None:
    classification = cl.classify_indices(_pencil(ctx, pencil_path))

  psi = fm.normalize(phi)
  gamma, alpha = fm.normalizing_scalings(phi)
  support = fm.fixed_support(psi, ctx.obj["tol"], classification)
  result = {
    "normalized": psi.to_dict(),
    "gamma": gamma,
    "alpha": alpha,
    "fixed_support": sorted(support.indices),
    "fixed_support_within_N": support.within_normal,
  }
  findings = []
  if not psi.has_higher:
    try:
      n, stable = fm.power_stabilize(phi, classification, ctx.obj["tol"])
      result["stabilizing_power"] = { "n": n, "candidate": stable.to_dict() }
    except ArithmeticError as err:
      findings.append(str(err))

  return RunReport(
    verb="normalize",
    verdict="Normalized",
    summary={ "perm": list(psi.perm), "b": psi.b.real, "fixed support": result["fixed_support"] },
    result=result,
    findings=findings,
  )

@main.command()
@click.argument("outer", type=click.Path(exists=True, dir_okay=False))
@click.argument("inner", type=click.Path(exists=True, dir_okay=False))
@click.option("--invert-inner", is_flag=True, default=False, help="Compose with the inverse of INNER.")
@click.pass_context
@reported
def compose(ctx, outer, inner, invert_inner):
  """Symbolic composition OUTER o INNER of Mobius-permutation candidates."""
  f, h = _candidate(outer), _candidate(inner)
  if invert_inner:
    h = fm.invert(h)
  composed = fm.compose(f, h)
  return RunReport(
    verb="compose",
    verdict="Composed",
    summary={ "perm": list(composed.perm), "b": composed.b, "trivial": composed.is_trivial(ctx.obj["tol"]) },
    result={ "composed": composed.to_dict() },
  )

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.option("--summand", "summands", type=TupleN(), multiple=True, help="Coordinate set J to test as a polydisc summand. e.g. 1,2 (repeatable). Default: every singleton.")
@click.option("--nu", "splits", type=int, multiple=True, help="Split index of a coordinate direct sum (repeatable). Default: 1..g-1.")
@click.pass_context
@reported
def detect(ctx, pencil, summands, splits):
  """Run the polydisc summand and direct sum detectors."""
  p = _pencil(ctx, pencil)
  options = dict(
    budget=ctx.obj["budget"], seed=ctx.obj["seed"], levels=ctx.obj["levels"],
    tol=ctx.obj["tol"], progress=ctx.obj["progress"],
  )
  summands = summands or [ (j,) for j in range(1, p.g + 1) ]
  splits = splits or range(1, p.g)

  reports = []
  for J in summands:
    reports.append((f"polydisc-summand J={list(J)}", cl.detect_polydisc_summand(p, J, **options)))
  for nu in splits:
    reports.append((f"direct-sum nu={nu}", cl.detect_direct_sum(p, nu, **options)))

  verdicts = [ r.verdict for _, r in reports ]
  if Verdict.REFUTED in verdicts:
    verdict = Verdict.REFUTED
  elif Verdict.UNKNOWN in verdicts:
    verdict = Verdict.UNKNOWN
  else:
    verdict = Verdict.CERTIFIED

  findings = [ f for _, r in reports for f in r.findings ]
  return RunReport(
    verb="detect",
    verdict=verdict.value,
    status="FAIL" if verdict == Verdict.REFUTED else "PASS",
    summary={ label: r.verdict.value for label, r in reports },
    result={ "detectors": [ dict(r.to_dict(), label=label) for label, r in reports ] },
    findings=findings,
  )

@main.command()
@click.option("--c0", default=0j, type=ComplexType(), help="Constant coefficient, |c0| < 1.", show_default=True)
@click.option("--theta", default=0.0, type=float, help="Phase theta of c_1 = e^(i theta)(|c0|^2 - 1).", show_default=True)
@click.option("--weights", default=None, type=ComplexList(), help="Shift weights lambda_1..lambda_n with lambda_1 = 1, complex allowed. e.g. 1,0.5j,0.8")
@click.option("--order", default=3, type=int, help="Order n of the unweighted shift when --weights is omitted.", show_default=True)
@click.pass_context
@reported
def caratheodory(ctx, c0, theta, weights, order):
  """Extreme Toeplitz contraction, its rigidity and uniqueness checks."""
  seed = ca.MobiusSeed(c0, theta)
  shift = ca.WeightedShift(weights) if weights else ca.WeightedShift.unweighted(order)
  T = ca.extreme_toeplitz(seed, shift)
  norm = float(np.linalg.norm(T, 2))

  rigidity = {}
  if shift.order >= 2:
    phases = np.exp(2j * np.pi * np.arange(RIGIDITY_PHASES) / RIGIDITY_PHASES)
    for r in RIGIDITY_MODULI:
      rigidity[r] = min(ca.rigidity_check(T, r * z) for z in phases)

  coeffs = ca.mobius_coeffs(seed, shift.order)
  perturbed = {}
  for j in range(2, shift.order + 1):
    c = coeffs.copy()
    c[j] += PERTURBATION
    perturbed[j] = float(np.linalg.norm(ca.toeplitz_from_coeffs(c, shift), 2)) - 1

  extreme = abs(norm - 1) <= 1e-9
  rigid = all(excess > 0 for excess in rigidity.values())
  unique = all(excess > 0 for excess in perturbed.values())
  holds = extreme and rigid and unique
  return RunReport(
    verb="caratheodory",
    verdict=(Verdict.CERTIFIED if holds else Verdict.REFUTED).value,
    status="PASS" if holds else "FAIL",
    summary={
      "norm": norm,
      "min rigidity excess": rigidity,
      "perturbed norm excess": perturbed,
    },
    result={
      "coeffs": coeffs,
      "T": encode_matrix(T),
      "norm": norm,
      "rigidity": rigidity,
      "perturbation": PERTURBATION,
      "perturbed": perturbed,
    },
  )

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", default=None, type=click.Choice([ k.value for k in pc.BoundaryKind ]), help="Emit only this family.")
@click.pass_context
@reported
def sample(ctx, pencil, kind):
  """Dump the structured boundary tuples with their membership verdicts."""
  p = _pencil(ctx, pencil)
  records = []
  for family, k, T in pc.all_structured_boundary_tuples(p):
    if kind is not None and family.value != kind:
      continue
    m = p.membership(T, ctx.obj["tol"])
    records.append({
      "kind": family.value, "k": k,
      "verdict": m.verdict.value, "margin": m.margin,
      "tuple": encode_tuple(T),
    })

  counts = {}
  for record in records:
    counts[record["verdict"]] = counts.get(record["verdict"], 0) + 1
  return RunReport(
    verb="sample",
    verdict=f"{len(records)} structured tuples",
    summary=counts,
    result={ "tuples": records },
  )

@main.command()
@click.argument("pencil", type=click.Path(exists=True, dir_okay=False))
@click.option("--count", default=50, help="Number of random Mobius-permutation candidates.", show_default=True)
@click.option("--trivial-count", default=5, help="Number of random trivial candidates.", show_default=True)
@click.option("--min-center", default=0.1, help="Smallest value of max_j |b_j| among random candidates.", show_default=True)
@click.option("--interior-count", default=50, help="Interior samples per candidate.", show_default=True)
@click.pass_context
@reported
def sweep(ctx, pencil, count, trivial_count, min_center, interior_count):
  """Audit triviality: refute random candidates, keep trivial ones."""
  p = _pencil(ctx, pencil)
  rng = np.random.default_rng(ctx.obj["seed"])
  candidates = random_candidates(p.g, count, rng, min_center=min_center)
  candidates += trivial_candidates(p.g, trivial_count, rng)
  plan = fm.SamplePlan(
    levels=ctx.obj["levels"],
    interior_count=interior_count,
    tol=ctx.obj["tol"],
    seed=ctx.obj["seed"],
    parallel=ctx.obj["parallel"],
    progress=ctx.obj["progress"],
  )
  report = triviality_sweep(p, candidates, plan, budget=ctx.obj["budget"])
  return RunReport(
    verb="sweep",
    verdict=report.verdict.value,
    summary={
      "candidates": report.trials,
      "hypotheses hold": report.details["hypotheses_hold"],
      "unexpected": report.details["unexpected"],
    },
    result=report.to_dict(),
    findings=list(report.findings),
  )
