from .exceptions import *
from .linalg import PsdClass, SpectralData, hermitian_spectrum, inv_sqrt, kernel_leakage
from .pencil import (
  BoundaryKind, EtaMode, LinearPencil, Membership, MembershipVerdict, Pencil,
  build_pencil, chain_pencil, disc_pencil, eta_radius, membership,
  polydisc_pencil, split_pencil, structured_boundary_tuples,
)
from .caratheodory import (
  FreeSeries, MobiusSeed, TwoByTwoKind, WeightedShift,
  eval_free_series, extreme_toeplitz, rigidity_check, two_by_two_classify,
)
from .freemap import (
  CandidateAutomorphism, SamplePlan,
  compose, evaluate, extract_affine_linear, invert,
  mobius_origin_orbit, normalize, power_stabilize, verify_automorphism,
)
from .classify import (
  IndexClassification, aux_pencil, build_nopi_tuple, classify_indices,
  classify_oracle_grid, detect_direct_sum, detect_polydisc_summand,
)
from .reports import StructureReport, Verdict
from .sweep import random_candidates, triviality_sweep
