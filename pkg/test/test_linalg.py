import pytest

import numpy as np

from freespec import linalg
from freespec.exceptions import (
  NotHermitianError, NotUnitaryError, PreconditionError, ShapeError, SingularMatrixError,
)
from freespec.linalg import PsdClass


def test_kron_outer_index():
  S = np.array([[1, 2], [3, 4]])
  T = np.array([[0, 1], [1, 0]])
  K = linalg.kron(S, T)

  assert K.shape == (4, 4)
  for i in range(2):
    for j in range(2):
      assert np.allclose(K[2*i:2*i+2, 2*j:2*j+2], S[i,j] * T)

  R = linalg.kron(np.ones((2, 3)), np.ones((1, 2)))
  assert R.shape == (2, 6)


def test_op_norm():
  assert linalg.op_norm(np.zeros((0, 0))) == 0
  assert linalg.op_norm(np.diag([3, -5])) == pytest.approx(5)
  assert linalg.op_norm([[0, 1], [0, 0]]) == pytest.approx(1)


def test_hermitian_spectrum_classes():
  spectrum = linalg.hermitian_spectrum(np.diag([1.0, 2.0]))
  assert spectrum.psd_class == PsdClass.POSITIVE_DEFINITE
  assert spectrum.margin == pytest.approx(1)
  assert spectrum.kernel.shape == (2, 0)

  spectrum = linalg.hermitian_spectrum(np.diag([0.0, 1.0]))
  assert spectrum.psd_class == PsdClass.PSD_WITH_KERNEL
  assert spectrum.kernel.shape == (2, 1)
  assert np.allclose(np.abs(spectrum.kernel[:,0]), [1, 0])

  spectrum = linalg.hermitian_spectrum(np.diag([-1.0, 1.0]))
  assert spectrum.psd_class == PsdClass.INDEFINITE
  assert spectrum.margin == pytest.approx(-1)


def test_hermitian_spectrum_tolerance():
  M = np.diag([1e-9, 1.0])
  assert linalg.hermitian_spectrum(M).psd_class == PsdClass.PSD_WITH_KERNEL
  assert linalg.hermitian_spectrum(M, tol=1e-12).psd_class == PsdClass.POSITIVE_DEFINITE

  with pytest.raises(ValueError):
    linalg.hermitian_spectrum(M, tol=-1)


def test_hermitian_part():
  M = np.array([[1, 1j], [-1j, 2]]) + 1e-12 * np.array([[0, 1], [0, 0]])
  H = linalg.hermitian_part(M)
  assert np.allclose(H, np.conj(H.T))

  with pytest.raises(NotHermitianError) as err:
    linalg.hermitian_part([[0, 1], [0, 0]])
  assert err.value.asymmetry == pytest.approx(1)

  with pytest.raises(ShapeError):
    linalg.hermitian_part(np.ones((2, 3)))


def test_inv_sqrt():
  R = linalg.inv_sqrt(np.diag([4.0, 9.0]))
  assert np.allclose(R, np.diag([0.5, 1/3]))

  rng = np.random.default_rng(3)
  G = rng.standard_normal((4,4)) + 1j * rng.standard_normal((4,4))
  P = G @ np.conj(G.T) + np.eye(4)
  R = linalg.inv_sqrt(P)
  assert np.allclose(R @ P @ R, np.eye(4), atol=1e-10)

  with pytest.raises(SingularMatrixError):
    linalg.inv_sqrt(np.diag([0.0, 1.0]))


def test_check_unitary():
  U = np.array([[0, 1], [1, 0]])
  assert np.all(linalg.check_unitary(U) == U)
  assert linalg.unitary_defect(2 * np.eye(2)) == pytest.approx(3)
  assert linalg.unitary_defect(np.ones((2, 3))) == np.inf

  with pytest.raises(NotUnitaryError):
    linalg.check_unitary(2 * np.eye(2))


def test_kernel_leakage():
  R = np.diag([0.0, 1.0])
  Q = np.diag([0.0, 0.5])
  assert linalg.kernel_leakage(R, Q) == pytest.approx(0, abs=1e-12)

  R = np.diag([0.0, 0.0, 1.0])
  assert linalg.kernel_leakage(R, np.zeros((3,3))) == 0

  with pytest.raises(PreconditionError):
    linalg.kernel_leakage(np.diag([0.0, 1.0]), 0.5 * np.array([[0, 1], [1, 0]]))

  # no kernel at all
  assert linalg.kernel_leakage(np.eye(2), 0.5 * np.eye(2)) == 0


def _ginibre(rng, rows, cols):
  return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def test_kron_mixed_product():
  rng = np.random.default_rng(17)
  for _ in range(20):
    a, b, c, d, e, f = rng.integers(1, 4, size=6)
    S, U = _ginibre(rng, a, b), _ginibre(rng, b, c)
    T, V = _ginibre(rng, d, e), _ginibre(rng, e, f)
    lhs = linalg.kron(S, T) @ linalg.kron(U, V)
    rhs = linalg.kron(S @ U, T @ V)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-10 * (1 + np.abs(rhs).max()))


def test_kron_norm_is_multiplicative():
  rng = np.random.default_rng(18)
  for _ in range(20):
    S = _ginibre(rng, *rng.integers(1, 5, size=2))
    T = _ginibre(rng, *rng.integers(1, 5, size=2))
    expected = linalg.op_norm(S) * linalg.op_norm(T)
    assert linalg.op_norm(linalg.kron(S, T)) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("n", [ 1, 2, 5, 12, 24 ])
def test_hermitian_spectrum_reconstruction(n):
  rng = np.random.default_rng(n)
  G = _ginibre(rng, n, n)
  M = (G + np.conj(G.T)) / 2
  spectrum = linalg.hermitian_spectrum(M)
  V, w = spectrum.eigenvectors, spectrum.eigenvalues

  assert np.allclose(np.conj(V.T) @ V, np.eye(n), atol=1e-10)
  assert np.all(np.diff(w) >= 0)
  error = linalg.op_norm(M - (V * w) @ np.conj(V.T))
  assert error <= 1e-9 * linalg.op_norm(M)


def test_elementary_psd_lemma():
  rng = np.random.default_rng(19)
  for _ in range(30):
    n = int(rng.integers(2, 6))
    k = int(rng.integers(1, n))
    # P1 and P2 share the kernel spanned by the first k columns of a unitary
    Q, _ = np.linalg.qr(_ginibre(rng, n, n))
    complement = Q[:, k:]
    B1 = complement @ _ginibre(rng, n - k, n - k)
    B2 = complement @ _ginibre(rng, n - k, n - k)
    P1, P2 = B1 @ np.conj(B1.T), B2 @ np.conj(B2.T)

    R, Qm = (P1 + P2) / 2, (P1 - P2) / 2
    leak = linalg.kernel_leakage(R, Qm, tol=1e-9 * (1 + linalg.op_norm(R)))
    assert leak <= 1e-7 * linalg.op_norm(Qm)
