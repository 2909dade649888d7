"""Complex linear algebra helpers with reproducible sign/phase conventions.

Everything downstream (quantization, precoding, rate evaluation) works on
complex128 numpy arrays.  The helpers here pin down the conventions the rest
of the package relies on:

- singular vectors and null-space bases are phase-normalized so that the
  first nonzero entry of every column is positive real, which makes
  decompositions reproducible across runs and platforms;
- null spaces are taken from the *trailing* right singular vectors of a full
  SVD;
- random orthonormal matrices are drawn from the unitary invariant (Haar)
  distribution via QR with the R-diagonal sign fix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdResult",
    "svd",
    "haar_orthonormal",
    "null_space_basis",
    "complex_gaussian",
    "substream",
    "frobenius",
    "hermitian",
    "matmul",
    "log_det_hermitian_psd",
]


@dataclass(frozen=True)
class SvdResult:
    """Full singular value decomposition ``a = u @ diag(s) @ v.conj().T``.

    ``v`` always holds the *full* set of right singular vectors (``cols x
    cols``), so trailing columns span the null space when ``a`` is rank
    deficient.  ``rank_hint`` counts singular values above the numerical
    tolerance.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    rank_hint: int


def _first_nonzero_phase(col: np.ndarray, tol: float = 0.0) -> complex:
    """Phase of the first entry of ``col`` with magnitude above ``tol``."""
    mags = np.abs(col)
    idx = np.nonzero(mags > tol)[0]
    if idx.size == 0:
        return 1.0 + 0.0j
    pivot = col[idx[0]]
    return pivot / abs(pivot)


def phase_normalize_columns(mat: np.ndarray) -> np.ndarray:
    """Rotate each column so its first nonzero entry is positive real."""
    out = np.array(mat, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        phase = _first_nonzero_phase(out[:, j])
        out[:, j] = out[:, j] * np.conj(phase)
    return out


def svd(a: np.ndarray) -> SvdResult:
    """Full SVD with deterministic column phases.

    Parameters
    ----------
    a : np.ndarray
        Complex matrix (rows x cols), finite entries.

    Returns
    -------
    SvdResult
        ``u`` (rows x rows), ``s`` descending, ``v`` (cols x cols).  The
        columns of ``v`` are phase-normalized (first nonzero entry positive
        real); paired columns of ``u`` absorb the conjugate phase so the
        reconstruction is untouched.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"SVD did not converge for {a.shape[0]}x{a.shape[1]} matrix"
        ) from exc
    v = vh.conj().T
    rows, cols = a.shape
    k = min(rows, cols)
    # Columns of v paired with a left singular vector share one phase degree
    # of freedom: rotating both leaves u s v^H invariant.
    v = np.array(v, copy=True)
    u = np.array(u, copy=True)
    for j in range(cols):
        phase = _first_nonzero_phase(v[:, j])
        v[:, j] = v[:, j] * np.conj(phase)
        if j < k:
            u[:, j] = u[:, j] * np.conj(phase)
    tol = max(rows, cols) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return SvdResult(u=u, s=s, v=v, rank_hint=rank)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """IID CN(0, 1) samples: real and imaginary parts N(0, 1/2)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def haar_orthonormal(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an ``m x n`` orthonormal matrix from the Haar distribution.

    Complex Gaussian fill, thin QR, then the Q columns are scaled by the
    phases of R's diagonal so that diag(R) is positive real; this makes the
    draw exactly unitarily invariant rather than merely orthonormal.
    """
    if n > m:
        raise ValueError(f"cannot draw {m}x{n} orthonormal matrix (n > m)")
    z = complex_gaussian(rng, (m, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r).copy()
    ph = np.ones_like(d)
    nz = np.abs(d) > 0
    ph[nz] = d[nz] / np.abs(d[nz])
    # q @ diag(ph) leaves q r invariant when r absorbs diag(ph)^H, whose
    # diagonal is then |d| >= 0 as required.
    return q * ph[np.newaxis, :]


def null_space_basis(a: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis for ``dim`` directions of the right null space.

    Returns the trailing ``dim`` columns of the full right singular vector
    matrix (smallest singular values first from the end), phase-normalized.
    Raises if the null space has fewer than ``dim`` dimensions at numerical
    rank.
    """
    a = np.asarray(a, dtype=complex)
    res = svd(a)
    cols = a.shape[1]
    if cols - res.rank_hint < dim:
        raise ValueError(
            f"null space of {a.shape[0]}x{cols} matrix has dimension "
            f"{cols - res.rank_hint} < requested {dim} (rank {res.rank_hint})"
        )
    basis = res.v[:, cols - dim:]
    return phase_normalize_columns(basis)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent RNG stream addressed by ``(seed, key...)``.

    Built on ``SeedSequence`` spawn keys, so streams for different keys are
    statistically independent and the mapping is order-free: stream
    ``(seed, 0, 7)`` is the same object no matter how many other streams were
    created before it.  This is what makes worker-count-independent
    parallel reductions reproducible.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def frobenius(a: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(a)))


def hermitian(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ValueError(f"shape mismatch for product: {a.shape} @ {b.shape}")
    return a @ b


def log_det_hermitian_psd(a: np.ndarray) -> float:
    """log2 det of a Hermitian positive definite matrix.

    The input is symmetrized before the slogdet call to shed the
    O(eps) Hermiticity error that accumulates in products like
    ``I + H W W^H H^H``.
    """
    a = np.asarray(a, dtype=complex)
    ah = 0.5 * (a + a.conj().T)
    sign, logdet = np.linalg.slogdet(ah)
    if sign.real <= 0:
        raise ValueError("matrix is not positive definite (non-positive determinant)")
    return float(logdet / np.log(2.0))
