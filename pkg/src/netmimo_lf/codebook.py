"""Random subspace codebooks and the chordal distance they quantize under.

Codewords are orthonormal matrices drawn Haar-uniformly.  A *per-cell*
codebook holds n_t x n_r codewords (one codebook per BS, independently
drawn); a *joint-cell* codebook holds (n_bs*n_t) x n_r codewords and serves
as the unstructured baseline.  The aggregate codeword for a tuple of
per-cell picks is the 1/sqrt(n_bs)-scaled vertical stack, which is again
orthonormal whenever the parts are.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .linalg import complex_gaussian, frobenius

__all__ = [
    "Codebook",
    "chordal_distance",
    "split_bits",
    "build_percell_codebooks",
    "build_jointcell_codebook",
    "aggregate_codeword",
    "joint_quantize",
    "codebook_to_bytes",
    "codebook_from_bytes",
]

_ORTHONORMALITY_TOL = 1e-6
_MAGIC = b"NMCB"
_KIND_CODES = {"per-cell": 0, "joint-cell": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class Codebook:
    """A set of ``2**bits`` orthonormal codewords of common shape.

    ``codewords`` has shape (2**bits, rows, n_r); ``kind`` records whether the
    rows span one BS's antennas ("per-cell") or the whole cluster
    ("joint-cell").
    """

    codewords: np.ndarray
    bits: int
    kind: str

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown codebook kind {self.kind!r}")
        if self.codewords.ndim != 3:
            raise ValueError("codewords must be a (count, rows, n_r) array")
        if self.codewords.shape[0] != 2 ** self.bits:
            raise ValueError(
                f"{self.codewords.shape[0]} codewords inconsistent with bits={self.bits}"
            )

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def shape(self):
        return self.codewords.shape[1:]


def _check_orthonormal(v: np.ndarray, name: str) -> None:
    n = v.shape[1]
    res = frobenius(v.conj().T @ v - np.eye(n))
    if res > _ORTHONORMALITY_TOL:
        raise ValueError(
            f"{name} is not orthonormal (residual {res:.2e} > {_ORTHONORMALITY_TOL:.0e})"
        )


def chordal_distance(v1: np.ndarray, v2: np.ndarray) -> float:
    """Chordal distance between the column spans of two orthonormal matrices.

    d = ||v1 v1^H - v2 v2^H||_F / sqrt(2), which ranges over [0, sqrt(n_r)]
    and is invariant to right multiplication by any unitary.  Both arguments
    must share their shape and pass an orthonormality check.
    """
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    if v1.shape != v2.shape:
        raise ValueError(f"shape mismatch: {v1.shape} vs {v2.shape}")
    _check_orthonormal(v1, "first argument")
    _check_orthonormal(v2, "second argument")
    diff = v1 @ v1.conj().T - v2 @ v2.conj().T
    return frobenius(diff) / np.sqrt(2.0)


def split_bits(total: int, parts: int) -> list:
    """Split a bit budget evenly; remainder goes to the earliest parts."""
    if total < 0 or parts < 1:
        raise ValueError("need a nonnegative budget and at least one part")
    base, rem = divmod(int(total), parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _draw_codebook(count: int, rows: int, n_r: int, rng: np.random.Generator) -> np.ndarray:
    # Batched equivalent of stacking haar_orthonormal draws: one Gaussian
    # block, stacked QR, and the same diagonal-phase fix per codeword.
    z = complex_gaussian(rng, (count, rows, n_r))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2).copy()
    ph = np.ones_like(d)
    nz = np.abs(d) > 0
    ph[nz] = d[nz] / np.abs(d[nz])
    return q * ph[:, np.newaxis, :]


def build_percell_codebooks(
    bits_per_cell, n_t: int, n_r: int, rng: np.random.Generator, shared: bool = False
) -> list:
    """One random codebook per BS, ``2**bits`` Haar n_t x n_r codewords each.

    Codebooks are independent draws unless ``shared`` is set, in which case a
    single draw (requiring equal budgets) is reused for every cell.
    """
    bits_per_cell = [int(b) for b in bits_per_cell]
    if shared and len(set(bits_per_cell)) > 1:
        raise ValueError("shared codebooks require equal per-cell budgets")
    books = []
    first = None
    for b in bits_per_cell:
        if shared and first is not None:
            books.append(first)
            continue
        cb = Codebook(
            codewords=_draw_codebook(2 ** b, n_t, n_r, rng), bits=b, kind="per-cell"
        )
        books.append(cb)
        if shared:
            first = cb
    return books


def build_jointcell_codebook(
    bits: int, n_bs: int, n_t: int, n_r: int, rng: np.random.Generator
) -> Codebook:
    """Unstructured baseline: ``2**bits`` Haar (n_bs*n_t) x n_r codewords."""
    return Codebook(
        codewords=_draw_codebook(2 ** int(bits), n_bs * n_t, n_r, rng),
        bits=int(bits),
        kind="joint-cell",
    )


def aggregate_codeword(parts) -> np.ndarray:
    """Stack per-cell codewords vertically and scale by 1/sqrt(n_bs).

    If every part is orthonormal (n_t x n_r) the result is an orthonormal
    (n_bs*n_t) x n_r matrix; with a single part it is the part itself.
    """
    parts = [np.asarray(p, dtype=complex) for p in parts]
    if not parts:
        raise ValueError("need at least one per-cell codeword")
    shape = parts[0].shape
    if any(p.shape != shape for p in parts):
        raise ValueError("per-cell codewords must share a common shape")
    return np.vstack(parts) / np.sqrt(len(parts))


def joint_quantize(source: np.ndarray, codebook: Codebook):
    """Nearest codeword (chordal distance) in a joint-cell codebook.

    Returns ``(index, distance)``; ties break to the lowest index.  The scan
    uses the identity d^2 = n_r - ||W^H v||_F^2, equivalent to the projector
    form but evaluated codebook-wide in one einsum.
    """
    source = np.asarray(source, dtype=complex)
    _check_orthonormal(source, "quantization source")
    if codebook.shape != source.shape:
        raise ValueError(
            f"source shape {source.shape} does not match codeword shape {codebook.shape}"
        )
    n_r = source.shape[1]
    cross = np.einsum("cij,ik->cjk", codebook.codewords.conj(), source)
    proj = np.sum(np.abs(cross) ** 2, axis=(1, 2))
    idx = int(np.argmax(proj))
    d2 = max(n_r - float(proj[idx]), 0.0)
    return idx, float(np.sqrt(d2))


def codebook_to_bytes(cb: Codebook) -> bytes:
    """Serialize: fixed header then row-major complex128 little-endian payload."""
    count, rows, n_r = cb.codewords.shape
    header = struct.pack(
        "<4sBIII", _MAGIC, _KIND_CODES[cb.kind], rows, n_r, cb.bits
    )
    payload = np.ascontiguousarray(cb.codewords, dtype="<c16").tobytes()
    return header + payload


def codebook_from_bytes(blob: bytes) -> Codebook:
    """Inverse of :func:`codebook_to_bytes`; validates header and length."""
    head_len = struct.calcsize("<4sBIII")
    if len(blob) < head_len:
        raise ValueError("truncated codebook blob (missing header)")
    magic, kind_code, rows, n_r, bits = struct.unpack("<4sBIII", blob[:head_len])
    if magic != _MAGIC:
        raise ValueError("not a codebook blob (bad magic)")
    if kind_code not in _KIND_NAMES:
        raise ValueError(f"unknown codebook kind code {kind_code}")
    count = 2 ** bits
    expected = head_len + count * rows * n_r * 16
    if len(blob) != expected:
        raise ValueError(
            f"codebook blob has {len(blob)} bytes, expected {expected}"
        )
    flat = np.frombuffer(blob, dtype="<c16", offset=head_len)
    codewords = flat.reshape(count, rows, n_r).astype(complex)
    return Codebook(codewords=codewords, bits=bits, kind=_KIND_NAMES[kind_code])
