"""Quantization sources, per-cell index search, and CSI reconstruction.

Pipeline per user k:

1. ``normalize_and_decompose`` strips the large-scale diagonal from the
   aggregate channel (H G^-1), takes the dominant right singular basis
   ``v_w`` (the quantization source), and per-BS row-space centroids used to
   localize the search.
2. ``search_exhaustive`` / ``search_restricted`` pick one codeword index per
   cell minimizing the chordal distance between the 1/sqrt(N)-stacked
   aggregate codeword and ``v_w``; the restricted variant only scans, per
   cell, codewords within a radius ``delta`` of that cell's centroid.
3. ``reconstruct`` rebuilds the quantized direction and re-applies the
   large-scale diagonal, yielding the CSI the transmitter side precodes on.

The search maximizes ||sum_n M_n[j_n]||_F^2 with M_n[j] = W_{n,j}^H B_n
(codeword against source block), algebraically identical to minimizing the
chordal distance; the last two cells are meshed and the remaining index
space is swept in lexicographic chunks through a GEMM, which keeps million-
tuple products tractable without changing the exact answer.  The restricted
search reuses the identical scoring path, so at full radius it returns the
exact same tuple as the exhaustive scan, bit for bit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .codebook import Codebook, aggregate_codeword, chordal_distance
from .linalg import svd

__all__ = [
    "FeedbackReport",
    "QuantizedCsi",
    "normalize_and_decompose",
    "build_subcodebooks",
    "search_exhaustive",
    "search_restricted",
    "reconstruct",
]

# Above this many tuples the score assembly drops to single precision; the
# rule depends only on the product size, so results stay run-to-run and
# worker-count identical.
_SINGLE_PRECISION_THRESHOLD = 2 ** 20
_PREFIX_CHUNK = 64


@dataclass(frozen=True)
class FeedbackReport:
    """Outcome of one index search.

    ``indices`` is one codeword index per cell; ``searched_count`` the number
    of index tuples scored; ``distance`` the achieved chordal distance
    between the selected aggregate codeword and the source.
    """

    indices: tuple
    searched_count: int
    scheme_tag: str
    distance: float


@dataclass(frozen=True)
class QuantizedCsi:
    """Reconstructed direction and denormalized CSI for one user."""

    v_hat_w: np.ndarray
    h_hat: np.ndarray
    report: FeedbackReport


def normalize_and_decompose(rlz: ChannelRealization, k: int, n_t: int):
    """Quantization source and per-cell centroids for user ``k``.

    Returns ``(v_w, centroids)``: ``v_w`` is the (n_bs*n_t) x n_r dominant
    right singular basis of the normalized channel H G^-1, and
    ``centroids[n]`` the n_t x n_r row-space basis of its n-th antenna
    block.
    """
    g = rlz.g_diag[k]
    if np.any(g <= 0):
        bad = int(np.argmax(g <= 0)) // n_t
        raise ValueError(
            f"large-scale matrix of user {k} is singular at BS {bad}; "
            "inactive-BS exclusion is outside this pipeline's scope"
        )
    h_w = rlz.h[k] / g[np.newaxis, :]
    n_r = h_w.shape[0]
    v_w = svd(h_w).v[:, :n_r]
    n_bs = h_w.shape[1] // n_t
    centroids = []
    for n in range(n_bs):
        block = h_w[:, n * n_t:(n + 1) * n_t]
        centroids.append(svd(block).v[:, :n_r])
    return v_w, centroids


def _source_blocks(v_w: np.ndarray, n_t: int):
    m = v_w.shape[0]
    if m % n_t:
        raise ValueError(f"source rows {m} not divisible by per-BS antennas {n_t}")
    return [v_w[n * n_t:(n + 1) * n_t, :] for n in range(m // n_t)]


def _cross_vectors(codeword_sets, blocks):
    """Flattened M_n[j] = W_{n,j}^H B_n per cell, shape (count_n, n_r^2)."""
    out = []
    for cw, blk in zip(codeword_sets, blocks):
        m = np.einsum("cij,ik->cjk", cw.conj(), blk)
        out.append(np.ascontiguousarray(m.reshape(m.shape[0], -1)))
    return out


def _argmax_two(ma, mb):
    pair = ma[:, np.newaxis, :] + mb[np.newaxis, :, :]
    scores = np.sum(np.abs(pair) ** 2, axis=2)
    flat = int(np.argmax(scores))
    ja, jb = divmod(flat, mb.shape[0])
    return (ja, jb), float(scores.flat[flat])


def _argmax_product(ms):
    """Exact argmax of ||sum_n ms[n][j_n]||^2 over the full index product.

    Ties resolve to the lexicographically smallest tuple: prefix chunks are
    swept in lexicographic order with strict improvement, and within a chunk
    the flat argmax is prefix-major.
    """
    n_cells = len(ms)
    if n_cells == 1:
        scores = np.sum(np.abs(ms[0]) ** 2, axis=1)
        j = int(np.argmax(scores))
        return (j,), float(scores[j])
    if n_cells == 2:
        return _argmax_two(ms[0], ms[1])

    total = 1
    for m in ms:
        total *= m.shape[0]
    single = total > _SINGLE_PRECISION_THRESHOLD
    work = [m.astype(np.complex64) if single else m for m in ms]

    tail = work[-2][:, np.newaxis, :] + work[-1][np.newaxis, :, :]
    cb = work[-1].shape[0]
    tail = tail.reshape(-1, tail.shape[2])
    tail_norm = np.sum(np.abs(tail) ** 2, axis=1).real
    tail_t = tail.T.copy()

    prefix_sets = work[:-2]
    prefix_sizes = [m.shape[0] for m in prefix_sets]
    best_score = -np.inf
    best_prefix = None
    best_tail = -1

    prefix_space = list(itertools.product(*[range(s) for s in prefix_sizes]))
    for start in range(0, len(prefix_space), _PREFIX_CHUNK):
        chunk = prefix_space[start:start + _PREFIX_CHUNK]
        pvec = np.stack([sum(prefix_sets[i][t[i]] for i in range(len(t))) for t in chunk])
        pnorm = np.sum(np.abs(pvec) ** 2, axis=1).real
        cross = pvec.conj() @ tail_t
        scores = pnorm[:, np.newaxis] + tail_norm[np.newaxis, :] + 2.0 * cross.real
        flat = int(np.argmax(scores))
        local_p, local_t = divmod(flat, tail_norm.shape[0])
        local_score = float(scores.flat[flat])
        if local_score > best_score:
            best_score = local_score
            best_prefix = chunk[local_p]
            best_tail = local_t
    ja, jb = divmod(best_tail, cb)
    return tuple(best_prefix) + (ja, jb), best_score


def _finish_report(indices, score, n_bs, n_r, searched, tag) -> FeedbackReport:
    # score is || sum_n M_n ||^2; the aggregate codeword carries 1/sqrt(N),
    # so the projection norm is score / N and d^2 = n_r - score / N.
    d2 = max(float(n_r) - score / n_bs, 0.0)
    return FeedbackReport(
        indices=tuple(int(i) for i in indices),
        searched_count=int(searched),
        scheme_tag=tag,
        distance=float(np.sqrt(d2)),
    )


def search_exhaustive(v_w: np.ndarray, codebooks, n_t: int) -> FeedbackReport:
    """Scan the full product of per-cell codebooks for the best tuple."""
    blocks = _source_blocks(np.asarray(v_w, dtype=complex), n_t)
    if len(blocks) != len(codebooks):
        raise ValueError(
            f"{len(codebooks)} codebooks for {len(blocks)} source blocks"
        )
    ms = _cross_vectors([cb.codewords for cb in codebooks], blocks)
    indices, score = _argmax_product(ms)
    searched = 1
    for cb in codebooks:
        searched *= cb.size
    n_r = v_w.shape[1]
    return _finish_report(indices, score, len(codebooks), n_r, searched, "percell-exhaustive")


def build_subcodebooks(centroids, codebooks, delta):
    """Per-cell index subsets within chordal radius ``delta`` of the centroid.

    Strict inequality (d < delta_n); an empty subset falls back to the single
    nearest codeword, so the restricted search always has something to scan.
    ``delta`` may be a scalar or one radius per cell; radius 0 therefore
    degenerates to the tuple of per-cell nearest codewords.
    """
    n_cells = len(codebooks)
    if np.isscalar(delta):
        deltas = [float(delta)] * n_cells
    else:
        deltas = [float(d) for d in delta]
    if len(deltas) != n_cells:
        raise ValueError(f"{len(deltas)} radii for {n_cells} cells")
    if any(d < 0 for d in deltas):
        raise ValueError("search radii must be nonnegative")
    subsets = []
    for c, (centroid, cb, dn) in enumerate(zip(centroids, codebooks, deltas)):
        centroid = np.asarray(centroid, dtype=complex)
        if centroid.shape != cb.shape:
            raise ValueError(
                f"cell {c} centroid has shape {centroid.shape}, codewords are {cb.shape}"
            )
        n_r = centroid.shape[1]
        cross = np.einsum("cij,ik->cjk", cb.codewords.conj(), centroid)
        proj = np.sum(np.abs(cross) ** 2, axis=(1, 2))
        d = np.sqrt(np.maximum(n_r - proj, 0.0))
        idx = np.nonzero(d < dn)[0]
        if idx.size == 0:
            idx = np.array([int(np.argmin(d))])
        subsets.append(idx)
    return subsets


def search_restricted(
    v_w: np.ndarray, centroids, codebooks, delta, n_t: int
) -> FeedbackReport:
    """Exhaustive scan restricted to the per-cell sub-codebooks.

    Identical scoring path as :func:`search_exhaustive`; with every subset
    full (delta = sqrt(n_r)) the two return the exact same tuple.
    """
    blocks = _source_blocks(np.asarray(v_w, dtype=complex), n_t)
    subsets = build_subcodebooks(centroids, codebooks, delta)
    ms = _cross_vectors(
        [cb.codewords[idx] for cb, idx in zip(codebooks, subsets)], blocks
    )
    local, score = _argmax_product(ms)
    indices = [int(subsets[n][j]) for n, j in enumerate(local)]
    searched = 1
    for idx in subsets:
        searched *= idx.size
    n_r = v_w.shape[1]
    return _finish_report(indices, score, len(codebooks), n_r, searched, "percell-isa")


def reconstruct(
    report: FeedbackReport, codebooks, rlz: ChannelRealization, k: int
) -> QuantizedCsi:
    """Aggregate the selected codewords and re-apply the large-scale diagonal."""
    parts = [cb.codewords[j] for cb, j in zip(codebooks, report.indices)]
    v_hat_w = aggregate_codeword(parts)
    h_hat = v_hat_w.conj().T * rlz.g_diag[k][np.newaxis, :]
    return QuantizedCsi(v_hat_w=v_hat_w, h_hat=h_hat, report=report)
