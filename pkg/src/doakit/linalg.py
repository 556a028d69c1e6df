"""Complex dense linear algebra on small matrices.

Hermitian eigendecomposition (forward and adjoint), the sample covariance,
and nothing else. Matrices here are tiny (array covariances, at most a few
hundred entries), so the eigensolver favors determinism and accuracy over
asymptotic speed: cyclic Jacobi rotations, double precision throughout, and
a fixed eigenvector phase convention so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

# Convergence: off-diagonal Frobenius norm below JACOBI_TOL * ||A||_F.
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

# Incremented whenever the EVD adjoint zeroes a near-degenerate eigenvalue
# pair instead of dividing by its gap. Diagnostic only, not thread-exact.
_degenerate_pairs = 0


@dataclass
class HermitianEVD:
    """Eigenvalues ascending, eigenvectors as matching unitary columns."""

    eigenvalues: np.ndarray   # (m,) float64
    eigenvectors: np.ndarray  # (m, m) complex128


def degeneracy_count() -> int:
    return _degenerate_pairs


def reset_degeneracy_count() -> None:
    global _degenerate_pairs
    _degenerate_pairs = 0


@njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    # Cyclic-by-row complex Jacobi. a is overwritten with the diagonalized
    # matrix, v accumulates the unitary similarity (columns = eigenvectors).
    m = a.shape[0]
    norm = 0.0
    for i in range(m):
        for j in range(m):
            norm += abs(a[i, j]) ** 2
    norm = math.sqrt(norm)
    if norm == 0.0:
        return
    thresh = tol * norm
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                off += 2.0 * abs(a[i, j]) ** 2
        if math.sqrt(off) < thresh:
            return
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = (t * c) * (apq / r)
                s_conj = s.conjugate()
                # A <- J^H A J with J = I except [[c, s], [-conj(s), c]]
                for i in range(m):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s_conj * aiq
                    a[i, q] = s * aip + c * aiq
                for j in range(m):
                    apj = a[p, j]
                    aqj = a[q, j]
                    a[p, j] = c * apj - s * aqj
                    a[q, j] = s_conj * apj + c * aqj
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real + 0.0j
                a[q, q] = a[q, q].real + 0.0j
                for i in range(m):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s_conj * viq
                    v[i, q] = s * vip + c * viq


def _fix_phases(vec: np.ndarray) -> np.ndarray:
    # Make the largest-magnitude component of each column real positive.
    for j in range(vec.shape[1]):
        k = int(np.argmax(np.abs(vec[:, j])))
        u = vec[k, j]
        r = abs(u)
        if r > 0.0:
            vec[:, j] *= u.conjugate() / r
    return vec


def hermitian_evd(a: np.ndarray) -> HermitianEVD:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized as (a + a^H)/2 before decomposition, so slight
    Hermitian violations are tolerated. Raises on non-square or non-finite
    input.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    work = 0.5 * (a + a.conj().T)
    vec = np.eye(a.shape[0], dtype=np.complex128)
    _jacobi_sweeps(work, vec, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    lam = np.diag(work).real.copy()
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    vec = _fix_phases(vec[:, order])
    return HermitianEVD(lam, vec)


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """Empirical covariance (1/T) X X^H of an m-by-T snapshot block."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"expected a nonempty m-by-T matrix, got shape {x.shape}")
    k = (x @ x.conj().T) / x.shape[1]
    return 0.5 * (k + k.conj().T)


def evd_backward_batch(
    lam: np.ndarray,
    vec: np.ndarray,
    grad_eigvals: np.ndarray | None,
    grad_eigvecs: np.ndarray | None,
    gap_eps: float | None = None,
) -> np.ndarray:
    """Adjoint of the eigendecomposition for a batch of Hermitian matrices.

    lam is (B, m), vec is (B, m, m) with eigenvector columns. Cotangents use
    the paired-real convention: grad_eigvecs packs dL/d(Re E) + 1j * dL/d(Im E)
    and may be padded with zero columns (its trailing dimension may be smaller
    than m when only the leading eigenvectors were consumed). Returns (B, m, m)
    Hermitian gradients in the same paired-real convention.

    The rotation term uses gap weights 1/(lam_j - lam_i); pairs closer than
    gap_eps contribute zero instead and bump the degeneracy counter. On top of
    the usual rotation adjoint this accounts for the output phase convention
    (anchor component real positive), which makes the result agree with finite
    differences even for phase-sensitive downstream objectives; for
    phase-invariant objectives the extra term vanishes identically.
    """
    global _degenerate_pairs
    b, m = lam.shape
    if grad_eigvecs is None:
        ebar = np.zeros((b, m, m), dtype=np.complex128)
    else:
        ebar = np.zeros((b, m, m), dtype=np.complex128)
        ebar[:, :, : grad_eigvecs.shape[2]] = grad_eigvecs

    # Phase-convention correction: the forward rotates each column so its
    # largest-magnitude entry is real positive, a gauge choice with its own
    # derivative. Fold it into the cotangent at the anchor entries.
    anchors = np.argmax(np.abs(vec), axis=1)  # (B, m), anchor row per column
    c = -np.imag(np.sum(ebar.conj() * vec, axis=1))  # (B, m)
    bidx = np.arange(b)[:, None]
    cidx = np.arange(m)[None, :]
    a_k = vec[bidx, anchors, cidx].real
    safe = np.abs(a_k) > 0.0
    corr = np.where(safe, c / np.where(safe, a_k, 1.0), 0.0)
    ebar[bidx, anchors, cidx] = ebar[bidx, anchors, cidx] - 1j * corr

    mmat = np.einsum("bij,bik->bjk", vec.conj(), ebar)
    nmat = 0.5 * (mmat - np.conj(np.swapaxes(mmat, 1, 2)))
    gaps = lam[:, None, :] - lam[:, :, None]  # gaps[b, i, j] = lam_j - lam_i
    if gap_eps is None:
        eps = 1e-8 * np.maximum(1.0, np.max(np.abs(lam), axis=1))[:, None, None]
    else:
        eps = np.full((b, 1, 1), float(gap_eps))
    off = ~np.eye(m, dtype=bool)
    degenerate = (np.abs(gaps) < eps) & off
    _degenerate_pairs += int(degenerate.sum()) // 2
    f = np.zeros_like(gaps)
    ok = off & ~degenerate
    f[ok] = 1.0 / gaps[ok]
    cmat = f * nmat
    if grad_eigvals is not None:
        idx = np.arange(m)
        cmat[:, idx, idx] += grad_eigvals.astype(np.complex128)
    return np.einsum("bij,bjk,blk->bil", vec, cmat, vec.conj())


def evd_backward(
    a: np.ndarray,
    evd: HermitianEVD,
    grad_eigvals: np.ndarray | None,
    grad_eigvecs: np.ndarray | None,
    gap_eps: float | None = None,
) -> np.ndarray:
    """Gradient of a real scalar objective w.r.t. the decomposed matrix.

    grad_eigvecs packs dL/d(Re E) + 1j * dL/d(Im E); the returned matrix packs
    the same convention for the input and is Hermitian by construction.
    """
    a = np.asarray(a, dtype=np.complex128)
    m = a.shape[0]
    gl = None if grad_eigvals is None else np.asarray(grad_eigvals, dtype=np.float64)[None]
    gv = None if grad_eigvecs is None else np.asarray(grad_eigvecs, dtype=np.complex128)[None]
    if gl is not None and gl.shape[1] != m:
        raise ValueError("eigenvalue cotangent length does not match the matrix")
    if gv is not None and (gv.shape[1] != m or gv.shape[2] > m):
        raise ValueError("eigenvector cotangent shape does not match the matrix")
    out = evd_backward_batch(
        evd.eigenvalues[None], evd.eigenvectors[None], gl, gv, gap_eps
    )
    return out[0]
