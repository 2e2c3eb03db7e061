"""Random-matrix spectra, eigensolvers and microscopic rescaling.

GUE spectra come from the beta = 2 tridiagonal (Hermite) model and are scaled
so the bulk fills ``[-2, 2]`` with density ``sqrt(1 - (E/2)^2) / pi``.  The
dense complex-Hermitian construction is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.stats

from ._rng import as_generator
from .errors import ConvergenceError, DomainError
from .point_process import PointSample

SCALE_NOTE = "GUE scaled to bulk support [-2, 2]"
MAX_QL_ITER = 50
DEFLATION_TOL = 1e-15
MAX_E0 = 1.8


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    n: int
    ensemble: str
    note: str = SCALE_NOTE

    def moments(self):
        ev = self.eigenvalues
        return {"mean": float(ev.mean()), "second": float(np.mean(ev**2))}

    def to_dict(self, seed=None):
        return {"n": self.n, "ensemble": self.ensemble, "seed": seed, "moments": self.moments(), "note": self.note}

    def write_csv(self, path):
        np.savetxt(path, self.eigenvalues, fmt="%.17g", header="eigenvalue", comments="")


# ------------------------------------------------------------ eigensolvers


@numba.njit(cache=True)
def _ql_implicit(d, e, tol, max_iter):
    # d: diagonal (overwritten with eigenvalues); e: offdiagonal padded to len(d)
    n = d.size
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= tol * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def tridiag_eigenvalues(diagonal, offdiagonal):
    """Eigenvalues of a real symmetric tridiagonal matrix, ascending.

    Implicit QL with Wilkinson-type shifts, eigenvalues only, ``O(n^2)``.
    """
    d = np.array(diagonal, dtype=float)
    off = np.asarray(offdiagonal, dtype=float)
    if off.size != max(d.size - 1, 0):
        raise DomainError("offdiagonal must have length len(diagonal) - 1")
    if d.size == 0:
        return d
    e = np.zeros(d.size)
    e[: off.size] = off
    bad = _ql_implicit(d, e, DEFLATION_TOL, MAX_QL_ITER)
    if bad >= 0:
        raise ConvergenceError(f"QL iteration did not converge for eigenvalue {bad}")
    return np.sort(d)


def sturm_count(diagonal, offdiagonal, x):
    """Number of eigenvalues strictly below each entry of ``x``."""
    d = np.asarray(diagonal, dtype=float)
    e2 = np.asarray(offdiagonal, dtype=float) ** 2
    x = np.asarray(x, dtype=float)
    tiny = np.finfo(float).tiny ** 0.5
    q = d[0] - x
    count = (q < 0).astype(np.int64)
    for i in range(1, d.size):
        q = np.where(q == 0, tiny, q)
        q = d[i] - x - e2[i - 1] / q
        count += q < 0
    return count


def bisection_eigenvalues(diagonal, offdiagonal, rtol=1e-15):
    """Sturm-sequence bisection, all eigenvalues at once (reference solver)."""
    d = np.asarray(diagonal, dtype=float)
    e = np.abs(np.asarray(offdiagonal, dtype=float))
    n = d.size
    rad = np.zeros(n)
    rad[:-1] += e
    rad[1:] += e
    lo0, hi0 = float(np.min(d - rad)), float(np.max(d + rad))
    scale = max(abs(lo0), abs(hi0), 1e-300)
    k = np.arange(n)
    lo = np.full(n, lo0 - 1e-12 * scale)
    hi = np.full(n, hi0 + 1e-12 * scale)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = sturm_count(d, e, mid) > k
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
        if np.max(hi - lo) <= rtol * scale:
            break
    return 0.5 * (lo + hi)


@numba.njit(cache=True)
def _jacobi_cyclic(A, V, want_vectors, tol, max_sweeps):
    n = A.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        diag = 0.0
        for i in range(n):
            diag += A[i, i] * A[i, i]
            for j in range(i + 1, n):
                off += A[i, j] * A[i, j]
        if off <= tol * tol * (diag + 2 * off):
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                if want_vectors:
                    for k in range(n):
                        vkp = V[k, p]
                        vkq = V[k, q]
                        V[k, p] = c * vkp - s * vkq
                        V[k, q] = s * vkp + c * vkq
    return -1


def dense_hermitian_eigh(H, vectors=False):
    """Cyclic Jacobi on the real symmetric embedding ``[[A, -B], [B, A]]``.

    Each eigenvalue of ``H = A + iB`` appears twice in the embedding; an
    eigenvector ``(x, y)`` of the embedding gives ``x + i y`` for ``H``.
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    if H.ndim != 2 or H.shape[1] != n:
        raise DomainError("matrix must be square")
    if n > 256:
        raise DomainError("dense oracle limited to n <= 256")
    norm = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > 1e-12 * norm:
        raise DomainError("matrix is not Hermitian")
    A, B = H.real, H.imag
    S = np.block([[A, -B], [B, A]])
    S = 0.5 * (S + S.T)
    V = np.eye(2 * n) if vectors else np.zeros((1, 1))
    if _jacobi_cyclic(S, V, vectors, 1e-15, 100) < 0:
        raise ConvergenceError("Jacobi sweeps did not converge")
    lam = np.diag(S).copy()
    order = np.argsort(lam, kind="stable")
    if not vectors:
        return lam[order][::2]
    vecs = V[:, order]
    cvec = vecs[:n] + 1j * vecs[n:]
    # keep one vector of each doubled pair, re-orthonormalized
    out_vals, out_vecs = lam[order][::2], np.empty((n, n), dtype=complex)
    for k in range(n):
        v = cvec[:, 2 * k]
        if np.linalg.norm(v) < 0.5:
            v = cvec[:, 2 * k + 1]
        out_vecs[:, k] = v / np.linalg.norm(v)
    return out_vals, out_vecs


def dense_hermitian_eigenvalues(H):
    return dense_hermitian_eigh(H, vectors=False)


# --------------------------------------------------------------- ensembles


def semicircle_density(E):
    Ea = np.asarray(E, dtype=float)
    if np.any(np.abs(Ea) > 2):
        raise DomainError("semicircle density is supported on [-2, 2]")
    r = np.sqrt(np.clip(1 - (Ea / 2) ** 2, 0, None)) / np.pi
    return float(r) if r.ndim == 0 else r


def gue_tridiagonal(n, rng=None):
    """Diagonal and offdiagonal of the beta=2 Hermite model, bulk on [-2, 2].

    ``diag ~ N(0, 1)``, ``off_k ~ chi_{2k} / sqrt 2`` for ``k = n-1, ..., 1``,
    all divided by ``sqrt n``.  Chi variates are square roots of gamma draws.
    """
    rng = as_generator(rng)
    dof = 2.0 * np.arange(n - 1, 0, -1)
    diag = rng.standard_normal(n)
    off = np.sqrt(2.0 * rng.standard_gamma(dof / 2.0)) / np.sqrt(2.0)
    return diag / np.sqrt(n), off / np.sqrt(n)


def sample_gue_spectrum(n, rng=None):
    if n < 2:
        raise DomainError("n must be at least 2")
    d, e = gue_tridiagonal(n, rng)
    return Spectrum(tridiag_eigenvalues(d, e), n, "GUE")


def dense_gue_matrix(n, rng=None):
    """``(G + G^*)/sqrt 2 / sqrt n`` with standard complex Gaussian ``G``."""
    rng = as_generator(rng)
    G = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return (G + G.conj().T) / np.sqrt(2) / np.sqrt(n)


def sample_gue_spectrum_dense(n, rng=None):
    return Spectrum(dense_hermitian_eigenvalues(dense_gue_matrix(n, rng)), n, "GUE-dense")


def _rescaled_sample(points, bulk, seed):
    W = max(float(np.max(np.abs(points))) if points.size else 0.0, bulk or 0.0, 1e-300)
    return PointSample(points, W, 1.0, seed, bulk_halfwidth=bulk)


def microscopic_rescale(spec, E0, density=None, seed=None):
    """Points ``n rho(E0) (E_j - E0)`` for every eigenvalue.

    All eigenvalues are kept, because the far spectrum sets the real part of
    the rescaled trace.  ``bulk_halfwidth = n rho(E0) (2 - |E0|)`` records the
    distance to the nearer spectral edge; ``W`` is widened to cover the points.
    """
    rho = semicircle_density(E0) if density is None else float(density)
    if not rho > 0:
        raise DomainError("density at E0 must be positive")
    scale = spec.n * rho
    pts = scale * (np.asarray(spec.eigenvalues) - E0)
    return _rescaled_sample(pts, scale * (2 - abs(E0)), seed)


def sample_diagonal_rescaled(n, density=None, E0=0.0, rng=None, seed=None):
    """Random diagonal matrix entries ``V_j ~ density``, rescaled at ``E0``.

    ``density`` is a frozen ``scipy.stats`` distribution (default standard
    normal).
    """
    rng = as_generator(rng)
    dist = scipy.stats.norm() if density is None else density
    rho = float(dist.pdf(E0))
    if not rho > 0:
        raise DomainError("density at E0 must be positive")
    v = np.asarray(dist.rvs(size=n, random_state=rng), dtype=float)
    pts = n * rho * (v - E0)
    return _rescaled_sample(pts, None, seed)


def check_bulk_energy(E0):
    if abs(E0) > MAX_E0:
        raise DomainError(f"|E0| must not exceed {MAX_E0} for microscopic statistics")


def semicircle_cdf(E):
    E = np.clip(np.asarray(E, dtype=float), -2.0, 2.0)
    return 0.5 + (E * np.sqrt(4 - E**2) / 2 + 2 * np.arcsin(E / 2)) / (2 * np.pi)


def unfolded_bulk_gaps(spec, E_max=1.0):
    """Nearest-neighbour gaps ``n (F_sc(E_{j+1}) - F_sc(E_j))`` inside ``|E| <= E_max``.

    Unfolding by the semicircle CDF is the microscopic rescaling with the
    density taken at each gap instead of at a single ``E0``; the gaps have
    mean one across the whole bulk window.
    """
    check_bulk_energy(E_max)
    ev = np.asarray(spec.eigenvalues)
    ev = ev[np.abs(ev) <= E_max]
    return spec.n * np.diff(semicircle_cdf(ev))
