"""Dense linear-algebra substrate: Kronecker/vectorization calculus and
small-matrix solves.

Implements the identities the rest of the toolkit is built on:

    vec(X Y Z) = (Z' kron X) vec(Y)
    vec(A)     = D_n vech(A)        for symmetric A

together with Lyapunov solves via the Kronecker operator

    K = (I kron A') + (A' kron I),      K vec(P) = -vec(Q),

numerical kernel bases, and eigenvalue/definiteness queries.  Everything
operates on plain numpy arrays at desk scale (n up to a few tens); no
sparse or large-scale paths.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "kron",
    "vec",
    "unvec",
    "vech",
    "unvech",
    "duplication_matrix",
    "solve_lyapunov",
    "kernel_basis",
    "eigvals",
    "sorted_spectrum",
    "is_stable",
    "min_eig_sym",
    "is_pd",
    "is_symmetric",
    "symmetrize",
]

#: default relative symmetry tolerance for symmetric-matrix inputs
SYM_TOL = 1e-12

#: default relative singular-value cutoff for numerical rank decisions
KERNEL_TOL = 1e-9


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices (thin wrapper over numpy)."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def vec(a: np.ndarray) -> np.ndarray:
    """Column-wise vectorization: columns stacked top to bottom."""
    return np.asarray(a, dtype=float).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def is_symmetric(a: np.ndarray, tol: float = SYM_TOL) -> bool:
    """True if ``max|A - A'| <= tol * (1 + max|A|)``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = 1.0 + np.abs(a).max(initial=0.0)
    return bool(np.abs(a - a.T).max(initial=0.0) <= tol * scale)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(A + A') / 2``."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def vech(a: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    """Half-vectorization of a symmetric matrix.

    Stacks the lower-triangular entries column by column; the result has
    length ``n (n + 1) / 2``.  Raises ``ValueError`` if the input is not
    symmetric within ``tol`` (relative, max-norm).
    """
    a = np.asarray(a, dtype=float)
    if not is_symmetric(a, tol):
        raise ValueError("vech requires a symmetric matrix")
    n = a.shape[0]
    return np.concatenate([a[j:, j] for j in range(n)]) if n else np.zeros(0)


def unvech(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`vech`: rebuild the symmetric ``n x n`` matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != n * (n + 1) // 2:
        raise ValueError(f"vech vector of length {v.size} does not match n={n}")
    m = np.zeros((n, n))
    k = 0
    for j in range(n):
        rows = n - j
        m[j:, j] = v[k:k + rows]
        m[j, j:] = v[k:k + rows]
        k += rows
    return m


def duplication_matrix(n: int) -> np.ndarray:
    """The 0/1 matrix D_n with ``vec(A) = D_n vech(A)`` for symmetric A.

    Shape is ``n^2 x n(n+1)/2``; each row holds exactly one unit entry.
    """
    if n < 1:
        raise ValueError("duplication_matrix requires n >= 1")
    d = np.zeros((n * n, n * (n + 1) // 2))
    col = 0
    for j in range(n):
        for i in range(j, n):
            d[i + j * n, col] = 1.0
            d[j + i * n, col] = 1.0
            col += 1
    return d


def solve_lyapunov(a_cl: np.ndarray, q: np.ndarray, resid_tol: float = 1e-10) -> np.ndarray:
    """Solve ``a_cl' P + P a_cl + q = 0`` for symmetric P.

    Solves the Kronecker linear system ``K vec(P) = -vec(q)`` with
    ``K = (I kron a_cl') + (a_cl' kron I)``; unique exactly when no two
    eigenvalues of ``a_cl`` sum to zero (always true for stable ``a_cl``).
    Adequate for the desk-scale problems this toolkit targets.

    Raises ``numpy.linalg.LinAlgError`` when K is (numerically) singular,
    i.e. the Lyapunov equation has no unique solution, and ``ValueError``
    when the residual check fails or q is not symmetric.
    """
    a_cl = np.asarray(a_cl, dtype=float)
    q = np.asarray(q, dtype=float)
    n = a_cl.shape[0]
    if a_cl.shape != (n, n) or q.shape != (n, n):
        raise ValueError("solve_lyapunov requires square matrices of equal size")
    if not is_symmetric(q, tol=1e-10):
        raise ValueError("solve_lyapunov requires symmetric q")
    k = np.kron(np.eye(n), a_cl.T) + np.kron(a_cl.T, np.eye(n))
    try:
        p = np.linalg.solve(k, -vec(q))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "non-unique/no Lyapunov solution (eigenvalue pairing in a_cl)"
        ) from exc
    p = symmetrize(unvec(p, n, n))
    resid = np.abs(a_cl.T @ p + p @ a_cl + q).max(initial=0.0)
    scale = 1.0 + np.abs(q).max(initial=0.0)
    if not np.isfinite(resid) or resid > resid_tol * scale * max(1.0, np.abs(p).max(initial=0.0)):
        raise ValueError(
            f"Lyapunov residual {resid:.2e} exceeds tolerance; "
            "equation is ill-conditioned (near eigenvalue pairing)"
        )
    return p


def kernel_basis(m: np.ndarray, tol: float = KERNEL_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``m``.

    Singular values below ``tol * sigma_max`` are treated as zero.  The
    columns of the returned matrix satisfy ``Z' Z = I`` and
    ``|m Z| <= tol * sigma_max * sqrt(cols)``.  A zero (or empty) matrix
    yields the full identity basis.
    """
    if tol <= 0:
        raise ValueError("kernel tolerance must be positive")
    m = np.atleast_2d(np.asarray(m, dtype=float))
    ncols = m.shape[1]
    if m.shape[0] == 0 or ncols == 0:
        return np.eye(ncols)
    _, s, vt = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(ncols)
    rank = int(np.sum(s > tol * smax))
    return vt[rank:].T.copy()


def eigvals(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a square matrix (unordered multiset)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("eigvals requires a square matrix")
    return np.linalg.eigvals(a)


def sorted_spectrum(w: np.ndarray) -> np.ndarray:
    """Canonical ordering of a complex spectrum: by real part, then imaginary."""
    w = np.asarray(w)
    return w[np.lexsort((w.imag, w.real))]


def is_stable(a: np.ndarray, margin: float = 0.0) -> bool:
    """True if all eigenvalues of ``a`` have real part < -margin."""
    return bool(np.max(eigvals(a).real, initial=-np.inf) < -margin)


def min_eig_sym(a: np.ndarray, tol: float = SYM_TOL) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.inf
    if not is_symmetric(a, tol):
        raise ValueError("min_eig_sym requires a symmetric matrix")
    return float(np.linalg.eigvalsh(symmetrize(a))[0])


def is_pd(a: np.ndarray, eps: float = 0.0) -> bool:
    """True if the symmetric matrix ``a`` satisfies ``min eig > eps``."""
    return min_eig_sym(a) > eps
