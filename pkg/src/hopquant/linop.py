"""Sparse Hermitian operators: matvec, unitary propagation, extremal eigenpairs.

Small dimensions go through exact dense eigendecompositions; everything above
the cutoff uses reorthogonalized Lanczos (propagation) or ARPACK (eigenpairs).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal

from .errors import EigenConvergenceError, HermiticityError, KrylovConvergenceError

DENSE_CUTOFF = 4096
HERMITICITY_TOL = 1e-12
EIGS_SEED = 20240811


class SparseHermitianOperator:
    """A Hamiltonian stored as a row-grouped (CSR) sparse matrix.

    The hermiticity defect max|H_ij - conj(H_ji)| is computed at construction
    and must stay below tolerance before any spectral use.
    """

    def __init__(self, matrix, check=True, tol=HERMITICITY_TOL):
        self.matrix = sp.csr_matrix(matrix)
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("operator must be square")
        delta = (self.matrix - self.matrix.conj().T).tocoo()
        self.hermiticity_defect = float(np.abs(delta.data).max()) if delta.nnz else 0.0
        self._eig = None
        if check:
            self.require_hermitian(tol)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def require_hermitian(self, tol=HERMITICITY_TOL):
        if self.hermiticity_defect > tol:
            raise HermiticityError(
                f"hermiticity defect {self.hermiticity_defect:.3e} exceeds {tol:.1e}",
                defect=self.hermiticity_defect,
            )

    def matvec(self, v):
        return self.matrix @ v

    def __matmul__(self, v):
        return self.matrix @ v

    def to_dense(self):
        return self.matrix.toarray()

    def dense_eig(self):
        """Cached full eigendecomposition (eigenvalues ascending)."""
        if self._eig is None:
            w, v = np.linalg.eigh(self.to_dense())
            self._eig = (w, v)
        return self._eig


def matvec_partitioned(op, v, parts):
    """Apply ``op`` to ``v`` in row blocks, as a concurrent matvec would.

    Results agree with the unpartitioned product up to floating-point
    summation order only.
    """
    n = op.dimension
    edges = np.linspace(0, n, parts + 1).astype(int)
    out = np.empty(n, dtype=np.result_type(op.matrix.dtype, v.dtype))
    for lo, hi in zip(edges[:-1], edges[1:]):
        out[lo:hi] = op.matrix[lo:hi, :] @ v
    return out


def _lanczos_step(matvec, v, tau, hbar, max_dim, tol):
    """One Krylov step of exp(-i*tau*H/hbar) @ v.

    Returns (result, converged, error_estimate). Full reorthogonalization
    keeps the basis clean; the result norm equals ||v|| by construction.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy(), True, 0.0
    basis = [v / beta0]
    alphas, betas = [], []
    w = matvec(basis[0])
    alphas.append(np.real(np.vdot(basis[0], w)))
    w = w - alphas[0] * basis[0]
    estimate = np.inf
    for j in range(1, max_dim):
        b = np.linalg.norm(w)
        if b < 1e-14 * (abs(alphas[0]) + 1.0):
            # happy breakdown: Krylov space is exact
            y = _tridiag_expm_column(alphas, betas, tau, hbar)
            return beta0 * np.stack(basis, axis=1) @ y, True, 0.0
        betas.append(b)
        q = w / b
        # full reorthogonalization against the stored basis
        for u in basis:
            q = q - np.vdot(u, q) * u
        q = q / np.linalg.norm(q)
        basis.append(q)
        w = matvec(q) - b * basis[j - 1]
        a = np.real(np.vdot(q, w))
        alphas.append(a)
        w = w - a * q
        if j >= 2 or j == max_dim - 1:
            y = _tridiag_expm_column(alphas, betas, tau, hbar)
            estimate = abs(betas[-1] * y[-1]) * beta0 * abs(tau) / hbar
            if estimate <= tol:
                return beta0 * np.stack(basis, axis=1) @ y, True, estimate
    y = _tridiag_expm_column(alphas, betas, tau, hbar)
    return beta0 * np.stack(basis, axis=1) @ y, False, estimate


def _tridiag_expm_column(alphas, betas, tau, hbar):
    w, q = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
    phases = np.exp(-1j * w * tau / hbar)
    return q @ (phases * q[0].conj())


def propagate(op, v, t, hbar=1.0, method="auto", dense_cutoff=DENSE_CUTOFF,
              tol=1e-12, max_krylov=40, max_substeps=4096):
    """Unitary propagation exp(-i*H*t/hbar) @ v.

    ``method`` is "dense" (exact eigendecomposition), "krylov" (Lanczos with
    adaptive substepping), or "auto" (dense up to ``dense_cutoff``).
    """
    op.require_hermitian()
    v = np.asarray(v, dtype=complex)
    if method == "auto":
        method = "dense" if op.dimension <= dense_cutoff else "krylov"
    if t == 0.0:
        return v.copy()
    if method == "dense":
        w, q = op.dense_eig()
        return q @ (np.exp(-1j * w * t / hbar) * (q.conj().T @ v))
    if method != "krylov":
        raise ValueError(f"unknown propagation method {method!r}")
    nsub = 1
    last_estimate = None
    while nsub <= max_substeps:
        tau = t / nsub
        w = v
        ok = True
        for _ in range(nsub):
            w, converged, last_estimate = _lanczos_step(
                op.matvec, w, tau, hbar, max_krylov, tol / nsub)
            if not converged:
                ok = False
                break
        if ok:
            return w
        nsub *= 2
    raise KrylovConvergenceError(
        f"Krylov propagation did not converge within {max_substeps} substeps",
        error_estimate=last_estimate,
    )


def eigs_extremal(op, k, dense_cutoff=DENSE_CUTOFF, residual_tol=1e-8,
                  seed=EIGS_SEED, maxiter=None, ncv=None):
    """Lowest ``k`` eigenpairs, ascending; residuals are checked per pair."""
    op.require_hermitian()
    n = op.dimension
    if k > n:
        raise ValueError(f"requested {k} eigenpairs of a dimension-{n} operator")
    if n <= dense_cutoff or k > n - 2:
        w, q = op.dense_eig()
        values, vectors = w[:k].copy(), q[:, :k].copy()
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        try:
            values, vectors = spla.eigsh(op.matrix, k=k, which="SA", v0=v0,
                                         maxiter=maxiter, ncv=ncv)
        except spla.ArpackNoConvergence as exc:
            residuals = _residuals(op, exc.eigenvalues, exc.eigenvectors)
            raise EigenConvergenceError(
                f"eigensolver stopped with {len(exc.eigenvalues)}/{k} pairs converged",
                residuals=residuals,
            ) from exc
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
    residuals = _residuals(op, values, vectors)
    if residuals.size and residuals.max() > residual_tol:
        raise EigenConvergenceError(
            f"eigenpair residual {residuals.max():.3e} exceeds {residual_tol:.1e}",
            residuals=residuals,
        )
    return values, vectors


def _residuals(op, values, vectors):
    if vectors is None or vectors.size == 0:
        return np.array([])
    r = op.matrix @ vectors - vectors * values[np.newaxis, :]
    return np.linalg.norm(r, axis=0)
