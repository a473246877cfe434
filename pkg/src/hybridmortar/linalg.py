"""Symmetric linear algebra for constrained (mortar) systems.

The constraint ``B u = 0`` only touches interface trace dofs, so the
null-space basis is the identity on all other dofs and a dense orthonormal
complement (pivoted QR) on the coupled ones.  Generalized eigenproblems are
solved densely on the projected pencil at desk scale and by shift-invert
Lanczos beyond that.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

DENSE_LIMIT = 4000


class ConstraintDegeneracyError(np.linalg.LinAlgError):
    """The mortar constraint matrix is rank deficient."""


class SolvabilityError(np.linalg.LinAlgError):
    """The (reduced) operator is singular for the given data."""


class IndefiniteError(np.linalg.LinAlgError):
    """Operator is not positive definite on the requested subspace."""


@dataclass
class NullspaceBasis:
    Z: sp.csr_matrix
    coupled: np.ndarray = field(repr=False)   # indices of dofs touched by B

    @property
    def shape(self):
        return self.Z.shape


def nullspace_basis(B, labels=None, rtol: float = 1e-10) -> NullspaceBasis:
    """Orthonormal basis of ker B.

    ``labels`` (one per row of B, e.g. the interface id) are used to name
    dependent rows when B is rank deficient.
    """
    B = sp.csr_matrix(B)
    m, n = B.shape
    coupled = np.flatnonzero(np.asarray(abs(B).sum(axis=0)).ravel() > 0)
    uncoupled = np.setdiff1d(np.arange(n), coupled)
    if m == 0 or coupled.size == 0:
        if m and coupled.size == 0:
            log.debug("constraint matrix is zero; kernel is the full space")
        return NullspaceBasis(sp.identity(n, format="csr"), coupled)
    Bc = B[:, coupled].toarray()
    Q, R, piv = sla.qr(Bc.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > rtol * max(diag[0], 1e-300)))
    if rank < m:
        bad = sorted(set(piv[rank:]))
        where = bad if labels is None else sorted({int(labels[i]) for i in bad})
        raise ConstraintDegeneracyError(
            f"constraint matrix has rank {rank} < {m} rows; dependent rows on interface(s) {where}")
    Zc = Q[:, m:]
    # deterministic sign: largest entry of each column positive
    s = np.sign(Zc[np.argmax(np.abs(Zc), axis=0), np.arange(Zc.shape[1])])
    Zc = Zc * np.where(s == 0, 1.0, s)
    nu, nz = len(uncoupled), Zc.shape[1]
    eye = sp.coo_matrix((np.ones(nu), (uncoupled, np.arange(nu))), shape=(n, nu + nz))
    rows = np.repeat(coupled, nz)
    cols = nu + np.tile(np.arange(nz), len(coupled))
    zc = sp.coo_matrix((Zc.ravel(), (rows, cols)), shape=(n, nu + nz))
    return NullspaceBasis((eye + zc).tocsr(), coupled)


def _kkt(A, B):
    m = B.shape[0]
    return sp.bmat([[A, B.T], [B, sp.csr_matrix((m, m))]], format="csc")


def solve_saddle_source(A, B, rhs, constraint_rhs=None, rtol: float = 1e-10):
    """Solve [[A, B^T], [B, 0]] (u, tau) = (rhs, g); returns (u, tau).

    Raises :class:`SolvabilityError` when the system is (numerically) singular:
    a relative residual above ``rtol`` or a solution whose size implies a
    condition number beyond ~1/eps.
    """
    A = sp.csr_matrix(A)
    B = sp.csr_matrix(B) if B is not None else sp.csr_matrix((0, A.shape[0]))
    rhs = np.asarray(rhs, dtype=float)
    m = B.shape[0]
    g = np.zeros(m) if constraint_rhs is None else np.asarray(constraint_rhs, dtype=float)
    K = _kkt(A, B) if m else A.tocsc()
    b = np.concatenate([rhs, g])
    try:
        lu = spla.splu(K)
        x = lu.solve(b)
    except RuntimeError as exc:
        raise SolvabilityError(f"singular system: {exc}") from None
    res = np.linalg.norm(K @ x - b)
    bnorm = max(np.linalg.norm(b), 1e-300)
    knorm = spla.norm(K, 1)
    xnorm = np.linalg.norm(x)
    if not np.all(np.isfinite(x)) or res > rtol * (bnorm + knorm * xnorm) or \
            xnorm * knorm > 0.1 / np.finfo(float).eps * bnorm:
        raise SolvabilityError("reduced operator is singular for the given data "
                               f"(residual {res:.3g}, |x| {np.linalg.norm(x):.3g})")
    return x[:A.shape[0]], x[A.shape[0]:]


def _fix_signs(U):
    i = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[i, np.arange(U.shape[1])])
    return U * np.where(s == 0, 1.0, s)


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray   # columns in full coordinates
    spurious: int = 0


def solve_constrained_eigen(A, M, B=None, count: int | None = None, Z: NullspaceBasis | None = None,
                            labels=None) -> EigenResult:
    """Generalized eigenpairs of (A, M) restricted to ker B, ascending.

    Eigenvectors are M-orthonormal and returned in full coordinates.
    """
    A = sp.csr_matrix(A)
    M = sp.csr_matrix(M)
    if Z is None:
        Z = nullspace_basis(B if B is not None else sp.csr_matrix((0, A.shape[0])), labels)
    Zm = Z.Z
    Ar = (Zm.T @ A @ Zm).tocsc()
    Mr = (Zm.T @ M @ Zm).tocsc()
    Ar = (Ar + Ar.T) * 0.5
    Mr = (Mr + Mr.T) * 0.5
    nr = Ar.shape[0]
    if count is None or count >= nr:
        count = nr
    if nr <= DENSE_LIMIT or count > nr // 3:
        sub = None if count == nr else (0, count - 1)
        lam, W = sla.eigh(Ar.toarray(), Mr.toarray(), subset_by_index=sub)
    else:
        scale = abs(Ar).max() / max(abs(Mr).max(), 1e-300)
        sigma = -1e-6 * scale
        lam, W = spla.eigsh(Ar, k=count, M=Mr, sigma=sigma, which="LM")
        order = np.argsort(lam)
        lam, W = lam[order], W[:, order]
        # re-normalize in the mass inner product
        W = W / np.sqrt(np.einsum("ij,ij->j", W, Mr @ W))
    U = _fix_signs(np.asarray(Zm @ W))
    return EigenResult(lam, U)


def solve_saddle_eigen(A, M, B, ratio: float = 1e12) -> EigenResult:
    """Eigenvalues of the full saddle pencil [[A, B^T], [B, 0]] x = lam [[M, 0], [0, 0]] x.

    Modes above ``ratio`` times the largest physical candidate (including the
    infinite ones) are counted as spurious and dropped; numerically zero modes
    stay physical.  Dense; small systems only.
    """
    A = sp.csr_matrix(A)
    M = sp.csr_matrix(M)
    B = sp.csr_matrix(B)
    n, m = A.shape[0], B.shape[0]
    K = _kkt(A, B).toarray()
    Mf = np.zeros_like(K)
    Mf[:n, :n] = M.toarray()
    alpha, beta = sla.eigvals(K, Mf, homogeneous_eigvals=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(np.abs(beta) > 0, alpha / np.where(beta == 0, 1, beta), np.inf)
    mag = np.where(np.isfinite(lam), np.abs(lam), np.inf)
    order = np.argsort(mag)
    mag, lam = mag[order], lam[order]
    # zero modes (e.g. constants under Neumann conditions) are physical and
    # must not open the gap; the operator scale separates them from the rest
    scale = spla.norm(A, np.inf) / max(spla.norm(M, np.inf), 1e-300)
    start = int(np.count_nonzero(mag <= 1e-8 * scale))
    cut = len(mag)
    for i in range(max(start - 1, 0), len(mag) - 1):
        ref = max(mag[i], 1e-8 * scale)
        if mag[i + 1] > ratio * ref or not np.isfinite(mag[i + 1]):
            cut = i + 1
            break
    phys = np.sort(lam[:cut].real)
    log.debug("saddle pencil: %d finite, %d spurious (dim M_h = %d)", cut, len(lam) - cut, m)
    return EigenResult(phys, np.zeros((n, 0)), spurious=len(lam) - cut)


def condition_estimate(S, B=None) -> float:
    """lambda_max / lambda_min of symmetric S (restricted to ker B if given)."""
    S = sp.csr_matrix(S)
    if B is not None and sp.csr_matrix(B).shape[0]:
        Z = nullspace_basis(B).Z
        S = Z.T @ S @ Z
    S = ((S + S.T) * 0.5).tocsc()
    n = S.shape[0]
    if n <= DENSE_LIMIT:
        ev = sla.eigvalsh(S.toarray())
        lo, hi = ev[0], ev[-1]
    else:
        hi = spla.eigsh(S, k=1, which="LA", return_eigenvectors=False)[0]
        lo = spla.eigsh(S, k=1, sigma=0, which="LM", return_eigenvectors=False)[0]
    if lo <= 0 or hi <= 0:
        raise IndefiniteError(f"operator is not positive definite (lambda_min = {lo:.3g})")
    return float(hi / lo)
