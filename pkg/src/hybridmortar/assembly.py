"""Quadrature-based assembly of volume, interface and boundary forms.

Global unknowns are stacked patch by patch; within a patch, vector fields
store component blocks one after another (``offset + comp * dim + i``).

Normal-derivative jumps on an interface use the slave's outward normal on
both sides, ``[w] = w_slave - w_master``.  Penalty terms act on the
elementwise mean (over slave boundary elements) of the jump and are weighted
with powers of the local slave element length.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .multipatch import (MortarSpace, MultiPatch, Patch, build_mortar_space,
                         interface_quadrature, side_quadrature)
from .splines import directional_derivative, evaluate, is_affine


class ConfigurationError(ValueError):
    """Unsupported or inconsistent assembly configuration."""


class DegreeError(ConfigurationError):
    """Polynomial degree too low for the requested form."""


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty constants and scaling for the hybrid coupling.

    ``half_order`` is n for a PDE of order 2n.  ``orders`` lists the
    normal-derivative orders m penalized on interfaces (default 1..p-1).
    ``scaling="energy"`` weights interface/boundary integrals by
    h^(2(m-n)+1) and point terms by h^(2(m-n)+2); ``"literal"`` uses
    h^(2(m-n)-1) and h^(2(m-n)).
    """

    half_order: int = 1
    interface: float = 0.0
    boundary: float = 0.0
    crosspoint: float = 0.0
    orders: tuple | None = None
    per_order: tuple = ()          # ((m, C_m), ...) overrides ``interface``
    interface_terms: bool = True
    boundary_terms: bool = True
    crosspoint_terms: bool = True
    scaling: str = "energy"

    def __post_init__(self):
        if self.half_order not in (1, 2):
            raise ConfigurationError("half_order must be 1 or 2")
        consts = [self.interface, self.boundary, self.crosspoint] + [c for _, c in self.per_order]
        if any(c < 0 for c in consts):
            raise ConfigurationError("penalty constants must be nonnegative")
        if self.scaling not in ("energy", "literal"):
            raise ConfigurationError(f"unknown scaling {self.scaling!r}")
        if self.orders is not None:
            object.__setattr__(self, "orders", tuple(int(m) for m in self.orders))

    @classmethod
    def uniform(cls, C: float, half_order: int = 1, **kw) -> "PenaltyConfig":
        """One constant C for every penalty family."""
        return cls(half_order=half_order, interface=C, boundary=C, crosspoint=C, **kw)

    def interface_orders(self, p: int) -> tuple:
        ms = self.orders if self.orders is not None else tuple(range(1, p))
        for m in ms:
            if not 1 <= m <= p - 1:
                raise DegreeError(f"penalty order m={m} requires 1 <= m <= p-1 (p={p})")
        return ms

    def interface_constant(self, m: int) -> float:
        return dict(self.per_order).get(m, self.interface)

    def edge_exponent(self, m: int) -> int:
        return 2 * (m - self.half_order) + (1 if self.scaling == "energy" else -1)

    def point_exponent(self, m: int) -> int:
        return 2 * (m - self.half_order) + (2 if self.scaling == "energy" else 0)


@dataclass
class AssembledSystem:
    A: sp.csr_matrix
    M: sp.csr_matrix | None
    B: sp.csr_matrix
    rhs: np.ndarray | None
    ncomp: int = 1
    free: np.ndarray | None = None           # kept global indices (None: all)
    lift: np.ndarray | None = None           # full-length prescribed values
    B_rhs: np.ndarray | None = None
    row_interface: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    dim_full: int = 0

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        """Full coefficient vector from free-dof values (adds the lifting)."""
        if self.free is None:
            return np.asarray(u_free)
        u_free = np.asarray(u_free)
        out = np.zeros((self.dim_full,) + u_free.shape[1:])
        if self.lift is not None:
            out += self.lift.reshape((-1,) + (1,) * (u_free.ndim - 1))
        out[self.free] = u_free
        return out


# ---------------------------------------------------------------------------
# field layout and quadrature helpers

def field_offsets(mp: MultiPatch, ncomp: int = 1) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([ncomp * p.dim for p in mp.patches])])


def _global_idx(mp, ncomp, k, idx):
    """Global indices (npts, ncomp*nloc) for local scalar indices ``idx`` on patch k."""
    off = field_offsets(mp, ncomp)[k]
    dim = mp.patches[k].dim
    return np.concatenate([off + c * dim + idx for c in range(ncomp)], axis=1)


def _gauss_elements(kv, ngauss):
    xg, wg = np.polynomial.legendre.leggauss(ngauss)
    b = kv.breaks
    a, c = b[:-1], b[1:]
    pts = ((a + c)[:, None] + (c - a)[:, None] * xg) / 2
    w = ((c - a)[:, None] / 2) * wg
    return pts, w


def volume_quadrature(patch: Patch, ngauss: int | None = None, order: int = 2):
    """Evaluate basis data at Gauss points; arrays are element-major.

    Returns ``(ev, w, nel, nq)`` where ``w`` includes |det J|.
    """
    ng = ngauss or patch.gauss_points
    kvs = patch.space.kvs
    if patch.pdim == 1:
        pts, w = _gauss_elements(kvs[0], ng)
        zeta, wq = pts.reshape(-1, 1), w.reshape(-1)
        nel, nq = pts.shape
    else:
        p0, w0 = _gauss_elements(kvs[0], ng)
        p1, w1 = _gauss_elements(kvs[1], ng)
        e0, e1 = len(p0), len(p1)
        Z0 = np.broadcast_to(p0[:, None, :, None], (e0, e1, ng, ng))
        Z1 = np.broadcast_to(p1[None, :, None, :], (e0, e1, ng, ng))
        zeta = np.stack([Z0, Z1], -1).reshape(-1, 2)
        wq = (w0[:, None, :, None] * w1[None, :, None, :]).reshape(-1)
        nel, nq = e0 * e1, ng * ng
    ev = evaluate(patch.geometry, zeta, order)
    return ev, wq * np.abs(ev.detJ), nel, nq


def _scatter(rows, cols, vals, n, m=None):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(n, m if m is not None else n)).tocsr()


def _assemble_elements(gidx, Ke, n):
    nloc = gidx.shape[1]
    rows = np.broadcast_to(gidx[:, :, None], (len(gidx), nloc, nloc))
    cols = np.broadcast_to(gidx[:, None, :], (len(gidx), nloc, nloc))
    return _scatter(rows, cols, Ke, n)


def _volume_form(mp, kernel, ncomp=1, ngauss=None, order=2):
    n = int(field_offsets(mp, ncomp)[-1])
    out = sp.csr_matrix((n, n))
    for k, patch in enumerate(mp.patches):
        ev, w, nel, nq = volume_quadrature(patch, ngauss, order)
        Ke = kernel(ev, w.reshape(nel, nq), nel, nq)
        gidx = _global_idx(mp, ncomp, k, ev.idx[::nq])
        out = out + _assemble_elements(gidx, Ke, n)
    return _symmetrize(out)


def _symmetrize(S):
    return ((S + S.T) * 0.5).tocsr()


def _r(a, nel, nq):
    return a.reshape((nel, nq) + a.shape[1:])


def _gram(w, F, G=None):
    """Element matrices sum_q w_q F[e,q,a,...] G[e,q,b,...] (contracting trailing axes)."""
    G = F if G is None else G
    nel, nq, nl = F.shape[:3]
    f = np.moveaxis(F, 2, 1).reshape(nel, nl, -1)
    g = np.moveaxis(G, 2, 1).reshape(nel, G.shape[2], -1)
    wf = f * np.repeat(w, f.shape[2] // nq, axis=1).reshape(nel, 1, -1)
    return wf @ np.swapaxes(g, 1, 2)


# ---------------------------------------------------------------------------
# volume forms

def assemble_mass(mp: MultiPatch, ncomp: int = 1, ngauss: int | None = None) -> sp.csr_matrix:
    """Consistent mass matrix sum_k int phi_i phi_j."""
    def kern(ev, w, nel, nq):
        K = _gram(w, _r(ev.N, nel, nq))
        return _block_diag_local(K, ncomp)
    return _volume_form(mp, kern, ncomp, ngauss, order=0)


def _block_diag_local(K, ncomp):
    if ncomp == 1:
        return K
    nel, nl, _ = K.shape
    out = np.zeros((nel, ncomp * nl, ncomp * nl))
    for c in range(ncomp):
        out[:, c * nl:(c + 1) * nl, c * nl:(c + 1) * nl] = K
    return out


def assemble_stiffness_laplace(mp: MultiPatch, ngauss: int | None = None) -> sp.csr_matrix:
    """Broken Laplace stiffness sum_k int grad phi_i . grad phi_j."""
    def kern(ev, w, nel, nq):
        return _gram(w, _r(ev.dN, nel, nq))
    return _volume_form(mp, kern, 1, ngauss, order=1)


def lame_parameters(E: float, nu: float):
    """Plane-strain Lame constants (mu, lambda)."""
    if not -1.0 < nu < 0.5:
        raise ConfigurationError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    if E <= 0:
        raise ConfigurationError("elastic modulus must be positive")
    return E / (2 + 2 * nu), nu * E / ((1 + nu) * (1 - 2 * nu))


def assemble_stiffness_elasticity(mp: MultiPatch, E: float = 1.0, nu: float = 0.3,
                                  ngauss: int | None = None) -> sp.csr_matrix:
    """Linear elasticity stiffness int sigma(u) : eps(v) for 2D vector fields."""
    if mp.pdim != 2:
        raise ConfigurationError("elasticity requires a 2D geometry")
    mu, lam = lame_parameters(E, nu)

    def kern(ev, w, nel, nq):
        G = _r(ev.dN, nel, nq)
        nl = G.shape[2]
        lap = _gram(w, G)
        out = np.zeros((nel, 2 * nl, 2 * nl))
        for a in range(2):
            for b in range(2):
                blk = mu * _gram(w, G[..., b], G[..., a]) + lam * _gram(w, G[..., a], G[..., b])
                if a == b:
                    blk = blk + mu * lap
                out[:, a * nl:(a + 1) * nl, b * nl:(b + 1) * nl] = blk
        return out
    return _volume_form(mp, kern, 2, ngauss, order=1)


def assemble_bending(mp: MultiPatch, ngauss: int | None = None) -> sp.csr_matrix:
    """Broken plate bending form sum_k int D^2 u : D^2 v."""
    if mp.degree < 2:
        raise DegreeError("the bending form needs p >= 2")

    def kern(ev, w, nel, nq):
        return _gram(w, _r(ev.d2N, nel, nq))
    return _volume_form(mp, kern, 1, ngauss)


def assemble_load(mp: MultiPatch, f, ncomp: int = 1, ngauss: int | None = None) -> np.ndarray:
    """Load vector sum_k int f phi_i; ``f(x)`` maps (npts, d) to (npts,) or (npts, ncomp)."""
    n = int(field_offsets(mp, ncomp)[-1])
    rhs = np.zeros(n)
    for k, patch in enumerate(mp.patches):
        ev, w, nel, nq = volume_quadrature(patch, ngauss, order=0)
        fx = np.asarray(f(ev.x), dtype=float).reshape(len(w), -1)
        if fx.shape[1] == 1 and ncomp > 1:
            fx = np.repeat(fx, ncomp, axis=1)
        vals = np.concatenate([(w * fx[:, c])[:, None] * ev.N for c in range(ncomp)], axis=1)
        np.add.at(rhs, _global_idx(mp, ncomp, k, ev.idx), vals)
    return rhs


# ---------------------------------------------------------------------------
# trace operators on sides

def _side_eval(patch: Patch, side: int, t, order: int = 2):
    return evaluate(patch.geometry, patch.side_points(side, t), order)


def _op_values(patch, ev, normals, kind, m=1, ncomp=1, lame=None):
    """Values of a trace operator per output component.

    Returns (nout, npts, ncomp*nloc) for local dofs laid out component-major.
    """
    npts, nl = ev.N.shape
    if kind == "traction":
        mu, lam = lame
        G = ev.dN
        dn = np.einsum("pli,pi->pl", G, normals)
        out = np.zeros((2, npts, 2 * nl))
        for c in range(2):
            for a in range(2):
                v = mu * (normals[:, a:a + 1] * G[..., c]) + lam * (G[..., a] * normals[:, c:c + 1])
                if a == c:
                    v = v + mu * dn
                out[c, :, a * nl:(a + 1) * nl] = v
        return out
    if kind == "value":
        s = ev.N
    elif kind == "dn":
        s = directional_derivative(patch.geometry, ev, normals, m)
    else:
        raise ConfigurationError(f"unknown trace operator {kind!r}")
    out = np.zeros((ncomp, npts, ncomp * nl))
    for c in range(ncomp):
        out[c, :, c * nl:(c + 1) * nl] = s
    return out


def _interface_ops(mp, l, t_s, t_m, kind, m=1, ncomp=1, lame=None, combine="jump"):
    """Jump (slave - master) or average of a trace operator on interface ``l``."""
    it = mp.interfaces[l]
    ps, pm = mp.patches[it.slave[0]], mp.patches[it.master[0]]
    order = max(2, m)
    evs = _side_eval(ps, it.slave[1], t_s, order)
    evm = _side_eval(pm, it.master[1], t_m, order)
    nrm = ps.outward_normals(it.slave[1], evs)
    vs = _op_values(ps, evs, nrm, kind, m, ncomp, lame)
    vm = _op_values(pm, evm, nrm, kind, m, ncomp, lame)
    sgn, ws = (-1.0, 1.0) if combine == "jump" else (1.0, 0.5)
    idx = np.concatenate([_global_idx(mp, ncomp, it.slave[0], evs.idx),
                          _global_idx(mp, ncomp, it.master[0], evm.idx)], axis=1)
    vals = np.concatenate([ws * vs, sgn * ws * vm], axis=2)
    return idx, vals


def _boundary_ops(mp, k, side, t, kind, m=1, ncomp=1, lame=None):
    patch = mp.patches[k]
    ev = _side_eval(patch, side, t, max(2, m))
    nrm = patch.outward_normals(side, ev)
    return _global_idx(mp, ncomp, k, ev.idx), _op_values(patch, ev, nrm, kind, m, ncomp, lame), ev, nrm


def _mean_penalty(idx, vals, q, weight, n):
    """sum_e weight_e |e| (mean_e a)(mean_e b) for every output component."""
    nel = len(q.h)
    meas = np.bincount(q.element, weights=q.weights, minlength=nel)
    out = sp.csr_matrix((n, n))
    for vc in vals:
        rows = np.broadcast_to(q.element[:, None], idx.shape)
        G = _scatter(rows, idx, (q.weights / meas[q.element])[:, None] * vc, nel, n)
        out = out + G.T @ sp.diags(weight * meas) @ G
    return out


def _point_penalty(idx, vals, weight, n):
    out = sp.csr_matrix((n, n))
    for vc in vals:
        r = _scatter(np.zeros_like(idx), idx, vc, 1, n)
        out = out + weight * (r.T @ r)
    return out


# ---------------------------------------------------------------------------
# mortar coupling and penalties

def build_mortar_spaces(mp: MultiPatch, **kw) -> list:
    return [build_mortar_space(mp, l, **kw) for l in range(len(mp.interfaces))]


def assemble_mortar_B(mp: MultiPatch, mortar_spaces=None, ncomp: int = 1):
    """Coupling matrix b(tau, v) = sum_l int tau [v]; rows follow the multiplier basis.

    Returns ``(B, row_interface)``.
    """
    if mortar_spaces is None:
        mortar_spaces = build_mortar_spaces(mp)
    n = int(field_offsets(mp, ncomp)[-1])
    blocks, labels = [], []
    for ms in mortar_spaces:
        l = ms.interface
        q = interface_quadrature(mp, l)
        idx, vals = _interface_ops(mp, l, q.t, q.t_master, "value", ncomp=ncomp)
        psi = ms.eval(q.t) * q.weights[:, None]          # (nq, dimM)
        for c in range(ncomp):
            data = np.einsum("qj,qa->jqa", psi, vals[c])
            rows = np.broadcast_to(np.arange(ms.dim)[:, None, None], data.shape)
            cols = np.broadcast_to(idx[None], data.shape)
            blocks.append(_scatter(rows, cols, data, ms.dim, n))
            labels += [l] * ms.dim
    if not blocks:
        return sp.csr_matrix((0, n)), np.zeros(0, int)
    return sp.vstack(blocks).tocsr(), np.array(labels)


def _interface_penalty_family(mp, cfg, n, kind, ncomp, lame):
    p = mp.degree
    out = sp.csr_matrix((n, n))
    orders = (1,) if kind == "traction" else cfg.interface_orders(p)
    for l, it in enumerate(mp.interfaces):
        q = interface_quadrature(mp, l)
        for m in orders:
            C = cfg.interface_constant(m)
            if C == 0:
                continue
            idx, vals = _interface_ops(mp, l, q.t, q.t_master, kind, m, ncomp, lame)
            out = out + C * _mean_penalty(idx, vals, q, q.h ** cfg.edge_exponent(m), n)
            if cfg.crosspoint_terms and cfg.crosspoint > 0 and mp.pdim == 2:
                for end, t in ((0, 0.0), (1, 1.0)):
                    h = it.h_s[0 if end == 0 else -1]
                    ip, vp = _interface_ops(mp, l, np.array([t]), it.to_master(np.array([t])),
                                            kind, m, ncomp, lame)
                    out = out + _point_penalty(ip, vp, cfg.crosspoint * h ** cfg.point_exponent(m), n)
    return out


def assemble_interface_penalty(mp: MultiPatch, cfg: PenaltyConfig, *, kind: str = "dn",
                               ncomp: int = 1, lame=None) -> sp.csr_matrix:
    """Weighted penalty on the projected jumps of normal derivatives across interfaces,
    plus point evaluations at interface endpoints."""
    n = int(field_offsets(mp, ncomp)[-1])
    if not cfg.interface_terms:
        return sp.csr_matrix((n, n))
    return _symmetrize(_interface_penalty_family(mp, cfg, n, kind, ncomp, lame))


def assemble_boundary_penalty(mp: MultiPatch, cfg: PenaltyConfig, *, kind: str = "dn",
                              ncomp: int = 1, lame=None, data=None):
    """Penalty on the projected normal derivative (or traction) over Gamma_BC.

    With ``data`` (a callable ``(x, normals) -> g_n`` of shape (npts,) or
    (npts, nout)), also returns the right-hand side for inhomogeneous data.
    """
    n = int(field_offsets(mp, ncomp)[-1])
    P = sp.csr_matrix((n, n))
    rhs = np.zeros(n)
    if cfg.boundary_terms and cfg.boundary > 0:
        m = 1
        for k, side in mp.penalty_boundary:
            patch = mp.patches[k]
            q = side_quadrature(patch, side, patch.gauss_points)
            idx, vals, ev, nrm = _boundary_ops(mp, k, side, q.t, kind, m, ncomp, lame)
            wgt = q.h ** cfg.edge_exponent(m)
            P = P + cfg.boundary * _mean_penalty(idx, vals, q, wgt, n)
            if data is not None:
                g = np.asarray(data(ev.x, nrm), dtype=float).reshape(len(q.t), -1)
                nel = len(q.h)
                meas = np.bincount(q.element, weights=q.weights, minlength=nel)
                for c, vc in enumerate(vals):
                    gmean = np.bincount(q.element, weights=q.weights * g[:, c], minlength=nel) / meas
                    coef = cfg.boundary * wgt * gmean                      # per element
                    contrib = (coef[q.element] * q.weights)[:, None] * vc
                    np.add.at(rhs, idx, contrib)
            if cfg.crosspoint_terms and cfg.crosspoint > 0 and mp.pdim == 2:
                for t, h in ((0.0, q.h[0]), (1.0, q.h[-1])):
                    ip, vp, evp, np_ = _boundary_ops(mp, k, side, np.array([t]), kind, m, ncomp, lame)
                    wp = cfg.crosspoint * h ** cfg.point_exponent(m)
                    P = P + _point_penalty(ip, vp, wp, n)
                    if data is not None:
                        g = np.asarray(data(evp.x, np_), dtype=float).reshape(1, -1)
                        for c, vc in enumerate(vp):
                            np.add.at(rhs, ip, wp * g[0, c] * vc)
    P = _symmetrize(P)
    return (P, rhs) if data is not None else P


def assemble_biharmonic_consistency(mp: MultiPatch, cfg: PenaltyConfig | None = None,
                                    *, data=None):
    """Symmetric consistency terms for the plate form.

    Interfaces contribute -int {d_nn u}[d_n v] + [d_n u]{d_nn v}; Dirichlet
    sides contribute -int d_nn u d_n v + d_n u d_nn v (outward normal).
    With ``data`` (callable ``(x, normals)`` -> prescribed d_n u on Dirichlet sides), also
    returns the right-hand side term -int d_nn v g_n.
    """
    if cfg is not None and cfg.half_order != 2:
        raise ConfigurationError("consistency terms belong to fourth-order problems (n = 2)")
    if mp.degree < 2:
        raise DegreeError("consistency terms need p >= 2")
    n = mp.dim
    K = sp.csr_matrix((n, n))
    rhs = np.zeros(n)
    for l in range(len(mp.interfaces)):
        q = interface_quadrature(mp, l)
        ij, vj = _interface_ops(mp, l, q.t, q.t_master, "dn", 1)
        ia, va = _interface_ops(mp, l, q.t, q.t_master, "dn", 2, combine="avg")
        rows = np.arange(len(q.t))[:, None]
        Qj = _scatter(np.broadcast_to(rows, ij.shape), ij, vj[0], len(q.t), n)
        Qa = _scatter(np.broadcast_to(rows, ia.shape), ia, va[0], len(q.t), n)
        W = sp.diags(q.weights)
        K = K - (Qa.T @ W @ Qj + Qj.T @ W @ Qa)
    for k, side in mp.sides("D"):
        patch = mp.patches[k]
        q = side_quadrature(patch, side, patch.gauss_points)
        i1, v1, ev, nrm = _boundary_ops(mp, k, side, q.t, "dn", 1)
        _, v2, _, _ = _boundary_ops(mp, k, side, q.t, "dn", 2)
        rows = np.broadcast_to(np.arange(len(q.t))[:, None], i1.shape)
        Q1 = _scatter(rows, i1, v1[0], len(q.t), n)
        Q2 = _scatter(rows, i1, v2[0], len(q.t), n)
        W = sp.diags(q.weights)
        K = K - (Q2.T @ W @ Q1 + Q1.T @ W @ Q2)
        if data is not None:
            g = np.asarray(data(ev.x, nrm), dtype=float).reshape(-1)
            np.add.at(rhs, i1, -(q.weights * g)[:, None] * v2[0])
    K = _symmetrize(K)
    return (K, rhs) if data is not None else K


# ---------------------------------------------------------------------------
# essential boundary conditions

def dirichlet_dofs(mp: MultiPatch, ncomp: int = 1, clamped: bool = False, sides=None) -> np.ndarray:
    """Global indices of dofs fixed by u = 0 (and d_n u = 0 if ``clamped``) on Dirichlet sides."""
    sides = mp.sides("D") if sides is None else sides
    if clamped:
        if len(mp.patches) > 1:
            raise ConfigurationError("strong d_n u = 0 is supported on single-patch geometries only")
        if not is_affine(mp.patches[0].geometry):
            raise ConfigurationError("strong d_n u = 0 needs an affine (tensor-aligned) patch")
    out = []
    for k, side in sides:
        patch = mp.patches[k]
        layers = (0, 1) if clamped else (0,)
        for layer in layers:
            loc = patch.side_dofs(side, layer)
            out.append(_global_idx(mp, ncomp, k, loc[None, :]).ravel())
    if not out:
        return np.zeros(0, int)
    return np.unique(np.concatenate(out))


def dirichlet_lift(mp: MultiPatch, g, ncomp: int = 1) -> np.ndarray:
    """Coefficients on Dirichlet trace dofs interpolating ``g`` (zero elsewhere)."""
    n = int(field_offsets(mp, ncomp)[-1])
    lift = np.zeros(n)
    for k, side in mp.sides("D"):
        patch = mp.patches[k]
        loc = patch.side_dofs(side)
        kv = patch.trace_kv(side)
        t = np.zeros(1) if kv is None else kv.greville()
        ev = evaluate(patch.geometry, patch.side_points(side, t), 0)
        E = np.zeros((len(t), patch.dim))
        np.put_along_axis(E, ev.idx, ev.N, axis=1)
        E = E[:, loc]
        gx = np.asarray(g(ev.x), dtype=float).reshape(len(t), -1)
        for c in range(ncomp):
            vals = np.linalg.solve(E, gx[:, c if gx.shape[1] > 1 else 0])
            lift[_global_idx(mp, ncomp, k, loc[None, :])[0][c * len(loc):(c + 1) * len(loc)]] = vals
    return lift


def apply_essential_bc(system: AssembledSystem, mp: MultiPatch, *, clamped: bool = False,
                       g=None) -> AssembledSystem:
    """Eliminate Dirichlet dofs (u = g, homogeneous if ``g`` is None).

    ``clamped`` additionally fixes the second dof layer (strong d_n u = 0,
    single affine patch only).
    """
    n = system.A.shape[0]
    fixed = dirichlet_dofs(mp, system.ncomp, clamped)
    free = np.setdiff1d(np.arange(n), fixed)
    lift = np.zeros(n) if g is None else dirichlet_lift(mp, g, system.ncomp)
    if clamped and g is not None:
        raise ConfigurationError("strong clamping supports homogeneous data only")
    A = system.A
    rhs = None
    if system.rhs is not None:
        rhs = (system.rhs - A @ lift)[free]
    B = system.B
    Brhs = None if system.B_rhs is None else system.B_rhs.copy()
    if B.shape[0]:
        Brhs = (np.zeros(B.shape[0]) if Brhs is None else Brhs) - B @ lift
        B = B[:, free]
    else:
        B = sp.csr_matrix((0, len(free)))
    return replace(system,
                   A=A[free][:, free].tocsr(),
                   M=None if system.M is None else system.M[free][:, free].tocsr(),
                   B=B.tocsr(), rhs=rhs, free=free, lift=lift, B_rhs=Brhs, dim_full=n)
