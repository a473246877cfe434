"""Multi-patch topology, mortar multiplier spaces and interface quadrature.

Sides of a patch are numbered ``2 * axis + end``; in 2D the names
``left/right`` refer to axis 0 (zeta_0 = 0/1) and ``bottom/top`` to axis 1.
A side's trace is parametrized by the remaining parametric coordinate ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .splines import (GeometryMap, KnotVector, SplineError, TensorSplineSpace,
                      basis_matrix, evaluate, geometry_eval)

SIDE_NAMES = {"left": 0, "right": 1, "bottom": 2, "top": 3}
SIDE_LABELS = {v: k for k, v in SIDE_NAMES.items()}


class TopologyError(ValueError):
    """Invalid multi-patch configuration."""


class DiscretizationError(ValueError):
    """Discretization too coarse for the requested construction."""


def side_index(side) -> int:
    if isinstance(side, str):
        try:
            return SIDE_NAMES[side]
        except KeyError:
            raise TopologyError(f"unknown side name {side!r}") from None
    return int(side)


@dataclass(frozen=True)
class Patch:
    geometry: GeometryMap

    @property
    def space(self) -> TensorSplineSpace:
        return self.geometry.space

    @property
    def pdim(self) -> int:
        return self.geometry.pdim

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def degree(self) -> int:
        return self.space.degree

    @property
    def gauss_points(self) -> int:
        """Default Gauss points per direction: p+1, or p+4 on rational patches."""
        return self.degree + (4 if self.geometry.is_rational else 1)

    def side_axis_end(self, side: int):
        axis, end = divmod(side, 2)
        if axis >= self.pdim:
            raise TopologyError(f"side {side} does not exist for a {self.pdim}D patch")
        return axis, end

    def trace_kv(self, side: int) -> KnotVector | None:
        """Knot vector of the side's trace space (None for 1D point sides)."""
        axis, _ = self.side_axis_end(side)
        if self.pdim == 1:
            return None
        return self.space.kvs[1 - axis]

    def side_dofs(self, side: int, layer: int = 0) -> np.ndarray:
        """Flat indices of the ``layer``-th dof layer at ``side``, ordered along t."""
        axis, end = self.side_axis_end(side)
        shape = self.space.shape
        ids = np.arange(self.dim).reshape(shape)
        i = layer if end == 0 else shape[axis] - 1 - layer
        return np.take(ids, i, axis=axis).reshape(-1)

    def side_points(self, side: int, t) -> np.ndarray:
        """Parametric points on ``side`` for trace parameters ``t``."""
        axis, end = self.side_axis_end(side)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.empty((len(t), self.pdim))
        z[:, axis] = float(end)
        if self.pdim == 2:
            z[:, 1 - axis] = t
        return z

    def outward_normals(self, side: int, ev) -> np.ndarray:
        """Unit outward normals at points evaluated on ``side``."""
        axis, end = self.side_axis_end(side)
        sign = 1.0 if end == 1 else -1.0
        # gradient of zeta_axis is normal to the level set zeta_axis = const
        g = sign * ev.Jinv[:, axis, :]
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def corners(self) -> np.ndarray:
        return self.geometry.control_points.reshape(-1, self.pdim)[
            [0, -1] if self.pdim == 1 else
            [0, self.space.shape[1] - 1, -self.space.shape[1], -1]]


@dataclass(frozen=True)
class Interface:
    id: int
    slave: tuple
    master: tuple
    reversed: bool
    h_s: np.ndarray = field(repr=False)   # physical length of each slave trace element

    def to_master(self, t):
        return 1.0 - t if self.reversed else t


@dataclass(frozen=True)
class Crosspoint:
    x: np.ndarray
    incident: tuple  # (interface id, end) pairs with end 0 at t=0, 1 at t=1


@dataclass(frozen=True)
class MultiPatch:
    patches: tuple
    interfaces: tuple
    boundary: dict          # (patch, side) -> "D" | "N" for every exterior side
    crosspoints: tuple
    penalty_boundary: tuple = ()   # exterior sides forming Gamma_BC

    @property
    def pdim(self) -> int:
        return self.patches[0].pdim

    @property
    def degree(self) -> int:
        return self.patches[0].degree

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([p.dim for p in self.patches])])

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    def sides(self, tag: str) -> list:
        return sorted(k for k, v in self.boundary.items() if v == tag)

    def with_penalty_boundary(self, sides) -> "MultiPatch":
        sides = tuple(sorted((int(k), side_index(s)) for k, s in sides))
        for s in sides:
            if s not in self.boundary:
                raise TopologyError(f"penalty side {s} is not an exterior side")
        return replace(self, penalty_boundary=sides)

    def swapped(self, l: int) -> "MultiPatch":
        """Same topology with slave and master exchanged on interface ``l``."""
        ifs = list(self.interfaces)
        it = ifs[l]
        specs = [(i.slave, i.master) for i in ifs]
        specs[l] = (it.master, it.slave)
        return build_multipatch(self.patches, specs, dict(self.boundary),
                                penalty_boundary=self.penalty_boundary)


def _diameter(patches) -> float:
    pts = np.concatenate([p.geometry.control_points.reshape(-1, p.pdim) for p in patches])
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def _side_trace_points(patch: Patch, side: int, t) -> np.ndarray:
    return geometry_eval(patch.geometry, patch.side_points(side, t), check=False)[0]


def _arclengths(patch: Patch, side: int, breaks, ngauss: int = 16) -> np.ndarray:
    if patch.pdim == 1:
        return np.array([_adjacent_length_1d(patch, side)])
    xg, wg = np.polynomial.legendre.leggauss(ngauss)
    a, b = breaks[:-1], breaks[1:]
    t = ((a + b)[:, None] + (b - a)[:, None] * xg[None, :]) / 2
    _, J, _ = geometry_eval(patch.geometry, patch.side_points(side, t.reshape(-1)), check=False)
    axis, _ = patch.side_axis_end(side)
    speed = np.linalg.norm(J[:, :, 1 - axis], axis=1).reshape(t.shape)
    return (speed * wg).sum(axis=1) * (b - a) / 2


def _adjacent_length_1d(patch: Patch, side: int) -> float:
    axis, end = patch.side_axis_end(side)
    br = patch.space.kvs[0].breaks
    a, b = (br[0], br[1]) if end == 0 else (br[-2], br[-1])
    xa = geometry_eval(patch.geometry, [a])[0]
    xb = geometry_eval(patch.geometry, [b])[0]
    return float(abs(xb[0] - xa[0]))


def _point_in_polygon(pts, poly) -> np.ndarray:
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x1, y1 = poly[:, 0][None, :], poly[:, 1][None, :]
    x2, y2 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = ((y1 > y) != (y2 > y)) & (x < (x2 - x1) * (y - y1) / (y2 - y1) + x1)
    return cross.sum(axis=1) % 2 == 1


def _boundary_polygon(patch: Patch, n: int = 40) -> np.ndarray:
    t = np.linspace(0, 1, n, endpoint=False)
    zs = [np.stack([t, np.zeros_like(t)], 1), np.stack([np.ones_like(t), t], 1),
          np.stack([1 - t, np.ones_like(t)], 1), np.stack([np.zeros_like(t), 1 - t], 1)]
    return geometry_eval(patch.geometry, np.concatenate(zs), check=False)[0]


def _check_disjoint(patches, tol):
    if patches[0].pdim == 1:
        iv = sorted((float(p.corners()[:, 0].min()), float(p.corners()[:, 0].max())) for p in patches)
        for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
            if a1 < b0 - tol:
                raise TopologyError("patches overlap")
        return
    s = (np.arange(5) + 0.5) / 5
    zeta = np.stack(np.meshgrid(s, s, indexing="ij"), -1).reshape(-1, 2)
    interior = [geometry_eval(p.geometry, zeta, check=False)[0] for p in patches]
    polys = [_boundary_polygon(p) for p in patches]
    for i in range(len(patches)):
        for j in range(len(patches)):
            if i != j and np.any(_point_in_polygon(interior[i], polys[j])):
                raise TopologyError(f"patches {i} and {j} overlap")


def build_multipatch(patches, interfaces=(), boundary="D", *, penalty_boundary=(),
                     tol: float | None = None) -> MultiPatch:
    """Validate patches and interfaces and tag the exterior boundary.

    ``interfaces`` is a sequence of ``((slave_patch, slave_side), (master_patch,
    master_side))``; the side named first is the slave.  ``boundary`` is a tag
    ("D" or "N") for all exterior sides, or a dict mapping ``(patch, side)`` to
    a tag, with a ``"default"`` entry for sides not listed (default "D").
    """
    patches = tuple(p if isinstance(p, Patch) else Patch(p) for p in patches)
    if not patches:
        raise TopologyError("need at least one patch")
    pdim = patches[0].pdim
    if any(p.pdim != pdim for p in patches):
        raise TopologyError("all patches must share the parametric dimension")
    if tol is None:
        tol = 1e-10 * max(_diameter(patches), 1.0)

    used = set()
    ifaces = []
    for l, (s_spec, m_spec) in enumerate(interfaces):
        s = (int(s_spec[0]), side_index(s_spec[1]))
        m = (int(m_spec[0]), side_index(m_spec[1]))
        for k, sd in (s, m):
            if not 0 <= k < len(patches):
                raise TopologyError(f"interface {l} references missing patch {k}")
            patches[k].side_axis_end(sd)
            if (k, sd) in used:
                raise TopologyError(f"side {(k, sd)} used by more than one interface")
            used.add((k, sd))
        if s[0] == m[0]:
            raise TopologyError(f"interface {l} couples patch {s[0]} with itself")
        ps, pm = patches[s[0]], patches[m[0]]
        if pdim == 1:
            xs = _side_trace_points(ps, s[1], [0.0])
            xm = _side_trace_points(pm, m[1], [0.0])
            if np.linalg.norm(xs - xm) > tol:
                raise TopologyError(f"interface {l}: endpoints do not coincide")
            rev = False
        else:
            t = np.unique(np.concatenate([np.linspace(0, 1, 17), ps.trace_kv(s[1]).breaks]))
            xs = _side_trace_points(ps, s[1], t)
            d_same = np.abs(xs - _side_trace_points(pm, m[1], t)).max()
            d_rev = np.abs(xs - _side_trace_points(pm, m[1], 1 - t)).max()
            if min(d_same, d_rev) > tol:
                raise TopologyError(
                    f"interface {l}: slave and master curves do not match "
                    f"(distance {min(d_same, d_rev):.3g} > {tol:.3g})")
            rev = bool(d_rev < d_same)
        kv = ps.trace_kv(s[1])
        h = _arclengths(ps, s[1], kv.breaks if kv is not None else None)
        if np.any(h <= 0):
            raise TopologyError(f"interface {l}: degenerate slave element")
        ifaces.append(Interface(l, s, m, rev, h))

    exterior = [(k, sd) for k, p in enumerate(patches) for sd in range(2 * pdim) if (k, sd) not in used]
    if isinstance(boundary, str):
        tags = {e: boundary for e in exterior}
    else:
        default = boundary.get("default", "D")
        given = {(int(k[0]), side_index(k[1])): v for k, v in boundary.items() if k != "default"}
        for key in given:
            if key in used:
                raise TopologyError(f"side {key} is both an interface and a boundary side")
            if key not in exterior:
                raise TopologyError(f"boundary tag for nonexistent side {key}")
        tags = {e: given.get(e, default) for e in exterior}
    for e, v in tags.items():
        if v not in ("D", "N"):
            raise TopologyError(f"boundary tag {v!r} for side {e} must be 'D' or 'N'")

    _check_disjoint(patches, tol)

    cps = []
    if pdim == 2:
        for it in ifaces:
            ps = patches[it.slave[0]]
            ends = _side_trace_points(ps, it.slave[1], [0.0, 1.0])
            for end, x in enumerate(ends):
                for i, cp in enumerate(cps):
                    if np.linalg.norm(cp.x - x) <= tol:
                        cps[i] = Crosspoint(cp.x, cp.incident + ((it.id, end),))
                        break
                else:
                    cps.append(Crosspoint(x, ((it.id, end),)))
    mp = MultiPatch(patches, tuple(ifaces), tags, tuple(cps))
    return mp.with_penalty_boundary(penalty_boundary) if penalty_boundary else mp


# ---------------------------------------------------------------------------
# mortar multiplier spaces

@dataclass(frozen=True)
class MortarSpace:
    interface: int
    kv: KnotVector | None
    T: np.ndarray = field(repr=False)   # (dim M_l, trace dim) coefficients in the trace B-spline basis
    reduced: tuple = (False, False)

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    def eval(self, t) -> np.ndarray:
        """Multiplier basis values at slave trace parameters, shape (npts, dim)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kv is None:
            return np.ones((len(t), 1))
        return basis_matrix(self.kv, t) @ self.T.T


def _reduction_relation(kv: KnotVector, at_end: bool, q: int) -> np.ndarray:
    """Relation ``r . c = 0`` satisfied by the coefficients of every polynomial of degree <= q.

    ``r`` involves only the q+2 functions nearest the endpoint and is scaled
    to ``r[endpoint] = 1``.
    """
    p, n = kv.degree, kv.dim
    br = kv.breaks
    lo, hi = (br[0], br[1]) if not at_end else (br[-2], br[-1])
    pts = lo + (hi - lo) * (np.arange(p + 1) + 0.5) / (p + 1)
    loc = np.arange(p + 1) if not at_end else np.arange(n - p - 1, n)
    E = basis_matrix(kv, pts)[:, loc]
    polys = np.array([((pts - lo) / (hi - lo)) ** k for k in range(q + 1)]).T
    coeffs = np.linalg.solve(E, polys).T            # (q+1, p+1)
    k = q + 2
    sub, Es, e = (loc[:k], coeffs[:, :k], 0) if not at_end else (loc[-k:], coeffs[:, -k:], k - 1)
    nu = np.linalg.svd(Es)[2][-1]
    if abs(nu[e]) < 1e-12:
        raise DiscretizationError("degenerate crosspoint reduction")
    r = np.zeros(n)
    r[sub] = nu / nu[e]
    return r


def _modified_basis(kv: KnotVector, reduce: tuple) -> np.ndarray:
    """Coefficient matrix of the reduced multiplier space (rows = basis functions).

    Each reduced endpoint removes one function; the remaining basis is chosen
    so that polynomials of the highest possible degree (at most p-1) are kept
    in the span near that endpoint.
    """
    n, p = kv.dim, kv.degree
    ends = [i for i, r in zip((0, n - 1), reduce) if r]
    if not ends:
        return np.eye(n)
    free = [i for i in range(n) if i not in ends]
    if not free:
        raise DiscretizationError("multiplier space would be empty")
    for q in range(p - 1, -1, -1):
        rels = []
        if reduce[0]:
            rels.append(_reduction_relation(kv, False, q))
        if reduce[1]:
            rels.append(_reduction_relation(kv, True, q))
        G = np.array(rels)                         # relation rows: G c = 0
        Ge = G[:, ends]
        if abs(np.linalg.det(Ge)) < 1e-10:
            continue
        # c_ends = -Ge^{-1} G_free c_free
        X = -np.linalg.solve(Ge, G[:, free])
        T = np.zeros((len(free), n))
        T[np.arange(len(free)), free] = 1.0
        T[:, ends] = X.T
        return T
    raise DiscretizationError("no admissible crosspoint reduction")


def build_mortar_space(mp: MultiPatch, l: int, *, reduce_at: str = "all",
                       rule: str = "modify") -> MortarSpace:
    """Multiplier space on the slave trace of interface ``l``.

    ``reduce_at``: "all" reduces at both interface endpoints, "crosspoints"
    only at endpoints shared with another interface.  ``rule``: "modify"
    keeps polynomials of degree p-1 near reduced endpoints, "drop" simply
    removes the endpoint functions.
    """
    it = mp.interfaces[l]
    patch = mp.patches[it.slave[0]]
    kv = patch.trace_kv(it.slave[1])
    if kv is None:
        return MortarSpace(l, None, np.ones((1, 1)))
    if reduce_at == "all":
        red = (True, True)
    elif reduce_at == "crosspoints":
        shared = {end for cp in mp.crosspoints if len(cp.incident) > 1
                  for (lid, end) in cp.incident if lid == l}
        red = (0 in shared, 1 in shared)
    elif reduce_at == "none":
        red = (False, False)
    else:
        raise ValueError(f"unknown reduce_at {reduce_at!r}")
    if rule == "drop":
        keep = [i for i in range(kv.dim) if not ((i == 0 and red[0]) or (i == kv.dim - 1 and red[1]))]
        T = np.eye(kv.dim)[keep]
    elif rule == "modify":
        T = _modified_basis(kv, red)
    else:
        raise ValueError(f"unknown reduction rule {rule!r}")
    if T.shape[0] < 1:
        raise DiscretizationError(f"interface {l}: multiplier space is empty")
    return MortarSpace(l, kv, T, red)


# ---------------------------------------------------------------------------
# quadrature on interfaces and boundary sides

@dataclass
class SideQuadrature:
    """Gauss points on a patch side or interface (slave parametrization)."""

    t: np.ndarray            # slave trace parameters
    weights: np.ndarray      # physical arclength weights (1 for 1D points)
    element: np.ndarray      # slave trace element index per point
    h: np.ndarray            # physical length of each slave element
    segments: np.ndarray     # merged breakpoints
    t_master: np.ndarray | None = None


def _gauss_on(breaks, ngauss):
    xg, wg = np.polynomial.legendre.leggauss(ngauss)
    a, b = breaks[:-1], breaks[1:]
    t = ((a + b)[:, None] + (b - a)[:, None] * xg) / 2
    w = ((b - a)[:, None] / 2) * wg
    return t.reshape(-1), w.reshape(-1), np.repeat(np.arange(len(a)), ngauss)


def side_quadrature(patch: Patch, side: int, ngauss: int, extra_breaks=()) -> SideQuadrature:
    kv = patch.trace_kv(side)
    if kv is None:
        h = np.array([_adjacent_length_1d(patch, side)])
        return SideQuadrature(np.zeros(1), np.ones(1), np.zeros(1, int), h, np.zeros(1))
    elem_breaks = kv.breaks
    segs = np.unique(np.concatenate([elem_breaks, np.asarray(extra_breaks, dtype=float)]))
    t, w, seg = _gauss_on(segs, ngauss)
    mids = (segs[:-1] + segs[1:]) / 2
    seg_elem = np.clip(np.searchsorted(elem_breaks, mids, side="right") - 1, 0, len(elem_breaks) - 2)
    _, J, _ = geometry_eval(patch.geometry, patch.side_points(side, t), check=False)
    axis, _ = patch.side_axis_end(side)
    speed = np.linalg.norm(J[:, :, 1 - axis], axis=1)
    h = _arclengths(patch, side, elem_breaks)
    return SideQuadrature(t, w * speed, seg_elem[seg], h, segs)


def interface_quadrature(mp: MultiPatch, l: int, points_per_segment: int | None = None) -> SideQuadrature:
    """Quadrature on merged slave/master breakpoints of interface ``l``."""
    it = mp.interfaces[l]
    ps, pm = mp.patches[it.slave[0]], mp.patches[it.master[0]]
    ng = points_per_segment or max(ps.gauss_points, pm.gauss_points)
    if mp.pdim == 1:
        q = side_quadrature(ps, it.slave[1], ng)
        q.t_master = np.zeros(1)
        return q
    mbreaks = pm.trace_kv(it.master[1]).breaks
    extra = it.to_master(mbreaks)   # the correspondence is an involution
    q = side_quadrature(ps, it.slave[1], ng, extra)
    q.t_master = it.to_master(q.t)
    return q


# ---------------------------------------------------------------------------
# geometry presets

def _bezier_affine_1d(a: float, b: float, p: int) -> GeometryMap:
    kv = KnotVector(p, np.r_[np.zeros(p + 1), np.ones(p + 1)])
    cp = (a + (b - a) * np.arange(p + 1) / p)[:, None]
    return GeometryMap(TensorSplineSpace((kv,)), cp)


def _bezier_box(x0, x1, y0, y1, p: int) -> GeometryMap:
    kv = KnotVector(p, np.r_[np.zeros(p + 1), np.ones(p + 1)])
    s = np.arange(p + 1) / p
    X, Y = np.meshgrid(x0 + (x1 - x0) * s, y0 + (y1 - y0) * s, indexing="ij")
    return GeometryMap(TensorSplineSpace((kv, kv)), np.stack([X, Y], -1))


def _elevate_bezier(P: np.ndarray, times: int) -> np.ndarray:
    """Degree elevation of a single Bezier segment (homogeneous control points)."""
    for _ in range(times):
        p = len(P) - 1
        Q = np.empty((p + 2,) + P.shape[1:])
        Q[0], Q[-1] = P[0], P[-1]
        for i in range(1, p + 1):
            a = i / (p + 1)
            Q[i] = a * P[i - 1] + (1 - a) * P[i]
        P = Q
    return P


def _annulus_sector(r0: float, r1: float, p: int) -> GeometryMap:
    """Quarter annulus r0 <= r <= r1; zeta_0 radial, zeta_1 angular (counterclockwise)."""
    if p < 2:
        raise SplineError("the annulus preset needs degree >= 2")
    c = np.sqrt(2) / 2
    arc_w = np.array([1.0, c, 1.0])
    arc = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    hom = np.concatenate([arc * arc_w[:, None], arc_w[:, None]], axis=1)
    hom = _elevate_bezier(hom, p - 2)
    w_ang = hom[:, 2]
    unit = hom[:, :2] / w_ang[:, None]
    radii = r0 + (r1 - r0) * np.arange(p + 1) / p
    cp = radii[:, None, None] * unit[None, :, :]
    w = np.broadcast_to(w_ang[None, :], (p + 1, p + 1))
    kv = KnotVector(p, np.r_[np.zeros(p + 1), np.ones(p + 1)])
    return GeometryMap(TensorSplineSpace((kv, kv)), cp, w)


def _preset_unit_line_1patch(p, n):
    return [_bezier_affine_1d(0, 1, p).refine_uniform(n)], []


def _preset_unit_line_2patch(p, n):
    if n < 2:
        raise DiscretizationError("unit-line-2patch needs at least 2 elements")
    nl = n // 2
    return ([_bezier_affine_1d(0, 0.5, p).refine_uniform(nl),
             _bezier_affine_1d(0.5, 1, p).refine_uniform(n - nl)],
            [((0, "right"), (1, "left"))])


def _preset_unit_square_1patch(p, n):
    return [_bezier_box(0, 1, 0, 1, p).refine_uniform(n)], []


def _preset_unit_square_2patch(p, n):
    if n < 2 or n % 2:
        raise DiscretizationError("unit-square-2patch needs an even element count")
    return ([_bezier_box(0, 0.5, 0, 1, p).refine_uniform((n // 2, n)),
             _bezier_box(0.5, 1, 0, 1, p).refine_uniform((n // 2, n))],
            [((0, "right"), (1, "left"))])


def _preset_rect_nonmatching(p, n):
    if n < 2:
        raise DiscretizationError("rect-2patch-nonmatching needs at least 2 elements")
    return ([_bezier_box(0, 1, 0, 1, p).refine_uniform(n),
             _bezier_box(1, 2, 0, 1, p).refine_uniform(n + n // 2)],
            [((0, "right"), (1, "left"))])


def _preset_rect_matching(p, n):
    return ([_bezier_box(0, 1, 0, 1, p).refine_uniform(n),
             _bezier_box(1, 2, 0, 1, p).refine_uniform(n)],
            [((0, "right"), (1, "left"))])


def _preset_quarter_annulus(p, n):
    return ([_annulus_sector(1.0, 1.5, p).refine_uniform(n),
             _annulus_sector(1.5, 2.0, p).refine_uniform(n)],
            [((0, "right"), (1, "left"))])


PRESETS = {
    "quarter-annulus-2patch": (
        "quarter annulus 1 <= r <= 2 split at r = 1.5; exact NURBS arcs, n x n elements per patch",
        _preset_quarter_annulus),
    "rect-2patch-matching": (
        "(0,2)x(0,1) as two unit squares, both n x n elements",
        _preset_rect_matching),
    "rect-2patch-nonmatching": (
        "(0,2)x(0,1) as two unit squares; slave (left) n x n, master (right) m x m elements with m = n + n//2",
        _preset_rect_nonmatching),
    "unit-line-1patch": ("unit interval, one patch with n elements", _preset_unit_line_1patch),
    "unit-line-2patch": (
        "unit interval split at 0.5 into two patches (n//2 and n - n//2 elements)",
        _preset_unit_line_2patch),
    "unit-square-1patch": ("unit square, one patch with n x n elements", _preset_unit_square_1patch),
    "unit-square-2patch": (
        "unit square split at x = 0.5; each half n/2 x n elements (matching)",
        _preset_unit_square_2patch),
}


def list_presets() -> list:
    """``(name, description)`` pairs in stable (sorted) order."""
    return [(k, PRESETS[k][0]) for k in sorted(PRESETS)]


def make_preset(name: str, degree: int, elements: int, boundary="D", *,
                penalty_boundary=(), swap: bool = False) -> MultiPatch:
    """Build a preset geometry refined to ``elements`` per direction."""
    try:
        builder = PRESETS[name][1]
    except KeyError:
        raise TopologyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
    geoms, ifaces = builder(degree, elements)
    if swap:
        ifaces = [(m, s) for s, m in ifaces]
    return build_multipatch([Patch(g) for g in geoms], ifaces, boundary,
                            penalty_boundary=penalty_boundary)
