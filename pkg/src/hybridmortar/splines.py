"""B-spline / NURBS bases on the parametric domain (0,1)^d and geometry maps.

Univariate evaluation uses the Cox-de Boor recursion with the usual
derivative recurrence, vectorized over evaluation points.  Tensor-product
bases are formed per direction and combined with numpy broadcasting.

Index conventions: a 2D space with direction dimensions ``(n0, n1)`` numbers
its basis functions in C order, ``flat = i0 * n1 + i1``; control point arrays
have shape ``(n0, n1, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np


class SplineError(ValueError):
    """Invalid spline parameters or evaluation outside the domain."""


class DegenerateGeometryError(SplineError):
    """Geometry map with non-positive Jacobian determinant."""


@dataclass(frozen=True)
class KnotVector:
    degree: int
    knots: np.ndarray = field(repr=False)

    def __post_init__(self):
        kn = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", kn)
        kn.setflags(write=False)
        p = self.degree
        if p < 1:
            raise SplineError(f"degree must be >= 1, got {p}")
        if kn.ndim != 1 or np.any(np.diff(kn) < 0):
            raise SplineError("knots must be a nondecreasing sequence")
        if kn[0] != 0.0 or kn[-1] != 1.0:
            raise SplineError("knots must span [0, 1]")
        if np.count_nonzero(kn == 0.0) != p + 1 or np.count_nonzero(kn == 1.0) != p + 1:
            raise SplineError("knot vector must be open (end multiplicity p+1)")
        if self.dim < p + 1:
            raise SplineError("too few knots for the degree")
        _, counts = np.unique(kn[p + 1:-p - 1], return_counts=True)
        if counts.size and counts.max() > p:
            raise SplineError("interior knot multiplicity exceeds degree")

    @property
    def dim(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def breaks(self) -> np.ndarray:
        """Distinct knot values (element boundaries)."""
        return np.unique(self.knots)

    @property
    def n_elements(self) -> int:
        return len(self.breaks) - 1

    def greville(self) -> np.ndarray:
        p = self.degree
        kn = self.knots
        return np.array([kn[i + 1:i + p + 1].mean() for i in range(self.dim)])

    def find_span(self, x) -> np.ndarray:
        """Knot span index ``s`` with ``knots[s] <= x < knots[s+1]`` (last span at x=1)."""
        x = np.asarray(x, dtype=float)
        s = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(s, self.degree, self.dim - 1)

    def __eq__(self, other):
        return (isinstance(other, KnotVector) and self.degree == other.degree
                and np.array_equal(self.knots, other.knots))

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))


def make_open_knot_vector(p: int, n_elements: int, interior_multiplicity: int = 1) -> KnotVector:
    """Uniform open knot vector with breakpoints ``i / n_elements``."""
    if p < 1:
        raise SplineError(f"degree must be >= 1, got {p}")
    if n_elements < 1:
        raise SplineError(f"n_elements must be >= 1, got {n_elements}")
    if not 1 <= interior_multiplicity <= p:
        raise SplineError(f"interior multiplicity must lie in [1, {p}]")
    inner = np.repeat(np.arange(1, n_elements) / n_elements, interior_multiplicity)
    return KnotVector(p, np.concatenate([np.zeros(p + 1), inner, np.ones(p + 1)]))


def eval_basis(kv: KnotVector, x, max_deriv: int = 0):
    """Evaluate the p+1 active B-splines and their derivatives.

    Parameters
    ----------
    kv : KnotVector
    x : float or array_like
        Parametric coordinate(s) in [0, 1].
    max_deriv : int
        Highest derivative order, at most ``kv.degree``.

    Returns
    -------
    first : int or ndarray of int
        Index of the first active basis function.
    table : ndarray
        Shape ``(max_deriv + 1, p + 1)`` for scalar ``x``, otherwise
        ``(npts, max_deriv + 1, p + 1)``.
    """
    p = kv.degree
    if max_deriv > p or max_deriv < 0:
        raise SplineError(f"max_deriv must lie in [0, {p}]")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise SplineError("evaluation point outside [0, 1]")
    kn = kv.knots
    span = kv.find_span(x)
    npts = len(x)

    ndu = np.zeros((p + 1, p + 1, npts))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, npts))
    right = np.zeros((p + 1, npts))
    for j in range(1, p + 1):
        left[j] = x - kn[span + 1 - j]
        right[j] = kn[span + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((npts, max_deriv + 1, p + 1))
    ders[:, 0, :] = ndu[:, p, :].T
    a = np.zeros((2, p + 1, npts))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, max_deriv + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, max_deriv + 1):
        ders[:, k, :] *= fac
        fac *= p - k
    first = span - p
    if scalar:
        return int(first[0]), ders[0]
    return first, ders


def basis_matrix(kv: KnotVector, x, deriv: int = 0) -> np.ndarray:
    """Dense collocation matrix ``N_j^{(deriv)}(x_i)`` of shape (npts, dim)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    first, tab = eval_basis(kv, x, deriv)
    out = np.zeros((len(x), kv.dim))
    rows = np.arange(len(x))[:, None]
    out[rows, first[:, None] + np.arange(kv.degree + 1)] = tab[:, deriv, :]
    return out


def insert_knots(kv: KnotVector, ctrl: np.ndarray, new_knots, axis: int = 0):
    """Insert knots one at a time (Boehm); ``ctrl`` holds homogeneous coefficients.

    Returns the refined knot vector and coefficients; ``ctrl`` may carry any
    trailing shape and is refined along ``axis``.
    """
    p = kv.degree
    knots = kv.knots.copy()
    P = np.moveaxis(np.asarray(ctrl, dtype=float), axis, 0)
    for u in np.sort(np.atleast_1d(new_knots)):
        if not 0.0 < u < 1.0:
            raise SplineError("inserted knots must lie in (0, 1)")
        k = int(np.searchsorted(knots, u, side="right") - 1)
        n = len(knots) - p - 1
        Q = np.empty((n + 1,) + P.shape[1:])
        Q[:k - p + 1] = P[:k - p + 1]
        Q[k + 1:] = P[k:]
        for i in range(k - p + 1, k + 1):
            alpha = (u - knots[i]) / (knots[i + p] - knots[i])
            Q[i] = alpha * P[i] + (1.0 - alpha) * P[i - 1]
        P = Q
        knots = np.insert(knots, k + 1, u)
    return KnotVector(p, knots), np.moveaxis(P, 0, axis)


def h_refine(kv: KnotVector) -> KnotVector:
    """Bisect every nonempty knot span."""
    b = kv.breaks
    return insert_knots(kv, np.zeros(kv.dim), (b[:-1] + b[1:]) / 2)[0]


@dataclass(frozen=True)
class TensorSplineSpace:
    kvs: tuple

    def __post_init__(self):
        object.__setattr__(self, "kvs", tuple(self.kvs))
        if len(self.kvs) not in (1, 2):
            raise SplineError("only 1D and 2D spaces are supported")
        if len({kv.degree for kv in self.kvs}) != 1:
            raise SplineError("all directions must share the degree")

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def shape(self) -> tuple:
        return tuple(kv.dim for kv in self.kvs)

    @property
    def pdim(self) -> int:
        return len(self.kvs)

    @property
    def degree(self) -> int:
        return self.kvs[0].degree


def _tensor_derivs(space: TensorSplineSpace, zeta: np.ndarray, order: int):
    """Parametric derivatives of the tensor B-splines at arbitrary points.

    Returns ``(idx, D)`` where ``idx`` (npts, nloc) are flat basis indices and
    ``D[alpha]`` (npts, nloc) holds the mixed derivative with multi-index alpha
    for every ``|alpha| <= order``.
    """
    p = space.degree
    if space.pdim == 1:
        first, tab = eval_basis(space.kvs[0], zeta[:, 0], min(order, p))
        idx = first[:, None] + np.arange(p + 1)
        D = {(k,): tab[:, k, :] for k in range(min(order, p) + 1)}
        for k in range(p + 1, order + 1):
            D[(k,)] = np.zeros_like(tab[:, 0, :])
        return idx, D
    kv0, kv1 = space.kvs
    f0, t0 = eval_basis(kv0, zeta[:, 0], min(order, p))
    f1, t1 = eval_basis(kv1, zeta[:, 1], min(order, p))
    n1 = kv1.dim
    loc = np.arange(p + 1)
    idx = ((f0[:, None] + loc)[:, :, None] * n1 + (f1[:, None] + loc)[:, None, :]).reshape(len(zeta), -1)
    D = {}
    for a in range(order + 1):
        for b in range(order + 1 - a):
            if a > p or b > p:
                D[(a, b)] = np.zeros((len(zeta), (p + 1) ** 2))
            else:
                D[(a, b)] = (t0[:, a, :, None] * t1[:, b, None, :]).reshape(len(zeta), -1)
    return idx, D


@dataclass(frozen=True)
class GeometryMap:
    """NURBS map F from (0,1)^d onto a physical patch in R^d."""

    space: TensorSplineSpace
    control_points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        shape = self.space.shape
        cp = np.asarray(self.control_points, dtype=float).reshape(shape + (self.space.pdim,))
        w = np.ones(shape) if self.weights is None else np.asarray(self.weights, dtype=float).reshape(shape)
        if np.any(w <= 0):
            raise SplineError("NURBS weights must be positive")
        cp.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @property
    def pdim(self) -> int:
        return self.space.pdim

    @property
    def is_rational(self) -> bool:
        return not np.allclose(self.weights, 1.0, rtol=0, atol=1e-15)

    def refine(self, new_knots_per_dir) -> "GeometryMap":
        """Knot insertion; ``new_knots_per_dir`` is a sequence of knot arrays per direction."""
        d = self.pdim
        hom = np.concatenate([self.control_points * self.weights[..., None], self.weights[..., None]], axis=-1)
        kvs = list(self.space.kvs)
        for ax in range(d):
            if len(np.atleast_1d(new_knots_per_dir[ax])) == 0:
                continue
            kvs[ax], hom = insert_knots(kvs[ax], hom, new_knots_per_dir[ax], axis=ax)
        w = hom[..., -1]
        return GeometryMap(TensorSplineSpace(tuple(kvs)), hom[..., :-1] / w[..., None], w)

    def h_refine(self) -> "GeometryMap":
        mids = [(kv.breaks[:-1] + kv.breaks[1:]) / 2 for kv in self.space.kvs]
        return self.refine(mids)

    def refine_uniform(self, n_elements) -> "GeometryMap":
        """Insert breakpoints ``i/n`` per direction; the map must start without interior knots."""
        n_elements = np.broadcast_to(n_elements, (self.pdim,))
        for kv in self.space.kvs:
            if kv.n_elements != 1:
                raise SplineError("refine_uniform expects a single-element geometry")
        return self.refine([np.arange(1, n) / n for n in n_elements])

    def rational_basis(self, zeta, order: int = 2):
        """Rational basis R_i and its parametric derivatives up to ``order``.

        Returns ``(idx, D)`` as in the polynomial case.  For rational maps
        ``order`` is limited to 2 (quotient rule to second order only).
        """
        zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
        idx, D = _tensor_derivs(self.space, zeta, order)
        if not self.is_rational:
            return idx, D
        if order > 2:
            raise SplineError("rational derivatives are implemented up to second order")
        w = self.weights.reshape(-1)[idx]
        keys = list(D)
        WN = {k: w * D[k] for k in keys}
        W = {k: WN[k].sum(axis=1, keepdims=True) for k in keys}
        z = (0,) * self.pdim
        R = {z: WN[z] / W[z]}

        def unit(a):
            e = [0] * self.pdim
            e[a] += 1
            return tuple(e)

        if order >= 1:
            for a in range(self.pdim):
                ka = unit(a)
                R[ka] = (WN[ka] - R[z] * W[ka]) / W[z]
        if order >= 2:
            for a in range(self.pdim):
                for b in range(a, self.pdim):
                    ka, kb = unit(a), unit(b)
                    kab = tuple(i + j for i, j in zip(ka, kb))
                    R[kab] = (WN[kab] - R[ka] * W[kb] - R[kb] * W[ka] - R[z] * W[kab]) / W[z]
        return idx, R

    def __call__(self, zeta) -> np.ndarray:
        return geometry_eval(self, zeta)[0]


def _first_second(D, pdim):
    """Stack parametric gradient (npts, nloc, d) and Hessian (npts, nloc, d, d)."""
    if pdim == 1:
        return D[(1,)][..., None], D[(2,)][..., None, None]
    g = np.stack([D[(1, 0)], D[(0, 1)]], axis=-1)
    h = np.empty(g.shape + (2,))
    h[..., 0, 0] = D[(2, 0)]
    h[..., 0, 1] = h[..., 1, 0] = D[(1, 1)]
    h[..., 1, 1] = D[(0, 2)]
    return g, h


@dataclass
class PointEval:
    """Basis and geometry data at a batch of parametric points of one patch."""

    idx: np.ndarray      # (npts, nloc) local basis indices
    N: np.ndarray        # (npts, nloc)
    dN: np.ndarray       # (npts, nloc, d) physical gradients
    d2N: np.ndarray      # (npts, nloc, d, d) physical Hessians
    x: np.ndarray        # (npts, d)
    J: np.ndarray        # (npts, d, d), J[:, i, a] = dF_i / dzeta_a
    detJ: np.ndarray     # (npts,)
    Jinv: np.ndarray
    H: np.ndarray        # (npts, d, d, d), H[:, i, a, b]
    param: dict = field(default=None, repr=False)  # parametric derivative table


def geometry_eval(gmap: GeometryMap, zeta, check: bool = True):
    """Physical point, Jacobian and second-derivative tensor of the map.

    ``zeta`` is a single point of length d or an array (npts, d).  Returns
    ``(x, J, H)`` with shapes (d,), (d, d), (d, d, d) or batched versions.
    Raises :class:`DegenerateGeometryError` when det J <= 0.
    """
    single = np.ndim(zeta) <= 1
    z = np.atleast_2d(np.asarray(zeta, dtype=float)).reshape(-1, gmap.pdim)
    idx, R = gmap.rational_basis(z, 2)
    g, h = _first_second(R, gmap.pdim)
    C = gmap.control_points.reshape(-1, gmap.pdim)[idx]       # (npts, nloc, d)
    x = np.einsum("pl,pli->pi", R[(0,) * gmap.pdim], C)
    J = np.einsum("pla,pli->pia", g, C)
    H = np.einsum("plab,pli->piab", h, C)
    if check and np.any(np.linalg.det(J) <= 0):
        raise DegenerateGeometryError("non-positive Jacobian determinant")
    if single:
        return x[0], J[0], H[0]
    return x, J, H


def physical_derivatives(grad_hat, hess_hat, J, H):
    """Push parametric basis derivatives forward to physical coordinates.

    grad = J^{-T} grad_hat;  hess = J^{-T} (hess_hat - sum_i H_i grad_i) J^{-1}.
    Shapes: grad_hat (npts, nloc, d), hess_hat (npts, nloc, d, d), J (npts, d, d),
    H (npts, d, d, d).  ``hess_hat=None`` skips the Hessian.
    """
    det = np.linalg.det(J)
    if np.any(det <= 0):
        raise DegenerateGeometryError("non-positive Jacobian determinant")
    Jinv = np.linalg.inv(J)
    grad = grad_hat @ Jinv
    if hess_hat is None:
        return grad, None
    npts, d = J.shape[0], J.shape[1]
    corr = (grad @ H.reshape(npts, d, d * d)).reshape(hess_hat.shape)
    hess = np.swapaxes(Jinv, 1, 2)[:, None] @ (hess_hat - corr) @ Jinv[:, None]
    return grad, hess


def evaluate(gmap: GeometryMap, zeta, order: int = 2) -> PointEval:
    """Basis values with physical derivatives at points ``zeta``.

    Physical Hessians are computed for ``order >= 2`` only (``d2N`` is None
    otherwise); higher orders keep the parametric table for directional
    derivatives.
    """
    z = np.atleast_2d(np.asarray(zeta, dtype=float)).reshape(-1, gmap.pdim)
    idx, R = gmap.rational_basis(z, max(order, 2))
    g, h = _first_second(R, gmap.pdim)
    C = gmap.control_points.reshape(-1, gmap.pdim)[idx]
    x = np.einsum("pl,pli->pi", R[(0,) * gmap.pdim], C)
    J = np.einsum("pla,pli->pia", g, C)
    H = np.einsum("plab,pli->piab", h, C)
    grad, hess = physical_derivatives(g, h if order >= 2 else None, J, H)
    return PointEval(idx, R[(0,) * gmap.pdim], grad, hess, x, J, np.linalg.det(J),
                     np.linalg.inv(J), H, R)


def is_affine(gmap: GeometryMap, tol: float = 1e-12) -> bool:
    """True if the map is a polynomial map with vanishing second derivatives."""
    if gmap.is_rational:
        return False
    kvs = gmap.space.kvs
    pts = np.stack(np.meshgrid(*[np.linspace(0, 1, 2 * kv.degree + 3) for kv in kvs],
                               indexing="ij"), axis=-1).reshape(-1, gmap.pdim)
    _, J, H = geometry_eval(gmap, pts, check=False)
    scale = max(1.0, np.abs(J).max())
    return bool(np.abs(H).max() <= tol * scale)


def directional_derivative(gmap: GeometryMap, ev: PointEval, directions: np.ndarray, order: int) -> np.ndarray:
    """``(d . grad)^order`` of every active basis function, physical direction per point.

    Orders 0-2 work on any map; higher orders require an affine polynomial map.
    """
    if order == 0:
        return ev.N
    if order == 1:
        return np.einsum("pli,pi->pl", ev.dN, directions)
    if order == 2:
        return np.einsum("plij,pi,pj->pl", ev.d2N, directions, directions)
    if not is_affine(gmap):
        raise SplineError("normal derivatives beyond second order need an affine patch")
    # affine: (n . grad_x)^m u = (t . grad_zeta)^m u_hat with t = J^{-1} n
    t = np.einsum("pai,pi->pa", ev.Jinv, directions)
    if ev.param is None or max(sum(k) for k in ev.param) < order:
        raise SplineError("point evaluation lacks parametric derivatives of the requested order")
    if gmap.pdim == 1:
        return ev.param[(order,)] * t[:, :1] ** order
    out = np.zeros_like(ev.N)
    for a in range(order + 1):
        b = order - a
        out += comb(order, a) * ev.param[(a, b)] * (t[:, :1] ** a) * (t[:, 1:2] ** b)
    return out


def greville_points(space: TensorSplineSpace) -> np.ndarray:
    g = [kv.greville() for kv in space.kvs]
    return np.stack(np.meshgrid(*g, indexing="ij"), axis=-1).reshape(-1, space.pdim)


def interpolation_matrix(space: TensorSplineSpace, pts: np.ndarray) -> np.ndarray:
    """Dense matrix of polynomial tensor B-spline values at ``pts``."""
    idx, D = _tensor_derivs(space, pts, 0)
    A = np.zeros((len(pts), space.dim))
    np.put_along_axis(A, idx, D[(0,) * space.pdim], axis=1)
    return A
