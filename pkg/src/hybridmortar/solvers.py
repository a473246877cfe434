"""Problem drivers and post-processing.

Drivers assemble the hybrid operator (broken volume form, consistency terms,
penalties, mortar coupling), eliminate essential boundary conditions and hand
the result to :mod:`hybridmortar.linalg`.  Eigenvectors and solutions are
returned in full coefficient coordinates (Dirichlet entries included).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import polynomial as npoly

from .assembly import (AssembledSystem, ConfigurationError, DegreeError, PenaltyConfig,
                       apply_essential_bc, assemble_bending, assemble_biharmonic_consistency,
                       assemble_boundary_penalty, assemble_interface_penalty, assemble_load,
                       assemble_mass, assemble_mortar_B, assemble_stiffness_elasticity,
                       assemble_stiffness_laplace, build_mortar_spaces, lame_parameters,
                       volume_quadrature)
from .linalg import solve_constrained_eigen, solve_saddle_source
from .multipatch import MultiPatch

log = logging.getLogger(__name__)

GAP_RATIO = 100.0


# ---------------------------------------------------------------------------
# result types

@dataclass
class Spectrum:
    """Ascending eigenvalues of a discrete operator on the constrained space.

    ``n_zero`` leading (numerically) zero modes are excluded from the
    normalization; ``exact`` holds reference values for the modes after them.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    physical_count: int = 0
    exact: np.ndarray | None = None
    n_zero: int = 0
    mass: sp.csr_matrix | None = field(default=None, repr=False)
    dims: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if not self.physical_count:
            self.physical_count = physical_count(self.eigenvalues)

    @property
    def physical(self) -> np.ndarray:
        return self.eigenvalues[:self.physical_count]

    @property
    def spurious(self) -> np.ndarray:
        return self.eigenvalues[self.physical_count:]

    @property
    def nonzero_physical(self) -> np.ndarray:
        return self.eigenvalues[self.n_zero:self.physical_count]

    @property
    def normalized(self) -> np.ndarray | None:
        """lambda_h / lambda for the nonzero physical modes with a reference value."""
        if self.exact is None:
            return None
        lam = self.nonzero_physical
        k = min(len(lam), len(self.exact))
        return lam[:k] / self.exact[:k]

    def with_reference(self, exact) -> "Spectrum":
        return replace(self, exact=np.asarray(exact, dtype=float))


@dataclass(frozen=True)
class ErrorReport:
    l2: float
    h1: float
    h2: float | None
    ndof: int
    level: int | None = None
    h: float | None = None


# ---------------------------------------------------------------------------
# spectrum filtering

def physical_count(eigenvalues) -> int:
    """Number of physical eigenvalues by the spectral-gap rule.

    Split after the largest index n (1-based) in the upper half of the
    spectrum with lambda_{n+1} / lambda_n > 100; without such a gap
    everything is physical.  Only positive lambda_n take part.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    N = len(lam)
    lo = math.ceil(N / 2)
    for n in range(N - 1, max(lo, 1) - 1, -1):
        a, b = lam[n - 1], lam[n]
        if a > 0 and b > GAP_RATIO * a:
            return n
    return N


def filter_spectrum(spectrum) -> tuple:
    """``(physical, spurious)`` eigenvalue arrays.

    Accepts a :class:`Spectrum` or an ascending array of eigenvalues.
    """
    lam = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, dtype=float)
    n = physical_count(lam)
    return lam[:n], lam[n:]


def separation_gap(spectrum: Spectrum) -> float:
    """lambda_{n+1} / lambda_n across the physical/spurious split (inf if none)."""
    n = spectrum.physical_count
    lam = spectrum.eigenvalues
    if n >= len(lam) or n == 0:
        return math.inf
    return float(lam[n] / lam[n - 1])


def count_zero_modes(eigenvalues, rtol: float = 1e-8) -> int:
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return 0
    scale = np.max(np.abs(lam[:physical_count(lam)]))
    return int(np.count_nonzero(np.abs(lam) <= rtol * max(scale, 1e-300)))


def laplace_1d_exact(count: int) -> np.ndarray:
    """(n pi)^2 for n = 1..count; Dirichlet values, and Neumann values after the zero mode."""
    return (np.arange(1, count + 1) * np.pi) ** 2


# ---------------------------------------------------------------------------
# operators

def _mortar(mp, ncomp, mortar_kw):
    spaces = build_mortar_spaces(mp, **(mortar_kw or {}))
    B, labels = assemble_mortar_B(mp, spaces, ncomp)
    return B, labels


def laplace_system(mp: MultiPatch, cfg: PenaltyConfig, *, mortar_kw=None, penalty_boundary=None) -> AssembledSystem:
    """Penalized Laplace stiffness, mass and coupling (Gamma_BC = Neumann sides by default)."""
    if cfg.half_order != 1:
        raise ConfigurationError("Laplace problems need half_order = 1")
    pb = mp.sides("N") if penalty_boundary is None else penalty_boundary
    mp = mp.with_penalty_boundary(pb)
    A = assemble_stiffness_laplace(mp) + assemble_interface_penalty(mp, cfg)
    A = A + assemble_boundary_penalty(mp, cfg)
    B, labels = _mortar(mp, 1, mortar_kw)
    return AssembledSystem(A.tocsr(), assemble_mass(mp), B, None, row_interface=labels)


def elasticity_system(mp: MultiPatch, cfg: PenaltyConfig, E: float = 1.0, nu: float = 0.3,
                      *, mortar_kw=None, penalty_boundary=None) -> AssembledSystem:
    """Elasticity stiffness with traction penalties on interfaces and Gamma_BC."""
    lame = lame_parameters(E, nu)
    pb = mp.sides("N") if penalty_boundary is None else penalty_boundary
    mp = mp.with_penalty_boundary(pb)
    A = assemble_stiffness_elasticity(mp, E, nu)
    A = A + assemble_interface_penalty(mp, cfg, kind="traction", ncomp=2, lame=lame)
    A = A + assemble_boundary_penalty(mp, cfg, kind="traction", ncomp=2, lame=lame)
    B, labels = _mortar(mp, 2, mortar_kw)
    return AssembledSystem(A.tocsr(), assemble_mass(mp, 2), B, None, ncomp=2, row_interface=labels)


def plate_system(mp: MultiPatch, cfg: PenaltyConfig, *, clamped_strong: bool = False,
                 gn=None, mortar_kw=None) -> AssembledSystem:
    """Hybrid plate operator a_h^bi with Gamma_BC = Dirichlet sides.

    ``gn(x, normals)`` is prescribed d_n u on Dirichlet sides (default 0).
    With ``clamped_strong`` the normal derivative is fixed by eliminating the
    second dof layer instead (single affine patch).
    """
    if mp.degree < 2:
        raise DegreeError("plate problems need p >= 2")
    if cfg.half_order != 2:
        raise ConfigurationError("plate problems need half_order = 2")
    mp = mp.with_penalty_boundary(() if clamped_strong else mp.sides("D"))
    A = assemble_bending(mp) + assemble_interface_penalty(mp, cfg)
    rhs = np.zeros(mp.dim)
    if clamped_strong:
        A = A + _interface_consistency_only(mp, cfg)
    else:
        K, r1 = assemble_biharmonic_consistency(mp, cfg, data=gn or _zero_data)
        P, r2 = assemble_boundary_penalty(mp, cfg, data=gn or _zero_data)
        A = A + K + P
        rhs = r1 + r2
    B, labels = _mortar(mp, 1, mortar_kw)
    return AssembledSystem(A.tocsr(), assemble_mass(mp), B, rhs, row_interface=labels)


def _zero_data(x, normals):
    return np.zeros(len(x))


def _interface_consistency_only(mp, cfg):
    # Dirichlet-side consistency terms vanish once d_n v = 0 holds strongly.
    return assemble_biharmonic_consistency(replace(mp, boundary={k: "N" for k in mp.boundary}), cfg)


def _dims(mp, system, reduced):
    """dim_V counts free dofs (essential conditions eliminated); saddle = dim_V + dim_M."""
    ndof = int(system.A.shape[0])
    m = int(system.B.shape[0])
    return {"dim_V": ndof, "dim_M": m, "saddle": ndof + m,
            "dim_full": int(system.dim_full or ndof), "dim_X": int(reduced)}


def _eigen(system: AssembledSystem, mp, count, clamped=False, zero_modes=True):
    s = apply_essential_bc(system, mp, clamped=clamped)
    res = solve_constrained_eigen(s.A, s.M, s.B, count, labels=s.row_interface)
    U = s.expand(res.eigenvectors)
    M = system.M
    nz = count_zero_modes(res.eigenvalues) if zero_modes else 0
    nX = s.A.shape[0] - s.B.shape[0]
    spec = Spectrum(res.eigenvalues, U, n_zero=nz, mass=M, dims=_dims(mp, s, nX))
    spec.physical_count = physical_count(res.eigenvalues)
    return spec


def solve_laplace_eigen(mp: MultiPatch, cfg: PenaltyConfig, count: int | None = None,
                        exact=None, **kw) -> Spectrum:
    """Eigenpairs of the penalized Laplacian on ker B (zero modes excluded from normalization)."""
    spec = _eigen(laplace_system(mp, cfg, **kw), mp, count)
    return spec if exact is None else spec.with_reference(exact)


def solve_elasticity_eigen(mp: MultiPatch, cfg: PenaltyConfig, E: float = 1.0, nu: float = 0.3,
                           count: int | None = None, exact=None, **kw) -> Spectrum:
    spec = _eigen(elasticity_system(mp, cfg, E, nu, **kw), mp, count)
    return spec if exact is None else spec.with_reference(exact)


def solve_biharmonic_eigen(mp: MultiPatch, cfg: PenaltyConfig, count: int | None = None,
                           *, clamped_strong: bool = False, exact=None, **kw) -> Spectrum:
    """Eigenpairs of the hybrid plate operator; u = 0 is imposed strongly on Dirichlet sides."""
    system = plate_system(mp, cfg, clamped_strong=clamped_strong, **kw)
    spec = _eigen(system, mp, count, clamped=clamped_strong)
    return spec if exact is None else spec.with_reference(exact)


# ---------------------------------------------------------------------------
# source problems

@dataclass(frozen=True)
class SourceSolution:
    u: np.ndarray           # full coefficient vector
    multiplier: np.ndarray
    dims: dict


def _solve_source(system, mp, g=None, clamped=False):
    s = apply_essential_bc(system, mp, clamped=clamped, g=g)
    x, tau = solve_saddle_source(s.A, s.B, s.rhs, s.B_rhs)
    return SourceSolution(s.expand(x), tau, _dims(mp, s, s.A.shape[0] - s.B.shape[0]))


def solve_poisson_source(mp: MultiPatch, f, cfg: PenaltyConfig | None = None, *, g=None,
                         exact: "ManufacturedSolution | None" = None, mortar_kw=None):
    """-Delta u = f with u = g on Dirichlet sides (homogeneous Neumann elsewhere).

    Returns ``(solution, ErrorReport | None)``; ``g`` defaults to the exact trace.
    """
    cfg = cfg or PenaltyConfig(half_order=1)
    system = laplace_system(mp, cfg, mortar_kw=mortar_kw, penalty_boundary=())
    system = replace(system, rhs=assemble_load(mp, f))
    if g is None and exact is not None:
        g = exact.u
    sol = _solve_source(system, mp, g)
    rep = None if exact is None else replace(error_norms(mp, sol.u, exact), ndof=sol.dims["saddle"])
    return sol, rep


def solve_plate_source(mp: MultiPatch, cfg: PenaltyConfig, f, exact: "ManufacturedSolution | None" = None,
                       *, g=None, gn=None, clamped_strong: bool = False, level=None, mortar_kw=None):
    """Kirchhoff plate DDu = f, u = g (strong) and d_n u = gn (weak) on Dirichlet sides.

    Boundary data default to the exact solution's traces when ``exact`` is
    given, else zero.  Returns ``(solution, ErrorReport | None)``.
    """
    if exact is not None:
        g = exact.u if g is None else g
        gn = exact.normal_derivative if gn is None else gn
    system = plate_system(mp, cfg, clamped_strong=clamped_strong, gn=gn, mortar_kw=mortar_kw)
    system = replace(system, rhs=system.rhs + assemble_load(mp, f))
    sol = _solve_source(system, mp, g, clamped_strong)
    rep = None
    if exact is not None:
        rep = replace(error_norms(mp, sol.u, exact, level=level), ndof=sol.dims["saddle"])
    return sol, rep


# ---------------------------------------------------------------------------
# manufactured solutions

@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact field with derivatives; callables map (npts, d) points to arrays.

    ``grad`` returns (npts, d), ``hess`` (npts, d, d).  ``laplacian`` and
    ``bilaplacian`` give source terms for the second- and fourth-order problems.
    """

    u: object
    grad: object
    hess: object
    laplacian: object = None
    bilaplacian: object = None

    def normal_derivative(self, x, normals):
        return np.einsum("pi,pi->p", self.grad(x), normals)


def polynomial_solution(coeffs) -> ManufacturedSolution:
    """Polynomial u = sum c[i, j] x^i y^j (or sum c[i] x^i for a 1D array)."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim == 1:
        d = [npoly.polyder(c, k) for k in range(5)]
        ev = lambda k: (lambda x: npoly.polyval(x[:, 0], d[k]))
        return ManufacturedSolution(
            ev(0), lambda x: ev(1)(x)[:, None], lambda x: ev(2)(x)[:, None, None],
            lambda x: ev(2)(x), lambda x: ev(4)(x))

    def der(a, b):
        cc = npoly.polyder(npoly.polyder(c, a, axis=0), b, axis=1) if (a or b) else c
        if cc.size == 0:
            return lambda x: np.zeros(len(x))
        return lambda x: npoly.polyval2d(x[:, 0], x[:, 1], cc)

    dx, dy = der(1, 0), der(0, 1)
    dxx, dxy, dyy = der(2, 0), der(1, 1), der(0, 2)
    d4 = [der(4, 0), der(2, 2), der(0, 4)]
    return ManufacturedSolution(
        der(0, 0),
        lambda x: np.stack([dx(x), dy(x)], 1),
        lambda x: np.stack([np.stack([dxx(x), dxy(x)], 1), np.stack([dxy(x), dyy(x)], 1)], 1),
        lambda x: dxx(x) + dyy(x),
        lambda x: d4[0](x) + 2 * d4[1](x) + d4[2](x))


def plate_rectangle_solution() -> ManufacturedSolution:
    """Clamped solution u = X(x) Y(y) on (0,2) x (0,1) with u = d_n u = 0 on the boundary."""
    pi = np.pi

    def X(x, k):
        return [1 - np.cos(pi * x / 2) - x + np.sin(pi * x) / pi,
                pi / 2 * np.sin(pi * x / 2) - 1 + np.cos(pi * x),
                pi ** 2 / 4 * np.cos(pi * x / 2) - pi * np.sin(pi * x),
                -pi ** 3 / 8 * np.sin(pi * x / 2) - pi ** 2 * np.cos(pi * x),
                -pi ** 4 / 16 * np.cos(pi * x / 2) + pi ** 3 * np.sin(pi * x)][k]

    def Y(y, k):
        return [1 - np.cos(2 * pi * y), 2 * pi * np.sin(2 * pi * y),
                4 * pi ** 2 * np.cos(2 * pi * y), -8 * pi ** 3 * np.sin(2 * pi * y),
                -16 * pi ** 4 * np.cos(2 * pi * y)][k]

    def t(a, b):
        return lambda p: X(p[:, 0], a) * Y(p[:, 1], b)

    return ManufacturedSolution(
        t(0, 0),
        lambda p: np.stack([t(1, 0)(p), t(0, 1)(p)], 1),
        lambda p: np.stack([np.stack([t(2, 0)(p), t(1, 1)(p)], 1),
                            np.stack([t(1, 1)(p), t(0, 2)(p)], 1)], 1),
        lambda p: t(2, 0)(p) + t(0, 2)(p),
        lambda p: t(4, 0)(p) + 2 * t(2, 2)(p) + t(0, 4)(p))


def bilaplacian_fd(u, x, step: float = 1e-2) -> np.ndarray:
    """Nested central differences for Delta Delta u at points ``x`` (npts, 2).

    Fourth-order accurate Laplacian stencils applied twice; intended for
    smooth fields without a closed-form source term.
    """
    x = np.asarray(x, dtype=float)
    h = float(step)

    def lap(fun):
        def out(p):
            acc = -5.0 * fun(p)     # 2 axes x (-5/2)
            for a in range(p.shape[1]):
                e = np.zeros(p.shape[1])
                e[a] = h
                acc = acc + (4 / 3) * (fun(p + e) + fun(p - e)) - (1 / 12) * (fun(p + 2 * e) + fun(p - 2 * e))
            return acc / h ** 2
        return out

    return lap(lap(u))(x)


def interpolate(mp: MultiPatch, fun) -> np.ndarray:
    """Patchwise interpolation at Greville points (exact for functions in each patch space)."""
    from .splines import greville_points, interpolation_matrix
    out = np.zeros(mp.dim)
    for k, patch in enumerate(mp.patches):
        zeta = greville_points(patch.space)
        E = interpolation_matrix(patch.space, zeta)
        x = patch.geometry(zeta)
        out[mp.offsets[k]:mp.offsets[k + 1]] = np.linalg.solve(E, fun(x.reshape(len(zeta), -1)))
    return out


# ---------------------------------------------------------------------------
# errors, rates, projections

def error_norms(mp: MultiPatch, u_h: np.ndarray, exact: ManufacturedSolution,
                ngauss: int | None = None, *, level=None) -> ErrorReport:
    """Broken L2, H1 and H2 (p >= 2 only) norms of u_h - u_exact.

    Quadrature uses p+2 Gauss points per direction (more on rational patches)
    unless ``ngauss`` is given.
    """
    p = mp.degree
    order = 2 if p >= 2 else 1
    e0 = e1 = e2 = 0.0
    hmax = 0.0
    for k, patch in enumerate(mp.patches):
        ng = ngauss or max(p + 2, patch.gauss_points)
        ev, w, nel, nq = volume_quadrature(patch, ng, order)
        c = u_h[mp.offsets[k] + ev.idx]
        e0 += np.sum(w * (np.einsum("qa,qa->q", ev.N, c) - exact.u(ev.x)) ** 2)
        g = np.einsum("qai,qa->qi", ev.dN, c) - exact.grad(ev.x)
        e1 += np.sum(w * np.sum(g ** 2, axis=1))
        if order == 2:
            H = np.einsum("qaij,qa->qij", ev.d2N, c) - exact.hess(ev.x)
            e2 += np.sum(w * np.sum(H ** 2, axis=(1, 2)))
        hmax = max(hmax, _patch_h(patch))
    l2 = math.sqrt(e0)
    h1 = math.sqrt(e0 + e1)
    h2 = math.sqrt(e0 + e1 + e2) if order == 2 else None
    return ErrorReport(l2, h1, h2, mp.dim, level, hmax)


def _patch_h(patch) -> float:
    ctrl = patch.geometry.control_points.reshape(-1, patch.pdim)
    ext = np.ptp(ctrl, axis=0)
    return float(max(ext[a] / kv.n_elements for a, kv in enumerate(patch.space.kvs)))


def convergence_rates(errors, hs) -> np.ndarray:
    """rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}); NaN marks an undefined pair."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    if len(e) != len(h):
        raise ValueError("errors and mesh sizes differ in length")
    out = np.full(max(len(e) - 1, 0), np.nan)
    for i in range(len(out)):
        if e[i] > 0 and e[i + 1] > 0 and h[i] > 0 and h[i + 1] > 0 and h[i] != h[i + 1]:
            out[i] = math.log(e[i] / e[i + 1]) / math.log(h[i] / h[i + 1])
    return out


def reduced_space_projection(spectrum: Spectrum, k: int, target, M=None) -> float:
    """Relative M-norm error of the M-orthogonal projection onto the first k eigenvectors."""
    M = spectrum.mass if M is None else M
    if M is None or spectrum.eigenvectors is None:
        raise ValueError("projection needs eigenvectors and the mass matrix")
    U = spectrum.eigenvectors[:, :k]
    t = np.asarray(target, dtype=float)
    Mt = M @ t
    r = t - U @ (U.T @ Mt)
    nt = math.sqrt(max(t @ Mt, 0.0))
    if nt == 0:
        raise ValueError("target has zero mass norm")
    return math.sqrt(max(r @ (M @ r), 0.0)) / nt


def rayleigh_quotient(A, M, u) -> float:
    return float(u @ (A @ u)) / float(u @ (M @ u))
