"""Config-driven experiment families.

Each runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding named tables (rows of plain values) plus
dimension and timing records.  File output lives in :mod:`hybridmortar.cli`.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import PenaltyConfig, apply_essential_bc
from .linalg import condition_estimate
from .multipatch import (PRESETS, Patch, build_multipatch, make_preset, _annulus_sector,
                         _bezier_affine_1d, _bezier_box)
from .solvers import (convergence_rates, interpolate, laplace_1d_exact, laplace_system,
                      plate_rectangle_solution, polynomial_solution, reduced_space_projection,
                      solve_biharmonic_eigen, solve_elasticity_eigen, solve_laplace_eigen,
                      solve_plate_source)
from .splines import basis_matrix, make_open_knot_vector

log = logging.getLogger(__name__)

KINDS = ("spectrum1d", "plate-convergence", "elasticity-spectrum", "biharmonic-eigen",
         "projection-study", "condition-study")

DEFAULT_PRESET = {
    "spectrum1d": "unit-line-2patch",
    "plate-convergence": "rect-2patch-nonmatching",
    "elasticity-spectrum": "rect-2patch-matching",
    "biharmonic-eigen": "unit-square-2patch",
    "projection-study": "unit-line-2patch",
    "condition-study": "unit-line-2patch",
}
DEFAULT_PENALTIES = {
    "spectrum1d": (0.0, 100.0),
    "plate-convergence": (100.0,),
    "elasticity-spectrum": (0.0, 1e5),
    "biharmonic-eigen": (10.0,),
    "projection-study": (0.0, 0.01, 1.0, 10.0, 100.0, 1e4),
    "condition-study": (0.0, 100.0),
}
DEFAULT_ELEMENTS = {"projection-study": 20, "elasticity-spectrum": 8, "biharmonic-eigen": 16}
TABLE1_SWEEP = (1.0, 1e2, 1e4, 1e6)
HALF_ORDER = {"plate-convergence": 2, "biharmonic-eigen": 2}
DEGREE_RANGE = {1: (1, 5), 2: (2, 5)}


class ConfigError(ValueError):
    """Malformed experiment configuration; the message names the offending key."""


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class GeometryConfig:
    preset: str | None = None
    elements: int = 4
    patches: tuple = ()
    interfaces: tuple = ()
    boundary: object = None
    swap: bool = False


@dataclass(frozen=True)
class PenaltySpec:
    C: tuple = ()
    interface: float | None = None
    boundary: float | None = None
    crosspoint: float | None = None
    orders: tuple | None = None
    scaling: str = "energy"
    interface_terms: bool = True
    boundary_terms: bool = True
    crosspoint_terms: bool = True
    sweep: bool = False

    def config(self, C: float, half_order: int) -> PenaltyConfig:
        pick = lambda v: C if v is None else v
        return PenaltyConfig(half_order=half_order, interface=pick(self.interface),
                             boundary=pick(self.boundary), crosspoint=pick(self.crosspoint),
                             orders=self.orders, scaling=self.scaling,
                             interface_terms=self.interface_terms,
                             boundary_terms=self.boundary_terms,
                             crosspoint_terms=self.crosspoint_terms)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    degree: int
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    penalty: PenaltySpec = field(default_factory=PenaltySpec)
    levels: int = 1
    count: int | None = None
    E: float = 1.0
    nu: float = 0.3
    k: int = 20
    target_sine: tuple = (0, 0, 0, 0, 0, 0, 0, 0, 1)
    solution: str = "rectangle"
    compare_smooth: bool = False
    export_modes: int = 0
    out: str | None = None
    name: str = "run"

    @property
    def half_order(self) -> int:
        return HALF_ORDER.get(self.kind, 1)

    @property
    def penalties(self) -> tuple:
        if self.penalty.sweep:
            return TABLE1_SWEEP
        return self.penalty.C or DEFAULT_PENALTIES[self.kind]


_TOP_KEYS = {"kind", "degree", "geometry", "penalty", "levels", "count", "E", "nu", "k",
             "target_sine", "solution", "compare_smooth", "export_modes", "out", "name"}


def _get(d, key, typ, default, where=""):
    if key not in d:
        return default
    v = d[key]
    name = f"{where}{key}"
    if typ is float and isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if typ is int and isinstance(v, int) and not isinstance(v, bool):
        return v
    if typ is bool and isinstance(v, bool):
        return v
    if typ is str and isinstance(v, str):
        return v
    raise ConfigError(f"key '{name}' must be of type {typ.__name__}, got {v!r}")


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a parsed TOML mapping into an :class:`ExperimentConfig`."""
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'")
    if "kind" not in data:
        raise ConfigError("missing required key 'kind'")
    kind = _get(data, "kind", str, None)
    if kind not in KINDS:
        raise ConfigError(f"key 'kind' must be one of {', '.join(KINDS)}; got {kind!r}")
    if "degree" not in data:
        raise ConfigError("missing required key 'degree'")
    degree = _get(data, "degree", int, None)
    lo, hi = DEGREE_RANGE[HALF_ORDER.get(kind, 1)]
    if not lo <= degree <= hi:
        raise ConfigError(f"key 'degree' must lie in {lo}..{hi} for {kind}; got {degree}")
    levels = _get(data, "levels", int, 1)
    if levels < 1:
        raise ConfigError("key 'levels' must be >= 1")

    g = data.get("geometry", {})
    if not isinstance(g, dict):
        raise ConfigError("key 'geometry' must be a table")
    bad = sorted(set(g) - {"preset", "elements", "patches", "interfaces", "boundary", "swap"})
    if bad:
        raise ConfigError(f"unknown key 'geometry.{bad[0]}'")
    patches = tuple(g.get("patches", ()))
    preset = _get(g, "preset", str, None if patches else DEFAULT_PRESET[kind], "geometry.")
    if preset is not None and patches:
        raise ConfigError("keys 'geometry.preset' and 'geometry.patches' are exclusive")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"key 'geometry.preset': unknown preset {preset!r}")
    elements = _get(g, "elements", int, DEFAULT_ELEMENTS.get(kind, 4), "geometry.")
    if elements < 1:
        raise ConfigError("key 'geometry.elements' must be >= 1")
    for i, p in enumerate(patches):
        if not isinstance(p, dict) or p.get("type") not in ("interval", "box", "annulus"):
            raise ConfigError(f"key 'geometry.patches[{i}].type' must be interval, box or annulus")
    interfaces = tuple(tuple(tuple(s) for s in it) for it in g.get("interfaces", ()))
    boundary = g.get("boundary")
    if boundary is not None and not isinstance(boundary, (str, dict)):
        raise ConfigError("key 'geometry.boundary' must be a tag or a table")
    geom = GeometryConfig(preset, elements, patches, interfaces, boundary,
                          _get(g, "swap", bool, False, "geometry."))

    pen = data.get("penalty", {})
    if not isinstance(pen, dict):
        raise ConfigError("key 'penalty' must be a table")
    bad = sorted(set(pen) - {f.name for f in PenaltySpec.__dataclass_fields__.values()})
    if bad:
        raise ConfigError(f"unknown key 'penalty.{bad[0]}'")
    C = pen.get("C", ())
    C = tuple(float(c) for c in (C if isinstance(C, list) else [C])) if C != () else ()
    if any(c < 0 for c in C):
        raise ConfigError("key 'penalty.C' must be nonnegative")
    orders = pen.get("orders")
    spec = PenaltySpec(
        C=C,
        interface=_get(pen, "interface", float, None, "penalty."),
        boundary=_get(pen, "boundary", float, None, "penalty."),
        crosspoint=_get(pen, "crosspoint", float, None, "penalty."),
        orders=None if orders is None else tuple(int(m) for m in orders),
        scaling=_get(pen, "scaling", str, "energy", "penalty."),
        interface_terms=_get(pen, "interface_terms", bool, True, "penalty."),
        boundary_terms=_get(pen, "boundary_terms", bool, True, "penalty."),
        crosspoint_terms=_get(pen, "crosspoint_terms", bool, True, "penalty."),
        sweep=_get(pen, "sweep", bool, False, "penalty."))
    if spec.scaling not in ("energy", "literal"):
        raise ConfigError("key 'penalty.scaling' must be 'energy' or 'literal'")

    count = _get(data, "count", int, None)
    if count is not None and count < 1:
        raise ConfigError("key 'count' must be >= 1")
    nu = _get(data, "nu", float, 0.3)
    if not -1 < nu < 0.5:
        raise ConfigError("key 'nu' must lie in (-1, 0.5)")
    E = _get(data, "E", float, 1.0)
    if E <= 0:
        raise ConfigError("key 'E' must be positive")
    solution = _get(data, "solution", str, "rectangle")
    if solution not in ("rectangle", "cubic"):
        raise ConfigError("key 'solution' must be 'rectangle' or 'cubic'")
    target = data.get("target_sine", ExperimentConfig.target_sine)
    if not isinstance(target, (list, tuple)) or not target:
        raise ConfigError("key 'target_sine' must be a nonempty list of coefficients")
    return ExperimentConfig(
        kind=kind, degree=degree, geometry=geom, penalty=spec, levels=levels, count=count,
        E=E, nu=nu, k=_get(data, "k", int, 20), target_sine=tuple(float(c) for c in target),
        solution=solution, compare_smooth=_get(data, "compare_smooth", bool, False),
        export_modes=_get(data, "export_modes", int, 0), out=_get(data, "out", str, None),
        name=_get(data, "name", str, "run"))


# ---------------------------------------------------------------------------
# geometry

def _inline_patch(spec, p, factor):
    def ne(default):
        e = spec.get("elements", default)
        return [int(v) * factor for v in (e if isinstance(e, list) else [e] * 2)]
    t = spec["type"]
    if t == "interval":
        a, b = spec.get("x", [0.0, 1.0])
        return _bezier_affine_1d(a, b, p).refine_uniform(ne(1)[0])
    if t == "box":
        (x0, x1), (y0, y1) = spec.get("x", [0.0, 1.0]), spec.get("y", [0.0, 1.0])
        return _bezier_box(x0, x1, y0, y1, p).refine_uniform(tuple(ne(1)))
    r0, r1 = spec.get("r", [1.0, 2.0])
    return _annulus_sector(r0, r1, p).refine_uniform(tuple(ne(1)))


def build_geometry(cfg: ExperimentConfig, level: int = 0, *, degree=None, elements=None, boundary=None):
    """Multipatch domain at refinement ``level`` (elements doubled per level)."""
    g = cfg.geometry
    p = degree or cfg.degree
    bnd = boundary if boundary is not None else _boundary(cfg)
    if g.preset is not None:
        n = (elements or g.elements) * 2 ** level
        return make_preset(g.preset, p, n, bnd, swap=g.swap)
    patches = [Patch(_inline_patch(s, p, 2 ** level)) for s in g.patches]
    return build_multipatch(patches, g.interfaces, bnd)


def _boundary(cfg):
    b = cfg.geometry.boundary
    if b is None:
        return {"spectrum1d": "N", "elasticity-spectrum": {(0, "left"): "D", "default": "N"}}.get(cfg.kind, "D")
    if isinstance(b, dict):
        out = {}
        for key, v in b.items():
            if key == "default":
                out[key] = v
            else:
                k, side = key.split(":")
                out[(int(k), side)] = v
        return out
    return b


# ---------------------------------------------------------------------------
# results

@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    tables: dict = field(default_factory=dict)     # file stem -> Table
    dims: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


SPECTRUM_COLS = ("index", "lambda_h", "lambda_exact", "normalized", "physical_flag")
CONVERGENCE_COLS = ("level", "h", "ndof", "errL2", "errH1", "errH2", "rateL2", "rateH1", "rateH2")


def _tag(C: float) -> str:
    return f"C{C:g}"


def _stem(base, C, many):
    return f"{base}-{_tag(C)}" if many else base


def spectrum_table(spec) -> Table:
    """Rows over all computed modes; reference values for nonzero physical modes only."""
    t = Table(SPECTRUM_COLS)
    exact = spec.exact if spec.exact is not None else np.zeros(0)
    for i, lam in enumerate(spec.eigenvalues):
        j = i - spec.n_zero
        phys = i < spec.physical_count
        ex = exact[j] if phys and 0 <= j < len(exact) else None
        t.rows.append((i, float(lam), ex, None if ex is None else float(lam) / ex, int(phys)))
    return t


def _timed(timings, key):
    class _T:
        def __enter__(self):
            self.t = time.perf_counter()

        def __exit__(self, *a):
            timings[key] = timings.get(key, 0.0) + time.perf_counter() - self.t
    return _T()


def run_spectrum1d(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    many = len(cfg.penalties) > 1
    mp = build_geometry(cfg)
    exact = laplace_1d_exact(mp.dim + 2)
    for C in cfg.penalties:
        with _timed(res.timings, _tag(C)):
            spec = solve_laplace_eigen(mp, cfg.penalty.config(C, 1), cfg.count, exact=exact)
        stem = _stem("spectrum", C, many)
        res.tables[stem] = spectrum_table(spec)
        res.dims[stem] = spec.dims
        res.summary[stem] = {"max_normalized": float(np.max(spec.normalized)),
                             "physical": spec.physical_count}
    if cfg.compare_smooth:
        g = cfg.geometry
        n = g.elements
        smooth = make_preset("unit-line-1patch", cfg.degree, n, _boundary(cfg))
        spec = solve_laplace_eigen(smooth, PenaltyConfig(half_order=1), cfg.count, exact=exact)
        res.tables["spectrum-smooth"] = spectrum_table(spec)
        res.dims["spectrum-smooth"] = spec.dims
        res.summary["spectrum-smooth"] = {"max_normalized": float(np.max(spec.normalized))}
    return res


def _manufactured(cfg):
    if cfg.solution == "rectangle":
        return plate_rectangle_solution()
    c = np.zeros((4, 4))
    c[3, 0], c[2, 1], c[1, 2], c[0, 3], c[1, 1] = 1.0, -2.0, 1.0, 1.0, 1.0
    return polynomial_solution(c)


def convergence_table(reports) -> Table:
    t = Table(CONVERGENCE_COLS)
    hs = [r.h for r in reports]
    rates = {}
    for key in ("l2", "h1", "h2"):
        e = [getattr(r, key) for r in reports]
        rates[key] = [None] + list(convergence_rates([np.nan if v is None else v for v in e], hs))
    for i, r in enumerate(reports):
        t.rows.append((r.level, r.h, r.ndof, r.l2, r.h1, r.h2,
                       rates["l2"][i], rates["h1"][i], None if r.h2 is None else rates["h2"][i]))
    return t


def run_plate_convergence(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    ex = _manufactured(cfg)
    many = len(cfg.penalties) > 1
    for C in cfg.penalties:
        pc = cfg.penalty.config(C, 2)
        reports, dims = [], []
        for level in range(cfg.levels):
            mp = build_geometry(cfg, level)
            with _timed(res.timings, f"{_tag(C)}-level{level}"):
                sol, rep = solve_plate_source(mp, pc, ex.bilaplacian, ex, level=level)
            log.info("C=%g level %d: ndof %d, L2 error %.3e", C, level, rep.ndof, rep.l2)
            reports.append(rep)
            dims.append(sol.dims)
        stem = _stem("convergence", C, many)
        res.tables[stem] = convergence_table(reports)
        res.dims[stem] = dims
    return res


def run_elasticity_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    """Spectra against an unpenalized reference one level finer."""
    res = ExperimentResult()
    many = len(cfg.penalties) > 1
    with _timed(res.timings, "reference"):
        ref = solve_elasticity_eigen(build_geometry(cfg, 1), cfg.penalty.config(0.0, 1), cfg.E, cfg.nu)
    mp = build_geometry(cfg)
    for C in cfg.penalties:
        with _timed(res.timings, _tag(C)):
            spec = solve_elasticity_eigen(mp, cfg.penalty.config(C, 1), cfg.E, cfg.nu, cfg.count,
                                          exact=ref.nonzero_physical)
        stem = _stem("spectrum", C, many)
        res.tables[stem] = spectrum_table(spec)
        res.dims[stem] = spec.dims
        res.summary[stem] = {"max_normalized": float(np.max(spec.normalized)),
                             "physical": spec.physical_count, "zero_modes": spec.n_zero}
    return res


def run_biharmonic_eigen(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    C = cfg.penalties[0]
    pc = cfg.penalty.config(C, 2)
    t = Table(("level", "h", "ndof", "lambda1", "diff"))
    prev = None
    spec = mp = None
    for level in range(cfg.levels):
        mp = build_geometry(cfg, level)
        with _timed(res.timings, f"level{level}"):
            spec = solve_biharmonic_eigen(mp, pc, cfg.count or max(6, cfg.export_modes))
        lam = float(spec.eigenvalues[0])
        h = 1.0 / (cfg.geometry.elements * 2 ** level)
        t.rows.append((level, h, spec.dims["saddle"], lam, None if prev is None else abs(lam - prev)))
        prev = lam
        res.dims[f"level{level}"] = spec.dims
    res.tables["eigen-levels"] = t
    res.tables["spectrum"] = spectrum_table(spec)
    if cfg.export_modes:
        res.tables["modes"] = mode_table(mp, spec, cfg.export_modes)
    return res


def mode_table(mp, spec, nmodes: int, nsample: int = 21) -> Table:
    """Eigenmodes sampled on a uniform parametric grid of every patch."""
    from .splines import evaluate
    t = Table(("patch", "x", "y") + tuple(f"mode{i}" for i in range(nmodes)))
    s = np.linspace(0, 1, nsample)
    zeta = np.stack(np.meshgrid(s, s, indexing="ij"), -1).reshape(-1, 2)
    for k, patch in enumerate(mp.patches):
        ev = evaluate(patch.geometry, zeta, 0)
        U = spec.eigenvectors[mp.offsets[k] + ev.idx, :nmodes]       # (npts, nloc, nmodes)
        vals = np.einsum("pl,plm->pm", ev.N, U)
        for i in range(len(zeta)):
            t.rows.append((k, float(ev.x[i, 0]), float(ev.x[i, 1])) + tuple(float(v) for v in vals[i]))
    return t


def smooth_sine_target(coeffs, degree: int, n_elements: int):
    """C^{p-1} spline interpolant (uniform mesh, zero end values) of sum c_j sin(j pi x)."""
    kv = make_open_knot_vector(degree, n_elements)
    g = kv.greville()
    f = lambda x: sum(c * np.sin((j + 1) * np.pi * x) for j, c in enumerate(coeffs))
    c = np.linalg.solve(basis_matrix(kv, g), f(g))
    c[0] = c[-1] = 0.0
    return lambda x: basis_matrix(kv, np.asarray(x)[:, 0]) @ c


def run_projection_study(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    mp = build_geometry(cfg)
    target = interpolate(mp, smooth_sine_target(cfg.target_sine, cfg.degree, cfg.geometry.elements))
    t = Table(("penalty", "rel_error"))
    for C in cfg.penalties:
        with _timed(res.timings, _tag(C)):
            spec = solve_laplace_eigen(mp, cfg.penalty.config(C, 1))
        t.rows.append((C, reduced_space_projection(spec, cfg.k, target)))
        res.dims[_tag(C)] = spec.dims
    res.tables["projection"] = t
    return res


def run_condition_study(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    many = len(cfg.penalties) > 1
    for C in cfg.penalties:
        t = Table(("level", "h", "cond"))
        for level in range(cfg.levels):
            mp = build_geometry(cfg, level)
            with _timed(res.timings, f"{_tag(C)}-level{level}"):
                s = apply_essential_bc(laplace_system(mp, cfg.penalty.config(C, 1)), mp)
                cond = condition_estimate(s.A, s.B)
            t.rows.append((level, 1.0 / (cfg.geometry.elements * 2 ** level), cond))
        stem = _stem("condition", C, many)
        res.tables[stem] = t
        hs, cs = zip(*[(r[1], r[2]) for r in t.rows])
        if len(hs) > 1:
            res.summary[stem] = {"slope": float(-np.polyfit(np.log(hs), np.log(cs), 1)[0])}
    return res


RUNNERS = {
    "spectrum1d": run_spectrum1d,
    "plate-convergence": run_plate_convergence,
    "elasticity-spectrum": run_elasticity_spectrum,
    "biharmonic-eigen": run_biharmonic_eigen,
    "projection-study": run_projection_study,
    "condition-study": run_condition_study,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    res = RUNNERS[cfg.kind](cfg)
    res.timings["total"] = time.perf_counter() - t0
    return res


def config_echo(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["penalties"] = list(cfg.penalties)
    return d

