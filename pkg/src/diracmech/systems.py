"""Builtin catalog of constrained systems.

Every entry is a full-fiber Dirac system: the skater variants live on
the tangent bundle of R^2 x S^1 written in the constraint-adapted frame
(fiber rank 3, constraint rank 2), the ball variants on the product of
T R^2 with so(3) written in the rolling-adapted frame (fiber rank 5,
constraint rank 3).  Transverse momenta are recovered by the declared
consistency solution, which build() spot-checks against the consistency
residual.

Parameter and state-variable names are a stable public contract:

    skater_*: states x, y, phi, eta1, eta2   (+ transverse eta3)
    ball_*:   states x, y, eta1..eta3        (+ transverse eta4, eta5)
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np

from . import exprparse, numcore
from .algebroid import PhaseState, SkewAlgebroid, restrict_to_constraint
from .dirac import (
    ConsistencySolution,
    DiracAlgebroid,
    consistency_residual,
    oracle_magnetic,
    oracle_mechanical,
)
from .errors import (
    CatalogError,
    DegenerateParameterError,
    UnsupportedError,
    ValidationError,
)
from .frame import FrameField
from .numcore import ScalarField, grad

__all__ = [
    "MetricBlocks",
    "SystemSpec",
    "CATALOG_DEFAULTS",
    "catalog_names",
    "build",
    "analytic_state",
    "hamiltonian_with_potential",
    "skater_frame",
    "ball_transition_matrix",
    "so3_constants",
    "ball_structure_constants",
    "mechanical_lagrangian",
    "restricted_algebroid",
    "oracle_reduced_field",
]


@dataclass(frozen=True)
class MetricBlocks:
    """Metric and momentum-shift data backing the oracle dynamics."""

    mass: float
    g_sub: Callable      # q -> (k, k) rows, metric on the constraint
    g_inv_sub: Callable  # q -> (k, k) rows, its inverse
    g_full: Callable     # q -> (N, N) rows, metric on the whole fiber
    potential: ScalarField
    a_par: Callable | None = None   # q -> length-k admissible shift components
    a_perp: Callable | None = None  # q -> length-(N-k) transverse components


@dataclass(frozen=True)
class SystemSpec:
    """A catalog entry: geometry, Hamiltonian, and validation data."""

    name: str
    dirac: DiracAlgebroid
    base_names: tuple
    fiber_names: tuple
    params: Mapping
    hamiltonian: ScalarField
    consistency: ConsistencySolution
    analytic: Callable | None = None
    metric: MetricBlocks | None = None

    @property
    def m(self) -> int:
        return self.dirac.alg.m

    @property
    def n_fiber(self) -> int:
        return self.dirac.alg.rank

    @property
    def k(self) -> int:
        return self.dirac.k

    @property
    def admissible_names(self) -> tuple:
        return self.fiber_names[: self.k]

    @property
    def transverse_names(self) -> tuple:
        return tuple(f"eta_alpha_{i + 1}" for i in range(self.n_fiber - self.k))

    @property
    def reduced_names(self) -> tuple:
        return self.base_names + self.admissible_names


def _constant_structure(c: np.ndarray) -> Callable:
    c = np.asarray(c, dtype=float)
    c.flags.writeable = False
    return lambda q: c


def _constant_rows(rows) -> Callable:
    return lambda q: rows


def _zero_potential(base_names) -> ScalarField:
    return ScalarField(base_names, (), lambda *args: 0.0)


# -- skater geometry -------------------------------------------------------


def skater_frame() -> FrameField:
    """Blade-aligned section, rotation, and the blade normal, in that order."""

    def rho(q):
        phi = q[2]
        c = numcore.cos(phi)
        s = numcore.sin(phi)
        return [[c, 0.0, -s], [s, 0.0, c], [0.0, 1.0, 0.0]]

    return FrameField(n=3, k=2, rho=rho)


# Constant structure functions of the skater frame; the generic
# tangent-frame formula reproduces these at every phi (see tests).
_SKATER_STRUCTURE = np.zeros((3, 3, 3))
_SKATER_STRUCTURE[2, 0, 1] = 1.0
_SKATER_STRUCTURE[2, 1, 0] = -1.0
_SKATER_STRUCTURE[0, 1, 2] = 1.0
_SKATER_STRUCTURE[0, 2, 1] = -1.0


def _skater_anchor(q):
    phi = float(q[2])
    c = math.cos(phi)
    s = math.sin(phi)
    return np.array([[c, 0.0, -s], [s, 0.0, c], [0.0, 1.0, 0.0]])


def _skater_algebroid() -> SkewAlgebroid:
    return SkewAlgebroid(
        m=3, rank=3, anchor=_skater_anchor, structure=_constant_structure(_SKATER_STRUCTURE)
    )


def _skater_metric(m: float, k2: float, potential, a_par=None, a_perp=None) -> MetricBlocks:
    g_sub = [[1.0, 0.0], [0.0, k2]]
    g_inv = [[1.0, 0.0], [0.0, 1.0 / k2]]
    g_full = [[1.0, 0.0, 0.0], [0.0, k2, 0.0], [0.0, 0.0, 1.0]]
    return MetricBlocks(
        mass=m,
        g_sub=_constant_rows(g_sub),
        g_inv_sub=_constant_rows(g_inv),
        g_full=_constant_rows(g_full),
        potential=potential,
        a_par=a_par,
        a_perp=a_perp,
    )


_SKATER_BASE = ("x", "y", "phi")
_SKATER_FIBER = ("eta1", "eta2", "eta3")


def _skater_free_hamiltonian(m, k2) -> ScalarField:
    half_over_m = 0.5 / m

    def fn(x, y, phi, e1, e2, e3):
        return half_over_m * (e1 * e1 + (e2 * e2) / k2 + e3 * e3)

    return ScalarField(_SKATER_BASE, _SKATER_FIBER, fn)


def _skater_analytic_free(m, k2):
    def closed_form(ic, t):
        x0c, y0c, phi0, eta1, eta2 = [float(v) for v in ic]
        omega0 = eta2 / (m * k2)
        if omega0 == 0.0:
            raise DegenerateParameterError(
                "closed form needs nonzero initial rotation (eta2 != 0)"
            )
        v0 = eta1 / m
        phase = phi0 + omega0 * t
        x = (v0 / omega0) * (math.sin(phase) - math.sin(phi0)) + x0c
        y = -(v0 / omega0) * (math.cos(phase) - math.cos(phi0)) + y0c
        return np.array([x, y, phase, eta1, eta2])

    return closed_form


def _skater_analytic_slope(m, k2, lam):
    def closed_form(ic, t):
        xi, yi, phi0, eta1_i, eta2 = [float(v) for v in ic]
        omega0 = eta2 / (m * k2)
        if omega0 == 0.0:
            raise DegenerateParameterError(
                "closed form needs nonzero initial rotation (eta2 != 0)"
            )
        # Family constants fitted so the printed parameterization passes
        # through the supplied state at t = 0.
        v0 = (eta1_i + (lam / omega0) * math.sin(phi0)) / m
        x0 = xi - lam / (4 * m * omega0**2) * math.cos(2 * phi0) - (v0 / omega0) * math.sin(phi0)
        y0 = yi - lam / (4 * m * omega0**2) * math.sin(2 * phi0) + (v0 / omega0) * math.cos(phi0)
        phase = phi0 + omega0 * t
        eta1 = -(lam / omega0) * math.sin(phase) + v0 * m
        x = lam / (4 * m * omega0**2) * math.cos(2 * phase) + (v0 / omega0) * math.sin(phase) + x0
        y = (
            -lam / (2 * m * omega0) * t
            + lam / (4 * m * omega0**2) * math.sin(2 * phase)
            - (v0 / omega0) * math.cos(phase)
            + y0
        )
        return np.array([x, y, phase, eta1, eta2])

    return closed_form


def _build_skater_free(p) -> SystemSpec:
    m, k2 = p["m"], p["k2"]
    return SystemSpec(
        name="skater_free",
        dirac=DiracAlgebroid(_skater_algebroid(), k=2),
        base_names=_SKATER_BASE,
        fiber_names=_SKATER_FIBER,
        params=p,
        hamiltonian=_skater_free_hamiltonian(m, k2),
        consistency=ConsistencySolution(kind="zero"),
        analytic=_skater_analytic_free(m, k2),
        metric=_skater_metric(m, k2, _zero_potential(_SKATER_BASE)),
    )


def _build_skater_slope(p) -> SystemSpec:
    m, k2, lam = p["m"], p["k2"], p["lambda"]
    free = _skater_free_hamiltonian(m, k2)

    def fn(x, y, phi, e1, e2, e3):
        return free.fn(x, y, phi, e1, e2, e3) + lam * x

    potential = ScalarField(_SKATER_BASE, (), lambda x, y, phi: lam * x)
    return SystemSpec(
        name="skater_slope",
        dirac=DiracAlgebroid(_skater_algebroid(), k=2),
        base_names=_SKATER_BASE,
        fiber_names=_SKATER_FIBER,
        params=p,
        hamiltonian=ScalarField(_SKATER_BASE, _SKATER_FIBER, fn),
        consistency=ConsistencySolution(kind="zero"),
        analytic=_skater_analytic_slope(m, k2, lam),
        metric=_skater_metric(m, k2, potential),
    )


def _build_skater_charged(p) -> SystemSpec:
    m, k2, b, ec, d = p["m"], p["k2"], p["B"], p["e_c"], p["d"]
    half_over_m = 0.5 / m

    def fn(x, y, phi, e1, e2, e3):
        cp = numcore.cos(phi)
        sp = numcore.sin(phi)
        p1 = e1 - ec * b * x * sp
        p2 = e2 - ec * b * d * x * cp
        p3 = e3 - ec * b * x * cp
        return half_over_m * (p1 * p1 + (p2 * p2) / k2 + p3 * p3)

    def a_par(q):
        x, phi = q[0], q[2]
        return [ec * b * x * numcore.sin(phi), ec * b * d * x * numcore.cos(phi)]

    def a_perp(q):
        return [ec * b * q[0] * numcore.cos(q[2])]

    return SystemSpec(
        name="skater_charged",
        dirac=DiracAlgebroid(_skater_algebroid(), k=2),
        base_names=_SKATER_BASE,
        fiber_names=_SKATER_FIBER,
        params=p,
        hamiltonian=ScalarField(_SKATER_BASE, _SKATER_FIBER, fn),
        consistency=ConsistencySolution(kind="affine", affine_map=a_perp),
        metric=_skater_metric(
            m, k2, _zero_potential(_SKATER_BASE), a_par=a_par, a_perp=a_perp
        ),
    )


# -- rolling ball geometry --------------------------------------------------


def so3_constants() -> np.ndarray:
    """Rotation-algebra constants in the bracket convention used here."""
    c = np.zeros((3, 3, 3))
    for a in range(3):
        for b in range(3):
            for d in range(3):
                # coefficient of generator a in [l_d, l_b]
                c[a, b, d] = _levi_civita(d, b, a)
    return c


def _levi_civita(i, j, k):
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1.0
    if (i, j, k) in ((0, 2, 1), (2, 1, 0), (1, 0, 2)):
        return -1.0
    return 0.0


def ball_transition_matrix(k2: float, radius: float) -> np.ndarray:
    """Columns express the rolling-adapted sections in the product basis
    (d_x, d_y, l_x, l_y, l_z): three spanning the no-slip distribution and
    two metric-orthogonal complements."""
    r = radius
    return np.array(
        [
            [r, 0.0, 0.0, k2, 0.0],
            [0.0, -r, 0.0, 0.0, k2],
            [0.0, 1.0, 0.0, 0.0, r],
            [1.0, 0.0, 0.0, -r, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0],
        ]
    )


def ball_structure_constants(k2: float, radius: float) -> np.ndarray:
    """Structure functions of the rolling-adapted ball frame.

    Obtained by expanding the rotation-algebra brackets of the sections
    through l_x = (k2 f2 + R f5)/(k2 + R^2), l_y = (k2 f1 - R f4)/(k2 + R^2);
    agreement with the generic frame-change rule is enforced in tests.
    """
    r = radius
    s = k2 + r * r
    c = np.zeros((5, 5, 5))

    def put(a, b, d, v):
        c[a - 1, b - 1, d - 1] = v
        c[a - 1, d - 1, b - 1] = -v

    put(3, 1, 2, 1.0)
    put(2, 1, 3, -k2 / s)
    put(5, 1, 3, -r / s)
    put(1, 2, 3, k2 / s)
    put(4, 2, 3, -r / s)
    put(3, 1, 5, r)
    put(3, 2, 4, r)
    put(2, 3, 4, -r * k2 / s)
    put(5, 3, 4, -r * r / s)
    put(1, 3, 5, -r * k2 / s)
    put(4, 3, 5, r * r / s)
    put(3, 4, 5, -r * r)
    return c


_BALL_BASE = ("x", "y")
_BALL_FIBER = ("eta1", "eta2", "eta3", "eta4", "eta5")


def _ball_algebroid(k2: float, radius: float) -> SkewAlgebroid:
    r = radius
    anchor = np.array([[r, 0.0, 0.0, k2, 0.0], [0.0, -r, 0.0, 0.0, k2]])
    anchor.flags.writeable = False
    return SkewAlgebroid(
        m=2,
        rank=5,
        anchor=lambda q: anchor,
        structure=_constant_structure(ball_structure_constants(k2, radius)),
    )


def _ball_metric(m, k2, radius, potential, a_par=None, a_perp=None) -> MetricBlocks:
    s = k2 + radius * radius
    g_sub = [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, k2]]
    g_inv = [[1.0 / s, 0.0, 0.0], [0.0, 1.0 / s, 0.0], [0.0, 0.0, 1.0 / k2]]
    g_full = np.diag([s, s, k2, k2 * s, k2 * s]).tolist()
    return MetricBlocks(
        mass=m,
        g_sub=_constant_rows(g_sub),
        g_inv_sub=_constant_rows(g_inv),
        g_full=_constant_rows(g_full),
        potential=potential,
        a_par=a_par,
        a_perp=a_perp,
    )


def _ball_free_hamiltonian(m, k2, radius) -> ScalarField:
    s = k2 + radius * radius
    c_plane = 0.5 / (m * s)
    c_spin = 0.5 / (m * k2)
    c_perp = 0.5 / (m * k2 * s)

    def fn(x, y, e1, e2, e3, e4, e5):
        return (
            c_plane * (e1 * e1 + e2 * e2)
            + c_spin * (e3 * e3)
            + c_perp * (e4 * e4 + e5 * e5)
        )

    return ScalarField(_BALL_BASE, _BALL_FIBER, fn)


def _ball_analytic_free(m, k2, radius):
    s = k2 + radius * radius

    def closed_form(ic, t):
        x0, y0, e1, e2, e3 = [float(v) for v in ic]
        vx = radius * e1 / (m * s)
        vy = -radius * e2 / (m * s)
        return np.array([x0 + vx * t, y0 + vy * t, e1, e2, e3])

    return closed_form


def _build_ball_free(p) -> SystemSpec:
    m, k2, r = p["m"], p["k2"], p["R"]
    return SystemSpec(
        name="ball_free",
        dirac=DiracAlgebroid(_ball_algebroid(k2, r), k=3),
        base_names=_BALL_BASE,
        fiber_names=_BALL_FIBER,
        params=p,
        hamiltonian=_ball_free_hamiltonian(m, k2, r),
        consistency=ConsistencySolution(kind="zero"),
        analytic=_ball_analytic_free(m, k2, r),
        metric=_ball_metric(m, k2, r, _zero_potential(_BALL_BASE)),
    )


def _ball_magnetic_pieces(p):
    m, k2, r, b, ec = p["m"], p["k2"], p["R"], p["B"], p["e_c"]
    s = k2 + r * r
    c_plane = 0.5 / (m * s)
    c_spin = 0.5 / (m * k2)
    c_perp = 0.5 / (m * k2 * s)

    def fn(x, y, e1, e2, e3, e4, e5):
        p2 = e2 + ec * b * x * r
        p5 = e5 - ec * b * x * k2
        return (
            c_plane * (e1 * e1 + p2 * p2)
            + c_spin * (e3 * e3)
            + c_perp * (e4 * e4 + p5 * p5)
        )

    def a_par(q):
        return [0.0, -ec * b * q[0] * r, 0.0]

    def a_perp(q):
        return [0.0, ec * b * q[0] * k2]

    return fn, a_par, a_perp


def _build_ball_magnetic(p) -> SystemSpec:
    m, k2, r = p["m"], p["k2"], p["R"]
    fn, a_par, a_perp = _ball_magnetic_pieces(p)
    return SystemSpec(
        name="ball_magnetic",
        dirac=DiracAlgebroid(_ball_algebroid(k2, r), k=3),
        base_names=_BALL_BASE,
        fiber_names=_BALL_FIBER,
        params=p,
        hamiltonian=ScalarField(_BALL_BASE, _BALL_FIBER, fn),
        consistency=ConsistencySolution(kind="affine", affine_map=a_perp),
        metric=_ball_metric(
            m, k2, r, _zero_potential(_BALL_BASE), a_par=a_par, a_perp=a_perp
        ),
    )


def _build_ball_harmonic(p) -> SystemSpec:
    m, omega = p["m"], p["omega"]
    magnetic = replace(_build_ball_magnetic(p), name="ball_harmonic", params=p)
    coeff = 0.5 * m * (omega * omega)

    def pot_fn(x, y):
        return coeff * (x**2 + y**2)

    potential = ScalarField(_BALL_BASE, (), pot_fn)
    return _with_extra_potential(magnetic, potential)


def _with_extra_potential(spec: SystemSpec, extra: ScalarField) -> SystemSpec:
    """New spec with Hamiltonian H + extra(q); consistency is untouched
    because the extra term carries no momentum dependence."""
    m_dim = spec.m
    base_fn = spec.hamiltonian.fn
    extra_fn = extra.fn

    def fn(*args):
        return base_fn(*args) + extra_fn(*args[:m_dim])

    hamiltonian = ScalarField(spec.base_names, spec.fiber_names, fn)
    metric = spec.metric
    if metric is not None:
        old_pot = metric.potential.fn

        def pot(*qargs):
            return old_pot(*qargs) + extra_fn(*qargs)

        metric = replace(metric, potential=ScalarField(spec.base_names, (), pot))
    return replace(spec, hamiltonian=hamiltonian, metric=metric, analytic=None)


# -- catalog ----------------------------------------------------------------

CATALOG_DEFAULTS = {
    "skater_free": {"m": 1.0, "k2": 1.0},
    "skater_slope": {"m": 1.0, "k2": 1.0, "lambda": 1.0},
    "skater_charged": {"m": 1.0, "k2": 1.0, "B": 1.0, "e_c": 1.0, "d": 0.1},
    "ball_free": {"m": 1.0, "k2": 1.0, "R": 1.0},
    "ball_magnetic": {"m": 1.0, "k2": 1.0, "R": 1.0, "B": 1.0, "e_c": 1.0},
    "ball_harmonic": {"m": 1.0, "k2": 1.0, "R": 1.0, "B": 1.0, "e_c": 1.0, "omega": 1.0},
}

_BUILDERS = {
    "skater_free": _build_skater_free,
    "skater_slope": _build_skater_slope,
    "skater_charged": _build_skater_charged,
    "ball_free": _build_ball_free,
    "ball_magnetic": _build_ball_magnetic,
    "ball_harmonic": _build_ball_harmonic,
}


def catalog_names() -> tuple:
    return tuple(sorted(_BUILDERS))


def build(name: str, overrides: Mapping | None = None) -> SystemSpec:
    """Assemble a catalog system, applying parameter overrides, then
    spot-check the declared consistency solution on random states."""
    if name not in _BUILDERS:
        raise CatalogError(f"unknown system {name!r}; available: {', '.join(catalog_names())}")
    params = dict(CATALOG_DEFAULTS[name])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise CatalogError(f"system {name!r} has no parameter {key!r}")
        params[key] = float(value)
    spec = _BUILDERS[name](params)
    _spot_check_consistency(spec)
    return spec


def _spot_check_consistency(spec: SystemSpec, samples: int = 10):
    rng = np.random.default_rng(20240917)
    for _ in range(samples):
        q = rng.uniform(-1.5, 1.5, spec.m)
        eta_a = rng.uniform(-2.0, 2.0, spec.k)
        eta_alpha = _declared_transverse(spec, q)
        full = PhaseState(q=q, eta=tuple(eta_a) + tuple(eta_alpha), full=True)
        res = consistency_residual(spec.dirac, spec.hamiltonian, full)
        scale = 1.0 + float(np.max(np.abs(grad(spec.hamiltonian, full.q + full.eta))))
        if res.size and float(np.max(np.abs(res))) > 1e-12 * scale:
            raise ValidationError(
                f"declared consistency solution of {spec.name!r} violates the "
                f"consistency condition (residual {float(np.max(np.abs(res))):.3e})"
            )


def _declared_transverse(spec: SystemSpec, q) -> np.ndarray:
    nt = spec.n_fiber - spec.k
    if spec.consistency.kind == "zero" or nt == 0:
        return np.zeros(nt)
    if spec.consistency.kind == "affine":
        return np.asarray(spec.consistency.affine_map([float(v) for v in q]), dtype=float)
    raise ValidationError("catalog systems declare a closed-form consistency solution")


def analytic_state(spec: SystemSpec, ic: PhaseState, t: float) -> PhaseState:
    """Evaluate the closed-form solution through the given initial state."""
    if spec.analytic is None:
        raise UnsupportedError(f"system {spec.name!r} has no closed-form solution")
    if ic.full or len(ic.q) != spec.m or len(ic.eta) != spec.k:
        raise ValidationError("initial condition must be a reduced state of matching shape")
    out = spec.analytic(np.array(ic.q + ic.eta), float(t))
    return PhaseState(q=out[: spec.m], eta=out[spec.m :], full=False)


def hamiltonian_with_potential(spec: SystemSpec, extra: exprparse.ExprNode) -> SystemSpec:
    """Add a position-only potential term to the Hamiltonian.

    Momentum dependence is rejected since it would invalidate the
    declared consistency solution.
    """
    names = exprparse.free_variables(extra)
    bad = names - set(spec.base_names)
    if bad:
        raise ValidationError(
            f"potential may only use base coordinates {spec.base_names}, "
            f"found {sorted(bad)}"
        )
    base_names = spec.base_names

    def extra_fn(*qargs):
        return exprparse.eval_expr(extra, dict(zip(base_names, qargs)))

    return _with_extra_potential(spec, ScalarField(base_names, (), extra_fn))


# -- oracle wiring ----------------------------------------------------------


def restricted_algebroid(spec: SystemSpec) -> SkewAlgebroid:
    return restrict_to_constraint(spec.dirac.alg, spec.k)


def mechanical_lagrangian(spec: SystemSpec) -> ScalarField:
    """Full-fiber Lagrangian (m/2) g_AB x^A x^B - V(q) from the metric data."""
    metric = spec.metric
    if metric is None or metric.a_par is not None:
        raise UnsupportedError(f"system {spec.name!r} is not mechanical")
    mass = metric.mass
    n = spec.n_fiber
    m_dim = spec.m
    g_full = metric.g_full
    pot = metric.potential.fn

    def fn(*args):
        q = args[:m_dim]
        x = args[m_dim:]
        rows = g_full(list(q))
        quad = 0.0
        for a in range(n):
            row = rows[a]
            for b in range(n):
                coeff = row[b]
                if not hasattr(coeff, "partials") and float(coeff) == 0.0:
                    continue
                quad = quad + coeff * x[a] * x[b]
        return 0.5 * mass * quad - pot(*q)

    x_names = tuple(f"x{i + 1}" for i in range(n))
    return ScalarField(spec.base_names, x_names, fn)


def oracle_reduced_field(spec: SystemSpec, rs: PhaseState):
    """Dispatch to the metric-form or momentum-shift oracle dynamics."""
    metric = spec.metric
    if metric is None:
        raise UnsupportedError(f"system {spec.name!r} carries no metric data")
    if metric.a_par is None:
        return oracle_mechanical(
            metric.mass, metric.g_inv_sub, metric.potential, restricted_algebroid(spec), rs
        )
    alg, k = spec.dirac.alg, spec.k
    return oracle_magnetic(
        metric.mass,
        metric.g_inv_sub,
        metric.a_par,
        metric.a_perp,
        metric.potential,
        anchor_adm=lambda q: alg.anchor_array(q)[:, :k],
        structure_constrained=lambda q: alg.structure(q)[:, :k, :k],
        rs=rs,
    )
