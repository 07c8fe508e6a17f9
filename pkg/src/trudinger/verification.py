"""Order principles, the gamma-squeeze, weak-form residuals and exact solutions."""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .discretization import BoundaryExpr, average_boundary
from .errors import InvalidArgument, OracleFailure, PreconditionFailure, SolveFailure
from .geometry import gauss_rule
from .model import Exponent, spow
from .solver import P2_MODE, DiscreteSolution, lp_distance, lp_spacetime, solve
from .stepper import SolveConfig


LUMPED_TOL, CONSISTENT_TOL = 1e-9, 1e-3


@dataclass(frozen=True)
class PrincipleReport:
    """Worst signed slack of an order principle.  ``advisory`` reports come from
    consistent-mass runs, where order can fail by consistency-level amounts."""

    principle: str
    worst: float
    node: int
    step: int
    tol: float
    bounds: tuple = ()
    advisory: bool = False

    @property
    def passed(self):
        return self.worst >= -self.tol

    def to_dict(self):
        return {"principle": self.principle, "worst_violation": self.worst, "node": self.node,
                "step": self.step, "tol": self.tol, "pass": self.passed, "bounds": list(self.bounds),
                "advisory": self.advisory}


def _order_tol(tol, *sols):
    """Default tolerance and advisory flag: strict only if every run is lumped."""
    lumped = all(s.lumped for s in sols)
    return (LUMPED_TOL if lumped else CONSISTENT_TOL) if tol is None else tol, not lumped


def _discrete_boundary(sol, psi):
    """Initial slice and lateral values (per step) of the discrete parabolic boundary."""
    if psi is None or psi is sol.spec.psi:
        slices = sol.boundary.slices if sol.boundary is not None else sol.states
    else:
        slices = average_boundary(psi, sol.grid, sol.mesh, gauss_rule(sol.quad_order)).slices
    return slices[0], slices[1:, [0, -1]]


def max_principle_check(sol, psi=None, tol=None):
    """Interior values against the range of the data on the discrete parabolic boundary."""
    tol, advisory = _order_tol(tol, sol)
    initial, lateral = _discrete_boundary(sol, psi)
    lo = min(initial.min(), lateral.min())
    hi = max(initial.max(), lateral.max())
    inner = sol.states[1:, 1:-1]
    if inner.size == 0:
        return PrincipleReport("maximum", 0.0, -1, -1, tol, (float(lo), float(hi)), advisory)
    slack = np.minimum(inner - lo, hi - inner)
    k, i = np.unravel_index(np.argmin(slack), slack.shape)
    return PrincipleReport("maximum", float(slack[k, i]), int(i) + 1, int(k) + 1, tol,
                           (float(lo), float(hi)), advisory)


def _same_discretisation(s1, s2):
    return (s1.grid.m_t == s2.grid.m_t and abs(s1.grid.T - s2.grid.T) <= 1e-14 * s1.grid.T
            and s1.mesh.n_nodes == s2.mesh.n_nodes and np.array_equal(s1.mesh.nodes, s2.mesh.nodes))


def comparison_check(upper, lower, tol=None):
    """Check ``lower <= upper`` at every node and step, given ordered boundary data."""
    if not _same_discretisation(upper, lower):
        raise InvalidArgument("comparison needs identical meshes and time grids")
    tol, advisory = _order_tol(tol, upper, lower)
    init_u, lat_u = _discrete_boundary(upper, None)
    init_l, lat_l = _discrete_boundary(lower, None)
    bad = np.flatnonzero(init_l > init_u + tol)
    if bad.size:
        i = int(bad[0])
        raise PreconditionFailure(f"initial data not ordered at node {i} (x={upper.mesh.nodes[i]})")
    bad = np.argwhere(lat_l > lat_u + tol)
    if bad.size:
        k, side = bad[0]
        node = 0 if side == 0 else upper.mesh.n_nodes - 1
        raise PreconditionFailure(f"lateral data not ordered at node {node}, step {k + 1}")
    diff = upper.states - lower.states
    k, i = np.unravel_index(np.argmin(diff), diff.shape)
    return PrincipleReport("comparison", float(diff[k, i]), int(i), int(k), tol, advisory=advisory)


@dataclass
class SqueezeReport:
    gammas: list
    ordering: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    complete: bool = True
    failure: str = ""
    tol: float = LUMPED_TOL
    advisory: bool = False

    def __post_init__(self):
        g = list(map(float, self.gammas))
        if not g or any(v <= 0 for v in g) or any(b >= a for a, b in zip(g, g[1:])):
            raise InvalidArgument(f"gamma ladder must be positive and strictly decreasing, got {g}")
        self.gammas = g

    @property
    def ordered(self):
        return all(w >= -self.tol for w in self.ordering)

    @property
    def gaps_decreasing(self):
        return len(self.gaps) == len(self.gammas) and all(b < a for a, b in zip(self.gaps, self.gaps[1:]))

    @property
    def passed(self):
        return self.complete and self.ordered and self.gaps_decreasing

    def to_dict(self):
        return {"gammas": self.gammas, "ordering_worst": self.ordering, "gaps": self.gaps,
                "ordered": self.ordered, "gaps_decreasing": self.gaps_decreasing,
                "complete": self.complete, "failure": self.failure, "pass": self.passed,
                "advisory": self.advisory}


def gamma_squeeze(spec, gammas, grid, mesh, cfg=SolveConfig(), quad_order=4, lumped=True, tol=None):
    """Solve with data psi - gamma, psi, psi + gamma for every gamma and measure the squeeze."""
    if tol is None:
        tol = LUMPED_TOL if lumped else CONSISTENT_TOL
    report = SqueezeReport(list(gammas), tol=tol, advisory=not lumped)
    try:
        middle = solve(spec, grid, mesh, cfg, quad_order, lumped)
    except SolveFailure as exc:
        report.complete, report.failure = False, f"gamma=0: {exc}"
        return report
    for g in report.gammas:
        try:
            up = solve(spec.with_psi(spec.psi.shifted(g)), grid, mesh, cfg, quad_order, lumped)
            down = solve(spec.with_psi(spec.psi.shifted(-g)), grid, mesh, cfg, quad_order, lumped)
        except SolveFailure as exc:
            report.complete, report.failure = False, f"gamma={g}: {exc}"
            break
        worst = min(comparison_check(up, middle, tol).worst, comparison_check(middle, down, tol).worst)
        report.ordering.append(worst)
        report.gaps.append(lp_distance(up, down))
    return report


# -- test fields and the weak form ---------------------------------------------

@dataclass(frozen=True)
class TestField:
    """zeta(x, t) = P(x) * g(t) with P a polynomial (ascending coefficients).

    ``time`` is one of ``const``, ``exp`` (e^{rate t}), ``cos``/``sin`` (of rate*t).
    """

    __test__ = False  # not a pytest class

    coeffs: tuple
    time: str = "const"
    rate: float = 0.0

    def __post_init__(self):
        if self.time not in ("const", "exp", "cos", "sin"):
            raise InvalidArgument(f"unknown time factor {self.time!r}")

    def _g(self, t):
        r = self.rate
        return {"const": lambda: np.ones_like(t), "exp": lambda: np.exp(r * t),
                "cos": lambda: np.cos(r * t), "sin": lambda: np.sin(r * t)}[self.time]()

    def _gt(self, t):
        r = self.rate
        return {"const": lambda: np.zeros_like(t), "exp": lambda: r * np.exp(r * t),
                "cos": lambda: -r * np.sin(r * t), "sin": lambda: r * np.cos(r * t)}[self.time]()

    def __call__(self, x, t):
        t = np.asarray(t, dtype=float)
        return np.polynomial.polynomial.polyval(x, self.coeffs) * self._g(t)

    def dx(self, x, t):
        t = np.asarray(t, dtype=float)
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs)) * self._g(t)

    def dt(self, x, t):
        t = np.asarray(t, dtype=float)
        return np.polynomial.polynomial.polyval(x, self.coeffs) * self._gt(t)

    @classmethod
    def bubble(cls, a=0.0, b=1.0, time="const", rate=0.0):
        """(x - a)(b - x) times a time factor."""
        return cls((-a * b, a + b, -1.0), time, rate)


ZETA_REGISTRY = {
    "bubble": lambda a, b: TestField.bubble(a, b),
    "bubble-exp": lambda a, b: TestField.bubble(a, b, "exp", -1.0),
    "bubble-cos": lambda a, b: TestField.bubble(a, b, "cos", np.pi),
}


def _spacetime_eval(field_, x, t):
    """(u, u_x) of a discrete or exact solution at points x, time t."""
    if isinstance(field_, DiscreteSolution):
        state = field_.state_at(t)
        u = np.interp(x, field_.mesh.nodes, state)
        slopes = np.diff(state) / field_.mesh.lengths
        e = np.clip(np.searchsorted(field_.mesh.nodes, x, side="right") - 1, 0, field_.mesh.n_elements - 1)
        return u, slopes[e]
    return field_.u(x, t), field_.ux(x, t)


def weak_form_residual(field_, zeta, window, mesh=None, grid=None, quad_order=None):
    """Defect of the integrated weak form on the window (t1, t2):

        [ int zeta |u|^{p-2}u ]_{t1}^{t2}
            = int_{t1}^{t2} int ( |u|^{p-2}u zeta_t - |u_x|^{p-2}u_x zeta_x ).

    ``field_`` is a DiscreteSolution (mesh and grid taken from it) or an
    ExactSolution (``mesh`` and ``grid`` set the quadrature partition).
    Quadrature is Gauss on every element and time slab.
    """
    if isinstance(field_, DiscreteSolution):
        mesh, grid = field_.mesh, field_.grid
        quad_order = quad_order or field_.quad_order
    elif mesh is None or grid is None:
        raise InvalidArgument("an exact field needs a mesh and a time grid for quadrature")
    quad = gauss_rule(quad_order or 4)
    p = field_.p
    t1, t2 = map(float, window)
    k1, k2 = round(t1 / grid.h), round(t2 / grid.h)
    if (abs(k1 * grid.h - t1) > 1e-9 * grid.T or abs(k2 * grid.h - t2) > 1e-9 * grid.T
            or not 0 <= k1 < k2 <= grid.m_t):
        raise PreconditionFailure(f"window {window} is not aligned to the time steps")
    ends = zeta(np.array([mesh.a, mesh.b]), np.linspace(t1, t2, 7)[:, None])
    if np.max(np.abs(ends)) > 1e-12:
        raise PreconditionFailure("test field does not vanish at the lateral boundary")
    he = mesh.lengths
    xq = (mesh.nodes[:-1, None] + he[:, None] * quad.points).ravel()
    wx = (he[:, None] * quad.weights).ravel()

    def mass(t):
        u, _ = _spacetime_eval(field_, xq, t)
        return float(np.dot(wx, zeta(xq, t) * spow(u, p - 2.0)))

    lhs = mass(k2 * grid.h) - mass(k1 * grid.h)
    rhs = 0.0
    for k in range(k1 + 1, k2 + 1):
        t0 = (k - 1) * grid.h
        for s, w in zip(quad.points, quad.weights):
            t = t0 + s * grid.h
            u, ux = _spacetime_eval(field_, xq, t)
            integrand = spow(u, p - 2.0) * zeta.dt(xq, t) - spow(ux, p - 2.0) * zeta.dx(xq, t)
            rhs += w * grid.h * float(np.dot(wx, integrand))
    return abs(lhs - rhs)


# -- exact solutions -------------------------------------------------------------

@dataclass(frozen=True)
class ExactSolution:
    family: str
    p: float
    lam: float
    u: Callable = field(repr=False)
    ux: Callable = field(repr=False)
    a: float = 0.0
    b: float = 1.0
    x_samples: np.ndarray = field(default=None, repr=False)
    v_samples: np.ndarray = field(default=None, repr=False)
    shooting_residual: float = 0.0
    eigen_residual: float = 0.0

    def as_boundary(self):
        """The exact solution itself as boundary/initial data (lateral values are 0)."""
        lam, u, ux = self.lam, self.u, self.ux
        return BoundaryExpr(f"oracle-{self.family}", (self.p, lam), u,
                            lambda x, t: -lam * u(x, t), ux, lambda x, t: -lam * ux(x, t))


def heat_oracle():
    """u = e^{-pi^2 t} sin(pi x) on (0, 1), exact for the p -> 2 mode."""
    lam = np.pi**2

    def u(x, t):
        return np.exp(-lam * np.asarray(t)) * np.sin(np.pi * np.asarray(x))

    def ux(x, t):
        return np.pi * np.exp(-lam * np.asarray(t)) * np.cos(np.pi * np.asarray(x))

    return ExactSolution("heat-sine", P2_MODE, lam, u, ux)


def _shoot(p, mu, dense=False):
    """Integrate v' = |w|^{1/(p-1)-1} w, w' = -mu |v|^{p-2} v from v(0)=0, w(0)=1 to x=1."""
    e = 1.0 / (p - 1.0)

    def rhs(x, y):
        v, w = y
        return [np.sign(w) * abs(w) ** e, -mu * abs(v) ** (p - 2.0) * v]

    sol = solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0], method="DOP853", rtol=1e-13, atol=1e-14,
                    dense_output=dense)
    if sol.status != 0:
        raise OracleFailure(f"ODE integration failed at mu={mu}: {sol.message}")
    return sol


@lru_cache(maxsize=16)
def separable_oracle(p, resolution=200):
    """Separable solution u = e^{-lam t} v(x) on (0, 1).

    v is the positive first eigenfunction of -(|v'|^{p-2}v')' = (p-1) lam |v|^{p-2} v
    with v(0) = v(1) = 0, found by shooting on mu = (p-1) lam and normalised to
    max v = 1.
    """
    p = Exponent(p).p
    if resolution < 100:
        raise InvalidArgument("resolution must be at least 100")

    def end_value(mu):
        return _shoot(p, mu).y[0, -1]

    lo, hi = 0.0, 1.0
    for _ in range(60):
        if end_value(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise OracleFailure(f"no sign change of v(1) found up to mu={hi}")
    mu = brentq(end_value, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    ivp = _shoot(p, mu, dense=True)
    xs = np.linspace(0.0, 1.0, resolution + 1)
    raw = ivp.sol(xs)[0]
    # tabulate once; Hermite splines with the exact ODE right-hand side as slopes
    table_x = np.linspace(0.0, 1.0, 40001)
    v_tab, w_tab = ivp.sol(table_x)
    e = 1.0 / (p - 1.0)
    v_spline = CubicHermiteSpline(table_x, v_tab, np.sign(w_tab) * np.abs(w_tab) ** e)
    w_spline = CubicHermiteSpline(table_x, w_tab, -mu * np.abs(v_tab) ** (p - 2.0) * v_tab)
    vmax = float(v_tab.max())
    scale = 1.0 / vmax
    shoot_res = abs(ivp.y[0, -1]) * scale
    if shoot_res > 1e-10:
        raise OracleFailure(f"shooting residual {shoot_res:.2e} exceeds 1e-10")
    lam = mu / (p - 1.0)

    def v_and_dv(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        w = w_spline(x)
        return v_spline(x) * scale, np.sign(w) * np.abs(w) ** e * scale

    # first integral |v'|^p + mu |v|^p / (p-1) = scale^p, checked at collocation points
    vc, dvc = v_and_dv(xs[1:-1])
    eig = float(np.max(np.abs(np.abs(dvc) ** p + mu * np.abs(vc) ** p / (p - 1.0) - scale**p)) / scale**p)

    def u(x, t):
        v, _ = v_and_dv(x)
        return np.exp(-lam * np.asarray(t, dtype=float)) * v

    def ux(x, t):
        _, dv = v_and_dv(x)
        return np.exp(-lam * np.asarray(t, dtype=float)) * dv

    v_samples = raw * scale
    v_samples[0] = 0.0
    xs.setflags(write=False)
    v_samples.setflags(write=False)
    return ExactSolution("separable-p", p, lam, u, ux, 0.0, 1.0, xs, v_samples, shoot_res, eig)


def error_vs_oracle(sol, exact):
    """L^p(Omega_T) error and final-time nodal max error against an exact solution."""
    if abs(sol.mesh.a - exact.a) > 1e-12 or abs(sol.mesh.b - exact.b) > 1e-12:
        raise InvalidArgument("solution and oracle live on different intervals")
    nodes = sol.mesh.nodes

    def diff(x, t):
        return np.interp(x, nodes, sol.state_at(t)) - exact.u(x, t)

    lp = lp_spacetime(diff, sol.mesh.a, sol.mesh.b, sol.grid.T, sol.p, nodes, sol.grid.times,
                      sol.quad_order)
    linf = float(np.max(np.abs(sol.states[-1] - exact.u(nodes, sol.grid.T))))
    return {"lp": lp, "linf_final": linf}


def sample_oracle(exact, sol):
    """A DiscreteSolution with the oracle's nodal values on ``sol``'s mesh and grid."""
    x = sol.mesh.nodes
    states = np.stack([exact.u(x, t) for t in sol.grid.times])
    return sol.with_states(states)


def zero_propagation(sol, tol=1e-9):
    """Soft diagnostic: if the data vanish on the parabolic boundary up to step k0,
    report the largest |u| seen on those steps."""
    initial, lateral = _discrete_boundary(sol, None)
    if np.any(np.abs(initial) > 0):
        return {"k0": 0, "max_abs": 0.0, "consistent": True}
    nz = np.flatnonzero(np.any(np.abs(lateral) > 0, axis=1))
    k0 = int(nz[0]) if nz.size else sol.grid.m_t
    m = float(np.max(np.abs(sol.states[: k0 + 1]))) if k0 > 0 else 0.0
    return {"k0": k0, "max_abs": m, "consistent": m <= tol}
