"""Time march of the Galerkin scheme and refinement studies."""

from dataclasses import dataclass, field
import logging

import numpy as np

from .discretization import BoundaryExpr, TimeGrid, average_boundary, build_time_grid
from .errors import InvalidArgument, SolveFailure
from .geometry import Basis, Mesh, build_uniform_mesh, gauss_rule, interpolate_nodal
from .model import Exponent
from .stepper import SolveConfig, StepProblem, solve_step

log = logging.getLogger(__name__)

# Exponent used to emulate p = 2 (linear heat equation) inside the p > 2 machinery.
P2_MODE = 2.0 + 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    p: float
    a: float
    b: float
    T: float
    psi: BoundaryExpr

    def __post_init__(self):
        exponent = self.p if isinstance(self.p, Exponent) else Exponent(self.p)
        object.__setattr__(self, "p", exponent)
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise InvalidArgument(f"bad interval ({self.a}, {self.b})")
        if not (np.isfinite(self.T) and self.T > 0):
            raise InvalidArgument(f"final time must be positive, got {self.T}")

    @property
    def exponent(self):
        return self.p

    def with_psi(self, psi):
        return ProblemSpec(self.p, self.a, self.b, self.T, psi)


@dataclass(frozen=True)
class DiscreteSolution:
    """Nodal states ``u[k]`` on the slabs ((k-1)h, kh], ``u[0]`` the initial data."""

    spec: ProblemSpec
    grid: TimeGrid
    mesh: Mesh
    states: np.ndarray
    steps: tuple = field(repr=False)
    quad_order: int = 4
    lumped: bool = True
    boundary: object = field(default=None, repr=False)

    @property
    def p(self):
        return self.spec.p.p

    @property
    def basis(self):
        return Basis(self.mesh, gauss_rule(self.quad_order))

    @property
    def converged(self):
        return all(r.converged for r in self.steps)

    def state_at(self, t):
        if not -1e-12 <= t <= self.grid.T * (1 + 1e-12):
            raise InvalidArgument(f"t={t} outside [0, {self.grid.T}]")
        return self.states[self.grid.step_of(t)]

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.mesh.a - 1e-12) or np.any(x > self.mesh.b + 1e-12):
            raise InvalidArgument(f"x outside [{self.mesh.a}, {self.mesh.b}]")
        out = np.interp(x, self.mesh.nodes, self.state_at(t))
        return float(out) if out.ndim == 0 else out

    def with_states(self, states):
        """Copy with replaced nodal states (used to build perturbed/sampled solutions)."""
        states = np.array(states, dtype=float)
        if states.shape != self.states.shape:
            raise InvalidArgument("state array shape mismatch")
        states.setflags(write=False)
        return DiscreteSolution(self.spec, self.grid, self.mesh, states, self.steps,
                                self.quad_order, self.lumped, self.boundary)

    def to_rows(self):
        """Rows (step, time, node, x, value) in step-major order."""
        t = self.grid.times
        for k in range(self.grid.m_t + 1):
            for i, x in enumerate(self.mesh.nodes):
                yield k, float(t[k]), i, float(x), float(self.states[k, i])

    def summary(self):
        return {
            "p": self.p, "a": self.mesh.a, "b": self.mesh.b, "T": self.grid.T,
            "m_t": self.grid.m_t, "n_elements": self.mesh.n_elements,
            "quad_order": self.quad_order, "lumped": self.lumped,
            "boundary": {"tag": self.spec.psi.tag, "params": list(map(_jsonable, self.spec.psi.params))},
            "steps": [{"step": k + 1, "iterations": r.iterations, "residual": r.grad_norm,
                       "tol": r.tol, "converged": r.converged} for k, r in enumerate(self.steps)],
        }


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


def solve(spec, grid, mesh, cfg=SolveConfig(), quad_order=4, lumped=True):
    """March the scheme from u_0 = psi(., 0) over all slabs of ``grid``."""
    if abs(mesh.a - spec.a) > 1e-12 or abs(mesh.b - spec.b) > 1e-12:
        raise InvalidArgument("mesh does not cover the problem interval")
    quad = gauss_rule(quad_order)
    basis = Basis(mesh, quad)
    bnd = average_boundary(spec.psi, grid, mesh, quad)
    states = np.empty((grid.m_t + 1, mesh.n_nodes))
    states[0] = interpolate_nodal(lambda x: spec.psi(x, 0.0), mesh)
    results = []
    alpha = np.zeros(basis.m)
    for k in range(1, grid.m_t + 1):
        sp = StepProblem(spec.p, basis, grid.h, states[k - 1], bnd.slices[k], lumped)
        res = solve_step(sp, cfg, w0=alpha)
        if not res.converged:
            partial = states[:k].copy()
            raise SolveFailure(
                f"step {k} did not converge: residual {res.grad_norm:.3e} > tol {res.tol:.3e} "
                f"after {res.iterations} iterations", step=k, partial=partial, result=res)
        alpha = res.alpha
        states[k] = sp.full_state(alpha)
        results.append(res)
    states.setflags(write=False)
    log.debug("solved %d steps, %d Newton iterations", grid.m_t, sum(r.iterations for r in results))
    return DiscreteSolution(spec, grid, mesh, states, tuple(results), quad_order, lumped, bnd)


def step_problem(sol, k):
    """Rebuild the StepProblem that produced ``sol.states[k]``."""
    return StepProblem(sol.spec.p, sol.basis, sol.grid.h, sol.states[k - 1],
                       sol.boundary.slices[k], sol.lumped)


# -- space-time norms ---------------------------------------------------------

def _breakpoints(*grids):
    ts = np.unique(np.concatenate([g.times for g in grids]))
    keep = np.concatenate([[True], np.diff(ts) > 1e-12 * max(g.T for g in grids)])
    return ts[keep]


def lp_spacetime(f, a, b, T, p, x_breaks, t_breaks, order=4):
    """(int_0^T int_a^b |f(x, t)|^p)^{1/p} with a tensor Gauss rule on the given breakpoints.

    ``f(x, t)`` receives x of shape (n_x,) and a scalar t inside one time piece.
    """
    quad = gauss_rule(order)
    xb = np.asarray(x_breaks)
    dx = np.diff(xb)
    xq = (xb[:-1, None] + dx[:, None] * quad.points).ravel()
    wx = (dx[:, None] * quad.weights).ravel()
    total = 0.0
    for t0, t1 in zip(t_breaks[:-1], t_breaks[1:]):
        for tq, wt in zip(t0 + (t1 - t0) * quad.points, (t1 - t0) * quad.weights):
            total += wt * float(np.dot(wx, np.abs(f(xq, tq)) ** p))
    return total ** (1.0 / p)


def lp_distance(sol1, sol2, p=None):
    """L^p(Omega_T) distance between two discrete solutions on possibly different grids."""
    if abs(sol1.grid.T - sol2.grid.T) > 1e-12 or sol1.mesh.a != sol2.mesh.a or sol1.mesh.b != sol2.mesh.b:
        raise InvalidArgument("solutions live on different space-time domains")
    p = sol1.p if p is None else p
    xb = np.unique(np.concatenate([sol1.mesh.nodes, sol2.mesh.nodes]))
    tb = _breakpoints(sol1.grid, sol2.grid)

    def diff(x, t):
        return (np.interp(x, sol1.mesh.nodes, sol1.state_at(t))
                - np.interp(x, sol2.mesh.nodes, sol2.state_at(t)))

    return lp_spacetime(diff, sol1.mesh.a, sol1.mesh.b, sol1.grid.T, p, xb, tb, sol1.quad_order)


def lp_norm(sol, p=None):
    p = sol.p if p is None else p
    return lp_spacetime(lambda x, t: np.interp(x, sol.mesh.nodes, sol.state_at(t)),
                        sol.mesh.a, sol.mesh.b, sol.grid.T, p, sol.mesh.nodes, sol.grid.times,
                        sol.quad_order)


# -- refinement ----------------------------------------------------------------

@dataclass
class ConvergenceReport:
    ladder: list
    errors: list
    reductions: list
    gaps: list = field(default_factory=list)
    reference: str = "oracle"
    complete: bool = True
    failure: str = ""
    solutions: list = field(default_factory=list, repr=False)

    def strictly_decreasing(self, values=None):
        v = self.errors if values is None else values
        return len(v) >= 2 and all(b < a for a, b in zip(v, v[1:]))

    def to_dict(self):
        return {"ladder": [list(r) for r in self.ladder], "errors": self.errors,
                "reductions": self.reductions, "gaps": self.gaps, "reference": self.reference,
                "complete": self.complete, "failure": self.failure}


def _ratios(v):
    out = []
    for a, b in zip(v, v[1:]):
        out.append(a / b if b > 0 else (float("inf") if a > 0 else float("nan")))
    return out


def refine_study(spec, ladder, cfg=SolveConfig(), oracle=None, quad_order=4, lumped=True):
    """Solve on every (m_t, n_elements) rung and tabulate errors.

    With an ``oracle`` (an ``ExactSolution``) errors are measured against it
    via :func:`trudinger.verification.error_vs_oracle`.  Otherwise rung i is compared with the finest rung and the
    consecutive-rung gaps are reported too.
    """
    ladder = [tuple(int(v) for v in r) for r in ladder]
    if len(ladder) < 2:
        raise InvalidArgument("a refinement ladder needs at least two rungs")
    for (m0, n0), (m1, n1) in zip(ladder, ladder[1:]):
        if m1 < m0 or n1 < n0 or (m1, n1) == (m0, n0):
            raise InvalidArgument(f"ladder is not refining at {(m0, n0)} -> {(m1, n1)}")
    sols = []
    report = ConvergenceReport(ladder, [], [], reference="oracle" if oracle is not None else "finest")
    for m_t, n in ladder:
        try:
            sols.append(solve(spec, build_time_grid(spec.T, m_t), build_uniform_mesh(n, spec.a, spec.b),
                              cfg, quad_order, lumped))
        except SolveFailure as exc:
            report.complete = False
            report.failure = f"rung {(m_t, n)}: {exc}"
            break
    if oracle is not None:
        from .verification import error_vs_oracle
        report.errors = [error_vs_oracle(s, oracle)["lp"] for s in sols]
    else:
        if sols:
            finest = sols[-1]
            report.errors = [lp_distance(s, finest) for s in sols[:-1]]
        report.gaps = [lp_distance(s0, s1) for s0, s1 in zip(sols, sols[1:])]
    report.reductions = _ratios(report.errors)
    report.solutions = sols
    return report
