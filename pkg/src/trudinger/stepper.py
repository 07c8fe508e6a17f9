"""One implicit time step as a convex minimisation.

With ``u = psi_k + sum_j w_j e_j`` (psi_k the averaged boundary slice, e_j the
interior hats) a step minimises

    F(w) = 1/p int |u_x|^p + 1/h int ( |u|^p / p - |u_prev|^{p-2} u_prev u ),

whose Euler-Lagrange equation is the discrete scheme

    1/h int (|u|^{p-2}u - |u_prev|^{p-2}u_prev) e_j + int |u_x|^{p-2} u_x e_j' = 0.

The time integral is either lumped (nodal, the default; it keeps the discrete
maximum and comparison principles) or evaluated with the element Gauss rule.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import InvalidArgument, NumericFailure
from .geometry import Basis
from .model import Exponent, apow, spow


@dataclass(frozen=True)
class SolveConfig:
    gtol: float = 1e-10
    max_iter: int = 100
    reg_init: float = 1e-6
    reg_floor: float = 1e-14
    reg_shrink: float = 0.1
    backtrack: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-12

    def __post_init__(self):
        if not self.gtol > 0:
            raise InvalidArgument("gtol must be positive")
        if self.max_iter < 1:
            raise InvalidArgument("max_iter must be >= 1")
        if not 0 < self.backtrack < 1:
            raise InvalidArgument("backtrack factor must lie in (0, 1)")
        if not 0 < self.armijo < 0.5:
            raise InvalidArgument("armijo parameter must lie in (0, 1/2)")
        if not (self.reg_init >= 0 and self.reg_floor > 0):
            raise InvalidArgument("regularisation parameters must be non-negative / positive")


@dataclass(frozen=True)
class StepProblem:
    exponent: Exponent
    basis: Basis
    h: float
    u_prev: np.ndarray
    psi_slice: np.ndarray
    lumped: bool = True

    def __post_init__(self):
        n = self.basis.mesh.n_nodes
        u_prev = np.asarray(self.u_prev, dtype=float)
        psi = np.asarray(self.psi_slice, dtype=float)
        if u_prev.shape != (n,) or psi.shape != (n,):
            raise InvalidArgument(f"nodal vectors must have length {n}")
        if not self.h > 0:
            raise InvalidArgument("time step must be positive")
        object.__setattr__(self, "u_prev", u_prev)
        object.__setattr__(self, "psi_slice", psi)

    @property
    def p(self):
        return self.exponent.p

    @property
    def m(self):
        return self.basis.m

    def full_state(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.m,):
            raise InvalidArgument(f"expected {self.m} interior coefficients, got shape {w.shape}")
        u = self.psi_slice.copy()
        u[1:-1] += w
        return u


@dataclass(frozen=True)
class StepResult:
    alpha: np.ndarray
    iterations: int
    grad_norm: float
    value: float
    converged: bool
    tol: float
    history: tuple = field(default=(), repr=False)


def _check_finite(arr, what):
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        idx = int(np.flatnonzero(~np.isfinite(arr.reshape(arr.shape[0], -1)).any(axis=1))[0])
        raise NumericFailure(f"non-finite {what} on element {idx}", element=idx)


def _element_terms(sp, u):
    """Per-element contributions to F (shape (n_e,)) and their absolute sizes."""
    p, basis = sp.p, sp.basis
    he = basis.mesh.lengths
    s = basis.slopes(u)
    grad_part = he * apow(s, p) / p
    if sp.lumped:
        prev = spow(sp.u_prev, p - 2.0)
        nod_pos = apow(u, p) / p
        nod_mix = prev * u
        left = 0.5 * he
        pos = left * (nod_pos[:-1] + nod_pos[1:])
        mix = left * (nod_mix[:-1] + nod_mix[1:])
    else:
        uq = basis.at_qpoints(u)
        pq = spow(basis.at_qpoints(sp.u_prev), p - 2.0)
        pos = np.sum(basis.qweights * apow(uq, p), axis=1) / p
        mix = np.sum(basis.qweights * pq * uq, axis=1)
    terms = grad_part + (pos - mix) / sp.h
    _check_finite(terms, "functional contribution")
    size = np.abs(grad_part) + (np.abs(pos) + np.abs(mix)) / sp.h
    return terms, size


def functional_value(sp, w):
    terms, _ = _element_terms(sp, sp.full_state(w))
    return float(np.sum(terms))


def _gradient_full(sp, u):
    """Gradient with respect to every nodal value (boundary rows included)."""
    p, basis = sp.p, sp.basis
    flux = spow(basis.slopes(u), p - 2.0)
    _check_finite(flux, "flux")
    g = np.zeros_like(u)
    g[1:] += flux
    g[:-1] -= flux
    if sp.lumped:
        g += basis.lumped_mass * (spow(u, p - 2.0) - spow(sp.u_prev, p - 2.0)) / sp.h
    else:
        val = spow(basis.at_qpoints(u), p - 2.0) - spow(basis.at_qpoints(sp.u_prev), p - 2.0)
        _check_finite(val, "mass integrand")
        wv = basis.qweights * val / sp.h
        g[:-1] += wv @ basis.shape[:, 0]
        g[1:] += wv @ basis.shape[:, 1]
    return g


def functional_gradient(sp, w):
    return _gradient_full(sp, sp.full_state(w))[1:-1]


def step_residual(sp, alpha):
    """Largest defect of the discrete weak form tested against each interior hat."""
    return float(np.max(np.abs(functional_gradient(sp, alpha)), initial=0.0))


def _hessian_banded(sp, u, reg, floor):
    """Interior tridiagonal Hessian in LAPACK banded layout, degenerate weights smoothed by ``reg``."""
    p, basis = sp.p, sp.basis
    he = basis.mesh.lengths
    s = basis.slopes(u)
    eps_s = max(reg * float(np.mean(s * s)), floor)
    k = (p - 1.0) * (s * s + eps_s) ** ((p - 2.0) / 2.0) / he
    n = u.size
    diag = np.zeros(n)
    diag[:-1] += k
    diag[1:] += k
    off = -k.copy()
    if sp.lumped:
        eps_u = max(reg * float(np.mean(u * u)), floor)
        diag += basis.lumped_mass * (p - 1.0) * (u * u + eps_u) ** ((p - 2.0) / 2.0) / sp.h
    else:
        uq = basis.at_qpoints(u)
        eps_u = max(reg * float(np.mean(uq * uq)), floor)
        wq = basis.qweights * (p - 1.0) * (uq * uq + eps_u) ** ((p - 2.0) / 2.0) / sp.h
        n0, n1 = basis.shape[:, 0], basis.shape[:, 1]
        diag[:-1] += wq @ (n0 * n0)
        diag[1:] += wq @ (n1 * n1)
        off += wq @ (n0 * n1)
    m = n - 2
    ab = np.zeros((3, m))
    ab[1] = diag[1:-1]
    if m > 1:
        ab[0, 1:] = off[1:-1]
        ab[2, :-1] = off[1:-1]
    return ab


def solve_step(sp, cfg=SolveConfig(), w0=None):
    """Damped Newton on F from the warm start ``w0`` (zero if omitted).

    The Newton matrix uses the smoothed weights ``(s^2 + eps)^{(p-2)/2}``;
    objective and gradient stay exact.  ``eps`` is relative to the mean
    squared slope/value and shrinks after every full step.  The line search is
    Armijo on element-wise differences of F with a rounding allowance, so the
    recorded values are non-increasing up to that allowance.
    """
    m = sp.m
    w = np.zeros(m) if w0 is None else np.asarray(w0, dtype=float).copy()
    if m == 0:
        v = functional_value(sp, w)
        return StepResult(w, 0, 0.0, v, True, 0.0, (v,))
    u = sp.full_state(w)
    terms, size = _element_terms(sp, u)
    g = _gradient_full(sp, u)[1:-1]
    gnorm = float(np.max(np.abs(g)))
    scale = max(gnorm, _gradient_scale(sp, u))
    tol = cfg.gtol * scale
    value = float(np.sum(terms))
    history = [value]
    reg = cfg.reg_init
    it = 0
    while gnorm > tol and it < cfg.max_iter:
        it += 1
        ab = _hessian_banded(sp, u, reg, cfg.reg_floor)
        try:
            d = solve_banded((1, 1), ab, -g)
        except (LinAlgError, ValueError) as exc:
            raise NumericFailure(f"singular Newton matrix: {exc}") from exc
        if not np.all(np.isfinite(d)):
            raise NumericFailure("non-finite Newton direction")
        slope = float(g @ d)
        if slope >= 0:
            d = -g
            slope = -float(g @ g)
        step = 1.0
        noise = 1e-14 * float(np.sum(size))
        while True:
            u_new = sp.full_state(w + step * d)
            terms_new, size_new = _element_terms(sp, u_new)
            delta = float(np.sum(terms_new - terms))
            if delta <= cfg.armijo * step * slope + noise:
                break
            step *= cfg.backtrack
            if step < cfg.min_step:
                break
        if step < cfg.min_step:
            break
        w = w + step * d
        u, terms, size = u_new, terms_new, size_new
        g = _gradient_full(sp, u)[1:-1]
        gnorm = float(np.max(np.abs(g)))
        value = float(np.sum(terms))
        history.append(value)
        if step == 1.0:
            reg = reg * cfg.reg_shrink
    return StepResult(w, it, gnorm, value, gnorm <= tol, tol, tuple(history))


def _gradient_scale(sp, u):
    """Size of the individual contributions entering the gradient at ``u``."""
    p, basis = sp.p, sp.basis
    flux = np.abs(spow(basis.slopes(u), p - 2.0))
    mass = basis.lumped_mass * (apow(u, p - 1.0) + apow(sp.u_prev, p - 1.0)) / sp.h
    return float(max(flux.max(initial=0.0), mass[1:-1].max(initial=0.0)))
