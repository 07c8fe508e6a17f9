"""Both sides of the Galerkin energy estimate, evaluated on discrete solutions.

Left side at a cutoff T* = k h (sums over slabs j = 1..k):

    A = sum_j h int |D(|u|^{(p-2)/2} u)_j|^2     (lumped, like the time term)
    B = sum_j h int |u_{j,x}|^p
    C = sum_j h int |u_j|^p
    D = int |u_{k,x}|^p

Majorant Q(psi, T*) = int (|psi(.,0)|^p + |psi_x(.,0)|^p)
                     + int_0^T* int (|psi|^p + |psi_x|^p + |psi_t|^p + |psi_xt|^p).
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .discretization import _anchored_mean
from .errors import InvalidArgument
from .geometry import Basis, gauss_rule
from .model import apow, spow


@dataclass(frozen=True)
class EnergyLedger:
    t_star: float
    k: int
    term_A: float
    term_B: float
    term_C: float
    term_D: float
    requested: float = None

    @property
    def total(self):
        return self.term_A + self.term_B + self.term_C + self.term_D


def _require_converged(sol):
    if not sol.converged:
        raise InvalidArgument("energy ledger needs a fully converged solution")


def step_energies(sol):
    """Per-slab integrands of A, B, C (arrays of length m_t, already multiplied by h)
    and the gradient energy xi_k = int |u_{k,x}|^p for k = 0..m_t."""
    p, h = sol.p, sol.grid.h
    basis = sol.basis
    u = sol.states
    he = sol.mesh.lengths
    mass = basis.lumped_mass
    half = spow(u, (p - 2.0) / 2.0)
    a = h * (np.diff(half, axis=0) / h) ** 2 @ mass
    slopes = np.diff(u, axis=1) / he
    xi = apow(slopes, p) @ he
    uq = u[:, :-1, None] * basis.shape[None, None, :, 0] + u[:, 1:, None] * basis.shape[None, None, :, 1]
    c = h * np.einsum("eq,keq->k", basis.qweights, apow(uq, p))[1:]
    return a, h * xi[1:], c, xi


def energy_window(sol, k1, k2):
    """Terms A, B, C summed over slabs k1+1..k2."""
    a, b, c, _ = step_energies(sol)
    return float(a[k1:k2].sum()), float(b[k1:k2].sum()), float(c[k1:k2].sum())


def _snap(sol, t_star):
    if not t_star > 0:
        raise InvalidArgument(f"cutoff must be positive, got {t_star}")
    if t_star > sol.grid.T * (1 + 1e-12):
        raise InvalidArgument(f"cutoff {t_star} beyond final time {sol.grid.T}")
    k = sol.grid.snap_down(t_star)
    return k, k * sol.grid.h


def energy_lhs(sol, t_star):
    _require_converged(sol)
    k, t_used = _snap(sol, t_star)
    a, b, c, xi = step_energies(sol)
    return EnergyLedger(t_used, k, float(a[:k].sum()), float(b[:k].sum()), float(c[:k].sum()),
                        float(xi[k]), requested=float(t_star))


def majorant_terms(psi, mesh, grid, t_star, p, quad_order=4):
    """The six integrals making up Q, keyed by name."""
    quad = gauss_rule(quad_order)
    basis = Basis(mesh, quad)
    xq = basis.qpoints
    k = grid.snap_down(t_star)

    def space(f):
        return basis.integrate(apow(np.broadcast_to(f, xq.shape), p))

    out = {"init_value": space(psi.psi(xq, 0.0)), "init_grad": space(psi.psi_x(xq, 0.0)),
           "value": 0.0, "grad": 0.0, "dt": 0.0, "dxt": 0.0}
    for j in range(k):
        for s, w in zip(quad.points, quad.weights):
            t = (j + s) * grid.h
            wt = w * grid.h
            out["value"] += wt * space(psi.psi(xq, t))
            out["grad"] += wt * space(psi.psi_x(xq, t))
            out["dt"] += wt * space(psi.psi_t(xq, t))
            out["dxt"] += wt * space(psi.psi_xt(xq, t))
    return out


def boundary_majorant(psi, mesh, grid, t_star, p, quad_order=4):
    return float(sum(majorant_terms(psi, mesh, grid, t_star, p, quad_order).values()))


DERIVATIVE_TERMS = ("init_grad", "grad", "dt", "dxt")


@dataclass
class EstimateReport:
    cutoff: float
    ledger: EnergyLedger
    lhs: float
    Q: float
    ratio: float
    majorant: dict
    t_regularity: float
    power_time_energy: float
    linkage_constant: float
    boundary_constant: float
    gamma_stable: bool
    diagnostic: str = ""

    @property
    def linkage_ok(self):
        """Discrete form of |D(|u|^{p-2}u)|^2 <= 4 |u|_inf^{p-2} |D(|u|^{(p-2)/2}u)|^2."""
        bound = self.linkage_constant * self.ledger.term_A
        return self.power_time_energy <= bound * (1 + 1e-10) + 1e-300

    def to_dict(self):
        d = asdict(self)
        d["ledger"]["total"] = self.ledger.total
        d["linkage_ok"] = self.linkage_ok
        return d


def check_galerkin_estimate(sol, psi=None, cutoffs=None, gamma_probe=0.1):
    """One report per cutoff: ledger, majorant, ratio and the auxiliary quantities."""
    _require_converged(sol)
    psi = sol.spec.psi if psi is None else psi
    cutoffs = [sol.grid.T / 4, sol.grid.T / 2, sol.grid.T] if cutoffs is None else cutoffs
    p, h = sol.p, sol.grid.h
    mass = sol.basis.lumped_mass
    power_rate = np.diff(spow(sol.states, p - 2.0), axis=0) / h
    power_step = h * power_rate**2 @ mass
    reports = []
    for t_star in cutoffs:
        ledger = energy_lhs(sol, t_star)
        k = ledger.k
        terms = majorant_terms(psi, sol.mesh, sol.grid, ledger.t_star, p, sol.quad_order)
        shifted = majorant_terms(psi.shifted(gamma_probe), sol.mesh, sol.grid, ledger.t_star, p,
                                 sol.quad_order)
        stable = all(terms[n] == shifted[n] for n in DERIVATIVE_TERMS)
        q = float(sum(terms.values()))
        lhs = ledger.total
        diag = ""
        if q > 0:
            ratio = lhs / q
        elif lhs > 0:
            ratio, diag = float("inf"), "zero data but non-zero energy: solver defect"
        else:
            ratio, diag = 0.0, "zero data and zero energy"
        umax = float(np.max(np.abs(sol.states[: k + 1])))
        init, lateral = sol.boundary.slices[0], sol.boundary.slices[1:k + 1, [0, -1]]
        bmax = float(max(np.abs(init).max(), np.abs(lateral).max(initial=0.0)))
        reports.append(EstimateReport(
            cutoff=float(t_star), ledger=ledger, lhs=lhs, Q=q, ratio=ratio, majorant=terms,
            t_regularity=float(power_step[:k].sum() + ledger.term_B),
            power_time_energy=float(power_step[:k].sum()),
            linkage_constant=4.0 * umax ** (p - 2.0), boundary_constant=4.0 * bmax ** (p - 2.0),
            gamma_stable=stable, diagnostic=diag))
    return reports


def gronwall_trace(sol):
    """xi(kh) = int |u_{k,x}|^p and the smallest C with xi(kh) <= C int_0^{kh} xi + Q(kh)."""
    _require_converged(sol)
    _, _, _, xi = step_energies(sol)
    h = sol.grid.h
    taus = sol.grid.times
    cum = np.concatenate([[0.0], np.cumsum(h * xi[1:])])
    c_emp = 0.0
    for k in range(1, sol.grid.m_t + 1):
        q = boundary_majorant(sol.spec.psi, sol.mesh, sol.grid, taus[k], sol.p, sol.quad_order)
        if cum[k] > 0:
            c_emp = max(c_emp, (xi[k] - q) / cum[k])
    return {"tau": taus.tolist(), "xi": xi.tolist(), "C_emp": float(c_emp)}


@dataclass
class ContractionReport:
    value_lhs: float
    value_rhs: float
    grad_lhs: float
    grad_rhs: float
    tol: float = 1e-8
    nodal_value_slack: float = field(default=0.0)
    nodal_grad_slack: float = field(default=0.0)

    @staticmethod
    def _rel(lhs, rhs):
        scale = max(abs(lhs), abs(rhs))
        return 0.0 if scale == 0 else (rhs - lhs) / scale

    @property
    def value_slack(self):
        return self._rel(self.value_lhs, self.value_rhs)

    @property
    def grad_slack(self):
        return self._rel(self.grad_lhs, self.grad_rhs)

    @property
    def passed(self):
        return self.value_slack >= -self.tol and self.grad_slack >= -self.tol

    def to_dict(self):
        d = asdict(self)
        d.update(value_slack=self.value_slack, grad_slack=self.grad_slack)
        d["pass"] = self.passed
        return d


def _slab_averages(f, nodes, grid, quad):
    """Averages of f(x_i, .) over (-h, 0) and every slab: shape (m_t + 1, n_nodes)."""
    starts = grid.h * np.arange(-1, grid.m_t)
    tq = starts[:, None] + grid.h * quad.points[None, :]
    vals = np.broadcast_to(f(nodes[None, None, :], tq[:, :, None]), tq.shape + nodes.shape)
    return _anchored_mean(quad.weights, vals, 1)


def _time_integral(f, nodes, grid, p, sub=4):
    """int_{-h}^{T} c(s) |f(x_i, s)|^p ds at every node.

    c(s) = sum_k h K_k(s), K_k the unit tent on ((k-2)h, kh) through which the
    k-th difference of slab averages is an average of the derivative.  It
    ramps up on (-h, 0), equals 1 on (0, T - h) and ramps down on (T - h, T).
    """
    quad = gauss_rule(10)
    h = grid.h
    hs = h / sub
    starts = -h + hs * np.arange((grid.m_t + 1) * sub)
    tq = (starts[:, None] + hs * quad.points[None, :]).ravel()
    cover = np.clip(np.minimum(np.minimum((tq + h) / h, (grid.T - tq) / h), 1.0), 0.0, None)
    w = np.tile(hs * quad.weights, (grid.m_t + 1) * sub) * cover
    vals = np.broadcast_to(f(nodes[None, :], tq[:, None]), tq.shape + nodes.shape)
    return w @ apow(vals, p)


def check_average_contraction(psi, mesh, grid, p, quad_order=4):
    """Compare sum_k h |D psi_h|^p with the tent-weighted int c |psi_t|^p (and the
    x-derivative analogue).

    Slab averages are taken of psi itself, including the slab (-h, 0), so the
    first difference is a genuine difference of consecutive averages.  Each
    difference is a tent average of psi_t, so Jensen gives the inequality
    node by node, with equality when psi is affine in t.  The weight c is at
    most 1 on (-h, T), so the right side never exceeds int_{-h}^{T} |psi_t|^p.
    Nodal values are integrated in space with the lumped weights.
    """
    quad = gauss_rule(max(quad_order, 6))
    mass = Basis(mesh, quad).lumped_mass
    nodes = mesh.nodes
    h = grid.h
    out = {}
    for name, f, ft in (("value", psi.psi, psi.psi_t), ("grad", psi.psi_x, psi.psi_xt)):
        avg = _slab_averages(f, nodes, grid, quad)
        lhs_nodal = h * np.sum(apow(np.diff(avg, axis=0) / h, p), axis=0)
        rhs_nodal = _time_integral(ft, nodes, grid, p)
        out[name] = (float(mass @ lhs_nodal), float(mass @ rhs_nodal),
                     float(np.min(rhs_nodal - lhs_nodal)))
    return ContractionReport(out["value"][0], out["value"][1], out["grad"][0], out["grad"][1],
                             nodal_value_slack=out["value"][2], nodal_grad_slack=out["grad"][2])
