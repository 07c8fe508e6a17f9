"""Time grid, closed-form boundary data and its slab averages."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument, InvalidData


@dataclass(frozen=True)
class TimeGrid:
    h: float
    m_t: int
    T: float

    @property
    def times(self):
        return self.h * np.arange(self.m_t + 1)

    def step_of(self, t, tol=1e-9):
        """Slab index k with t in ((k-1)h, kh]; t = 0 maps to 0."""
        k = int(np.ceil(t / self.h - tol))
        return min(max(k, 0), self.m_t)

    def snap_down(self, t, tol=1e-9):
        """Largest step index k with kh <= t (up to rounding)."""
        return min(int(np.floor(t / self.h + tol)), self.m_t)


def build_time_grid(T, m_t):
    if not np.isfinite(T) or T <= 0:
        raise InvalidArgument(f"final time must be finite and positive, got {T}")
    if int(m_t) != m_t or m_t < 1:
        raise InvalidArgument(f"step count must be a positive integer, got {m_t}")
    m_t = int(m_t)
    return TimeGrid(h=T / m_t, m_t=m_t, T=float(T))


def _zero(x, t):
    return np.zeros(np.broadcast(np.asarray(x, dtype=float), np.asarray(t, dtype=float)).shape)


@dataclass(frozen=True)
class BoundaryExpr:
    """Boundary/initial data psi(x, t) with exact first derivatives.

    All four evaluators take broadcastable arrays ``x`` and ``t``.
    """

    tag: str
    params: tuple
    psi: Callable
    psi_t: Callable
    psi_x: Callable
    psi_xt: Callable

    def __call__(self, x, t):
        return self.psi(x, t)

    def shifted(self, gamma):
        """psi + gamma: the derivative evaluators are shared unchanged."""
        base = self.psi
        return BoundaryExpr(self.tag, self.params + (("shift", float(gamma)),),
                            lambda x, t: base(x, t) + gamma, self.psi_t, self.psi_x, self.psi_xt)

    @property
    def time_independent(self):
        return self.tag in ("constant", "sin-bump") or (
            self.tag == "affine-xt" and self.params[2] == 0 and self.params[3] == 0)


def constant(c):
    c = float(c)
    return BoundaryExpr("constant", (c,), lambda x, t: c + _zero(x, t), _zero, _zero, _zero)


def affine_xt(c0, cx=0.0, ct=0.0, cxt=0.0):
    """c0 + cx*x + ct*t + cxt*x*t."""
    c0, cx, ct, cxt = map(float, (c0, cx, ct, cxt))
    return BoundaryExpr(
        "affine-xt", (c0, cx, ct, cxt),
        lambda x, t: c0 + cx * x + ct * t + cxt * x * t,
        lambda x, t: ct + cxt * x + _zero(x, t),
        lambda x, t: cx + cxt * t + _zero(x, t),
        lambda x, t: cxt + _zero(x, t),
    )


def sin_bump(amp=1.0, k=1.0, offset=0.0):
    """offset + amp*sin(k*pi*x), constant in time."""
    amp, k, offset = map(float, (amp, k, offset))
    w = k * np.pi
    return BoundaryExpr(
        "sin-bump", (amp, k, offset),
        lambda x, t: offset + amp * np.sin(w * x) + _zero(x, t),
        _zero,
        lambda x, t: amp * w * np.cos(w * x) + _zero(x, t),
        _zero,
    )


def separable_product(amp=1.0, kx=1.0, kt=1.0, offset=0.0):
    """offset + amp*sin(kx*pi*x)*sin(kt*pi*t)."""
    amp, kx, kt, offset = map(float, (amp, kx, kt, offset))
    wx, wt = kx * np.pi, kt * np.pi
    return BoundaryExpr(
        "separable-product", (amp, kx, kt, offset),
        lambda x, t: offset + amp * np.sin(wx * x) * np.sin(wt * t),
        lambda x, t: amp * wt * np.sin(wx * x) * np.cos(wt * t),
        lambda x, t: amp * wx * np.cos(wx * x) * np.sin(wt * t),
        lambda x, t: amp * wx * wt * np.cos(wx * x) * np.cos(wt * t),
    )


def polynomial(nx, *coeffs):
    """sum_ij c[i, j] x^i t^j with ``coeffs`` the row-major (nx, nt) table."""
    nx = int(nx)
    c = np.asarray(coeffs, dtype=float)
    if nx < 1 or c.size == 0 or c.size % nx:
        raise InvalidArgument(f"polynomial: {c.size} coefficients do not fill {nx} rows")
    c = c.reshape(nx, -1)
    cx = np.polynomial.polynomial.polyder(c, axis=0) if nx > 1 else np.zeros((1, c.shape[1]))
    ct = np.polynomial.polynomial.polyder(c, axis=1) if c.shape[1] > 1 else np.zeros((nx, 1))
    cxt = np.polynomial.polynomial.polyder(cx, axis=1) if cx.shape[1] > 1 else np.zeros((cx.shape[0], 1))

    def ev(table):
        return lambda x, t: np.polynomial.polynomial.polyval2d(
            *np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float)), table)

    return BoundaryExpr("polynomial", (float(nx),) + tuple(map(float, coeffs)),
                        ev(c), ev(ct), ev(cx), ev(cxt))


REGISTRY = {
    "constant": constant,
    "affine-xt": affine_xt,
    "sin-bump": sin_bump,
    "separable-product": separable_product,
    "polynomial": polynomial,
}


def boundary_from_tag(tag, params=()):
    try:
        factory = REGISTRY[tag]
    except KeyError:
        raise InvalidArgument(f"unknown boundary family {tag!r}; known: {sorted(REGISTRY)}") from None
    try:
        return factory(*params)
    except TypeError as exc:
        raise InvalidArgument(f"bad parameters for {tag!r}: {exc}") from None


@dataclass(frozen=True)
class AveragedBoundary:
    """Slab averages of psi at the mesh nodes.

    ``slices[0]`` is psi(., 0) (the data used for t <= 0), ``slices[k]`` the
    average over ((k-1)h, kh).  ``pre_average`` is the average of psi itself
    over (-h, 0), used only by the average-contraction diagnostic.
    """

    slices: np.ndarray
    pre_average: np.ndarray
    grid: TimeGrid = field(repr=False)

    def slice(self, k):
        return self.slices[k]


def _anchored_mean(weights, vals, axis):
    """Weighted mean written as v_0 + sum w (v - v_0): exact for constants."""
    w = weights / weights.sum()
    v0 = np.take(vals, [0], axis=axis)
    return np.squeeze(v0, axis=axis) + np.tensordot(w, vals - v0, axes=([0], [axis]))


def _slab_average(f, nodes, t0, h, quad):
    tq = t0 + h * quad.points
    vals = np.broadcast_to(np.asarray(f(nodes[None, :], tq[:, None]), dtype=float), tq.shape + nodes.shape)
    return _anchored_mean(quad.weights, vals, 0)


def average_boundary(psi, grid, mesh, quad):
    nodes = mesh.nodes
    starts = grid.h * np.arange(grid.m_t)
    tq = starts[:, None] + grid.h * quad.points[None, :]
    vals = np.asarray(psi(nodes[None, None, :], tq[:, :, None]), dtype=float)
    vals = np.broadcast_to(vals, tq.shape + nodes.shape)
    slices = np.empty((grid.m_t + 1, nodes.size))
    slices[0] = np.broadcast_to(psi(nodes, 0.0), nodes.shape)
    slices[1:] = _anchored_mean(quad.weights, vals, 1)
    pre = _slab_average(psi, nodes, -grid.h, grid.h, quad)
    if not (np.all(np.isfinite(slices)) and np.all(np.isfinite(pre))):
        k, i = np.argwhere(~np.isfinite(slices))[0] if not np.all(np.isfinite(slices)) else (-1, 0)
        raise InvalidData(f"non-finite boundary value at slice {k}, node {i}")
    slices.setflags(write=False)
    return AveragedBoundary(slices, np.broadcast_to(pre, nodes.shape).copy(), grid)


def backward_difference(series, h):
    series = np.asarray(series, dtype=float)
    if series.shape[0] < 2:
        raise InvalidArgument("backward difference needs at least two entries")
    return np.diff(series, axis=0) / h
