"""1D meshes, piecewise-linear hat basis and Gauss quadrature."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, InvalidData

MAX_GAUSS_ORDER = 10


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidArgument("mesh needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise InvalidArgument("mesh nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidArgument("mesh nodes must be strictly increasing")
        if nodes[0] != self.a or nodes[-1] != self.b:
            raise InvalidArgument("first/last node must equal the interval endpoints")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elements(self):
        return self.nodes.size - 1

    @property
    def n_nodes(self):
        return self.nodes.size

    @property
    def lengths(self):
        return np.diff(self.nodes)

    @property
    def length(self):
        return self.b - self.a

    @property
    def interior(self):
        return np.arange(1, self.n_nodes - 1)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference element [0, 1]."""

    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def degree(self):
        return 2 * self.order - 1

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.points)))


@dataclass(frozen=True)
class Basis:
    """Hat functions on a mesh, tabulated at the quadrature points of every element.

    ``shape[q, 0]`` / ``shape[q, 1]`` are the left/right hats at reference point q;
    ``dshape[e, 0|1]`` their (constant) derivatives on element e.  The Galerkin
    unknowns are the interior hats, one per interior node.
    """

    mesh: Mesh
    quad: QuadratureRule
    shape: np.ndarray = field(init=False, repr=False)
    dshape: np.ndarray = field(init=False, repr=False)
    qpoints: np.ndarray = field(init=False, repr=False)
    qweights: np.ndarray = field(init=False, repr=False)
    lumped_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = self.quad.points
        he = self.mesh.lengths
        shape = np.stack([1.0 - s, s], axis=1)
        dshape = np.stack([-1.0 / he, 1.0 / he], axis=1)
        qpoints = self.mesh.nodes[:-1, None] + he[:, None] * s[None, :]
        qweights = he[:, None] * self.quad.weights[None, :]
        mass = np.zeros(self.mesh.n_nodes)
        mass[:-1] += 0.5 * he
        mass[1:] += 0.5 * he
        for name, value in (("shape", shape), ("dshape", dshape), ("qpoints", qpoints),
                            ("qweights", qweights), ("lumped_mass", mass)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def m(self):
        """Number of Galerkin basis functions (interior nodes)."""
        return self.mesh.n_nodes - 2

    def hat(self, j, x):
        """Evaluate the hat function of node ``j`` at points ``x``."""
        e = np.zeros(self.mesh.n_nodes)
        e[j] = 1.0
        return np.interp(x, self.mesh.nodes, e)

    def at_qpoints(self, values):
        """P1 function with nodal ``values`` sampled at quadrature points, shape (n_e, n_q)."""
        values = np.asarray(values, dtype=float)
        return values[:-1, None] * self.shape[None, :, 0] + values[1:, None] * self.shape[None, :, 1]

    def slopes(self, values):
        return np.diff(values) / self.mesh.lengths

    def integrate(self, f_q):
        """Integrate samples at the quadrature points (shape (n_e, n_q))."""
        return float(np.sum(self.qweights * f_q))

    def lp_norm(self, values, p):
        return self.integrate(np.abs(self.at_qpoints(values)) ** p) ** (1.0 / p)


def build_uniform_mesh(n_elements, a, b):
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InvalidArgument("interval endpoints must be finite")
    if a >= b:
        raise InvalidArgument(f"need a < b, got a={a}, b={b}")
    if int(n_elements) != n_elements or n_elements < 1:
        raise InvalidArgument(f"n_elements must be a positive integer, got {n_elements}")
    n_elements = int(n_elements)
    nodes = a + (b - a) * np.arange(n_elements + 1) / n_elements
    nodes[-1] = b
    return Mesh(nodes, float(a), float(b))


def gauss_rule(order):
    if int(order) != order or not 1 <= order <= MAX_GAUSS_ORDER:
        raise InvalidArgument(f"Gauss order must be in 1..{MAX_GAUSS_ORDER}, got {order}")
    order = int(order)
    x, w = np.polynomial.legendre.leggauss(order)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, order)


def interpolate_nodal(f, mesh):
    values = np.asarray(f(mesh.nodes), dtype=float)
    values = np.broadcast_to(values, mesh.nodes.shape).copy()
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise InvalidData(f"non-finite sample at node {bad} (x={mesh.nodes[bad]})")
    return values
