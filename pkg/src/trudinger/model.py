"""Exponent bookkeeping and the p-power algebra behind the energy estimates.

Vectors follow the Euclidean convention: ``power_map(p, a)`` of a 1-D array is
``|a|^{p-2} a`` with ``|a|`` the Euclidean norm of the whole array.  The solver
works with scalar fields and uses the elementwise helpers ``spow``/``apow``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

REL_SLACK = 1e-12


@dataclass(frozen=True)
class Exponent:
    p: float
    q: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p <= 2.0:
            raise InvalidArgument(f"exponent p must be > 2, got {self.p}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", p / (p - 1.0))


def _pval(p):
    return p.p if isinstance(p, Exponent) else float(p)


def spow(x, e):
    """Elementwise ``|x|^e x``."""
    x = np.asarray(x, dtype=float)
    return np.abs(x) ** e * x


def apow(x, e):
    """Elementwise ``|x|^e``."""
    return np.abs(np.asarray(x, dtype=float)) ** e


def _norm(a):
    a = np.asarray(a, dtype=float)
    return np.abs(a) if a.ndim == 0 else np.linalg.norm(a)


def power_map(p, a):
    a = np.asarray(a, dtype=float)
    return _norm(a) ** (_pval(p) - 2.0) * a


def half_power_map(p, a):
    a = np.asarray(a, dtype=float)
    return _norm(a) ** ((_pval(p) - 2.0) / 2.0) * a


def _check_pair(a, b):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise InvalidArgument(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def monotonicity_gap(p, a, b):
    """``<|b|^{p-2}b - |a|^{p-2}a, b - a>``, non-negative for every p > 1."""
    a, b = _check_pair(a, b)
    return float(np.dot(power_map(p, b) - power_map(p, a), b - a))


@dataclass(frozen=True)
class InequalityReport:
    p: float
    a: tuple
    b: tuple
    gap: float
    term1_bound: float
    convexity_slack: float
    strong_bound: float
    term1_slack: float
    convexity_margin: float
    strong_slack: float
    term1_ok: bool
    convexity_ok: bool
    strong_ok: bool

    @property
    def ok(self):
        return self.term1_ok and self.convexity_ok and self.strong_ok


def inequality_slacks(p, a, b):
    """Vectorised core of :func:`check_vector_inequalities`.

    ``a`` and ``b`` have shape (N, d).  Returns a dict of arrays: the three
    quantities, their signed slacks (lower side subtracted from upper side) and
    the magnitude scale each slack is judged against.
    """
    p = _pval(p)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    pa = (na ** (p - 2.0))[..., None] * a
    pb = (nb ** (p - 2.0))[..., None] * b
    ha = (na ** ((p - 2.0) / 2.0))[..., None] * a
    hb = (nb ** ((p - 2.0) / 2.0))[..., None] * b
    d = b - a
    gap = np.sum((pb - pa) * d, axis=-1)
    term1 = 4.0 / p**2 * np.sum((hb - ha) ** 2, axis=-1)
    strong = 2.0 ** (2.0 - p) * np.linalg.norm(d, axis=-1) ** p
    tangent = p * np.sum(pb * d, axis=-1)
    rise = nb**p - na**p
    # rounding scale: the magnitudes entering each difference
    gap_scale = np.sum(np.abs(pb - pa) * np.abs(d), axis=-1)
    conv_scale = np.maximum(p * np.sum(np.abs(pb) * np.abs(d), axis=-1), nb**p + na**p)
    return {
        "gap": gap,
        "term1_bound": term1,
        "strong_bound": strong,
        "convexity_slack": rise - tangent,
        "term1_slack": gap - term1,
        "convexity_margin": tangent - rise,
        "strong_slack": gap - strong,
        "term1_scale": np.maximum(gap_scale, term1),
        "convexity_scale": conv_scale,
        "strong_scale": np.maximum(gap_scale, strong),
    }


def _flags(s, rel=REL_SLACK):
    return {
        "term1_ok": s["term1_slack"] >= -rel * s["term1_scale"],
        "convexity_ok": s["convexity_margin"] >= -rel * s["convexity_scale"],
        "strong_ok": s["strong_slack"] >= -rel * s["strong_scale"],
    }


def check_vector_inequalities(p, a, b):
    """Evaluate the three vector inequalities used by the energy estimate for one pair."""
    pv = _pval(p)
    if pv <= 2.0:
        raise InvalidArgument(f"inequality check needs p > 2, got {pv}")
    a, b = _check_pair(a, b)
    s = inequality_slacks(pv, a[None, :], b[None, :])
    f = _flags(s)
    v = {k: float(val[0]) for k, val in s.items()}
    return InequalityReport(
        p=pv, a=tuple(a.tolist()), b=tuple(b.tolist()),
        gap=v["gap"], term1_bound=v["term1_bound"], convexity_slack=v["convexity_slack"],
        strong_bound=v["strong_bound"], term1_slack=v["term1_slack"],
        convexity_margin=v["convexity_margin"], strong_slack=v["strong_slack"],
        term1_ok=bool(f["term1_ok"][0]), convexity_ok=bool(f["convexity_ok"][0]),
        strong_ok=bool(f["strong_ok"][0]),
    )


def sweep_vector_inequalities(ps, n_samples, dims=(1, 2, 3), seed=0):
    """Random-pair sweep of the three inequalities.

    For each p, ``n_samples`` pairs are drawn with dimension cycling through
    ``dims``; magnitudes are log-uniform over [1e-3, 1e3] and one pair in four
    is a small perturbation of the other so the near-diagonal regime is hit.
    """
    rng = np.random.default_rng(seed)
    out = []
    for p in ps:
        pv = _pval(p)
        violations = {"term1": 0, "convexity": 0, "strong": 0}
        worst = {"term1": np.inf, "convexity": np.inf, "strong": np.inf}
        for d in dims:
            n = n_samples // len(dims) + (1 if dims.index(d) < n_samples % len(dims) else 0)
            a = rng.standard_normal((n, d)) * 10.0 ** rng.uniform(-3, 3, (n, 1))
            b = rng.standard_normal((n, d)) * 10.0 ** rng.uniform(-3, 3, (n, 1))
            near = rng.random(n) < 0.25
            b[near] = a[near] * (1.0 + 10.0 ** rng.uniform(-8, -1, (near.sum(), 1))
                                 * rng.standard_normal((near.sum(), d)))
            s = inequality_slacks(pv, a, b)
            f = _flags(s)
            for key, slack, scale in (("term1", "term1_slack", "term1_scale"),
                                      ("convexity", "convexity_margin", "convexity_scale"),
                                      ("strong", "strong_slack", "strong_scale")):
                violations[key] += int(np.count_nonzero(~f[f"{key}_ok"]))
                with np.errstate(invalid="ignore", divide="ignore"):
                    rel = np.where(s[scale] > 0, s[slack] / s[scale], 0.0)
                worst[key] = min(worst[key], float(rel.min()))
        out.append({"p": pv, "samples": int(n_samples), "violations": violations,
                    "worst_relative_slack": worst})
    return out


def chain_rule_identity_residual(p, u, h):
    """Max defect of the discrete chain rule

        D(|u|^{p-2}u) = 2(p-1)/p * |u|^{(p-2)/2} * D(|u|^{(p-2)/2}u)

    where D is the backward difference with step ``h`` on the samples ``u``.
    The defect is O(h) for smooth paths that keep their sign.
    """
    pv = _pval(p)
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise InvalidArgument("need at least 2 time samples")
    if not h > 0:
        raise InvalidArgument(f"step must be positive, got {h}")
    lhs = np.diff(spow(u, pv - 2.0)) / h
    rhs = 2.0 * (pv - 1.0) / pv * apow(u[1:], (pv - 2.0) / 2.0) * np.diff(spow(u, (pv - 2.0) / 2.0)) / h
    return float(np.max(np.abs(lhs - rhs)))
