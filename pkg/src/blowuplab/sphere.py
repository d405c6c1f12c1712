"""Quadrature and Monte Carlo integration on the unit sphere S^{n-1}.

Product rules in the polar angles (phi, psi_1, ..., psi_{n-2}): uniform
midpoint nodes in phi (exact periodicity) and Gauss-Jacobi nodes in
t = cos(psi_j) with the sin^j Jacobian absorbed into the weight function,
which makes the surface measure exact at every order.  Indicators of
quadratics are never sampled: the innermost angle is resolved in closed
form and the last outer angle is integrated on panels split at the exact
sign-change roots (see `_kernels`).
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from . import _kernels
from .errors import DomainError, EvaluationError, QuadratureConvergenceWarning
from .quadratic import HarmonicQuadratic

MAX_PRODUCT_NODES = 20_000_000


def surface_area(n):
    """|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass(frozen=True)
class SphereRule:
    """Product quadrature rule on S^{n-1} in polar angles.

    `phi_*` hold the periodic angle, `psi_*[j-1]` the j-th polar angle with
    the sin^j area-element factor absorbed into the weights.
    """

    n: int
    order: int
    phi_nodes: np.ndarray
    phi_weights: np.ndarray
    psi_nodes: tuple
    psi_weights: tuple

    @property
    def num_nodes(self):
        return self.order ** (self.n - 1)

    def _check_size(self):
        if self.num_nodes > MAX_PRODUCT_NODES:
            raise DomainError(
                f"product rule for n={self.n}, order={self.order} has "
                f"{self.num_nodes} nodes; reduce the order (documented cost limit)"
            )

    def nodes(self):
        """All angle tuples, shape (order^(n-1), n-1), columns (phi, psi_1, ...)."""
        self._check_size()
        axes = [self.phi_nodes, *self.psi_nodes]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def weights(self):
        """Product weights including the area-element factor, shape (order^(n-1),)."""
        self._check_size()
        axes = [self.phi_weights, *self.psi_weights]
        w = axes[0]
        for a in axes[1:]:
            w = np.multiply.outer(w, a)
        return w.ravel()

    def cartesian(self):
        """Cartesian images of all nodes, shape (order^(n-1), n)."""
        return angles_to_cartesian(self.n, self.nodes())


def angles_to_cartesian(n, angles):
    """Map angle tuples (phi, psi_1, .., psi_{n-2}) to points on S^{n-1}."""
    angles = np.atleast_2d(np.asarray(angles, dtype=np.float64))
    m = angles.shape[0]
    x = np.empty((m, n), dtype=np.float64)
    prod = np.ones(m)
    for k in range(n, 2, -1):
        psi = angles[:, k - 2]
        x[:, k - 1] = np.cos(psi) * prod
        prod = prod * np.sin(psi)
    x[:, 1] = np.sin(angles[:, 0]) * prod
    x[:, 0] = np.cos(angles[:, 0]) * prod
    return x


@lru_cache(maxsize=64)
def build_rule(n, order):
    """Product rule over the angles whose weights sum to |S^{n-1}|."""
    if n < 2:
        raise DomainError("n must be >= 2")
    if order < 2:
        raise DomainError("order must be >= 2")
    phi = (np.arange(order) + 0.5) * (2.0 * math.pi / order)
    phi_w = np.full(order, 2.0 * math.pi / order)
    psi_nodes = []
    psi_weights = []
    for j in range(1, n - 1):
        t, w = roots_jacobi(order, (j - 1) / 2.0, (j - 1) / 2.0)
        psi = np.arccos(t)
        psi_nodes.append(psi)
        psi_weights.append(w)
    return SphereRule(
        n=n,
        order=order,
        phi_nodes=phi,
        phi_weights=phi_w,
        psi_nodes=tuple(psi_nodes),
        psi_weights=tuple(psi_weights),
    )


def integrate(rule, f):
    """Integrate a (vectorized) function of Cartesian points over the sphere."""
    pts = rule.cartesian()
    vals = np.asarray(f(pts), dtype=np.float64)
    if vals.shape != (pts.shape[0],):
        raise DomainError("integrand must map (N, n) points to (N,) values")
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("integrand produced non-finite values")
    return float(np.sum(rule.weights() * vals))


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with its standard error; deterministic per seed."""

    value: float
    std_error: float
    samples: int
    seed: int


_MC_CHUNK = 1 << 20


def mc_integrate(n, f, samples, seed):
    """Uniform-sphere Monte Carlo via normalized Gaussian vectors (Philox).

    The generator is counter-based and keyed by the seed alone, so the
    sample sequence is fully determined by (seed, index).
    """
    if samples < 1000:
        raise DomainError("samples must be >= 1000")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(_MC_CHUNK, samples - done)
        g = rng.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        vals = np.asarray(f(g), dtype=np.float64)
        if vals.shape == ():
            vals = np.full(m, float(vals))
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("integrand produced non-finite values")
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += m
    area = surface_area(n)
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return McEstimate(
        value=area * mean,
        std_error=area * math.sqrt(var / samples),
        samples=samples,
        seed=seed,
    )


@lru_cache(maxsize=16)
def _gauss_legendre(order):
    x, w = roots_legendre(order)
    return x, w


@lru_cache(maxsize=64)
def _prefix_rule(n, order):
    """Squared coordinates and weights of the product rule on S^{n-3}.

    These are the outer nodes left after the last two angles of S^{n-1} are
    handled by panels and the closed-form indicator resolution.
    """
    if n == 3:
        return np.ones((1, 1)), np.ones(1)
    rule = build_rule(n - 2, order)
    pts = rule.cartesian()
    return pts * pts, rule.weights()


_HALF_T = math.sqrt(0.5)
_GRADE_LEVELS = 20
_GRADE_ORDER = 16


def _piece_nodes_1d(alpha, beta, order):
    """Nodes/weights in t on [0, sin(pi/4)] adapted to A(t) = alpha + beta t^2.

    The downstream integrand is analytic in A away from A = 0 with an
    A*log|A| singularity there, so layers get a sinh map, near-roots beyond
    the end a sin map, and interior roots/touches dyadically graded panels.
    """
    T = _HALF_T
    glx, glw = _gauss_legendre(order)
    gx = 0.5 * (glx + 1.0)
    gg, gw = _gauss_legendre(_GRADE_ORDER)
    ggx = 0.5 * (gg + 1.0)

    def plain(lo, hi):
        return lo + (hi - lo) * gx, 0.5 * (hi - lo) * glw

    def graded(target, far, levels=_GRADE_LEVELS):
        """Dyadic panels from `far` accumulating at `target` (either side)."""
        ts = []
        ws = []
        hi = far
        for _ in range(levels):
            lo = target + 0.5 * (hi - target)
            ts.append(lo + (hi - lo) * ggx)
            ws.append(0.5 * abs(hi - lo) * gw)
            hi = lo
        ts.append(target + (hi - target) * ggx)
        ws.append(0.5 * abs(hi - target) * gw)
        return np.concatenate(ts), np.concatenate(ws)

    if abs(alpha) < _kernels._pure.SNAP_EPS:
        alpha = 0.0
    q_end = alpha + beta * T * T
    if abs(beta) < 1e-300:
        return plain(0.0, T)
    if alpha == 0.0:
        return graded(0.0, T)
    if q_end == 0.0 or alpha * q_end < 0.0:
        t_r = math.sqrt(-alpha / beta) if alpha * beta < 0 else T
        if t_r >= T:
            return plain(0.0, T) if 4.0 * abs(q_end) >= abs(alpha) else _sin_map(alpha, beta, order)
        tl, wl = graded(t_r, 0.0)
        tr, wr = graded(t_r, T)
        return np.concatenate([tl, tr]), np.concatenate([wl, wr])
    if alpha * beta > 0.0:
        if 4.0 * abs(alpha) >= abs(q_end):
            return plain(0.0, T)
        ell = math.sqrt(alpha / beta)
        v_max = math.asinh(T / ell)
        v = v_max * gx
        return ell * np.sinh(v), 0.5 * v_max * glw * ell * np.cosh(v)
    # alpha*beta < 0 with no root inside (|q_end| shrinking toward the end)
    if 4.0 * abs(q_end) >= abs(alpha):
        return plain(0.0, T)
    return _sin_map(alpha, beta, order)


def _sin_map(alpha, beta, order):
    """t = t_r sin(w) map toward a root at or beyond the piece end."""
    glx, glw = _gauss_legendre(order)
    gx = 0.5 * (glx + 1.0)
    t_r = math.sqrt(-alpha / beta)
    w_max = math.asin(min(_HALF_T / t_r, 1.0))
    w = w_max * gx
    return t_r * np.sin(w), 0.5 * w_max * glw * t_r * np.cos(w)


@lru_cache(maxsize=512)
def _adaptive_circle_prefix(c1, c2, order):
    """Quadrant circle rule for the n=4 prefix, adapted to A(phi) = c1 cos^2 + c2 sin^2.

    The indicator reduction has A*log|A| transverse singularities across
    {A = 0}; grading the single prefix angle at the exact structure keeps
    the full n=4 moment pipeline at ~1e-12 relative accuracy.  Returns
    (squared coordinates, weights) with the 4-fold quadrant symmetry folded
    into the weights.
    """
    pieces = []
    # left piece: t = sin(phi), A = c1 + (c2 - c1) t^2
    t, wt = _piece_nodes_1d(c1, c2 - c1, order)
    zsq = np.stack([1.0 - t * t, t * t], axis=1)
    pieces.append((zsq, wt / np.sqrt(1.0 - t * t)))
    # right piece: t = cos(phi), A = c2 + (c1 - c2) t^2
    t, wt = _piece_nodes_1d(c2, c1 - c2, order)
    zsq = np.stack([t * t, 1.0 - t * t], axis=1)
    pieces.append((zsq, wt / np.sqrt(1.0 - t * t)))
    zsq = np.concatenate([p[0] for p in pieces], axis=0)
    w = 4.0 * np.concatenate([p[1] for p in pieces])
    return zsq, w


def indicator_moment_columns(n, order, coeffs, force_pure=False):
    """Vector of integrals of chi_{p>0} * {1, x_1^2, .., x_n^2}.

    `coeffs` are the diagonal coefficients of p on axes 1..n-1 once the
    axis-n coefficient is normalized to -1.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if n == 2:
        return _closed_form_columns_2d(coeffs[0])
    if n == 4:
        zsq, wts = _adaptive_circle_prefix(float(coeffs[0]), float(coeffs[1]), order)
    else:
        zsq, wts = _prefix_rule(n, order)
    glx, glw = _gauss_legendre(order)
    theta_max = 2.0 * math.pi if n == 3 else math.pi
    return _kernels.indicator_moment_block(
        zsq, wts, coeffs, n, theta_max, glx, glw, force_pure=force_pure
    )


def _closed_form_columns_2d(c1):
    """n = 2: the outer sphere is two atoms; everything is closed form."""
    if c1 <= 0.0:
        return np.zeros(3)
    st = 1.0 / math.sqrt(1.0 + c1)
    ct = math.sqrt(c1) * st
    psi = math.asin(st)
    j0 = math.pi - 2.0 * psi
    j2 = ct * st + 0.5 * j0
    return 2.0 * np.array([j0, j2, j0 - j2])


def integrate_indicator_quadratic(rule, p, weight_axis=None, check_rtol=None):
    """Integral of chi_{p>0} times an optional x_i^2 weight over S^{n-1}.

    The quadratic must be diagonal in the rule's coordinates.  The most
    negative diagonal entry is moved to the last axis (the indicator and
    the weight are permuted consistently), the innermost angle is resolved
    in closed form, and the remaining angles use the product rule with the
    last one split into panels at the exact boundary roots.

    With `check_rtol` set, the value is recomputed at twice the order and a
    QuadratureConvergenceWarning is raised if the two disagree.
    """
    n = rule.n
    if p.n != n:
        raise DomainError("rule and quadratic dimensions differ")
    if not p.is_diagonal():
        raise DomainError("quadratic must be diagonal in the rule's coordinates")
    if weight_axis is not None and not (0 <= weight_axis < n):
        raise DomainError("weight axis out of range")

    diag = p.diagonal()
    if np.abs(diag).max() == 0.0:
        return 0.0
    k = int(np.argmin(diag))
    if diag[k] >= 0.0:
        raise DomainError("quadratic has no negative direction; indicator is trivial")
    perm = list(range(n))
    perm[k], perm[n - 1] = perm[n - 1], perm[k]
    diag_p = diag[perm]
    coeffs = diag_p[: n - 1] / (-diag_p[n - 1])

    col = 0
    if weight_axis is not None:
        col = perm.index(weight_axis) + 1

    value = float(indicator_moment_columns(n, rule.order, coeffs)[col])
    if check_rtol is not None:
        value2 = float(indicator_moment_columns(n, 2 * rule.order, coeffs)[col])
        if abs(value2 - value) > check_rtol * (abs(value2) + 1e-300):
            warnings.warn(
                f"indicator quadrature changed by {abs(value2 - value):.3e} "
                f"on refinement (requested rtol {check_rtol:.1e})",
                QuadratureConvergenceWarning,
                stacklevel=2,
            )
        value = value2
    return value
