"""Sphere moments of the indicator of the normal form and derived objects.

B(delta) and B_i(delta) are (negated) integrals of the indicator of
{p_delta > 0} against 1 and x_i^2 over S^{n-1}; their increments C_i from
the delta = 0 baseline drive the half-scale dynamics.  The degree-2
Fourier block of -chi_{p_delta > 0} is the orthogonal projection onto
trace-free quadratics, diagonal by symmetry.
"""

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .quadratic import HarmonicQuadratic
from .sphere import (
    build_rule,
    indicator_moment_columns,
    mc_integrate,
    surface_area,
)

DEFAULT_ORDER = 64


@dataclass
class MomentSet:
    """Moments B, B_i and increments C, C_i for one delta."""

    n: int
    delta: np.ndarray
    order: int
    B: float
    B_i: np.ndarray
    C: float
    C_i: np.ndarray

    def validate(self):
        """Internal consistency required of any computed moment set."""
        if abs(self.B_i.sum() - self.B) > 1e-9 * abs(self.B):
            raise AssertionError("sum of B_i must equal B (sum x_i^2 = 1)")
        if abs(self.C_i.sum() - self.C) > 1e-9 * (abs(self.C) + 1e-30):
            raise AssertionError("sum of C_i must equal C")
        if self.B > 0 or np.any(self.B_i > 0):
            raise AssertionError("B moments are integrals of -chi * nonneg")
        return self


@dataclass(frozen=True)
class FourierBlock2:
    """Degree-2 component of -chi_{p_delta>0} on the sphere (trace-free)."""

    n: int
    a2sigma2: HarmonicQuadratic


def _coeff_vector(n, delta):
    return np.concatenate([delta, [1.0 - delta.sum()]])


@lru_cache(maxsize=64)
def _zero_columns(n, order):
    return indicator_moment_columns(n, order, _coeff_vector(n, np.zeros(n - 2)))


def analytic_baseline(n):
    """Exact B(0) and B_i(0).

    B_i(0) = -omega/(2n) for i <= n-2 by the swap symmetry of the two
    distinguished axes; the last two values follow from
    integral_S |x_{n-1} x_n| dA = 2 omega_n / (n pi).
    """
    omega = surface_area(n)
    b0 = -0.5 * omega
    bi0 = np.full(n, -omega / (2.0 * n))
    bi0[n - 2] = -omega * (1.0 + 2.0 / math.pi) / (2.0 * n)
    bi0[n - 1] = -omega * (1.0 - 2.0 / math.pi) / (2.0 * n)
    return b0, bi0


def compute_moments(delta, n, order=DEFAULT_ORDER):
    """Moment set at delta, with increments against the delta = 0 baseline.

    The baseline uses the analytic B_i(0) for i <= n-2 and the same-order
    quadrature values for i in {n-1, n}; C is stored as sum(C_i), which the
    baseline mix preserves to ~1e-12.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=np.float64))
    if delta.shape != (n - 2,):
        raise DomainError(f"delta must have length n-2 = {n - 2}")
    if np.linalg.norm(delta) >= 0.5:
        raise DomainError("compute_moments requires |delta| < 1/2")

    cols = indicator_moment_columns(n, order, _coeff_vector(n, delta))
    b = -cols[0]
    b_i = -cols[1:]

    zero_cols = _zero_columns(n, order)
    _, bi0_exact = analytic_baseline(n)
    baseline = bi0_exact.copy()
    baseline[n - 2] = -zero_cols[n - 1]
    baseline[n - 1] = -zero_cols[n]

    c_i = b_i - baseline
    return MomentSet(
        n=n,
        delta=delta,
        order=order,
        B=float(b),
        B_i=b_i,
        C=float(c_i.sum()),
        C_i=c_i,
    ).validate()


def fourier_block2(moments):
    """Orthogonal projection of -chi_{p_delta>0} onto degree-2 harmonics.

    By the reflection symmetries of p_delta the block is diagonal; the
    coefficient on x_i^2 is (n+2)/(2 omega_n) * (n B_i - B) in the
    projection (inner product over squared norm) convention.
    """
    n = moments.n
    omega = surface_area(n)
    diag = (n + 2) / (2.0 * omega) * (n * moments.B_i - moments.B)
    diag = diag - diag.mean()
    return FourierBlock2(n=n, a2sigma2=HarmonicQuadratic(n, np.diag(diag)))


def quartic_moment_matrix(n, order=DEFAULT_ORDER):
    """Matrix of integrals of z_i^2 z_j^2 over the unit sphere in R^{n-2}.

    Equals lambda1 I + lambda2 J with lambda1 = 2 omega_{n-2}/((n-2) n) and
    lambda2 = omega_{n-2}/((n-2) n).  For n = 3 the sphere is two points
    and the matrix is the 1x1 [[2.0]].
    """
    if n < 3:
        raise DomainError("the moment matrix lives on R^{n-2}; needs n >= 3")
    d = n - 2
    if d == 1:
        return np.array([[2.0]])
    rule = build_rule(d, max(order, 8))
    pts = rule.cartesian()
    w = rule.weights()
    sq = pts * pts
    return (sq * w[:, None]).T @ sq


def quartic_moment_eigenvalues(n):
    """(lambda1, lambda2) of the analytic form lambda1 I + lambda2 J."""
    omega = surface_area(n - 2)
    return 2.0 * omega / ((n - 2) * n), omega / ((n - 2) * n)


@dataclass(frozen=True)
class InnerSlabResult:
    numeric: float
    asymptotic: float


def _strip_exact(kappa, a0, a1, b0, b1):
    """Exact integral of chi_{kappa + a^2 > b^2} - chi_{a^2 > b^2} on a panel.

    Resolved per a-strip: the b-measure difference is
    clip(sqrt(max(kappa + a^2, 0)), b0, b1) - clip(a, b0, b1), integrated in
    closed form between breakpoints where the clips switch.
    """

    def anti_root(a):
        # antiderivative of sqrt(kappa + a^2) on the region where it is real
        s = math.sqrt(max(kappa + a * a, 0.0))
        if kappa > 0:
            return 0.5 * (a * s + kappa * math.asinh(a / math.sqrt(kappa)))
        if kappa < 0:
            if a * a + kappa <= 0.0:
                return 0.0
            r = math.sqrt(-kappa)
            return 0.5 * (a * s - (-kappa) * math.acosh(a / r))
        return 0.5 * a * a

    breaks = {a0, a1}
    for b in (b0, b1):
        if b * b - kappa >= 0:
            r = math.sqrt(b * b - kappa)
            if a0 < r < a1:
                breaks.add(r)
        if a0 < b < a1:
            breaks.add(b)
    if kappa < 0:
        r = math.sqrt(-kappa)
        if a0 < r < a1:
            breaks.add(r)
    pts = sorted(breaks)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        s_mid = math.sqrt(max(kappa + mid * mid, 0.0))
        # integral of the clipped boundary of region 1
        if s_mid <= b0:
            part1 = b0 * (hi - lo)
        elif s_mid >= b1:
            part1 = b1 * (hi - lo)
        else:
            part1 = anti_root(hi) - anti_root(lo)
        # integral of the clipped boundary of region 0
        if mid <= b0:
            part0 = b0 * (hi - lo)
        elif mid >= b1:
            part0 = b1 * (hi - lo)
        else:
            part0 = 0.5 * (hi * hi - lo * lo)
        total += part1 - part0
    return total


def _panel_quad(kappa, a0, a1, b0, b1, depth):
    p1_min = kappa + a0 * a0 - b1 * b1
    p1_max = kappa + a1 * a1 - b0 * b0
    p0_min = a0 * a0 - b1 * b1
    p0_max = a1 * a1 - b0 * b0
    chi1 = 1.0 if p1_min > 0 else (0.0 if p1_max <= 0 else None)
    chi0 = 1.0 if p0_min > 0 else (0.0 if p0_max <= 0 else None)
    if chi1 is not None and chi0 is not None:
        return (chi1 - chi0) * (a1 - a0) * (b1 - b0)
    if depth >= 6:
        return _strip_exact(kappa, a0, a1, b0, b1)
    am = 0.5 * (a0 + a1)
    bm = 0.5 * (b0 + b1)
    d = depth + 1
    return (
        _panel_quad(kappa, a0, am, b0, bm, d)
        + _panel_quad(kappa, am, a1, b0, bm, d)
        + _panel_quad(kappa, a0, am, bm, b1, d)
        + _panel_quad(kappa, am, a1, bm, b1, d)
    )


def inner_slab_integral(kappa, mu):
    """Inner-slab increment integral and its leading asymptotic.

    numeric = integral over (0, mu)^2 of the indicator difference between
    {kappa + x^2 > y^2} and {x^2 > y^2}, by recursive panel splitting along
    the boundary curves with exact strip resolution at the leaves;
    asymptotic = -(1/4) kappa ln|kappa| (positive for 0 < kappa < 1, the
    leading term of the increment).
    """
    if not (0.0 < mu < 1.0):
        raise DomainError("mu must be in (0, 1)")
    if kappa == 0.0:
        return InnerSlabResult(0.0, 0.0)
    if abs(kappa) >= mu * mu:
        raise DomainError("requires |kappa| < mu^2")
    numeric = _panel_quad(kappa, 0.0, mu, 0.0, mu, 0)
    asymptotic = -0.25 * kappa * math.log(abs(kappa))
    return InnerSlabResult(float(numeric), float(asymptotic))


def mc_moment_check(delta, n, samples, seed):
    """Monte Carlo estimates of B and B_i from one Philox sample stream."""
    delta = np.atleast_1d(np.asarray(delta, dtype=np.float64))
    diag = np.concatenate([delta, [1.0 - delta.sum(), -1.0]])

    def all_columns(x):
        chi = (x * x @ diag > 0).astype(np.float64)
        return chi

    b_est = mc_integrate(n, lambda x: -all_columns(x), samples, seed)
    bi_est = []
    for i in range(n):
        bi_est.append(
            mc_integrate(
                n, lambda x, i=i: -all_columns(x) * x[:, i] ** 2, samples, seed
            )
        )
    return b_est, bi_est


def momentsets_to_csv(sets):
    """RFC-4180-style CSV for a sweep of moment sets (single n)."""
    if not sets:
        raise DomainError("no moment sets to export")
    n = sets[0].n
    if any(m.n != n for m in sets):
        raise DomainError("CSV export requires a single dimension per sweep")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (
        ["n"]
        + [f"delta_{i+1}" for i in range(n - 2)]
        + ["B"]
        + [f"B_{i+1}" for i in range(n)]
        + ["C"]
        + [f"C_{i+1}" for i in range(n)]
        + ["order"]
    )
    writer.writerow(header)
    for m in sets:
        row = (
            [m.n]
            + [f"{d:.17g}" for d in m.delta]
            + [f"{m.B:.17g}"]
            + [f"{v:.17g}" for v in m.B_i]
            + [f"{m.C:.17g}"]
            + [f"{v:.17g}" for v in m.C_i]
            + [m.order]
        )
        writer.writerow(row)
    return buf.getvalue()
