"""Projection of sampled fields onto harmonic quadratics.

The best harmonic-quadratic fit of u(r x + x0)/r^2 in the Hessian
least-squares sense reduces, for constant candidate Hessians, to the
trace-free part of the lattice-averaged finite-difference Hessian over the
ball; the r^2/r^2 rescaling cancels so the average runs directly over grid
points inside B_r(x0).
"""

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CoverageError, DomainError, ConditioningWarning
from .quadratic import HarmonicQuadratic


@dataclass
class SampledField:
    """Field values on a cubic lattice centered at x0 covering B_radius(x0)."""

    n: int
    h: float
    center: np.ndarray
    radius: float
    values: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.h <= 0:
            raise DomainError("grid spacing must be positive")
        if self.values.ndim != self.n:
            raise DomainError("values array rank must equal the dimension")
        m = self.values.shape[0]
        if any(s != m for s in self.values.shape) or m % 2 == 0:
            raise DomainError("values must be a cube with odd side length")

    @property
    def half_points(self):
        return (self.values.shape[0] - 1) // 2

    @classmethod
    def from_function(cls, f, n, h, radius, center=None):
        """Sample a vectorized function of (..., n) points on the lattice."""
        center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        k = int(math.ceil(radius / h))
        axis = center_axis = h * np.arange(-k, k + 1)
        grids = np.meshgrid(*[center_axis + c for c in center], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        vals = np.asarray(f(pts), dtype=np.float64).reshape(grids[0].shape)
        del axis
        return cls(n=n, h=h, center=center, radius=k * h, values=vals)

    def lattice_points(self):
        k = self.half_points
        ax = self.h * np.arange(-k, k + 1)
        grids = np.meshgrid(*[ax + c for c in self.center], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def save(self, path):
        """Flat binary of doubles plus a JSON header, or CSV for small grids."""
        path = Path(path)
        if path.suffix == ".csv":
            pts = self.lattice_points()
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(",".join([f"x_{i+1}" for i in range(self.n)] + ["value"]))
                fh.write("\n")
                for row, v in zip(pts, self.values.ravel()):
                    fh.write(",".join(f"{c:.17g}" for c in row) + f",{v:.17g}\n")
            return
        header = {
            "n": self.n,
            "h": self.h,
            "R": self.radius,
            "center": self.center.tolist(),
            "order": "row-major",
            "shape": list(self.values.shape),
        }
        path.with_suffix(".json").write_text(json.dumps(header, sort_keys=True))
        self.values.astype("<f8").tofile(path.with_suffix(".bin"))

    @classmethod
    def load(cls, path):
        path = Path(path)
        if path.suffix == ".csv":
            data = np.genfromtxt(path, delimiter=",", names=True)
            names = data.dtype.names
            n = len(names) - 1
            coords = np.stack([data[nm] for nm in names[:-1]], axis=1)
            vals = data["value"]
            axes = [np.unique(coords[:, i]) for i in range(n)]
            m = axes[0].size
            h = float(axes[0][1] - axes[0][0])
            center = np.array([0.5 * (a[0] + a[-1]) for a in axes])
            values = vals.reshape([m] * n)
            return cls(n=n, h=h, center=center, radius=(m - 1) // 2 * h, values=values)
        header = json.loads(path.with_suffix(".json").read_text())
        values = np.fromfile(path.with_suffix(".bin"), dtype="<f8").reshape(
            header["shape"]
        )
        return cls(
            n=int(header["n"]),
            h=float(header["h"]),
            center=np.array(header["center"], dtype=float),
            radius=float(header["R"]),
            values=values,
        )


@dataclass
class ProjectionResult:
    """Trace-free Hessian average with its normalization.

    `p` is None (with a ConditioningWarning) when the projection is too
    close to zero relative to the finite-difference error estimate to
    carry a meaningful sign convention.
    """

    raw: HarmonicQuadratic
    tau: float
    p: HarmonicQuadratic
    fd_error: float
    points_used: int


def _hessian_average(field, r, step):
    """Average FD Hessian over lattice points inside B_r, stencil `step` cells."""
    m = field.values.shape[0]
    k = field.half_points
    n = field.n
    h = field.h
    ax = np.arange(-k, k + 1)
    grids = np.meshgrid(*[ax] * n, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    r_cells = r / h
    inside = (idx * idx).sum(axis=1) <= r_cells * r_cells
    margin = np.all(np.abs(idx) <= k - step, axis=1)
    sel = idx[inside & margin]
    if sel.shape[0] == 0:
        raise CoverageError("no lattice points inside the requested ball")

    strides = np.array(field.values.strides) // field.values.itemsize
    flat = (sel + k) @ strides
    v = field.values.ravel()
    hh = (step * h) ** 2
    hessian = np.empty((n, n))
    for i in range(n):
        si = step * strides[i]
        hessian[i, i] = np.mean(v[flat + si] - 2.0 * v[flat] + v[flat - si]) / hh
        for j in range(i + 1, n):
            sj = step * strides[j]
            cross = (
                v[flat + si + sj]
                - v[flat + si - sj]
                - v[flat - si + sj]
                + v[flat - si - sj]
            )
            hessian[i, j] = hessian[j, i] = np.mean(cross) / (4.0 * hh)
    return hessian, sel.shape[0]


def project(field, r):
    """Best harmonic-quadratic fit of u(r x + x0)/r^2 at scale r.

    Returns the raw trace-free Hessian average (as a quadratic), its
    sup-ball norm tau and the normalized form p; a Richardson comparison
    against the doubled stencil supplies the FD error estimate.
    """
    if r <= 0:
        raise DomainError("scale r must be positive")
    if r + 2.0 * field.h > field.radius + 1e-12:
        raise CoverageError(
            f"field covers B_{field.radius:g} but the stencil needs B_{r + 2 * field.h:g}"
        )
    hess, used = _hessian_average(field, r, 1)
    a = 0.5 * (hess - np.trace(hess) / field.n * np.eye(field.n))
    raw = HarmonicQuadratic.from_matrix(a)

    fd_error = 0.0
    try:
        hess2, _ = _hessian_average(field, r, 2)
        a2 = 0.5 * (hess2 - np.trace(hess2) / field.n * np.eye(field.n))
        fd_error = float(np.linalg.norm(a2 - a) / 3.0)
    except CoverageError:
        fd_error = float("nan")

    tau = raw.sup_norm_ball()
    if not np.isfinite(fd_error):
        fd_error = 0.0
    if tau <= 10.0 * fd_error or tau == 0.0:
        warnings.warn(
            "projection magnitude is within 10x of the FD error estimate; "
            "normalized direction is unreliable",
            ConditioningWarning,
            stacklevel=2,
        )
        return ProjectionResult(raw=raw, tau=tau, p=None, fd_error=fd_error, points_used=used)
    return ProjectionResult(
        raw=raw, tau=tau, p=(1.0 / tau) * raw, fd_error=fd_error, points_used=used
    )


def half_step_empirical(field, r):
    """Projections at scales r and r/2, for comparison with the analytic map."""
    return project(field, r), project(field, r / 2.0)
