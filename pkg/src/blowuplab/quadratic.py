"""Algebra of harmonic (trace-free) quadratic forms and their normal form.

A form is p(x) = x^T A x with symmetric trace-free A.  The normal form used
by the dynamics is

    p_delta(x) = delta_1 x_1^2 + ... + delta_{n-2} x_{n-2}^2
                 + (1 - sum(delta)) x_{n-1}^2 - x_n^2,

reached by eigen-decomposition, a deterministic ordering convention and
scaling the most negative coefficient to -1.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError

DEFAULT_KAPPA0 = 0.2

_TRACE_TOL = 1e-12
_SYM_TOL = 1e-12


@dataclass(frozen=True)
class HarmonicQuadratic:
    """Homogeneous degree-2 polynomial with zero Laplacian."""

    n: int
    coeff: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coeff, dtype=np.float64)
        if a.shape != (self.n, self.n):
            raise DomainError(f"coefficient matrix must be {self.n}x{self.n}")
        scale = 1.0 + np.abs(a).max()
        if np.abs(a - a.T).max() > _SYM_TOL * scale:
            raise DomainError("coefficient matrix must be symmetric")
        if abs(np.trace(a)) > _TRACE_TOL * scale:
            raise DomainError("coefficient matrix must be trace-free (harmonic)")
        object.__setattr__(self, "coeff", a)

    @classmethod
    def from_matrix(cls, m):
        """Symmetrize and remove the trace, then wrap."""
        a = np.asarray(m, dtype=np.float64)
        a = 0.5 * (a + a.T)
        a = a - (np.trace(a) / a.shape[0]) * np.eye(a.shape[0])
        return cls(a.shape[0], a)

    @classmethod
    def zero(cls, n):
        return cls(n, np.zeros((n, n)))

    def __call__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        vals = np.einsum("ij,pi,pj->p", self.coeff, pts, pts)
        return float(vals[0]) if single else vals

    def diagonal(self):
        return np.diag(self.coeff).copy()

    def is_diagonal(self, tol=1e-12):
        off = self.coeff - np.diag(np.diag(self.coeff))
        return np.abs(off).max() <= tol * (1.0 + np.abs(self.coeff).max())

    def sup_norm_ball(self):
        """sup over the closed unit ball; equals the largest |eigenvalue|."""
        return float(np.abs(np.linalg.eigvalsh(self.coeff)).max())

    def __add__(self, other):
        return HarmonicQuadratic(self.n, self.coeff + other.coeff)

    def __sub__(self, other):
        return HarmonicQuadratic(self.n, self.coeff - other.coeff)

    def __mul__(self, scalar):
        return HarmonicQuadratic(self.n, self.coeff * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return HarmonicQuadratic(self.n, -self.coeff)

    def rotated(self, q_mat):
        """The form x -> p(Q^T x)."""
        q_mat = np.asarray(q_mat, dtype=np.float64)
        return HarmonicQuadratic(self.n, q_mat @ self.coeff @ q_mat.T)

    def to_json(self):
        return json.dumps({"n": self.n, "coeff": self.coeff.ravel().tolist()})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        n = int(obj["n"])
        return cls(n, np.array(obj["coeff"], dtype=np.float64).reshape(n, n))


@dataclass
class DeltaState:
    """Normal-form state (tau, delta) with the rotation back to ambient frame.

    The represented polynomial is tau * p_delta(Q^T x).  `delta` entries are
    kept in ascending order by the diagonalization convention.
    """

    n: int
    tau: float
    delta: np.ndarray
    Q: np.ndarray = None
    consistency_defect: float = 0.0
    kappa0: float = DEFAULT_KAPPA0

    def __post_init__(self):
        self.delta = np.atleast_1d(np.asarray(self.delta, dtype=np.float64))
        if self.delta.shape != (self.n - 2,):
            raise DomainError(f"delta must have length n-2 = {self.n - 2}")
        if self.Q is None:
            self.Q = np.eye(self.n)
        self.Q = np.asarray(self.Q, dtype=np.float64)
        if self.tau <= 0.0:
            raise DomainError("tau must be positive")

    @property
    def delta_tilde(self):
        """Recomputed sum of delta entries (never cached)."""
        return float(self.delta.sum())

    @property
    def in_small_ball(self):
        """Whether |delta| < kappa0; out-of-range states are flagged, not rejected."""
        return bool(np.linalg.norm(self.delta) < self.kappa0)

    def ratio(self):
        """max(delta) / (1 - delta_tilde); 0 for n = 2."""
        if self.n == 2:
            return 0.0
        return float(self.delta.max() / (1.0 - self.delta_tilde))

    def polynomial(self):
        d = np.concatenate([self.delta, [1.0 - self.delta_tilde, -1.0]])
        base = np.diag(self.tau * d)
        return HarmonicQuadratic.from_matrix(self.Q @ base @ self.Q.T)

    def to_json(self):
        return json.dumps(
            {
                "n": self.n,
                "tau": self.tau,
                "delta": self.delta.tolist(),
                "Q": self.Q.ravel().tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        n = int(obj["n"])
        return cls(
            n=n,
            tau=float(obj["tau"]),
            delta=np.array(obj["delta"], dtype=np.float64),
            Q=np.array(obj["Q"], dtype=np.float64).reshape(n, n),
        )


def make_p_delta(n, delta):
    """The normal form diag(delta_1..delta_{n-2}, 1 - sum(delta), -1)."""
    delta = np.atleast_1d(np.asarray(delta, dtype=np.float64))
    if n < 2:
        raise DomainError("n must be >= 2")
    if delta.shape != (n - 2,):
        raise DomainError(f"delta must have length n-2 = {n - 2}, got {delta.shape}")
    diag = np.concatenate([delta, [1.0 - delta.sum(), -1.0]])
    return HarmonicQuadratic(n, np.diag(diag))


def sup_norm_ball(q):
    """sup_{|x| <= 1} |q(x)| = max |eigenvalue|."""
    return q.sup_norm_ball()


def _order_ties(eigvals, eigvecs):
    """Deterministic ordering within (numerically) equal eigenvalue groups.

    Within a group, sort by descending coordinate index of the dominant
    eigenvector component; always make the dominant component positive.
    """
    n = eigvals.shape[0]
    scale = max(np.abs(eigvals).max(), 1e-300)
    order = list(range(n))
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(eigvals[order[j]] - eigvals[order[i]]) <= 1e-13 * scale:
            j += 1
        if j - i > 1:
            group = order[i:j]
            group.sort(key=lambda k: -int(np.argmax(np.abs(eigvecs[:, k]))))
            order[i:j] = group
        i = j
    vecs = eigvecs[:, order].copy()
    for k in range(n):
        dom = np.argmax(np.abs(vecs[:, k]))
        if vecs[dom, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return eigvals[order], vecs


def diagonalize(q, kappa0=DEFAULT_KAPPA0):
    """Bring a trace-free form to the normal form tau * p_delta in a rotated frame.

    Eigenvalues are assigned: most negative to axis n, largest to axis n-1,
    the remaining ones ascending on axes 1..n-2.  Raises DegeneracyError when
    there is no strictly negative eigenvalue to scale to -1.
    """
    a = q.coeff
    scale = np.abs(a).max()
    if scale == 0.0:
        raise DegeneracyError("cannot normalize the zero form")
    eigvals, eigvecs = np.linalg.eigh(a)
    eigvals, eigvecs = _order_ties(eigvals, eigvecs)
    if eigvals[0] >= 0.0:
        raise DegeneracyError("no strictly negative eigenvalue; p_delta needs -1 on x_n")

    tau = -eigvals[0]
    # axis order: middle ascending, then largest, then most negative
    perm = list(range(1, q.n - 1)) + [q.n - 1, 0]
    vals = eigvals[perm]
    vecs = eigvecs[:, perm]
    if np.linalg.det(vecs) < 0:
        vecs[:, -1] = -vecs[:, -1]

    delta = vals[: q.n - 2] / tau
    delta_tilde = delta.sum()
    defect = abs(vals[q.n - 2] / tau - (1.0 - delta_tilde))
    return DeltaState(
        n=q.n,
        tau=float(tau),
        delta=delta,
        Q=vecs,
        consistency_defect=float(defect),
        kappa0=kappa0,
    )


def random_rotation(n, rng):
    """Haar-ish random rotation from QR of a Gaussian matrix, det +1."""
    m = rng.standard_normal((n, n))
    q_mat, r = np.linalg.qr(m)
    q_mat = q_mat * np.sign(np.diag(r))
    if np.linalg.det(q_mat) < 0:
        q_mat[:, 0] = -q_mat[:, 0]
    return q_mat
