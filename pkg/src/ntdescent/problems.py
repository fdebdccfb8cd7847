"""Benchmark objectives as deterministic first-order oracles.

Every problem exposes ``dim``, ``known_optimum`` (None when the optimal
value must be estimated externally), and ``eval(x) -> (value, subgradient)``
with a deterministic selection rule at nondifferentiable points:
ties in pointwise maxima break to the lowest index, and sign(0) = 0 for
l1-type terms (the zero element is a valid Clarke selection).

Matrix-valued variables are flattened column-major inside the ambient
vector; generators are pure functions of their dimensions and seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Vector


def _generator(seed: int, *label: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=label)
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class LowerBoundProblem:
    """Max of the first m coordinates plus half the squared norm.

    The classical worst-case instance for subgradient methods.  Minimum
    -1/(2m) at x_i = -1/m on the first m coordinates, 0 elsewhere.
    """

    d: int
    m: int

    def __post_init__(self):
        if not 1 <= self.m <= self.d:
            raise ValueError(f"need 1 <= m <= d, got m={self.m}, d={self.d}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def known_optimum(self) -> float:
        return -1.0 / (2.0 * self.m)

    def minimizer(self) -> Vector:
        x = np.zeros(self.d)
        x[:self.m] = -1.0 / self.m
        return x

    def eval(self, x: Vector) -> tuple[float, Vector]:
        head = x[:self.m]
        i_star = int(np.argmax(head))  # argmax takes the lowest index on ties
        value = float(head[i_star]) + 0.5 * float(x @ x)
        g = x.copy()
        g[i_star] += 1.0
        return value, g


@dataclass
class MaxOfSmoothProblem:
    """Pointwise maximum of m convex quadratics pinned to a minimum of 0 at 0.

    Generated so that the simplex weights lam certify 0 as a subgradient at
    the origin: sum(lam_i * g_i) = 0 with every quadratic active there.
    """

    lam: Vector
    g: np.ndarray          # (m, d) linear terms
    H: np.ndarray          # (m, d, d) symmetric PSD quadratic terms

    @property
    def dim(self) -> int:
        return self.g.shape[1]

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def known_optimum(self) -> float:
        return 0.0

    @classmethod
    def generate(cls, d: int, m: int, seed: int) -> "MaxOfSmoothProblem":
        if not 1 <= m <= d + 1:
            raise ValueError(
                f"need m <= d+1 for affinely independent gradients, got "
                f"m={m}, d={d}")
        rng = _generator(seed, 0)
        lam = rng.dirichlet(np.ones(m))
        B = rng.normal(size=(m, d, d))
        H = np.einsum("mij,mkj->mik", B, B) / d
        g = rng.normal(size=(m, d))
        g[m - 1] = -(lam[:m - 1] @ g[:m - 1]) / lam[m - 1]
        return cls(lam=lam, g=g, H=H)

    def eval(self, x: Vector) -> tuple[float, Vector]:
        Hx = self.H @ x                      # (m, d)
        terms = self.g @ x + 0.5 * (Hx @ x)
        i_star = int(np.argmax(terms))
        return float(terms[i_star]), self.g[i_star] + Hx[i_star]


@dataclass
class QuadraticSensingProblem:
    """l1 misfit of difference-of-quadratic measurements of a low-rank factor.

    Measures Y = X X^T through n random forms a_i^T Y a_i - b_i^T Y b_i and
    compares to the same measurements of a planted rank-r_star matrix.
    Evaluation works on the N x r factor directly (never forms N x N
    matrices); the decision vector is X flattened column-major.
    """

    N: int
    r_star: int
    r: int
    A: np.ndarray          # (n, N) rows a_i
    B: np.ndarray          # (n, N) rows b_i
    Z: np.ndarray          # (N, r_star) planted factor
    measurements: Vector = field(init=False)

    def __post_init__(self):
        self.measurements = self._apply_forms(self.Z)

    def _apply_forms(self, X: np.ndarray) -> Vector:
        AX = self.A @ X
        BX = self.B @ X
        return np.einsum("ij,ij->i", AX, AX) - np.einsum("ij,ij->i", BX, BX)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.N * self.r

    @property
    def known_optimum(self) -> float:
        return 0.0

    @classmethod
    def generate(cls, N: int, r_star: int, r: int,
                 seed: int) -> "QuadraticSensingProblem":
        if not 1 <= r_star <= r <= N:
            raise ValueError(
                f"need 1 <= r_star <= r <= N, got {r_star}, {r}, {N}")
        rng = _generator(seed, 0)
        n = 4 * N * r_star
        return cls(N=N, r_star=r_star, r=r,
                   A=rng.normal(size=(n, N)), B=rng.normal(size=(n, N)),
                   Z=rng.normal(size=(N, r_star)))

    def planted_point(self) -> Vector:
        """A zero-loss factor: the planted one padded with zero columns."""
        X = np.zeros((self.N, self.r))
        X[:, :self.r_star] = self.Z
        return X.reshape(-1, order="F")

    def eval(self, x: Vector) -> tuple[float, Vector]:
        X = x.reshape((self.N, self.r), order="F")
        AX = self.A @ X
        BX = self.B @ X
        rho = (np.einsum("ij,ij->i", AX, AX)
               - np.einsum("ij,ij->i", BX, BX) - self.measurements)
        value = float(np.abs(rho).sum()) / self.n
        sgn = np.sign(rho)
        G = (2.0 / self.n) * (self.A.T @ (sgn[:, None] * AX)
                              - self.B.T @ (sgn[:, None] * BX))
        return value, G.reshape(-1, order="F")


@dataclass
class EigProductProblem:
    """Log-product of the K largest eigenvalues of a masked correlation matrix.

    The variable V (N x N, column-major in the ambient vector) is row
    normalized to c(V), and the objective is sum of log of the K largest
    eigenvalues of A (.*) c(V) c(V)^T.  The subgradient formula is the
    eigendecomposition selection, valid off eigenvalue ties (ties are a
    measure-zero event for the iterates).
    """

    A: np.ndarray
    K: int

    def __post_init__(self):
        N = self.A.shape[0]
        if self.A.shape != (N, N):
            raise ValueError("data matrix must be square")
        if not 1 <= self.K <= N:
            raise ValueError(f"need 1 <= K <= N, got K={self.K}, N={N}")

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.N * self.N

    @property
    def known_optimum(self) -> float | None:
        return None           # estimated from multiple runs

    @classmethod
    def generate(cls, N: int, K: int, seed: int) -> "EigProductProblem":
        """Synthetic PSD data matrix with unit maximal entry."""
        rng = _generator(seed, 0)
        B = rng.normal(size=(N, N))
        A = B @ B.T
        A /= np.abs(A).max()
        return cls(A=A, K=K)

    def eval(self, x: Vector) -> tuple[float, Vector]:
        V = x.reshape((self.N, self.N), order="F")
        row_norms = np.linalg.norm(V, axis=1)
        if np.any(row_norms == 0.0):
            raise ValueError("rows of V must be nonzero")
        C = V / row_norms[:, None]
        Y = self.A * (C @ C.T)
        evals, Q = np.linalg.eigh(Y)
        top = evals[-self.K:]
        if top[0] <= 0.0:
            raise ValueError(
                f"K-th largest eigenvalue is {top[0]:.3e} <= 0; the "
                "log-product objective is undefined here")
        value = float(np.log(top).sum())
        Qk = Q[:, -self.K:]
        G_Y = (Qk / top) @ Qk.T
        G_X = self.A * G_Y
        W = 2.0 * (G_X @ C)
        inner = np.einsum("ij,ij->i", W, C)
        G_V = (W - inner[:, None] * C) / row_norms[:, None]
        return value, G_V.reshape(-1, order="F")


@dataclass
class UVProblem:
    """Two-variable model function u^2 + |v|: smooth along the u-axis,
    sharp off it.  Minimum 0 at the origin."""

    @property
    def dim(self) -> int:
        return 2

    @property
    def known_optimum(self) -> float:
        return 0.0

    def eval(self, x: Vector) -> tuple[float, Vector]:
        u, v = float(x[0]), float(x[1])
        return u * u + abs(v), np.array([2.0 * u, float(np.sign(v))])


@dataclass
class ScaledProblem:
    """View of a problem with value and subgradients multiplied by a > 0."""

    base: object
    a: float

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def known_optimum(self) -> float | None:
        opt = self.base.known_optimum
        return None if opt is None else self.a * opt

    def eval(self, x: Vector) -> tuple[float, Vector]:
        value, g = self.base.eval(x)
        return self.a * value, self.a * g


def load_matrix(path: str | Path) -> np.ndarray:
    """Read the plain-text matrix format: a line "N N", then N rows of N reals.

    The matrix must be symmetric; it is rescaled to unit maximal entry.
    """
    path = Path(path)
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'N N' header")
    n1, n2 = int(tokens[0]), int(tokens[1])
    if n1 != n2:
        raise ValueError(f"{path}: matrix must be square, header says {n1} {n2}")
    body = np.array([float(t) for t in tokens[2:]])
    if body.size != n1 * n1:
        raise ValueError(
            f"{path}: expected {n1 * n1} entries, found {body.size}")
    A = body.reshape((n1, n1))
    if not np.allclose(A, A.T, atol=1e-10):
        raise ValueError(f"{path}: matrix is not symmetric")
    peak = np.abs(A).max()
    if peak == 0.0:
        raise ValueError(f"{path}: matrix is identically zero")
    return A / peak
