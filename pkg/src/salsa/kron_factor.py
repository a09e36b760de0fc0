"""Nearest Kronecker product approximation and sequential Kronecker-sum
factorization of a matrix.

A matrix ``X`` of size ``(i1*i2) x (j1*j2)`` is approximated by
``sum_r C_r kron B_r`` with ``B_r`` of size ``i1 x j1`` and ``C_r`` of size
``i2 x j2``. ``C_r`` is the left Kronecker operand: it sets the block grid,
``B_r`` the block contents.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FactorShape",
    "KroneckerTerm",
    "rearrange",
    "nearest_kronecker",
    "sequential_factorize",
    "reconstruct",
]


@dataclass(frozen=True)
class FactorShape:
    """Division ``(i1, i2, j1, j2)`` of an ``I x J`` matrix, ``I = i1*i2``, ``J = j1*j2``."""

    i1: int
    i2: int
    j1: int
    j2: int

    def __post_init__(self):
        for name in ("i1", "i2", "j1", "j2"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @classmethod
    def parse(cls, text):
        """Build from ``"i1,i2,j1,j2"`` or a 4-sequence."""
        if isinstance(text, str):
            parts = [p for p in text.replace(" ", "").split(",") if p]
        else:
            parts = list(text)
        if len(parts) != 4:
            raise ValueError(f"shape needs four entries i1,i2,j1,j2, got {text!r}")
        return cls(*(int(p) for p in parts))

    @property
    def rows(self):
        return self.i1 * self.i2

    @property
    def cols(self):
        return self.j1 * self.j2

    @property
    def max_terms(self):
        """Upper bound on the Kronecker rank: ``min(i1*j1, i2*j2)``."""
        return min(self.i1 * self.j1, self.i2 * self.j2)

    def as_tuple(self):
        return (self.i1, self.i2, self.j1, self.j2)

    def __str__(self):
        return f"{self.i1}x{self.i2}x{self.j1}x{self.j2}"

    def check(self, x):
        if x.shape != (self.rows, self.cols):
            raise ValueError(
                f"matrix of shape {x.shape} does not match division {self.as_tuple()} "
                f"(expects {self.rows}x{self.cols})"
            )


@dataclass(frozen=True)
class KroneckerTerm:
    """One term ``left kron right``: ``left`` is ``C`` (i2 x j2), ``right`` is ``B`` (i1 x j1)."""

    left: np.ndarray
    right: np.ndarray

    @property
    def shape(self):
        return FactorShape(self.right.shape[0], self.left.shape[0],
                           self.right.shape[1], self.left.shape[1])

    def matrix(self):
        return np.kron(self.left, self.right)


def rearrange(x, shape):
    """Rearrangement ``K`` of ``x`` that maps Kronecker products to rank-one matrices.

    Row ``n + m*i2`` of ``K`` is ``vec(X_{n,m})^T``, where ``X_{n,m}`` is the
    ``i1 x j1`` block at grid position ``(n, m)``. For ``x = C kron B`` this
    gives ``K = vec(C) vec(B)^T``.
    """
    x = np.asarray(x)
    shape.check(x)
    i1, i2, j1, j2 = shape.as_tuple()
    # x[n*i1 + p, m*j1 + q] -> t[n, p, m, q]
    t = x.reshape(i2, i1, j2, j1)
    return t.transpose(2, 0, 3, 1).reshape(i2 * j2, i1 * j1)


def _term_from_triplet(s, u, vh, shape):
    i1, i2, j1, j2 = shape.as_tuple()
    root = np.sqrt(s)
    left = np.reshape(root * u, (i2, j2), order="F")
    # K = s u v^H, so the row factor is conj(v) = vh^T.
    right = np.reshape(root * vh, (i1, j1), order="F")
    return KroneckerTerm(left, right)


def nearest_kronecker(x, shape):
    """Single Kronecker term of the given division closest to ``x`` in Frobenius norm.

    Taken from the dominant singular triplet of :func:`rearrange` ``(x, shape)``.
    """
    k = rearrange(x, shape)
    u, s, vh = np.linalg.svd(k, full_matrices=False)
    return _term_from_triplet(s[0], u[:, 0], vh[0], shape)


def sequential_factorize(x, shape, r_terms):
    """Fit ``r_terms`` Kronecker terms one after another.

    Term ``r`` is the nearest Kronecker product to ``x`` minus the sum of
    terms ``1..r-1``; the residual is recomputed from ``x`` each time.
    """
    if r_terms < 1:
        raise ValueError("r_terms must be >= 1")
    x = np.asarray(x)
    shape.check(x)
    terms = []
    approx = np.zeros(x.shape, dtype=np.result_type(x.dtype, np.complex128))
    for _ in range(r_terms):
        term = nearest_kronecker(x - approx, shape)
        terms.append(term)
        approx = reconstruct(terms, shape)
    return terms


def reconstruct(terms, shape=None):
    """Sum ``left kron right`` over ``terms``.

    ``shape`` is required for an empty list and is checked against every term
    otherwise.
    """
    terms = list(terms)
    if not terms:
        if shape is None:
            raise ValueError("an empty term list needs an explicit shape")
        return np.zeros((shape.rows, shape.cols), dtype=complex)
    ref = terms[0].shape if shape is None else shape
    out = np.zeros((ref.rows, ref.cols), dtype=complex)
    for t in terms:
        if t.shape != ref:
            raise ValueError(f"mixed term shapes: {t.shape} vs {ref}")
        out += np.kron(t.left, t.right)
    return out


def residual_curve(x, shape, r_terms):
    """Squared residual ``||x - sum_{r'<=r} C kron B||_F^2`` for ``r = 1..r_terms``."""
    x = np.asarray(x)
    terms = sequential_factorize(x, shape, r_terms)
    out = []
    for r in range(1, r_terms + 1):
        out.append(float(np.linalg.norm(x - reconstruct(terms[:r], shape)) ** 2))
    return np.array(out)
