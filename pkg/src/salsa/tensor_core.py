"""Dense complex 3-way tensors: unfolding, folding, n-mode products.

Modes are numbered 1, 2, 3. The n-mode unfolding puts the mode-n fibers in
the columns; the remaining modes index the columns with the lowest-numbered
one varying fastest. Under this convention a Tucker tensor
``S x1 A x2 B x3 C`` satisfies ``unfold(T, 1) = A unfold(S, 1) (C kron B)^T``
and the cyclic analogues for modes 2 and 3.

Tensors and matrices are plain :class:`numpy.ndarray` objects.
"""

import numpy as np

__all__ = [
    "unfold",
    "fold",
    "mode_product",
    "kronecker",
    "vec",
    "unvec",
    "core_tensor",
]


def _axis(mode):
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode - 1


def unfold(t, mode):
    """Mode-``mode`` unfolding of a 3-way tensor.

    Returns a ``t.shape[mode-1] x (product of the other dims)`` matrix.
    """
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"expected a 3-way tensor, got ndim={t.ndim}")
    ax = _axis(mode)
    return np.reshape(np.moveaxis(t, ax, 0), (t.shape[ax], -1), order="F")


def fold(m, mode, dims):
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    m = np.asarray(m)
    ax = _axis(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    rest = tuple(d for i, d in enumerate(dims) if i != ax)
    if m.ndim != 2 or m.shape != (dims[ax], rest[0] * rest[1]):
        raise ValueError(
            f"matrix of shape {m.shape} cannot be folded at mode {mode} into {dims}"
        )
    t = np.reshape(m, (dims[ax],) + rest, order="F")
    return np.moveaxis(t, 0, ax)


def mode_product(t, m, mode):
    """n-mode product ``t x_mode m``; ``m`` acts on the mode-``mode`` fibers."""
    t = np.asarray(t)
    m = np.asarray(m)
    ax = _axis(mode)
    if m.ndim != 2 or m.shape[1] != t.shape[ax]:
        raise ValueError(
            f"matrix of shape {m.shape} does not match mode-{mode} size {t.shape[ax]}"
        )
    dims = list(t.shape)
    dims[ax] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, dims)


def kronecker(a, b):
    """Kronecker product; block (r, c) of the result is ``a[r, c] * b``."""
    return np.kron(np.asarray(a), np.asarray(b))


def vec(m):
    """Stack the columns of ``m`` into a single column vector (shape ``(n, 1)``)."""
    m = np.asarray(m)
    return np.reshape(m, (-1, 1), order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    return np.reshape(np.asarray(v), (rows, cols), order="F")


def core_tensor(i1, i2):
    """The ``(i1*i2, i1, i2)`` tensor whose 1-mode unfolding is the identity.

    Multiplying it by ``B^T`` in mode 2 and ``C^T`` in mode 3 yields a tensor
    whose 1-mode unfolding is ``C kron B``.
    """
    if i1 < 1 or i2 < 1:
        raise ValueError("core tensor dims must be positive")
    n = i1 * i2
    return fold(np.eye(n, dtype=int), 1, (n, i1, i2))
