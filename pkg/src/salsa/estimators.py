"""Channel estimators: least squares and SALSA.

SALSA folds ``Y`` into an ``(L, j1, j2)`` tensor, models it as a sum of
Tucker terms ``S x1 A x2 B_r^T x3 C_r^T`` and fits the terms one at a time
by alternating least squares on the 2- and 3-mode unfoldings. The channel
estimate is ``sum_r C_r kron B_r``.
"""

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .kron_factor import FactorShape, KroneckerTerm
from .measurement import MeasurementSet, fold_measurement
from .tensor_core import core_tensor, fold, unfold

__all__ = [
    "SalsaConfig",
    "EstimateReport",
    "TermFit",
    "Identifiability",
    "IdentifiabilityError",
    "SalsaError",
    "ls_estimate",
    "check_identifiability",
    "als_fit_term",
    "salsa_estimate",
    "nmse",
    "psi_matrices",
]

_EPS = np.finfo(float).eps
# eigenvalue ratio below which the Gram solve hands over to the SVD (cond(psi) > 1e4)
_GRAM_RCOND = 1e-8


class IdentifiabilityError(ValueError):
    """Raised when ``i1 <= L*j2`` or ``i2 <= L*j1`` is violated."""


class SalsaError(RuntimeError):
    """A SALSA term failed; ``partial`` holds the report up to the failure."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class Identifiability(NamedTuple):
    c1: bool
    c2: bool
    min_t_bs: int | None

    @property
    def ok(self):
        return self.c1 and self.c2


@dataclass(frozen=True)
class SalsaConfig:
    shape: FactorShape
    r_terms: int = 1
    max_iters: int = 50
    init_seed: int = 0
    early_stop_tol: float = 1e-8
    joint_refinement: bool = False  # reserved: re-fitting earlier terms is not implemented

    def __post_init__(self):
        if self.joint_refinement:
            raise NotImplementedError("joint refinement of earlier terms is not implemented")
        if self.r_terms < 1:
            raise ValueError("r_terms must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be >= 0")


@dataclass
class TermFit:
    term: KroneckerTerm
    residuals: np.ndarray  # fit residual after every half-sweep
    sweeps: int
    degenerate: bool


@dataclass
class EstimateReport:
    estimate: np.ndarray
    terms: list
    fits: list
    identifiability: Identifiability
    deflation_residuals: np.ndarray  # ||Y - sum_{r'<=r} Yhat_r'|| after each term
    partial_estimates: list = field(repr=False, default_factory=list)
    wall_time: float = 0.0

    @property
    def residual_trajectories(self):
        return [f.residuals for f in self.fits]


def _lstsq_right(y, psi):
    """``y @ pinv(psi)`` for a wide ``psi``; also returns its numerical rank.

    Uses ``y psi^H (psi psi^H)^-1`` when the Gram matrix is well conditioned
    and an SVD with relative threshold ``max(psi.shape)*eps`` otherwise.
    """
    gram = psi @ psi.conj().T
    w, v = np.linalg.eigh(gram)
    if w[-1] > 0 and w[0] > _GRAM_RCOND * w[-1]:
        rhs = (y @ psi.conj().T) @ v
        return (rhs / w) @ v.conj().T, psi.shape[0]
    u, s, vh = np.linalg.svd(psi, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((y.shape[0], psi.shape[0]), dtype=complex), 0
    keep = s > max(psi.shape) * _EPS * s[0]
    u, s, vh = u[:, keep], s[keep], vh[keep]
    return ((y @ vh.conj().T) / s) @ u.conj().T, int(keep.sum())


def ls_estimate(y_matrix, combiner):
    """``pinv(A) @ Y``; singular values below ``max(L, n_bs)*eps*s_max`` are dropped."""
    a = combiner.matrix if hasattr(combiner, "matrix") else np.asarray(combiner)
    y = y_matrix.y_matrix if isinstance(y_matrix, MeasurementSet) else np.asarray(y_matrix)
    if y.shape[0] != a.shape[0]:
        raise ValueError(f"Y has {y.shape[0]} rows but A has {a.shape[0]}")
    return np.linalg.pinv(a, rcond=max(a.shape) * _EPS) @ y


def check_identifiability(shape, n_meas, n_rf=None):
    """Conditions ``i1 <= L*j2`` (C1) and ``i2 <= L*j1`` (C2).

    With ``n_rf`` given, also returns the smallest number of training blocks
    ``t_bs`` for which both hold.
    """
    c1 = shape.i1 <= n_meas * shape.j2
    c2 = shape.i2 <= n_meas * shape.j1
    min_t_bs = None
    if n_rf is not None:
        need1 = -(-shape.i1 // (n_rf * shape.j2))
        need2 = -(-shape.i2 // (n_rf * shape.j1))
        min_t_bs = max(1, need1, need2)
    return Identifiability(c1, c2, min_t_bs)


def psi_matrices(a, b=None, c=None, shape=None):
    """Explicit ``Psi2 = [S]_(2) (C kron A^T)`` and ``Psi3 = [S]_(3) (B kron A^T)``.

    Evaluated entrywise as ``Psi2[i1, l + j2*L] = sum_i2 C[i2, j2] A[l, i1 + i2*I1]``
    and ``Psi3[i2, l + j1*L] = sum_i1 B[i1, j1] A[l, i1 + i2*I1]``, which
    avoids the large Kronecker intermediate. Either factor may be omitted;
    the matching output is then ``None``.
    """
    a = np.asarray(a)
    n_meas = a.shape[0]
    a3 = a.reshape(n_meas, shape.i1, shape.i2, order="F")
    psi2 = psi3 = None
    if c is not None:
        t = np.matmul(a3.transpose(1, 0, 2), c)  # (i1, L, j2)
        psi2 = t.transpose(0, 2, 1).reshape(shape.i1, shape.j2 * n_meas)
    if b is not None:
        t = np.matmul(a3.transpose(2, 0, 1), b)  # (i2, L, j1)
        psi3 = t.transpose(0, 2, 1).reshape(shape.i2, shape.j1 * n_meas)
    return psi2, psi3


def _model_tensor(a, term, n_meas, shape):
    # S x1 A x2 B^T x3 C^T, through its 1-mode unfolding A (C kron B)
    return fold(a @ np.kron(term.left, term.right), 1, (n_meas, shape.j1, shape.j2))


def als_fit_term(y_r, combiner, cfg, term_seed=0):
    """Fit one term ``(B, C)`` to the tensor ``y_r`` by alternating least squares.

    Each sweep solves ``B^T = [Y_r]_(2) pinv(Psi2)`` for fixed ``C``, then
    ``C^T = [Y_r]_(3) pinv(Psi3)`` for fixed ``B``. ``C`` starts as i.i.d.
    standard circular Gaussian drawn from ``term_seed``. Stops after
    ``cfg.max_iters`` sweeps or once the relative change of the fit residual
    over a sweep falls below ``cfg.early_stop_tol``; ``cfg.r_terms`` is ignored.
    """
    a = combiner.matrix if hasattr(combiner, "matrix") else np.asarray(combiner)
    shape, max_iters, early_stop_tol = cfg.shape, cfg.max_iters, cfg.early_stop_tol
    n_meas = a.shape[0]
    if a.shape[1] != shape.rows:
        raise ValueError(f"A has {a.shape[1]} columns, division needs {shape.rows}")
    if y_r.shape != (n_meas, shape.j1, shape.j2):
        raise ValueError(f"tensor of shape {y_r.shape} does not match A and division")
    flags = check_identifiability(shape, n_meas)
    if not flags.ok:
        raise IdentifiabilityError(
            f"division {shape.as_tuple()} is not identifiable with L={n_meas} "
            f"(C1={flags.c1}, C2={flags.c2})"
        )

    y2 = unfold(y_r, 2)
    y3 = unfold(y_r, 3)
    rng = np.random.default_rng(term_seed)
    c = (rng.standard_normal((shape.i2, shape.j2))
         + 1j * rng.standard_normal((shape.i2, shape.j2))) / np.sqrt(2)
    b = None
    residuals = []
    degenerate = False
    prev = None
    sweeps = 0
    for _ in range(max_iters):
        psi2, _ = psi_matrices(a, c=c, shape=shape)
        bt, rank2 = _lstsq_right(y2, psi2)
        b = bt.T
        residuals.append(np.linalg.norm(y2 - bt @ psi2))

        _, psi3 = psi_matrices(a, b=b, shape=shape)
        ct, rank3 = _lstsq_right(y3, psi3)
        c = ct.T
        res = np.linalg.norm(y3 - ct @ psi3)
        residuals.append(res)
        sweeps += 1
        degenerate = degenerate or rank2 < shape.i1 or rank3 < shape.i2

        if not (np.isfinite(res) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise FloatingPointError("non-finite values in ALS update")
        if prev is not None and early_stop_tol > 0:
            if abs(prev - res) <= early_stop_tol * max(prev, np.finfo(float).tiny):
                break
        if res == 0.0:
            break
        prev = res

    return TermFit(KroneckerTerm(left=c, right=b), np.array(residuals), sweeps, degenerate)


def salsa_estimate(measurement, combiner, cfg):
    """Sequential ALS estimate of the total channel ``H`` (``n_bs x n_ue*n_sc``).

    Term ``r`` is fitted to ``Y - sum_{r'<r} Yhat_r'`` with initial seed
    ``cfg.init_seed + r``.
    """
    start = time.perf_counter()
    y = measurement.y_matrix if isinstance(measurement, MeasurementSet) else np.asarray(measurement)
    a = combiner.matrix if hasattr(combiner, "matrix") else np.asarray(combiner)
    shape = cfg.shape
    n_meas = a.shape[0]
    if a.shape[1] != shape.rows or y.shape != (n_meas, shape.cols):
        raise ValueError(
            f"division {shape.as_tuple()} incompatible with A {a.shape} and Y {y.shape}"
        )
    flags = check_identifiability(shape, n_meas)
    if not flags.ok:
        raise IdentifiabilityError(
            f"division {shape.as_tuple()} is not identifiable with L={n_meas}"
        )

    y_t = fold_measurement(y, shape)
    fitted = np.zeros_like(y_t, dtype=complex)
    estimate = np.zeros((shape.rows, shape.cols), dtype=complex)
    terms, fits, partials, deflation = [], [], [], []

    def _report():
        return EstimateReport(
            estimate=estimate.copy(), terms=list(terms), fits=list(fits),
            identifiability=flags, deflation_residuals=np.array(deflation),
            partial_estimates=list(partials), wall_time=time.perf_counter() - start,
        )

    for r in range(1, cfg.r_terms + 1):
        try:
            fit = als_fit_term(y_t - fitted, a, cfg, term_seed=cfg.init_seed + r)
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise SalsaError(f"term {r} failed: {exc}", partial=_report()) from exc
        fitted = fitted + _model_tensor(a, fit.term, n_meas, shape)
        estimate = estimate + fit.term.matrix()
        terms.append(fit.term)
        fits.append(fit)
        partials.append(estimate.copy())
        deflation.append(np.linalg.norm(y_t - fitted))

    return _report()


def nmse(h_true, h_est):
    """``||H - Hhat||_F^2 / ||H||_F^2``."""
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch {h_true.shape} vs {h_est.shape}")
    den = np.linalg.norm(h_true) ** 2
    if den == 0:
        raise ValueError("reference channel has zero norm")
    return float(np.linalg.norm(h_true - h_est) ** 2 / den)
