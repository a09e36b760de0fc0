"""Uplink training measurements for a hybrid analog-digital BS receiver.

Per subcarrier ``k`` and training block ``i`` the BS observes
``Ybar_{k,i} = Abar_i^H H_k F_k + Abar_i^H Zbar_{k,i}``. Right-filtering
with ``F_k^H`` and stacking over blocks and subcarriers gives
``Y = A H + Z`` with ``A = [Abar_1, ..., Abar_T]^H``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .tensor_core import fold

__all__ = [
    "SystemConfig",
    "AnalogCombiner",
    "MeasurementSet",
    "generate_combiner",
    "generate_precoders",
    "calibrate_noise",
    "simulate",
    "fold_measurement",
    "noise_matrix",
]


@dataclass(frozen=True)
class SystemConfig:
    n_bs: int = 64
    n_ue: int = 4
    n_sc: int = 16
    n_rf: int = 4
    n_g: int = 2
    t_bs: int = 16
    t_ue: int = 4

    def __post_init__(self):
        for name in ("n_bs", "n_ue", "n_sc", "n_rf", "n_g", "t_bs", "t_ue"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.n_bs % self.n_g or self.n_rf % self.n_g:
            raise ValueError("n_g must divide both n_bs and n_rf")
        if self.n_rf > self.n_bs:
            raise ValueError("n_rf must not exceed n_bs")
        if self.t_ue < self.n_ue:
            raise ValueError("t_ue must be >= n_ue")

    @property
    def bs_per_group(self):
        return self.n_bs // self.n_g

    @property
    def rf_per_group(self):
        return self.n_rf // self.n_g

    @property
    def n_meas(self):
        """Number of stacked measurement rows ``L = t_bs * n_rf``."""
        return self.t_bs * self.n_rf

    @property
    def n_cols(self):
        return self.n_ue * self.n_sc

    def replace(self, **changes):
        return SystemConfig(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class AnalogCombiner:
    """Per-block combiners ``Abar_i``, shape ``(t_bs, n_bs, n_rf)``."""

    blocks: np.ndarray

    @property
    def matrix(self):
        """Stacked ``A = [Abar_1, ..., Abar_T]^H`` of shape ``(t_bs*n_rf, n_bs)``."""
        t_bs, n_bs, n_rf = self.blocks.shape
        return self.blocks.conj().transpose(0, 2, 1).reshape(t_bs * n_rf, n_bs)

    @property
    def frobenius_sq(self):
        return float(np.sum(np.abs(self.blocks) ** 2))


@dataclass(frozen=True)
class MeasurementSet:
    y_matrix: np.ndarray
    noise: np.ndarray
    noise_variance: float
    snr_db: float

    @property
    def signal(self):
        return self.y_matrix - self.noise

    def tensor(self, shape):
        return fold_measurement(self.y_matrix, shape)


def generate_combiner(cfg, rng_seed):
    """Random block-diagonal phase-shifter combiner.

    Every nonzero entry is ``exp(1j*phi) / sqrt(n_bs/n_g)`` with ``phi``
    uniform on ``[0, 2*pi)``.
    """
    rng = np.random.default_rng(rng_seed)
    nb, nr = cfg.bs_per_group, cfg.rf_per_group
    blocks = np.zeros((cfg.t_bs, cfg.n_bs, cfg.n_rf), dtype=complex)
    phi = rng.uniform(0.0, 2 * np.pi, (cfg.t_bs, cfg.n_g, nb, nr))
    amp = 1.0 / math.sqrt(nb)
    for g in range(cfg.n_g):
        blocks[:, g * nb:(g + 1) * nb, g * nr:(g + 1) * nr] = amp * np.exp(1j * phi[:, g])
    return AnalogCombiner(blocks)


def generate_precoders(cfg, rng_seed=None):
    """Training precoders ``F_k`` (``n_ue x t_ue``) with orthonormal rows.

    Rows are the first ``n_ue`` rows of the unitary ``t_ue``-point DFT
    matrix, the same for every subcarrier. Returns shape ``(n_sc, n_ue, t_ue)``.
    ``rng_seed`` is accepted for interface stability and unused.
    """
    if cfg.t_ue < cfg.n_ue:
        raise ValueError("t_ue must be >= n_ue")
    t = cfg.t_ue
    dft = np.exp(-2j * np.pi * np.outer(np.arange(t), np.arange(t)) / t) / math.sqrt(t)
    f = dft[: cfg.n_ue]
    return np.broadcast_to(f, (cfg.n_sc, cfg.n_ue, t)).copy()


def _noiseless(combiner, slices):
    # A H_k for each k -> (L, n_ue) blocks, concatenated along columns
    a = combiner.matrix
    return np.concatenate([a @ h for h in slices], axis=1)


def calibrate_noise(cfg, channel, combiner, snr_db):
    """Antenna noise variance giving ``||A H||^2 / E||Z||^2 = 10^(snr_db/10)``.

    ``E||Z||^2 = sigma^2 * n_ue * n_sc * sum_i ||Abar_i||_F^2``.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    signal = float(np.linalg.norm(_noiseless(combiner, channel.slices)) ** 2)
    if signal <= 0:
        raise ValueError("channel has zero energy after combining")
    per_unit = cfg.n_ue * cfg.n_sc * combiner.frobenius_sq
    return signal / (10 ** (snr_db / 10) * per_unit)


def simulate(cfg, channel, combiner, precoders, snr_db, rng_seed):
    """Noisy right-filtered measurement matrix ``Y`` of shape ``(L, n_ue*n_sc)``.

    Noise ``Zbar_{k,i}`` is i.i.d. circular Gaussian at the antennas and
    passes through ``Abar_i^H`` and ``F_k^H``. ``snr_db = inf`` disables it.
    """
    slices = channel.slices
    if slices.shape != (cfg.n_sc, cfg.n_bs, cfg.n_ue):
        raise ValueError(f"channel slices {slices.shape} do not match config")
    if combiner.blocks.shape != (cfg.t_bs, cfg.n_bs, cfg.n_rf):
        raise ValueError(f"combiner {combiner.blocks.shape} does not match config")
    if precoders.shape != (cfg.n_sc, cfg.n_ue, cfg.t_ue):
        raise ValueError(f"precoders {precoders.shape} do not match config")

    ah = combiner.blocks.conj().transpose(0, 2, 1)  # (t_bs, n_rf, n_bs)
    # Ybar_{k,i} = Abar_i^H H_k F_k, then right-filter with F_k^H
    proj = precoders @ precoders.conj().transpose(0, 2, 1)  # F_k F_k^H
    signal = np.matmul(np.matmul(ah[None], slices[:, None]), proj[:, None])
    sigma2 = calibrate_noise(cfg, channel, combiner, snr_db)
    z = noise_matrix(cfg, combiner, precoders, sigma2, rng_seed)
    y = _stack(signal) + z
    return MeasurementSet(y_matrix=y, noise=z, noise_variance=sigma2, snr_db=snr_db)


def _stack(blocks):
    # (k, i, r, u) -> rows (i, r), columns (k, u)
    k, t, r, u = blocks.shape
    return blocks.transpose(1, 2, 0, 3).reshape(t * r, k * u)


def noise_matrix(cfg, combiner, precoders, noise_variance, rng_seed):
    """Effective noise ``Z`` (``L x n_ue*n_sc``): ``Abar_i^H Zbar_{k,i} F_k^H``, stacked like ``Y``."""
    shape = (cfg.n_sc, cfg.t_bs, cfg.n_bs, cfg.t_ue)
    if noise_variance == 0:
        return np.zeros((cfg.n_meas, cfg.n_cols), dtype=complex)
    rng = np.random.default_rng(rng_seed)
    zbar = math.sqrt(noise_variance / 2) * (rng.standard_normal(shape)
                                            + 1j * rng.standard_normal(shape))
    ah = combiner.blocks.conj().transpose(0, 2, 1)
    fh = precoders.conj().transpose(0, 2, 1)
    return _stack(np.matmul(np.matmul(ah[None], zbar), fh[:, None]))


def fold_measurement(y_matrix, shape):
    """Fold ``Y`` into the ``(L, j1, j2)`` tensor whose 1-mode unfolding is ``Y``.

    Column ``c1 + c2*j1`` of ``Y`` becomes the fiber ``[:, c1, c2]``.
    """
    y_matrix = np.asarray(y_matrix)
    if y_matrix.shape[1] != shape.j1 * shape.j2:
        raise ValueError(
            f"Y has {y_matrix.shape[1]} columns, division needs {shape.j1 * shape.j2}"
        )
    return fold(y_matrix, 1, (y_matrix.shape[0], shape.j1, shape.j2))
