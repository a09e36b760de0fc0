"""Wideband MIMO channels from a simplified clustered delay line (CDL) model.

Each realization sums, over clusters and rays, the outer product of the BS
and UE planar-array responses with a random ray phase. Cluster delays are
placed on the sample grid with a truncated sinc kernel, and the per-subcarrier
matrices ``H_k`` are the ``n_sc``-point DFT of the taps.

Cluster delays, powers and mean angles belong to the profile and are fixed;
ray angle offsets (Laplacian) and ray phases are redrawn per realization.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ClusterParams",
    "ChannelProfile",
    "ChannelRealization",
    "steering_vector",
    "generate_channel",
    "to_frequency",
    "assemble_total",
    "load_profile",
    "default_profile",
    "KERNEL_HALF_WIDTH",
]

KERNEL_HALF_WIDTH = 8


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array of ``rows x cols`` elements, spacing in wavelengths."""

    rows: int
    cols: int
    spacing: float = 0.5

    @property
    def size(self):
        return self.rows * self.cols


@dataclass(frozen=True)
class ClusterParams:
    """One cluster. Angles in radians: ``aoa``/``zoa`` at the BS, ``aod``/``zod`` at the UE.

    ``angular_spread`` is the RMS of the per-ray Laplacian angle offsets.
    """

    delay: float
    power: float
    aoa: float
    zoa: float
    aod: float
    zod: float
    angular_spread: float = math.radians(5.0)
    rays: int = 20

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("cluster power must be non-negative")
        if self.delay < 0:
            raise ValueError("cluster delay must be non-negative")
        if self.rays < 1:
            raise ValueError("a cluster needs at least one ray")


@dataclass(frozen=True)
class ChannelProfile:
    clusters: tuple
    bs_array: ArrayGeometry = ArrayGeometry(8, 8)
    ue_array: ArrayGeometry = ArrayGeometry(2, 2)
    sampling_rate: float = 30.72e6
    name: str = "custom"

    @classmethod
    def from_dict(cls, doc):
        clusters = tuple(ClusterParams(**c) for c in doc["clusters"])
        return cls(
            clusters=clusters,
            bs_array=ArrayGeometry(**doc.get("bs_array", {"rows": 8, "cols": 8})),
            ue_array=ArrayGeometry(**doc.get("ue_array", {"rows": 2, "cols": 2})),
            sampling_rate=float(doc.get("sampling_rate", 30.72e6)),
            name=doc.get("name", "custom"),
        )

    def rms_delay_spread(self):
        p = np.array([c.power for c in self.clusters])
        d = np.array([c.delay for c in self.clusters])
        p = p / p.sum()
        mean = p @ d
        return float(np.sqrt(p @ (d - mean) ** 2))


@dataclass(frozen=True)
class ChannelRealization:
    """Time-domain taps and frequency-domain slices of one channel draw.

    ``taps`` has shape ``(n_bs, n_ue, n_taps)``; tap index ``t`` is sample
    ``t - tap_offset`` (the offset holds the sinc pre-cursor). ``slices`` has
    shape ``(n_sc, n_bs, n_ue)``.
    """

    taps: np.ndarray
    slices: np.ndarray
    tap_offset: int = 0

    @classmethod
    def from_total(cls, total, n_ue):
        """Wrap a given ``n_bs x (n_ue*n_sc)`` matrix; taps are its inverse DFT."""
        total = np.asarray(total)
        n_bs, cols = total.shape
        if cols % n_ue:
            raise ValueError(f"{cols} columns is not a multiple of n_ue={n_ue}")
        slices = total.reshape(n_bs, cols // n_ue, n_ue).transpose(1, 0, 2)
        taps = np.moveaxis(np.fft.ifft(slices, axis=0), 0, -1)
        return cls(taps=taps, slices=slices.copy(), tap_offset=0)

    @property
    def total(self):
        return assemble_total(self.slices)

    @property
    def n_sc(self):
        return self.slices.shape[0]


def steering_vector(geom, azimuth, elevation):
    """Planar-array response, vectorized column-major over ``(row, col)``.

    Element ``(m, n)`` has phase ``2*pi*d*(n sin(el) cos(az) + m sin(el) sin(az))``;
    ``el`` is measured from the array normal, so ``el = 0`` is boresight.
    """
    m = np.arange(geom.rows)
    n = np.arange(geom.cols)
    u = np.sin(elevation) * np.cos(azimuth)
    v = np.sin(elevation) * np.sin(azimuth)
    phase = 2 * np.pi * geom.spacing * (n[None, :] * u + m[:, None] * v)
    return np.exp(1j * phase).reshape(-1, order="F")


def _steering_many(geom, azimuth, elevation):
    # rows of the result are steering vectors for each angle pair
    m = np.repeat(np.arange(geom.rows)[:, None], geom.cols, axis=1).reshape(-1, order="F")
    n = np.repeat(np.arange(geom.cols)[None, :], geom.rows, axis=0).reshape(-1, order="F")
    u = (np.sin(elevation) * np.cos(azimuth))[:, None]
    v = (np.sin(elevation) * np.sin(azimuth))[:, None]
    return np.exp(2j * np.pi * geom.spacing * (n[None, :] * u + m[None, :] * v))


def _delay_kernel(delay_samples, n_taps, offset):
    """Truncated sinc placing each delay on the tap grid, shape ``(n_delays, n_taps)``."""
    t = np.arange(n_taps) - offset
    d = t[None, :] - np.asarray(delay_samples, dtype=float)[:, None]
    k = np.sinc(d)
    k[np.abs(d) > KERNEL_HALF_WIDTH] = 0.0
    on_grid = np.isclose(d, np.round(d), rtol=0, atol=1e-12)
    k[on_grid] = (np.round(d[on_grid]) == 0).astype(float)
    return k


def _n_taps(profile):
    max_delay = max(c.delay for c in profile.clusters)
    return int(math.ceil(max_delay * profile.sampling_rate)) + 2 * KERNEL_HALF_WIDTH + 1


def to_frequency(taps, n_sc, offset=0):
    """DFT along the tap axis: ``H_k = sum_t taps[..., t] exp(-2j pi k (t - offset) / n_sc)``.

    Works for any number of taps; with more taps than ``n_sc`` it is the
    channel frequency response sampled at ``n_sc`` points. Returns shape
    ``(n_sc, n_bs, n_ue)``.
    """
    taps = np.asarray(taps)
    n_taps = taps.shape[-1]
    t = np.arange(n_taps) - offset
    k = np.arange(n_sc)
    w = np.exp(-2j * np.pi * np.outer(k, t) / n_sc)
    return np.einsum("kt,abt->kab", w, taps)


def assemble_total(slices):
    """``[H_1, ..., H_K]`` concatenated horizontally."""
    slices = list(slices) if not isinstance(slices, np.ndarray) else slices
    if len(slices) == 0:
        raise ValueError("no slices")
    first = np.shape(slices[0])
    if any(np.shape(s) != first for s in slices):
        raise ValueError("ragged slices")
    return np.concatenate(list(slices), axis=1)


def _expected_energy_per_sc(profile, n_sc, n_taps):
    """Mean over subcarriers of ``sum_c p_c |D_k(tau_c)|^2`` (before normalization)."""
    p = np.array([c.power for c in profile.clusters], dtype=float)
    p = p / p.sum()
    d = np.array([c.delay for c in profile.clusters]) * profile.sampling_rate
    kern = _delay_kernel(d, n_taps, KERNEL_HALF_WIDTH)
    t = np.arange(n_taps) - KERNEL_HALF_WIDTH
    w = np.exp(-2j * np.pi * np.outer(np.arange(n_sc), t) / n_sc)
    resp = kern @ w.T  # (clusters, n_sc)
    return float(p @ np.mean(np.abs(resp) ** 2, axis=1))


def generate_channel(profile, n_sc, rng_seed, bs_array=None, ue_array=None,
                     sampling_rate=None):
    """Draw one channel realization.

    The result is scaled so that ``E||H||_F^2 = n_bs * n_ue * n_sc`` over the
    per-realization randomness (ray offsets and phases).
    """
    if n_sc < 1:
        raise ValueError("n_sc must be >= 1")
    if isinstance(profile, (list, tuple)):
        profile = ChannelProfile(clusters=tuple(profile))
    if not profile.clusters:
        raise ValueError("profile has no clusters")
    overrides = {}
    if bs_array is not None:
        overrides["bs_array"] = bs_array
    if ue_array is not None:
        overrides["ue_array"] = ue_array
    if sampling_rate is not None:
        overrides["sampling_rate"] = sampling_rate
    if overrides:
        profile = ChannelProfile(**{**profile.__dict__, **overrides})

    rng = np.random.default_rng(rng_seed)
    clusters = profile.clusters
    powers = np.array([c.power for c in clusters], dtype=float)
    if powers.sum() <= 0:
        raise ValueError("profile has zero total power")
    powers = powers / powers.sum()

    n_rays = np.array([c.rays for c in clusters])
    idx = np.repeat(np.arange(len(clusters)), n_rays)
    total_rays = idx.size

    def _angles(attr):
        mean = np.array([getattr(c, attr) for c in clusters])[idx]
        spread = np.array([c.angular_spread for c in clusters])[idx]
        # Laplacian with RMS `spread`: scale = spread / sqrt(2)
        return mean + rng.laplace(0.0, 1.0, total_rays) * spread / np.sqrt(2)

    aoa, zoa, aod, zod = (_angles(a) for a in ("aoa", "zoa", "aod", "zod"))
    phases = rng.uniform(0.0, 2 * np.pi, total_rays)
    gains = np.sqrt(powers[idx] / n_rays[idx]) * np.exp(1j * phases)

    a_bs = _steering_many(profile.bs_array, aoa, zoa)
    a_ue = _steering_many(profile.ue_array, aod, zod)

    n_taps = _n_taps(profile)
    delays = np.array([c.delay for c in clusters])[idx] * profile.sampling_rate
    kern = _delay_kernel(delays, n_taps, KERNEL_HALF_WIDTH)

    scale = 1.0 / np.sqrt(_expected_energy_per_sc(profile, n_sc, n_taps))
    taps = scale * np.einsum("r,ra,rb,rt->abt", gains, a_bs, a_ue.conj(), kern)
    slices = to_frequency(taps, n_sc, offset=KERNEL_HALF_WIDTH)
    return ChannelRealization(taps=taps, slices=slices, tap_offset=KERNEL_HALF_WIDTH)


def load_profile(path):
    """Read a channel profile from a JSON document."""
    with open(path) as fh:
        return ChannelProfile.from_dict(json.load(fh))


def default_profile():
    """The embedded default profile (8 clusters, 20 rays each, 100 ns RMS delay spread)."""
    text = resources.files("salsa").joinpath("data/default_profile.json").read_text()
    return ChannelProfile.from_dict(json.loads(text))


def resolve_profile(ref):
    """``None``/``"default"`` -> embedded profile; a path -> :func:`load_profile`."""
    if ref is None or ref == "default":
        return default_profile()
    if isinstance(ref, ChannelProfile):
        return ref
    if isinstance(ref, dict):
        return ChannelProfile.from_dict(ref)
    return load_profile(Path(ref))
