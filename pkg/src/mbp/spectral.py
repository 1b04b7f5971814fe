"""Power-spectral-density estimation and lag-decay scaling reports.

The estimation theory assumes the process's spectral density matrix has its
minimum eigenvalue bounded away from zero over all frequencies. This module
estimates that bound with a Bartlett-averaged periodogram (disjoint
segments, no taper), exposes the lag-window autocovariance eigenvalue it
controls, and tabulates how the mixing norm and concentration constant scale
with the number of lags for standard magnitude-decay families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .link import LinkSpec
from .simulate import SamplePath
from .tensor import (
    ParamTensor,
    _inner_decay_norm,
    concentration_constant,
    mixing_norm,
)

__all__ = [
    "SpectralReport",
    "psd_estimate",
    "autocorr_min_eig",
    "ConstantDecay",
    "PolynomialDecay",
    "ExponentialDecay",
    "DecayRow",
    "decay_scaling_report",
]


@dataclass(frozen=True)
class SpectralReport:
    """Minimum spectral eigenvalue over a frequency grid."""

    freq_grid: np.ndarray = field(repr=False)
    min_eigs: np.ndarray = field(repr=False)
    spectral_floor: float


def psd_estimate(
    path: SamplePath, n_segments: int, freq_points: int = 256
) -> SpectralReport:
    """Bartlett estimate of the spectral density and its eigenvalue floor.

    The mean-centered path is cut into ``n_segments`` disjoint segments whose
    periodogram matrices (outer products of the segment Fourier transforms,
    no taper) are averaged over segments and over the Fourier bins nearest to
    each of ``freq_points`` equispaced grid frequencies on [-pi, pi). The
    band pooling keeps the estimate Hermitian positive semidefinite and
    leaves about 2 n / freq_points degrees of freedom per grid point, so the
    grid minimum is not dragged down by single-bin noise. Returns the
    per-frequency minimum eigenvalue and the grid minimum.
    """
    if n_segments < 1 or freq_points < 1:
        raise ValueError("n_segments and freq_points must be positive")
    if path.n < 4 * n_segments:
        raise ValueError(
            f"path too short: n={path.n} but need at least {4 * n_segments}"
        )
    x = path.data.astype(np.float64)
    x = x - x.mean(axis=0)
    seg_len = x.shape[0] // n_segments
    x = x[: n_segments * seg_len]
    segments = x.reshape(n_segments, seg_len, path.n_dims)
    d = np.fft.fft(segments, axis=1)  # (S, L, N) at bins 2 pi k / L
    # per-bin average over segments of (1/L) d d^H
    per_bin = np.einsum("skn,skm->knm", d, d.conj()) / (n_segments * seg_len)
    # wrap bins to [-pi, pi) and pool them onto the nearest grid point
    bin_freqs = 2.0 * math.pi * np.arange(seg_len) / seg_len
    bin_freqs = np.where(bin_freqs >= math.pi, bin_freqs - 2.0 * math.pi, bin_freqs)
    band = np.rint((bin_freqs + math.pi) * freq_points / (2.0 * math.pi)).astype(int)
    band %= freq_points
    n_dims = path.n_dims
    spectra = np.zeros((freq_points, n_dims, n_dims), dtype=complex)
    counts = np.bincount(band, minlength=freq_points).astype(float)
    np.add.at(spectra, band, per_bin)
    filled = counts > 0
    spectra[filled] /= counts[filled][:, None, None]
    freqs = -math.pi + 2.0 * math.pi * np.arange(freq_points) / freq_points
    min_eigs = np.full(freq_points, np.inf)
    for f in range(freq_points):
        if filled[f]:
            min_eigs[f] = np.linalg.eigvalsh(spectra[f]).min()
    min_eigs = min_eigs[filled]
    freqs = freqs[filled]
    return SpectralReport(
        freq_grid=freqs, min_eigs=min_eigs, spectral_floor=float(min_eigs.min())
    )


def autocorr_min_eig(path: SamplePath) -> float:
    """Minimum eigenvalue of the centered lag-window autocovariance matrix.

    Assembles the block-Toeplitz matrix of biased sample autocovariances up
    to lag depth p and returns its smallest eigenvalue (floored at zero).
    On long runs this sits above the spectral eigenvalue floor.
    """
    p, n_dims = path.n_lags, path.n_dims
    x = path.data.astype(np.float64)
    x = x - x.mean(axis=0)
    total = x.shape[0]
    covs = []
    for h in range(p):
        covs.append(x[: total - h].T @ x[h:] / total)  # C(h) = Cov(x_t, x_{t+h})
    blocks = np.zeros((p * n_dims, p * n_dims))
    for u in range(p):
        for v in range(p):
            h = u - v
            block = covs[h] if h >= 0 else covs[-h].T
            blocks[u * n_dims : (u + 1) * n_dims, v * n_dims : (v + 1) * n_dims] = block
    return float(max(np.linalg.eigvalsh(blocks).min(), 0.0))


# ---------------------------------------------------------------------------
# lag-decay scaling of the mixing norm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantDecay:
    """|theta_ijk| = c for every lag."""

    c: float


@dataclass(frozen=True)
class PolynomialDecay:
    """|theta_ijk| = c * k^(-alpha)."""

    c: float
    alpha: float


@dataclass(frozen=True)
class ExponentialDecay:
    """|theta_ijk| = c * exp(-beta * k)."""

    c: float
    beta: float


def _magnitudes(family, p: int) -> np.ndarray:
    lags = np.arange(1, p + 1, dtype=np.float64)
    if isinstance(family, ConstantDecay):
        return np.full(p, family.c)
    if isinstance(family, PolynomialDecay):
        return family.c * lags ** (-family.alpha)
    if isinstance(family, ExponentialDecay):
        return family.c * np.exp(-family.beta * lags)
    raise ValueError(f"unknown decay family: {family!r}")


@dataclass(frozen=True)
class DecayRow:
    """One table row of the lag-scaling report."""

    p: int
    inner_norm: float
    mixing_norm: float
    concentration: float
    diverged: bool


def decay_scaling_report(family, n_dims: int, p_values, link: LinkSpec):
    """Mixing-norm scaling across lag counts for a magnitude-decay family.

    For each p a tensor with |entries| given exactly by the family is built;
    the row reports the raw inner norm (no link prefactor), the mixing norm,
    and the concentration constant (inf marked diverged when the mixing norm
    reaches 1). ``p_values`` must be sorted ascending.
    """
    p_values = list(p_values)
    if p_values != sorted(p_values):
        raise ValueError("p_values must be sorted ascending")
    rows = []
    for p in p_values:
        mags = _magnitudes(family, p)
        values = np.broadcast_to(mags, (n_dims, n_dims, p)).copy()
        t = ParamTensor(values)
        inner = _inner_decay_norm(t.values)
        m = mixing_norm(t, link)
        g = concentration_constant(t, link)
        rows.append(
            DecayRow(
                p=int(p),
                inner_norm=inner,
                mixing_norm=m,
                concentration=g,
                diverged=math.isinf(g),
            )
        )
    return rows
