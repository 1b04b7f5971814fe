"""Sample-path generation for the binary autoregressive process.

Each of the N coordinates at time t is an independent Bernoulli draw whose
probability is the clamped link applied to the inner product between that
coordinate's interaction slice and the p-lag history. The simulator draws an
i.i.d. Ber(1/2) initial window, advances through a discarded burn-in, then
records n + p consecutive states (the last p burn-in states become the
recorded history). One RNG stream per simulation, consumed in (t, i) order,
fixes determinism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .link import LinkSpec
from .tensor import ParamTensor, stack_tensor

__all__ = [
    "SamplePath",
    "DesignMatrix",
    "simulate",
    "design_matrix",
    "random_sparse_theta",
    "read_path",
    "write_path",
]

DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class SamplePath:
    """Binary observations of shape (n + p, N); the first p rows are history.

    ``seed`` records the RNG seed the path was drawn with (or -1 for paths
    assembled from external data).
    """

    data: np.ndarray
    n_lags: int
    seed: int = -1

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError(f"path data must be 2-dimensional, got {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("path entries must be 0/1")
        if self.n_lags < 1:
            raise ValueError("n_lags must be positive")
        if arr.shape[0] <= self.n_lags:
            raise ValueError(
                f"path needs more than n_lags={self.n_lags} rows, got {arr.shape[0]}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        """Number of regression samples (rows after the initial history)."""
        return self.data.shape[0] - self.n_lags

    @property
    def n_dims(self) -> int:
        return self.data.shape[1]

    def history(self) -> np.ndarray:
        return self.data[: self.n_lags]

    def samples(self) -> np.ndarray:
        return self.data[self.n_lags :]


@dataclass(frozen=True)
class DesignMatrix:
    """Lagged binary regressors; row t is [(x^{t-1})' (x^{t-2})' ... (x^{t-p})']."""

    data: np.ndarray
    n_dims: int
    n_lags: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.shape[1] != self.n_dims * self.n_lags:
            raise ValueError("design width must equal n_dims * n_lags")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]


def simulate(
    theta: ParamTensor,
    link: LinkSpec,
    n: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
) -> SamplePath:
    """Draw a sample path of length n (plus p recorded history rows).

    The initial window is i.i.d. Ber(1/2); ``burn_in`` steps are then taken
    and discarded before recording, so with mixing dynamics the recorded
    block is close to stationarity. Deterministic given ``seed``.
    """
    if not theta.is_square:
        raise ValueError(
            f"process tensor must be square, got {theta.n_rows}x{theta.n_cols}"
        )
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    if seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    p, n_dims = theta.n_lags, theta.n_rows
    rng = np.random.default_rng(int(seed))
    uniforms = rng.random((p + burn_in + n, n_dims))
    init_hist = (uniforms[:p] < 0.5).astype(np.uint8)  # rows old -> recent
    states = _kernels.chain_steps(
        init_hist, stack_tensor(theta), link.alpha, link.eps, uniforms[p:]
    )
    full = np.concatenate([init_hist, states], axis=0)
    recorded = full[burn_in : burn_in + p + n]
    return SamplePath(data=recorded, n_lags=p, seed=int(seed))


def design_matrix(path: SamplePath) -> DesignMatrix:
    """Assemble the (n, N p) lag matrix satisfying X[t, (l-1)N + j] = x^{t-l}_j."""
    p, n, n_dims = path.n_lags, path.n, path.n_dims
    data = path.data
    cols = np.empty((n, n_dims * p), dtype=np.float64)
    for lag in range(1, p + 1):
        cols[:, (lag - 1) * n_dims : lag * n_dims] = data[p - lag : p - lag + n]
    return DesignMatrix(data=cols, n_dims=n_dims, n_lags=p)


def random_sparse_theta(
    n_dims: int,
    n_lags: int,
    s: int,
    magnitude_low: float = 0.3,
    magnitude_high: float = 1.0,
    seed: int = 0,
) -> ParamTensor:
    """Square tensor with exactly s nonzeros at uniform random positions.

    Magnitudes are uniform on [magnitude_low, magnitude_high] with random
    sign. Deterministic given ``seed``.
    """
    total = n_dims * n_dims * n_lags
    if not 0 <= s <= total:
        raise ValueError(f"s={s} outside [0, {total}]")
    if not 0 < magnitude_low <= magnitude_high:
        raise ValueError("need 0 < magnitude_low <= magnitude_high")
    if seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    rng = np.random.default_rng(int(seed))
    flat = np.zeros(total)
    idx = rng.choice(total, size=s, replace=False)
    mags = rng.uniform(magnitude_low, magnitude_high, size=s)
    signs = rng.integers(0, 2, size=s) * 2 - 1
    flat[idx] = mags * signs
    return ParamTensor(flat.reshape(n_dims, n_dims, n_lags))


def write_path(path: SamplePath, fname) -> None:
    """Write as text: header "n N p seed", then n + p rows of N bits."""
    with open(fname, "w", encoding="ascii") as fh:
        fh.write(f"{path.n} {path.n_dims} {path.n_lags} {path.seed}\n")
        for row in path.data:
            fh.write(" ".join(str(int(b)) for b in row) + "\n")


def read_path(fname) -> SamplePath:
    """Read a path written by :func:`write_path`."""
    with open(fname, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValueError(f"malformed path header: {header}")
        n, n_dims, p, seed = (int(x) for x in header)
        rows = np.array(fh.read().split(), dtype=np.uint8)
    if rows.size != (n + p) * n_dims:
        raise ValueError(f"expected {(n + p) * n_dims} bits, found {rows.size}")
    return SamplePath(data=rows.reshape(n + p, n_dims), n_lags=p, seed=seed)
