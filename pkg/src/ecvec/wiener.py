"""Polygonal sample paths built from points on the unit sphere.

A sphere point w in S^{d-1} becomes the path with value w_1 + ... + w_i at
t_i = i/d, linear in between.  Rescaling to [0, T] uses the Wiener scaling
sqrt(T) * X(t/T).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest

from .transform import to_sphere

NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WienerPath:
    values: np.ndarray  # breakpoints at t_i = i*T/d, values[0] = 0
    T: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a path needs at least two breakpoints")
        if values[0] != 0:
            raise ValueError("paths start at 0")
        if not self.T > 0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        if not isinstance(other, WienerPath):
            return NotImplemented
        return self.T == other.T and np.array_equal(self.values, other.values)

    @property
    def d(self) -> int:
        return self.values.size - 1

    def times(self) -> np.ndarray:
        return np.arange(self.d + 1) * (self.T / self.d)

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.T):
            raise ValueError(f"t outside [0, {self.T}]")
        pos = t_arr * self.d / self.T
        # snap rounding noise so breakpoints evaluate exactly
        near = np.rint(pos)
        pos = np.where(np.abs(pos - near) <= 1e-12 * self.d, near, pos)
        i = np.minimum(np.floor(pos).astype(int), self.d - 1)
        frac = pos - i
        out = self.values[i] + frac * (self.values[i + 1] - self.values[i])
        # exact at breakpoints
        out = np.where(frac == 0, self.values[i], out)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"d": self.d, "T": self.T, "values": self.values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        return "".join(f"{t:.17g},{v:.17g}\n" for t, v in zip(self.times(), self.values))


def sigma_d(w) -> WienerPath:
    """Partial-sum path of a unit vector."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("expected a nonempty 1-d vector")
    if abs(np.linalg.norm(w) - 1) > NORM_TOL:
        raise ValueError("input must lie on the unit sphere")
    return WienerPath(np.concatenate(([0.0], np.cumsum(w))))


def sigma_d_batch(W: np.ndarray) -> np.ndarray:
    """Breakpoint values for each row of W, shape (n, d+1)."""
    W = np.asarray(W, dtype=float)
    out = np.zeros((W.shape[0], W.shape[1] + 1))
    np.cumsum(W, axis=1, out=out[:, 1:])
    return out


def scale_to_T(path: WienerPath, T: float) -> WienerPath:
    """Path on [0, T*path.T] with value sqrt(T) * path(t / T)."""
    if not T > 0:
        raise ValueError("T must be positive")
    return WienerPath(path.values * math.sqrt(T), path.T * T)


@dataclass(frozen=True, eq=False)
class MultiPath:
    components: tuple[WienerPath, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("a multipath needs at least one component")
        d, T = self.components[0].d, self.components[0].T
        if any(c.d != d or c.T != T for c in self.components):
            raise ValueError("components must share d and T")

    @property
    def D(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].d

    def eval(self, t) -> np.ndarray:
        return np.array([c.eval(t) for c in self.components])

    def to_dict(self) -> dict:
        return {"D": self.D, "d": self.d, "T": self.components[0].T,
                "components": [c.values.tolist() for c in self.components]}


def multi_path(D: int, v, T: float = 1.0) -> MultiPath | None:
    """Split a Gaussian vector of length D*d into D blocks and map each to a path.

    Returns None when some block is the zero vector (the sample is dropped).
    """
    v = np.asarray(v, dtype=float)
    if D < 1 or v.ndim != 1 or v.size % D:
        raise ValueError(f"vector length {v.size} is not a multiple of D = {D}")
    blocks = v.reshape(D, -1)
    if np.any(np.linalg.norm(blocks, axis=1) == 0):
        return None
    paths = []
    for block in blocks:
        p = sigma_d(to_sphere(block))
        paths.append(p if T == 1 else scale_to_T(p, T))
    return MultiPath(tuple(paths))


@dataclass(frozen=True)
class PathStats:
    times: tuple[float, ...]
    mean: tuple[float, ...]
    var: tuple[float, ...]
    increment_corr: float
    increment_cov: float
    endpoint_ks: float

    def to_dict(self) -> dict:
        return {"times": list(self.times), "mean": list(self.mean), "var": list(self.var),
                "incrementCorr": self.increment_corr, "incrementCov": self.increment_cov,
                "endpointKS": self.endpoint_ks}


def path_stats(values: np.ndarray, T: float = 1.0, probes=(0.25, 0.5, 1.0)) -> PathStats:
    """Ensemble summaries for paths given as breakpoint rows of shape (n, d+1).

    Increments compared are X(T/2) - X(0) and X(T) - X(T/2).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] == 0:
        raise ValueError("ensemble must be a nonempty (n, d+1) array")
    d = values.shape[1] - 1

    def at(t):
        pos = t * d / T
        i = min(int(math.floor(pos)), d - 1)
        frac = pos - i
        return values[:, i] + frac * (values[:, i + 1] - values[:, i])

    cols = [at(t) for t in probes]
    mean = tuple(float(c.mean()) for c in cols)
    var = tuple(float(c.var(ddof=1)) if len(c) > 1 else 0.0 for c in cols)
    first = at(T / 2) - at(0)
    second = at(T) - at(T / 2)
    cov = float(np.cov(first, second)[0, 1]) if len(first) > 1 else 0.0
    denom = first.std(ddof=1) * second.std(ddof=1) if len(first) > 1 else 0.0
    corr = cov / denom if denom > 0 else 0.0
    end = at(T) / math.sqrt(T)
    ks = float(kstest(end, "norm").statistic)
    return PathStats(tuple(float(t) for t in probes), mean, var, corr, cov, ks)
