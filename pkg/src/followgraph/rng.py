"""Reproducible random streams.

Raw bits come from Philox4x64-10, a counter-based generator keyed directly
by the scenario seed and a stream number. Every distribution on top of the
raw bits is implemented here so output never depends on a library's
sampler internals:

* uniforms: top 53 bits of each 64-bit word, scaled to [0, 1)
* normals: Box-Muller, one normal per pair of uniforms
* gamma: Marsaglia-Tsang squeeze/rejection (with the u^(1/k) boost for k < 1)
* Poisson: sequential inversion below mean 10, PTRS transformed rejection above
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

_MASK64 = (1 << 64) - 1
_TWO53 = float(1 << 53)


class Stream:
    def __init__(self, seed: int, stream: int = 0):
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = seed
        self.stream = stream
        self._bits = np.random.Philox(key=seed | (stream << 64))

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(int(n))
        return (raw >> np.uint64(11)).astype(np.float64) / _TWO53

    def normal(self, n: int) -> np.ndarray:
        u = self.uniform(2 * n).reshape(2, n) if n else np.empty((2, 0))
        return np.sqrt(-2.0 * np.log1p(-u[0])) * np.cos(2.0 * math.pi * u[1])

    def bernoulli(self, p, n: int) -> np.ndarray:
        return self.uniform(n) < p

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """Integers in [low, high)."""
        span = high - low
        return low + np.minimum((self.uniform(n) * span).astype(np.int64), span - 1)

    def choice(self, weights, n: int) -> np.ndarray:
        w = np.asarray(weights, dtype=np.float64)
        cdf = np.cumsum(w / w.sum())
        cdf[-1] = 1.0
        return np.searchsorted(cdf, self.uniform(n), side="right")

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def gamma(self, shape, scale=1.0, n: int | None = None) -> np.ndarray:
        shape = np.asarray(shape, dtype=np.float64)
        if n is not None:
            shape = np.broadcast_to(shape, (n,))
        shape = np.array(shape, dtype=np.float64, ndmin=1)
        if np.any(shape <= 0):
            raise ValueError("gamma shape must be positive")
        small = shape < 1.0
        k = np.where(small, shape + 1.0, shape)
        d = k - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty_like(k)
        pending = np.arange(k.size)
        while pending.size:
            x = self.normal(pending.size)
            u = self.uniform(pending.size)
            dd, cc = d[pending], c[pending]
            v = (1.0 + cc * x) ** 3
            ok = v > 0
            safe_v = np.where(ok, v, 1.0)
            accept = ok & ((u < 1.0 - 0.0331 * x ** 4)
                           | (np.log(u) < 0.5 * x * x + dd * (1.0 - safe_v + np.log(safe_v))))
            out[pending[accept]] = dd[accept] * safe_v[accept]
            pending = pending[~accept]
        if np.any(small):
            idx = np.flatnonzero(small)
            u = self.uniform(idx.size)
            out[idx] *= u ** (1.0 / shape[idx])
        return out * scale

    def poisson(self, lam) -> np.ndarray:
        lam = np.array(lam, dtype=np.float64, ndmin=1)
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("Poisson mean must be finite and non-negative")
        out = np.zeros(lam.shape, dtype=np.int64)
        small = np.flatnonzero((lam > 0) & (lam < 10.0))
        if small.size:
            out[small] = self._poisson_inversion(lam[small])
        large = np.flatnonzero(lam >= 10.0)
        if large.size:
            out[large] = self._poisson_ptrs(lam[large])
        return out

    def _poisson_inversion(self, lam):
        u = self.uniform(lam.size)
        k = np.zeros(lam.size, dtype=np.int64)
        p = np.exp(-lam)
        cdf = p.copy()
        active = u > cdf
        while np.any(active):
            k[active] += 1
            p[active] *= lam[active] / k[active]
            cdf[active] += p[active]
            # Guard against the cdf saturating below u in floating point.
            active &= (u > cdf) & (p > 0)
        return k

    def _poisson_ptrs(self, lam):
        # Hormann (1993) transformed rejection with squeeze.
        out = np.empty(lam.size, dtype=np.int64)
        slam = np.sqrt(lam)
        loglam = np.log(lam)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)
        pending = np.arange(lam.size)
        while pending.size:
            uu = self.uniform(2 * pending.size).reshape(2, -1)
            U = uu[0] - 0.5
            V = uu[1]
            A, B = a[pending], b[pending]
            us = 0.5 - np.abs(U)
            k = np.floor((2.0 * A / us + B) * U + lam[pending] + 0.43)
            quick = (us >= 0.07) & (V <= vr[pending])
            reject = (k < 0) | ((us < 0.013) & (V > us))
            with np.errstate(divide="ignore", invalid="ignore"):
                lhs = np.log(V) + np.log(inv_alpha[pending]) - np.log(A / (us * us) + B)
                rhs = -lam[pending] + k * loglam[pending] - gammaln(np.maximum(k, 0) + 1.0)
            accept = quick | (~reject & (lhs <= rhs))
            out[pending[accept]] = k[accept].astype(np.int64)
            pending = pending[~accept]
        return out
