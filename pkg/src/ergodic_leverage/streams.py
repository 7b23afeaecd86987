"""Counter-based random streams for reproducible parallel Monte Carlo.

Every standard normal drawn anywhere in the package is a pure function of
``(seed, path_index, position)``:

1. The 64-bit master seed is passed through the SplitMix64 finalizer to give
   the Philox key (two 32-bit words).  Nearby seeds therefore give unrelated
   keys.
2. The Philox4x32-10 counter is ``(block_lo, block_hi, index_lo, index_hi)``
   with ``block = position // 2``.  Philox is a keyed bijection on the
   128-bit counter, so two distinct ``(path_index, block)`` pairs can never
   share an output block, and no stream overlaps another.
3. The 128-bit output is split into two 64-bit words; normal ``2*block`` uses
   the first and ``2*block + 1`` the second.  Each word keeps its top 53 bits
   and becomes ``u = (bits + 0.5) * 2**-53``, strictly inside (0, 1).
4. ``u`` is mapped through the inverse normal CDF (Wichura's AS241,
   PPND16).  The tail branch needs ``log``; it is evaluated with
   :func:`_det_log`, which uses only ``frexp`` and IEEE ``+ - * /``, so the
   result does not depend on the platform's libm.

Each normal advances a stream's position by exactly one, and generating
path ``i`` never touches paths ``0..i-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

__all__ = [
    "PathStream",
    "substream",
    "next_normal",
    "mix_seed",
    "philox4x32",
    "normal_at",
    "fill_normals",
    "inverse_normal_cdf",
]

MASK64 = (1 << 64) - 1

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)

_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10
_SQRT_HALF = 0.70710678118654752440

# 1/(2k+1) for k = 0..13; log(m) = 2s * sum(z**k / (2k+1)), z = s*s, |s| < 0.172
_ATANH_COEFS = np.array([1.0 / (2 * k + 1) for k in range(14)])

_A = np.array([
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
])
_B = np.array([
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
])
_C = np.array([
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
])
_D = np.array([
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
    5.47593808499534494600e-4, 1.05075007164441684324e-9,
])
_E = np.array([
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
])
_F = np.array([
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
    1.42151175831644588870e-7, 2.04426310338993978564e-15,
])


def mix_seed(seed: int) -> int:
    """SplitMix64 finalizer applied to ``seed + golden_gamma`` (mod 2**64)."""
    z = (int(seed) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@nb.njit(cache=True, nogil=True)
def _philox_block(c0, c1, c2, c3, k0, k1):
    # all arguments uint64 holding 32-bit values
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _LO32
        hi1 = p1 >> _S32
        lo1 = p1 & _LO32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _LO32
        k1 = (k1 + _W1) & _LO32
    return c0, c1, c2, c3


def philox4x32(counter, key):
    """Philox4x32-10 on a 4-word counter and 2-word key (32-bit words)."""
    words = [np.uint64(int(w) & 0xFFFFFFFF) for w in (*counter, *key)]
    return tuple(int(w) for w in _philox_block(*words))


@nb.njit(cache=True, nogil=True)
def _det_log(x):
    # log for positive finite x using only frexp and IEEE arithmetic
    m, e = math.frexp(x)
    if m < _SQRT_HALF:
        m *= 2.0
        e -= 1
    s = (m - 1.0) / (m + 1.0)
    z = s * s
    acc = _ATANH_COEFS[13]
    for k in range(12, -1, -1):
        acc = acc * z + _ATANH_COEFS[k]
    fe = float(e)
    return fe * _LN2_HI + (fe * _LN2_LO + 2.0 * s * acc)


@nb.njit(cache=True, nogil=True)
def _poly(coefs, x):
    acc = coefs[7]
    for k in range(6, -1, -1):
        acc = acc * x + coefs[k]
    return acc


@nb.njit(cache=True, nogil=True)
def _ppnd16(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-_det_log(r))
    if r <= 5.0:
        r -= 1.6
        z = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        z = _poly(_E, r) / _poly(_F, r)
    return -z if q < 0.0 else z


@nb.njit(cache=True, nogil=True)
def normal_at(k0, k1, path_index, position):
    """Standard normal number ``position`` of stream ``path_index``.

    ``k0``/``k1`` are the Philox key words (uint64 holding 32 bits).
    """
    idx = np.uint64(path_index)
    block = np.uint64(position) >> np.uint64(1)
    x0, x1, x2, x3 = _philox_block(
        block & _LO32, block >> _S32, idx & _LO32, idx >> _S32, k0, k1
    )
    if position & 1:
        word = x2 | (x3 << _S32)
    else:
        word = x0 | (x1 << _S32)
    u = (float(word >> _S11) + 0.5) * 1.1102230246251565e-16
    return _ppnd16(u)


@nb.njit(cache=True, nogil=True)
def fill_normals(k0, k1, path_index, start, out):
    """Write normals ``start .. start+len(out)-1`` of one stream into ``out``."""
    idx = np.uint64(path_index)
    n = out.shape[0]
    i = 0
    pos = start
    while i < n:
        block = np.uint64(pos) >> np.uint64(1)
        x0, x1, x2, x3 = _philox_block(
            block & _LO32, block >> _S32, idx & _LO32, idx >> _S32, k0, k1
        )
        if (pos & 1) == 0:
            word = x0 | (x1 << _S32)
            out[i] = _ppnd16((float(word >> _S11) + 0.5) * 1.1102230246251565e-16)
            i += 1
            pos += 1
            if i == n:
                break
        word = x2 | (x3 << _S32)
        out[i] = _ppnd16((float(word >> _S11) + 0.5) * 1.1102230246251565e-16)
        i += 1
        pos += 1


@nb.njit(cache=True)
def _ppnd16_array(p):
    out = np.empty_like(p)
    for i in range(p.shape[0]):
        out[i] = _ppnd16(p[i])
    return out


@nb.njit(cache=True)
def _det_log_array(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _det_log(x[i])
    return out


def inverse_normal_cdf(p) -> np.ndarray:
    """Vectorised AS241 quantile function for ``p`` in (0, 1)."""
    return _ppnd16_array(np.ascontiguousarray(np.atleast_1d(p), dtype=np.float64))


def key_words(seed: int) -> tuple[np.uint64, np.uint64]:
    key = mix_seed(seed)
    return np.uint64(key & 0xFFFFFFFF), np.uint64(key >> 32)


@dataclass
class PathStream:
    """One path's normal stream: ``(seed, path_index)`` plus a position counter.

    Single owner.  Distinct streams may be used from different threads.
    """

    seed: int
    path_index: int
    position: int = 0
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.path_index < 0:
            raise ValueError(f"path_index must be non-negative, got {self.path_index}")
        if self.position < 0:
            raise ValueError("position must be non-negative")
        self._key = key_words(self.seed)

    @property
    def key(self) -> tuple[np.uint64, np.uint64]:
        return self._key

    def next_normal(self) -> float:
        z = normal_at(self._key[0], self._key[1], self.path_index, self.position)
        self.position += 1
        return float(z)

    def normals(self, count: int) -> np.ndarray:
        """Next ``count`` normals; advances the position by ``count``."""
        out = np.empty(int(count))
        fill_normals(self._key[0], self._key[1], self.path_index, self.position, out)
        self.position += int(count)
        return out


def substream(seed: int, path_index: int) -> PathStream:
    """Fresh stream for ``path_index`` under master ``seed``, at position 0."""
    return PathStream(int(seed), int(path_index))


def next_normal(stream: PathStream) -> float:
    return stream.next_normal()
