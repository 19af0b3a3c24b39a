"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream, step, tag, index)`` computed
with the Philox4x32-10 block cipher, vectorized over streams.  Rows of a
dataset (or trajectories) each own one stream, so results do not depend on
chunking, worker count or evaluation order.
"""

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85

# tags separating independent draw families within one stream
TAG_INITIAL = 1
TAG_GAUSS = 2
TAG_LEVY = 3
TAG_RELOCATE = 4
TAG_ISOTROPIC = 5


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    Parameters
    ----------
    counter : sequence of 4 arrays (or scalars) of 32-bit words
    key : pair of 32-bit words

    Returns
    -------
    tuple of 4 uint64 arrays holding 32-bit output words
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = int(key[0]) & 0xFFFFFFFF
    k1 = int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ np.uint64(k0), lo1,
                          hi0 ^ c3 ^ np.uint64(k1), lo0)
    return c0, c1, c2, c3


def _to_unit(a, b):
    # 53 random bits -> double strictly inside (0, 1)
    hi = (a >> np.uint64(5)).astype(np.float64)
    lo = (b >> np.uint64(6)).astype(np.float64)
    return (hi * 67108864.0 + lo + 0.5) / 9007199254740992.0


class CounterRNG:
    """Splittable counter-based generator keyed by a 64-bit master seed.

    ``uniform(streams, step, tag, count)`` returns an array of shape
    ``(len(streams), count)``; entry ``[r, i]`` depends only on
    ``(seed, streams[r], step, tag, i)``.
    """

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be in [0, 2**64)")
        self.seed = seed
        self._key = (seed & 0xFFFFFFFF, seed >> 32)

    def _blocks(self, streams, step, tag, nblocks):
        streams = np.asarray(streams, dtype=np.uint64)
        lo = streams & _MASK32
        hi = streams >> np.uint64(32)
        step = int(step)
        if step < 0 or step >= 2**32:
            raise ValueError("step out of range")
        out = []
        for b in range(nblocks):
            word3 = (int(tag) << 16) | b
            out.append(philox4x32((lo, hi, np.uint64(step), np.uint64(word3)), self._key))
        return out

    def uniform(self, streams, step, tag, count):
        streams = np.atleast_1d(np.asarray(streams, dtype=np.uint64))
        nblocks = (count + 1) // 2
        res = np.empty((streams.size, 2 * nblocks))
        for b, (w0, w1, w2, w3) in enumerate(self._blocks(streams, step, tag, nblocks)):
            res[:, 2 * b] = _to_unit(w0, w1)
            res[:, 2 * b + 1] = _to_unit(w2, w3)
        return res[:, :count]

    def normal(self, streams, step, tag, count):
        """Standard Gaussian draws via the Box-Muller transform."""
        pairs = (count + 1) // 2
        u = self.uniform(streams, step, tag, 2 * pairs)
        r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
        theta = 2.0 * np.pi * u[:, 1::2]
        z = np.empty((u.shape[0], 2 * pairs))
        z[:, 0::2] = r * np.cos(theta)
        z[:, 1::2] = r * np.sin(theta)
        return z[:, :count]
