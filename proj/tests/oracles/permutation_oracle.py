#!/usr/bin/env python3
"""MT19937-64 and the back-to-front Fisher-Yates shuffle, written from the published algorithm."""
import sys

M64 = (1 << 64) - 1


class MT64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & M64
        for i in range(1, 312):
            self.mt[i] = (6364136223846793005 * (self.mt[i - 1] ^ (self.mt[i - 1] >> 62)) + i) & M64
        self.idx = 312

    def twist(self):
        for i in range(312):
            x = (self.mt[i] & 0xFFFFFFFF80000000) | (self.mt[(i + 1) % 312] & 0x7FFFFFFF)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.idx = 0

    def next(self):
        if self.idx >= 312:
            self.twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & M64


def at_most(rng, bound):
    if bound == 0:
        return 0
    rng_range = bound + 1
    limit = M64 - M64 % rng_range
    while True:
        d = rng.next()
        if d < limit:
            return d % rng_range


def permutation(n, seed):
    p = list(range(n))
    rng = MT64(seed)
    for i in range(n, 1, -1):
        j = at_most(rng, i - 1)
        p[i - 1], p[j] = p[j], p[i - 1]
    return p


if __name__ == "__main__":
    r = MT64(5489)
    for _ in range(9999):
        r.next()
    assert r.next() == 9981545732273789042
    print(permutation(int(sys.argv[1]), int(sys.argv[2])))
