"""Independent reference for the project PRNG: SplitMix64 seeding, xoshiro256**,
rejection-sampled bounded integers, Fisher-Yates shuffle, FNV-1a.

Prints the vectors frozen in tests/unit/test_random.cpp.
"""
import math

M = (1 << 64) - 1


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return z ^ (z >> 31)


def derive_seed(parent, stream):
    return mix64(mix64(parent) ^ ((stream * 0x9E3779B97F4A7C15 + 0x632BE59BD9B4E019) & M))


def fnv1a64(data: bytes):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & M
    return h


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


class Xoshiro:
    def __init__(self, seed):
        s = seed
        self.s = []
        for _ in range(4):
            s = (s + 0x9E3779B97F4A7C15) & M
            self.s.append(mix64(s))

    def next(self):
        s = self.s
        result = (rotl((s[1] * 5) & M, 7) * 9) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def uniform(self):
        return (self.next() >> 11) * 2.0**-53

    def below(self, bound):
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next()
            if r >= threshold:
                return r % bound

    def shuffle(self, items):
        for i in range(len(items), 1, -1):
            j = self.below(i)
            items[i - 1], items[j] = items[j], items[i - 1]


if __name__ == "__main__":
    r = Xoshiro(100)
    print("next(seed=100):", [hex(r.next()) for _ in range(4)])
    r = Xoshiro(0)
    print("next(seed=0):", [hex(r.next()) for _ in range(2)])
    r = Xoshiro(7)
    print("uniform(seed=7):", [repr(r.uniform()) for _ in range(3)])
    r = Xoshiro(7)
    print("below(10, seed=7):", [r.below(10) for _ in range(10)])
    r = Xoshiro(100)
    xs = list(range(10))
    r.shuffle(xs)
    print("shuffle(0..9, seed=100):", xs)
    print("fnv1a64('abc'):", hex(fnv1a64(b"abc")))
    print("fnv1a64(''):", hex(fnv1a64(b"")))
    print("derive_seed(100, 3):", hex(derive_seed(100, 3)))
    print("mix64(1):", hex(mix64(1)))
    print("split(400 records, seed=100) in-context head:")
    r = Xoshiro(100)
    idx = list(range(400))
    r.shuffle(idx)
    print(idx[:10], "test head:", idx[100:110])
