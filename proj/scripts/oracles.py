#!/usr/bin/env python3
"""Independent reference values for the unit tests.

Re-derives the frozen conventions (SplitMix64 counter stream, LSB-first bits,
rejection sampling, virtual Fisher-Yates, GF(2^m) polynomial families, the
pattern matrix index map) with plain Python integers and prints
tests/unit/golden_values.hpp. Run once; the header is checked in.
"""
import math
import sys

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from gen_irreducibles import is_irreducible, lowest  # noqa: E402

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class Bits:
    """Bit stream: word t is mix(seed + t * GAMMA) for t = 1, 2, ...; LSB first."""

    def __init__(self, seed=0, tape=None):
        self.seed = seed
        self.tape = tape
        self.pos = 0  # global bit position

    def bit(self):
        if self.tape is not None:
            b = self.tape[self.pos]
        else:
            word = mix((self.seed + (self.pos // 64 + 1) * GAMMA) & MASK)
            b = (word >> (self.pos % 64)) & 1
        self.pos += 1
        return b

    def bits(self, k):
        return sum(self.bit() << i for i in range(k))

    def uniform(self, m):
        if m == 1:
            return 0
        b = (m - 1).bit_length()
        while True:
            v = self.bits(b)
            if v < m:
                return v

    def subset(self, n, k):
        a = list(range(n))
        for t in range(k):
            r = t + self.uniform(n - t)
            a[t], a[r] = a[r], a[t]
        return sorted(x + 1 for x in a[:k])

    def sign(self):
        return -1 if self.bit() else 1


def derive(seed, key):
    return mix(seed ^ mix((key + GAMMA) & MASK))


class Field:
    def __init__(self, m):
        self.m = m
        self.poly = lowest(m)
        assert is_irreducible(self.poly)

    def mul(self, a, b):
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
        for d in range(r.bit_length() - 1, self.m - 1, -1):
            if (r >> d) & 1:
                r ^= self.poly << (d - self.m)
        return r

    def poly_eval(self, coeffs, x):
        # coeffs[t] multiplies x^t
        acc, xp = 0, 1
        for c in coeffs:
            acc ^= self.mul(c, xp)
            xp = self.mul(xp, x)
        return acc


def ceil_log2(v):
    return (v - 1).bit_length()


def pattern(n, src):
    s = ceil_log2(n)
    m1, m2, k1 = max(3, 2 * s), max(3, s), 2 * s
    f1, f2 = Field(m1), Field(m2)
    c1 = [src.bits(m1) for _ in range(k1)]
    c2 = [src.bits(m2) for _ in range(4 * n)]
    c3 = [src.bits(m2) for _ in range(4 * n)]

    def entry(i, j):
        b1 = f1.poly_eval(c1, (i << s) | j) & 1
        b2 = f2.poly_eval(c2[4 * i:4 * i + 4], j) & 1
        b3 = f2.poly_eval(c3[4 * j:4 * j + 4], i) & 1
        return -1 if b1 ^ b2 ^ b3 else 1

    return entry


def cpp_array(name, ctype, values, per_line=8):
    body = []
    for i in range(0, len(values), per_line):
        body.append("    " + ", ".join(values[i:i + per_line]) + ",")
    return f"inline constexpr {ctype} {name}[{len(values)}] = {{\n" + "\n".join(body) + "\n};\n"


def main():
    out = ["#pragma once", "", "// Generated by scripts/oracles.py. Do not edit by hand.", "",
           "#include <cstdint>", "", "namespace golden {", ""]

    # Stream words and the first bits.
    src = Bits(42)
    words = [src.bits(64) for _ in range(3)]
    out.append(cpp_array("kSeed42Words", "std::uint64_t", [f"0x{w:016x}ULL" for w in words], 3))

    src = Bits(7)
    ints = [src.uniform(10) for _ in range(20)]
    out.append(cpp_array("kSeed7Uniform10", "std::uint64_t", [str(v) for v in ints], 10))
    out.append(f"inline constexpr std::uint64_t kSeed7Uniform10Bits = {src.pos};\n")

    src = Bits(3)
    subs = [src.subset(100, 8) for _ in range(3)]
    out.append(cpp_array("kSeed3Subsets100of8", "std::uint32_t", [str(v) for s in subs for v in s], 8))
    out.append(f"inline constexpr std::uint64_t kSeed3SubsetBits = {src.pos};\n")

    out.append(f"inline constexpr std::uint64_t kDerive99Key5 = 0x{derive(99, 5):016x}ULL;\n")

    # Field products.
    prods = []
    for m, a, b in [(3, 5, 6), (8, 0x57, 0x83), (13, 0x1234, 0x0abc), (32, 0xdeadbeef, 0x12345678),
                    (64, 0x0123456789abcdef, 0xfedcba9876543210)]:
        prods.append(f"{{{m}, 0x{a:x}ULL, 0x{b:x}ULL, 0x{Field(m).mul(a, b):x}ULL}}")
    out.append("struct FieldProduct {\n  unsigned m;\n  std::uint64_t a, b, product;\n};\n")
    out.append(cpp_array("kFieldProducts", "FieldProduct", prods, 1))

    # A 4-wise family over GF(8) drawn from seed 7, and its signs at all 8 points.
    src = Bits(7)
    f = Field(3)
    coeffs = [src.bits(3) for _ in range(4)]
    signs = [-1 if f.poly_eval(coeffs, x) & 1 else 1 for x in range(8)]
    out.append(cpp_array("kSeed7Family4Coeffs", "std::uint64_t", [str(c) for c in coeffs], 4))
    out.append(cpp_array("kSeed7Family4Signs", "int", [str(s) for s in signs], 8))

    # Pattern matrices.
    src = Bits(5)
    e = pattern(8, src)
    out.append(cpp_array("kPatternN8Seed5", "int", [str(e(i, j)) for i in range(8) for j in range(8)], 8))
    out.append(f"inline constexpr std::uint64_t kPatternN8Seed5Bits = {src.pos};\n")

    src = Bits(1)
    n = 256
    e = pattern(n, src)
    total = 0
    weighted = 0
    for i in range(n):
        for j in range(n):
            v = e(i, j)
            total += v
            weighted += v * ((31 * i + 17 * j) % 101)
    out.append(f"inline constexpr long long kPatternN256Seed1Sum = {total};")
    out.append(f"inline constexpr long long kPatternN256Seed1Weighted = {weighted};\n")

    # Full perturbation draw order for n = 16, K = 2, L = 6, seed 11.
    n, K = 16, 2
    src = Bits(11)
    pattern(n, src)
    d1 = [src.sign() for _ in range(n)]
    d2 = [src.sign() for _ in range(n)]
    rows, sg = [], []
    for _ in range(n):
        J = src.subset(n, K)
        rows += [j - 1 for j in J]
        sg += [src.sign() for _ in range(K)]
    out.append(cpp_array("kPerturbN16Seed11D1", "int", [str(v) for v in d1], 16))
    out.append(cpp_array("kPerturbN16Seed11D2", "int", [str(v) for v in d2], 16))
    out.append(cpp_array("kPerturbN16Seed11Rows", "std::uint32_t", [str(v) for v in rows], 16))
    out.append(cpp_array("kPerturbN16Seed11Signs", "int", [str(v) for v in sg], 16))
    out.append(f"inline constexpr std::uint64_t kPerturbN16Seed11Bits = {src.pos};\n")

    # Tape reproducing the illustrated hashing matrix: n = 8, K = 2, L = 3.
    J = [{1, 5}, {1, 6}, {1, 7}, {1, 8}, {2, 5}, {3, 6}, {4, 7}, {2, 8}]
    tape = []
    for i, target in enumerate(J):
        found = None
        for c0 in range(8):
            for c1 in range(7):
                a = list(range(8))
                a[0], a[c0] = a[c0], a[0]
                a[1], a[1 + c1] = a[1 + c1], a[1]
                if {a[0] + 1, a[1] + 1} == target:
                    found = (c0, c1)
                    break
            if found:
                break
        tape += [(found[0] >> b) & 1 for b in range(3)]
        tape += [(found[1] >> b) & 1 for b in range(3)]
        tape += [(i + l) % 2 for l in range(2)]  # sign bit 1 means -1
    check = Bits(tape=tape)
    for i, target in enumerate(J):
        assert set(check.subset(8, 2)) == target
        check.bits(2)
    out.append(f'inline constexpr const char* kIllustratedTape = "{"".join(map(str, tape))}";\n')

    out.append(f"inline constexpr double kHeavyBoundN8K2L3 = {8 * math.exp(-2) * (2 * math.e / 3) ** 3!r};\n")

    out.append("}  // namespace golden")
    print("\n".join(out))


if __name__ == "__main__":
    main()
