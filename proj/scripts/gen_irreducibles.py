#!/usr/bin/env python3
"""Emit the lowest-weight irreducible polynomial over GF(2) for degrees 3..64.

Trinomials x^m + x^a + 1 with the smallest a are preferred; otherwise
pentanomials x^m + x^a + x^b + x^c + 1 with a > b > c, taking the smallest a
and then the largest (b, c). Output is the low part (without the x^m term) as a hex constant.
"""
import itertools


def pmod(a, f):
    df = f.bit_length() - 1
    while a.bit_length() - 1 >= df:
        a ^= f << (a.bit_length() - 1 - df)
    return a


def pmulmod(a, b, f):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> (f.bit_length() - 1):
            a ^= f
    return r


def pgcd(a, b):
    while b:
        a, b = b, pmod(a, b)
    return a


def prime_factors(m):
    out, p = set(), 2
    while p * p <= m:
        while m % p == 0:
            out.add(p)
            m //= p
        p += 1
    if m > 1:
        out.add(m)
    return out


def is_irreducible(f):
    """Rabin's test."""
    m = f.bit_length() - 1

    def x_pow_2k(k):
        y = 2
        for _ in range(k):
            y = pmulmod(y, y, f)
        return y

    if x_pow_2k(m) != 2:
        return False
    for q in prime_factors(m):
        if pgcd(f, x_pow_2k(m // q) ^ 2) != 1:
            return False
    return True


def lowest(m):
    for a in range(1, m):
        f = (1 << m) | (1 << a) | 1
        if is_irreducible(f):
            return f
    for a in range(3, m):
        for b, c in itertools.combinations(range(a - 1, 0, -1), 2):
            f = (1 << m) | (1 << a) | (1 << b) | (1 << c) | 1
            if is_irreducible(f):
                return f
    raise RuntimeError(m)


if __name__ == "__main__":
    for m in range(3, 65):
        f = lowest(m)
        print(f"    0x{f ^ (1 << m):x}ULL,  // m = {m}")
