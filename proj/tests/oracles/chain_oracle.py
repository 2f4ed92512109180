"""Dense exact hitting times for the harmonic and binary birth-death chains.

Usage: chain_oracle.py harmonic|binary K
Prints ell and h(ell) for ell = 0..K, solved with sympy's LU on the full
(K x K) system; also prints alpha_1..alpha_K by plain integer recursion.
"""
import sys
import sympy


def probs(kind, k):
    up, down = [], []
    for i in range(1, k + 1):
        up.append(sympy.Rational(k - i, k))
        down.append(sympy.Rational(1, k) if kind == "harmonic" else sympy.Rational(i, k))
    return up, down


def hitting_times(kind, k):
    up, down = probs(kind, k)
    A = sympy.zeros(k, k)
    b = sympy.ones(k, 1)
    for i in range(1, k + 1):
        r = i - 1
        A[r, r] = up[r] + down[r]
        if i > 1:
            A[r, r - 1] = -down[r]
        if i < k:
            A[r, r + 1] = -up[r]
    x = A.LUsolve(b)
    return [sympy.Integer(0)] + list(x)


def alphas(n):
    a = [None, 1]
    for l in range(2, n + 1):
        a.append(1 + (l - 1) * a[-1])
    return a[1:]


if __name__ == "__main__":
    kind, k = sys.argv[1], int(sys.argv[2])
    for ell, h in enumerate(hitting_times(kind, k)):
        print(ell, h)
    print("alpha", *alphas(k))
