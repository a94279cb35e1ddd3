"""Reference values for the C++ tests.

Joint k-statistics are obtained by polarisation: the univariate k-statistic
(power-sum form) of u = t1*x + t2*y + t3*z is a polynomial in t whose
coefficients are multinomial multiples of the joint k-statistics.
"""
from fractions import Fraction
from math import factorial
import itertools

import sympy as sp
from scipy import stats

ROWS = [
    (3, 1, 4), (1, 5, 9), (2, 6, 5), (3, 5, 8), (9, 7, 9), (3, 2, 3),
    (8, 4, 6), (2, 6, 4), (3, 3, 8), (3, 2, 7), (9, 5, 0), (2, 8, 8),
]


def k_univariate(values, r):
    n = sp.Integer(len(values))
    s = [None] + [sum(v**p for v in values) for p in range(1, 5)]
    if r == 1:
        return s[1] / n
    if r == 2:
        return (n * s[2] - s[1]**2) / (n * (n - 1))
    if r == 3:
        return (2 * s[1]**3 - 3 * n * s[1] * s[2] + n**2 * s[3]) / (n * (n - 1) * (n - 2))
    if r == 4:
        return (-6 * s[1]**4 + 12 * n * s[1]**2 * s[2] - 3 * n * (n - 1) * s[2]**2
                - 4 * n * (n + 1) * s[1] * s[3] + n**2 * (n + 1) * s[4]) / (n * (n - 1) * (n - 2) * (n - 3))
    raise ValueError(r)


def joint_k(alpha):
    t = sp.symbols("t0:3")
    u = [sum(t[j] * row[j] for j in range(3)) for row in ROWS]
    r = sum(alpha)
    poly = sp.Poly(sp.expand(k_univariate(u, r)), *t)
    coeff = poly.coeff_monomial(sp.Mul(*[t[j]**alpha[j] for j in range(3)]))
    multinom = factorial(r)
    for a in alpha:
        multinom //= factorial(a)
    return sp.nsimplify(coeff / multinom)


if __name__ == "__main__":
    for r in range(1, 5):
        for alpha in itertools.product(range(r + 1), repeat=3):
            if sum(alpha) == r:
                v = joint_k(alpha)
                print(f"{{{{{alpha[0]}, {alpha[1]}, {alpha[2]}}}, {float(v)!r}}},  // {v}")
    for t, dof in [(2.0, 10), (-3.5, 29), (0.25, 4), (12.0, 49)]:
        print("t", t, dof, repr(2 * stats.t.sf(abs(t), dof)))
    for q, i, beta, gamma in [(5, 3, 0.05, 0.15), (8, 3, 0.05, 0.15), (6, 4, 0.05, 0.15), (10, 3, 0.2, 0.05), (3, 3, 0.05, 0.15)]:
        trials = int(sp.binomial(q, i))
        best = 0
        for tt in range(0, trials + 1):
            if stats.binom.cdf(tt, trials, 1 - beta) < gamma:
                best = tt
        print("thr", q, i, beta, gamma, best)
