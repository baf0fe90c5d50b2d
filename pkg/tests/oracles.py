"""Independent reference computations used by the tests.

Nothing here calls into the package's force or series code; each function
restates the underlying formula in the most direct way available.
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def mp_accel(position, mu, beta, ca, sa, cg, sg):
    """Rotating-frame acceleration (gravity + centrifugal + sail) in 40-digit arithmetic.

    The sail normal is built from explicit cross products with the Sun-sail
    line, not from the component formulas the package uses.
    """
    MU = mp.mpf(mu)
    x, y, z = (mp.mpf(v) for v in position)
    r1v = [x + MU, y, z]
    r2v = [x - 1 + MU, y, z]
    r1 = mp.sqrt(sum(c * c for c in r1v))
    r2 = mp.sqrt(sum(c * c for c in r2v))
    acc = [x, y, mp.mpf(0)]
    for i in range(3):
        acc[i] -= (1 - MU) * r1v[i] / r1**3 + MU * r2v[i] / r2**3
    if beta == 0 or ca == 0:
        return acc
    rhat = [c / r1 for c in r1v]
    zhat = [0, 0, 1]

    def cross(a, b):
        return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]

    def unit(a):
        n = mp.sqrt(sum(c * c for c in a))
        return [c / n for c in a]

    e1 = unit(cross(rhat, zhat))
    e2 = unit(cross(cross(rhat, zhat), rhat))
    ca, sa, cg, sg = (mp.mpf(v) for v in (ca, sa, cg, sg))
    n = [ca * rhat[i] + sa * sg * e1[i] + sa * cg * e2[i] for i in range(3)]
    dot = sum(rhat[i] * n[i] for i in range(3))
    k = mp.mpf(beta) * (1 - MU) * dot**2 / r1**2
    return [acc[i] + k * n[i] for i in range(3)]


def mp_jacobian(position, *args, h="1e-20"):
    h = mp.mpf(h)
    cols = []
    for c in range(3):
        p = [mp.mpf(v) for v in position]
        m = list(p)
        p[c] += h
        m[c] -= h
        ap, am = mp_accel(p, *args), mp_accel(m, *args)
        cols.append([(ap[r] - am[r]) / (2 * h) for r in range(3)])
    return np.array([[float(cols[c][r]) for c in range(3)] for r in range(3)])


def collinear_bisection(mu, index, lo, hi, iters=200):
    """Root of the collinear equilibrium condition by plain bisection in 40 digits."""
    MU = mp.mpf(mu)

    def f(x):
        r1 = x + MU
        r2 = x - 1 + MU
        return x - (1 - MU) * r1 / abs(r1) ** 3 - MU * r2 / abs(r2) ** 3

    a, b = mp.mpf(lo), mp.mpf(hi)
    fa = f(a)
    for _ in range(iters):
        m = (a + b) / 2
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return float((a + b) / 2)


def direct_trig_product(a_terms, b_terms, order):
    """Product of two term lists ``{(i,j,k,m,p,q): (c, s)}`` by expanding every pair with
    product-to-sum identities; returns a dict keyed by the raw (unfolded) harmonic."""
    out = {}

    def add(key, c, s):
        cc, ss = out.get(key, (0.0, 0.0))
        out[key] = (cc + c, ss + s)

    for (ia, ja, ka, ma, pa, qa), (ca, sa) in a_terms.items():
        for (ib, jb, kb, mb, pb, qb), (cb, sb) in b_terms.items():
            mono = (ia + ib, ja + jb, ka + kb, ma + mb)
            if sum(mono) > order:
                continue
            plus = mono + (pa + pb, qa + qb)
            minus = mono + (pa - pb, qa - qb)
            # (ca cos A + sa sin A)(cb cos B + sb sin B)
            add(plus, 0.5 * (ca * cb - sa * sb), 0.5 * (sa * cb + ca * sb))
            add(minus, 0.5 * (ca * cb + sa * sb), 0.5 * (sa * cb - ca * sb))
    return out


def eval_terms(terms, amps, thetas, lam_t):
    """Value of ``sum c cos(p t1 + q t2) + s sin(...)`` times amplitude monomials and ``exp((i-j) lam_t)``."""
    a1, a2, a3, a4 = amps
    t1, t2 = thetas
    total = 0.0
    for (i, j, k, m, p, q), (c, s) in terms.items():
        arg = p * t1 + q * t2
        total += a1**i * a2**j * a3**k * a4**m * np.exp((i - j) * lam_t) * (c * np.cos(arg) + s * np.sin(arg))
    return total
