"""Reference values frozen into the integration tests.

Everything here is computed with mpmath at 50 digits, directly from the
piecewise definition of the lacunary weight and from plain sums, without
reusing any closed form from the Rust crate. Run with `python3 oracle.py`.
"""
from mpmath import mp, mpf, quad

mp.dps = 50


def gquad(f, a, b, q=None):
    """Tanh-sinh quadrature. For an integrand behaving like (x - a)^(q - 1)
    the range is split geometrically towards `a` until the first piece holds
    less than 2^-90 of the mass; plain tanh-sinh loses ~1e-14 on these."""
    if q is None:
        return quad(f, [a, b])
    n = int(90 / q) + 1
    pts = [a] + [a + (b - a) * mpf(2) ** -j for j in range(n, -1, -1)]
    return quad(f, pts)


def sigma_branches(alpha, k):
    """Branches of sigma on level k as (length, g) with g a function of the
    distance t >= 0 from the branch's singular end (or from the left end)."""
    lo, hi = mpf(2) ** (-k - 1), mpf(2) ** (-k)
    c = mpf(2) ** (2 * k * (1 - alpha)) / alpha
    left, right = (1 + alpha) * lo, (1 - alpha) * hi
    return [
        (left - lo, lambda t: c * t ** (1 - alpha), True),
        (right - left, lambda t: (left + t) ** (alpha - 1), None),
        (hi - right, lambda t: c * t ** (1 - alpha), True),
    ]


def level(alpha, k):
    w = s = mpf(0)
    for length, g, spike in sigma_branches(alpha, k):
        s += gquad(g, 0, length, 2 - alpha if spike else None)
        w += gquad(lambda t: 1 / g(t), 0, length, alpha if spike else None)
    return w, s


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


alpha = mpf(1) / 4
for k in (0, 2, 3):
    w, s = level(alpha, k)
    show(f"alpha=1/4 level {k} w", w)
    show(f"alpha=1/4 level {k} sigma", s)
# Tails by summing 60 levels numerically (the remainder is below 2^-15 relative
# for sigma at alpha = 1/4, so sum the geometric remainder of the last level too).
w2, s2 = level(alpha, 2)
# Tail of sigma below 2^-2: twelve levels by quadrature, the rest as the
# geometric remainder of level 14 (levels scale by exactly 2^-alpha).
head = sum(level(alpha, k)[1] for k in range(2, 14))
show("alpha=1/4 tail 2 sigma", head + level(alpha, 14)[1] / (1 - mpf(2) ** (-alpha)))

alpha = mpf(1) / 16
for k in (0, 1, 5):
    w, s = level(alpha, k)
    show(f"alpha=1/16 level {k} w", w)
    show(f"alpha=1/16 level {k} sigma", s)

# Sum_{n<=N} n^2 2^(-n alpha) (1 - 2^(-alpha)) / alpha: the squared L2(w) norm
# of the step n on [2^-(n+1), 2^-n), 1 <= n <= N, for w = x^(alpha-1).
alpha = mpf(1) / 4
for n_levels in (10, 40):
    v = sum(mpf(n) ** 2 * mpf(2) ** (-n * alpha) for n in range(1, n_levels + 1)) * (1 - mpf(2) ** (-alpha)) / alpha
    show(f"counting l2 alpha=1/4 N={n_levels}", v)
    # The full counting function sum_j 1_[0,2^-j) also equals N below 2^-(N+1).
    bottom = mpf(n_levels) ** 2 * gquad(lambda x: x ** (alpha - 1), 0, mpf(2) ** (-n_levels - 1), alpha)
    show(f"full counting l2 alpha=1/4 N={n_levels}", v + bottom)
    v = max(mpf(n) ** 2 * mpf(2) ** (-n * alpha) / alpha for n in range(1, n_levels + 1))
    show(f"counting weak^2 alpha=1/4 N={n_levels}", v)

# Integral of x^(-3/4) over [0, 1/8].
show("x^(-3/4) on [0,1/8]", gquad(lambda x: x ** (-mpf(3) / 4), 0, mpf(1) / 8, mpf(1) / 4))
# Reverse Holder ratio for x^(-1/2) on [0,1], eps = 1/4.
lhs = gquad(lambda x: x ** (-mpf(5) / 8), 0, 1, mpf(3) / 8)
show("reverse holder ratio", lhs / (2 * mpf(2) ** (mpf(5) / 4)))
