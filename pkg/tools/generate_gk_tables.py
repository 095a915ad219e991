"""Regenerate the nested normal-weight quadrature tables frozen in
``sgbasket/gk_tables.py``.

Construction: successive Patterson extensions of the 1-point rule {0} for
the standard normal weight, adding 2, 6, 10, 16 points per stage to reach
1 / 3 / 9 / 19 / 35 points.  Each extension polynomial E_m (monic, even)
satisfies

    int E_m(x) x^k W(x) phi(x) dx = 0    for k = 0 .. m-1,

where W is the node polynomial of the current rule and phi the standard
normal density.  Weights solve the symmetric moment system on the combined
node set.  Exactness degrees 1 / 5 / 15 / 29 / 51 and bit-exact nesting are
asserted before anything is printed.

Run from the repository root:

    python tools/generate_gk_tables.py

and compare the printed table (and SHA-256 checksum) against
``src/sgbasket/gk_tables.py``.  Requires mpmath (dev extra).
"""

from __future__ import annotations

import hashlib

import mpmath as mp

mp.mp.dps = 80

STAGE_ADDITIONS = (2, 6, 10, 16)
EXPECTED_DEGREE = {1: 1, 3: 5, 9: 15, 19: 29, 35: 51}


def gauss_moment(k: int) -> mp.mpf:
    """E[x^k] for the standard normal: (k-1)!! for even k, else 0."""
    if k % 2:
        return mp.mpf(0)
    return mp.fac2(k - 1) if k > 0 else mp.mpf(1)


def poly_mul(a, b):
    out = [mp.mpf(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def poly_moment(c):
    # integral of poly (ascending coeffs) against phi
    return mp.fsum(ci * gauss_moment(i) for i, ci in enumerate(c))


def extend(node_poly, m: int):
    """Extension polynomial adding m points to the rule with node_poly."""
    # E = x^m + sum_{j even < m} c_j x^j ; orthogonality only binds for odd k
    assert m % 2 == 0
    free = list(range(0, m, 2))
    ks = list(range(1, m, 2))
    a = mp.matrix(len(ks), len(free))
    rhs = mp.matrix(len(ks), 1)
    for row, k in enumerate(ks):
        xk_w = poly_mul([mp.mpf(0)] * k + [mp.mpf(1)], node_poly)
        for col, j in enumerate(free):
            xj = [mp.mpf(0)] * j + [mp.mpf(1)]
            a[row, col] = poly_moment(poly_mul(xj, xk_w))
        lead = [mp.mpf(0)] * m + [mp.mpf(1)]
        rhs[row] = -poly_moment(poly_mul(lead, xk_w))
    sol = mp.lu_solve(a, rhs)
    ext = [mp.mpf(0)] * (m + 1)
    ext[m] = mp.mpf(1)
    for col, j in enumerate(free):
        ext[j] = sol[col]
    return ext


def roots_even_poly(coeffs):
    """Positive roots of an even polynomial via u = x^2."""
    m = len(coeffs) - 1
    cu = [coeffs[2 * i] for i in range(m // 2 + 1)]
    roots = mp.polyroots(list(reversed(cu)), maxsteps=200, extraprec=120)
    out = []
    for u in roots:
        assert abs(mp.im(u)) < mp.mpf(10) ** (-40), u
        u = mp.re(u)
        assert u > 0, u
        out.append(mp.sqrt(u))
    return out


def weights_for(nodes):
    """Interpolatory weights by symmetric even-moment matching."""
    pos = sorted(x for x in nodes if x > 0)
    has_zero = any(x == 0 for x in nodes)
    vals = ([mp.mpf(0)] if has_zero else []) + pos
    n = len(vals)
    a = mp.matrix(n, n)
    rhs = mp.matrix(n, 1)
    for k in range(n):
        for j, x in enumerate(vals):
            a[k, j] = (mp.mpf(2) if x > 0 else mp.mpf(1)) * x ** (2 * k)
        rhs[k] = gauss_moment(2 * k)
    w = mp.lu_solve(a, rhs)
    out = []
    for j, x in enumerate(vals):
        if x == 0:
            out.append((mp.mpf(0), w[j]))
        else:
            out.append((x, w[j]))
            out.append((-x, w[j]))
    return sorted(out)


def build_stages():
    node_poly = [mp.mpf(0), mp.mpf(1)]  # nodes {0}
    stages = [[(mp.mpf(0), mp.mpf(1))]]
    for m_add in STAGE_ADDITIONS:
        ext = extend(node_poly, m_add)
        node_poly = poly_mul(node_poly, ext)
        assert node_poly[0] == 0  # odd polynomial, factor x out
        xs = roots_even_poly(node_poly[1:])
        nodes = [mp.mpf(0)] + [x for p in xs for x in (p, -p)]
        stages.append(weights_for(nodes))
    return stages


def verify(stages):
    for stage in stages:
        n = len(stage)
        deg = EXPECTED_DEGREE[n]
        for k in range(0, deg + 1, 2):
            q = mp.fsum(w * x**k for x, w in stage)
            ref = gauss_moment(k)
            err = abs(q - ref) / max(1, abs(ref))
            assert err < mp.mpf(10) ** (-45), (n, k, err)
        # the next even degree must NOT be integrated exactly
        k = deg + 1 if (deg + 1) % 2 == 0 else deg + 2
        q = mp.fsum(w * x**k for x, w in stage)
        assert abs(q - gauss_moment(k)) / abs(gauss_moment(k)) > mp.mpf(10) ** (-30), n
        print(f"n={n:2d}: exact through degree {deg}, degree {k} inexact as expected")
    for prev, cur in zip(stages, stages[1:]):
        prev_set = {mp.nstr(x, 30) for x, _ in prev}
        cur_set = {mp.nstr(x, 30) for x, _ in cur}
        assert prev_set <= cur_set, "nesting violated"
    print("nesting ok")


def main():
    stages = build_stages()
    verify(stages)
    blob = []
    print("\nfloat64 tables:")
    for stage in stages:
        n = len(stage)
        xs = [repr(float(x)) for x, _ in stage]
        ws = [repr(float(w)) for _, w in stage]
        blob.extend(xs)
        blob.extend(ws)
        print(f"  {n}: nodes   {', '.join(xs)}")
        print(f"  {n}: weights {', '.join(ws)}")
    checksum = hashlib.sha256("\n".join(blob).encode()).hexdigest()
    print(f"\nSHA-256 over decimal reprs: {checksum}")


if __name__ == "__main__":
    main()
