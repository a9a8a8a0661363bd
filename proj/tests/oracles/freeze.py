#!/usr/bin/env python3
"""Freeze reference values for the C++ test suite.

Computes B-spline designs, penalty matrices, log densities, special
functions, forward log-likelihoods, stationary distributions and quantiles
with scipy / numpy / mpmath and writes them to oracle_data.hpp.  The header
is committed so the tests build without a Python toolchain; rerun this
script only when adding reference cases.
"""

import itertools

import numpy as np
from mpmath import mp
from scipy import stats
from scipy.integrate import quad
from scipy.interpolate import BSpline

mp.dps = 50


def clamped_knots(K, degree, lo, hi):
    """Clamped uniform knot vector: boundary knots repeated degree+1 times."""
    n_interior = K - degree - 1
    h = (hi - lo) / (n_interior + 1)
    interior = [lo + j * h for j in range(1, n_interior + 1)]
    return np.array([lo] * (degree + 1) + interior + [hi] * (degree + 1))


def design(K, degree, lo, hi, x):
    t = clamped_knots(K, degree, lo, hi)
    xa = np.asarray(x, dtype=float)
    return BSpline.design_matrix(xa, t, degree, extrapolate=False).toarray()


def design_deriv(K, degree, lo, hi, x, nu):
    t = clamped_knots(K, degree, lo, hi)
    xa = np.asarray(x, dtype=float)
    out = np.zeros((len(xa), K))
    for j in range(K):
        c = np.zeros(K)
        c[j] = 1.0
        out[:, j] = BSpline(t, c, degree, extrapolate=False).derivative(nu)(xa)
    return out


def integrals(K, degree, lo, hi):
    t = clamped_knots(K, degree, lo, hi)
    out = np.zeros(K)
    for j in range(K):
        c = np.zeros(K)
        c[j] = 1.0
        out[j] = BSpline(t, c, degree, extrapolate=False).integrate(lo, hi)
    return out


def second_derivative_penalty(K, degree, lo, hi):
    """S_jk = integral of B_j'' B_k'' over [lo, hi], per-span quadrature."""
    t = clamped_knots(K, degree, lo, hi)
    d2 = []
    for j in range(K):
        c = np.zeros(K)
        c[j] = 1.0
        d2.append(BSpline(t, c, degree, extrapolate=True).derivative(2))
    spans = np.unique(t)
    S = np.zeros((K, K))
    for j in range(K):
        for k in range(j, K):
            val = 0.0
            for a, b in zip(spans[:-1], spans[1:]):
                v, _ = quad(lambda u: d2[j](u) * d2[k](u), a, b, limit=200)
                val += v
            S[j, k] = S[k, j] = val
    return S


def cyclic_design(K, degree, lo, hi, x):
    """Extended uniform basis folded onto K wrapped columns."""
    h = (hi - lo) / K
    n_ext = K + degree
    t = np.array([lo + (j - degree) * h for j in range(K + 2 * degree + 1)])
    xa = np.asarray(x, dtype=float)
    y = lo + np.mod(xa - lo, hi - lo)
    ext = BSpline.design_matrix(y, t, degree, extrapolate=False).toarray()
    out = np.zeros((len(xa), K))
    for e in range(n_ext):
        out[:, (e - degree) % K] += ext[:, e]
    return out


def brute_force_loglik(delta, gammas, logp):
    """Exact path enumeration in 50-digit arithmetic.

    gammas holds one matrix per step into t = 2..T.
    """
    T, N = np.asarray(logp).shape
    p = [[mp.e ** mp.mpf(logp[t][i]) for i in range(N)] for t in range(T)]
    total = mp.mpf(0)
    for path in itertools.product(range(N), repeat=T):
        term = mp.mpf(delta[path[0]]) * p[0][path[0]]
        for t in range(1, T):
            term *= mp.mpf(gammas[t - 1][path[t - 1]][path[t]]) * p[t][path[t]]
        total += term
    return float(mp.log(total))


def vonmises_logpdf(x, loc, kappa):
    k = mp.mpf(kappa)
    v = k * mp.cos(mp.mpf(x) - mp.mpf(loc)) - mp.log(2 * mp.pi)
    return float(v - mp.log(mp.besseli(0, k)))


def fmt(v):
    return repr(float(v))


def emit_scalar(out, name, v):
    out.write(f"inline constexpr double {name} = {fmt(v)};\n")


def emit_vec(out, name, arr):
    vals = ", ".join(fmt(v) for v in arr)
    out.write(f"inline constexpr double {name}[{len(arr)}] = {{{vals}}};\n")


def emit_mat(out, name, m):
    m = np.asarray(m)
    rows = ",\n  ".join(
        "{" + ", ".join(fmt(v) for v in row) + "}" for row in m
    )
    out.write(
        f"inline constexpr double {name}[{m.shape[0]}][{m.shape[1]}] = {{\n"
        f"  {rows}}};\n"
    )


def main():
    rng = np.random.default_rng(20260816)
    out_path = "oracle_data.hpp"
    with open(out_path, "w") as out:
        out.write("// Generated by freeze.py; do not edit by hand.\n")
        out.write("#pragma once\n\nnamespace oracle {\n\n")

        # Clamped cubic basis, 8 functions on [0, 1].
        ax = [0.0, 0.05, 0.13, 0.2, 0.37, 0.5, 0.61, 0.8, 0.94, 1.0]
        emit_vec(out, "design_a_x", ax)
        emit_mat(out, "design_a", design(8, 3, 0.0, 1.0, ax))
        adx = [0.07, 0.23, 0.5, 0.77, 0.93]
        emit_vec(out, "design_a_dx", adx)
        emit_mat(out, "design_a_d1", design_deriv(8, 3, 0.0, 1.0, adx, 1))
        emit_mat(out, "design_a_d2", design_deriv(8, 3, 0.0, 1.0, adx, 2))
        emit_vec(out, "integrals_a", integrals(8, 3, 0.0, 1.0))
        emit_mat(out, "derivpen_a", second_derivative_penalty(8, 3, 0.0, 1.0))
        out.write("\n")

        # Clamped quadratic basis, 5 functions on [-2, 3].
        bx = [-2.0, -1.3, -0.01, 0.5, 1.7, 2.9, 3.0]
        emit_vec(out, "design_b_x", bx)
        emit_mat(out, "design_b", design(5, 2, -2.0, 3.0, bx))
        emit_vec(out, "integrals_b", integrals(5, 2, -2.0, 3.0))
        out.write("\n")

        # Cyclic cubic basis, 6 wrapped columns on [0, 2*pi).
        two_pi = 2.0 * np.pi
        emit_scalar(out, "cyclic_hi", two_pi)
        cx = [0.0, 0.9, 2.5, 4.0, 5.9, two_pi]
        emit_vec(out, "cyclic_x", cx)
        emit_mat(out, "cyclic_design", cyclic_design(6, 3, 0.0, two_pi, cx))
        out.write("\n")

        # Log densities: rows are (x, p1, p2, logpdf).
        gauss = []
        for x, m_, s in [(0.3, 0.0, 1.0), (-2.5, 1.0, 0.5),
                         (7.0, 5.0, 3.0), (1.0, 1.0, 10.0)]:
            gauss.append((x, m_, s, stats.norm.logpdf(x, loc=m_, scale=s)))
        emit_mat(out, "gauss_cases", gauss)

        gamma = []
        for (m_, s), x in itertools.product(
                [(2.0, 0.5), (1.0, 1.0), (5.0, 3.0)], [0.1, 2.2, 7.0]):
            shape = m_ * m_ / (s * s)
            scale = s * s / m_
            gamma.append((x, m_, s, stats.gamma.logpdf(x, a=shape,
                                                       scale=scale)))
        emit_mat(out, "gamma_cases", gamma)

        vonm = []
        for (loc, k), x in itertools.product(
                [(0.0, 0.5), (1.2, 2.0), (-0.7, 10.0), (0.0, 120.0),
                 (2.0, 700.0), (0.5, 0.0)], [-3.0, 0.3, 2.8]):
            vonm.append((x, loc, k, vonmises_logpdf(x, loc, k)))
        emit_mat(out, "vonmises_cases", vonm)
        out.write("\n")

        # Special functions.
        dpts = [0.1, 0.5, 1.0, 3.7, 12.0, 100.0]
        emit_vec(out, "digamma_x", dpts)
        emit_vec(out, "digamma_v", [float(mp.digamma(p)) for p in dpts])
        bpts = [0.1, 1.0, 3.0, 7.5, 20.0, 120.0, 700.0]
        emit_vec(out, "bessel_x", bpts)
        emit_vec(out, "log_i0_v",
                 [float(mp.log(mp.besseli(0, p))) for p in bpts])
        emit_vec(out, "i1_over_i0_v",
                 [float(mp.besseli(1, p) / mp.besseli(0, p)) for p in bpts])
        out.write("\n")

        # Forward log-likelihood, homogeneous: N = 2, T = 5.
        f1_delta = [0.3, 0.7]
        f1_gamma = [[0.9, 0.1], [0.2, 0.8]]
        f1_logp = np.round(rng.uniform(-3.0, 0.0, size=(5, 2)), 6)
        emit_vec(out, "fwd1_delta", f1_delta)
        emit_mat(out, "fwd1_gamma", f1_gamma)
        emit_mat(out, "fwd1_logp", f1_logp)
        emit_scalar(out, "fwd1_loglik",
                    brute_force_loglik(f1_delta, [f1_gamma] * 4, f1_logp))
        out.write("\n")

        # Forward log-likelihood, time-varying: N = 3, T = 4.
        f2_delta = [0.2, 0.5, 0.3]
        f2_gammas = []
        for _ in range(3):
            g = rng.uniform(0.05, 1.0, size=(3, 3))
            g /= g.sum(axis=1, keepdims=True)
            f2_gammas.append(g)
        f2_logp = np.round(rng.uniform(-4.0, 0.0, size=(4, 3)), 6)
        emit_vec(out, "fwd2_delta", f2_delta)
        emit_mat(out, "fwd2_gamma2", f2_gammas[0])
        emit_mat(out, "fwd2_gamma3", f2_gammas[1])
        emit_mat(out, "fwd2_gamma4", f2_gammas[2])
        emit_mat(out, "fwd2_logp", f2_logp)
        emit_scalar(out, "fwd2_loglik",
                    brute_force_loglik(f2_delta, f2_gammas, f2_logp))
        out.write("\n")

        # Stationary distribution of a random 3-state chain.
        g = np.round(rng.uniform(0.05, 1.0, size=(3, 3)), 4)
        g /= g.sum(axis=1, keepdims=True)
        A = np.vstack([g.T - np.eye(3), np.ones(3)])
        b = np.array([0.0, 0.0, 0.0, 1.0])
        delta, *_ = np.linalg.lstsq(A, b, rcond=None)
        emit_mat(out, "stat3_gamma", g)
        emit_vec(out, "stat3_delta", delta)
        out.write("\n")

        # Linear-interpolation quantiles (numpy method="linear").
        qv = [0.025, 0.25, 0.5, 0.75, 0.975]
        v1 = [3.2, -1.5, 7.7, 0.4, 2.2, 9.9, 5.1]
        v2 = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        emit_vec(out, "quant_q", qv)
        emit_vec(out, "quant_v1", v1)
        emit_vec(out, "quant_v1_vals",
                 [np.quantile(v1, q, method="linear") for q in qv])
        emit_vec(out, "quant_v2", v2)
        emit_vec(out, "quant_v2_vals",
                 [np.quantile(v2, q, method="linear") for q in qv])

        out.write("\n}  // namespace oracle\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
