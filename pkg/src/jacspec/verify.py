"""Invariant verification suite.

Runs the structural identities behind the spectral pipeline on a configured
source and reports measured maxima: recurrence residuals, the cross identity
for associated polynomials against forward substitution, the Green-block right
inverse, the resolvent-style reconstruction of P_*(x) from P_*(0), two-route
agreement for the second-kind functions, the kappa positivity and
monotonicity pattern, the per-term growth bound, trace reconciliation against
located eigenvalues, and the W W^T + I factorization of the ASC-II family.

An optional extended-precision mode (precision in decimal digits) reruns the
pure-recurrence identities through mpmath; residual maxima shrink accordingly,
which separates genuine identity failures from float64 round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import recurrence, second_kind
from .charfn import CharFnEvaluator
from .errors import AssumptionViolation, ConvergenceError
from .qseries import QParams, w_factorization_check
from .recurrence import (eval_q_assoc, green_block, jacobi_block, log_table,
                         plain_values, q_assoc_forward, recurrence_residuals,
                         resolvent_identity_check)
from .sources import ASC2Source, CoefficientSource, TableSource
from .spectrum import find_spectrum

_REAL_ZS = (0.0, 0.4, -1.0, 2.7)
_COMPLEX_Z = complex(1.3, 0.7)


@dataclass
class CheckResult:
    name: str
    passed: bool
    skipped: bool
    max_residual: float
    threshold: float
    note: str = ""

    @property
    def status(self) -> str:
        return "skip" if self.skipped else ("pass" if self.passed else "FAIL")


def _result(name, residual, threshold, note=""):
    return CheckResult(name=name, passed=residual <= threshold, skipped=False,
                       max_residual=residual, threshold=threshold, note=note)


def _skip(name, threshold, note):
    return CheckResult(name=name, passed=True, skipped=True,
                       max_residual=math.nan, threshold=threshold, note=note)


def _mp_context(digits):
    import mpmath
    ctx = mpmath.mp.clone()
    ctx.dps = digits
    return ctx


def _mp_coeffs(src, n_max, ctx):
    """Shifted coefficient lists (alphas, betas) as mpmath values."""
    if isinstance(src, ASC2Source):
        q, a, sh = ctx.mpf(src.q), ctx.mpf(src.a), ctx.mpf(src.shift)
        alphas = [ctx.sqrt(a * q ** (-2 * n - 1) * (1 - q ** (n + 1)))
                  for n in range(n_max + 1)]
        betas = [(a + 1) * q ** (-n) - sh for n in range(n_max + 1)]
        return alphas, betas
    alphas = [ctx.mpf(src.alpha(n)) for n in range(n_max + 1)]
    betas = [ctx.mpf(src.beta(n)) - ctx.mpf(src.shift) for n in range(n_max + 1)]
    return alphas, betas


def _n_cap(src, want):
    cap = src.max_pair_index
    return want if cap is None else min(want, cap - 1)


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------

def check_coefficient_positivity(src, n_max=40) -> CheckResult:
    n_stop = _n_cap(src, n_max)
    violations = [n for n in range(n_stop + 1) if not src.alpha(n) > 0.0]
    if not violations:
        return _result("coefficient_positivity", 0.0, 0.0)
    worst = max(-src.alpha(n) for n in violations)
    # any violation fails, including an exact zero; keep the magnitude visible
    return _result("coefficient_positivity", 1.0 + worst, 0.0,
                   f"nonpositive off-diagonal at n in {violations}")


def check_recurrence(src, n_max=40, threshold=1e-12, digits=0) -> CheckResult:
    n_stop = _n_cap(src, max(n_max, 2))
    zs = list(_REAL_ZS) + [_COMPLEX_Z]
    worst = 0.0
    if digits > 16:
        ctx = _mp_context(digits)
        alphas, betas = _mp_coeffs(src, n_stop + 1, ctx)
        for z in zs:
            zc = ctx.mpc(z) if isinstance(z, complex) else ctx.mpf(z)
            for second in (False, True):
                vals = plain_values(alphas, betas, zc, n_stop + 1,
                                    second_kind=second)
                for n in range(1, n_stop + 1):
                    t1 = alphas[n] * vals[n + 1]
                    t2 = (betas[n] - zc) * vals[n]
                    t3 = alphas[n - 1] * vals[n - 1]
                    den = abs(t1) + abs(t2) + abs(t3)
                    if den > 0:
                        worst = max(worst, float(abs(t1 + t2 + t3) / den))
    else:
        for z in zs:
            for second in (False, True):
                res = recurrence_residuals(src, z, n_stop, second_kind=second)
                worst = max(worst, max(res))
    return _result("recurrence_residual", worst, threshold,
                   f"n <= {n_stop}, {len(zs)} evaluation points")


def check_wronskian(src, m_max=12, threshold=1e-10, digits=0) -> CheckResult:
    m_stop = _n_cap(src, max(m_max, 3))
    zs = (0.0, -0.7, 0.4)
    worst = 0.0
    if digits > 16:
        ctx = _mp_context(digits)
        alphas, betas = _mp_coeffs(src, m_stop + 1, ctx)
        for z in zs:
            zc = ctx.mpf(z)
            p = plain_values(alphas, betas, zc, m_stop)
            qv = plain_values(alphas, betas, zc, m_stop, second_kind=True)
            for n in range(m_stop):
                fwd_prev, fwd = ctx.mpf(0), 1 / alphas[n]
                for m in range(n + 1, m_stop + 1):
                    cross = qv[m] * p[n] - p[m] * qv[n]
                    den = abs(qv[m] * p[n]) + abs(p[m] * qv[n]) + abs(fwd)
                    if den > 0:
                        worst = max(worst, float(abs(cross - fwd) / den))
                    if m <= m_stop - 1:
                        fwd_prev, fwd = fwd, ((zc - betas[m]) * fwd
                                              - alphas[m - 1] * fwd_prev) / alphas[m]
    else:
        for z in zs:
            for n in range(m_stop):
                for m in range(n + 1, m_stop + 1):
                    cross = eval_q_assoc(src, z, m, n)
                    fwd = q_assoc_forward(src, z, m, n)
                    den = abs(cross) + abs(fwd)
                    if den > 0:
                        worst = max(worst, abs(cross - fwd) / den)
    return _result("wronskian_identity", worst, threshold, f"m <= {m_stop}")


def check_green_identity(src, n_block=12, threshold=1e-10, digits=0) -> CheckResult:
    if isinstance(src, TableSource):
        n_block = min(n_block, src.max_pair_index + 1)
    if digits > 16:
        ctx = _mp_context(digits)
        alphas, betas = _mp_coeffs(src, n_block, ctx)
        p = plain_values(alphas, betas, ctx.mpf(0), n_block)
        qv = plain_values(alphas, betas, ctx.mpf(0), n_block, second_kind=True)
        g = [[qv[m] * p[n] - p[m] * qv[n] if m > n else ctx.mpf(0)
              for n in range(n_block)] for m in range(n_block)]
        worst = 0.0
        for m in range(n_block - 1):
            for n in range(n_block):
                acc = betas[m] * g[m][n]
                scale = abs(acc)
                if m > 0:
                    acc += alphas[m - 1] * g[m - 1][n]
                    scale += abs(alphas[m - 1] * g[m - 1][n])
                acc += alphas[m] * g[m + 1][n]
                scale += abs(alphas[m] * g[m + 1][n])
                target = 1 if m == n else 0
                worst = max(worst, float(abs(acc - target) / max(scale, 1)))
        return _result("green_identity", worst, threshold, f"N = {n_block}")
    g = green_block(src, n_block).entries
    t = jacobi_block(src, n_block)
    prod = t @ g
    resid = prod - np.eye(n_block)
    scale = np.maximum(np.abs(t) @ np.abs(g), 1.0)
    rel = np.abs(resid) / scale
    worst = float(np.max(rel[: n_block - 1, :]))  # boundary row excluded
    return _result("green_identity", worst, threshold, f"N = {n_block}")


def check_resolvent_identity(src, n_block=12, threshold=1e-10, gamma=None,
                             digits=0) -> CheckResult:
    if isinstance(src, TableSource):
        n_block = min(n_block, src.max_pair_index + 1)
    xs = [0.0, 0.1]
    if gamma is not None:
        xs.append(0.3 * gamma)
    if digits > 16:
        ctx = _mp_context(digits)
        alphas, betas = _mp_coeffs(src, n_block, ctx)
        worst = 0.0
        for x in xs:
            xv = ctx.mpf(x)
            p0 = plain_values(alphas, betas, ctx.mpf(0), n_block)
            qv = plain_values(alphas, betas, ctx.mpf(0), n_block, second_kind=True)
            px = plain_values(alphas, betas, xv, n_block)
            for n in range(n_block):
                acc = px[n] - p0[n]
                scale = abs(px[n]) + abs(p0[n])
                for kk in range(n):
                    gmn = qv[n] * p0[kk] - p0[n] * qv[kk]
                    acc -= xv * gmn * px[kk]
                    scale += abs(xv * gmn * px[kk])
                if scale > 0:
                    worst = max(worst, float(abs(acc) / scale))
        return _result("resolvent_identity", worst, threshold, f"N = {n_block}")
    worst = max(resolvent_identity_check(src, x, n_block) for x in xs)
    return _result("resolvent_identity", worst, threshold, f"N = {n_block}")


def check_two_route_second_kind(src, gamma, n_max=30, threshold=1e-10,
                                max_terms=20000) -> CheckResult:
    if src.is_finite:
        return _skip("second_kind_two_route", threshold,
                     "requires an unbounded coefficient family")
    zs = [0.0, -1.0, 0.3 * gamma]
    worst = 0.0
    for z in zs:
        table = second_kind.second_kind_values(src, z, n_max + 1, gamma=gamma,
                                               atol=1e-13, max_terms=max_terms)
        w0 = table.values[0]
        p = recurrence.values(src, z, n_max)
        qv = recurrence.values(src, z, n_max, second_kind=True)
        for n in range(n_max + 1):
            alt = w0 * p[n] + qv[n]
            den = abs(w0 * p[n]) + abs(qv[n]) + abs(table.values[n])
            if den > 0:
                worst = max(worst, abs(table.values[n] - alt) / den)
    return _result("second_kind_two_route", worst, threshold, f"n <= {n_max}")


def check_sign_patterns(src, n_max=40) -> CheckResult:
    n_stop = _n_cap(src, n_max)
    logs_p, sgn_p = log_table(src, 0.0, n_stop)
    logs_q, sgn_q = log_table(src, 0.0, n_stop, second_kind=True)
    bad = 0
    for n in range(n_stop + 1):
        want = -1.0 if n % 2 else 1.0
        if sgn_p[n] != want or logs_p[n] == -math.inf:
            bad += 1
        if n >= 1 and (sgn_q[n] != -want or logs_q[n] == -math.inf):
            bad += 1
    return _result("sign_patterns", float(bad), 0.0, f"n <= {n_stop}")


def check_kappa_monotonic(src, n_max=40, max_terms=20000) -> CheckResult:
    if src.is_finite:
        return _skip("kappa_positivity_monotonic", 0.0,
                     "requires an unbounded coefficient family")
    try:
        seq = second_kind.kappa_sequence(src, n_max + 1, max_terms=max_terms)
    except AssumptionViolation as exc:
        return CheckResult(name="kappa_positivity_monotonic", passed=False,
                           skipped=False, max_residual=math.inf, threshold=0.0,
                           note=str(exc))
    logs_p, _ = log_table(src, 0.0, n_max + 1)
    ratio_logs = [math.log(k) - 2.0 * logs_p[n] for n, k in enumerate(seq.kappas)]
    worst = 0.0
    for i in range(len(ratio_logs) - 1):
        worst = max(worst, ratio_logs[i + 1] - ratio_logs[i])
    # strict decrease means every successive log difference is negative
    return _result("kappa_positivity_monotonic", max(worst, 0.0), 0.0,
                   f"n <= {n_max}")


def check_per_term_bound(src, n_max=60, max_terms=20000) -> CheckResult:
    if src.is_finite:
        return _skip("per_term_growth_bound", 0.0,
                     "requires an unbounded coefficient family")
    ev = CharFnEvaluator(src, max_terms)
    ev._grow(n_max + 1)
    s_up = ev.kappa_sum_upper
    worst = 0.0
    for z in (-2.0, -0.5, 1.0, 3.0, complex(0.8, 1.1)):
        logs_z, _ = log_table(src, z, n_max)
        for n in range(n_max + 1):
            lhs = ev._log_w0[n] + logs_z[n]
            rhs = abs(z) * s_up + math.log(ev._kappa[n])
            worst = max(worst, lhs - rhs)
    # report the worst log excess as a multiplicative overshoot
    return _result("per_term_growth_bound", math.expm1(max(worst, 0.0)), 1e-10,
                   f"n <= {n_max}")


def check_trace_reconciliation(src, k=12, threshold=1e-6,
                               max_terms=20000) -> CheckResult:
    if src.is_finite:
        return _skip("trace_reconciliation", threshold,
                     "requires an unbounded coefficient family")
    try:
        tr = second_kind.trace_inverse(src, 1e-8, max_terms=max_terms)
    except ConvergenceError as exc:
        return CheckResult(name="trace_reconciliation", passed=False,
                           skipped=False, max_residual=math.inf,
                           threshold=threshold, note=str(exc))
    res = find_spectrum(src, k, 1e-10, confirm="oracle")
    inv = [1.0 / lam for lam in res.eigenvalues]
    ratio = inv[-1] / inv[-2]
    tail = inv[-1] * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
    gap = abs(tr.value - (math.fsum(inv) + tail))
    return _result("trace_reconciliation", gap, threshold,
                   f"{k} eigenvalues + geometric tail")


def check_w_factorization(src, n_block=10, threshold=1e-12, digits=0) -> CheckResult:
    if not isinstance(src, ASC2Source):
        return _skip("w_factorization", threshold,
                     "defined for the ASC-II family only")
    if digits > 16:
        ctx = _mp_context(digits)
        q, a = ctx.mpf(src.q), ctx.mpf(src.a)
        worst = ctx.mpf(0)
        scale = (a + 1) * q ** (-(n_block - 1))
        for m in range(n_block):
            for n in range(n_block):
                acc = ctx.mpf(1) if m == n else ctx.mpf(0)
                for kk in range(min(m, n) + 1):
                    wm = (ctx.sqrt(a) * q ** (-ctx.mpf(m) / 2) if kk == m
                          else q ** (-ctx.mpf(m) / 2) * ctx.sqrt(1 - q ** m)
                          if kk == m - 1 else ctx.mpf(0))
                    wn = (ctx.sqrt(a) * q ** (-ctx.mpf(n) / 2) if kk == n
                          else q ** (-ctx.mpf(n) / 2) * ctx.sqrt(1 - q ** n)
                          if kk == n - 1 else ctx.mpf(0))
                    acc += wm * wn
                if m == n:
                    acc -= (a + 1) * q ** (-n)
                elif abs(m - n) == 1:
                    mn = min(m, n)
                    acc -= ctx.sqrt(a * q ** (-2 * mn - 1) * (1 - q ** (mn + 1)))
                worst = max(worst, abs(acc))
        return _result("w_factorization", float(worst / scale), threshold,
                       f"N = {n_block}")
    gap = w_factorization_check(QParams(src.q, src.a), n_block)
    return _result("w_factorization", gap, threshold, f"N = {n_block}")


def run_suite(src: CoefficientSource, *, gamma: float | None = None,
              precision_digits: int = 0, max_terms: int = 20000) -> list[CheckResult]:
    """Run every applicable check and return the per-check results."""
    if gamma is None and isinstance(src, ASC2Source):
        gamma = src.natural_gamma
    digits = precision_digits if precision_digits and precision_digits > 16 else 0
    out = [
        check_coefficient_positivity(src),
        check_recurrence(src, digits=digits),
        check_wronskian(src, digits=digits),
        check_green_identity(src, digits=digits),
        check_resolvent_identity(src, gamma=gamma, digits=digits),
    ]
    pd_ok = out[0].passed
    if pd_ok:
        out.append(check_sign_patterns(src))
        if gamma is not None and not src.is_finite:
            out.append(check_two_route_second_kind(src, gamma,
                                                   max_terms=max_terms))
        else:
            out.append(_skip("second_kind_two_route", 1e-10,
                             "needs gamma and an unbounded family"))
        out.append(check_kappa_monotonic(src, max_terms=max_terms))
        out.append(check_per_term_bound(src, max_terms=max_terms))
        out.append(check_trace_reconciliation(src, max_terms=max_terms))
    else:
        note = "skipped: coefficient positivity failed"
        for name in ("sign_patterns", "second_kind_two_route",
                     "kappa_positivity_monotonic", "per_term_growth_bound",
                     "trace_reconciliation"):
            out.append(_skip(name, 0.0, note))
    out.append(check_w_factorization(src, digits=digits))
    return out
