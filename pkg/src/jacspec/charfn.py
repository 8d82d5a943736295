"""Characteristic entire function F(z) = 1 - z sum_n w_n(0) P_n(z).

Two independent evaluation methods are provided: the certified partial sum
(truncation error bounded through the per-term estimate
|w_n(0) P_n(z)| <= exp(|z| S) kappa_n with S an upper estimate of sum kappa)
and the heuristic ratio limit P_n(z)/P_n(0) -> F(z).  A Hadamard product over
known eigenvalues and the q-Pochhammer closed form for the ASC-II family round
out the cross-checking toolkit.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from .errors import AssumptionViolation, ConvergenceError
from .qseries import qpoch_inf
from .recurrence import _phase, _scaled_iter
from .second_kind import _RATIO_CAP, _RATIO_WINDOW, TailSeriesEngine, kappa_sequence
from .sources import CoefficientSource, require_infinite

# conservative working-precision constant for the summation noise estimate
_NOISE_EPS = 6e-15


@dataclass(frozen=True)
class CharFnValue:
    """One evaluation of the characteristic function.

    tail_bound is the certified truncation error for the partial-sum method
    and a successive-difference heuristic for the ratio method;
    noise_estimate approximates the floating-point summation error, which the
    truncation certificate does not cover.
    """

    z: float | complex
    value: float | complex
    tail_bound: float
    method: str
    terms_used: int
    certified: bool
    noise_estimate: float = 0.0

    def sign_certified(self) -> int:
        """+1/-1 when the real value's sign is beyond both error terms, else 0."""
        v = self.value.real if isinstance(self.value, complex) else self.value
        if self.certified and abs(v) > self.tail_bound + self.noise_estimate:
            return 1 if v > 0 else -1
        return 0


class CharFnEvaluator:
    """Shared-state evaluator: one kappa table serves many z evaluations.

    Table growth is serialized by a lock and published prefixes are never
    mutated, so evaluations may run from worker threads; for byte-identical
    results across threads, grow once up front (a single warm-up eval) and
    share read-only, since regrowing reanchors the backward sums at round-off
    level.
    """

    def __init__(self, src: CoefficientSource, max_terms: int = 20000):
        require_infinite(src, "characteristic function evaluation")
        self.src = src
        self.max_terms = max_terms
        self._engine = TailSeriesEngine(src, 0.0)
        self._grow_lock = threading.Lock()
        self._kappa: list[float] = []
        self._log_w0: list[float] = []
        self._sgn_w0: list[float] = []
        self._sum_upper: float | None = None

    # -- kappa table management -------------------------------------------

    def _grow(self, count: int) -> bool:
        """Extend the kappa table to ``count`` entries; False when the budget
        or the coefficient horizon is exceeded."""
        if count > self.max_terms:
            return False
        if count <= len(self._kappa):
            return True
        with self._grow_lock:
            if count <= len(self._kappa):
                return True
            try:
                seq = kappa_sequence(self.src, count, max_terms=self.max_terms,
                                     engine=self._engine)
            except ConvergenceError:
                return False
            lp = self._engine.log_p
            sp = self._engine.sgn_p
            log_w0 = [math.log(k) - lp[n] for n, k in enumerate(seq.kappas)]
            sgn_w0 = [sp[n] for n in range(count)]
            # publish each table with a single reference swap
            self._log_w0 = log_w0
            self._sgn_w0 = sgn_w0
            self._kappa = seq.kappas
            if self._sum_upper is None:
                self._sum_upper = seq.total_upper
            return True

    @property
    def kappa_sum_upper(self) -> float:
        """Certified-style upper estimate S for sum kappa_n."""
        if self._sum_upper is None:
            for base in (64, 32, 16, 8):
                if self._grow(base):
                    break
            if self._sum_upper is None:
                raise ConvergenceError(
                    "kappa table cannot reach a stable decay window"
                )
        return self._sum_upper

    def _tail_upper(self, n_terms: int) -> float | None:
        """Upper estimate of sum_{k>=n_terms} kappa_k from the observed decay.

        None when the table cannot be grown that far (budget or coefficient
        horizon); inf when it grew but the decay window is not below the cap.
        """
        if not self._grow(n_terms + _RATIO_WINDOW + 1):
            return None
        k = self._kappa
        window = [k[i + 1] / k[i] for i in range(n_terms - 1,
                                                 n_terms + _RATIO_WINDOW - 1)]
        r = max(window)
        if r >= _RATIO_CAP:
            return math.inf
        return k[n_terms] / (1.0 - r)

    def _achievable_terms(self, failed: int) -> int:
        """Largest kappa count that can actually be built, by bisection."""
        lo = len(self._kappa)
        hi = failed
        while hi - lo > 8:
            mid = (lo + hi) // 2
            if self._grow(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def plan_terms(self, z_abs: float, atol: float):
        """Smallest grown term count whose certified bound meets atol.

        Returns (n_terms, log_bound); n_terms is None when neither the term
        budget nor the coefficient horizon allows reaching atol, in which case
        log_bound reports the best achievable bound.
        """
        s_up = self.kappa_sum_upper
        log_target = math.log(atol)
        n = 16
        best = math.inf
        ceiling = self.max_terms - _RATIO_WINDOW - 1
        while True:
            if n > ceiling:
                n = ceiling
            if n < 4:
                return None, best
            t = self._tail_upper(n)
            if t is None:
                # budget or horizon hit; shrink the ceiling and retry there
                ceiling = min(ceiling,
                              self._achievable_terms(n + _RATIO_WINDOW + 1)
                              - _RATIO_WINDOW - 1)
                if ceiling < 4:
                    return None, best
                n = ceiling
                continue
            if 0.0 < t < math.inf:
                log_bound = math.log(z_abs) + z_abs * s_up + math.log(t) \
                    if z_abs > 0 else -math.inf
                best = min(best, log_bound)
                if log_bound <= log_target:
                    return n, log_bound
            if n >= ceiling:
                return None, best
            n = min(2 * n, ceiling)

    # -- evaluation ---------------------------------------------------------

    def eval(self, z, atol: float = 1e-12) -> CharFnValue:
        """Certified partial-sum evaluation of F(z)."""
        if z == 0:
            return CharFnValue(z=z, value=1.0, tail_bound=0.0,
                               method="partial_sum", terms_used=0, certified=True)
        z_abs = abs(z)
        n_terms, log_bound = self.plan_terms(z_abs, atol)
        certified = n_terms is not None
        if not certified:
            n_terms = min(self.max_terms, max(len(self._kappa), 64))
            self._grow(n_terms)
            n_terms = len(self._kappa)
        tail_bound = math.exp(log_bound) if log_bound < 709 else math.inf
        is_c = isinstance(z, complex)
        terms = []
        max_term = 0.0
        it = _scaled_iter(self.src, z)
        for n, u, v, ls in it:
            if n >= n_terms:
                break
            if u == 0:
                terms.append(0.0 if not is_c else 0.0 + 0.0j)
                continue
            lt = self._log_w0[n] + ls + math.log(abs(u))
            t = self._sgn_w0[n] * _phase(u) * (math.exp(lt) if lt < 709 else math.inf)
            terms.append(t)
            max_term = max(max_term, abs(t))
        if is_c:
            total = complex(math.fsum(t.real for t in terms),
                            math.fsum(t.imag for t in terms))
        else:
            total = math.fsum(terms)
        value = 1.0 - z * total
        noise = _NOISE_EPS * math.sqrt(max(n_terms, 1)) * (
            1.0 + z_abs * max_term + abs(value)
        )
        return CharFnValue(z=z, value=value, tail_bound=tail_bound,
                           method="partial_sum", terms_used=n_terms,
                           certified=certified, noise_estimate=noise)

    def certified_sign(self, x: float, atol: float,
                       atol_floor: float = 1e-280, shrink: float = 100.0):
        """Certified sign of F(x), tightening atol until the sign resolves.

        Returns (sign, CharFnValue); sign 0 means the sign could not be
        certified within the budget (value too close to zero).
        """
        a = atol
        last = None
        while True:
            val = self.eval(x, a)
            last = val
            s = val.sign_certified()
            if s != 0:
                return s, val
            if not val.certified or a <= atol_floor:
                return 0, last
            v = abs(val.value)
            # aim well below the magnitude we need to resolve
            a = max(min(a / shrink, v / 10.0), atol_floor)


def charfn_partial_sum(src: CoefficientSource, z, atol: float = 1e-12, *,
                       max_terms: int = 20000,
                       evaluator: CharFnEvaluator | None = None) -> CharFnValue:
    """F(z) by the certified partial sum (see CharFnEvaluator.eval)."""
    ev = evaluator if evaluator is not None else CharFnEvaluator(src, max_terms)
    return ev.eval(z, atol)


def charfn_ratio(src: CoefficientSource, z, n_max: int = 200) -> CharFnValue:
    """F(z) as the ratio limit P_n(z)/P_n(0) at n = n_max.

    The recorded tail_bound is the difference of the last two iterates, an
    empirical convergence indicator only; the result is never marked
    certified.  Signals a violated positivity assumption if P_n(0) = 0.
    """
    if z == 0:
        return CharFnValue(z=z, value=1.0, tail_bound=0.0, method="ratio_limit",
                           terms_used=0, certified=False)
    require_infinite(src, "ratio-limit evaluation")
    it_z = _scaled_iter(src, z)
    it_0 = _scaled_iter(src, 0.0)
    zero = 0.0 + 0.0j if isinstance(z, complex) else 0.0
    prev = None
    cur = None
    for (n, uz, vz, lz), (_, u0, v0, l0) in zip(it_z, it_0):
        if u0 == 0:
            raise AssumptionViolation(
                f"P_{n}(0) = 0: source cannot be positive definite"
            )
        prev = cur
        if uz == 0:
            cur = zero
        else:
            scale = lz - l0
            cur = (uz / u0) * math.exp(scale) if scale < 709 else math.inf * (uz / u0)
        if n == n_max:
            break
    diff = abs(cur - prev) if prev is not None else math.inf
    noise = _NOISE_EPS * math.sqrt(max(n_max, 1)) * (1.0 + abs(cur))
    return CharFnValue(z=z, value=cur, tail_bound=diff, method="ratio_limit",
                       terms_used=n_max, certified=False, noise_estimate=noise)


def hadamard_product(eigs, z, *, tail_ratio: float | None = None) -> CharFnValue:
    """prod_n (1 - z / lambda_n) over the supplied eigenvalues with a tail bound.

    The omitted factors are controlled through the geometric estimate of
    sum 1/lambda beyond the last eigenvalue; if no ratio can be inferred
    (fewer than two eigenvalues and no tail_ratio given) the value is exact
    over the given factors but flagged uncertified.
    """
    eigs = list(eigs)
    if not eigs:
        raise ValueError("need at least one eigenvalue")
    if any(e <= 0 for e in eigs):
        raise ValueError("eigenvalues must be positive")
    if any(b <= a for a, b in zip(eigs, eigs[1:])):
        raise ValueError("eigenvalues must be strictly increasing")
    value = 1.0 if not isinstance(z, complex) else 1.0 + 0.0j
    for lam in eigs:
        value *= 1.0 - z / lam
    if tail_ratio is None and len(eigs) >= 2:
        window = [eigs[i] / eigs[i + 1] for i in range(max(0, len(eigs) - 4),
                                                       len(eigs) - 1)]
        tail_ratio = max(window)
    if tail_ratio is None or not tail_ratio < 1.0:
        return CharFnValue(z=z, value=value, tail_bound=math.inf,
                           method="hadamard_product", terms_used=len(eigs),
                           certified=False)
    tail_inv_sum = (1.0 / eigs[-1]) * tail_ratio / (1.0 - tail_ratio)
    bound = abs(value) * math.expm1(abs(z) * tail_inv_sum)
    return CharFnValue(z=z, value=value, tail_bound=bound,
                       method="hadamard_product", terms_used=len(eigs),
                       certified=True)


def qpochhammer_reference(z, q: float, a: float):
    """Closed-form reference (z; q)_inf / (a; q)_inf for the ASC-II family."""
    num, _ = qpoch_inf(z, q)
    den, _ = qpoch_inf(a, q)
    return num / den
