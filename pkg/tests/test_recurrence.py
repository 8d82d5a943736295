import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import jacspec as js
from conftest import (P1_AT_A_Q5, P3_AT_A_Q5, Q2_AT_A_Q5, mp_plain_recurrence,
                      random_pd_table)


def test_phat_initial_value(asc2_shifted):
    pair = js.eval_phat(asc2_shifted, 0.7, 0)
    assert pair.value == 1.0
    assert pair.log_mag == 0.0
    assert pair.sign_or_phase == 1.0


def test_phat_first_step():
    src = js.ASC2Source(q=0.5, a=0.5, shift=0.0)
    pair = js.eval_phat(src, 0.5, 1)
    assert pair.value == pytest.approx(P1_AT_A_Q5, rel=1e-14)


def test_phat_closed_form_third():
    src = js.ASC2Source(q=0.5, a=0.5, shift=0.0)
    pair = js.eval_phat(src, 0.5, 3)
    assert pair.value == pytest.approx(P3_AT_A_Q5, rel=1e-13)


def test_q_initial_values(asc2_shifted):
    assert js.eval_q(asc2_shifted, 0.7, 0).value == 0.0
    q1 = js.eval_q(asc2_shifted, -2.0, 1)
    assert q1.value == pytest.approx(math.sqrt(2.0), rel=1e-14)


def test_q_matches_tail_sum_formula():
    # Q_n(z) = (sum_{j<n} 1/(alpha_j P_j P_{j+1})) P_n(z), cross-checked
    src = js.ASC2Source(q=0.5, a=0.5, shift=0.0)
    z = 0.5
    p = js.recurrence.values(src, z, 3)
    alphas = [src.alpha(j) for j in range(2)]
    total = sum(1.0 / (alphas[j] * p[j] * p[j + 1]) for j in range(2))
    q2 = js.eval_q(src, z, 2).value
    assert q2 == pytest.approx(total * p[2], rel=1e-13)
    assert q2 == pytest.approx(Q2_AT_A_Q5, rel=1e-13)


@pytest.mark.parametrize("z", [0.0, 0.4, -1.0, 2.7, complex(1.3, 0.7)])
def test_recurrence_residual_asc2(asc2_shifted, z):
    res = js.recurrence_residuals(asc2_shifted, z, 40)
    assert max(res) <= 1e-12
    res_q = js.recurrence_residuals(asc2_shifted, z, 40, second_kind=True)
    assert max(res_q) <= 1e-12


def test_recurrence_residual_random_tables():
    rng = np.random.RandomState(7)
    for _ in range(5):
        src = random_pd_table(rng, 30)
        for z in (0.0, -0.6, 1.1):
            res = js.recurrence_residuals(src, z, 25)
            assert max(res) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(
    alphas=st.lists(st.floats(0.05, 20.0), min_size=10, max_size=10),
    betas=st.lists(st.floats(-10.0, 10.0), min_size=10, max_size=10),
    z=st.floats(-5.0, 5.0),
)
def test_recurrence_residual_property(alphas, betas, z):
    src = js.TableSource(alphas=alphas, betas=betas)
    res = js.recurrence_residuals(src, z, 8)
    assert max(res) <= 1e-12


def test_scaled_matches_mp_oracle_beyond_float_range():
    # growth ~100x per step overflows raw doubles near n = 154; the scaled
    # representation must still agree with a 60-digit plain evaluation
    src = js.TableSource(alphas=[0.01] * 200, betas=[1.0] * 200)
    pair = js.eval_phat(src, 3.0, 190)
    ref = mp_plain_recurrence(src, 3.0, 190, dps=60)[190]
    import mpmath
    assert pair.log_mag == pytest.approx(float(mpmath.log(abs(ref))), rel=1e-12)
    assert pair.sign_or_phase == mpmath.sign(ref)


def test_scaled_value_agrees_with_mp(asc2_shifted):
    for n in (5, 20, 60):
        pair = js.eval_phat(asc2_shifted, 0.3, n)
        ref = float(mp_plain_recurrence(asc2_shifted, 0.3, n)[n])
        assert pair.value == pytest.approx(ref, rel=1e-12)


def test_exact_zero_marker():
    # P_1(z) = (z - beta_0)/alpha_0 vanishes at z = beta_0
    src = js.TableSource(alphas=[1.0, 1.0, 1.0, 1.0], betas=[2.0, 3.0, 4.0, 5.0])
    pair = js.eval_phat(src, 2.0, 1)
    assert pair.is_zero
    assert pair.ratio is None
    assert pair.log_mag == -math.inf
    assert pair.value == 0.0
    # the pair keeps P_2 reconstructable and the iteration continues past it
    nxt = js.eval_phat(src, 2.0, 2)
    assert nxt.value == pytest.approx(pair.next_value, rel=1e-14)
    assert nxt.value == pytest.approx(-1.0, rel=1e-14)
    assert js.eval_phat(src, 2.0, 3).value != 0.0


def test_ratio_consistency(asc2_shifted):
    p5 = js.eval_phat(asc2_shifted, -0.7, 5)
    p6 = js.eval_phat(asc2_shifted, -0.7, 6)
    assert p5.ratio == pytest.approx(p6.value / p5.value, rel=1e-12)


def test_q_assoc_trivial_cases(asc2_shifted):
    assert js.eval_q_assoc(asc2_shifted, 0.4, 2, 2) == 0.0
    assert js.eval_q_assoc(asc2_shifted, 0.4, 1, 3) == 0.0
    q1 = js.eval_q(asc2_shifted, 0.4, 1).value
    assert js.eval_q_assoc(asc2_shifted, 0.4, 1, 0) == pytest.approx(q1, rel=1e-13)


def test_q_assoc_against_forward_substitution():
    rng = np.random.RandomState(11)
    sources = [js.ASC2Source(q=0.5, a=0.5, shift=0.5),
               js.ASC2Source(q=0.3, a=0.3)]
    sources += [random_pd_table(rng, 14) for _ in range(4)]
    for src in sources:
        for z in (0.0, -0.7, 0.4):
            for n in range(0, 11):
                for m in range(n + 1, 12):
                    a = js.eval_q_assoc(src, z, m, n)
                    b = js.q_assoc_forward(src, z, m, n)
                    scale = abs(a) + abs(b)
                    if scale > 0:
                        assert abs(a - b) / scale <= 1e-10


def test_q_assoc_cancellation_prone_entry_vs_mp():
    # deep adjacent indices on a strongly growing table: the cross products
    # cancel by ~15 digits, so this pins the fallback route to an independent
    # 50-digit evaluation
    rng = np.random.RandomState(11)
    for _ in range(2):
        src = random_pd_table(rng, 14)
    import mpmath
    for (m, n, z) in ((11, 10, -0.7), (11, 9, 0.0), (10, 9, 0.4)):
        got = js.eval_q_assoc(src, z, m, n)
        p = mp_plain_recurrence(src, z, m, dps=50)
        q = mp_plain_recurrence(src, z, m, second_kind=True, dps=50)
        ref = float(q[m] * p[n] - p[m] * q[n])
        assert got == pytest.approx(ref, rel=1e-11)


def test_q_assoc_at_zero_wronskian(asc2_shifted):
    # identity route vs direct forward solve at the Green-matrix point z = 0
    a = js.eval_q_assoc(asc2_shifted, 0.0, 2, 1)
    b = js.q_assoc_forward(asc2_shifted, 0.0, 2, 1)
    assert a == pytest.approx(b, rel=1e-12)


def test_green_block_structure(asc2_shifted):
    g = js.green_block(asc2_shifted, 6)
    assert g.size == 6
    assert np.all(np.triu(g.entries) == 0.0)  # strictly lower triangular


def test_green_block_first_column():
    src = js.ASC2Source(q=0.5, a=0.5, shift=0.5)
    g = js.green_block(src, 4)
    assert g.entries[1, 0] == pytest.approx(math.sqrt(2.0), rel=1e-14)


def test_green_right_inverse_interior(asc2_shifted):
    n = 6
    g = js.green_block(asc2_shifted, n).entries
    t = js.jacobi_block(asc2_shifted, n)
    prod = t @ g
    resid = prod - np.eye(n)
    # interior rows only; the last row sees the truncation boundary
    assert np.max(np.abs(resid[: n - 1, :])) <= 1e-10 * max(1.0, np.max(np.abs(g)))


def test_green_right_inverse_random_table():
    rng = np.random.RandomState(3)
    src = random_pd_table(rng, 12)
    n = 8
    g = js.green_block(src, n).entries
    t = js.jacobi_block(src, n)
    resid = t @ g - np.eye(n)
    assert np.max(np.abs(resid[: n - 1, :])) <= 1e-11


def test_resolvent_identity_zero_at_origin(asc2_shifted):
    assert js.resolvent_identity_check(asc2_shifted, 0.0, 8) == 0.0


def test_resolvent_identity_asc2(asc2_shifted):
    assert js.resolvent_identity_check(asc2_shifted, 0.3, 12) <= 1e-10


def test_resolvent_identity_random_table():
    rng = np.random.RandomState(5)
    src = random_pd_table(rng, 8)
    assert js.resolvent_identity_check(src, 0.1, 5) <= 1e-12
