import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octspec.cdnum import CdNumber, kappa
from octspec.diagmodel import (
    DiagSymbol,
    Phase,
    PowerTerm,
    PowerVector,
    adjoint_laws_check,
    adjoint_symbol,
    affiliation_report,
    bounding_sequence,
    domain_contains,
    example52_report,
    example52_symbols,
    hat_add,
    hat_mul,
    is_affiliated_normal,
    naive_add_domain,
    naive_mul_domain,
    positive_sum_check,
    quasi_commutation_check,
    spectrum_closure,
    symbols_equal,
)
from octspec.errors import ValidationError

CPS = (1000,)


def sym(c, alpha, phase="one", v=3):
    return DiagSymbol.power(c, alpha, phase, v=v)


def vec(beta, phase="one", v=3, d=1.0):
    return PowerVector.power(d, beta, phase, v)


def random_unit_phase(rng, v, period):
    vals = rng.standard_normal((period, 1 << v))
    return Phase(vals / np.linalg.norm(vals, axis=1, keepdims=True))


def random_symbol(rng, v=3, terms=2):
    ts = tuple(PowerTerm(float(rng.uniform(0.2, 2)), float(rng.choice([-1, -0.5, 0, 0.25, 1])),
                         random_unit_phase(rng, v, int(rng.integers(1, 4)))) for _ in range(terms))
    head = rng.standard_normal((int(rng.integers(0, 4)), 1 << v))
    return DiagSymbol(v, head, ts)


seeds = st.integers(0, 2**31 - 1)


# ---------------------------------------------------------------- phases and symbols

def test_phase_rules():
    assert Phase.from_rule("one", 2).period == 1
    ph = Phase.from_rule("cycle:1,-2,1,-2", 2)
    assert ph.period == 2  # stored with minimal period
    assert np.array_equal(ph.at([1, 2, 3]), [[0, 1, 0, 0], [0, 0, -1, 0], [0, 1, 0, 0]])
    assert Phase.from_rule("mix", 3).is_unit()
    for bad in ("gen:9", "warp", "gen:1,2"):
        with pytest.raises(ValidationError):
            Phase.from_rule(bad, 2)


def test_symbol_values_head_then_tail():
    T = DiagSymbol(1, [[5.0, 0.0]], (PowerTerm(2.0, 1.0, Phase.from_rule("one", 1)),))
    assert np.array_equal(T.values([1, 2, 3]), [[5.0, 0.0], [4.0, 0.0], [6.0, 0.0]])
    with pytest.raises(ValueError):
        T.values([0])


def test_power_vector_must_be_square_summable():
    with pytest.raises(ValidationError):
        vec(-0.5)
    with pytest.raises(ValidationError):
        PowerVector(2, 1.0, -1.0, Phase(np.array([[2.0, 0, 0, 0]])))
    vec(-0.51)


def test_symbol_json_round_trip():
    s = example52_symbols(3)
    for key in ("Q", "B", "C"):
        T = s[key]
        assert symbols_equal(DiagSymbol.from_json(T.to_json()), T, 0.0)
    T = DiagSymbol(2, [[1.0, 2.0, 3.0, 4.0]], (PowerTerm(0.5, -1.0, Phase(np.eye(4)[1:3])),))
    assert symbols_equal(DiagSymbol.from_json(T.to_json()), T, 0.0)
    x = s["x"]
    y = PowerVector.from_json(x.to_json())
    assert np.array_equal(x.values(np.arange(1, 50)), y.values(np.arange(1, 50)))


# ---------------------------------------------------------------- domains

def test_domain_of_q_and_of_closed_sum():
    s = example52_symbols(3)
    vq = domain_contains(s["Q"], s["x"])
    assert not vq.member and vq.exponent == 0.0
    vs = domain_contains(hat_add(s["Q"], s["B"]), s["x"])
    assert vs.member and vs.exponent == -1.5
    lo, hi = vs.limit_bracket
    zeta = 2.612375348685488
    assert lo <= zeta <= hi and hi - lo < 1e-8
    assert vs.bracket_exact


def test_zero_symbol_contains_every_vector():
    for beta in (-0.6, -1.0, -3.0):
        assert domain_contains(DiagSymbol.zero(2), vec(beta, v=2)).member


def test_borderline_exponent_is_divergent():
    vd = domain_contains(sym(1, 0.0, v=1), vec(-0.5 - 1e-300 if False else -0.5000001, v=1), CPS)
    assert vd.member
    vd = domain_contains(sym(1, 0.5, v=1), vec(-1.0, v=1), CPS)
    assert vd.exponent == -1.0 and vd.borderline and not vd.member


def test_divergent_crossing_found():
    vd = domain_contains(sym(1, 1.0, v=1), vec(-1.0, v=1), CPS)
    assert vd.crossing == 1001 and not vd.crossing_estimated


def test_slow_divergence_crossing_is_estimated():
    vd = domain_contains(sym(1, 0.3, v=1), vec(-0.78, v=1), CPS)
    assert not vd.member and vd.crossing > 10**4 and vd.crossing_estimated
    # exponent -0.96: S_N ~ 25 N^0.04, which passes 1e3 only near N = 1e40
    assert vd.crossing > 10**30


@given(seeds)
def test_partial_sums_monotone(seed):
    rng = np.random.default_rng(seed)
    T = random_symbol(rng)
    x = vec(float(rng.uniform(-2.5, -0.55)))
    sums = [s for _, s in domain_contains(T, x, (10, 100, 1000, 5000)).partial_sums]
    assert all(b >= a for a, b in zip(sums, sums[1:]))


@given(seeds)
def test_convergent_verdicts_bracket_their_limit(seed):
    rng = np.random.default_rng(seed)
    alpha = float(rng.uniform(-1, 1))
    beta = float(rng.uniform(-2.5, -0.55))
    T = sym(float(rng.uniform(0.5, 2)), alpha, "mix")
    x = vec(beta, "mix")
    vd = domain_contains(T, x, (10**4,))
    if vd.member:
        lo, hi = vd.limit_bracket
        big = domain_contains(T, x, (2 * 10**5,)).partial_sums[-1][1]
        assert big <= hi + 1e-12
        assert lo <= hi
    else:
        assert vd.exponent >= -1 and vd.crossing is not None


@given(seeds)
def test_naive_sum_domain_inside_closed_sum_domain(seed):
    rng = np.random.default_rng(seed)
    T, B = random_symbol(rng), random_symbol(rng)
    x = vec(float(rng.uniform(-2.5, -0.55)))
    if naive_add_domain(T, B, x, checkpoints=CPS).member:
        assert domain_contains(hat_add(T, B), x, CPS).member


def test_closed_sum_cancels_leading_terms():
    s = example52_symbols(3)
    QB = hat_add(s["Q"], s["B"])
    assert len(QB.terms) == 1 and QB.terms[0].alpha == 0.25 and QB.terms[0].coef == 1.0
    assert symbols_equal(hat_add(s["Q"], DiagSymbol.zero(3)), s["Q"])


def test_closed_product_and_order():
    s = example52_symbols(3)
    CQ = hat_mul(s["C"], s["Q"])
    assert CQ.leading_exponent == 0.25
    x = s["x"]
    assert domain_contains(CQ, x).member
    assert not naive_mul_domain(s["C"], s["Q"], x).member
    one = DiagSymbol.constant(CdNumber.real(1.0, 3))
    assert symbols_equal(hat_mul(s["Q"], one), s["Q"])


# ---------------------------------------------------------------- bounding projections

def test_bounding_for_identity_symbol():
    seq = bounding_sequence(sym(1, 1.0, v=1), [10, 100])
    p10, p100 = seq.projections
    assert list(p10.indices) == list(range(1, 11)) and p10.finite
    assert p100.rank == 100
    assert seq.norms_bounded() and seq.increasing()


def test_bounding_for_bounded_symbol_is_identity():
    p = bounding_sequence(sym(5, 0.0, v=1), [5]).projections[0]
    assert not p.finite and all(p.contains(n) for n in (1, 7, 10**9))


def test_bounding_inverts_power_law():
    for m in (3.0, 10.0):
        p = bounding_sequence(sym(1, 0.25, v=2), [m]).projections[0]
        assert p.indices.max() == int(math.floor(m ** 4 + 1e-9)) and p.finite


def test_bounding_rejects_non_increasing():
    with pytest.raises(ValidationError):
        bounding_sequence(sym(1, 1.0, v=1), [10, 10])


@given(seeds)
def test_bounding_norm_and_exhaustion(seed):
    rng = np.random.default_rng(seed)
    ts = tuple(PowerTerm(float(rng.uniform(0.5, 2)), float(rng.choice([-1, -0.5, 0, 1])),
                         random_unit_phase(rng, 3, int(rng.integers(1, 4)))) for _ in range(2))
    T = DiagSymbol(3, rng.standard_normal((int(rng.integers(0, 4)), 8)), ts)
    seq = bounding_sequence(T, [1.0, 4.0, 20.0])
    assert seq.norms_bounded() and seq.increasing()
    # the truncated operator T F has norm max |t_n| over the support
    p = seq.projections[-1]
    N = min(p.settle, 40)
    mask = p.mask(np.arange(1, N + 1))
    TF = T.truncate(N).matrix @ np.kron(np.diag(mask.astype(float)), np.eye(8))
    assert np.linalg.norm(TF, 2) <= p.threshold + 1e-9
    # every fixed index is eventually inside
    assert all(p.contains(n) for n in range(1, 4)) or T.moduli(np.arange(1, 4)).max() > 20.0


def test_core_residuals_shrink():
    T = sym(1, 1.0, v=1)
    x = vec(-2.0, v=1)
    res = bounding_sequence(T, [10, 100, 1000]).core_residuals(x, 10**4)
    xs = [r[1] for r in res]
    txs = [r[2] for r in res]
    assert xs == sorted(xs, reverse=True) and txs == sorted(txs, reverse=True)
    assert txs[-1] < 1e-3


# ---------------------------------------------------------------- adjoints and normality

def test_adjoint_examples():
    T = sym(1, 1.0, v=2)
    assert symbols_equal(adjoint_symbol(T), T)
    U = DiagSymbol.constant(CdNumber.basis(1, 2))
    assert symbols_equal(adjoint_symbol(U), DiagSymbol.constant(CdNumber.basis(1, 2, -1.0)))
    assert symbols_equal(hat_mul(U, adjoint_symbol(U)), DiagSymbol.constant(CdNumber.real(1.0, 2)))


def test_adjoint_laws_with_octonion_scalar():
    s = example52_symbols(3)
    rep = adjoint_laws_check(s["Q"], s["C"], CdNumber.basis(2, 3))
    assert rep["ok"], rep


@given(seeds)
def test_adjoint_is_an_involution_and_gram_symbol_is_nonnegative(seed):
    T = random_symbol(np.random.default_rng(seed))
    assert symbols_equal(adjoint_symbol(adjoint_symbol(T)), T, 0.0)
    G = hat_mul(T, adjoint_symbol(T))
    vals = G.values(np.arange(1, 200))
    assert np.max(np.abs(vals[:, 1:])) <= 1e-9 and np.all(vals[:, 0] >= -1e-12)


@given(seeds, st.integers(0, 7), st.integers(0, 7))
def test_quasi_commutation_of_single_grade_symbols(seed, j, k):
    rng = np.random.default_rng(seed)
    B = DiagSymbol(3, None, (PowerTerm(float(rng.uniform(0.1, 2)), 0.5, Phase.from_rule(f"gen:{j}", 3)),))
    T = DiagSymbol(3, rng.standard_normal((3, 1)) * np.eye(8)[k], (PowerTerm(1.0, -0.25, Phase.from_rule(f"cycle:{k},-{k}", 3)),))
    assert quasi_commutation_check(B, T)
    sign = -1 if kappa(j, k) else 1
    n = np.arange(1, 20)
    from octspec.diagmodel import _cd_mul_rows
    assert np.allclose(_cd_mul_rows(B.values(n), T.values(n), 3), sign * _cd_mul_rows(T.values(n), B.values(n), 3))


def test_quasi_commutation_needs_single_grades():
    with pytest.raises(ValidationError):
        quasi_commutation_check(sym(1, 1, "mix"), sym(1, 1))


def test_affiliation():
    assert is_affiliated_normal(sym(1, 1.0))
    assert is_affiliated_normal(example52_symbols(3)["Q"])
    rep = affiliation_report(example52_symbols(3)["Q"])
    assert rep["normal"] and rep["bounding_commutes"] and rep["bounding_for_adjoint"]


# ---------------------------------------------------------------- spectrum

def test_spectrum_of_identity_symbol():
    sp = spectrum_closure(sym(1, 1.0, v=1))
    assert sp.unbounded and not sp.limit_points
    assert sp.contains(CdNumber.real(3.0, 1)) and not sp.contains(CdNumber.real(3.5, 1))


def test_spectrum_of_constant_symbol():
    c = CdNumber([0.5, -1.0, 0.0, 2.0])
    sp = spectrum_closure(DiagSymbol.constant(c))
    assert not sp.unbounded and len(sp.limit_points) == 1 and sp.limit_points[0] == c
    assert sp.contains(c) and not sp.contains(CdNumber.zero(2))


def test_spectrum_of_reciprocal_includes_zero():
    sp = spectrum_closure(sym(1, -1.0, v=1))
    assert sp.contains(CdNumber.zero(1)) and sp.contains(CdNumber.real(0.25, 1))
    assert not sp.contains(CdNumber.real(0.4, 1))


# ---------------------------------------------------------------- positive symbols

def test_positive_sum_examples():
    T, Q = sym(1, 1.0, v=1), sym(1, 2.0, v=1)
    x = vec(-2.0, v=1)
    assert not domain_contains(Q, x, CPS).member and not domain_contains(hat_add(T, Q), x, CPS).member
    assert positive_sum_check(T, Q, [x])
    S = hat_add(T, T)
    vd = domain_contains(S, x, CPS)
    assert vd.member and vd.exponent == -2.0
    assert positive_sum_check(T, T, [x])
    assert positive_sum_check(DiagSymbol.zero(1), DiagSymbol.zero(1), 5)


def test_positive_sum_rejects_negative():
    with pytest.raises(ValidationError):
        positive_sum_check(sym(-1, 1.0, v=1), sym(1, 1.0, v=1), 3)


# ---------------------------------------------------------------- the worked example

def test_example52_report_verdicts():
    rep = example52_report(horizon=10**5)
    assert rep["membership"] == {"D(Q)": False, "D(Q+^B)": True, "D(C*^Q)": True, "D(CQ)": False}
    assert rep["matches_expected"] and rep["Q+B != Q+^B"] and rep["CQ != C*^Q"] and rep["QC closed"]


def test_example52_quaternion_variant():
    assert example52_report(v=2, horizon=10**4)["matches_expected"]


def test_example52_rejects_short_horizon():
    with pytest.raises(ValidationError):
        example52_report(horizon=10)


def test_example52_vector_phases_come_from_the_alphabet():
    s = example52_symbols(3)
    n = np.arange(1, 25)
    xi = s["Q"].terms[0].phase.at(n)
    z = s["x"].phase.at(n)
    conj = xi * np.r_[1, -np.ones(7)]
    for zk, xk, ck in zip(z, xi, conj):
        options = [np.eye(8)[0], xk, ck]
        assert any(np.allclose(zk, s * o) for o in options for s in (1, -1))
