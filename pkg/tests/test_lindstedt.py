import numpy as np
import pytest

from sailorbits.errors import ResidualTooLargeError
from sailorbits.expansions import translated_rhs
from sailorbits.lindstedt import (
    SeriesSolution,
    assemble_M,
    build,
    classify_block,
    delta_vector,
    initialize,
    known_terms,
    solve_order,
)
from sailorbits.linearization import CORIOLIS, linear_model, linear_solution
from sailorbits.series import PRUNE, TrigSeries, ddt, monomial_basis

from conftest import CASE_IDS, CASES, aep_for, series_for


def _model(case):
    return linear_model(aep_for(*case))


def _residual(sol, eps, phases=(0.3, -0.7), t=0.4):
    """Max component of series acceleration minus the exact field at the series state.

    The field value at the equilibrium itself (round-off of the root) is
    removed, since the series treats the equilibrium as exact.
    """
    amps = (0.0, 0.0, eps, eps)
    state = sol.evaluate(amps, phases, t)
    acc = np.array([ddt(v, sol.freqs).evaluate(sol.freqs, amps, phases, t) for v in sol.velocity_series])
    field = translated_rhs(state[:3], sol.aep) - translated_rhs(np.zeros(3), sol.aep) + CORIOLIS @ state[3:]
    return float(np.max(np.abs(acc - field)))


def _slope(eps, values):
    return float(np.polyfit(np.log10(eps), np.log10(values), 1)[0])


# initialization -------------------------------------------------------------------


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_initialization_table(case):
    model = _model(case)
    k = model.k
    sol = initialize(model, 4)
    assert sol.x.get(1, 0, 0, 0) == (1.0, 0.0)
    assert sol.y.get(1, 0, 0, 0) == (k[1], 0.0)
    assert sol.z.get(1, 0, 0, 0) == (k[3], 0.0)
    # the offsets are round-off sized here and fall under the pruning threshold
    for s, n in zip(sol.position_series, (15, 16, 17)):
        c, s_ = s.get(0, 0, 0, 0)
        assert abs(c - k[n]) <= PRUNE and s_ == 0.0
    assert sol.x.get(0, 0, 1, 0, 1, 0) == (1.0, k[14])
    assert sol.z.get(0, 0, 0, 1, 0, 1) == (1.0, k[13])
    # 7 real coefficients per coordinate, nothing else
    for s in sol.position_series:
        n_real = sum((c != 0.0) + (s_ != 0.0) for _, c, s_ in s.terms())
        assert n_real <= 7 and s.max_degree() <= 1
    assert sol.freqs.omega.zeroth == model.omega_0
    assert sol.freqs.nu.zeroth == model.nu_0
    assert sol.freqs.lam.zeroth == model.lambda_0
    for f in (sol.freqs.omega, sol.freqs.nu, sol.freqs.lam):
        assert len(list(f.terms())) == 1


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_initialization_equals_linear_solution(case, rng):
    model = _model(case)
    sol = initialize(model, 3)
    for _ in range(10):
        amps = rng.uniform(-0.2, 0.2, 4)
        ph = rng.uniform(-np.pi, np.pi, 2)
        t = rng.uniform(0, 2)
        np.testing.assert_allclose(sol.evaluate(amps, ph, t)[:3], linear_solution(t, amps, ph, model), rtol=1e-13, atol=1e-15)


def test_first_order_build_is_initialization():
    model = _model((80.0, 0.0))
    a, b = build(model.aep, 1, linear=model), initialize(model, 1)
    for s, t in zip((*a.position_series, *a.velocity_series), (*b.position_series, *b.velocity_series)):
        assert s == t
    with pytest.raises(ValueError):
        build(model.aep, 0)


# block operator ---------------------------------------------------------------------


def test_static_block_is_minus_stiffness():
    om = _model((80.0, 40.0)).omega_star
    M = assemble_M((1, 1, 0, 0, 0, 0), om, 2.5, 2.0, 1.9)
    np.testing.assert_array_equal(M[::2, ::2], -om)
    np.testing.assert_array_equal(M[1::2, 1::2], -om)


def test_block_without_stiffness_is_coriolis_only():
    M = assemble_M((0, 0, 2, 1, 2, 1), np.zeros((3, 3)), 0.0, 2.0, 1.9)
    psi = 2 * 2.0 + 1.9
    want = np.zeros((6, 6))
    want[0, 0] = want[1, 1] = want[2, 2] = want[3, 3] = want[4, 4] = want[5, 5] = -psi**2
    want[0, 3], want[1, 2], want[2, 1], want[3, 0] = -2 * psi, 2 * psi, 2 * psi, -2 * psi
    np.testing.assert_allclose(M, want, atol=1e-15)


@pytest.mark.parametrize("idx", [(0, 0, 2, 0, 2, 0), (1, 0, 1, 1, 1, -1), (0, 2, 0, 1, 0, 1), (2, 1, 0, 0, 0, 0)])
def test_block_operator_matches_substitution(idx, rng):
    model = _model((80.0, 40.0))
    l0, w0, n0 = model.lambda_0, model.omega_0, model.nu_0
    M = assemble_M(idx, model.omega_star, l0, w0, n0)
    i, j, _, _, p, q = idx
    s = complex((i - j) * l0, p * w0 + q * n0)
    X = rng.normal(size=6)
    if p == 0 and q == 0:
        X[1::2] = 0.0
    u = X[::2] - 1j * X[1::2]
    # x(t) = Re(u e^{s t}); the linear operator is x'' - C x' - K x
    w = (s * s * np.eye(3) - s * CORIOLIS - model.omega_star) @ u
    want = np.empty(6)
    want[::2], want[1::2] = w.real, -w.imag
    if p == 0 and q == 0:
        want[1::2] = 0.0
        got = M @ X
        got[1::2] = 0.0
    else:
        got = M @ X
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_nonresonant_block_solve_round_trips(rng):
    model = _model((80.0, 0.0))
    M = assemble_M((0, 0, 3, 0, 3, 0), model.omega_star, model.lambda_0, model.omega_0, model.nu_0)
    v = rng.normal(size=6)
    np.testing.assert_allclose(np.linalg.solve(M, M @ v), v, rtol=1e-10)


def test_resonance_classification():
    assert classify_block((2, 1, 0, 0, 0, 0)) == ("grow", (1, 1, 0, 0))
    assert classify_block((1, 2, 0, 0, 0, 0)) == ("decay", (1, 1, 0, 0))
    assert classify_block((1, 1, 1, 0, 1, 0)) == ("omega", (1, 1, 0, 0))
    assert classify_block((0, 0, 1, 2, 0, 1)) == ("nu", (0, 0, 1, 1))
    assert classify_block((0, 0, 3, 0, 3, 0)) is None
    assert classify_block((0, 0, 2, 1, 1, 0)) == ("omega", (0, 0, 1, 1))
    with pytest.raises(ValueError):
        delta_vector("other", np.zeros(18), 1, 1, 1)


@pytest.mark.parametrize("kind,idx", [("omega", (0, 0, 1, 0, 1, 0)), ("nu", (0, 0, 0, 1, 0, 1)), ("grow", (1, 0, 0, 0, 0, 0))])
def test_resonant_column_is_the_frequency_derivative(kind, idx, rng):
    """The resonant column is the derivative of the block operator along the linear mode."""
    model = _model((80.0, 0.0))
    k = model.k
    l0, w0, n0 = model.lambda_0, model.omega_0, model.nu_0
    mode = {
        "omega": np.array([1.0, k[14], k[7], k[8], k[11], k[12]]),
        "nu": np.array([k[5], k[6], k[9], k[10], 1.0, k[13]]),
        "grow": np.array([1.0, 0.0, k[1], 0.0, k[3], 0.0]),
    }[kind]
    h = 1e-6
    rates = {"omega": (l0, w0 + h, n0), "nu": (l0, w0, n0 + h), "grow": (l0 + h, w0, n0)}[kind]
    # with the shifted rate the linear mode is no longer a solution; the defect per unit shift is delta
    defect = assemble_M(idx, model.omega_star, *rates) @ mode / h
    if kind == "grow":
        defect[1::2] = 0.0
    np.testing.assert_allclose(defect, delta_vector(kind, k, l0, w0, n0), atol=1e-4)


# known terms and order structure ----------------------------------------------------


def test_known_terms_of_zero_series_vanish():
    model = _model((80.0, 0.0))
    sol = initialize(model, 3)
    zero = TrigSeries.zero(3)
    empty = SeriesSolution(zero, zero, zero, zero, zero, zero, sol.freqs, 3, model.aep)
    for n in (2, 3):
        assert all(np.all(b == 0) for b in known_terms(empty, n))


def test_second_order_known_terms_by_substitution():
    model = _model((0.0, 0.0, 0.0))
    order = 2
    sol = initialize(model, order)
    B = known_terms(sol, 2)
    basis = monomial_basis(order)
    sl = basis.degree_slice(2)
    k = model.k
    series = []
    for arr in B:
        full = np.zeros_like(sol.x.coeffs)
        full[sl] = arr
        series.append(TrigSeries(order, full))
    # pure a3 input only touches the a3^2 monomial, with harmonics 0 and 2 of theta1
    a3_sq = basis.of((0, 0, 2, 0)) - sl.start
    for arr in B:
        block = arr[a3_sq]
        nz = np.argwhere(np.abs(block) > 1e-14) - order
        assert {abs(int(p)) for p, q in nz} <= {0, 2} and all(q == 0 for _, q in nz)
    # brute force: the even part of the field along the planar mode is a3^2 times the order-2 terms
    a = 1e-3
    zero = translated_rhs(np.zeros(3), model.aep)

    def even(scale, rho):
        return 0.5 * (translated_rhs(scale * rho, model.aep) + translated_rhs(-scale * rho, model.aep)) - zero

    for th in (0.0, 0.7, 2.1):
        rho = np.array([np.cos(th), k[7] * np.cos(th) + k[8] * np.sin(th), 0.0])
        # Richardson step removes the a^4 part of the even field
        quad = (16 * even(a, rho) - even(2 * a, rho)) / 12
        got = np.array([s.evaluate(sol.freqs, (0, 0, 1.0, 0), (th, 0.0), 0.0) for s in series]) * a * a
        np.testing.assert_allclose(got, quad, rtol=1e-7, atol=1e-10 * a * a)


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_solve_order_leaves_lower_orders_alone(case):
    model = _model(case)
    sol = initialize(model, 4)
    for n in (2, 3, 4):
        new = solve_order(n, sol, model)
        basis = monomial_basis(4)
        low = slice(0, basis.degree_slice(n).start)
        freq_low = slice(0, basis.degree_slice(n - 1).start)
        for a, b in zip(sol.position_series, new.position_series):
            assert np.array_equal(a.coeffs[low], b.coeffs[low])
        for a, b in zip((sol.freqs.omega, sol.freqs.nu, sol.freqs.lam), (new.freqs.omega, new.freqs.nu, new.freqs.lam)):
            assert np.array_equal(a.coeffs[freq_low], b.coeffs[freq_low])
        sol = new


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_harmonic_parity_rules(case):
    sol = series_for(*case, 5)
    for s in sol.position_series:
        for (i, j, k, m, p, q), c, s_ in s.terms():
            assert p <= k and (k - p) % 2 == 0
            assert abs(q) <= m and (m - abs(q)) % 2 == 0


def test_classical_vertical_parity():
    sol = build(aep_for(0.0, 0.0, 0.0), 5)
    for name, s in zip("xyz", sol.position_series):
        for (i, j, k, m, p, q), c, s_ in s.terms():
            if max(abs(c), abs(s_)) < 1e-14:
                continue
            assert (m % 2 == 1) == (name == "z"), (name, (i, j, k, m, p, q), c, s_)


def test_build_is_deterministic_and_strict_mode_passes():
    aep = aep_for(80.0, 40.0)
    a, b = build(aep, 3), build(aep, 3, strict=True)
    assert a.to_dict() == b.to_dict()
    assert a.diagnostics.orders[3]["max_residual"] <= 1e-9


def test_strict_mode_raises_on_residual(monkeypatch):
    import sailorbits.lindstedt as lp

    monkeypatch.setattr(lp, "RESIDUAL_LIMIT", -1.0)
    with pytest.raises(ResidualTooLargeError):
        lp.build(aep_for(80.0, 0.0), 2, strict=True)


def test_frequency_corrections_are_even_in_amplitudes():
    sol = series_for(80.0, 0.0, 5)
    for f in (sol.freqs.omega, sol.freqs.nu, sol.freqs.lam):
        for (i, j, k, m), v in f.terms():
            assert (i + j + k + m) % 2 == 0 or abs(v) < 1e-14


# residual scaling -------------------------------------------------------------------

EPS = (1e-3, 3e-3, 1e-2)


OBLIQUE_FLOOR = pytest.mark.xfail(
    strict=True,
    reason="dropping the small real part of the in-plane root leaves an O(eps) defect for oblique attitudes",
)
SCALING = [(c, n) for n in (3, 5) for c in CASES[:2]] + [(CASES[2], 3), pytest.param(CASES[2], 5, marks=OBLIQUE_FLOOR)]
SCALING_IDS = [f"{i}-N{n}" for n in (3, 5) for i in CASE_IDS[:2]] + [f"{CASE_IDS[2]}-N3", f"{CASE_IDS[2]}-N5"]


@pytest.mark.parametrize("case,order", SCALING, ids=SCALING_IDS)
def test_equation_residual_scales_with_order(case, order):
    sol = series_for(*case, order)
    res = [_residual(sol, e) for e in EPS]
    assert _slope(EPS, res) >= order


def test_oblique_floor_is_the_dropped_damping():
    sol = series_for(80.0, 40.0, 5)
    model = sol.linear
    res = [_residual(sol, e) for e in (1e-4, 1e-3)]
    # linear in eps, with a size set by the dropped real part times the saddle rate
    assert _slope((1e-4, 1e-3), res) == pytest.approx(1.0, abs=0.05)
    assert res[1] < 1e-3 * 50 * abs(model.omega_r) * model.lambda_0


@pytest.mark.slow
@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_seventh_order_beats_fifth(case):
    s5, s7 = series_for(*case, 5), series_for(*case, 7)
    for e in (0.02, 0.05):
        assert _residual(s7, e) < _residual(s5, e)
