import json

import numpy as np
import pytest

from sailorbits.dynamics import SystemParams
from sailorbits.equilibria import find_aep
from sailorbits.errors import StructureViolationError
from sailorbits.expansions import translated_rhs
from sailorbits.linearization import (
    characteristic_polynomial,
    constant_forcing,
    eigenstructure,
    linear_model,
    linear_solution,
    omega_star_matrix,
)

from conftest import CASE_IDS, CASES, MU, aep_for, params_for
from oracles import mp_jacobian

# configurations whose oscillatory roots must sit on the imaginary axis
HAMILTONIAN = [(0.0, 0.0), (0.0, 75.0), (35.0, 0.0), (-50.0, 180.0), (90.0, 30.0), (-90.0, 120.0), (80.0, 0.0)]
ALL_CASES = CASES + [(0.0, 0.0, 0.0)]
ALL_IDS = CASE_IDS + ["no-sail"]


def _aep(case):
    return aep_for(*case)


def _ode_residual(model, rng, exact_rates, n=20):
    h = 2e-3

    def d1(f, t):
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    def d2(f, t):
        return (-f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) - f(t - 2 * h)) / (12 * h * h)

    damping = model.state_matrix()[3:, 3:]
    worst = 0.0
    for _ in range(n):
        amps = rng.uniform(-0.1, 0.1, 4)
        ph = rng.uniform(-np.pi, np.pi, 2)
        t = rng.uniform(0.0, 1.0)

        def f(tt):
            return linear_solution(tt, amps, ph, model, exact_rates=exact_rates)

        r = d2(f, t) - (model.omega_star @ f(t) + damping @ d1(f, t) + model.forcing)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def test_classical_stiffness_matrix():
    aep = find_aep(SystemParams(MU, 0.0))
    om = omega_star_matrix(aep)
    x = aep.position[0]
    c2 = (1 - MU) / abs(x + MU) ** 3 + MU / abs(x - 1 + MU) ** 3
    np.testing.assert_allclose(np.diag(om), [1 + 2 * c2, 1 - c2, -c2], rtol=1e-10)
    assert np.all(om[~np.eye(3, dtype=bool)] == 0.0)
    assert om[0, 0] > 0 > om[1, 1] and om[2, 2] < 0


@pytest.mark.parametrize("gamma", [0.0, 40.0, 150.0])
def test_stiffness_symmetric_without_cone_angle(gamma):
    om = omega_star_matrix(_aep((0.0, gamma)))
    assert np.max(np.abs(om - om.T)) <= 1e-12 * np.max(np.abs(om))


@pytest.mark.parametrize("case", ALL_CASES, ids=ALL_IDS)
def test_stiffness_matches_translated_field_jacobian(case):
    aep = _aep(case)
    om = omega_star_matrix(aep)
    h = 1e-6
    fd = np.column_stack([(translated_rhs(h * e, aep) - translated_rhs(-h * e, aep)) / (2 * h) for e in np.eye(3)])
    assert np.max(np.abs(om - fd)) <= 1e-6 * np.max(np.abs(fd))


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_stiffness_matches_high_precision_jacobian(case):
    aep = _aep(case)
    p = aep.params
    want = mp_jacobian(aep.position, p.mu, p.beta, p.cos_alpha, p.sin_alpha, p.cos_gamma, p.sin_gamma)
    np.testing.assert_allclose(omega_star_matrix(aep), want, rtol=0, atol=1e-11 * np.max(np.abs(want)))


def test_constant_forcing_cases():
    assert np.all(constant_forcing(_aep((0.0, 0.0, 0.0))) == 0.0)
    assert np.max(np.abs(constant_forcing(_aep((0.0, 40.0))))) <= 1e-11
    model = linear_model(_aep((80.0, 40.0)))
    # the sail-potential gradient and the sail series constant cancel identically
    assert np.max(np.abs(model.forcing)) <= 1e-15
    # the particular offset is a rest point of the linear system
    assert np.max(np.abs(model.omega_star @ model.offset + model.forcing)) <= 1e-15 * np.max(np.abs(model.omega_star))


@pytest.mark.parametrize("case", ALL_CASES, ids=ALL_IDS)
def test_root_pattern_and_polynomial(case):
    model = linear_model(_aep(case))
    roots = model.roots
    real = roots[np.abs(roots.imag) <= 1e-10]
    assert len(real) == 2 and real.real.max() > 0 > real.real.min()
    assert np.sum(roots.imag > 1e-10) == 2 and np.sum(roots.imag < -1e-10) == 2
    poly = characteristic_polynomial(model.omega_star)
    for r in roots:
        assert abs(np.polyval(poly, r)) <= 1e-9
    for r in (model.modes.lambda_plus, model.modes.lambda_minus, model.modes.omega, model.modes.nu):
        assert abs(np.polyval(poly, r)) <= 1e-9


@pytest.mark.parametrize("case", HAMILTONIAN)
def test_oscillatory_roots_are_imaginary(case):
    model = linear_model(_aep(case))
    assert abs(model.omega_r) <= 1e-10 and abs(model.nu_r) <= 1e-10
    assert abs(model.lambda_asymmetry) <= 1e-10


def test_oblique_case_has_small_damping():
    model = linear_model(_aep((80.0, 40.0)))
    assert 0 < abs(model.omega_r) < 1e-3
    assert abs(model.nu_r) < 1e-3


def test_reference_frequencies_are_frozen():
    model = linear_model(_aep((80.0, 0.0)))
    assert model.omega_0 == pytest.approx(2.057343455760144, rel=1e-14)
    assert model.nu_0 == pytest.approx(1.9853736928207202, rel=1e-14)
    assert model.lambda_0 == pytest.approx(2.4848281216737838, rel=1e-14)


def test_non_saddle_matrix_is_rejected():
    with pytest.raises(StructureViolationError):
        eigenstructure(-np.eye(3))


def test_classical_mode_shapes_decouple():
    k = linear_model(_aep((0.0, 0.0, 0.0))).k
    for n in (3, 4, 5, 6, 11, 12, 15, 16, 17):
        assert k[n] == 0.0


@pytest.mark.parametrize("case", ALL_CASES, ids=ALL_IDS)
def test_linear_solution_solves_linear_equations(case, rng):
    model = linear_model(_aep(case))
    assert _ode_residual(model, rng, exact_rates=True) <= 1e-8
    if abs(model.omega_r) <= 1e-10:
        assert _ode_residual(model, rng, exact_rates=False) <= 1e-8


def test_reduction_error_is_first_order_in_damping(rng):
    model = linear_model(_aep((80.0, 40.0)))
    res = _ode_residual(model, rng, exact_rates=False)
    assert 1e-8 < res < 1e3 * abs(model.omega_r)


def test_linear_solution_read_off():
    model = linear_model(_aep((80.0, 40.0)))
    k = model.k
    np.testing.assert_array_equal(linear_solution(1.3, (0, 0, 0, 0), (0.2, 0.1), model), k[15:18])
    got = linear_solution(0.0, (0, 0, 0.01, 0), (0, 0), model)
    np.testing.assert_allclose(got, [0.01 + k[15], 0.01 * k[7] + k[16], 0.01 * k[11] + k[17]], rtol=1e-15)
    assert linear_solution(np.linspace(0, 1, 5), (0.1, 0, 0, 0), (0, 0), model).shape == (3, 5)


def test_model_dump(tmp_path):
    model = linear_model(_aep((80.0, 0.0)))
    model.dump(tmp_path / "m.json")
    data = json.loads((tmp_path / "m.json").read_text())
    assert set(data["k"]) == {str(n) for n in range(1, 18)}
    assert data["omega_0"] == model.omega_0
    assert params_for(80.0, 0.0).to_dict() == data["aep"]["params"]
