import csv

import numpy as np
import pytest

from stiefel_flows.algebra import hat
from stiefel_flows.flows import FlowSpec
from stiefel_flows.integrate import IntegratorConfig, integrate
from stiefel_flows.manifold import CotangentState, random_rotation, random_state, rotate_left, rotate_so2
from stiefel_flows.metrics import NuKappa, QuadA, QuadB, hamiltonian, random_quad_b
from stiefel_flows.potentials import PendulumI, PendulumII, potential_value
from stiefel_flows.rigidbody import (
    KOWALEVSKI,
    LAGRANGE,
    ZHUKOVSKIY_VOLTERRA,
    BodyState,
    GyrostatParams,
    area_integral,
    body_hamiltonian,
    dictionary_case,
    ep_shifted_field,
    equivalence_check,
    euler_poisson_field,
    fourth_integral,
    geometric_integral,
    integrate_body,
    magnetic_bracket,
    reduce_to_so3,
    reduce_trajectory,
    shifted_hamiltonian,
    validate_case,
)

from conftest import E, random_unit


def random_body(rng):
    return BodyState(rng.standard_normal(3), random_unit(rng, 3))


def random_params(rng, chi=True):
    g = rng.standard_normal((3, 3))
    return GyrostatParams(g @ g.T + np.eye(3), rng.standard_normal(3), rng.standard_normal(3) if chi else np.zeros(3))


def test_reduce_examples():
    z = np.zeros(3)
    r = reduce_to_so3(CotangentState(E(3, 1), E(3, 2), E(3, 3), z), 0.4)
    np.testing.assert_array_equal(r.frame.R, np.eye(3))
    np.testing.assert_allclose(r.m, (0, -1, 0), atol=0)
    np.testing.assert_allclose(r.M, r.m, atol=0)
    np.testing.assert_array_equal(r.L, (0, 0, -0.4))
    r = reduce_to_so3(CotangentState(E(3, 1), E(3, 2), z, z), 0.4)
    np.testing.assert_array_equal(r.M, z)
    np.testing.assert_array_equal(r.m, z)
    with pytest.raises(ValueError):
        reduce_to_so3(random_state(4, seed=0), 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_reduce_body_and_space_momenta(seed, rng):
    s = random_state(3, seed=seed)
    r = reduce_to_so3(s, 0.3)
    np.testing.assert_allclose(hat(r.M), r.frame.R.T @ hat(r.m) @ r.frame.R, atol=1e-14)
    q = random_rotation(3, rng)
    r2 = reduce_to_so3(rotate_left(s, q), 0.3)
    np.testing.assert_allclose(r2.m, q @ r.m, atol=1e-14)
    np.testing.assert_allclose(r2.M, r.M, atol=1e-14)


def test_euler_poisson_examples(rng):
    chi = np.array([0.3, -0.2, 0.9])
    p = GyrostatParams((1.0, 2.0, 3.0), (0.1, 0.2, 0.3), chi)
    dm, dg = euler_poisson_field(p, BodyState(np.zeros(3), chi / np.linalg.norm(chi)))
    np.testing.assert_allclose(dm, 0.0, atol=1e-15)
    np.testing.assert_allclose(dg, 0.0, atol=1e-15)
    free = GyrostatParams((1.0, 2.0, 3.0), np.zeros(3), np.zeros(3))
    b = random_body(rng)
    dm, _ = euler_poisson_field(free, b)
    assert abs(dm @ b.M) < 1e-14
    zv = random_params(rng, chi=False)
    dm, _ = euler_poisson_field(zv, b)
    assert abs(dm @ (b.M + zv.L)) < 1e-13


def test_shifted_field_matches(rng):
    for _ in range(10):
        p, b = random_params(rng), random_body(rng)
        dk, dg = ep_shifted_field(p, b.M + p.L, b.Gamma)
        dm, dg2 = euler_poisson_field(p, b)
        np.testing.assert_allclose(dk, dm, atol=1e-14)
        np.testing.assert_allclose(dg, dg2, atol=1e-14)
    p = random_params(rng, chi=False)
    dk, dg = ep_shifted_field(p, p.L, random_unit(rng, 3))
    np.testing.assert_array_equal(dk, 0.0)
    np.testing.assert_array_equal(dg, 0.0)


def test_body_integrals_along_trajectory(rng):
    p, b = random_params(rng), random_body(rng)
    bt = integrate_body(p, b, 10.0, 1e-3, record_stride=10)
    h1 = [shifted_hamiltonian(p, bt.M[i] + p.L, bt.Gamma[i]) for i in range(len(bt))]
    assert np.ptp(h1) / max(1, abs(h1[0])) < 1e-8
    g = [geometric_integral(bt.state(i)) for i in range(len(bt))]
    a = [area_integral(p, bt.state(i)) for i in range(len(bt))]
    assert np.ptp(g) < 1e-9
    assert np.ptp(a) / max(1, abs(a[0])) < 1e-8


def test_magnetic_bracket_examples(rng):
    L = rng.standard_normal(3)
    b = random_body(rng)
    coord = lambda i: (lambda y: y[i])
    assert magnetic_bracket(coord(0), coord(1), L, b) == pytest.approx(-(b.M[2] + L[2]), rel=1e-8)
    F = lambda y: np.sin(y[0]) * y[4] + y[2] ** 2
    assert abs(magnetic_bracket(F, F, L, b)) < 1e-10
    G = lambda y: y[0] * y[3] + np.cos(y[1] + y[5])
    assert abs(magnetic_bracket(lambda y: y[3:] @ y[3:], G, L, b)) < 1e-8


def test_bracket_generates_euler_poisson(rng):
    for _ in range(10):
        p, b = random_params(rng), random_body(rng)
        grad_h = lambda y: np.concatenate([p.inv_inertia @ y[:3], p.chi])
        rates = []
        for i in range(6):
            e = np.zeros(6)
            e[i] = 1.0
            rates.append(magnetic_bracket(lambda y: y[i], None, p.L, b, grad_F=lambda y: e, grad_G=grad_h))
        dm, dg = euler_poisson_field(p, b)
        np.testing.assert_allclose(rates, np.concatenate([dm, dg]), atol=1e-10)


def test_fourth_integral_examples():
    zv = GyrostatParams((1.0, 2.0, 3.0), (0.3, -0.1, 0.5), np.zeros(3))
    assert fourth_integral(ZHUKOVSKIY_VOLTERRA, zv, BodyState(-zv.L, E(3, 3))) == 0.0
    kow = GyrostatParams((1.0, 1.0, 0.5), np.zeros(3), (1.0, 0.0, 0.0))
    assert fourth_integral(KOWALEVSKI, kow, BodyState((0, 0, 2.7), E(3, 1))) == pytest.approx(4.0)


@pytest.mark.parametrize("case,params", [
    (ZHUKOVSKIY_VOLTERRA, GyrostatParams((1.0, 1.7, 2.4), (0.2, -0.4, 0.3), np.zeros(3))),
    (LAGRANGE, GyrostatParams((1.0, 1.0, 0.6), (0.0, 0.0, 0.35), (0.0, 0.0, 1.2))),
    (KOWALEVSKI, GyrostatParams((1.0, 1.0, 0.5), (0.0, 0.0, 0.5), (1.0, 0.0, 0.0))),
    (KOWALEVSKI, GyrostatParams((1.0, 1.0, 0.5), (0.0, 0.0, -0.3), (0.6, -0.8, 0.0))),
])
def test_fourth_integral_conserved(case, params, rng):
    bt = integrate_body(params, random_body(rng), 20.0, 1e-3, record_stride=20)
    f = np.array([fourth_integral(case, params, bt.state(i)) for i in range(len(bt))])
    assert np.abs(f - f[0]).max() / max(1.0, abs(f[0])) < 1e-6


def test_validate_case_rejects_wrong_shapes():
    with pytest.raises(ValueError):
        validate_case(ZHUKOVSKIY_VOLTERRA, GyrostatParams((1, 2, 3), np.zeros(3), (1, 0, 0)))
    with pytest.raises(ValueError):
        validate_case(LAGRANGE, GyrostatParams((1, 2, 3), np.zeros(3), (0, 0, 1)))
    with pytest.raises(ValueError):
        validate_case(LAGRANGE, GyrostatParams((1, 1, 3), np.zeros(3), (1, 0, 0)))
    with pytest.raises(ValueError):
        validate_case(KOWALEVSKI, GyrostatParams((1, 1, 1), np.zeros(3), (1, 0, 0)))
    with pytest.raises(ValueError):
        validate_case(KOWALEVSKI, GyrostatParams((1, 1, 0.5), np.zeros(3), (1, 0, 1)))
    with pytest.raises(ValueError):
        validate_case("euler", GyrostatParams((1, 1, 1), np.zeros(3), np.zeros(3)))
    with pytest.raises(ValueError):
        GyrostatParams((1, -1, 1), np.zeros(3), np.zeros(3))


@pytest.mark.parametrize("seed", range(5))
def test_axis_potential_reduces_to_height_of_third_axis(seed, rng):
    gamma, chi3 = random_unit(rng, 3), rng.uniform(0.2, 2)
    s = random_state(3, seed=seed)
    e3 = np.cross(s.e1, s.e2)
    assert potential_value(PendulumI.from_axis(gamma, chi3), s.array) == pytest.approx(chi3 * gamma @ e3, rel=1e-13)


def test_dictionary_cases():
    assert dictionary_case(FlowSpec("so3_quadb", QuadB(1.2, 0.9, 1.5, 0.2, -0.1, 0.15), 0.3, n=3))[0] == ZHUKOVSKIY_VOLTERRA
    assert dictionary_case(FlowSpec("riemannian", QuadA(1.0, 1.5, -0.5, 0.1), 0.3, n=3))[0] == ZHUKOVSKIY_VOLTERRA
    case, params, gamma = dictionary_case(FlowSpec("natural", NuKappa(1, 0.7), 0.2, PendulumI.from_axis(E(3, 2), 1.5), 3))
    assert case == LAGRANGE
    np.testing.assert_allclose(params.chi, (0, 0, 1.5), atol=1e-15)
    np.testing.assert_allclose(gamma, E(3, 2), atol=1e-15)
    np.testing.assert_allclose(np.diag(params.inertia), (1, 1, 1 / 1.7))
    np.testing.assert_array_equal(params.L, (0, 0, -0.2))
    pot = PendulumII(E(3, 3), E(3, 3), 1.0, 0.5)
    assert dictionary_case(FlowSpec("natural", NuKappa(1, 1.0), 0.5, pot, 3))[0] == KOWALEVSKI
    with pytest.raises(ValueError):
        dictionary_case(FlowSpec("natural", NuKappa(1, 1.0), 0.5, PendulumII(E(3, 3), E(3, 1), 1.0, 0.5), 3))
    with pytest.raises(ValueError):
        dictionary_case(FlowSpec("natural", NuKappa(1, 0.5), 0.5, pot, 3))


def test_free_body_energy_matches_stiefel_hamiltonian(rng):
    b = random_quad_b(rng)
    eta = 0.3
    params = GyrostatParams.from_b(b, eta)
    for seed in range(5):
        s = random_state(3, seed=seed)
        r = reduce_to_so3(s, eta)
        assert body_hamiltonian(params, BodyState(r.M, E(3, 3))) == pytest.approx(hamiltonian(b, None, s), rel=1e-12)


def test_lagrange_equivalence_keeps_axial_momentum():
    flow = FlowSpec("natural", NuKappa(1, 0.7), 0.2, PendulumI.from_axis(E(3, 3), 1.0), 3)
    r = equivalence_check(flow, random_state(3, seed=1), 10.0, 1e-3)
    assert r.case == LAGRANGE
    assert r.deviation < 1e-6
    assert np.ptp(r.body.M[:, 2]) < 1e-8
    assert np.ptp(r.reduced.M[:, 2]) < 1e-8


def test_kowalevski_equivalence_with_rotated_chi():
    pot = PendulumII(E(3, 2), E(3, 2), 0.6, -0.8)
    flow = FlowSpec("natural", NuKappa(1, 1.0), 0.5, pot, 3)
    r = equivalence_check(flow, random_state(3, seed=2), 10.0, 1e-3)
    assert r.case == KOWALEVSKI
    assert r.deviation < 1e-6
    assert max(r.fourth_drift, r.fourth_drift_reduced) < 1e-6


def test_free_reduction_independent_of_fiber_representative():
    flow = FlowSpec("riemannian", NuKappa(1.0, 0.4), 0.3, n=3)
    s0 = random_state(3, seed=4)
    cfg = IntegratorConfig(h=1e-3, T=5.0, record_stride=50)
    a, _, _ = reduce_trajectory(integrate(flow, s0, cfg), flow.eta)
    theta = 0.9
    b, _, _ = reduce_trajectory(integrate(flow, rotate_so2(s0, theta), cfg), flow.eta)
    # the fiber rotation turns the body frame about its third axis by theta
    c, s = np.cos(theta), np.sin(theta)
    q = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(b.M, a.M @ q.T, atol=1e-8)
    np.testing.assert_allclose(b.M[:, 2], a.M[:, 2], atol=1e-8)


def test_body_trajectory_csv(tmp_path, rng):
    p = random_params(rng)
    bt = integrate_body(p, random_body(rng), 0.1, 1e-2)
    path = tmp_path / "body.csv"
    bt.write_csv(path, integrals={"H": [body_hamiltonian(p, bt.state(i)) for i in range(len(bt))]},
                 extra={"K": bt.M + p.L})
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "M_1", "M_2", "M_3", "Gamma_1", "Gamma_2", "Gamma_3", "K_1", "K_2", "K_3", "H"]
    assert len(rows) == len(bt) + 1
    assert float(rows[-1][1]) == bt.M[-1, 0]
