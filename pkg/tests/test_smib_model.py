from dataclasses import replace

import numpy as np
import pytest

from core.errors import NoEquilibrium
from core.plant_params import ExciterParams, GeneratorParams, NetworkParams, OperatingPoint
from core.smib_model import (build_plant, build_state_space, compute_initial_conditions,
                             compute_k_constants, eigenvalues, electromechanical_mode,
                             mode_table, participation_factors, thevenin_equivalent,
                             torque_equations)

from conftest import LOADINGS


def network_solution(gp, net, v_inf, delta, eqp):
    """
    直接在母线坐标下写 KCL：I = Y Vt + (Vt - Vinf)/Z，
    机端量用 dq 分量表示 (X = (x_q - j x_d) e^{j delta})，对 (id, iq) 线性
    """
    z = complex(net.R, net.X)
    y = complex(net.G, net.B)
    rot = np.exp(1j * delta)

    def residual(i_d, i_q):
        v_d = gp.X_q * i_q
        v_q = eqp - gp.X_dp * i_d
        vt = complex(v_q, -v_d) * rot
        it = complex(i_q, -i_d) * rot
        return it - y * vt - (vt - v_inf) / z

    f0 = residual(0.0, 0.0)
    f1 = residual(1.0, 0.0) - f0
    f2 = residual(0.0, 1.0) - f0
    m = np.array([[f1.real, f2.real], [f1.imag, f2.imag]])
    i_d, i_q = np.linalg.solve(m, [-f0.real, -f0.imag])

    v_d = gp.X_q * i_q
    v_q = eqp - gp.X_dp * i_d
    te = v_d * i_d + v_q * i_q
    return te, np.hypot(v_d, v_q), i_d, i_q


def finite_difference_k(gp, net, ic, h=1e-6):
    def at(delta, eqp):
        return network_solution(gp, net, ic.Vinf, delta, eqp)

    d0, e0 = ic.delta0, ic.Eqp0
    dd = [(a - b) / (2 * h) for a, b in zip(at(d0 + h, e0), at(d0 - h, e0))]
    de = [(a - b) / (2 * h) for a, b in zip(at(d0, e0 + h), at(d0, e0 - h))]
    x = gp.X_d - gp.X_dp
    return (dd[0], de[0], 1.0 / (1.0 + x * de[2]), x * dd[2], dd[1], de[1])


class TestInitialConditions:
    def test_round_trip(self, plant, loading):
        _, op = loading
        ic = compute_initial_conditions(plant.generator, plant.network, op)
        p, q, vt = ic.reconstruct(plant.generator)
        assert p == pytest.approx(op.P_e0, abs=1e-9)
        assert q == pytest.approx(op.Q_e0, abs=1e-9)
        assert vt == pytest.approx(op.V_t0, abs=1e-9)

    def test_consistent_with_network(self, plant, loading):
        _, op = loading
        gp = plant.generator
        ic = compute_initial_conditions(gp, plant.network, op)
        te, vt, i_d, i_q = network_solution(gp, plant.network, ic.Vinf, ic.delta0, ic.Eqp0)
        assert te == pytest.approx(op.P_e0, abs=1e-9)
        assert vt == pytest.approx(op.V_t0, abs=1e-9)
        assert i_d == pytest.approx(ic.id0, abs=1e-9)
        assert i_q == pytest.approx(ic.iq0, abs=1e-9)

    def test_zero_current(self, plant):
        net = NetworkParams(G=0.0, B=0.0)
        ic = compute_initial_conditions(plant.generator, net, OperatingPoint(0.0, 0.0, 1.0))
        assert ic.id0 == pytest.approx(0.0, abs=1e-12)
        assert ic.iq0 == pytest.approx(0.0, abs=1e-12)
        assert ic.Eqp0 == pytest.approx(1.0, abs=1e-12)
        assert ic.delta0 == pytest.approx(0.0, abs=1e-12)
        assert ic.Vinf == pytest.approx(1.0, abs=1e-12)

    def test_light_loading_has_smaller_angle(self, plant):
        light = compute_initial_conditions(plant.generator, plant.network, LOADINGS['light'])
        nominal = compute_initial_conditions(plant.generator, plant.network, LOADINGS['nominal'])
        assert abs(light.delta0) < abs(nominal.delta0)

    def test_infeasible_loading(self, plant):
        with pytest.raises(NoEquilibrium):
            compute_initial_conditions(plant.generator, plant.network,
                                       OperatingPoint(P_e0=6.0, Q_e0=-2.0, V_t0=1.0))

    def test_thevenin_without_load(self):
        th = thevenin_equivalent(NetworkParams(G=0.0, B=0.0), 1.2)
        assert th.V_e == pytest.approx(1.2)
        assert th.R_e == pytest.approx(-0.034)
        assert th.X_e == pytest.approx(0.997)
        assert th.angle_shift == 0.0


class TestKConstants:
    def test_against_finite_differences(self, plant, loading):
        _, op = loading
        gp, net = plant.generator, plant.network
        ic = compute_initial_conditions(gp, net, op)
        k = compute_k_constants(gp, net, ic)
        expected = finite_difference_k(gp, net, ic)
        for name, got, want in zip(('K1', 'K2', 'K3', 'K4', 'K5', 'K6'), k.as_tuple(), expected):
            assert got == pytest.approx(want, rel=1e-6, abs=1e-8), name

    def test_torque_equations_match_network(self, plant, nominal_model):
        gp, net, ic = plant.generator, plant.network, nominal_model.ic
        th = thevenin_equivalent(net, ic.Vinf)
        for delta, eqp in ((ic.delta0, ic.Eqp0), (0.3, 1.1), (-0.2, 0.9)):
            got = torque_equations(gp, th, delta, eqp)
            want = network_solution(gp, net, ic.Vinf, delta, eqp)
            np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)

    def test_sign_properties(self, plant, loading):
        _, op = loading
        k = build_plant(plant, op).k
        assert k.K1 > 0
        assert k.K3 > 0
        assert k.K6 > 0

    def test_synchronous_speed(self, nominal_model):
        assert nominal_model.k.omega_s == pytest.approx(2 * np.pi * 60)


class TestStateSpace:
    def test_shapes(self, nominal_model):
        ss = nominal_model.ss
        assert ss.n == 5
        assert ss.labels == ('delta', 'omega', 'eqp', 'efd', 'xf')
        assert ss.B_tm[1] == pytest.approx(1 / 9.26)
        assert ss.C_omega @ ss.B_u == 0.0

    def test_undamped_swing_pair(self, nominal_model, plant):
        k = replace(nominal_model.k, K4=0.0)
        ss = build_state_space(k, plant.generator, plant.exciter)
        eigs = eigenvalues(ss.A[:2, :2])
        w = np.sqrt(k.omega_s * k.K1 / plant.generator.M)
        np.testing.assert_allclose(eigs.real, 0.0, atol=1e-9)
        np.testing.assert_allclose(np.sort(eigs.imag), [-w, w], atol=1e-9)

    def test_weak_exciter_decouples(self, nominal_model, plant):
        ep = ExciterParams(K_a=1e-9)
        base = build_state_space(nominal_model.k, plant.generator, ep)
        changed = build_state_space(replace(nominal_model.k, K5=-3.0, K6=7.0),
                                    plant.generator, ep)
        np.testing.assert_allclose(eigenvalues(base), eigenvalues(changed), atol=1e-6)
        inner = eigenvalues(base.A[:3, :3])
        full = eigenvalues(base)
        for lam in inner:
            assert np.min(np.abs(full - lam)) < 1e-6

    def test_omega_dot(self, nominal_model):
        ss = nominal_model.ss
        x = np.array([0.01, 0.002, -0.03, 0.1, 0.05])
        assert ss.omega_dot(x, 0.1) == pytest.approx((ss.A @ x + ss.B_tm * 0.1)[1])


class TestEigenvalues:
    def test_diagonal(self):
        np.testing.assert_allclose(eigenvalues(np.diag([-2.0, -1.0])), [-1.0, -2.0])

    def test_sorted_by_real_part(self, nominal_model):
        eigs = eigenvalues(nominal_model.ss)
        assert np.all(np.diff(eigs.real) <= 0)

    def test_characteristic_polynomial(self, nominal_model):
        eigs = eigenvalues(nominal_model.ss)
        roots = np.roots(np.poly(nominal_model.ss.A))
        for lam in roots:
            assert np.min(np.abs(eigs - lam)) < 1e-6 * max(1.0, abs(lam))

    def test_continuity(self, plant):
        base = eigenvalues(build_plant(plant).ss)
        nudged = plant.with_overrides({'M': 9.26 * (1 + 1e-8)})
        np.testing.assert_allclose(eigenvalues(build_plant(nudged).ss), base, atol=1e-5)

    def test_non_square(self):
        with pytest.raises(ValueError):
            eigenvalues(np.zeros((2, 3)))


class TestModes:
    def test_electromechanical_band(self, plant, loading):
        _, op = loading
        lam = electromechanical_mode(build_plant(plant, op).ss)
        freq = abs(lam.imag) / (2 * np.pi)
        assert 0.2 <= freq <= 2.5

    def test_mode_table(self):
        rows = mode_table(np.array([-1 + 2j, -3.0]))
        assert rows[0]['freq_hz'] == pytest.approx(2 / (2 * np.pi))
        assert rows[0]['damping_ratio'] == pytest.approx(1 / np.sqrt(5))
        assert rows[1]['damping_ratio'] == pytest.approx(1.0)

    def test_participation_columns_normalized(self, nominal_model):
        _, p = participation_factors(nominal_model.ss.A)
        np.testing.assert_allclose(p.sum(axis=0), np.ones(5))

    def test_em_mode_dominated_by_rotor(self, nominal_model):
        lam, p = participation_factors(nominal_model.ss.A)
        em = electromechanical_mode(nominal_model.ss)
        i = int(np.argmin(np.abs(lam - em)))
        assert p[0, i] + p[1, i] > 0.5


# 回归基准：三种负荷下的稳态初值、K1-K6 与开环最大实部
PINNED_IC = {
    'light': (0.6012858054174253, 1.1376187690302193, 0.5303114527643438,
              0.3010844553190545, 0.3376028675489024),
    'nominal': (1.187081542131294, 1.0236912494843247, 0.4354126762111895,
                0.8471418780141334, 1.0508863928245178),
    'heavy': (1.5337266404852055, 1.0675439167437197, 0.7854866265125742,
              0.925707114623317, 1.1024373840072885),
}

PINNED_K = {
    'light': (0.2708628567888533, 0.5502223661358256, 0.6584452706990169,
              0.15312465987154178, -0.02039076961680518, 0.8747656876163687),
    'nominal': (0.5441453000999766, 1.206745389397499, 0.6584452706990169,
                0.6981372908626797, -0.09553201205344297, 0.8159298459386944),
    'heavy': (0.2873130065586129, 1.3267233798155957, 0.6584452706990169,
              0.756570619088898, -0.1674119138570699, 0.8000853909125625),
}

PINNED_MAX_REAL = {'light': 0.03204695047, 'nominal': 0.1867270927, 'heavy': 0.5599485579}


class TestRegression:
    def test_initial_conditions(self, plant, loading):
        name, op = loading
        ic = build_plant(plant, op).ic
        got = (ic.delta0, ic.Eqp0, ic.id0, ic.iq0, ic.Vinf)
        for field, value, want in zip(('delta0', 'Eqp0', 'id0', 'iq0', 'Vinf'), got, PINNED_IC[name]):
            assert value == pytest.approx(want, rel=1e-9), field

    def test_k_constants(self, plant, loading):
        name, op = loading
        k = build_plant(plant, op).k
        for i, (value, want) in enumerate(zip(k.as_tuple(), PINNED_K[name]), start=1):
            assert value == pytest.approx(want, rel=1e-9), f"K{i}"

    def test_open_loop_unstable(self, plant, loading):
        name, op = loading
        max_real = float(np.max(eigenvalues(build_plant(plant, op).ss).real))
        assert max_real > 0
        assert max_real == pytest.approx(PINNED_MAX_REAL[name], abs=1e-6)
