import numpy as np
import pytest

from causalfluid.coefficients import DissipationCoeffs, derive_coefficients
from causalfluid.dissipation import (
    GeneralAnsatz,
    GodunovDomainError,
    ansatz_evaluate,
    ansatz_rest_frame,
    assemble_b_tensor,
    covariant_godunov,
    delta_tensors_covariant,
    godunov_vars,
    ideal_tensors,
    rest_frame_matrices,
    state_from_godunov,
)
from causalfluid.equivalence import eckart_ansatz
from causalfluid.kinematics import (
    METRIC,
    FluidState,
    GradientField,
    RestFrameGradients,
    boost,
    gradients_from_rest_frame,
)
from causalfluid.thermo import ThermoState, eos_from_n_theta


def rand_rg(rng):
    return RestFrameGradients(
        rng.normal(), rng.normal(size=3), rng.normal(size=3), rng.normal(size=(3, 3)), rng.normal(), rng.normal(size=3)
    )


def rand_v3(rng, vmax=0.8):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v) * rng.uniform(0, vmax)


def rand_setup(params, rng):
    th = eos_from_n_theta(params, rng.uniform(0.3, 3), rng.uniform(0.3, 3))
    c = DissipationCoeffs(*rng.uniform(0.1, 2, 4))
    return th, c, derive_coefficients(params, th, c)


# ----------------------------------------------------------------------------
# ideal tensors


def test_ideal_rest(rest):
    T, N = ideal_tensors(rest)
    assert np.allclose(T, np.diag([4.0, 1, 1, 1]), atol=1e-14)
    assert np.allclose(N, [1.0, 0, 0, 0], atol=0)


def test_ideal_dust_limit():
    dust = ThermoState(n=1.0, theta=1e-300, rho=1.0, p=0.0, h=1.0, s=0.0, psi=0.0)
    fs = FluidState.moving(dust, (0.5, 0, 0))
    T, _ = ideal_tensors(fs)
    assert np.allclose(T, np.outer(fs.u4, fs.u4), atol=1e-15)


def test_ideal_covariance(s0, rng):
    T0, N0 = ideal_tensors(FluidState.moving(s0))
    for _ in range(20):
        v = rand_v3(rng)
        lam = boost(v)
        T, N = ideal_tensors(FluidState.moving(s0, v))
        assert np.allclose(lam @ T0 @ lam.T, T, atol=1e-12 * np.abs(T).max())
        assert np.allclose(lam @ N0, N, atol=1e-12 * np.abs(N).max())
        assert np.allclose(T, T.T, atol=0)


# ----------------------------------------------------------------------------
# the new model


def test_zero_gradients(params, rest, coeffs, s0):
    d = derive_coefficients(params, s0, coeffs)
    t = delta_tensors_covariant(rest, GradientField(np.zeros((4, 5))), d, coeffs)
    assert t.max_abs() == 0.0


def test_heat_only(params, rest, s0):
    c = DissipationCoeffs(eta=0.0, chi=1.0)
    d = derive_coefficients(params, s0, c)
    # only chi: zero the derived coefficients to isolate the chi block
    d = type(d)(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    rg = RestFrameGradients(grad_theta=np.array([0.3, 0.0, 0.0]))
    t = delta_tensors_covariant(rest, gradients_from_rest_frame(rest, rg), d, c)
    expect = np.zeros((4, 4))
    expect[0, 1] = expect[1, 0] = 0.3
    assert np.allclose(-t.dT, expect, atol=1e-15)
    assert np.allclose(t.dN, 0.0)
    assert np.allclose(rest_frame_matrices(rest, rg, d, c).dT, t.dT, atol=1e-15)


def test_isotropic_expansion(params, rest, s0, coeffs):
    d = derive_coefficients(params, s0, coeffs)
    rg = RestFrameGradients(grad_u=np.eye(3) * 0.7 / 3)
    t = delta_tensors_covariant(rest, gradients_from_rest_frame(rest, rg), d, coeffs)
    assert -t.dT[0, 0] == pytest.approx(d.sigma * 0.7, abs=1e-14)
    assert np.allclose(-np.diag(t.dT)[1:], d.zeta_tilde * 0.7, atol=1e-14)
    assert -t.dN[0] == pytest.approx(d.sigma_tilde * 0.7, abs=1e-14)
    off = t.dT - np.diag(np.diag(t.dT))
    assert np.allclose(off, 0, atol=1e-15)


def test_rest_frame_examples(params, rest, s0):
    c = DissipationCoeffs(eta=0.0, chi=1.0, mu=1.0)
    d = type(derive_coefficients(params, s0, c))(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    zero = rest_frame_matrices(rest, RestFrameGradients(), d, c)
    assert zero.max_abs() == 0.0
    t = rest_frame_matrices(rest, RestFrameGradients(theta_dot=1.0), d, c)
    assert np.allclose(-t.dT, -np.eye(4), atol=0)
    t = rest_frame_matrices(rest, RestFrameGradients(psi_dot=1.0), d, c)
    assert np.allclose(-t.dN, [-1.0, 0, 0, 0], atol=0)


def test_rest_frame_requires_rest(params, s0, coeffs):
    d = derive_coefficients(params, s0, coeffs)
    with pytest.raises(ValueError):
        rest_frame_matrices(FluidState.moving(s0, (0.2, 0, 0)), RestFrameGradients(), d, coeffs)


def test_rest_frame_equals_covariant(params, rng):
    for _ in range(200):
        th, c, d = rand_setup(params, rng)
        fs = FluidState.moving(th)
        rg = rand_rg(rng)
        a = delta_tensors_covariant(fs, gradients_from_rest_frame(fs, rg), d, c)
        b = rest_frame_matrices(fs, rg, d, c)
        assert (a - b).max_abs() <= 1e-12 * max(1.0, a.max_abs())


def test_covariance_under_boosts(params, rng):
    for _ in range(100):
        th, c, d = rand_setup(params, rng)
        rg = rand_rg(rng)
        v = rand_v3(rng)
        rest_t = rest_frame_matrices(FluidState.moving(th), rg, d, c)
        moving = FluidState.moving(th, v)
        lab = delta_tensors_covariant(moving, gradients_from_rest_frame(moving, rg), d, c)
        assert (rest_t.transformed(boost(v)) - lab).max_abs() <= 1e-10 * max(1.0, lab.max_abs())


def test_linearity_and_symmetry(params, rng):
    th, c, d = rand_setup(params, rng)
    fs = FluidState.moving(th, (0.3, 0.1, -0.2))
    g1, g2 = GradientField(rng.normal(size=(4, 5))), GradientField(rng.normal(size=(4, 5)))
    t1 = delta_tensors_covariant(fs, g1, d, c)
    t2 = delta_tensors_covariant(fs, g2, d, c)
    t12 = delta_tensors_covariant(fs, GradientField(2.0 * g1.d - 3.0 * g2.d), d, c)
    diff = t12.dT - (2 * t1.dT - 3 * t2.dT)
    assert np.abs(diff).max() <= 1e-12 * max(1.0, np.abs(t12.dT).max())
    assert np.allclose(t1.dT, t1.dT.T, atol=1e-12)


def test_shear_part_traceless(params, rng):
    th, _, _ = rand_setup(params, rng)
    c = DissipationCoeffs(eta=1.3)
    d = type(derive_coefficients(params, th, c))(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    fs = FluidState.moving(th, (0.4, -0.3, 0.2))
    t = delta_tensors_covariant(fs, GradientField(rng.normal(size=(4, 5))), d, c)
    u_low = METRIC @ fs.u4
    assert np.trace(METRIC @ t.dT) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(t.dT @ u_low, 0.0, atol=1e-12)


# ----------------------------------------------------------------------------
# the general ansatz


def test_zero_ansatz(rest, rng):
    t = ansatz_evaluate(GeneralAnsatz(), rest, GradientField(rng.normal(size=(4, 5))))
    assert t.max_abs() == 0.0


def test_new_theory_matches_direct(params, rng):
    worst = 0.0
    for _ in range(1000):
        th, c, d = rand_setup(params, rng)
        fs = FluidState.moving(th, rand_v3(rng, 0.6))
        g = GradientField(rng.normal(size=(4, 5)))
        a = GeneralAnsatz.new_theory(th, d, c)
        t1 = ansatz_evaluate(a, fs, g)
        t2 = delta_tensors_covariant(fs, g, d, c)
        worst = max(worst, (t1 - t2).max_abs() / max(1.0, t2.max_abs()))
    assert worst < 1e-12


def test_new_theory_selection_is_checked(params, s0, coeffs):
    d = derive_coefficients(params, s0, coeffs)
    a = GeneralAnsatz.new_theory(s0, d, coeffs)
    with pytest.raises(ValueError):
        GeneralAnsatz.from_array(a.as_array() + 0.1).check_new_theory(d, coeffs)


def test_rest_frame_batch_matches_covariant(params, s0, coeffs, rng):
    d = derive_coefficients(params, s0, coeffs)
    a = GeneralAnsatz.new_theory(s0, d, coeffs)
    rest = FluidState.moving(s0)
    rgs = [rand_rg(rng) for _ in range(20)]
    for rg in rgs:
        dT, dN = ansatz_rest_frame(a, rg)
        ref = rest_frame_matrices(rest, rg, d, coeffs)
        assert np.allclose(dT, ref.dT, atol=1e-13) and np.allclose(dN, ref.dN, atol=1e-13)


def test_eckart_rest_frame(params, s0, rng):
    c = DissipationCoeffs(eta=0.8, zeta=0.3, chi=1.1, mu=0.4)
    a = eckart_ansatz(params, s0, c)
    rg = rand_rg(rng)
    dT, dN = ansatz_rest_frame(a, rg)
    q = c.chi * (rg.grad_theta + s0.theta * rg.u_dot)
    expect = np.zeros((4, 4))
    expect[0, 1:] = expect[1:, 0] = q
    expect[1:, 1:] = c.eta * rg.shear + c.zeta * rg.div_u * np.eye(3)
    assert np.allclose(-dT, expect, atol=1e-14)
    assert np.allclose(-dN, np.concatenate([[0.0], c.mu * rg.grad_psi]), atol=1e-14)


# ----------------------------------------------------------------------------
# Godunov-Boillat variables


def test_godunov_examples(params, rest):
    assert np.allclose(godunov_vars(rest), [1, 0, 0, 0, 5], atol=1e-15)
    hot = FluidState.moving(eos_from_n_theta(params, 1.0, 2.0))
    assert godunov_vars(hot)[0] == 0.5
    assert np.array_equal(covariant_godunov([1.0, 2, 3, 4, 5]), [-1.0, 2, 3, 4, 5])


def test_godunov_round_trip(params, rng):
    for _ in range(200):
        th = eos_from_n_theta(params, rng.uniform(0.1, 10), rng.uniform(0.1, 10))
        fs = FluidState.moving(th, rand_v3(rng, 0.9))
        back = state_from_godunov(params, godunov_vars(fs))
        assert back.theta == pytest.approx(fs.theta, rel=1e-12)
        assert back.thermo.n == pytest.approx(fs.thermo.n, rel=1e-12)
        assert np.allclose(back.u4, fs.u4, rtol=1e-12, atol=1e-12)


def test_godunov_degenerate(params):
    with pytest.raises(GodunovDomainError):
        state_from_godunov(params, [1.0, 1.0, 0.0, 0.0, 5.0])
    with pytest.raises(GodunovDomainError):
        state_from_godunov(params, [-1.0, 0.0, 0.0, 0.0, 5.0])


# ----------------------------------------------------------------------------
# B tensor


def test_b_time_block(params, rest, s0):
    c = DissipationCoeffs(eta=1.0, zeta=0.2, chi=0.9, mu=0.3)
    d = derive_coefficients(params, s0, c)
    b = assemble_b_tensor(rest, d, c)
    assert np.allclose(b.b[:, 0, :, 0], np.diag([-c.chi, -d.sigma, -d.sigma, -d.sigma, -c.mu]), atol=1e-14)


def test_b_space_block(params, rest, s0):
    c = DissipationCoeffs(eta=1.0, zeta=0.2, chi=0.9, mu=0.3)
    d = derive_coefficients(params, s0, c)
    b = assemble_b_tensor(rest, d, c)
    expect = np.diag([c.chi, 4 / 3 * c.eta + d.zeta_tilde, c.eta, c.eta, c.mu])
    assert np.allclose(b.b[:, 1, :, 1], expect, atol=1e-14)


def test_b_structure(params, rng):
    for _ in range(50):
        th, c, d = rand_setup(params, rng)
        fs = FluidState.moving(th, rand_v3(rng))
        b = assemble_b_tensor(fs, d, c).b
        assert np.all(b[:4, :, 4, :] == 0) and np.all(b[4, :, :4, :] == 0)
        xi = rng.normal(size=4)
        m = np.einsum("abcd,b,d->ac", b, xi, xi)
        assert np.allclose(m, m.T, atol=1e-12 * np.abs(m).max())


def test_b_without_diffusion(params, rest, s0):
    c = DissipationCoeffs(eta=1.0, chi=1.0, mu=0.0)
    b = assemble_b_tensor(rest, derive_coefficients(params, s0, c), c)
    assert np.all(b.b[4, :, 4, :] == 0)


def test_b_covariance(params, rng):
    for _ in range(30):
        th, c, d = rand_setup(params, rng)
        v = rand_v3(rng)
        b_rest = assemble_b_tensor(FluidState.moving(th), d, c)
        b_lab = assemble_b_tensor(FluidState.moving(th, v), d, c)
        diff = b_rest.transformed(boost(v)).b - b_lab.b
        assert np.abs(diff).max() <= 1e-10 * max(1.0, np.abs(b_lab.b).max())


def test_b_against_divergence_oracle(params, rng):
    """B contracted with second derivatives equals -div(Delta T, Delta N).

    The field is quadratic with vanishing first derivatives at the origin,
    so only the second-order part survives there. The divergence is taken
    by central differences with step 1e-4.
    """
    for _ in range(5):
        th, c, _ = rand_setup(params, rng)
        fs = FluidState.moving(th, rand_v3(rng, 0.5))
        k = rng.normal(size=(5, 4, 4)) * 0.3
        k = k + k.transpose(0, 2, 1)
        w0 = godunov_vars(fs)

        def at(x):
            w = w0 + 0.5 * np.einsum("cbd,b,d->c", k, x, x)
            st = state_from_godunov(params, w)
            g = GradientField(np.einsum("cbd,d->bc", k, x))
            return delta_tensors_covariant(st, g, derive_coefficients(params, st.thermo, c), c)

        h = 1e-4
        div = np.zeros(5)
        for beta in range(4):
            e = np.zeros(4)
            e[beta] = h
            tp, tm = at(e), at(-e)
            div[:4] += (tp.dT[:, beta] - tm.dT[:, beta]) / (2 * h)
            div[4] += (tp.dN[beta] - tm.dN[beta]) / (2 * h)
        b = assemble_b_tensor(fs, derive_coefficients(params, th, c), c)
        pred = np.einsum("abcd,cbd->a", b.b, covariant_godunov(k.reshape(5, 16).T).T.reshape(5, 4, 4))
        assert np.allclose(pred, -div, atol=1e-6 * max(1.0, np.abs(div).max()))
