import numpy as np
import pytest

from cornerflow import (ConfigError, CornerData, GridFunction,
                        ValidationError, alpha_coefficient,
                        constant_shift_residual, duhamel_integral,
                        load_profile, nonlinearity, reconstruct_U,
                        save_profile, self_similarity_residual,
                        solve_similarity_profile, symmetric_grid)
from cornerflow.errors import (GridMismatch, NoConvergence, StaleProfile)

PHI0_FROZEN = 0.0779566288  # A = B = 0.1 reference, grid-converged level


def test_corner_data_validation():
    with pytest.raises(ValidationError):
        CornerData(np.nan, 0.1)
    c = CornerData(0.2, -0.1)
    assert c.size == 0.2 and c.within_cap()
    assert not CornerData(0.5, 0.0).within_cap()


def test_slope_cap_enforced(ktable):
    with pytest.raises(ConfigError):
        solve_similarity_profile(CornerData(0.5, 0.5), table=ktable)
    with pytest.raises(ValidationError):
        solve_similarity_profile(CornerData(0.1, 0.1))


def test_alpha_coefficient_small_and_bounded():
    v = np.linspace(-10.0, 10.0, 1001)
    a = alpha_coefficient(v)
    assert np.all(a >= 0.0) and np.all(a < 1.0)
    assert alpha_coefficient(np.zeros(1))[0] == 0.0
    exact = 1.0 - 1.0 / (1.0 + v ** 2) ** 2
    assert np.max(np.abs(a - exact)) < 1e-15


def test_nonlinearity_unit_example():
    xs = symmetric_grid(2.0, 32)
    one = GridFunction(xs, np.ones(33), 1.0, 1.0, "constant", 1e-9)
    out = nonlinearity(one, one, one)
    # alpha(1) = 3/4 and F(1) = 3/8, so the density is 9/8 everywhere
    assert np.max(np.abs(out.ys - 9.0 / 8.0)) < 1e-15
    other = GridFunction(symmetric_grid(3.0, 32), np.ones(33), 1.0, 1.0,
                         "constant", 1e-9)
    with pytest.raises(GridMismatch):
        nonlinearity(one, one, other)


def test_linear_data_shortcut(ktable):
    prof = solve_similarity_profile(CornerData(0.1, -0.1), table=ktable)
    assert prof.iterations == 1
    assert np.max(np.abs(prof.psi.ys - 0.1)) < 1e-10


def test_picard_monotone_after_two(profile_8k):
    hist = profile_8k.residual_history
    assert profile_8k.converged
    assert all(b < a for a, b in zip(hist[1:], hist[2:]))


def test_profile_phi0_frozen(phi_8k):
    i0 = int(np.argmin(np.abs(phi_8k.xs)))
    assert phi_8k.ys[i0] == pytest.approx(PHI0_FROZEN, abs=5e-9)


def test_profile_symmetry_a_equals_b(profile_8k, phi_8k):
    # psi odd, phi - phi(0) even for symmetric corners
    psi = profile_8k.psi.ys
    assert np.max(np.abs(psi + psi[::-1])) < 1e-9
    i0 = int(np.argmin(np.abs(phi_8k.xs)))
    dev = phi_8k.ys - phi_8k.ys[i0]
    assert np.max(np.abs(dev - dev[::-1])) < 1e-9


def test_decay_constants_exponents(profile_8k):
    for ell in (1, 2):
        c, expo = profile_8k.decay_constants[ell]
        assert expo == pytest.approx(-ell / 4.0, abs=0.02)
        assert c > 0.0
    _, expo0 = profile_8k.decay_constants[0]
    assert abs(expo0) < 0.02


def test_quadrature_self_consistency(profile_8k, ktable):
    # doubling the nodes and switching the substitution must agree
    base = duhamel_integral(profile_8k.psi, 1.0, 2, ktable, nodes=32)
    fine = duhamel_integral(profile_8k.psi, 1.0, 2, ktable, nodes=64)
    assert np.max(np.abs(base.ys - fine.ys)) < 1e-8
    jac = duhamel_integral(profile_8k.psi, 1.0, 2, ktable, nodes=96,
                           method="s-jacobi")
    assert np.max(np.abs(fine.ys - jac.ys)) < 1e-6


def test_duhamel_validation(profile_8k, ktable):
    with pytest.raises(ValidationError):
        duhamel_integral(profile_8k.psi, -1.0, 2, ktable)
    with pytest.raises(ValidationError):
        duhamel_integral(profile_8k.psi, 1.0, 5, ktable)
    with pytest.raises(ConfigError):
        duhamel_integral(profile_8k.psi, 1.0, 2, ktable, nodes=4)
    with pytest.raises(ConfigError):
        duhamel_integral(profile_8k.psi, 1.0, 2, ktable, method="trap")


def test_reconstruct_slope_consistency(profile_8k, ktable):
    for t in (0.1, 1.0, 10.0):
        sol = reconstruct_U(profile_8k, t, ktable)
        assert sol.slope_consistency < 1e-6
        assert (sol.phi is not None) == (t == 1.0)


def test_reconstruct_validation(profile_8k, ktable):
    with pytest.raises(ValidationError):
        reconstruct_U(profile_8k, 0.0, ktable)
    stale = type(profile_8k).__new__(type(profile_8k))
    stale.__dict__.update(profile_8k.__dict__)
    stale.converged = False
    with pytest.raises(StaleProfile):
        reconstruct_U(stale, 1.0, ktable)


def test_no_convergence_path(ktable):
    with pytest.raises(NoConvergence) as err:
        solve_similarity_profile(CornerData(0.1, 0.1), table=ktable,
                                 max_iter=2,
                                 xs=symmetric_grid(40.0, 1024))
    assert len(err.value.history) == 2


def test_self_similarity_validation(profile_8k, ktable):
    with pytest.raises(ValidationError):
        self_similarity_residual(profile_8k, -1.0, 1.0, ktable)
    assert self_similarity_residual(profile_8k, 1.0, 1.0, ktable) == 0.0


def test_constant_shift_comes_back(profile_8k, ktable):
    sol = reconstruct_U(profile_8k, 1.0, ktable)
    for c in (0.05, 0.1):
        assert constant_shift_residual(sol, c, ktable) \
            == pytest.approx(c, abs=1e-5)


def test_save_load_roundtrip(profile_8k, ktable, tmp_path):
    p = tmp_path / "profile.csv"
    save_profile(profile_8k, p)
    back = load_profile(p, ktable)
    assert np.array_equal(back.psi.ys, profile_8k.psi.ys)
    assert back.iterations == profile_8k.iterations
    assert back.corner.A == profile_8k.corner.A
    assert back.decay_constants[1] == pytest.approx(
        profile_8k.decay_constants[1])
    sol = reconstruct_U(back, 1.0, ktable)
    assert sol.slope_consistency < 1e-6


def test_initial_trace_rate(profile_8k, ktable):
    # |U(.,t) - corner| / t^{1/4} stays bounded as t -> 0
    from cornerflow import corner_function, inner_sup
    ratios = []
    for t in (1e-3, 1e-2, 1e-1, 1.0):
        sol = reconstruct_U(profile_8k, t, ktable)
        cab = corner_function(0.1, 0.1, sol.U.xs)
        ratios.append(inner_sup(sol.U.ys - cab.ys) / t ** 0.25)
    assert max(ratios) / min(ratios) < 1.2
