import math

import numpy as np
import pytest
from scipy.special import zeta

from spinthermo.kernel import (
    BINARY_EIGENVALUE,
    SQRT353,
    ExactCylinder,
    KernelDomainError,
    KernelSpec,
    MonteCarlo,
    binary_apply,
    binary_grid,
    binary_operator,
    binary_quadratic,
    duality_residual,
    export_kernel_csv,
    fkg_bound_quotient,
    kernel_eigenfunction,
    kernel_eigenfunction_table,
    kernel_eval,
    pressure_upper_bound,
    product_marginals,
    quadrature_measure,
    taylor_coefficients,
)
from spinthermo.potential import binary, dyson, ising, product, product_power
from spinthermo.space import BoundaryTail, SpinWord, embedding, word_matrix
from spinthermo.transfer import power_iterate, product_eigenpair


def spins(rng, n):
    return rng.choice([-1.0, 1.0], n)


def test_zero_kernel(rng):
    p = ising([0.0, 0.0, 0.0])
    w = KernelSpec.from_potential(p)
    assert kernel_eval(w, spins(rng, 5), spins(rng, 5)) == 0.0
    assert duality_residual(p, w, 1, spins(rng, 5), spins(rng, 5)) == 0.0
    assert kernel_eigenfunction(p, w, spins(rng, 5), ExactCylinder(3)) == pytest.approx(1.0)


def test_product_kernel_by_hand():
    p = product([1.0, 0.5, 0.25])
    w = KernelSpec.from_potential(p)
    x = np.array([1.0, -1.0, 1.0])
    y = np.array([-1.0, -1.0, 1.0])
    # alpha_1 = 0.75, alpha_2 = 0.25, alpha_3 = 0
    assert kernel_eval(w, y, x) == pytest.approx(0 * 0.75 + (-2) * 0.25)


def test_kernel_symmetry(rng):
    for p in (product_power(3.0, K=16), dyson(3.0, K=16)):
        w = KernelSpec.from_potential(p)
        for _ in range(20):
            x, y = spins(rng, 16), spins(rng, 16)
            assert kernel_eval(w, x, y) == pytest.approx(kernel_eval(w, y, x), abs=1e-12)


def test_ising_kernel_by_hand():
    # c = (1, 2): W = y0 (x0 c1 + x1 c2) + y1 x0 c2
    p = ising([1.0, 2.0])
    w = KernelSpec.from_potential(p)
    x, y = np.array([1.0, -1.0]), np.array([1.0, 1.0])
    assert kernel_eval(w, y, x) == pytest.approx((1 - 2) + 2)


def test_product_duality_explicit(rng):
    p = product([1.0, 0.5, 0.25])
    w = KernelSpec.from_potential(p)
    for _ in range(200):
        a = int(rng.choice([-1, 1]))
        assert duality_residual(p, w, a, spins(rng, 6), spins(rng, 6)) < 1e-12


def test_ising_duality_with_field(rng):
    p = ising([0.7, -0.3, 0.2], h=0.4)
    w = KernelSpec.from_potential(p)
    for _ in range(100):
        assert duality_residual(p, w, int(rng.choice([-1, 1])), spins(rng, 6), spins(rng, 6)) < 1e-12


def test_slow_decay_needs_alternating_tail():
    p = dyson(1.5, K=32)
    w = KernelSpec.from_potential(p)
    word = SpinWord.parse("+-+")
    with pytest.raises(KernelDomainError, match="kernel undefined off X̃"):
        kernel_eval(w, (word, BoundaryTail.plus()), (word, BoundaryTail.plus()))
    v = kernel_eval(w, (word, BoundaryTail.plus()), (word, BoundaryTail.alternating()))
    assert math.isfinite(v)
    phi = kernel_eigenfunction(p, w, (word, BoundaryTail.alternating()))
    assert phi > 0 and math.isfinite(phi)


def test_monte_carlo_refused_for_ising():
    p = dyson(3.0, K=8)
    with pytest.raises(KernelDomainError, match="independence not established"):
        kernel_eigenfunction(p, KernelSpec.from_potential(p), np.ones(8), MonteCarlo(100, 1))


def test_product_marginals_are_tanh_partial_sums():
    p = product_power(3.0, K=24)
    m = product_marginals(p)
    assert m.size == 20
    assert np.allclose(m, np.tanh(np.cumsum(p.c)[:20]), atol=1e-12)


def test_kernel_eigenfunction_ratio_constant(rng):
    p = product_power(3.0, K=32)
    w = KernelSpec.from_potential(p)
    _, phi = product_eigenpair(p)
    xs = rng.choice([-1.0, 1.0], (40, 40))
    r = np.array([kernel_eigenfunction(p, w, x, ExactCylinder(10)) for x in xs]) / phi(xs)
    assert np.ptp(r) / r.mean() < 1e-12


def test_exact_cylinder_depth_stability():
    p = product_power(3.0, K=32)
    w = KernelSpec.from_potential(p)
    x = np.ones(32)
    vals = [kernel_eigenfunction(p, w, x, ExactCylinder(d)) for d in range(10, 15)]
    assert all(abs(b / a - 1) < 0.01 for a, b in zip(vals, vals[1:]))


def test_monte_carlo_seeded():
    p = product_power(3.0, K=24)
    w = KernelSpec.from_potential(p)
    x = np.ones(24)
    a = kernel_eigenfunction(p, w, x, MonteCarlo(5000, 11))
    assert a == kernel_eigenfunction(p, w, x, MonteCarlo(5000, 11))
    assert a != kernel_eigenfunction(p, w, x, MonteCarlo(5000, 12))


def test_fkg_quotient_below_one():
    p = dyson(3.0, K=32)
    q = fkg_bound_quotient(p, KernelSpec.from_potential(p), depth=10)
    assert 0 < q < 1


def test_paired_quadrature_symmetric():
    p = dyson(3.0, K=32)
    parts = quadrature_measure(p, ExactCylinder(10, paired=True))
    means = sum(part.site_means() for part in parts)
    assert np.max(np.abs(means)) < 1e-12


def test_pressure_bound_against_zeta():
    b = pressure_upper_bound(3.0, 1.0, K=64)
    assert b.truncated < math.log(2 * math.cosh(zeta(3.0))) <= b.bound
    assert pressure_upper_bound(3.0, 1e-9).bound == pytest.approx(math.log(2), abs=1e-8)
    with pytest.raises(ValueError, match="bound derived for γ>2 regime"):
        pressure_upper_bound(2.0, 1.0)


def test_pressure_estimate_below_bound():
    for beta in (0.5, 1.0):
        est, _ = power_iterate(dyson(3.0, beta=beta, K=64), 10, depth=1)
        assert est.pressure < pressure_upper_bound(3.0, beta, 64).truncated


def test_binary_apply_constant():
    t = binary_grid()
    assert t.size == 2048
    assert np.allclose(binary_apply(lambda s: np.ones_like(s), t), 2 * np.cosh(t / 2))
    assert np.allclose(binary_apply(np.ones(2048), t), 2 * np.cosh(t / 2))


def test_binary_symbolic_agreement():
    # the binary potential on words acts like the interval operator on the embedding
    p = binary(K=40)
    depth = 8
    rows = np.concatenate([word_matrix(depth), np.ones((1 << depth, 40))], axis=1).astype(float)
    t = rows[:, :40] @ 0.5 ** np.arange(1, 41)
    f = lambda r: np.cos(r[:, :40] @ 0.5 ** np.arange(1, 41))  # noqa: E731
    from spinthermo.transfer import apply_pointwise

    sym = apply_pointwise(p, f, rows)
    interval = binary_apply(np.cos, t)
    assert np.allclose(sym, interval, atol=1e-10)


def test_binary_taylor():
    c = taylor_coefficients(binary_operator(binary_quadratic))
    target = BINARY_EIGENVALUE * np.array([binary_quadratic(0.0), 0.0, 0.75])
    assert np.all(np.abs(c - target) < 1e-6)
    assert abs(c[0] - 3 * (17 + SQRT353) / 16) < 1e-12


def test_taylor_of_known_function():
    c = taylor_coefficients(np.exp)
    assert np.allclose(c, [1, 1, 0.5], atol=1e-7)


def test_kernel_csv(tmp_path):
    p = product_power(3.3, K=16)
    w = KernelSpec.from_potential(p)
    q = ExactCylinder(8)
    t, phi = kernel_eigenfunction_table(p, w, 3, BoundaryTail.plus(), q)
    assert np.array_equal(t, embedding(3))
    export_kernel_csv(t, phi, q, tmp_path / "k.csv")
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "t_embedding,phi_value,quadrature_kind,depth_or_samples"
    assert lines[1].endswith(",exact_cylinder,8")
