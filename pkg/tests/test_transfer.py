import json
import math

import numpy as np
import pytest

from conftest import brute_ising
from spinthermo.gibbs import build_measure, expect
from spinthermo.potential import class_F_check, dyson, ising, product, product_power, zero
from spinthermo.space import BoundaryTail, TabulatedFunction, is_increasing, phi_table, word_matrix
from spinthermo.transfer import (
    DepthCapError,
    apply_pointwise,
    cesaro_measure,
    eigen_defect,
    export_eigen_json,
    export_zn_csv,
    finite_volume_duality,
    mirrored_symmetry_check,
    power_iterate,
    product_eigenpair,
    quotient_sequence,
    ruelle_power,
    transfer_apply,
    transfer_power,
    uniqueness_diagnostic,
    word_points,
)


def test_zero_potential_gives_two():
    lf = transfer_apply(zero(), TabulatedFunction.constant(1.0))
    assert np.allclose(lf.values, 2.0)


def test_single_coupling_table():
    beta = 0.8
    lf = transfer_apply(ising([beta], K=1), TabulatedFunction.constant(1.0))
    x0 = 2.0 * (np.arange(2) & 1) - 1
    assert np.allclose(lf.values, 2 * np.cosh(beta * x0))


def test_table_against_brute_force(rng):
    c = [0.6, -0.4, 0.3]
    A = brute_ising(c, 0.2)
    p = ising(c, h=0.2)
    f = TabulatedFunction(4, rng.normal(size=16))
    lf = transfer_apply(p, f)
    for k, x in enumerate(word_matrix(lf.depth)):
        x = list(x) + [1] * 5
        want = sum(math.exp(A([a] + x)) * f([a] + x) for a in (1, -1))
        assert lf.values[k] == pytest.approx(want, rel=1e-13)


def test_depth_cap():
    with pytest.raises(DepthCapError, match="depth cap exceeded; increase cap or lower K"):
        transfer_apply(dyson(2.2, K=32), TabulatedFunction.constant(1.0))


def test_linearity_and_positivity(rng):
    p = dyson(2.2, K=8)
    f = TabulatedFunction(6, rng.normal(size=64))
    g = TabulatedFunction(6, rng.normal(size=64))
    lhs = transfer_apply(p, f * 2.5 + g)
    rhs = transfer_apply(p, f) * 2.5 + transfer_apply(p, g)
    assert lhs.allclose(rhs, rtol=1e-12)
    pos = TabulatedFunction(6, np.abs(f.values))
    assert (transfer_apply(p, pos).values >= 0).all()


def test_pointwise_engine_matches_tables(rng):
    p = dyson(1.88, K=8)
    f = TabulatedFunction(5, rng.normal(size=32))
    table = transfer_power(p, f, 4)
    pts = word_points(table.depth, BoundaryTail.plus(), 12)
    assert np.allclose(ruelle_power(p, 4, pts, f), table.values, rtol=1e-12)


@pytest.mark.parametrize("y", [BoundaryTail.plus(), BoundaryTail.alternating(), BoundaryTail.parse("word:+-+-")])
def test_finite_volume_duality(y, rng):
    p = dyson(2.2, K=8)
    for n in (1, 3, 5):
        f = TabulatedFunction(3, rng.random(8))
        assert abs(finite_volume_duality(p, n, y, f)) < 1e-10


def test_product_eigenpair_exact_on_table():
    p = product_power(3.0, K=12)
    lam, phi = product_eigenpair(p)
    rows = word_matrix(12).astype(float)
    table = TabulatedFunction(12, phi(rows))
    lphi = transfer_apply(p, table)
    assert np.max(np.abs(lphi.values - lam * table.values)) / np.max(table.values) < 1e-10
    assert eigen_defect(p, phi, lam, rows) < 1e-12


def test_product_eigenvalue_formula():
    p = product([1.0, 0.5, 0.25])
    lam, _ = product_eigenpair(p)
    assert lam == pytest.approx(2 * math.cosh(1.75))


def test_power_iterate_trivial_cases():
    est, z = power_iterate(zero(), 1, depth=4)
    assert est.lam == pytest.approx(2.0) and est.pressure == pytest.approx(math.log(2))
    assert np.allclose(z.values, 1.0)
    est, z = power_iterate(dyson(2.2, K=16), 5, depth=6)
    assert z(np.ones(16)) == pytest.approx(1.0)
    assert est.pressure == math.log(est.lam)


def test_power_iterate_product_converges():
    p = product_power(3.0, K=16)
    lam, _ = product_eigenpair(p)
    errs = [abs(power_iterate(p, n, depth=1)[0].lam - lam) for n in (2, 4, 8, 14)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # once every coupling is reached the ratio is exact
    assert power_iterate(p, 15, depth=1)[0].lam == pytest.approx(lam, rel=1e-13)


def test_quotient_sequences():
    one = TabulatedFunction.constant(1.0)
    qp, qm = quotient_sequence(dyson(2.2), one, 4)
    assert np.allclose(qp, 1) and np.allclose(qm, 1)
    qp, qm = quotient_sequence(zero(), phi_table([0]), 4)
    assert np.allclose(qp, 0.5) and np.allclose(qm, 0.5)
    qp, qm = quotient_sequence(dyson(2.2, K=64), phi_table([0]), 10)
    assert all(b <= a + 1e-12 for a, b in zip(qp, qp[1:]))
    assert all(b >= a - 1e-12 for a, b in zip(qm, qm[1:]))
    gaps = np.array(qp) - np.array(qm)
    assert (gaps >= 0).all() and all(b < a for a, b in zip(gaps, gaps[1:]))


def test_quotient_equals_finite_volume_expectation():
    p = dyson(2.2, K=32)
    qp, _ = quotient_sequence(p, phi_table([0, 1]), 5)
    assert qp[4] == pytest.approx(expect(build_measure(p, 5, BoundaryTail.plus()), phi_table([0, 1])), rel=1e-12)


def test_cesaro_zero_potential():
    fam = [(), (0,), (0, 2), (1, 3)]
    for sign in (1, -1):
        c = cesaro_measure(zero(), sign, 10, fam, lam=2.0)
        for B, v in c.values.items():
            assert v == pytest.approx(2.0 ** -len(B))


def test_cesaro_class_f_ordering():
    p = product([0.8, 0.4, 0.2, 0.1])
    assert class_F_check(p, 4).member
    fam = [(), (0,), (1,), (0, 2)]
    plus = cesaro_measure(p, 1, 12, fam)
    minus = cesaro_measure(p, -1, 12, fam, lam=plus.lam)
    for B in plus.values:
        if B:
            assert plus.normalized()[B] >= minus.normalized()[B] - 1e-12


@pytest.mark.parametrize("gamma", [2.5, 3.0, 4.0])
def test_cesaro_stability(gamma):
    c = cesaro_measure(dyson(gamma, K=64), 1, 18, [()])
    assert c.stability[frozenset()] < 0.01
    assert 0.5 < c.values[frozenset()] < 2


def test_monotone_preservation_class_f(rng):
    p = product([0.8, 0.4, 0.2, 0.1, 0.05])
    for _ in range(5):
        # positive weights on the up-spins give an increasing function
        wts = rng.random(4)
        f = TabulatedFunction(4, word_matrix(4) @ wts + 5.0)
        assert is_increasing(f)
        assert is_increasing(transfer_apply(p, f), atol=1e-12)


def test_uniqueness_diagnostic():
    rep = uniqueness_diagnostic(zero(), 6)
    assert np.allclose(rep.all_gaps, 0)
    rep = uniqueness_diagnostic(dyson(2.5, beta=0.5, K=64), 8)
    assert (rep.all_gaps >= -1e-12).all()
    with pytest.raises(ValueError):
        uniqueness_diagnostic(ising([-1.0]), 4)


def test_mirrored_check():
    assert mirrored_symmetry_check(dyson(2.2, K=32), 1) < 1e-14
    assert mirrored_symmetry_check(dyson(2.2, K=64), 6, depth=8) < 1e-10
    with pytest.raises(ValueError):
        mirrored_symmetry_check(dyson(2.2, h=0.2, K=16), 2)


def test_apply_pointwise_constant():
    pts = np.ones((3, 5))
    assert np.allclose(apply_pointwise(zero(), lambda r: np.ones(len(r)), pts), 2.0)


def test_exports(tmp_path):
    est, z = power_iterate(dyson(2.2, K=16), 3, depth=3)
    export_zn_csv(z, tmp_path / "z.csv")
    lines = (tmp_path / "z.csv").read_text().splitlines()
    assert lines[0] == "t,z_value" and len(lines) == 9
    ts = [float(l.split(",")[0]) for l in lines[1:]]
    assert ts == sorted(ts)
    export_eigen_json(est, tmp_path / "e.json")
    data = json.loads((tmp_path / "e.json").read_text())
    assert set(data) == {"lambda", "pressure", "n_iters", "residual", "ratio_sequence", "tail_bound"}
