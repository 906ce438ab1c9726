import numpy as np
import pytest

from groupvar import liegroup as lg
from groupvar.errors import DomainError


def rand_alg(n, seed, scale=1.0):
    return lg.random_algebra(n, np.random.default_rng(seed), scale)


def test_exp_of_zero_is_identity():
    z = lg.AlgebraElement(np.zeros((3, 3)))
    assert np.array_equal(lg.exp(z).matrix, np.eye(3))


def test_exp_planar_rotation_closed_form():
    e12 = lg.skew_basis(2)[0]
    g = lg.exp((np.pi / 2) * e12)
    assert np.allclose(g.matrix, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-14)
    theta = 0.37
    g = lg.exp(theta * e12)
    expected = [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
    assert np.allclose(g.matrix, expected, atol=1e-14)


@pytest.mark.parametrize("n,seed", [(2, 0), (3, 1), (4, 2), (5, 3)])
def test_exp_inverse_pair(n, seed):
    xi = rand_alg(n, seed)
    g = lg.exp(xi).matrix @ lg.exp(-1.0 * xi).matrix
    assert np.linalg.norm(g - np.eye(n)) <= 1e-12


def test_exp_lands_on_group():
    for seed in range(5):
        g = lg.exp(rand_alg(3, seed, 2.0))
        assert np.linalg.norm(g.matrix.T @ g.matrix - np.eye(3)) <= 1e-12
        assert np.linalg.det(g.matrix) > 0


def test_log_identity():
    assert np.array_equal(lg.log_near_identity(lg.identity(4)).matrix,
                          np.zeros((4, 4)))


@pytest.mark.parametrize("seed", range(6))
def test_log_exp_roundtrip(seed):
    xi = rand_alg(3, seed, 0.5 / 2.0)
    back = lg.log_near_identity(lg.exp(xi))
    assert np.linalg.norm(back.matrix - xi.matrix) <= 1e-10


def test_log_outside_region_raises():
    e12 = lg.skew_basis(2)[0]
    far = lg.exp(np.pi * e12)
    with pytest.raises(DomainError):
        lg.log_near_identity(far)


def test_maurer_cartan_at_identity():
    xi = rand_alg(3, 0)
    d = lg.TangentVector(lg.identity(3), xi.matrix)
    assert np.allclose(lg.maurer_cartan(d).matrix, xi.matrix, atol=1e-15)


def test_maurer_cartan_analytic_curve():
    g = lg.exp(rand_alg(3, 1))
    xi = rand_alg(3, 2)
    d = lg.TangentVector(g, g.matrix @ xi.matrix)
    assert np.allclose(lg.maurer_cartan(d).matrix, xi.matrix, atol=1e-14)
    # left-translating the value back recovers the ambient vector
    back = g.matrix @ lg.maurer_cartan(d).matrix
    assert np.linalg.norm(back - d.vector) <= 1e-14


def test_maurer_cartan_left_invariance():
    g = lg.exp(rand_alg(3, 3))
    h = lg.exp(rand_alg(3, 4))
    xi = rand_alg(3, 5)
    d = lg.TangentVector(g, g.matrix @ xi.matrix)
    hd = lg.TangentVector(h @ g, h.matrix @ g.matrix @ xi.matrix)
    assert np.linalg.norm(lg.maurer_cartan(d).matrix
                          - lg.maurer_cartan(hd).matrix) <= 1e-13


def test_tangency_violation_rejected():
    g = lg.exp(rand_alg(3, 6))
    with pytest.raises(ValueError):
        lg.TangentVector(g, np.eye(3))


def test_adjoint_identity_and_oracle():
    xi = rand_alg(3, 7)
    assert np.allclose(lg.adjoint(lg.identity(3), xi).matrix, xi.matrix)
    g = lg.exp(rand_alg(3, 8))
    e12 = lg.skew_basis(3)[0]
    oracle = g.matrix @ e12.matrix @ g.matrix.T
    assert np.linalg.norm(lg.adjoint(g, e12).matrix - oracle) <= 1e-14


def test_adjoint_composition():
    g = lg.exp(rand_alg(3, 9))
    h = lg.exp(rand_alg(3, 10))
    xi = rand_alg(3, 11)
    lhs = lg.adjoint(g @ h, xi)
    rhs = lg.adjoint(g, lg.adjoint(h, xi))
    assert np.linalg.norm(lhs.matrix - rhs.matrix) <= 1e-13


def test_coadjoint_identity_and_duality():
    mu = lg.CoAlgebraElement(rand_alg(3, 12).matrix)
    assert np.allclose(lg.coadjoint(lg.identity(3), mu).matrix, mu.matrix)
    g = lg.exp(rand_alg(3, 13))
    for e in lg.skew_basis(3):
        lhs = lg.pairing(lg.coadjoint(g, mu), e)
        rhs = lg.pairing(mu, lg.adjoint(g, e))
        assert abs(lhs - rhs) <= 1e-13


def test_coadjoint_contravariance():
    g = lg.exp(rand_alg(3, 14))
    h = lg.exp(rand_alg(3, 15))
    mu = lg.CoAlgebraElement(rand_alg(3, 16).matrix)
    lhs = lg.coadjoint(g, lg.coadjoint(h, mu))
    rhs = lg.coadjoint(h @ g, mu)
    assert np.linalg.norm(lhs.matrix - rhs.matrix) <= 1e-13


def test_coadjoint_inverse():
    g = lg.exp(rand_alg(3, 17))
    mu = lg.CoAlgebraElement(rand_alg(3, 18).matrix)
    back = lg.coadjoint(g, lg.coadjoint_inverse(g, mu))
    assert np.linalg.norm(back.matrix - mu.matrix) <= 1e-14


def test_pairing_gram_matrix():
    basis = lg.skew_basis(4)
    for a, ea in enumerate(basis):
        for b, eb in enumerate(basis):
            mu = lg.CoAlgebraElement(ea.matrix)
            expected = 2.0 if a == b else 0.0
            assert lg.pairing(mu, eb) == pytest.approx(expected, abs=1e-15)
    zero = lg.CoAlgebraElement(np.zeros((4, 4)))
    assert lg.pairing(zero, basis[0]) == 0.0


def test_project_small_perturbation():
    rng = np.random.default_rng(19)
    m = np.eye(3) + 1e-9 * rng.standard_normal((3, 3))
    assert np.linalg.norm(lg.project_to_group(m).matrix - np.eye(3)) <= 1e-8


def test_project_fixes_group_elements():
    g = lg.exp(rand_alg(3, 20))
    assert np.linalg.norm(lg.project_to_group(g.matrix).matrix - g.matrix) <= 1e-14


def test_project_rejects_reflections_and_singular():
    with pytest.raises(DomainError):
        lg.project_to_group(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(DomainError):
        lg.project_to_group(np.zeros((3, 3)))


def test_group_element_validation():
    with pytest.raises(ValueError):
        lg.GroupElement(np.eye(3) + 1e-3)
    with pytest.raises(ValueError):
        lg.GroupElement(np.diag([1.0, -1.0, 1.0]))
    rng = np.random.default_rng(21)
    near = lg.exp(rand_alg(3, 22)).matrix + 1e-11 * rng.standard_normal((3, 3))
    cleaned = lg.GroupElement(near)
    assert np.linalg.norm(cleaned.matrix.T @ cleaned.matrix - np.eye(3)) <= 1e-14


def test_algebra_element_skew_enforced():
    rng = np.random.default_rng(23)
    raw = rng.standard_normal((4, 4))
    xi = lg.AlgebraElement(raw)
    assert np.array_equal(xi.matrix, -xi.matrix.T)
    assert np.allclose(xi.matrix, (raw - raw.T) / 2.0)


def test_immutability():
    g = lg.identity(3)
    with pytest.raises(AttributeError):
        g.matrix = np.zeros((3, 3))
    with pytest.raises(ValueError):
        g.matrix[0, 0] = 5.0


def test_basis_indices_order():
    assert lg.skew_basis_indices(3) == [(0, 1), (0, 2), (1, 2)]
    assert lg.algebra_dim(5) == 10
    coords = np.arange(1.0, 4.0)
    m = lg.coords_to_skew(coords, 3)
    assert np.array_equal(lg.skew_to_coords(m), coords)
