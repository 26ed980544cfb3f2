import itertools
import math

import numpy as np
import pytest

from lnn.activation import InvalidExpansionPoint, sigmoid_derivative
from lnn.architecture import (
    OUTSIDE,
    LnnConfig,
    bandwidth_rule,
    build_architecture,
    build_partition,
    cube_index,
    cube_indices,
    default_weight_matrix,
    direction_vectors,
    feature_vector,
    network_for,
    neuron_affine_params,
    univariate_coeffs,
)
from lnn.basis import SingularBasisError, eval_monomials

R2 = math.sqrt(2)


def sup_error(d, q, h, u_sigma=-0.5, n=101):
    """max over a grid on [-h, h]^d of |features - B m|."""
    net = network_for(LnnConfig(d=d, q=q, u_sigma=u_sigma), h, np.zeros((1, d)))
    axis = np.linspace(-h, h, n if d == 1 else 41)
    Z = np.array(list(itertools.product(axis, repeat=d)))
    F = net.features(Z, np.zeros(d))
    target = eval_monomials(Z, np.zeros(d), net.idx) @ net.B.T
    return np.max(np.abs(F - target))


def test_univariate_coeffs_examples():
    gamma, beta = univariate_coeffs(1, 0.0)
    assert np.allclose(gamma, [-4, 4]) and np.allclose(beta, [0, 1])
    gamma, _ = univariate_coeffs(1, 0.5)
    assert np.allclose(gamma, [-4.25526, 4.25526], atol=1e-5)
    gamma, beta = univariate_coeffs(2, 0.5)
    s2 = sigmoid_derivative(0.5, 2)
    assert np.allclose(beta, [0, 1, 2])
    assert np.allclose(np.abs(gamma), np.array([1, 2, 1]) / abs(s2))
    assert np.array_equal(np.sign(gamma) * np.sign(s2), [1, -1, 1])


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_univariate_coeffs_reproduce_power(q):
    # sum_k gamma_k sigma(beta_k x + u) ~ x^q for small x
    gamma, beta = univariate_coeffs(q, -0.5)
    x = 1e-2
    val = sum(g * sigmoid_derivative(b * x - 0.5, 0) for g, b in zip(gamma, beta))
    assert val == pytest.approx(x**q, rel=5e-2)


def test_default_weight_matrix_examples():
    assert np.allclose(default_weight_matrix(1, 1), R2 * np.eye(2))
    W = default_weight_matrix(1, 2)
    assert np.allclose(W, (R2 / 2) * np.array([[2, 1, 0], [0, 1, 2]]))
    for d, q in [(1, 3), (2, 3), (3, 2)]:
        W = default_weight_matrix(d, q)
        assert np.allclose(np.linalg.norm(W, axis=0).max(), math.sqrt(d + 1))
        assert len({tuple(c) for c in W.T}) == W.shape[1]


def test_direction_vectors_examples():
    alphas = direction_vectors(default_weight_matrix(1, 1), 0.5)
    assert np.allclose(alphas, [[0.35355, 0], [0, 0.70711]], atol=1e-5)
    assert np.all(direction_vectors(default_weight_matrix(2, 2), 0.0)[:, 0] == 0)


@pytest.mark.parametrize("d,q,h", [(1, 2, 0.7), (2, 3, 1.5), (3, 2, 0.3)])
def test_direction_vectors_bounded_on_cube(d, q, h):
    alphas = direction_vectors(default_weight_matrix(d, q), h)
    corners = np.array(list(itertools.product([-h, h], repeat=d)))
    vals = alphas[:, 0][None, :] + corners @ alphas[:, 1:].T
    assert np.abs(vals).max() <= h + 1e-12


def test_neuron_affine_params_examples():
    alphas = direction_vectors(default_weight_matrix(1, 1), 0.5)
    _, beta = univariate_coeffs(1, 0.5)
    pis = neuron_affine_params(alphas, beta, 0.0)
    assert np.allclose(pis, [[0, 0], [0.35355, 0], [0, 0], [0, 0.70711]], atol=1e-5)
    pis = neuron_affine_params(direction_vectors(default_weight_matrix(2, 3), 1.0), np.arange(4.0), -0.5)
    assert pis.shape == (40, 3)
    assert np.allclose(pis[::4], [-0.5, 0, 0])


def test_build_partition_examples():
    h, c = build_partition(1.0, 2, 1)
    assert h == 0.5 and np.allclose(c.ravel(), [-0.5, 0.5])
    h, c = build_partition(3.0, 2, 2)
    assert h == 1.5 and len(c) == 4 and np.allclose(np.abs(c), 1.5)
    h, c = build_partition(1.0, 1, 3)
    assert h == 1.0 and np.allclose(c, 0)


def test_cube_index_examples():
    assert cube_index([0.3], 1.0, 2) == 1
    assert cube_index([1.0], 1.0, 2) == 1
    assert cube_index([1.5], 1.0, 2) == OUTSIDE
    assert cube_index([0.0], 1.0, 2) == 1  # shared face goes to the upper cube


def test_partition_exact(rng):
    arch = build_architecture(LnnConfig(d=2, q=2), M=3)
    assert np.array_equal(arch.cube_of(arch.centers), np.arange(9))
    X = rng.uniform(-3, 3, (500, 2))
    idx = cube_indices(X, 3.0, 3)
    assert np.all(np.abs(X - arch.centers[idx]) <= arch.h + 1e-12)


def test_bandwidth_rule_examples():
    h, M = bandwidth_rule(800, 2, 4, 3.0)
    assert 2.5 * 800 ** (-1 / 9.5) == pytest.approx(1.23695, abs=1e-5)
    assert (h, M) == (1.5, 2)
    hs = [bandwidth_rule(T, 2, 4, 3.0)[0] for T in (10**3, 10**5, 10**7, 10**9)]
    assert all(a >= b for a, b in zip(hs, hs[1:])) and hs[-1] < hs[0]
    assert bandwidth_rule(2, 1, 4, 0.1) == (0.1, 1)
    with pytest.raises(ValueError):
        bandwidth_rule(1, 1, 4, 3.0)


def test_architecture_invariants():
    arch = build_architecture(LnnConfig(d=2, q=3), M=2)
    assert arch.h * arch.M == 3.0
    assert arch.n_neurons == 160
    for j in range(arch.dq):
        for k in range(arch.q + 1):
            expect = arch.beta[k] * arch.alphas[j] + np.array([arch.config.u_sigma, 0, 0])
            assert np.allclose(arch.pis[j * (arch.q + 1) + k], expect)
    again = build_architecture(LnnConfig(d=2, q=3), M=2)
    for name in ("gamma", "beta", "pis", "D"):
        assert np.array_equal(getattr(arch, name), getattr(again, name))


def test_feature_vector_examples():
    net = network_for(LnnConfig(d=1, q=1, u_sigma=0.5), 0.5, [[0.0]])
    f = feature_vector(np.array([0.0]), np.array([0.0]), net)
    assert f[0] == pytest.approx(0.35355, abs=0.5**2)
    arch = build_architecture(LnnConfig(d=2, q=3), M=2)
    object.__setattr__(arch, "gamma", arch.gamma * 0)
    assert np.all(feature_vector(np.array([0.1, 0.2]), arch.centers[0], arch) == 0)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("q", [1, 2, 3])
def test_approximation_rate(d, q):
    ratio = sup_error(d, q, 1.0) / sup_error(d, q, 0.5)
    assert 0.7 * 2 ** (q + 1) <= ratio <= 1.4 * 2 ** (q + 1)


def test_composite_bound_improves_with_more_cubes(rng):
    from lnn.data import Dataset
    from lnn.regress import fit_regression, predict_many

    X = rng.uniform(-3, 3, (20000, 2))
    g = lambda Z: 1 + np.sin(Z.mean(axis=1))  # noqa: E731
    grid = np.array(list(itertools.product(np.linspace(-2.9, 2.9, 25), repeat=2)))
    errs = []
    for M in (1, 2, 4):
        arch = build_architecture(LnnConfig(d=2, q=2), M=M)
        fit = fit_regression(Dataset(g(X), X), arch)
        errs.append(np.max(np.abs(predict_many(fit, grid)[0] - g(grid))))
    assert errs[0] > errs[1] > errs[2]


def test_config_validation():
    with pytest.raises(InvalidExpansionPoint):
        LnnConfig(u_sigma=0.0, q=2)
    with pytest.raises(ValueError):
        LnnConfig(s=0.0)
    with pytest.raises(ValueError):
        LnnConfig(bandwidth=("h", None))
    with pytest.raises(ValueError):
        LnnConfig(d=1, q=1, weight_matrix=[[2.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        LnnConfig(d=1, q=1, weight_matrix=[[1.0, 1.0], [0.0, 0.0]])
    cfg = LnnConfig(d=2, q=3, bandwidth=("h", 1.4))
    assert LnnConfig.from_dict(cfg.to_dict()) == cfg


def test_user_weight_matrix_singular_basis():
    W = np.array([[1.0, 1.0], [0.0, 1e-14]])
    with pytest.raises(SingularBasisError):
        build_architecture(LnnConfig(d=1, q=1, weight_matrix=W), M=1)


def test_explicit_bandwidth_modes():
    assert build_architecture(LnnConfig(d=1, q=2, bandwidth=("h", 1.4))).M == 2
    assert build_architecture(LnnConfig(d=1, q=2, bandwidth=("cubes", 5))).h == pytest.approx(0.6)
    with pytest.raises(ValueError):
        build_architecture(LnnConfig(d=1, q=2))
