import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from tensoredit.errors import ContractError, DimensionError, NormalisationError
from tensoredit.linalg import principal_angles
from tensoredit.mpca import compute_bases
from tensoredit.regression import RegressionConfig, fit
from tensoredit.synth import (attribute_probe, make_synthetic, mod_metric, planted_first_order,
                              planted_triples, sample, sample_pairs)


# -- MOD ---------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 7])
def test_mod_identity_is_zero(n):
    assert mod_metric(np.eye(n)) == 0.0


def test_mod_uniform_leakage():
    assert mod_metric(np.ones((3, 3))) == pytest.approx(1 / 3, abs=1e-15)


def test_mod_worked_example():
    a = [[4, 1, 1], [1, 4, 1], [1, 1, 4]]
    assert oracles.mod(a) == pytest.approx(1 / 6, abs=1e-15)
    assert abs(mod_metric(a) - 1 / 6) <= 1e-12


@pytest.mark.parametrize("perm", [[1, 0], [2, 0, 1], [3, 1, 0, 2]])
def test_mod_of_permutation_matrix_counts_moved_attributes(perm):
    # Only fixed points land on the diagonal; each moved column contributes 1.
    n = len(perm)
    moved = sum(i != p for i, p in enumerate(perm))
    assert mod_metric(np.eye(n)[perm]) == pytest.approx(moved / (n * n - n), abs=1e-15)


@given(arrays(np.float64, (4, 4), elements=st.floats(0.01, 100)), st.permutations(range(4)))
def test_mod_invariant_to_attribute_relabelling(a, perm):
    p = np.eye(4)[list(perm)]
    assert mod_metric(p @ a @ p.T) == pytest.approx(mod_metric(a), rel=1e-12)


@given(arrays(np.float64, (4, 4), elements=st.floats(0.01, 100)), st.integers(0, 3),
       st.sampled_from([0.5, 2.0, 8.0]))
def test_mod_column_scale_invariance(a, col, factor):
    b = a.copy()
    b[:, col] *= factor
    assert mod_metric(b) == mod_metric(a)


@given(arrays(np.float64, (3, 3), elements=st.floats(0.01, 100)))
def test_mod_matches_oracle(a):
    assert mod_metric(a) == pytest.approx(oracles.mod(a), rel=1e-12)


def test_mod_errors():
    with pytest.raises(NormalisationError):
        mod_metric([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DimensionError):
        mod_metric([[1.0]])
    with pytest.raises(DimensionError):
        mod_metric(np.ones((2, 3)))
    with pytest.raises(ContractError):
        mod_metric([[1.0, -1.0], [0.0, 1.0]])


# -- synthetic models ----------------------------------------------------------

def test_scalar_dense_model():
    model = make_synthetic(1, (1, 1, 1), "dense", seed=3)
    w = model.map.item()
    z, x = sample(model, 10, 0)
    np.testing.assert_array_equal(x.reshape(-1), z.reshape(-1) * w)


def test_noiseless_generation_is_deterministic_and_linear():
    model = make_synthetic(5, (3, 2, 2), "dense", seed=0)
    z = np.random.default_rng(1).standard_normal(5)
    np.testing.assert_array_equal(model.generate(z), model.generate(z))
    zs, xs = sample(model, 200, 2)
    coef, *_ = np.linalg.lstsq(zs, xs.reshape(200, -1), rcond=None)
    assert np.abs(zs @ coef - xs.reshape(200, -1)).max() <= 1e-10


def test_sampling_is_seeded():
    model = make_synthetic(4, (2, 3, 2), "dense", noise_sigma=0.1, seed=0)
    a, b = sample(model, 30, 5), sample(model, 30, 5)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))
    assert not np.array_equal(a[1], sample(model, 30, 6)[1])
    assert len(sample_pairs(model, 3, 0)) == 3


def test_latent_mean_concentrates():
    model = make_synthetic(4, (1, 1, 1), "dense", seed=0)
    z, _ = sample(model, 100_000, 123)
    assert np.abs(z.mean(axis=0)).max() <= 0.02


def test_dense_map_scale():
    model = make_synthetic(64, (8, 8, 8), "dense", seed=0)
    assert model.map.std() == pytest.approx(1 / 8, rel=0.02)


def test_planted_triples_layout():
    t = planted_triples(9, (3, 2, 3))
    assert t[:3] == ((0, 0, 0), (1, 0, 0), (2, 0, 0))
    assert t[3:6] == ((0, 1, 0), (0, 0, 1), (0, 0, 2))
    assert all(min(x) >= 1 for x in t[6:])
    with pytest.raises(ContractError):
        planted_triples(100, (2, 2, 2))


def test_multilinear_components_are_orthonormal():
    model = make_synthetic(16, (8, 4, 4), "multilinear", seed=2)
    comps = np.stack([model.planted_component(l).ravel() for l in range(16)])
    np.testing.assert_allclose(comps @ comps.T, np.eye(16), atol=1e-12)
    for f in model.planted_factors:
        np.testing.assert_allclose(f[:, 0], np.full(len(f), 1 / np.sqrt(len(f))), atol=1e-15)


def test_multilinear_subspace_recovery():
    model = make_synthetic(12, (8, 6, 6), "multilinear", seed=0, ranks=(4, 3, 3))
    _, x = sample(model, 1000, 1)
    basis = compute_bases(x)
    for mode, f in enumerate(basis.factors, start=1):
        planted = model.planted_subspace(mode)
        angles = principal_angles(f.top(planted.shape[1]), planted)
        assert np.max(angles) <= 1e-6


def test_model_validation():
    with pytest.raises(ContractError):
        make_synthetic(2, (2, 2, 2), "cubic")
    with pytest.raises(DimensionError):
        make_synthetic(2, (2, 2, 2), "multilinear", ranks=(3, 1, 1))
    with pytest.raises(DimensionError):
        make_synthetic(0, (2, 2, 2))
    with pytest.raises(ContractError):
        make_synthetic(2, (2, 2, 2), noise_sigma=-1.0)


# -- attribute probe -----------------------------------------------------------

@pytest.fixture(scope="module")
def planted_setup():
    model = make_synthetic(16, (8, 4, 4), "multilinear", seed=0)
    z, x = sample(model, 2000, 1)
    basis = compute_bases(x)
    w = fit((z, x), RegressionConfig(rank=(8, 4, 4, 16), learning_rate=1e-2, iterations=3000))
    pairs = [planted_first_order(model, basis, m, i) for m, i in (("C", 3), ("H", 2), ("W", 1))]
    return model, basis, w, [s for s, _ in pairs], np.stack([p for _, p in pairs])


def test_planted_alignment_mod(planted_setup):
    model, basis, w, specs, probes = planted_setup
    a = attribute_probe(model, w, basis, specs, probes, n_images=100, seed=0)
    assert np.all(np.diag(a) > a.sum(axis=0) - np.diag(a))
    assert mod_metric(a) <= 0.05


def test_probe_step_zero_and_linearity(planted_setup):
    model, basis, w, specs, probes = planted_setup
    assert np.all(attribute_probe(model, w, basis, specs, probes, 20, step=0.0) == 0)
    a1 = attribute_probe(model, w, basis, specs, probes, 20, step=1.0, seed=3)
    a2 = attribute_probe(model, w, basis, specs, probes, 20, step=2.0, seed=3)
    np.testing.assert_allclose(a2, 2 * a1, atol=1e-8)
    np.testing.assert_array_equal(a1, attribute_probe(model, w, basis, specs, probes, 20, 1.0, 3))


def test_probe_shape_errors(planted_setup):
    model, basis, w, specs, probes = planted_setup
    with pytest.raises(DimensionError):
        attribute_probe(model, w, basis, specs, probes[:2])


def test_planted_first_order_errors(planted_setup):
    model, basis, *_ = planted_setup
    with pytest.raises(ContractError):
        planted_first_order(model, basis, "C", 0)
    dense = make_synthetic(4, (8, 4, 4), "dense")
    with pytest.raises(ContractError):
        planted_first_order(dense, basis, "C", 1)
