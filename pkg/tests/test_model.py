import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mvparticles.model import (
    Dirac,
    GammaLaw,
    ModelParams,
    ReciprocalExp,
    TheoryConstants,
    TimeMesh,
    build_refined_mesh,
    build_uniform_mesh,
    law_from_dict,
)


def test_model_params_domain():
    ModelParams(0.0, 1.0)
    with pytest.raises(ValueError):
        ModelParams(-0.1, 1.0)
    with pytest.raises(ValueError):
        ModelParams(0.5, 0.0)


@pytest.mark.parametrize(
    "n, T, expected",
    [
        (1, 1.0, [0.0, 1.0]),
        (4, 2.0, [0.0, 0.5, 1.0, 1.5, 2.0]),
    ],
)
def test_uniform_mesh_examples(n, T, expected):
    mesh = build_uniform_mesh(n, T)
    np.testing.assert_array_equal(mesh.times, expected)
    assert mesh.n == n and mesh.kind == "uniform"


def test_uniform_mesh_derivative_plot_spacing():
    mesh = build_uniform_mesh(200, 2.0)
    assert len(mesh) == 201
    np.testing.assert_allclose(mesh.steps, 0.01, rtol=0, atol=1e-14)


@pytest.mark.parametrize("n, T", [(0, 1.0), (-3, 1.0), (2, 0.0), (2, -1.0), (2, float("inf"))])
def test_uniform_mesh_rejects(n, T):
    with pytest.raises(ValueError):
        build_uniform_mesh(n, T)


def test_refined_mesh_examples():
    np.testing.assert_allclose(build_refined_mesh(2, 1.0, 1.0).times, [0.0, 0.5, 1.0], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(build_refined_mesh(1, 1.0, 0.5).times, [0.0, 1.0])
    # 2^(-4/3), mpmath at 40 digits
    np.testing.assert_allclose(build_refined_mesh(2, 1.0, 0.5).times, [0.0, 0.39685026299204987, 1.0], rtol=1e-15)


@pytest.mark.parametrize("beta", [0.0, -0.5, 1.5, float("nan")])
def test_refined_mesh_rejects_beta(beta):
    with pytest.raises(ValueError):
        build_refined_mesh(4, 1.0, beta)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(1, 1000),
    T=st.floats(1e-3, 1e3),
    beta=st.floats(0.01, 1.0),
)
def test_mesh_monotone_and_pinned(n, T, beta):
    for mesh in (build_uniform_mesh(n, T), build_refined_mesh(n, T, beta)):
        t = mesh.times
        assert t[0] == 0.0
        assert t[-1] == T
        assert np.all(np.diff(t) > 0)
        assert mesh.n == n


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 1000), T=st.floats(1e-3, 1e3))
def test_refined_beta_one_is_uniform(n, T):
    np.testing.assert_allclose(build_refined_mesh(n, T, 1.0).times, build_uniform_mesh(n, T).times, rtol=0, atol=1e-12 * T)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 1000), T=st.floats(1e-3, 1e3), beta=st.floats(0.01, 1.0))
def test_refined_spacing_nondecreasing(n, T, beta):
    dt = build_refined_mesh(n, T, beta).steps
    # spacing grows with i; allow rounding at the level of the mesh values
    assert np.all(np.diff(dt) >= -1e-12 * T)


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_refined_doubling_shares_points_exactly(beta):
    coarse = build_refined_mesh(50, 2.0, beta)
    fine = build_refined_mesh(100, 2.0, beta)
    np.testing.assert_array_equal(fine.times[::2], coarse.times)
    assert fine.coarsen(2) == coarse


def test_uniform_mesh_validation():
    with pytest.raises(ValueError):
        TimeMesh([0.0, 0.1, 0.3], kind="uniform")
    with pytest.raises(ValueError):
        TimeMesh([0.1, 0.2])
    with pytest.raises(ValueError):
        TimeMesh([0.0, 0.2, 0.2])


@pytest.mark.parametrize("law", [GammaLaw(1.5, 0.5), GammaLaw(2.0, 1.3), ReciprocalExp(1.0), ReciprocalExp(3.0)])
def test_density_integrates_to_one(law):
    total, err = integrate.quad(lambda x: float(law.density(x)), 0, np.inf, limit=200)
    assert abs(total - 1) < 1e-6


def test_reciprocal_exp_density_formula():
    law = ReciprocalExp(2.0)
    x = np.array([0.1, 0.5, 1.0, 4.0])
    np.testing.assert_allclose(law.density(x), 2.0 / x**2 * np.exp(-2.0 / x))
    assert law.density(np.array([0.0, -1.0])).tolist() == [0.0, 0.0]


def test_holder_exponents():
    assert GammaLaw(1.5, 0.5).holder_beta == 0.5
    assert ReciprocalExp(1.0).holder_beta == 1.0
    assert Dirac(1.0).holder_beta == 1.0
    assert not Dirac(1.0).assumption1_satisfied
    with pytest.raises(ValueError):
        GammaLaw(3.0, 0.5).holder_beta


@pytest.mark.parametrize("law", [GammaLaw(1.5, 0.5), GammaLaw(1.8, 2.0), ReciprocalExp(1.0)])
def test_envelope_constant_is_tight(law):
    beta = law.holder_beta
    x = np.geomspace(1e-6, 20, 20001)
    ratio = law.density(x) / x**beta
    B = law.envelope_constant()
    assert np.all(ratio <= B * (1 + 1e-12))
    assert ratio.max() > 0.999 * B


def test_law_round_trip():
    for law in (Dirac(2.0), GammaLaw(1.5, 0.5), ReciprocalExp(1.0)):
        assert law_from_dict(law.to_dict()) == law
    with pytest.raises(ValueError):
        law_from_dict({"kind": "lognormal"})


def test_theory_constants_btilde():
    c = TheoryConstants.from_bounds(0.5, 3.0, 1.2)
    assert c.B_tilde == 2 * 1.2 / 1.5
    with pytest.raises(ValueError):
        TheoryConstants.from_bounds(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        TheoryConstants.from_bounds(0.5, -1.0, 1.0)
