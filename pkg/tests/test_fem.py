import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from swrdd.fem import (SubMesh, assemble_mass, assemble_stiffness, assemble_weighted_mass,
                       load_vector)


def hat_quadrature(mesh, weight=lambda x: 1.0, deriv=False, order=6):
    """Dense element-by-element Gauss quadrature of the P1 bilinear forms."""
    n = mesh.n_nodes
    x = mesh.nodes
    A = np.zeros((n, n))
    gx, gw = leggauss(order)
    for e in range(n - 1):
        a, b = x[e], x[e + 1]
        h = b - a
        q = 0.5 * (a + b) + 0.5 * h * gx
        wq = 0.5 * h * gw
        if deriv:
            phi = [np.full_like(q, -1 / h), np.full_like(q, 1 / h)]
        else:
            phi = [(b - q) / h, (q - a) / h]
        w = weight(q)
        for i in range(2):
            for k in range(2):
                A[e + i, e + k] += np.sum(wq * w * phi[i] * phi[k])
    return A


@pytest.mark.parametrize("n", [2, 3, 11])
def test_mass_and_stiffness_match_quadrature(n):
    mesh = SubMesh(-1.5, 2.0, n)
    assert np.allclose(assemble_mass(mesh).to_dense(), hat_quadrature(mesh), atol=1e-14)
    assert np.allclose(assemble_stiffness(mesh).to_dense(), hat_quadrature(mesh, deriv=True),
                       atol=1e-12)


def test_weighted_mass_matches_quadrature_of_interpolant():
    mesh = SubMesh(0.0, 3.0, 13)
    x = mesh.nodes
    w = np.sin(x) - x ** 2
    interp = lambda q: np.interp(q, x, w)
    # piecewise linear weight times two hats: degree 3 per element, exact with 4 points
    ref = hat_quadrature(mesh, interp, order=4)
    assert np.allclose(assemble_weighted_mass(mesh, w).to_dense(), ref, atol=1e-13)


def test_constant_weight_reduces_to_mass():
    mesh = SubMesh(-2.0, 2.0, 9)
    assert np.allclose(assemble_weighted_mass(mesh, 3.5).to_dense(),
                       3.5 * assemble_mass(mesh).to_dense())


def test_basic_identities():
    mesh = SubMesh(-21.0, 21.0, 101)
    one = np.ones(mesh.n_nodes)
    M, S = assemble_mass(mesh), assemble_stiffness(mesh)
    assert np.isclose(one @ M.matvec(one).real, 42.0)
    assert np.allclose(S.matvec(one), 0, atol=1e-12)
    x = mesh.nodes
    # int x^2 dx on (-21, 21) with the P1 interpolant overestimates by h^2/6 * length
    assert np.isclose(np.sum(load_vector(M, x ** 2).real), 2 * 21 ** 3 / 3 + mesh.h ** 2 / 6 * 42)


def test_nodes_hit_endpoints_exactly():
    mesh = SubMesh(-21.0, -18.375, 264)
    assert mesh.nodes[0] == -21.0 and mesh.nodes[-1] == -18.375


def test_invalid_meshes():
    with pytest.raises(ValueError):
        SubMesh(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        SubMesh(1.0, 1.0, 3)
    with pytest.raises(ValueError):
        assemble_weighted_mass(SubMesh(0.0, 1.0, 3), np.array([1.0, np.nan, 1.0]))
