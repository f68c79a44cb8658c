import numpy as np
import pytest

from swrdd import potentials as pot
from swrdd.errors import InvalidOrder, NotConverged
from swrdd.fem import SubMesh, assemble_mass, assemble_stiffness, assemble_weighted_mass
from swrdd.subdomain import FluxSeries, SubdomainProblem, solve_subdomain
from swrdd.transmission import TransmissionSpec

DT = 1e-3


def gaussian(x, x0=-10.0):
    y = x - x0
    return np.exp(-y ** 2 + 20j * y)


def problem(potential, index=1, n_sub=1, a=-14.0, b=-6.0, nodes=201, nt=40,
            spec=TransmissionSpec()):
    return SubdomainProblem(index, n_sub, SubMesh(a, b, nodes), DT, nt, potential, spec)


def test_zero_data_stays_zero():
    p = problem(pot.harmonic_neg(), 2, 3)
    res = solve_subdomain(p, FluxSeries.zeros(p.n_steps), np.zeros(p.x.size))
    assert np.all(res.u_final == 0) and np.all(res.flux_out.l == 0) and np.all(res.flux_out.r == 0)


@pytest.mark.parametrize("potential", [pot.harmonic_neg(), pot.linear_tx()])
def test_crank_nicolson_residual_in_nodal_form(potential):
    """Replay the scheme written for u_n (not v_n) with dense matrices, step by step."""
    p = problem(potential, nt=1)
    u0 = gaussian(p.x)
    u1 = solve_subdomain(p, FluxSeries.zeros(1), u0).u_final
    M = assemble_mass(p.mesh).to_dense()
    S = assemble_stiffness(p.mesh).to_dense()
    W = 0.5 * (potential.at(DT, p.x) + potential.at(0.0, p.x))
    MW = assemble_weighted_mass(p.mesh, W).to_dense()
    res = 1j * M @ (u1 - u0) / DT - S @ (u1 + u0) / 2 + MW @ (u1 + u0) / 2
    assert np.linalg.norm(res) < 1e-10 * np.linalg.norm(M @ u0) / DT


@pytest.mark.parametrize("potential", [pot.harmonic_neg(), pot.linear_tx(), pot.zero()])
def test_mass_conserved_for_real_potential(potential):
    p = problem(potential, nt=200)
    res = solve_subdomain(p, FluxSeries.zeros(200), gaussian(p.x), record_mass=True)
    drift = np.max(np.abs(res.mass - res.mass[0])) / res.mass[0]
    assert drift < 1e-12


def test_outgoing_flux_is_reflection_formula():
    p = problem(pot.harmonic_neg(), 2, 3)
    rng = np.random.default_rng(5)
    fin = FluxSeries(rng.normal(size=40) + 1j * rng.normal(size=40),
                     rng.normal(size=40) + 1j * rng.normal(size=40))
    res = solve_subdomain(p, fin, gaussian(p.x))
    assert np.allclose(res.flux_out.l, -fin.l + 2 * res.sbar_traces[0])
    assert np.allclose(res.flux_out.r, -fin.r + 2 * res.sbar_traces[1])


def test_boundary_condition_holds_at_interface():
    """Weak form at the end node: the flux balance equals the prescribed incoming flux."""
    p = problem(pot.zero(), 1, 2, nt=1)
    g = np.array([0.3 + 0.2j])
    u0 = gaussian(p.x, -6.5)
    res = solve_subdomain(p, FluxSeries(np.zeros(1, complex), g), u0)
    v = res.traces[1, 0]
    full_v = (res.u_final + u0) / 2
    M = assemble_mass(p.mesh).to_dense()
    S = assemble_stiffness(p.mesh).to_dense()
    row = (2j / DT) * M @ full_v - S @ full_v - (2j / DT) * M @ u0
    # last row of the weak form carries  d_n v = g - S v
    assert np.isclose(row[-1], -(g[0] - res.sbar_traces[1, 0]), atol=1e-9)
    assert np.isclose(v, full_v[-1])


def test_nonlinear_with_zero_nonlinearity_matches_linear():
    lin = problem(pot.zero(), nt=30)
    nl = problem(pot.zero_nls(), nt=30)
    u0 = gaussian(lin.x)
    a = solve_subdomain(lin, FluxSeries.zeros(30), u0).u_final
    b = solve_subdomain(nl, FluxSeries.zeros(30), u0).u_final
    assert np.allclose(a, b, atol=1e-12)


def test_nonlinear_scheme_conserves_mass():
    p = problem(pot.cubic_nls(), nt=50)
    u0 = 2 / np.cosh(np.sqrt(2) * (p.x + 10)) * np.exp(20j * (p.x + 10))
    res = solve_subdomain(p, FluxSeries.zeros(50), u0, record_mass=True)
    assert np.max(np.abs(res.mass - res.mass[0])) / res.mass[0] < 1e-10
    assert res.inner_iterations > 50


def test_inner_fixed_point_budget():
    p = SubdomainProblem(1, 1, SubMesh(-14.0, -6.0, 201), DT, 5, pot.cubic_nls(),
                         TransmissionSpec(), tol_fp=1e-15, maxit_fp=1)
    u0 = 2 / np.cosh(np.sqrt(2) * (p.x + 10)) * np.exp(20j * (p.x + 10))
    with pytest.raises(NotConverged):
        solve_subdomain(p, FluxSeries.zeros(5), u0)


@pytest.mark.parametrize("spec", [TransmissionSpec("potential", 4), TransmissionSpec("gauge", 4),
                                  TransmissionSpec("pade", 4)])
def test_nonlinear_rejects_derivative_operators(spec):
    with pytest.raises(InvalidOrder):
        problem(pot.cubic_nls(), 1, 2, spec=spec)
    problem(pot.cubic_nls(), 1, 1, spec=spec)   # no interface, nothing to evaluate


def test_solve_counter():
    p = problem(pot.zero(), nt=3)
    for _ in range(3):
        solve_subdomain(p, FluxSeries.zeros(3), np.zeros(p.x.size))
    assert p.solve_count == 3
