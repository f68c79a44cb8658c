import numpy as np
import pytest

from swrdd.drivers import (RunConfig, initial_interface, reconstruct, rel_l2_error, run,
                           run_classical, run_new, run_preconditioned, solve_monodomain,
                           global_nodes)
from swrdd.errors import GridMismatch, NotConverged, UnsupportedPotential
from swrdd.transmission import TransmissionSpec

from conftest import small_config


def test_rel_l2_error_trivial(rng):
    u = rng.normal(size=11) + 1j
    assert rel_l2_error(u, u) == 0
    assert np.isclose(rel_l2_error(2 * u, u), 1.0)
    with pytest.raises(GridMismatch):
        rel_l2_error(u[:-1], u)


def test_reconstruct_averages_interface_nodes():
    parts = [np.array([1.0, 2.0, 3.0]), np.array([5.0, 6.0])]
    assert list(reconstruct(parts).real) == [1.0, 2.0, 4.0, 6.0]


def test_mesh_adjusted_to_whole_cells():
    cfg = RunConfig(n_sub=16, dx=1e-2)
    assert cfg.cells_per_subdomain == 263
    assert cfg.h <= 1e-2 and np.isclose(cfg.h * 263 * 16, 42.0)
    x = global_nodes(cfg)
    assert x.size == 16 * 263 + 1 and x[0] == -21 and x[-1] == 21
    assert RunConfig(n_sub=2).cells_per_subdomain == 2100


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(dt=0.0)
    with pytest.raises(ValueError):
        RunConfig(algorithm="magic")
    with pytest.raises(ValueError):
        RunConfig(T=0.5, dt=0.3).n_steps


def test_random_initial_vector_is_seeded():
    cfg = small_config(g0="random", seed=3)
    a, b = initial_interface(cfg, 50), initial_interface(cfg, 50)
    assert np.array_equal(a, b)
    assert 0 <= a.real.min() and a.real.max() < 1 and 0 <= a.imag.min() and a.imag.max() < 1
    assert not np.array_equal(a, initial_interface(small_config(g0="random", seed=4), 50))


def test_monodomain_zero_data():
    mono = solve_monodomain(small_config(u0="zero"))
    assert np.all(mono.u == 0)


def test_single_subdomain_degenerates_to_monodomain():
    cfg = small_config(n_sub=1)
    res = run(cfg)
    assert res.g.size == 0 and res.report.iterations == 0
    assert np.array_equal(res.u, solve_monodomain(cfg).u)


@pytest.mark.parametrize("alg,krylov", [("classical_fp", "fixed_point"),
                                        ("classical_krylov", "gmres"),
                                        ("classical_krylov", "bicgstab"),
                                        ("new", "gmres"), ("new", "bicgstab"),
                                        ("new", "fixed_point")])
def test_decomposed_matches_monodomain(alg, krylov):
    cfg = small_config(n_sub=3, algorithm=alg, krylov=krylov)
    res = run(cfg)
    assert res.report.converged
    assert rel_l2_error(res.parts, solve_monodomain(cfg).u) < 1e-8


def test_new_algorithm_solve_counts():
    res = run_new(small_config(n_sub=4, algorithm="new", krylov="gmres"))
    assert res.report.subdomain_solves == [3, 4, 4, 3]


def test_new_equals_classical_interface_vector():
    kw = dict(n_sub=3, potential="zero")
    fp = run_classical(small_config(algorithm="classical_fp", **kw))
    new = run_new(small_config(algorithm="new", krylov="gmres", **kw))
    assert np.linalg.norm(fp.g - new.g) < 1e-9
    assert rel_l2_error(fp.u, new.u) < 1e-8


def test_new_rejects_time_dependent_potential():
    with pytest.raises(UnsupportedPotential):
        run_new(small_config(potential="linear_tx", algorithm="new"))


def test_preconditioned_requires_non_static_potential():
    with pytest.raises(UnsupportedPotential):
        run(small_config(algorithm="preconditioned", krylov="gmres"))


def test_krylov_rejects_nonlinear():
    with pytest.raises(UnsupportedPotential):
        run(small_config(potential="cubic_nls", u0="soliton", algorithm="classical_krylov",
                         krylov="gmres"))
    with pytest.raises(UnsupportedPotential):
        run(small_config(potential="cubic_nls", u0="soliton", algorithm="preconditioned",
                         krylov="gmres"))


@pytest.mark.parametrize("alg,krylov", [("preconditioned", "gmres"),
                                        ("preconditioned", "bicgstab"),
                                        ("preconditioned_fp", "fixed_point")])
def test_preconditioned_time_dependent(alg, krylov):
    cfg = small_config(n_sub=3, potential="linear_tx", algorithm=alg, krylov=krylov)
    res = run_preconditioned(cfg)
    assert res.report.converged and res.report.precond_applications > 0
    assert rel_l2_error(res.parts, solve_monodomain(cfg).u) < 1e-8


def test_preconditioned_nonlinear():
    cfg = small_config(n_sub=3, potential="cubic_nls", u0="soliton",
                       algorithm="preconditioned_fp")
    res = run(cfg)
    assert res.report.converged
    assert rel_l2_error(res.parts, solve_monodomain(cfg).u) < 1e-7


def test_zero_nonlinearity_preconditioned_in_one_iteration():
    res = run(small_config(n_sub=3, potential="zero_nls", algorithm="preconditioned_fp"))
    assert res.report.iterations == 1


def test_not_converged_carries_partial_result():
    with pytest.raises(NotConverged) as info:
        run(small_config(n_sub=3, maxit=2))
    partial = info.value.report
    assert partial.report.iterations == 2 and not partial.report.converged
    assert len(partial.report.residual_history) == 2


def test_expression_potential_matches_preset():
    a = run(small_config(n_sub=2, potential="expr:-x**2", algorithm="new", krylov="gmres"))
    b = run(small_config(n_sub=2, potential="harmonic_neg", algorithm="new", krylov="gmres"))
    assert np.allclose(a.u, b.u, atol=1e-13)


def test_order_four_operator_converges_to_monodomain():
    # interfaces away from x = 0 so that the normal derivative of -x^2 is nonzero
    for spec in (TransmissionSpec("potential", 4), TransmissionSpec("gauge", 4),
                 TransmissionSpec("pade", 4, m=100)):
        cfg = small_config(n_sub=3, transmission=spec, algorithm="new", krylov="bicgstab")
        res = run(cfg)
        assert rel_l2_error(res.parts, solve_monodomain(cfg).u) < 1e-8
