import numpy as np
import pytest

from conftest import heat_spec, run
from trudinger.discretization import affine_xt, build_time_grid, constant, separable_product, sin_bump
from trudinger.errors import InvalidArgument, SolveFailure
from trudinger.geometry import build_uniform_mesh
from trudinger.solver import (P2_MODE, ProblemSpec, lp_distance, lp_norm, lp_spacetime,
                              refine_study, solve)
from trudinger.stepper import SolveConfig
from trudinger.verification import error_vs_oracle


def test_problem_spec_validation():
    with pytest.raises(InvalidArgument):
        ProblemSpec(1.5, 0, 1, 1, constant(1))
    with pytest.raises(InvalidArgument):
        ProblemSpec(3, 1, 0, 1, constant(1))
    with pytest.raises(InvalidArgument):
        ProblemSpec(3, 0, 1, 0, constant(1))


@pytest.mark.parametrize("c", [0.0, 1.0, -2.5])
def test_constant_data_stays_constant(c):
    sol = run(ProblemSpec(3.0, 0, 1, 0.5, constant(c)), 7, 9)
    np.testing.assert_allclose(sol.states, c, atol=1e-14)
    assert sol.converged and len(sol.steps) == 7


def test_mesh_must_cover_interval():
    spec = ProblemSpec(3.0, 0, 1, 0.5, constant(1))
    with pytest.raises(InvalidArgument):
        solve(spec, build_time_grid(0.5, 2), build_uniform_mesh(4, 0, 2))


def test_heat_final_time(heat_ladder, heat_exact):
    err = [error_vs_oracle(s, heat_exact)["linf_final"] for s in heat_ladder]
    assert err[0] <= 1e-2
    assert err[0] > err[1] > err[2]
    # directly against e^{-pi^2 T} sin(pi x)
    sol = heat_ladder[0]
    exact = np.exp(-np.pi**2 * 0.1) * np.sin(np.pi * sol.mesh.nodes)
    assert np.max(np.abs(sol.states[-1] - exact)) <= 1e-2


def test_boundary_conformity(sep_ladder):
    for sol in sep_ladder:
        np.testing.assert_array_equal(sol.states[:, [0, -1]], sol.boundary.slices[:, [0, -1]])
        np.testing.assert_array_equal(sol.states[0], sol.boundary.slices[0])


def test_every_step_meets_its_tolerance(sep_ladder, heat_ladder):
    for sol in sep_ladder + heat_ladder:
        assert all(r.converged and r.grad_norm <= r.tol for r in sol.steps)


def test_determinism():
    spec = ProblemSpec(3.0, 0, 1, 0.2, separable_product(1.0, 1.0, 1.0, 0.5))
    a, b = run(spec, 10, 12), run(spec, 10, 12)
    assert np.array_equal(a.states, b.states)


def test_evaluate():
    spec = ProblemSpec(3.0, 0, 1, 0.2, affine_xt(0.5, 1.0, 1.0, 0.0))
    sol = run(spec, 4, 4)
    x, t = sol.mesh.nodes, sol.grid.times
    assert sol.evaluate(x[2], t[3]) == sol.states[3, 2]
    mid = 0.5 * (x[1] + x[2])
    assert sol.evaluate(mid, t[2]) == pytest.approx(0.5 * (sol.states[2, 1] + sol.states[2, 2]), abs=1e-15)
    assert sol.evaluate(x[1], t[2] - 0.3 * sol.grid.h) == sol.states[2, 1]
    assert sol.evaluate(x[1], 0.0) == sol.states[0, 1]
    np.testing.assert_array_equal(sol.evaluate(x, t[4]), sol.states[4])
    for bad in ((1.5, 0.1), (0.5, 0.3), (0.5, -0.1)):
        with pytest.raises(InvalidArgument):
            sol.evaluate(*bad)


def test_rows_and_summary():
    sol = run(ProblemSpec(3.0, 0, 1, 0.2, constant(2.0)), 2, 3)
    rows = list(sol.to_rows())
    assert len(rows) == 3 * 4
    assert rows[5] == (1, pytest.approx(0.1), 1, pytest.approx(1 / 3), 2.0)
    s = sol.summary()
    assert s["m_t"] == 2 and s["n_elements"] == 3 and len(s["steps"]) == 2
    assert s["boundary"] == {"tag": "constant", "params": [2.0]}


def test_solve_failure_carries_step_and_partial():
    spec = ProblemSpec(4.0, 0, 1, 0.1, sin_bump())
    with pytest.raises(SolveFailure) as info:
        run(spec, 5, 16, cfg=SolveConfig(max_iter=1, gtol=1e-15))
    exc = info.value
    assert exc.step == 1 and exc.partial.shape == (1, 17) and not exc.result.converged


def test_lp_helpers():
    spec = ProblemSpec(3.0, 0, 2, 0.5, constant(1.5))
    sol = run(spec, 3, 5)
    assert lp_norm(sol) == pytest.approx(1.5 * (2 * 0.5) ** (1 / 3), rel=1e-14)
    assert lp_distance(sol, sol) == 0.0
    other = run(ProblemSpec(3.0, 0, 2, 0.5, constant(1.0)), 6, 4)
    assert lp_distance(sol, other) == pytest.approx(0.5 * 1.0 ** (1 / 3), rel=1e-13)
    assert lp_distance(sol, other) == lp_distance(other, sol)
    with pytest.raises(InvalidArgument):
        lp_distance(sol, run(ProblemSpec(3.0, 0, 2, 0.25, constant(1.0)), 2, 2))
    # tensor Gauss rule on a polynomial integrand: int_0^1 int_0^1 (x t)^2 = 1/9
    v = lp_spacetime(lambda x, t: x * t, 0, 1, 1, 2.0, np.linspace(0, 1, 3), np.linspace(0, 1, 3))
    assert v == pytest.approx(1 / 3, rel=1e-14)


def test_refine_study_constant():
    rep = refine_study(ProblemSpec(3.0, 0, 1, 0.2, constant(1.0)), [(4, 4), (8, 8), (16, 16)])
    assert rep.complete and rep.errors == [0.0, 0.0] and rep.gaps == [0.0, 0.0]


def test_refine_study_heat_oracle(heat_exact):
    rep = refine_study(heat_spec(), [(50, 16), (100, 32), (200, 64)], oracle=heat_exact)
    assert rep.complete and rep.strictly_decreasing()
    assert all(r > 1.5 for r in rep.reductions)
    assert rep.to_dict()["reference"] == "oracle"


def test_refine_study_self_convergence():
    spec = ProblemSpec(3.0, 0, 1, 0.05, sin_bump(1.0, 1.0, 0.0))
    rep = refine_study(spec, [(10, 8), (20, 16), (40, 32), (80, 64)])
    assert rep.reference == "finest" and rep.strictly_decreasing(rep.gaps)
    assert len(rep.errors) == 3 and rep.strictly_decreasing()


def test_refine_study_validation():
    spec = ProblemSpec(3.0, 0, 1, 0.2, constant(1.0))
    for ladder in ([(4, 4)], [(8, 8), (4, 4)], [(4, 4), (4, 4)], [(4, 8), (8, 4)]):
        with pytest.raises(InvalidArgument):
            refine_study(spec, ladder)


def test_refine_study_marks_incomplete():
    spec = ProblemSpec(4.0, 0, 1, 0.1, sin_bump())
    rep = refine_study(spec, [(2, 2), (5, 16)], cfg=SolveConfig(max_iter=1, gtol=1e-15))
    assert not rep.complete and "rung" in rep.failure
