import dataclasses

import numpy as np
import pytest

from keybound.extendibility import (
    best_extendible_decomposition, build_sdp, is_extendible, pinned_problem,
    verify_extension,
)
from keybound.protocols import (
    ProtocolSpec, assemble_class, class_from_state, realize_protocol,
    trivial_class,
)
from keybound.sdp import SolverSettings, check_feasible
from keybound.states import DensityOperator, bell_psi_plus, depolarized_bell
from helpers import lambda_bisection_oracle


def six_state_class(e):
    spec = ProtocolSpec.six_state(e)
    povms, data, _ = realize_protocol(spec)
    return assemble_class(povms, data, spec)


def test_variable_layout_counts():
    _, lay = build_sdp(trivial_class((2, 2)))
    assert lay.n_r == 16
    assert lay.n_e == 16
    assert lay.n_f == 40
    assert lay.total == 72


def test_variable_layout_symmetry():
    _, lay = build_sdp(trivial_class((2, 2)))
    assert lay.f_index(1, 3, 2) == lay.f_index(1, 2, 3)
    assert lay.f_index(0, 0, 0) == lay.n_r + lay.n_e
    seen = {lay.f_index(k, l, m) for k in range(4) for l in range(4) for m in range(l + 1)}
    assert len(seen) == 40


def test_sdp_structure():
    cls = six_state_class(0.05)
    prob, lay = build_sdp(cls)
    assert [b.dim for b in prob.blocks] == [4, 4, 8]
    # equalities: class rows plus one coupling row per pair index
    assert prob.eq_rows.shape == (cls.rows.shape[0] + 16, 72)
    # objective rewards the non-extendible weight only
    assert prob.c[lay.r_index(0, 0)] == 1.0
    assert prob.c[lay.e_index(0, 0)] == -1.0
    assert np.count_nonzero(prob.c) == 2


def test_bell_state_not_extendible():
    cls = class_from_state(bell_psi_plus())
    res = best_extendible_decomposition(cls)
    assert res.lambda_max == pytest.approx(0.0, abs=1e-6)
    assert res.sigma_ext is None
    assert res.chi is None
    assert np.allclose(res.rho_ne.matrix, bell_psi_plus().matrix, atol=1e-6)
    assert not is_extendible(cls)


def test_maximally_mixed_is_extendible():
    cls = class_from_state(DensityOperator(np.eye(4) / 4, (2, 2)))
    res = best_extendible_decomposition(cls)
    assert res.lambda_max == pytest.approx(1.0, abs=1e-6)
    assert res.rho_ne is None
    assert is_extendible(cls)


@pytest.mark.parametrize("e,lam", [(0.05, 0.30), (0.10, 0.60), (0.15, 0.90)])
def test_six_state_weight_law(e, lam):
    res = best_extendible_decomposition(six_state_class(e))
    assert res.lambda_max == pytest.approx(lam, abs=2e-6)
    assert np.allclose(res.rho_star.matrix, depolarized_bell(e).matrix, atol=1e-5)


def test_four_state_dominates_six_state():
    for e in (0.04, 0.1):
        spec4 = ProtocolSpec.four_state(e)
        povms, data, _ = realize_protocol(spec4)
        cls4 = assemble_class(povms, data, spec4)
        lam4 = best_extendible_decomposition(cls4).lambda_max
        lam6 = best_extendible_decomposition(six_state_class(e)).lambda_max
        # fewer constraints admit more extendible mass
        assert lam4 >= lam6 - 1e-6


def test_verification_report_passes_on_solver_output():
    res = best_extendible_decomposition(six_state_class(0.08))
    rep = verify_extension(res)
    assert rep.passed
    assert rep.decomposition_residual <= rep.tolerances["decomposition"]
    assert rep.swap_residual <= rep.tolerances["swap"]
    assert rep.partial_trace_residual <= rep.tolerances["partial_trace"]
    assert rep.marginal_residual <= rep.tolerances["marginal"]
    assert min(rep.min_eigenvalues.values()) >= rep.tolerances["psd_floor"]


def test_verification_catches_tampered_sigma():
    res = best_extendible_decomposition(six_state_class(0.08))
    wrong = DensityOperator(np.eye(4) / 4, (2, 2))
    tampered = dataclasses.replace(res, sigma_ext=wrong)
    rep = verify_extension(tampered)
    assert not rep.passed
    assert rep.decomposition_residual > rep.tolerances["decomposition"]


def test_verification_catches_broken_swap_symmetry():
    res = best_extendible_decomposition(six_state_class(0.08))
    v = np.zeros(8)
    v[1] = 1.0  # |0,0,1>: swapping the last two slots moves it to |0,1,0>
    t = 1e-6
    mixed = (1 - t) * res.chi.matrix + t * np.outer(v, v)
    tampered = dataclasses.replace(res, chi=DensityOperator(mixed, dims=(2, 2, 2)))
    rep = verify_extension(tampered)
    assert not rep.passed
    assert rep.swap_residual > rep.tolerances["swap"]


def test_pinned_feasibility_brackets_optimum():
    cls = six_state_class(0.06)
    st = SolverSettings(max_iter=300)
    below = check_feasible(pinned_problem(cls, 0.30)[0], settings=st)
    above = check_feasible(pinned_problem(cls, 0.42)[0], settings=st)
    assert below.status == "optimal"
    assert above.status == "infeasible"


def test_bisection_oracle_agrees():
    cls = six_state_class(0.05)
    lam_oracle = lambda_bisection_oracle(cls, tol=5e-4)
    res = best_extendible_decomposition(cls)
    assert res.lambda_max == pytest.approx(lam_oracle, abs=5e-4)


def test_trivial_class_is_extendible():
    res = best_extendible_decomposition(trivial_class((2, 2)))
    assert res.lambda_max == pytest.approx(1.0, abs=1e-6)


def test_solution_diagnostics_recorded():
    res = best_extendible_decomposition(six_state_class(0.05))
    d = res.diagnostics
    assert d["status"] == "optimal"
    assert d["iterations"] > 0
    assert abs(d["raw_lambda"] - res.lambda_max) <= 2e-6
    assert d["rho_star_clip"] <= 1e-7
