import json

import numpy as np
import pytest

from heraldic.fock import single_photon_unitary
from heraldic.mesh import (
    CLEMENTS,
    RECK,
    DescentConfig,
    GateObjective,
    HeraldSpec,
    UnitaryObjective,
    build_mesh,
    descend,
    descend_from,
    fd_gradient,
    fit_unitary,
    quasi_newton_from,
    random_unitary,
)
from heraldic.metrics import metrics_report
from heraldic.schemes import CZ, builtin

SIX = HeraldSpec((0, 1, 2, 3), (4, 5), (1, 1), (1, 1))


@pytest.mark.parametrize("kind", [RECK, CLEMENTS])
@pytest.mark.parametrize("n", [2, 3, 6, 8])
def test_element_counts(kind, n):
    design = build_mesh(kind, n)
    assert design.element_count == n * (n - 1) // 2
    assert design.n_params == n * (n - 1) + n
    assert all(b == a + 1 for a, b in design.pairs)


def test_two_mode_meshes_coincide():
    assert build_mesh(RECK, 2).pairs == build_mesh(CLEMENTS, 2).pairs == ((0, 1),)
    x = np.random.default_rng(0).uniform(0, 6, 4)
    assert np.allclose(build_mesh(RECK, 2).unitary(x), build_mesh(CLEMENTS, 2).unitary(x))


@pytest.mark.parametrize("kind", [RECK, CLEMENTS])
def test_mesh_matrix_matches_elements(kind):
    rng = np.random.default_rng(1)
    design = build_mesh(kind, 6)
    for _ in range(5):
        x = rng.uniform(0, 2 * np.pi, design.n_params)
        u = design.unitary(x)
        assert np.allclose(u.conj().T @ u, np.eye(6), atol=1e-13)
        assert np.allclose(u, single_photon_unitary(design.elements(x), 6), atol=1e-12)


def test_gate_objective_matches_metrics():
    rng = np.random.default_rng(2)
    design = build_mesh(CLEMENTS, 8)
    objective = GateObjective(design, HeraldSpec(), CZ)
    for _ in range(3):
        x = rng.uniform(0, 2 * np.pi, design.n_params)
        loss, info = objective(x)
        r = metrics_report(design.to_scheme(x, HeraldSpec()), CZ)
        assert abs(info["F"] - r.fidelity) < 1e-10 and abs(info["P"] - r.P) < 1e-10
        assert 0 < loss <= 1.0 + 0.1 * 2 / 27


def test_gate_loss_arithmetic():
    objective = GateObjective(build_mesh(CLEMENTS, 6), SIX, CZ, lambda_F=1.0, lambda_P=0.1, P_goal=2 / 27)
    assert objective.loss_from(1.0, 0.0) == pytest.approx(0.1 * 2 / 27)
    assert objective.loss_from(1.0, 0.5) == 0


def test_cz_2_27_embedding_has_zero_loss():
    target = single_photon_unitary(builtin("CZ_2_27").elements, 6)
    fit = fit_unitary(CLEMENTS, target, seed=0, tol=1e-10)
    assert fit.loss < 1e-20
    objective = GateObjective(build_mesh(CLEMENTS, 6), SIX, CZ, P_goal=2 / 27)
    loss, info = objective(fit.params)
    assert loss < 1e-12 and info["F"] > 1 - 1e-12


def test_start_at_exact_minimum():
    design = build_mesh(RECK, 5)
    x = np.random.default_rng(3).uniform(0, 2 * np.pi, design.n_params)
    objective = UnitaryObjective(design, design.unitary(x))
    assert np.linalg.norm(fd_gradient(objective, x, 1e-5)) < 1e-6
    result = descend_from(objective, x, eta=0.1, h=1e-5, max_iterations=50)
    assert result.accepted == 0 and result.loss == 0


@pytest.mark.parametrize("which", ["unitary", "gate"])
def test_richardson_step_halving(which):
    rng = np.random.default_rng(4)
    if which == "unitary":
        design = build_mesh(CLEMENTS, 6)
        objective = UnitaryObjective(design, random_unitary(6, rng))
    else:
        design = build_mesh(CLEMENTS, 6)
        objective = GateObjective(design, SIX, CZ)
    x = rng.uniform(0, 2 * np.pi, design.n_params)
    reference = fd_gradient(objective, x, 1e-4)
    coarse = np.linalg.norm(fd_gradient(objective, x, 0.02) - reference)
    fine = np.linalg.norm(fd_gradient(objective, x, 0.01) - reference)
    assert abs(coarse / fine - 4) < 0.5


def test_accepted_loss_is_monotone():
    config = DescentConfig(herald=SIX, max_iterations=30, restarts=2, seed=5)
    result = descend(config)
    for restart in result.restarts:
        losses = [p["loss"] for p in restart.trajectory]
        assert all(b < a for a, b in zip(losses, losses[1:]))
        assert len(losses) == restart.accepted + 1
    lines = [json.loads(line) for line in result.trajectory_lines()]
    assert {line["restart"] for line in lines} == {0, 1}
    assert result.best.loss == min(r.loss for r in result.restarts)


def test_descent_deterministic_and_thread_independent():
    config = DescentConfig(herald=SIX, max_iterations=10, restarts=2, seed=6)
    a, b = descend(config), descend(config, threads=2)
    assert [r.loss for r in a.restarts] == [r.loss for r in b.restarts]
    assert np.array_equal(a.best.params, b.best.params)


def test_fit_small_unitary():
    target = random_unitary(4, np.random.default_rng(7))
    for kind in (RECK, CLEMENTS):
        fit = fit_unitary(kind, target, seed=1)
        assert np.sqrt(fit.loss) < 1e-8 or fit.loss < 1e-12


def test_quasi_newton_beats_plain_steps_on_six_modes():
    target = random_unitary(6, np.random.default_rng(5))
    objective = UnitaryObjective(build_mesh(CLEMENTS, 6), target)
    x0 = np.random.default_rng(0).uniform(0, 2 * np.pi, objective.design.n_params)
    fast = quasi_newton_from(objective, x0, 1e-5, 300, grad_tol=0.0, loss_tol=1e-12)
    slow = descend_from(objective, x0, 0.1, 1e-5, 300, grad_tol=0.0, loss_tol=1e-12)
    assert fast.stopped == "loss_tol" and fast.loss < 1e-12 < slow.loss
    assert [p["loss"] for p in fast.trajectory][-1] == fast.loss


def test_gradient_method_still_available_for_fits():
    target = random_unitary(3, np.random.default_rng(2))
    fit = fit_unitary(RECK, target, seed=0, method="gradient")
    assert fit.loss < 1e-12
    with pytest.raises(ValueError):
        fit_unitary(RECK, target, method="newton")


def test_descent_with_quasi_newton_method():
    config = DescentConfig(herald=SIX, max_iterations=20, restarts=1, seed=3, method="bfgs")
    result = descend(config)
    assert result.best.loss <= result.best.trajectory[0]["loss"]
    assert 1 <= result.best.accepted <= 20
    with pytest.raises(ValueError):
        DescentConfig(method="adam")


def test_config_round_trip():
    config = DescentConfig(herald=SIX, restarts=3)
    assert DescentConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config
    with pytest.raises(ValueError):
        DescentConfig.from_dict({"etaa": 1})
    with pytest.raises(ValueError):
        DescentConfig(kind="triangle")


def test_eight_mode_gate_descent_reaches_high_fidelity():
    # four signal and four ancilla modes, two ancilla photons, fixed step rule
    config = DescentConfig(max_iterations=200, restarts=1, seed=0)
    result = descend(config)
    assert result.best.info["F"] >= 0.999
