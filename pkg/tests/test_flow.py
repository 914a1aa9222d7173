import math

import numpy as np
import pytest
from scipy import optimize, sparse

from delaunay import edge_slacks, flip_packing
from errors import MaxIterations, NonConvergence, SingularBeyondKernel, TargetInvalid, ValidationFailed
from flow import (
    FlowConfig,
    curvature,
    curvature_jacobian,
    curvature_state,
    flow_euler,
    flow_newton,
    newton_direction,
    ricci_potential_delta,
    run_flow,
    uniform_target,
    validate_target,
    verify_uniqueness,
)
from packing_geometry import Packing


def equal_radii(pk):
    return pk.with_radii(np.ones(pk.tri.num_vertices))


def test_one_vertex_torus_is_flat(torus1):
    state = curvature(torus1)
    assert state.curvatures == pytest.approx([0.0], abs=1e-12)
    assert state.cone_angles == pytest.approx([2 * math.pi])


def test_gauss_bonnet(torus2, genus2, sphere3):
    for pk in (torus2, genus2, sphere3, torus2.with_radii([0.4, 2.5])):
        assert curvature(pk).gauss_bonnet_residual == pytest.approx(0.0, abs=1e-10)


def test_sphere_curvature(sphere3):
    assert curvature(sphere3).curvatures == pytest.approx([4 * math.pi / 3] * 3)


def test_curvature_is_scale_invariant(torus2):
    K = curvature(torus2).curvatures
    assert curvature(torus2.with_radii(torus2.radii * 3.0)).curvatures == pytest.approx(K, abs=1e-12)


def test_jacobian_symmetric_with_zero_row_sums(torus2, genus2):
    for pk in (torus2, torus2.with_radii([0.8, 1.7]), genus2):
        J = curvature_jacobian(pk).toarray()
        np.testing.assert_allclose(J, J.T, atol=1e-12)
        np.testing.assert_allclose(J.sum(axis=1), 0.0, atol=1e-12)


def test_jacobian_is_positive_semidefinite(torus2):
    J = curvature_jacobian(torus2.with_radii([0.8, 1.3])).toarray()
    eig = np.linalg.eigvalsh(J)
    assert abs(eig[0]) < 1e-12
    assert eig[1] > 0


def test_jacobian_equilateral_entries(torus2):
    J = curvature_jacobian(equal_radii(torus2))
    assert sparse.issparse(J)
    # eight sides join the two vertices, each with weight h / l = 1 / sqrt(12)
    w = 1 / math.sqrt(12)
    assert w == pytest.approx(0.28868, abs=1e-5)
    np.testing.assert_allclose(J.toarray(), 8 * w * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-12)


def test_jacobian_matches_finite_differences(torus2):
    pk = torus2.with_radii([0.9, 1.4])
    J = curvature_jacobian(pk).toarray()
    step = 1e-6
    for j in range(pk.tri.num_vertices):
        du = np.zeros(pk.tri.num_vertices)
        du[j] = step
        plus = curvature(pk.with_log_radii(pk.u + du)).curvatures
        minus = curvature(pk.with_log_radii(pk.u - du)).curvatures
        np.testing.assert_allclose((plus - minus) / (2 * step), J[:, j], atol=1e-6)


def test_curvature_state_carries_jacobian(torus2):
    state = curvature_state(torus2)
    assert state.jacobian.shape == (2, 2)
    assert state.euler_characteristic == 0


def test_targets(torus2, sphere3):
    assert uniform_target(sphere3.tri) == pytest.approx([4 * math.pi / 3] * 3)
    assert validate_target(torus2.tri, [0.5, -0.5]) == pytest.approx([0.5, -0.5])
    with pytest.raises(TargetInvalid):
        validate_target(torus2.tri, [0.0, 0.0, 0.0])
    with pytest.raises(TargetInvalid):
        validate_target(torus2.tri, [0.5, 0.0])
    with pytest.raises(TargetInvalid):
        validate_target(torus2.tri, [7.0, -7.0])
    with pytest.raises(TargetInvalid):
        validate_target(torus2.tri, [math.nan, 0.0])


def test_flow_config():
    with pytest.raises(ValidationFailed):
        FlowConfig(method="gradient")
    with pytest.raises(ValidationFailed):
        FlowConfig(step=0.0)
    cfg = FlowConfig(method="euler", tol=1e-6)
    assert cfg.override(tol=None, max_iters=5) == FlowConfig(method="euler", tol=1e-6, max_iters=5)


def test_ricci_potential_properties(torus2):
    u0 = torus2.u
    u1 = u0 + np.array([0.2, -0.1])
    u2 = u0 + np.array([-0.2, 0.15])
    assert ricci_potential_delta(torus2, u0, u0) == 0.0

    direct = ricci_potential_delta(torus2, u0, u2)
    via = ricci_potential_delta(torus2, u0, u1) + ricci_potential_delta(torus2, u1, u2)
    assert direct == pytest.approx(via, abs=1e-9)

    # moving along the scaling direction changes nothing
    assert ricci_potential_delta(torus2, u0, u0 + 0.2) == pytest.approx(0.0, abs=1e-9)


def test_ricci_potential_gradient_is_curvature_error(torus2):
    pk = torus2.with_radii([0.9, 1.4])
    d = np.array([1.0, -1.0])
    eps = 1e-5
    slope = ricci_potential_delta(pk, pk.u, pk.u + eps * d, segments=1) / eps
    assert slope == pytest.approx(float(curvature(pk).curvatures @ d), rel=1e-4)


def test_newton_direction_solves_constrained_system(torus2):
    pk = torus2.with_radii([1.0, 1.6])
    J = curvature_jacobian(pk)
    err = curvature(pk).curvatures
    d = newton_direction(J, err)
    assert d.sum() == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(J @ d, -err, atol=1e-10)


def test_newton_direction_singular():
    with pytest.raises(SingularBeyondKernel):
        newton_direction(sparse.csr_matrix((2, 2)), np.array([0.1, -0.1]))


@pytest.mark.parametrize("method", ["euler", "newton"])
def test_flow_equalizes_torus_radii(torus2, method):
    final, trace = run_flow(torus2, uniform_target(torus2.tri), FlowConfig(method=method))
    assert trace.converged
    assert trace.method == method
    assert final.radii[0] / final.radii[1] == pytest.approx(1.0, rel=1e-6)
    assert np.max(np.abs(curvature(final).curvatures)) < 1e-10

    merits = [s.merit for s in trace.steps]
    assert all(b <= a for a, b in zip(merits, merits[1:]))
    assert trace.steps[0].iter == 0
    assert trace.iterations == len(trace.steps) - 1
    assert all(abs(s.gauss_bonnet) < 1e-9 for s in trace.steps)


def test_newton_converges_faster_than_euler(torus2):
    target = uniform_target(torus2.tri)
    _, euler = flow_euler(torus2, target)
    _, newton = flow_newton(torus2, target)
    assert newton.iterations <= euler.iterations


def test_flow_already_at_target(torus1, genus2):
    for pk in (torus1, genus2):
        final, trace = flow_newton(pk, uniform_target(pk.tri))
        assert trace.converged
        assert trace.iterations == 0
        assert trace.total_flips == 0
        np.testing.assert_allclose(final.radii, pk.radii)


def test_flow_to_prescribed_curvature(torus2):
    target = [0.3, -0.3]
    final, trace = flow_newton(torus2, target)
    assert curvature(final).curvatures == pytest.approx(target, abs=1e-9)
    assert final.radii[0] > final.radii[1]


def test_flow_reports_max_iterations(torus2):
    with pytest.raises(MaxIterations) as err:
        flow_euler(torus2, uniform_target(torus2.tri), FlowConfig(max_iters=1))
    assert isinstance(err.value, NonConvergence)
    assert err.value.exit_code == 2
    assert len(err.value.trace.steps) == 2


def test_flow_rejects_bad_target(torus2):
    with pytest.raises(TargetInvalid):
        flow_newton(torus2, [1.0, 1.0])


def test_uniqueness_under_radius_perturbation(torus2):
    assert verify_uniqueness(torus2, trials=3, seed=4)


def test_inversive_distance_perturbation_changes_the_class(torus2):
    assert not verify_uniqueness(torus2, trials=2, perturb="inv_dist", seed=1)


def test_uniqueness_single_trial(torus2):
    assert verify_uniqueness(torus2, trials=1)
    with pytest.raises(ValidationFailed):
        verify_uniqueness(torus2, perturb="faces")


def test_newton_from_perturbed_radii(torus2, rng):
    for _ in range(5):
        start = torus2.with_log_radii(torus2.u + rng.uniform(-0.5, 0.5, 2))
        _, trace = flow_newton(start, uniform_target(torus2.tri))
        assert trace.converged
        assert trace.iterations <= 30


def with_first_edge(pk, value):
    inv = np.array(pk.inv_dist)
    inv[0] = value
    return Packing(pk.tri, inv, pk.radii)


def test_flip_on_the_wall_keeps_curvature(torus2):
    # edge 0 is Delaunay at I = 2 and not at I = 7
    wall = optimize.brentq(lambda x: edge_slacks(with_first_edge(torus2, x))[0], 2.0, 7.0, xtol=1e-14)
    pk = with_first_edge(torus2, wall)
    flipped, record = flip_packing(pk, 0)
    assert record.slack == pytest.approx(0.0, abs=1e-9)
    assert flipped.tri.signature() != pk.tri.signature()
    np.testing.assert_allclose(curvature(flipped).curvatures, curvature(pk).curvatures, atol=1e-9)


def test_flow_with_surgery(torus2, rng):
    flips = 0
    for _ in range(20):
        inv = rng.uniform(1.2, 6.0, torus2.tri.num_edges)
        start = Packing(torus2.tri, inv, np.exp(rng.uniform(-1.5, 1.5, 2)))
        final, trace = flow_newton(start, uniform_target(torus2.tri))
        assert trace.converged
        assert np.max(np.abs(curvature(final).curvatures)) < 1e-10
        assert all(abs(s.gauss_bonnet) < 1e-9 for s in trace.steps)
        merits = [s.merit for s in trace.steps]
        assert all(b <= a for a, b in zip(merits, merits[1:]))
        flips += trace.total_flips
    assert flips > 0
