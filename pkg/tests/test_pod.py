"""Snapshot compression and the reduced online stage."""

import numpy as np
import pytest

import morphkit as mk
from morphkit import (DegenerateSnapshotsError, DisplacementField,
                      IllConditionedOnlineError, IllPosedOnlineError,
                      PodModel, SnapshotSet, assemble, bend_law,
                      build_online, build_pod_model, build_snapshots,
                      compute_pod, deform, evaluate, online_solve,
                      pod_energy, pseudo_inverse, read_model, relative_error,
                      rotation_law, sample_domain, write_model)


def synthetic_snapshots(sigma, rows=6, seed=0):
    """SnapshotSet with a prescribed spectrum (rows = 3 nodes x dim 2)."""
    rng = np.random.default_rng(seed)
    sigma = np.asarray(sigma, dtype=np.float64)
    k = sigma.size
    U = np.linalg.qr(rng.standard_normal((rows, k)))[0]
    V = np.linalg.qr(rng.standard_normal((k, k)))[0]
    mat = (U * sigma) @ V.T
    return SnapshotSet(mat, tuple(range(k)), [0, 1, 2], 2)


# ---------------------------------------------------------------------------
# energy rule and truncation

def test_pod_energy_hand_case():
    # spectrum (2, 1, 1): total 6, E(1) = 2/6, E(2) = 1/6, E(3) = 0
    sigma = [2.0, 1.0, 1.0]
    assert pod_energy(sigma, 1) == pytest.approx(1.0 / 3.0)
    assert pod_energy(sigma, 2) == pytest.approx(1.0 / 6.0)
    assert pod_energy(sigma, 3) == 0.0
    with pytest.raises(ValueError):
        pod_energy([0.0, 0.0], 1)


@pytest.mark.parametrize("epsilon,expected", [(0.5, 1), (0.2, 2), (0.0, 3)])
def test_truncation_count(epsilon, expected):
    snaps = synthetic_snapshots([2.0, 1.0, 1.0])
    Z, sigma, n = compute_pod(snaps, epsilon)
    assert n == expected
    assert Z.shape == (6, expected)
    np.testing.assert_allclose(sigma, [2.0, 1.0, 1.0], rtol=1e-12)


def test_basis_is_orthonormal():
    snaps = synthetic_snapshots([5.0, 3.0, 0.5], seed=2)
    Z, _, n = compute_pod(snaps, 0.0)
    np.testing.assert_allclose(Z.T @ Z, np.eye(n), atol=1e-12)


def test_rank_tolerance_drops_noise_modes():
    # third direction is numerically zero, so only two values survive
    snaps = synthetic_snapshots([1.0, 0.5, 1e-15])
    _, sigma, n = compute_pod(snaps, 0.0)
    assert sigma.size == 2
    assert n == 2


def test_rank_one_family():
    col = np.arange(1.0, 7.0)
    mat = np.outer(col, [1.0, 2.0, 3.0])
    snaps = SnapshotSet(mat, (0.1, 0.2, 0.3), [0, 1, 2], 2)
    Z, _, n = compute_pod(snaps, 1e-5)
    assert n == 1
    # basis spans the single direction
    proj = Z @ (Z.T @ mat)
    np.testing.assert_allclose(proj, mat, atol=1e-12)


def test_zero_snapshots_rejected():
    snaps = SnapshotSet(np.zeros((6, 2)), (0.0, 1.0), [0, 1, 2], 2)
    with pytest.raises(DegenerateSnapshotsError):
        compute_pod(snaps, 0.0)


def test_snapshot_set_validation():
    with pytest.raises(ValueError, match="rows"):
        SnapshotSet(np.zeros((5, 2)), (0.0, 1.0), [0, 1, 2], 2)
    with pytest.raises(ValueError, match="parameter"):
        SnapshotSet(np.zeros((6, 2)), (0.0,), [0, 1, 2], 2)


# ---------------------------------------------------------------------------
# pseudo-inverse

def penrose_residuals(A, X):
    return (np.abs(A @ X @ A - A).max(), np.abs(X @ A @ X - X).max(),
            np.abs((A @ X).T - A @ X).max(), np.abs((X @ A).T - X @ A).max())


def test_pseudo_inverse_penrose():
    rng = np.random.default_rng(1)
    for shape in [(5, 3), (3, 5), (4, 4)]:
        A = rng.standard_normal(shape)
        X = pseudo_inverse(A)
        assert max(penrose_residuals(A, X)) < 1e-12


def test_pseudo_inverse_rank_deficient():
    A = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])  # rank one
    X = pseudo_inverse(A)
    assert max(penrose_residuals(A, X)) < 1e-12


def test_pseudo_inverse_zero_matrix():
    X = pseudo_inverse(np.zeros((3, 4)))
    np.testing.assert_array_equal(X, np.zeros((4, 3)))


# ---------------------------------------------------------------------------
# snapshot assembly

def test_build_snapshots_layout():
    # midpoint target of two controls under the 2D bend law: the column
    # for mu is (0, mu/2) since only control x=1 moves, by mu
    nodes = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]
    mesh = mk.Mesh(2, nodes, np.empty((0, 3), dtype=np.int64), [0, 1], [2])
    op = assemble(mesh, [0, 1], [2])
    law = bend_law(np.array([0, 1]), (0.0, 1.0))
    snaps = build_snapshots(op, law, mesh, (0.5, 1.0))
    np.testing.assert_allclose(snaps.matrix,
                               [[0.0, 0.0], [0.25, 0.5]], atol=1e-15)
    assert snaps.params == (0.5, 1.0)


def test_build_snapshots_needs_params(wing):
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    law = bend_law(wing.boundary_ids, (0.0, 1.0))
    with pytest.raises(ValueError):
        build_snapshots(op, law, wing, ())


# ---------------------------------------------------------------------------
# online stage

def test_weighted_online_matches_full_morph(wing):
    # a one-mode basis captures the linear bend family exactly, so the
    # reduced solve must reproduce the full morph to round-off
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    law = bend_law(wing.boundary_ids, (0.0, 0.02))
    train = sample_domain(law.domain, 10, seed=1)
    model = build_pod_model(op, law, wing, train, epsilon=1e-5)
    assert model.n_modes == 1
    d_c = evaluate(law, wing, 0.0173)
    online = online_solve(model, d_c)
    full = deform(op, d_c)
    assert relative_error(online, full) < 1e-12


def test_plain_online_matches_full_morph(wing):
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    law = bend_law(wing.boundary_ids, (0.0, 0.02))
    train = sample_domain(law.domain, 10, seed=1)
    model = build_pod_model(op, law, wing, train, epsilon=1e-5, mode="plain")
    np.testing.assert_array_equal(model.online_lhs, np.eye(model.n_modes))
    d_c = evaluate(law, wing, 0.011)
    assert relative_error(online_solve(model, d_c), deform(op, d_c)) < 1e-12


def test_rotation_family_needs_two_modes(wing):
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    law = rotation_law(wing.boundary_ids, (-36.0, 0.0),
                       pivot=(0.5, 0.125, 0.0))
    train = sample_domain(law.domain, 8, seed=3)
    model = build_pod_model(op, law, wing, train, epsilon=1e-5)
    assert model.n_modes == 2
    assert pod_energy(model.singular_values, 2) <= 1e-12
    d_c = evaluate(law, wing, -21.0)
    assert relative_error(online_solve(model, d_c), deform(op, d_c)) < 1e-10


def test_online_on_thinned_operator_reproduces_its_morph(wing):
    sel = mk.select(wing, wing.boundary_ids, 0.5, seed=2).selected
    op = assemble(wing, sel, wing.interior_ids)
    law = bend_law(wing.boundary_ids, (0.0, 0.02))
    train = sample_domain(law.domain, 6, seed=4)
    model = build_pod_model(op, law, wing, train, epsilon=1e-5)
    d_hat = evaluate(law, wing, 0.015).restrict(sel)
    assert relative_error(online_solve(model, d_hat),
                          deform(op, d_hat)) < 1e-10


def test_online_solve_checks_ids(wing):
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    law = bend_law(wing.boundary_ids, (0.0, 0.02))
    model = build_pod_model(op, law, wing, (0.01, 0.02), epsilon=1e-5)
    wrong = DisplacementField([0, 1], np.zeros((2, 3)))
    with pytest.raises(ValueError, match="control_ids"):
        online_solve(model, wrong)


def test_rank_deficient_basis_rejected():
    nodes = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]
    mesh = mk.Mesh(2, nodes, np.empty((0, 3), dtype=np.int64), [0, 1], [2])
    op = assemble(mesh, [0, 1], [2])
    Z = np.array([[1.0, 1.0], [0.0, 0.0]])  # two identical directions
    with pytest.raises(IllPosedOnlineError) as err:
        build_online(Z, np.array([1.0, 1.0]), op)
    assert err.value.smallest_singular_value == pytest.approx(0.0, abs=1e-12)


def test_indefinite_online_system_surfaces():
    model = PodModel(
        basis=np.eye(2), singular_values=np.array([1.0, 1.0]), n_modes=2,
        epsilon=0.0, mode="weighted",
        online_lhs=np.array([[1.0, 2.0], [2.0, 1.0]]),  # not positive definite
        online_rhs_map=np.zeros((2, 4)), control_ids=[0, 1],
        target_ids=[5], dim=2)
    zero = DisplacementField.zero([0, 1], 2)
    with pytest.raises(IllConditionedOnlineError):
        online_solve(model, zero)


def test_build_online_validation(wing):
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    Z = np.ones((op.n_targets * 3, 1))
    with pytest.raises(ValueError, match="mode"):
        build_online(Z, np.array([1.0]), op, mode="fast")
    with pytest.raises(ValueError, match="multiple"):
        build_online(np.ones((op.n_targets * 3 + 1, 1)), np.array([1.0]), op)


# ---------------------------------------------------------------------------
# persistence

def _small_model(wing):
    op = assemble(wing, wing.boundary_ids, wing.interior_ids)
    law = bend_law(wing.boundary_ids, (0.0, 0.02))
    return build_pod_model(op, law, wing, (0.005, 0.01, 0.02), epsilon=1e-5,
                           selection_params={"method": "idw",
                                             "card_C_hat": 3, "seed": 0})


def test_model_roundtrip(wing, tmp_path):
    model = _small_model(wing)
    path = tmp_path / "model.bin"
    write_model(model, path)
    back = read_model(path)
    np.testing.assert_array_equal(back.basis, model.basis)
    np.testing.assert_array_equal(back.singular_values,
                                  model.singular_values)
    np.testing.assert_array_equal(back.online_lhs, model.online_lhs)
    np.testing.assert_array_equal(back.online_rhs_map, model.online_rhs_map)
    np.testing.assert_array_equal(back.control_ids, model.control_ids)
    np.testing.assert_array_equal(back.target_ids, model.target_ids)
    assert back.mode == model.mode
    assert back.epsilon == model.epsilon
    assert back.train_params == model.train_params
    assert back.selection_params == model.selection_params

    d_c = DisplacementField(model.control_ids,
                            np.tile([0.0, 1e-3, 0.0],
                                    (model.control_ids.size, 1)))
    np.testing.assert_array_equal(online_solve(back, d_c).vectors,
                                  online_solve(model, d_c).vectors)


def test_model_missing_sidecar(wing, tmp_path):
    model = _small_model(wing)
    path = tmp_path / "model.bin"
    write_model(model, path)
    (tmp_path / "model.bin.json").unlink()
    back = read_model(path)
    assert not back.selection_params
    assert back.n_modes == model.n_modes


def test_read_model_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"WHAT" + b"\x00" * 64)
    with pytest.raises(ValueError, match="POD1"):
        read_model(path)


def test_read_model_rejects_truncation(wing, tmp_path):
    model = _small_model(wing)
    path = tmp_path / "model.bin"
    write_model(model, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-16])
    with pytest.raises(ValueError):
        read_model(path)
