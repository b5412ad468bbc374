"""Reduced-order acceleration of repeated morphs.

Offline: evaluate the morphing operator on training parameters, stack
the flattened interior displacements as snapshot columns (node-major,
components interleaved), extract an orthonormal basis Z by thin SVD, and
precompute the small online matrices. The mode count N is the smallest
one whose discarded spectral energy

    E(N) = sum_{n>N} sigma_n^2 / sum_n sigma_n^2

drops to the requested epsilon.

Online: for a new parameter, solve an N x N system for the reduced
coordinates and expand through Z. Two projections exist:

* "weighted": least squares of the control displacement through the
  pseudo-inverse of the weight matrix, A = Zt Kt K Z with K = pinv(W),
  B = Zt Kt; A is solved by Cholesky factorization.
* "plain": A = I and B = Zt W, i.e. ordinary projection of the morphed
  field onto the basis.

Both reproduce any morph whose image already lies in span(Z).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (DegenerateSnapshotsError, IllConditionedOnlineError,
                     IllPosedOnlineError)
from .idw import IdwOperator, deform
from .laws import evaluate
from .mesh import DisplacementField

__all__ = [
    "SnapshotSet",
    "PodModel",
    "build_snapshots",
    "compute_pod",
    "pod_energy",
    "pseudo_inverse",
    "build_online",
    "online_solve",
    "build_pod_model",
    "write_model",
    "read_model",
]

RANK_TOL = 1e-12

MODES = ("weighted", "plain")


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Training snapshots: one flattened displacement field per column."""

    matrix: np.ndarray      # (n_targets * dim, n_train)
    params: tuple           # training mu values, one per column
    target_ids: np.ndarray
    dim: int

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.float64, copy=True)
        mat.setflags(write=False)
        ids = np.array(np.atleast_1d(self.target_ids), dtype=np.int64, copy=True)
        ids.setflags(write=False)
        if mat.ndim != 2 or mat.shape[0] != ids.size * self.dim:
            raise ValueError("snapshot rows must equal n_targets * dim")
        if mat.shape[1] != len(self.params):
            raise ValueError("one training parameter per column required")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "target_ids", ids)
        object.__setattr__(self, "params", tuple(float(m) for m in self.params))


@dataclass(frozen=True, eq=False)
class PodModel:
    """Offline artifact: basis plus precomputed online matrices."""

    basis: np.ndarray            # (n_targets * dim, n_modes)
    singular_values: np.ndarray  # all retained values, >= n_modes of them
    n_modes: int
    epsilon: float
    mode: str                    # "weighted" or "plain"
    online_lhs: np.ndarray       # (N, N)
    online_rhs_map: np.ndarray   # (N, n_controls * dim)
    control_ids: np.ndarray
    target_ids: np.ndarray
    dim: int
    train_params: tuple = ()
    selection_params: dict | None = None

    def __post_init__(self):
        for name in ("basis", "singular_values", "online_lhs", "online_rhs_map"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("control_ids", "target_ids"):
            arr = np.array(np.atleast_1d(getattr(self, name)), dtype=np.int64,
                           copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.basis.shape != (self.target_ids.size * self.dim, self.n_modes):
            raise ValueError("basis shape inconsistent with targets and n_modes")
        if self.online_lhs.shape != (self.n_modes, self.n_modes):
            raise ValueError("online_lhs must be N x N")
        if self.online_rhs_map.shape != (self.n_modes,
                                         self.control_ids.size * self.dim):
            raise ValueError("online_rhs_map must be N x (n_controls * dim)")


def build_snapshots(op, law, mesh, train_params):
    """Morph once per training parameter and stack the results as columns."""
    train_params = tuple(float(m) for m in train_params)
    if not train_params:
        raise ValueError("need at least one training parameter")
    dim = mesh.dim
    cols = np.empty((op.n_targets * dim, len(train_params)))
    for j, mu in enumerate(train_params):
        d_c = evaluate(law, mesh, mu).restrict(op.control_ids)
        cols[:, j] = deform(op, d_c).as_vector()
    return SnapshotSet(cols, train_params, op.target_ids, dim)


def pod_energy(sigma, n):
    """Discarded-energy fraction E(n) for the spectrum ``sigma``."""
    sq = np.asarray(sigma, dtype=np.float64) ** 2
    total = sq.sum()
    if total == 0.0:
        raise ValueError("zero spectrum has no energy")
    return float(sq[n:].sum() / total)


def compute_pod(snapshots, epsilon, rank_tol=RANK_TOL):
    """Orthonormal basis from snapshots: returns (Z, sigma, N).

    sigma holds every singular value above rank_tol * sigma_1; Z keeps
    the first N columns, N being the smallest count with E(N) <= epsilon.
    """
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    U = snapshots.matrix
    if not U.any():
        raise DegenerateSnapshotsError("all snapshot columns are zero")
    Z, sigma, _ = np.linalg.svd(U, full_matrices=False)
    keep = sigma >= rank_tol * sigma[0]
    sigma = sigma[keep]
    r = sigma.size
    n_modes = r
    for n in range(1, r + 1):
        if pod_energy(sigma, n) <= epsilon:
            n_modes = n
            break
    return Z[:, :n_modes], sigma, n_modes


def pseudo_inverse(matrix, rank_tol=RANK_TOL):
    """Moore-Penrose inverse; singular values below rank_tol * max are zeroed."""
    matrix = np.asarray(matrix, dtype=np.float64)
    U, s, Vt = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((matrix.shape[1], matrix.shape[0]))
    inv = np.where(s >= rank_tol * s[0], s, np.inf)
    return (Vt.T / inv) @ U.T


def _apply_per_component(mat, Z, n_nodes, dim):
    # (mat ⊗ I_dim) @ Z for flattened node-major/component-minor vectors
    n_cols = Z.shape[1]
    Zr = Z.reshape(n_nodes, dim, n_cols)
    out = np.tensordot(mat, Zr, axes=([1], [0]))  # (rows, dim, n_cols)
    return out.reshape(mat.shape[0] * dim, n_cols)


def build_online(Z, sigma, op, mode="weighted", epsilon=0.0,
                 train_params=(), selection_params=None, rank_tol=RANK_TOL):
    """Precompute the online system for basis ``Z`` over operator ``op``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if Z.shape[0] % op.n_targets:
        raise ValueError("basis rows are not a multiple of the target count")
    dim = Z.shape[0] // op.n_targets
    n_modes = Z.shape[1]
    if mode == "weighted":
        pinv = pseudo_inverse(op.matrix, rank_tol)
        KZ = _apply_per_component(pinv, Z, op.n_targets, dim)
        s = np.linalg.svd(KZ, compute_uv=False)
        if s.size == 0 or s[0] == 0.0 or s[-1] < rank_tol * s[0]:
            raise IllPosedOnlineError(
                "pinv(W) @ Z is rank deficient; the weighted online system "
                "is not solvable", float(s[-1]) if s.size else 0.0)
        lhs = KZ.T @ KZ
        rhs_map = KZ.T
    else:
        lhs = np.eye(n_modes)
        # Zt (W ⊗ I_dim), laid out (N) x (controls, components)
        Zr = Z.reshape(op.n_targets, dim, n_modes)
        rhs_map = np.tensordot(Zr, op.matrix, axes=([0], [0]))  # (dim, N, m)
        rhs_map = rhs_map.transpose(1, 2, 0).reshape(n_modes,
                                                     op.n_controls * dim)
    return PodModel(Z, sigma, n_modes, float(epsilon), mode, lhs, rhs_map,
                    op.control_ids, op.target_ids, dim,
                    tuple(float(m) for m in train_params), selection_params)


def online_solve(model, d_controls):
    """Reduced solve for one control displacement; expands through the basis.

    ``d_controls`` must cover exactly ``model.control_ids``, in order.
    """
    if not np.array_equal(d_controls.indices, model.control_ids):
        raise ValueError("displacement indices must equal model.control_ids in order")
    if d_controls.dim != model.dim:
        raise ValueError(f"field dim {d_controls.dim} != model dim {model.dim}")
    rhs = model.online_rhs_map @ d_controls.as_vector()
    if model.mode == "weighted":
        try:
            beta = scipy.linalg.cho_solve(
                scipy.linalg.cho_factor(model.online_lhs), rhs)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedOnlineError(
                f"online normal equations failed to factorize: {exc}") from None
    else:
        beta = rhs
    flat = model.basis @ beta
    return DisplacementField(model.target_ids,
                             flat.reshape(model.target_ids.size, model.dim))


def build_pod_model(op, law, mesh, train_params, epsilon, mode="weighted",
                    selection_params=None, rank_tol=RANK_TOL):
    """Full offline stage: snapshots, basis, online matrices."""
    snaps = build_snapshots(op, law, mesh, train_params)
    Z, sigma, _ = compute_pod(snaps, epsilon, rank_tol)
    return build_online(Z, sigma, op, mode=mode, epsilon=epsilon,
                        train_params=train_params,
                        selection_params=selection_params, rank_tol=rank_tol)


# ---------------------------------------------------------------------------
# persistence
#
# binary layout, little-endian:
#   4s  magic "POD1"
#   u32 rows (n_targets * dim), u32 n_modes, u32 n_sigma,
#   u32 n_controls, u32 n_targets, u32 dim, u8 mode (0 weighted, 1 plain)
#   f64[] basis (rows x n_modes, row-major), f64[] sigma,
#   f64[] online_lhs (N x N), f64[] online_rhs_map (N x n_controls*dim)
#   i64[] target_ids, i64[] control_ids
# plus a JSON sidecar at <path>.json with epsilon, n_modes, train_params,
# selection_params.

_MAGIC = b"POD1"
_HEADER = struct.Struct("<4sIIIIIIB")


def write_model(model, path):
    path = str(path)
    rows = model.basis.shape[0]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, rows, model.n_modes,
                              model.singular_values.size,
                              model.control_ids.size, model.target_ids.size,
                              model.dim, MODES.index(model.mode)))
        for arr in (model.basis, model.singular_values, model.online_lhs,
                    model.online_rhs_map):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        for arr in (model.target_ids, model.control_ids):
            fh.write(arr.astype("<i8").tobytes())
    sidecar = {
        "epsilon": model.epsilon,
        "n_modes": model.n_modes,
        "mode": model.mode,
        "train_params": list(model.train_params),
        "selection_params": model.selection_params,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=1)
        fh.write("\n")


def read_model(path):
    path = str(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a POD1 model dump")
    _, rows, n_modes, n_sigma, n_ctl, n_tgt, dim, mode_flag = _HEADER.unpack_from(raw)
    if mode_flag >= len(MODES):
        raise ValueError(f"{path}: unknown mode flag {mode_flag}")
    counts = (rows * n_modes, n_sigma, n_modes * n_modes,
              n_modes * n_ctl * dim, n_tgt, n_ctl)
    expected = _HEADER.size + 8 * sum(counts)
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated model dump "
                         f"({len(raw)} bytes, expected {expected})")
    offset = _HEADER.size
    blocks = []
    for count, dtype in zip(counts, ("<f8",) * 4 + ("<i8",) * 2):
        blocks.append(np.frombuffer(raw, dtype=dtype, count=count, offset=offset))
        offset += 8 * count
    try:
        with open(path + ".json") as fh:
            sidecar = json.load(fh)
    except FileNotFoundError:
        sidecar = {}
    return PodModel(
        basis=blocks[0].reshape(rows, n_modes),
        singular_values=blocks[1],
        n_modes=n_modes,
        epsilon=float(sidecar.get("epsilon", 0.0)),
        mode=MODES[mode_flag],
        online_lhs=blocks[2].reshape(n_modes, n_modes),
        online_rhs_map=blocks[3].reshape(n_modes, n_ctl * dim),
        control_ids=blocks[5],
        target_ids=blocks[4],
        dim=dim,
        train_params=tuple(sidecar.get("train_params", ())),
        selection_params=sidecar.get("selection_params"),
    )
