"""Desk-scale full-order models built from circular filament loops.

A model is an RL network: N passive loops with per-loop resistances and a
dense mutual-inductance matrix, driven by designated source loops whose
coupling columns form the per-family source blocks.  Net-current
constraints over loop groups are eliminated through a null-space basis,
yielding SPD projected operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.special import ellipe, ellipk

from .errors import ConstraintError, GeometryError, NotPositiveDefinite, ShapeError
from .numerics import (
    PINV_CUTOFF,
    as_dense,
    cholesky_factor,
    require_symmetric,
)

__all__ = [
    "MU_0",
    "FAMILIES",
    "Loop",
    "FilamentSpec",
    "FullOrderModel",
    "ConstraintGroup",
    "NullspaceData",
    "ProjectedOperators",
    "NullSystem",
    "mutual_inductance",
    "self_inductance",
    "generate_filament_model",
    "assemble_constraints",
    "build_nullspace",
    "project_operators",
    "build_null_system",
]

MU_0 = 4e-7 * np.pi

#: Canonical excitation family order used everywhere downstream.
FAMILIES = ("axi", "3d", "volt")


@dataclass(frozen=True)
class Loop:
    """Circular filament: radius/height in meters, optional radial offset.

    Loops with equal offsets share an axis (coaxial pair); unequal offsets
    give axis-parallel loops handled by numerical quadrature.
    """

    radius: float
    z: float
    offset: float = 0.0
    wire_radius: float = 1e-3
    resistance: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError(f"loop radius must be positive, got {self.radius}")
        if not 0 < self.wire_radius < self.radius / 10:
            raise GeometryError(
                f"wire radius {self.wire_radius} outside (0, radius/10) for radius {self.radius}"
            )


@dataclass(frozen=True)
class FilamentSpec:
    """Geometry of a full-order model: passive unknowns plus source loops."""

    passive: tuple[Loop, ...]
    sources: dict[str, tuple[Loop, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.passive:
            raise GeometryError("need at least one passive loop")
        for loop in self.passive:
            if loop.resistance <= 0:
                raise GeometryError("passive loops need a positive resistance")
        for family in self.sources:
            if family not in FAMILIES:
                raise GeometryError(f"unknown source family {family!r}")


@dataclass
class FullOrderModel:
    """Assembled operators: sparse R, dense L, constraint rows F, V blocks."""

    spec: FilamentSpec
    resistance: scipy.sparse.csr_matrix
    inductance: np.ndarray
    constraints: scipy.sparse.csr_matrix
    sources: dict[str, np.ndarray]
    constraint_waveforms: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return self.inductance.shape[0]


def self_inductance(loop: Loop) -> float:
    """Thin-wire self inductance mu0*a*(ln(8a/r_w) - 1.75)."""
    return MU_0 * loop.radius * (np.log(8.0 * loop.radius / loop.wire_radius) - 1.75)


def _coaxial_mutual(a: float, b: float, d: float) -> float:
    """Maxwell's formula for two coaxial circular filaments.

    ``a``, ``b`` are the radii and ``d`` the axial separation; the elliptic
    integrals take the parameter m = k^2.
    """
    m = 4.0 * a * b / ((a + b) ** 2 + d**2)
    k = np.sqrt(m)
    return MU_0 * np.sqrt(a * b) * ((2.0 / k - k) * ellipk(m) - (2.0 / k) * ellipe(m))


def _parallel_axis_mutual(li: Loop, lj: Loop, n_quad: int = 256) -> float:
    """Neumann double integral for axis-parallel loops with unequal offsets.

    Trapezoidal rule in both angles; the integrand is smooth and periodic,
    so convergence is spectral for non-overlapping loops.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, n_quad, endpoint=False)
    phi = theta[:, None]
    th = theta[None, :]
    dx = (li.offset + li.radius * np.cos(th)) - (lj.offset + lj.radius * np.cos(phi))
    dy = li.radius * np.sin(th) - lj.radius * np.sin(phi)
    dist = np.sqrt(dx**2 + dy**2 + (li.z - lj.z) ** 2)
    integrand = np.cos(th - phi) / dist
    dtheta = 2.0 * np.pi / n_quad
    return MU_0 * li.radius * lj.radius / (4.0 * np.pi) * integrand.sum() * dtheta**2


def mutual_inductance(li: Loop, lj: Loop) -> float:
    """Mutual inductance of two circular filaments (henries)."""
    if li.offset == lj.offset:
        return _coaxial_mutual(li.radius, lj.radius, li.z - lj.z)
    return _parallel_axis_mutual(li, lj)


def _min_wire_distance(li: Loop, lj: Loop) -> float:
    if li.offset == lj.offset:
        return float(np.hypot(li.radius - lj.radius, li.z - lj.z))
    # coarse angular sampling is enough for an overlap guard
    theta = np.linspace(0.0, 2.0 * np.pi, 90, endpoint=False)
    pi = np.column_stack(
        [li.offset + li.radius * np.cos(theta), li.radius * np.sin(theta), np.full_like(theta, li.z)]
    )
    pj = np.column_stack(
        [lj.offset + lj.radius * np.cos(theta), lj.radius * np.sin(theta), np.full_like(theta, lj.z)]
    )
    diff = pi[:, None, :] - pj[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).min())


def generate_filament_model(spec: FilamentSpec, seed: int | None = None) -> FullOrderModel:
    """Assemble R, L and the per-family source blocks for a filament spec.

    ``seed`` is accepted for interface symmetry with the stochastic model
    builders in the pipeline; assembly itself is deterministic.
    """
    del seed
    loops = list(spec.passive)
    for family in FAMILIES:
        loops.extend(spec.sources.get(family, ()))
    for i in range(len(loops)):
        for j in range(i + 1, len(loops)):
            if _min_wire_distance(loops[i], loops[j]) < loops[i].wire_radius + loops[j].wire_radius:
                raise GeometryError(f"filaments {i} and {j} overlap")

    n = len(spec.passive)
    l_mat = np.zeros((n, n), order="F")
    for i, li in enumerate(spec.passive):
        l_mat[i, i] = self_inductance(li)
        for j in range(i + 1, n):
            m = mutual_inductance(li, spec.passive[j])
            l_mat[i, j] = m
            l_mat[j, i] = m  # exact symmetry by construction

    r_mat = scipy.sparse.diags(
        [loop.resistance for loop in spec.passive], format="csr", dtype=np.float64
    )

    sources: dict[str, np.ndarray] = {}
    for family in FAMILIES:
        src_loops = spec.sources.get(family, ())
        block = np.zeros((n, len(src_loops)), order="F")
        for k, src in enumerate(src_loops):
            for i, li in enumerate(spec.passive):
                block[i, k] = mutual_inductance(li, src)
        sources[family] = block

    cholesky_factor(l_mat)  # SPD sanity; raises NotPositiveDefinite on failure
    return FullOrderModel(
        spec=spec,
        resistance=r_mat,
        inductance=l_mat,
        constraints=scipy.sparse.csr_matrix((0, n)),
        sources=sources,
    )


@dataclass(frozen=True)
class ConstraintGroup:
    """Net-current constraint: the currents of ``loops`` sum to a waveform."""

    loops: tuple[int, ...]
    waveform: str


def assemble_constraints(model: FullOrderModel, groups) -> FullOrderModel:
    """Attach net-current constraint rows (one per group) to a model.

    Each group contributes a row of F with unit entries on its members;
    the binding associates the row with one imposed-current waveform id.
    """
    n = model.size
    rows, cols, waveform_ids = [], [], []
    for r, group in enumerate(groups):
        if not group.loops:
            raise ConstraintError(f"group {r} is empty")
        for idx in group.loops:
            if not 0 <= idx < n:
                raise ConstraintError(f"group {r}: loop index {idx} out of range")
            rows.append(r)
            cols.append(idx)
        waveform_ids.append(group.waveform)
    f_mat = scipy.sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(waveform_ids), n)
    )
    model.constraints = f_mat
    model.constraint_waveforms = tuple(waveform_ids)
    return model


@dataclass
class NullspaceData:
    """Orthonormal null-space basis of F plus the min-norm particular map."""

    basis: np.ndarray  # K, shape (N, N - rank F)
    pinv: np.ndarray  # F^+, shape (N, m); particular solution is pinv @ alpha

    def particular(self, alpha) -> np.ndarray:
        """Min-norm current satisfying F I = alpha (zero when unconstrained)."""
        alpha = np.asarray(alpha, dtype=np.float64)
        if self.pinv.shape[1] == 0:
            shape = (self.basis.shape[0],) if alpha.ndim <= 1 else (self.basis.shape[0], alpha.shape[1])
            return np.zeros(shape)
        return self.pinv @ alpha


def build_nullspace(f_mat) -> NullspaceData:
    """Null-space basis and pseudo-inverse of the constraint matrix.

    K comes from the SVD of F (right singular vectors of the zero singular
    values).  An empty F recovers the unconstrained formulation: K = I and
    a zero particular solution.
    """
    if scipy.sparse.issparse(f_mat):
        f_mat = f_mat.toarray()
    f_mat = np.atleast_2d(np.asarray(f_mat, dtype=np.float64))
    m, n = f_mat.shape
    if m == 0:
        return NullspaceData(basis=np.asfortranarray(np.eye(n)), pinv=np.zeros((n, 0), order="F"))
    u, s, vt = np.linalg.svd(f_mat)
    cutoff = PINV_CUTOFF * (s[0] if s.size else 0.0)
    rank = int((s > cutoff).sum())
    basis = np.asfortranarray(vt[rank:].T)
    inv_s = np.zeros_like(s)
    inv_s[:rank] = 1.0 / s[:rank]
    pinv = np.asfortranarray(vt[: len(s)].T @ np.diag(inv_s) @ u.T[: len(s)])
    return NullspaceData(basis=basis, pinv=pinv)


@dataclass(frozen=True)
class ProjectedOperators:
    """SPD operators in null-space coordinates: K^T R K and K^T L K."""

    resistance: np.ndarray
    inductance: np.ndarray


def project_operators(model: FullOrderModel, basis: np.ndarray) -> ProjectedOperators:
    """Congruence-project R and L onto an orthonormal basis, verify SPD."""
    basis = as_dense(basis, name="null basis")
    if basis.shape[0] != model.size:
        raise ShapeError(f"basis rows {basis.shape[0]} != model size {model.size}")
    r_k = require_symmetric(basis.T @ (model.resistance @ basis), tol=1e-10, name="R_K")
    l_k = require_symmetric(basis.T @ model.inductance @ basis, tol=1e-10, name="L_K")
    try:
        cholesky_factor(r_k)
        cholesky_factor(l_k)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"projected operator lost definiteness: {exc}") from exc
    return ProjectedOperators(resistance=r_k, inductance=l_k)


@dataclass
class NullSystem:
    """Everything the transient and MOR stages need, in null coordinates.

    ``sources[family]`` holds K^T V_family; ``couple_r``/``couple_l`` are
    the constraint coupling blocks K^T R F^+ and K^T L F^+ that multiply
    the imposed-current waveforms and their increments.
    """

    operators: ProjectedOperators
    sources: dict[str, np.ndarray]
    couple_r: np.ndarray
    couple_l: np.ndarray
    nullspace: NullspaceData
    constraint_waveforms: tuple[str, ...]

    @property
    def size(self) -> int:
        return self.operators.inductance.shape[0]


def build_null_system(model: FullOrderModel, nullspace: NullspaceData | None = None) -> NullSystem:
    """Project a full-order model onto its constraint null space."""
    if nullspace is None:
        nullspace = build_nullspace(model.constraints)
    k = nullspace.basis
    ops = project_operators(model, k)
    sources = {
        family: np.asfortranarray(k.T @ block) for family, block in model.sources.items()
    }
    pinv = nullspace.pinv
    couple_r = np.asfortranarray(k.T @ (model.resistance @ pinv))
    couple_l = np.asfortranarray(k.T @ (model.inductance @ pinv))
    return NullSystem(
        operators=ops,
        sources=sources,
        couple_r=couple_r,
        couple_l=couple_l,
        nullspace=nullspace,
        constraint_waveforms=model.constraint_waveforms,
    )
