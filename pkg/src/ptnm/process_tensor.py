"""One- and two-step process tensors in Choi (matrix) form.

A two-step tensor lives on the labeled factors (S2, S1', S1, S0', S0),
leftmost = latest time, with basis |i2 i1' i1 i0' i0><j2 j1' j1 j0' j0|.
Contracting the S1'/S1 slot with the Choi matrix of the step-1 operation
and the S0'/S0 slot with the step-0 operation yields the final reduced
system state. A one-step tensor lives on (S1, S0', S0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DimensionError,
    LabeledSpace,
    hermitize,
    kron,
    partial_trace,
    trace_all_but,
    trace_norm,
)
from .quantum import DensityMatrix, QuantumMap, density

TWO_STEP_LABELS = ("S2", "S1'", "S1", "S0'", "S0")
ONE_STEP_LABELS = ("S1", "S0'", "S0")


@dataclass(frozen=True)
class ProcessTensor:
    """Choi-form process tensor over labeled system factors."""

    mat: np.ndarray
    space: LabeledSpace
    d_sys: int

    def __post_init__(self):
        object.__setattr__(self, "mat", hermitize(np.asarray(self.mat, dtype=complex)))
        if self.mat.shape != (self.space.dim, self.space.dim):
            raise DimensionError(
                f"tensor shape {self.mat.shape} vs space dim {self.space.dim}"
            )

    @property
    def steps(self) -> int:
        return 2 if len(self.space.factors) == 5 else 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)


class FactorizationError(ValueError):
    """Initial system-environment state is not factorized within tolerance."""


@dataclass(frozen=True)
class ReducedProcessTensor:
    """Reduced two-step tensor on (S2, S1', S1, S0') with its initial state.

    fact_residual records how well T = T~ (x) rho0 held at reduction time.
    """

    mat: np.ndarray
    space: LabeledSpace
    rho0: DensityMatrix
    d_sys: int
    fact_residual: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mat", hermitize(np.asarray(self.mat, dtype=complex)))
        if self.mat.shape != (self.space.dim, self.space.dim):
            raise DimensionError(
                f"tensor shape {self.mat.shape} vs space dim {self.space.dim}"
            )


def _check_unitary(u: np.ndarray, dim: int, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise DimensionError(f"{name} shape {u.shape}, expected {(dim, dim)}")
    if np.linalg.norm(u @ u.conj().T - np.eye(dim)) > 1e-9 * dim:
        raise ValueError(f"{name} is not unitary within tolerance")
    return u


def _check_joint_state(rho_se: DensityMatrix, d_sys: int, d_env: int) -> np.ndarray:
    if rho_se.dim != d_sys * d_env:
        raise DimensionError(
            f"joint state dim {rho_se.dim}, expected {d_sys}*{d_env}"
        )
    return rho_se.mat.reshape(d_sys, d_env, d_sys, d_env)


def build_one_step(
    u0: np.ndarray, rho_se: DensityMatrix, d_sys: int, d_env: int
) -> ProcessTensor:
    """One-step process tensor from a joint unitary and initial joint state.

    M[(i1 i0' i0),(j1 j0' j0)] = sum_env U0[i1 a1, i0' a0] U0*[j1 a1, j0' b0]
                                 rho_se[(i0 a0),(j0 b0)],
    the environment output indexes being traced (a1 shared).
    """
    d = d_sys * d_env
    u = _check_unitary(u0, d, "u0").reshape(d_sys, d_env, d_sys, d_env)
    r = _check_joint_state(rho_se, d_sys, d_env)
    m = np.einsum("eqgs,fqht,msnt->egmfhn", u, u.conj(), r, optimize=True)
    dim = d_sys**3
    space = LabeledSpace.of(*((lab, d_sys) for lab in ONE_STEP_LABELS))
    return ProcessTensor(m.reshape(dim, dim), space, d_sys)


def build_two_step(
    u1: np.ndarray,
    u0: np.ndarray,
    rho_se: DensityMatrix,
    d_sys: int,
    d_env: int,
) -> ProcessTensor:
    """Two-step process tensor from joint unitaries u1, u0 and the initial state."""
    d = d_sys * d_env
    v1 = _check_unitary(u1, d, "u1").reshape(d_sys, d_env, d_sys, d_env)
    v0 = _check_unitary(u0, d, "u0").reshape(d_sys, d_env, d_sys, d_env)
    r = _check_joint_state(rho_se, d_sys, d_env)
    t = np.einsum(
        "apcq,bpdr,eqgs,frht,msnt->acegmbdfhn",
        v1,
        v1.conj(),
        v0,
        v0.conj(),
        r,
        optimize=True,
    )
    dim = d_sys**5
    space = LabeledSpace.of(*((lab, d_sys) for lab in TWO_STEP_LABELS))
    return ProcessTensor(t.reshape(dim, dim), space, d_sys)


def apply(t: ProcessTensor, ops: list[QuantumMap]) -> DensityMatrix:
    """Contract the tensor with the operation sequence [A_last, ..., A_0].

    Returns the final reduced system state (subnormalized when the
    operations are trace decreasing).
    """
    d = t.d_sys
    for op in ops:
        if op.dim_in != d or op.dim_out != d:
            raise DimensionError(f"operation dims {op.dim_out}x{op.dim_in}, expected {d}x{d}")
    if t.steps == 2:
        if len(ops) != 2:
            raise DimensionError(f"two-step tensor needs 2 operations, got {len(ops)}")
        a1, a0 = ops
        tt = t.mat.reshape((d,) * 10)
        c1 = a1.choi.reshape(d, d, d, d)
        c0 = a0.choi.reshape(d, d, d, d)
        out = np.einsum("acegmbdfhn,cedf,gmhn->ab", tt, c1, c0, optimize=True)
    else:
        if len(ops) != 1:
            raise DimensionError(f"one-step tensor needs 1 operation, got {len(ops)}")
        (a0,) = ops
        tt = t.mat.reshape((d,) * 6)
        c0 = a0.choi.reshape(d, d, d, d)
        out = np.einsum("egmfhn,gmhn->ef", tt, c0, optimize=True)
    out = hermitize(out)
    tr = float(np.trace(out).real)
    return density(out, "S", subnormalized=abs(tr - 1.0) > 1e-9)


def factor_against(
    m: np.ndarray, space: LabeledSpace, rho: np.ndarray, labels: tuple[str, ...]
) -> np.ndarray:
    """Least-squares X with m ~ X (x) rho, rho sitting on the given trailing labels.

    Exact when the factorization holds; in general the minimizer of
    ||m - X (x) rho||_F with Hermitian rho fixed:
    X = tr_labels[m (I (x) rho)] / tr(rho^2).
    """
    rest = [lab for lab in space.labels if lab not in labels]
    if tuple(space.labels[len(rest):]) != tuple(labels):
        raise DimensionError(f"labels {labels} must be the trailing factors of {space.labels}")
    d_rest = int(np.prod([space.dim_of(lab) for lab in rest]))
    weight = kron(np.eye(d_rest), rho)
    num, _ = partial_trace(m @ weight, space, labels)
    denom = float(np.trace(rho @ rho).real)
    return num / denom


def reduce(
    t: ProcessTensor,
    rho0: DensityMatrix | None = None,
    tolerance: float = 1e-8,
) -> ReducedProcessTensor:
    """Extract the reduced tensor T~ with T = T~ (x) rho0 for factorized inputs.

    rho0 defaults to the state carried by the tensor itself (trace over all
    factors but S0, divided by d_sys^2). Raises FactorizationError when the
    reconstruction T~ (x) rho0 misses T by more than ``tolerance`` in trace
    distance (correlated initial state).
    """
    if t.steps != 2:
        raise DimensionError("reduce expects a two-step tensor")
    if rho0 is None:
        r, _ = trace_all_but(t.mat, t.space, {"S0"})
        rho0 = density(r / t.d_sys**2, "S")
    reduced = factor_against(t.mat, t.space, rho0.mat, ("S0",))
    residual = 0.5 * trace_norm(t.mat - kron(reduced, rho0.mat))
    if residual > tolerance:
        raise FactorizationError(
            f"factorization residual {residual:.3e} exceeds {tolerance} "
            "(initial system-environment state is correlated)"
        )
    space = t.space.subspace([lab for lab in t.space.labels if lab != "S0"])
    return ReducedProcessTensor(reduced, space, rho0, t.d_sys, residual)


def derive_lnm(
    t: ProcessTensor,
) -> tuple[
    tuple[np.ndarray, LabeledSpace],
    tuple[np.ndarray, LabeledSpace],
    tuple[np.ndarray, LabeledSpace],
]:
    """The auxiliary matrices (L, N, M) of a two-step tensor.

    L = tr_{S1}(T) on (S2, S1', S0', S0); M = tr_{S2 S1'}(T)/d_sys on
    (S1, S0', S0); N = tr_{S1}(M) on (S0', S0).
    """
    if t.steps != 2:
        raise DimensionError("derive_lnm expects a two-step tensor")
    l_mat, l_space = partial_trace(t.mat, t.space, {"S1"})
    m_mat, m_space = partial_trace(t.mat, t.space, {"S2", "S1'"})
    m_mat = m_mat / t.d_sys
    n_mat, n_space = partial_trace(m_mat, m_space, {"S1"})
    return (l_mat, l_space), (n_mat, n_space), (m_mat, m_space)


def one_step_from_two(t: ProcessTensor) -> ProcessTensor:
    """The contained one-step tensor M = tr_{S2 S1'}(T)/d_sys."""
    (_, _), (_, _), (m_mat, m_space) = derive_lnm(t)
    return ProcessTensor(m_mat, m_space, t.d_sys)


def simulate_two_step(
    u1: np.ndarray,
    u0: np.ndarray,
    rho_se: DensityMatrix,
    a1: QuantumMap,
    a0: QuantumMap,
    d_sys: int,
    d_env: int,
) -> np.ndarray:
    """Step-by-step simulation tr_E U1 A1 U0 A0 [rho_se]; reference route."""
    state = rho_se.mat
    state = _apply_on_system(a0, state, d_sys, d_env)
    state = u0 @ state @ u0.conj().T
    state = _apply_on_system(a1, state, d_sys, d_env)
    state = u1 @ state @ u1.conj().T
    sp = LabeledSpace.of(("S", d_sys), ("E", d_env))
    out, _ = partial_trace(state, sp, {"E"})
    return out


def _apply_on_system(a: QuantumMap, joint: np.ndarray, d_sys: int, d_env: int) -> np.ndarray:
    c = a.choi.reshape(d_sys, d_sys, d_sys, d_sys)
    j = joint.reshape(d_sys, d_env, d_sys, d_env)
    return np.einsum("acbd,cedf->aebf", c, j).reshape(d_sys * d_env, d_sys * d_env)


def tensor_trace_invariant(t: ProcessTensor) -> float:
    """Deviation of tr(T) from its exact value d_sys (one step) or d_sys^2."""
    expected = float(t.d_sys**t.steps)
    return abs(t.trace - expected)


def tensor_min_eig(t: ProcessTensor) -> float:
    return float(np.linalg.eigvalsh(t.mat)[0])


def kron_with_state(tr: ReducedProcessTensor) -> ProcessTensor:
    """Reassemble the full tensor T~ (x) rho0."""
    full = kron(tr.mat, tr.rho0.mat)
    space = LabeledSpace.of(*(tuple(tr.space.factors) + (("S0", tr.rho0.dim),)))
    return ProcessTensor(full, space, tr.d_sys)


__all__ = [
    "FactorizationError",
    "ProcessTensor",
    "ReducedProcessTensor",
    "TWO_STEP_LABELS",
    "ONE_STEP_LABELS",
    "build_one_step",
    "build_two_step",
    "apply",
    "reduce",
    "derive_lnm",
    "one_step_from_two",
    "simulate_two_step",
    "factor_against",
    "kron_with_state",
    "tensor_trace_invariant",
    "tensor_min_eig",
]
