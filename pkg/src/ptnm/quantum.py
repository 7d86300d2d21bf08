"""Quantum states and maps in Choi form.

A map A from a dim_in space to a dim_out space is stored as its Choi
matrix on the (out, in) factor ordering,

    A = sum_{i0 j0 i1 j1} A^{i0 j0}_{i1 j1} |i1>_out<j1| (x) |i0>_in<j0|,

so the output factor sits left of the input factor. Trace preservation
reads tr_out(choi) = I_in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_TOL_HERM,
    DimensionError,
    LabeledSpace,
    hermitize,
    kron,
    min_eig,
    partial_trace,
    require_hermitian,
    trace_norm,
)

DEFAULT_TOL_TP = 1e-9


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD state; unit trace unless flagged subnormalized."""

    mat: np.ndarray
    space: LabeledSpace
    subnormalized: bool = False

    def __post_init__(self):
        m = require_hermitian(self.mat, what="density matrix")
        object.__setattr__(self, "mat", m)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionError(f"state shape {m.shape} vs space dim {self.space.dim}")
        if min_eig(m) < -1e-10:
            raise ValueError(f"state not PSD: min eigenvalue {min_eig(m):.3e}")
        tr = float(np.trace(m).real)
        if not self.subnormalized and abs(tr - 1.0) > 1e-9:
            raise ValueError(f"state trace {tr} != 1 (flag subnormalized to allow)")

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)


def density(mat: np.ndarray, label: str = "S", *, subnormalized: bool = False) -> DensityMatrix:
    """Single-factor density matrix with the given label."""
    mat = np.asarray(mat, dtype=complex)
    return DensityMatrix(mat, LabeledSpace.of((label, mat.shape[0])), subnormalized)


@dataclass(frozen=True)
class QuantumMap:
    """Map between operator spaces stored as a Choi matrix (out (x) in)."""

    choi: np.ndarray
    dim_in: int
    dim_out: int
    space: LabeledSpace = field(init=False)

    def __post_init__(self):
        c = require_hermitian(self.choi, what="Choi matrix")
        object.__setattr__(self, "choi", c)
        d = self.dim_out * self.dim_in
        if c.shape != (d, d):
            raise DimensionError(
                f"Choi shape {c.shape} vs dim_out*dim_in = {self.dim_out}*{self.dim_in}"
            )
        object.__setattr__(
            self, "space", LabeledSpace.of(("out", self.dim_out), ("in", self.dim_in))
        )


def identity_map(dim: int) -> QuantumMap:
    """Choi of the identity map: the unnormalized maximally entangled projector."""
    e = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e[i * dim + i, j * dim + j] = 1.0
    return QuantumMap(e, dim, dim)


def entangled_projector(dim: int) -> np.ndarray:
    """E = sum_{ij} |ii><jj| on a dim*dim space (trace = dim)."""
    return identity_map(dim).choi


def choi_from_unitary_map(u: np.ndarray, tol: float = 1e-9) -> QuantumMap:
    """Choi matrix of X -> u X u†."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.shape != (d, d) or np.linalg.norm(u @ u.conj().T - np.eye(d)) > tol * d:
        raise ValueError("input is not unitary within tolerance")
    # vec(u) as a rank-1 Choi: entries C[(i1,i0),(j1,j0)] = u[i1,i0] conj(u[j1,j0])
    v = u.reshape(-1)
    return QuantumMap(np.outer(v, v.conj()), d, d)


def choi_from_kraus(kraus: list[np.ndarray]) -> QuantumMap:
    """Choi matrix of X -> sum_k K_k X K_k†."""
    k0 = np.asarray(kraus[0], dtype=complex)
    dim_out, dim_in = k0.shape
    c = np.zeros((dim_out * dim_in, dim_out * dim_in), dtype=complex)
    for k in kraus:
        v = np.asarray(k, dtype=complex).reshape(-1)
        c += np.outer(v, v.conj())
    return QuantumMap(c, dim_in, dim_out)


def apply_map(m: QuantumMap, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """Contract the Choi matrix with an input state; returns the raw output matrix."""
    r = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if r.shape != (m.dim_in, m.dim_in):
        raise DimensionError(f"input shape {r.shape} vs dim_in {m.dim_in}")
    c = m.choi.reshape(m.dim_out, m.dim_in, m.dim_out, m.dim_in)
    return np.einsum("acbd,cd->ab", c, r)


def compose(after: QuantumMap, before: QuantumMap) -> QuantumMap:
    """Choi matrix of after ∘ before."""
    if before.dim_out != after.dim_in:
        raise DimensionError(
            f"cannot compose: inner dims {before.dim_out} vs {after.dim_in}"
        )
    a = after.choi.reshape(after.dim_out, after.dim_in, after.dim_out, after.dim_in)
    b = before.choi.reshape(before.dim_out, before.dim_in, before.dim_out, before.dim_in)
    c = np.einsum("aebf,ecfd->acbd", a, b)
    d = after.dim_out * before.dim_in
    return QuantumMap(c.reshape(d, d), before.dim_in, after.dim_out)


def is_trace_preserving(m: QuantumMap, tol: float = DEFAULT_TOL_TP) -> tuple[bool, float]:
    """Check tr_out(choi) = I_in; residual is the trace norm of the deviation."""
    marg, _ = partial_trace(m.choi, m.space, {"out"})
    residual = trace_norm(marg - np.eye(m.dim_in))
    return residual <= tol, float(residual)


def tp_residual(choi: np.ndarray, dim_in: int, dim_out: int) -> float:
    """Trace norm of tr_out(choi) - I_in for a raw Choi matrix."""
    c = choi.reshape(dim_out, dim_in, dim_out, dim_in)
    marg = np.einsum("aiaj->ij", c)
    return trace_norm(marg - np.eye(dim_in))


def constant_map_choi(rho_const: DensityMatrix, dim_in: int) -> QuantumMap:
    """Choi of the map sending every unit-trace state to rho_const.

    The Choi is rho_const (x) I_{dim_in}; it is trace preserving and,
    applied to one half of a joint state, erases the correlation with the
    other half.
    """
    if abs(rho_const.trace - 1.0) > 1e-9:
        raise ValueError("rho_const must have unit trace")
    return QuantumMap(kron(rho_const.mat, np.eye(dim_in)), dim_in, rho_const.dim)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_density(dim: int, seed) -> DensityMatrix:
    """Hilbert-Schmidt random density matrix, deterministic per seed."""
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m = hermitize(m / np.trace(m).real)
    return density(m)


def random_pure_density(dim: int, seed) -> DensityMatrix:
    rng = _rng(seed)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return density(np.outer(psi, psi.conj()))


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar-random unitary (QR of a complex Ginibre matrix, phases fixed)."""
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_tpcp(dim_in: int, dim_out: int, seed) -> QuantumMap:
    """Random TPCP map from a Haar isometry on the dim_in*dim_out space.

    A Haar unitary on the (out (x) env) space with env dimension dim_in is
    restricted to an isometry V : in -> out (x) env; tracing out env gives
    an exactly trace-preserving completely positive map.
    """
    rng = _rng(seed)
    d_env = dim_in
    u = random_unitary(dim_out * d_env, rng)
    v = u[:, :dim_in]  # isometry columns
    # Kraus operators K_e = (I_out (x) <e|) V
    vt = v.reshape(dim_out, d_env, dim_in)
    kraus = [vt[:, e, :] for e in range(d_env)]
    return choi_from_kraus(kraus)


def random_correlated_state(dim_a: int, dim_b: int, seed, labels=("S", "E")) -> DensityMatrix:
    """Random full-rank correlated bipartite state (generically not a product)."""
    rng = _rng(seed)
    d = dim_a * dim_b
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    m = hermitize(m / np.trace(m).real)
    return DensityMatrix(m, LabeledSpace.of((labels[0], dim_a), (labels[1], dim_b)))
