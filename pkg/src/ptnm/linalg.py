"""Dense complex linear algebra with labeled-subsystem bookkeeping.

All matrices are complex numpy arrays in row-major order. Multipartite
operators live on a :class:`LabeledSpace`, an ordered list of
(label, dimension) factors; the leftmost factor is always the
latest-time subsystem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_TOL_HERM = 1e-9


class DimensionError(ValueError):
    """Shape or subsystem-dimension mismatch."""


@dataclass(frozen=True)
class LabeledSpace:
    """Ordered subsystem factors (label, dim) of a tensor-product space."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [lab for lab, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        if any(d < 1 for _, d in self.factors):
            raise ValueError("factor dimensions must be positive")

    @classmethod
    def of(cls, *factors: tuple[str, int]) -> "LabeledSpace":
        return cls(tuple((str(lab), int(d)) for lab, d in factors))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def dim_of(self, label: str) -> int:
        for lab, d in self.factors:
            if lab == label:
                return d
        raise KeyError(f"unknown label {label!r}; have {self.labels}")

    def axis(self, label: str) -> int:
        for k, (lab, _) in enumerate(self.factors):
            if lab == label:
                return k
        raise KeyError(f"unknown label {label!r}; have {self.labels}")

    def subspace(self, labels: Sequence[str]) -> "LabeledSpace":
        """Sub-space of the given labels, preserving this space's order."""
        keep = set(labels)
        unknown = keep - set(self.labels)
        if unknown:
            raise KeyError(f"unknown labels {sorted(unknown)}")
        return LabeledSpace(tuple(f for f in self.factors if f[0] in keep))


def check_square_on(m: np.ndarray, space: LabeledSpace) -> None:
    if m.shape != (space.dim, space.dim):
        raise DimensionError(
            f"matrix shape {m.shape} does not match space dim {space.dim}"
        )


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right."""
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m†)/2."""
    return (m + m.conj().T) / 2


def herm_residual(m: np.ndarray) -> float:
    """Relative deviation from Hermiticity, ||m - m†|| / max(1, ||m||)."""
    r = np.linalg.norm(m - m.conj().T)
    return float(r / max(1.0, np.linalg.norm(m)))


def require_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL_HERM, what: str = "matrix") -> np.ndarray:
    if herm_residual(m) > tol:
        raise ValueError(f"{what} is not Hermitian within tolerance {tol}")
    return hermitize(np.asarray(m, dtype=complex))


def _as_tensor(m: np.ndarray, space: LabeledSpace) -> np.ndarray:
    """View a (D, D) operator as a 2N-index tensor (kets then bras)."""
    dims = space.dims
    return np.asarray(m, dtype=complex).reshape(dims + dims)


def partial_trace(
    m: np.ndarray, space: LabeledSpace, traced_labels: Iterable[str]
) -> tuple[np.ndarray, LabeledSpace]:
    """Trace out the given factors; remaining factors keep their order.

    Returns the reduced matrix and the reduced space. Tracing every label
    yields a 1x1 matrix holding tr(m).
    """
    traced = set(traced_labels)
    unknown = traced - set(space.labels)
    if unknown:
        raise KeyError(f"unknown labels {sorted(unknown)}")
    check_square_on(m, space)
    if not traced:
        return np.asarray(m, dtype=complex).copy(), space

    n = len(space.factors)
    t = _as_tensor(m, space)
    # contract ket/bra axis pairs of traced factors
    keep_axes = []
    idx = list(range(2 * n))
    for k, (lab, _) in enumerate(space.factors):
        if lab in traced:
            idx[n + k] = idx[k]
        else:
            keep_axes.append(k)
    out_idx = [idx[k] for k in keep_axes] + [idx[n + k] for k in keep_axes]
    reduced = np.einsum(t, idx, out_idx)
    new_space = LabeledSpace(tuple(f for f in space.factors if f[0] not in traced))
    return reduced.reshape(new_space.dim, new_space.dim), new_space


def trace_all_but(m: np.ndarray, space: LabeledSpace, keep_labels: Iterable[str]) -> tuple[np.ndarray, LabeledSpace]:
    """Trace out everything except ``keep_labels``."""
    keep = set(keep_labels)
    return partial_trace(m, space, [lab for lab in space.labels if lab not in keep])


def permute_subsystems(
    m: np.ndarray, space: LabeledSpace, perm: Mapping[str, str]
) -> np.ndarray:
    """Re-index basis kets/bras by moving the content of factor a to factor perm[a].

    ``perm`` must be a bijection on a subset of labels with matching
    dimensions; omitted labels stay in place. Applying a permutation and
    then its inverse returns the input exactly.
    """
    check_square_on(m, space)
    full = {lab: lab for lab in space.labels}
    for src, dst in perm.items():
        if src not in full or dst not in full:
            raise KeyError(f"unknown label in permutation {perm}")
        full[src] = dst
    if sorted(full.values()) != sorted(space.labels):
        raise ValueError(f"permutation {perm} is not a bijection")
    for src, dst in full.items():
        if space.dim_of(src) != space.dim_of(dst):
            raise DimensionError(f"cannot move {src} (dim {space.dim_of(src)}) to {dst} (dim {space.dim_of(dst)})")

    n = len(space.factors)
    # new tensor's axis at position of label dst reads the old axis of src
    src_of = {dst: src for src, dst in full.items()}
    order = [space.axis(src_of[lab]) for lab in space.labels]
    t = _as_tensor(m, space)
    t = np.transpose(t, order + [a + n for a in order])
    return t.reshape(space.dim, space.dim)


def swap_labels(m: np.ndarray, space: LabeledSpace, a: str, b: str) -> np.ndarray:
    """Exchange the basis-state indexes of factors a and b."""
    return permute_subsystems(m, space, {a: b, b: a})


def embed_with_identity(
    z: np.ndarray, z_space: LabeledSpace, full_space: LabeledSpace
) -> np.ndarray:
    """Embed z into full_space, placing identity factors on the extra labels.

    z's labels must appear in full_space (any positions, same dims); the
    result is the operator that acts as z on those factors and trivially
    elsewhere.
    """
    check_square_on(z, z_space)
    extra = [f for f in full_space.factors if f[0] not in z_space.labels]
    if set(z_space.labels) - set(full_space.labels):
        raise KeyError("z_space labels not contained in full_space")
    n = len(full_space.factors)
    ket = {lab: k for k, (lab, _) in enumerate(full_space.factors)}
    operands = [_as_tensor(z, z_space)]
    subscripts = [[ket[lab] for lab in z_space.labels] + [ket[lab] + n for lab in z_space.labels]]
    for lab, d in extra:
        operands.append(np.eye(d))
        subscripts.append([ket[lab], ket[lab] + n])
    out_idx = list(range(2 * n))
    args = []
    for op, idx in zip(operands, subscripts):
        args.extend([op, idx])
    args.append(out_idx)
    return np.einsum(*args).reshape(full_space.dim, full_space.dim)


def eig_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (real, descending) and eigenvector columns of a Hermitian matrix."""
    h = require_hermitian(m, tol)
    vals, vecs = np.linalg.eigh(h)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def trace_norm(m: np.ndarray) -> float:
    """||m||_1 for Hermitian m: sum of absolute eigenvalues."""
    return float(np.abs(np.linalg.eigvalsh(hermitize(m))).sum())


def trace_distance(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL_HERM) -> float:
    """(1/2)||a - b||_1 for Hermitian a, b of equal dimension."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    d = require_hermitian(a - b, tol, "difference")
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


def project_psd(m: np.ndarray, tol: float = DEFAULT_TOL_HERM) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (eigenvalues clipped at 0)."""
    h = require_hermitian(m, tol)
    vals, vecs = np.linalg.eigh(h)
    if vals[0] >= 0:
        return h
    clipped = np.maximum(vals, 0.0)
    return hermitize((vecs * clipped) @ vecs.conj().T)


def min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitize(m))[0])


def expm_i(h: np.ndarray, t: float, tol: float = DEFAULT_TOL_HERM) -> np.ndarray:
    """exp(-i h t) for Hermitian h, via eigendecomposition."""
    hh = require_hermitian(h, tol, "generator")
    vals, vecs = np.linalg.eigh(hh)
    phases = np.exp(-1j * vals * t)
    return (vecs * phases) @ vecs.conj().T
