"""Distance measures by alternating convex minimization.

Three drivers share the same machinery: the non-Markovianity distance
(blocks over rho, T0, T1 of the product form), the backflow distance
(blocks over the T' and rho parameters of the traced-tensor constraint),
and the solely-correlation distance (constrained re-minimization between
the two argmin sets). Nonsmooth convex blocks are solved by projected
subgradient; constraint intersections by Dykstra alternating projections.
A seeded random-search oracle provides an independent upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import (
    LabeledSpace,
    embed_with_identity,
    hermitize,
    kron,
    partial_trace,
    project_psd,
    trace_all_but,
    trace_norm,
)
from .process_tensor import ProcessTensor, ReducedProcessTensor, factor_against
from .quantum import random_density, random_tpcp

__all__ = [
    "OptimizerConfig",
    "MeasureResult",
    "OptimError",
    "project_density",
    "project_tpcp",
    "minimize_dnm",
    "minimize_dnm_factorized",
    "minimize_dibtres",
    "minimize_dibtres_factorized",
    "minimize_solely_sece",
    "integrated_nm",
    "oracle_random_search",
]


class OptimError(RuntimeError):
    """Solver failure; carries the last feasibility residual when known."""

    def __init__(self, message: str, feas_residual: float | None = None):
        super().__init__(message)
        self.feas_residual = feas_residual


@dataclass(frozen=True)
class OptimizerConfig:
    tol_obj: float = 1e-6
    tol_feas: float = 1e-8
    max_outer_iters: int = 200
    max_inner_iters: int = 2000
    restarts: int = 8
    step_c: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.tol_obj <= 0 or self.tol_feas <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class MeasureResult:
    measure: str
    value: float
    argmin: dict
    restart_index: int
    iters: int
    feas_residual: float

    def to_record(self) -> dict:
        return {
            "measure": self.measure,
            "value": self.value,
            "restart_index": self.restart_index,
            "iters": self.iters,
            "feas_residual": self.feas_residual,
        }


# ---------------------------------------------------------------- projections


def _simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    cond = u - css / k > 0
    rho = np.nonzero(cond)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_density(m: np.ndarray) -> np.ndarray:
    """Frobenius-nearest unit-trace PSD matrix (eigenvalue simplex projection)."""
    h = hermitize(np.asarray(m, dtype=complex))
    vals, vecs = np.linalg.eigh(h)
    w = _simplex_project(vals)
    w = w / w.sum()  # exact unit trace despite rounding
    return hermitize((vecs * w) @ vecs.conj().T)


def _tp_affine_project(x: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    """Nearest X with tr_out X = I_in: X + (1/dim_out) I_out (x) (I_in - tr_out X)."""
    c = x.reshape(dim_out, dim_in, dim_out, dim_in)
    marg = np.einsum("aiaj->ij", c)
    return x + kron(np.eye(dim_out), (np.eye(dim_in) - marg) / dim_out)


def project_tpcp(
    choi: np.ndarray,
    dim_in: int,
    dim_out: int,
    tol: float = 1e-10,
    max_iters: int = 2000,
) -> np.ndarray:
    """Frobenius-nearest Choi matrix of a TPCP map (Dykstra: PSD <-> affine TP)."""
    x = hermitize(np.asarray(choi, dtype=complex))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iters):
        y = project_psd(x + p)
        p = x + p - y
        x_new = _tp_affine_project(y + q, dim_in, dim_out)
        q = y + q - x_new
        if np.linalg.norm(x_new - x) <= tol:
            x = x_new
            break
        x = x_new
    else:
        from .quantum import tp_residual

        raise OptimError(
            "project_tpcp did not converge",
            feas_residual=float(tp_residual(x, dim_in, dim_out)),
        )
    return hermitize(x)


def dykstra(
    x0: np.ndarray,
    projections: Sequence[Callable[[np.ndarray], np.ndarray]],
    tol: float = 1e-10,
    max_cycles: int = 500,
) -> np.ndarray:
    """Dykstra alternating projections onto the intersection of convex sets."""
    x = np.asarray(x0, dtype=complex)
    increments = [np.zeros_like(x) for _ in projections]
    for _ in range(max_cycles):
        x_prev = x
        for i, proj in enumerate(projections):
            y = proj(x + increments[i])
            increments[i] = x + increments[i] - y
            x = y
        if np.linalg.norm(x - x_prev) <= tol:
            break
    return x


def feasibility_residual(
    x: np.ndarray, projections: Sequence[Callable[[np.ndarray], np.ndarray]]
) -> float:
    return max(float(np.linalg.norm(proj(x) - x)) for proj in projections)


# ------------------------------------------------------- subgradient machinery


def _value_and_sign(delta: np.ndarray) -> tuple[float, np.ndarray]:
    """(1/2)||delta||_1 and the trace-norm subgradient V sign(L) V†."""
    vals, vecs = np.linalg.eigh(hermitize(delta))
    value = 0.5 * float(np.abs(vals).sum())
    sign = (vecs * np.sign(vals)) @ vecs.conj().T
    return value, sign


def _patience(cfg: OptimizerConfig) -> int:
    return max(20, min(60, cfg.max_inner_iters // 40))


def _block_subgradient(
    target: np.ndarray,
    var0: np.ndarray,
    assemble: Callable[[np.ndarray], np.ndarray],
    slot_grad: Callable[[np.ndarray], np.ndarray],
    project: Callable[[np.ndarray], np.ndarray],
    step0: float,
    cfg: OptimizerConfig,
) -> tuple[float, np.ndarray, int]:
    """Minimize (1/2)||target - assemble(var)||_1 over one convex block.

    Projected subgradient with step step0/sqrt(k) along the normalized
    direction; returns the best visited point.
    """
    var = project(var0)
    f, sign = _value_and_sign(target - assemble(var))
    best_f, best_var = f, var
    stall = 0
    patience = _patience(cfg)
    k = 0
    for k in range(1, cfg.max_inner_iters + 1):
        grad = hermitize(-0.5 * slot_grad(sign))
        norm = np.linalg.norm(grad)
        if norm < 1e-15:
            break
        step = step0 / np.sqrt(k)
        var = project(var - (step / norm) * grad)
        f, sign = _value_and_sign(target - assemble(var))
        if f < best_f - 1e-15:
            best_f, best_var = f, var
            stall = 0
        else:
            stall += 1
        if stall >= patience:
            break
    return best_f, best_var, k


def _constrained_subgradient(
    target: np.ndarray,
    x0: np.ndarray,
    projections: Sequence[Callable[[np.ndarray], np.ndarray]],
    step0: float,
    cfg: OptimizerConfig,
    dykstra_tol: float = 1e-9,
) -> tuple[float, np.ndarray, int]:
    """Minimize (1/2)||target - X||_1 over X in an intersection of convex sets."""
    x = dykstra(x0, projections, tol=dykstra_tol)
    f, sign = _value_and_sign(target - x)
    best_f, best_x = f, x
    stall = 0
    patience = _patience(cfg)
    k = 0
    for k in range(1, cfg.max_inner_iters + 1):
        step = step0 / np.sqrt(k)
        norm = np.linalg.norm(sign)
        if norm < 1e-15:
            break
        x = dykstra(x + (0.5 * step / norm) * sign, projections, tol=dykstra_tol)
        f, sign = _value_and_sign(target - x)
        if f < best_f - 1e-15:
            best_f, best_x = f, x
            stall = 0
        else:
            stall += 1
        if stall >= patience:
            break
    return best_f, best_x, k


def _restart_rng(seed: int, stream: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=[seed, stream, restart]))


# ----------------------------------------------------------------------- D_NM


def _markov_extraction(t_mat: np.ndarray, space: LabeledSpace, d: int):
    """Deterministic product-form candidates from partial traces of T."""
    rho, _ = trace_all_but(t_mat, space, {"S0"})
    rho = project_density(rho / d**2)
    t1_raw, _ = trace_all_but(t_mat, space, {"S2", "S1'"})
    t1 = project_tpcp(t1_raw / d, d, d)
    rest, _ = partial_trace(t_mat, space, {"S2", "S1'"})
    rest_space = space.subspace(["S1", "S0'", "S0"])
    t0_rho = rest / d
    t0_raw = factor_against(t0_rho, rest_space, rho, ("S0",))
    t0 = project_tpcp(t0_raw, d, d)
    return t1, t0, rho


def _dnm_restarts(t: ProcessTensor, cfg: OptimizerConfig) -> list[dict]:
    d = t.d_sys
    target = t.mat
    space = t.space
    step0 = cfg.step_c * trace_norm(target)
    eye1 = np.eye(d**2)
    t1_c, t0_c, rho_c = _markov_extraction(target, space, d)

    runs = []
    for r in range(cfg.restarts):
        if r == 0:
            t1, t0 = t1_c, t0_c
        else:
            rng = _restart_rng(cfg.seed, 0, r)
            t1 = random_tpcp(d, d, rng).choi
            t0 = random_tpcp(d, d, rng).choi
        rho = rho_c
        f_prev = np.inf
        f = np.inf
        iters = 0
        converged = False
        for outer in range(1, cfg.max_outer_iters + 1):
            f, rho, k1 = _block_subgradient(
                target,
                rho,
                lambda v, a=t1, b=t0: kron(a, b, v),
                lambda s, a=t1, b=t0: trace_all_but(
                    s @ kron(a, b, np.eye(d)), space, {"S0"}
                )[0],
                project_density,
                step0,
                cfg,
            )
            f, t0, k2 = _block_subgradient(
                target,
                t0,
                lambda v, a=t1, w=rho: kron(a, v, w),
                lambda s, a=t1, w=rho: trace_all_but(
                    s @ kron(a, eye1, w), space, {"S1", "S0'"}
                )[0],
                lambda v: project_tpcp(v, d, d),
                step0,
                cfg,
            )
            f, t1, k3 = _block_subgradient(
                target,
                t1,
                lambda v, b=t0, w=rho: kron(v, b, w),
                lambda s, b=t0, w=rho: trace_all_but(
                    s @ kron(eye1, b, w), space, {"S2", "S1'"}
                )[0],
                lambda v: project_tpcp(v, d, d),
                step0,
                cfg,
            )
            iters += k1 + k2 + k3
            if f_prev - f < cfg.tol_obj:
                converged = True
                break
            f_prev = f
        closest = kron(t1, t0, rho)
        value = 0.5 * trace_norm(target - closest)
        runs.append(
            {
                "value": value,
                "restart": r,
                "t1": t1,
                "t0": t0,
                "rho": rho,
                "tensor": closest,
                "iters": iters,
                "outer": outer,
                "converged": converged,
            }
        )
    return runs


def _pick_best(runs: list[dict], measure: str, feas: float) -> MeasureResult:
    ok = [run for run in runs if run["converged"] and np.isfinite(run["value"])]
    if not ok:
        raise OptimError(f"all {len(runs)} restarts failed for {measure}")
    best = min(ok, key=lambda run: (run["value"], run["restart"]))
    argmin = {
        k: v for k, v in best.items() if k not in {"value", "restart", "iters", "outer", "converged"}
    }
    return MeasureResult(
        measure=measure,
        value=float(best["value"]),
        argmin=argmin,
        restart_index=int(best["restart"]),
        iters=int(best["iters"]),
        feas_residual=float(feas),
    )


def minimize_dnm(t: ProcessTensor, cfg: OptimizerConfig = OptimizerConfig()) -> MeasureResult:
    """Minimum trace distance from T to the Markov product set.

    Alternates the three convex blocks (state, first-step map, second-step
    map) from several starts; restart 0 uses the partial-trace extraction
    candidates, the others random trial maps.
    """
    if t.steps != 2:
        raise ValueError("minimize_dnm expects a two-step tensor")
    runs = _dnm_restarts(t, cfg)
    return _pick_best(runs, "d_nm", 0.0)


def minimize_dnm_factorized(
    tr: ReducedProcessTensor, cfg: OptimizerConfig = OptimizerConfig()
) -> MeasureResult:
    """D_NM with the initial state pinned to rho0: two blocks on the reduced tensor."""
    d = tr.d_sys
    target = tr.mat
    space = tr.space
    step0 = cfg.step_c * trace_norm(target)
    eye1 = np.eye(d**2)

    t1_raw, _ = trace_all_but(target, space, {"S2", "S1'"})
    t1_c = project_tpcp(t1_raw / d, d, d)
    t0_raw, _ = trace_all_but(target, space, {"S1", "S0'"})
    t0_c = project_tpcp(t0_raw / d, d, d)

    runs = []
    for r in range(cfg.restarts):
        if r == 0:
            t1, t0 = t1_c, t0_c
        else:
            rng = _restart_rng(cfg.seed, 1, r)
            t1 = random_tpcp(d, d, rng).choi
            t0 = random_tpcp(d, d, rng).choi
        f_prev = np.inf
        iters = 0
        converged = False
        for outer in range(1, cfg.max_outer_iters + 1):
            f, t0, k2 = _block_subgradient(
                target,
                t0,
                lambda v, a=t1: kron(a, v),
                lambda s, a=t1: partial_trace(s @ kron(a, eye1), space, {"S2", "S1'"})[0],
                lambda v: project_tpcp(v, d, d),
                step0,
                cfg,
            )
            f, t1, k3 = _block_subgradient(
                target,
                t1,
                lambda v, b=t0: kron(v, b),
                lambda s, b=t0: partial_trace(s @ kron(eye1, b), space, {"S1", "S0'"})[0],
                lambda v: project_tpcp(v, d, d),
                step0,
                cfg,
            )
            iters += k2 + k3
            if f_prev - f < cfg.tol_obj:
                converged = True
                break
            f_prev = f
        closest = kron(t1, t0)
        value = 0.5 * trace_norm(target - closest)
        runs.append(
            {
                "value": value,
                "restart": r,
                "t1": t1,
                "t0": t0,
                "rho": tr.rho0.mat,
                "tensor": closest,
                "iters": iters,
                "outer": outer,
                "converged": converged,
            }
        )
    return _pick_best(runs, "d_nm_factorized", 0.0)


# ------------------------------------------------------------------- D_IBTRES


def _five_factor_space(d: int) -> LabeledSpace:
    return LabeledSpace.of(("S2", d), ("S1'", d), ("S1", d), ("S0'", d), ("S0", d))


def _comb_projection(space: LabeledSpace, d: int):
    """Nearest X with tr_{S2} X = I_{S1'} (x) Y for some Y (causality of step 2)."""
    rest = space.subspace([lab for lab in space.labels if lab != "S2"])

    def proj(x: np.ndarray) -> np.ndarray:
        marg, _ = partial_trace(x, space, {"S2"})
        inner, _ = partial_trace(marg, rest, {"S1'"})
        defect = marg - kron(np.eye(d), inner / d)
        return x - kron(np.eye(d), defect) / d

    return proj


def _traced_constraint_projection(
    space: LabeledSpace,
    d: int,
    k_project: Callable[[np.ndarray], np.ndarray],
):
    """Nearest X with tr_{S1} X in the convex set K.

    k_project is the Frobenius projection onto K on the traced space;
    the correction re-embeds with an identity on the S1 slot.
    """
    traced_space = space.subspace([lab for lab in space.labels if lab != "S1"])

    def proj(x: np.ndarray) -> np.ndarray:
        marg, _ = partial_trace(x, space, {"S1"})
        target = k_project(marg)
        return x + embed_with_identity(target - marg, traced_space, space) / d

    return proj


def _k_tpcp_product(d: int, rho: np.ndarray, traced_space: LabeledSpace):
    """Projection onto K = {T' (x) I (x) rho : T' TPCP} on (S2, S1', S0', S0)."""
    weight = kron(np.eye(d), rho)
    gram = d * float(np.trace(rho @ rho).real)

    def k_project(y: np.ndarray) -> np.ndarray:
        num, _ = partial_trace(y @ kron(np.eye(d**2), weight), traced_space, {"S0'", "S0"})
        t_prime = project_tpcp(hermitize(num / gram), d, d)
        return kron(t_prime, weight)

    return k_project


def _k_density_product(d: int, t_prime: np.ndarray, traced_space: LabeledSpace):
    """Projection onto K = {T' (x) I (x) rho : rho density} with T' fixed."""
    lead = kron(t_prime, np.eye(d))
    gram = float(np.trace(t_prime @ t_prime).real) * d

    def k_project(y: np.ndarray) -> np.ndarray:
        num, _ = partial_trace(y @ kron(lead, np.eye(d)), traced_space, {"S2", "S1'", "S0'"})
        rho = project_density(num / gram)
        return kron(lead, rho)

    return k_project


def _extract_t_prime(x: np.ndarray, space: LabeledSpace, d: int, rho: np.ndarray) -> np.ndarray:
    marg, traced_space = partial_trace(x, space, {"S1"})
    num, _ = partial_trace(
        marg @ kron(np.eye(d**2), kron(np.eye(d), rho)), traced_space, {"S0'", "S0"}
    )
    gram = d * float(np.trace(rho @ rho).real)
    return project_tpcp(hermitize(num / gram), d, d)


def _extract_rho_constraint(x: np.ndarray, space: LabeledSpace, d: int) -> np.ndarray:
    rho, _ = trace_all_but(x, space, {"S0"})
    return project_density(rho / d**2)


def _noib_sets(space, d, rho, extra=()):
    traced_space = space.subspace([lab for lab in space.labels if lab != "S1"])
    sets = [
        project_psd,
        _comb_projection(space, d),
        _traced_constraint_projection(space, d, _k_tpcp_product(d, rho, traced_space)),
    ]
    return sets + list(extra)


def _noib_sets_rho_free(space, d, t_prime, extra=()):
    traced_space = space.subspace([lab for lab in space.labels if lab != "S1"])
    sets = [
        project_psd,
        _comb_projection(space, d),
        _traced_constraint_projection(space, d, _k_density_product(d, t_prime, traced_space)),
    ]
    return sets + list(extra)


def _dibtres_restarts(
    t: ProcessTensor,
    cfg: OptimizerConfig,
    target: np.ndarray | None = None,
    extra_sets: tuple = (),
    x_init: np.ndarray | None = None,
    stream: int = 2,
) -> list[dict]:
    """Alternating (T' block, rho block) minimization of (1/2)||target - X||_1
    over the traced-tensor constraint set; target defaults to T itself."""
    d = t.d_sys
    space = t.space
    if target is None:
        target = t.mat
    step0 = cfg.step_c * trace_norm(target)
    rho_c = _extract_rho_constraint(t.mat, space, d)

    runs = []
    for r in range(cfg.restarts):
        if r == 0:
            rho = rho_c
            x = t.mat if x_init is None else x_init
        else:
            rng = _restart_rng(cfg.seed, stream, r)
            rho = random_density(d, rng).mat
            x = kron(random_tpcp(d, d, rng).choi, random_tpcp(d, d, rng).choi, rho)
            if x_init is not None:
                x = 0.5 * (x + x_init)
        f_prev = np.inf
        iters = 0
        converged = False
        for outer in range(1, cfg.max_outer_iters + 1):
            sets = _noib_sets(space, d, rho, extra_sets)
            f, x, k1 = _constrained_subgradient(target, x, sets, step0, cfg)
            t_prime = _extract_t_prime(x, space, d, rho)
            sets = _noib_sets_rho_free(space, d, t_prime, extra_sets)
            f, x, k2 = _constrained_subgradient(target, x, sets, step0, cfg)
            rho = _extract_rho_constraint(x, space, d)
            iters += k1 + k2
            if f_prev - f < cfg.tol_obj:
                converged = True
                break
            f_prev = f
        sets = _noib_sets(space, d, rho, extra_sets)
        x = dykstra(x, sets, tol=1e-12, max_cycles=2000)
        feas = feasibility_residual(x, sets)
        value = 0.5 * trace_norm(target - x)
        runs.append(
            {
                "value": value,
                "restart": r,
                "tensor": x,
                "t_prime": _extract_t_prime(x, space, d, rho),
                "rho": rho,
                "iters": iters,
                "outer": outer,
                "converged": converged and feas <= cfg.tol_feas,
                "feas": feas,
            }
        )
    return runs


def minimize_dibtres(t: ProcessTensor, cfg: OptimizerConfig = OptimizerConfig()) -> MeasureResult:
    """Minimum trace distance from T to the no-backflow set.

    The feasible set is PSD + the two-step causality conditions + the
    affine traced-tensor constraint tr_{S1} X = T' (x) I (x) rho; the two
    convex blocks alternate over T' (rho fixed) and rho (T' fixed).
    """
    if t.steps != 2:
        raise ValueError("minimize_dibtres expects a two-step tensor")
    runs = _dibtres_restarts(t, cfg)
    best_feas = min(run["feas"] for run in runs)
    return _pick_best(runs, "d_ibtres", best_feas)


def minimize_dibtres_factorized(
    tr: ReducedProcessTensor, cfg: OptimizerConfig = OptimizerConfig()
) -> MeasureResult:
    """Backflow distance for a reduced tensor: a single convex problem.

    Minimizes (1/2)||T~ - X~||_1 over PSD X~ with the reduced causality
    condition and tr_{S1} X~ = T' (x) I; the value equals the unreduced
    objective because the trace norm factors over (x) rho0.
    """
    d = tr.d_sys
    space = tr.space
    target = tr.mat
    step0 = cfg.step_c * trace_norm(target)
    traced_space = space.subspace([lab for lab in space.labels if lab != "S1"])
    gram = d  # ||I_{S0'}||_F^2

    def k_project(y: np.ndarray) -> np.ndarray:
        num, _ = partial_trace(y @ kron(np.eye(d**2), np.eye(d)), traced_space, {"S0'"})
        t_prime = project_tpcp(hermitize(num / gram), d, d)
        return kron(t_prime, np.eye(d))

    sets = [
        project_psd,
        _comb_projection(space, d),
        _traced_constraint_projection(space, d, k_project),
    ]

    runs = []
    for r in range(cfg.restarts):
        if r == 0:
            x = target
        else:
            rng = _restart_rng(cfg.seed, 3, r)
            x = kron(random_tpcp(d, d, rng).choi, random_tpcp(d, d, rng).choi)
        f, x, iters = _constrained_subgradient(target, x, sets, step0, cfg)
        x = dykstra(x, sets, tol=1e-12, max_cycles=2000)
        feas = feasibility_residual(x, sets)
        marg, _ = partial_trace(x, space, {"S1"})
        t_prime_raw, _ = partial_trace(marg, traced_space, {"S0'"})
        runs.append(
            {
                "value": 0.5 * trace_norm(target - x),
                "restart": r,
                "tensor": x,
                "t_prime": project_tpcp(t_prime_raw / d, d, d),
                "rho": tr.rho0.mat,
                "iters": iters,
                "outer": 1,
                "converged": feas <= cfg.tol_feas,
                "feas": feas,
            }
        )
    best_feas = min(run["feas"] for run in runs)
    return _pick_best(runs, "d_ibtres_factorized", best_feas)


# -------------------------------------------------------------- solely SECE


def _l1_ball_project(v: np.ndarray, radius: float) -> np.ndarray:
    if np.abs(v).sum() <= radius:
        return v
    mags = _simplex_project(np.abs(v) / radius) * radius
    return np.sign(v) * mags


def _trace_norm_ball_projection(center: np.ndarray, radius: float):
    """Nearest X with ||X - center||_1 <= radius (eigenvalue l1-ball projection)."""

    def proj(x: np.ndarray) -> np.ndarray:
        delta = hermitize(x - center)
        vals, vecs = np.linalg.eigh(delta)
        if np.abs(vals).sum() <= radius:
            return x
        w = _l1_ball_project(vals, radius)
        return center + hermitize((vecs * w) @ vecs.conj().T)

    return proj


def minimize_solely_sece(
    t: ProcessTensor, cfg: OptimizerConfig = OptimizerConfig()
) -> MeasureResult:
    """Distance between the closest Markov tensors and the no-backflow set.

    Step 1 collects all Markov argmins within tol_obj of the best restart;
    step 2 solves the backflow distance; step 3 re-minimizes the distance
    to each retained Markov tensor over the no-backflow set intersected
    with the relaxed ball ||T - X||_1/2 <= D_IBTRES + tol_feas; step 4
    returns the smallest value found.
    """
    if t.steps != 2:
        raise ValueError("minimize_solely_sece expects a two-step tensor")
    nm_runs = [run for run in _dnm_restarts(t, cfg) if run["converged"]]
    if not nm_runs:
        raise OptimError("all restarts failed for the Markov step")
    best_nm = min(run["value"] for run in nm_runs)
    retained = [run for run in nm_runs if run["value"] <= best_nm + cfg.tol_obj]

    ib = minimize_dibtres(t, cfg)
    ball = _trace_norm_ball_projection(t.mat, 2.0 * (ib.value + cfg.tol_feas))

    light = OptimizerConfig(
        tol_obj=cfg.tol_obj,
        tol_feas=cfg.tol_feas,
        max_outer_iters=cfg.max_outer_iters,
        max_inner_iters=cfg.max_inner_iters,
        restarts=1,
        step_c=cfg.step_c,
        seed=cfg.seed,
    )
    best = None
    total_iters = ib.iters
    for run in retained:
        t_m = run["tensor"]
        sub = _dibtres_restarts(
            t,
            light,
            target=t_m,
            extra_sets=(ball,),
            x_init=ib.argmin["tensor"],
            stream=4,
        )
        cand = min(sub, key=lambda s: s["value"])
        total_iters += cand["iters"]
        if best is None or cand["value"] < best["value"] - 1e-15:
            best = dict(cand)
            best["markov_tensor"] = t_m
            best["markov_value"] = run["value"]
    if best is None or not np.isfinite(best["value"]):
        raise OptimError("solely-SECE constrained step failed")
    argmin = {
        "tensor": best["tensor"],
        "markov_tensor": best["markov_tensor"],
        "t_prime": best["t_prime"],
        "rho": best["rho"],
    }
    return MeasureResult(
        measure="d_solely_sece",
        value=float(best["value"]),
        argmin=argmin,
        restart_index=int(best["restart"]),
        iters=int(total_iters),
        feas_residual=float(best["feas"]),
    )


# ------------------------------------------------------------------ integral


def integrated_nm(
    family: Callable[[float], ProcessTensor],
    t1_grid: Sequence[float],
    cfg: OptimizerConfig = OptimizerConfig(),
    measure: Callable[[ProcessTensor, OptimizerConfig], MeasureResult] = minimize_dnm,
) -> float:
    """Trapezoidal quadrature of D_NM(t2, t1, 0) over the middle-time grid."""
    grid = np.asarray(list(t1_grid), dtype=float)
    if grid.size < 2:
        raise ValueError("grid needs at least 2 points")
    values = [measure(family(float(t1)), cfg).value for t1 in grid]
    return float(np.trapz(values, grid))


# -------------------------------------------------------------------- oracle


def _perturb_tpcp(choi: np.ndarray, d: int, sigma: float, rng) -> np.ndarray:
    g = rng.standard_normal(choi.shape) + 1j * rng.standard_normal(choi.shape)
    return project_tpcp(choi + sigma * hermitize(g), d, d, tol=1e-9)


def _perturb_density(rho: np.ndarray, sigma: float, rng) -> np.ndarray:
    g = rng.standard_normal(rho.shape) + 1j * rng.standard_normal(rho.shape)
    return project_density(rho + sigma * hermitize(g))


def oracle_random_search(
    t: ProcessTensor,
    feasible_set: str,
    n_samples: int,
    seed: int,
) -> float:
    """Brute-force random-search upper bound on a distance measure.

    Draws seeded feasible members of the requested set ("markov" or
    "no_ibtres") -- blind draws plus shrinking random perturbations of the
    best member found so far -- and returns the smallest trace distance to
    T. Deterministic per seed, and non-increasing in n_samples because the
    sample stream is a fixed sequence.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if feasible_set not in {"markov", "no_ibtres"}:
        raise ValueError(f"unknown feasible set {feasible_set!r}")
    d = t.d_sys
    target = t.mat
    space = t.space
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 17]))

    if feasible_set == "markov":
        t1, t0, rho = _markov_extraction(target, space, d)
        best = 0.5 * trace_norm(target - kron(t1, t0, rho))
        best_factors = (t1, t0, rho)
        sigma = 0.5
        since_improve = 0
        for k in range(1, n_samples):
            if k % 4 == 1:
                cand = (
                    random_tpcp(d, d, rng).choi,
                    random_tpcp(d, d, rng).choi,
                    random_density(d, rng).mat,
                )
            else:
                b1, b0, br = best_factors
                cand = (
                    _perturb_tpcp(b1, d, sigma, rng),
                    _perturb_tpcp(b0, d, sigma, rng),
                    _perturb_density(br, sigma, rng),
                )
            value = 0.5 * trace_norm(target - kron(*cand))
            if value < best:
                best, best_factors = value, cand
                since_improve = 0
            else:
                since_improve += 1
            if since_improve >= 40:
                sigma = max(1e-5, sigma * 0.7)
                since_improve = 0
        return float(best)

    # no-backflow set: random members via constraint projection
    rho_c = _extract_rho_constraint(target, space, d)
    sets = _noib_sets(space, d, rho_c)
    x = dykstra(target, sets, tol=1e-9)
    best = 0.5 * trace_norm(target - x)
    best_x, best_rho = x, rho_c
    sigma = 0.4
    since_improve = 0
    dim = target.shape[0]
    for k in range(1, n_samples):
        if k % 8 == 1:
            rho = random_density(d, rng).mat
            cand = kron(random_tpcp(d, d, rng).choi, random_tpcp(d, d, rng).choi, rho)
        else:
            rho = best_rho if k % 3 else _perturb_density(best_rho, 0.3 * sigma, rng)
            g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            pull = rng.uniform(0.0, 1.0)
            start = best_x + pull * sigma * (target - best_x) + sigma * hermitize(g) / dim
            cand = dykstra(start, _noib_sets(space, d, rho), tol=1e-8, max_cycles=120)
        value = 0.5 * trace_norm(target - cand)
        if value < best:
            best, best_x, best_rho = value, cand, rho
            since_improve = 0
        else:
            since_improve += 1
        if since_improve >= 60:
            sigma = max(1e-4, sigma * 0.7)
            since_improve = 0
    return float(best)
