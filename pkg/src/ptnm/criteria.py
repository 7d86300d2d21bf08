"""Residual evaluators for the process-tensor conditions.

Each evaluator returns a :class:`ConditionReport` whose residual is a
trace-norm violation (exactly zero, up to rounding, for members of the
corresponding set) together with the extracted witness factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    LabeledSpace,
    kron,
    min_eig,
    partial_trace,
    permute_subsystems,
    trace_all_but,
    trace_norm,
)
from .process_tensor import (
    FactorizationError,
    ProcessTensor,
    ReducedProcessTensor,
    apply,
    derive_lnm,
    factor_against,
    one_step_from_two,
)
from .quantum import (
    DensityMatrix,
    QuantumMap,
    compose,
    constant_map_choi,
    density,
    random_tpcp,
    tp_residual,
)

DEFAULT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    residual: float
    tolerance: float
    passed: bool
    witnesses: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {
            "condition": self.condition,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        extras = {
            k: v for k, v in self.witnesses.items() if isinstance(v, (int, float, bool))
        }
        if extras:
            rec["witnesses"] = extras
        return rec


def _report(condition, residual, tolerance, passed=None, **witnesses) -> ConditionReport:
    residual = float(residual)
    if passed is None:
        passed = residual <= tolerance
    return ConditionReport(condition, residual, float(tolerance), bool(passed), witnesses)


def factorization_residual(
    t: ProcessTensor, tolerance: float = DEFAULT_TOLERANCE
) -> ConditionReport:
    """How far T is from T~ (x) rho with rho the S0 marginal state."""
    if t.steps != 2:
        raise ValueError("factorization_residual expects a two-step tensor")
    rho_mat, _ = trace_all_but(t.mat, t.space, {"S0"})
    rho_mat = rho_mat / t.d_sys**2
    reduced = factor_against(t.mat, t.space, rho_mat, ("S0",))
    residual = 0.5 * trace_norm(t.mat - kron(reduced, rho_mat))
    return _report(
        "factorization",
        residual,
        tolerance,
        rho=rho_mat,
        reduced=reduced,
        rho_trace=float(np.trace(rho_mat).real),
    )


def _no_ibtres_from_l(
    l_mat: np.ndarray, l_space: LabeledSpace, d: int, condition: str, tolerance: float,
    with_rho: bool,
) -> ConditionReport:
    """Shared extraction for Corollary-1 style conditions.

    with_rho: L should equal T' (x) I (x) rho (full tensor); otherwise
    L~ should equal T' (x) I (reduced tensor).
    """
    if with_rho:
        tp_block, _ = partial_trace(l_mat, l_space, {"S0'", "S0"})
        t_prime = tp_block / d
        rho_mat, _ = trace_all_but(l_mat, l_space, {"S0"})
        rho_mat = rho_mat / d**2
        candidate = kron(t_prime, np.eye(d), rho_mat)
    else:
        tp_block, _ = partial_trace(l_mat, l_space, {"S0'"})
        t_prime = tp_block / d
        rho_mat = None
        candidate = kron(t_prime, np.eye(d))
    residual = 0.5 * trace_norm(l_mat - candidate)
    tp_res = tp_residual(t_prime, d, d)
    psd_res = max(0.0, -min_eig(t_prime))
    passed = residual <= tolerance and tp_res <= tolerance
    witnesses = {
        "t_prime": t_prime,
        "tp_residual": float(tp_res),
        "psd_residual": float(psd_res),
    }
    if rho_mat is not None:
        witnesses["rho"] = rho_mat
    return _report(condition, residual, tolerance, passed=passed, **witnesses)


def no_ibtres_residual(
    t: ProcessTensor, tolerance: float = DEFAULT_TOLERANCE
) -> ConditionReport:
    """Violation of tr_{S1}(T) = T' (x) I (x) rho with T' a TPCP Choi matrix."""
    if t.steps != 2:
        raise ValueError("no_ibtres_residual expects a two-step tensor")
    l_mat, l_space = partial_trace(t.mat, t.space, {"S1"})
    return _no_ibtres_from_l(l_mat, l_space, t.d_sys, "no_ibtres", tolerance, True)


def no_ibtres_residual_factorized(
    tr: ReducedProcessTensor, tolerance: float = DEFAULT_TOLERANCE
) -> ConditionReport:
    """Violation of tr_{S1}(T~) = T' (x) I for a reduced tensor."""
    l_mat, l_space = partial_trace(tr.mat, tr.space, {"S1"})
    return _no_ibtres_from_l(
        l_mat, l_space, tr.d_sys, "no_ibtres_factorized", tolerance, False
    )


def _seven_factor_space(d: int) -> LabeledSpace:
    return LabeledSpace.of(
        ("3", d), ("2'", d), ("2", d), ("1'", d), ("1", d), ("0'", d), ("0", d)
    )


def no_sece_residual(
    t: ProcessTensor, tolerance: float = DEFAULT_TOLERANCE
) -> ConditionReport:
    """Second-step correlation-effect condition on the seven-factor space.

    Compares (I + S_{3,0'} S_{2',0})(N (x) T) with
    S_{3,2} S_{2',1'} (I + S_{2,0'} S_{1',0})(L (x) M), where N and L/M fill
    the factors (3, 2') and (2, 1', 1, 0', 0) in their natural order.
    """
    if t.steps != 2:
        raise ValueError("no_sece_residual expects a two-step tensor")
    d = t.d_sys
    (l_mat, _), (n_mat, _), (m_mat, _) = derive_lnm(t)
    space = _seven_factor_space(d)

    nt = kron(n_mat, t.mat)
    lhs = nt + permute_subsystems(nt, space, {"3": "0'", "0'": "3", "2'": "0", "0": "2'"})

    lm = kron(l_mat, m_mat)
    lm = lm + permute_subsystems(lm, space, {"2": "0'", "0'": "2", "1'": "0", "0": "1'"})
    rhs = permute_subsystems(lm, space, {"3": "2", "2": "3", "2'": "1'", "1'": "2'"})

    residual = 0.5 * trace_norm(lhs - rhs)
    return _report("no_sece", residual, tolerance)


def no_sece_residual_factorized(
    tr: ReducedProcessTensor, tolerance: float = DEFAULT_TOLERANCE
) -> ConditionReport:
    """Correlation-effect condition for a reduced tensor on five factors.

    (I + S_{0',0})[T~ (x) I] versus (I + S_{0',0}) S_{1,0'} [L~ (x) M~];
    the symmetrizer (I + S_{0',0}) is non-invertible, so both sides are
    compared only after it is applied.
    """
    if tr.fact_residual is not None and tr.fact_residual > tolerance:
        raise FactorizationError(
            f"reduced tensor factorization residual {tr.fact_residual:.3e} exceeds {tolerance}"
        )
    d = tr.d_sys
    lt_mat, _ = partial_trace(tr.mat, tr.space, {"S1"})
    mt_mat, _ = partial_trace(tr.mat, tr.space, {"S2", "S1'"})
    mt_mat = mt_mat / d

    space = LabeledSpace.of(("2", d), ("1'", d), ("1", d), ("0'", d), ("0", d))
    ti = kron(tr.mat, np.eye(d))
    lhs = ti + permute_subsystems(ti, space, {"0'": "0", "0": "0'"})

    lm = permute_subsystems(kron(lt_mat, mt_mat), space, {"1": "0'", "0'": "1"})
    rhs = lm + permute_subsystems(lm, space, {"0'": "0", "0": "0'"})

    residual = 0.5 * trace_norm(lhs - rhs)
    return _report("no_sece_factorized", residual, tolerance)


def one_step_factorization_residual(
    m: ProcessTensor, tolerance: float = DEFAULT_TOLERANCE
) -> ConditionReport:
    """Product-form condition M = C (x) rho with C a TPCP Choi matrix."""
    if m.steps != 1:
        raise ValueError("one_step_factorization_residual expects a one-step tensor")
    d = m.d_sys
    rho_mat, _ = trace_all_but(m.mat, m.space, {"S0"})
    rho_mat = rho_mat / d
    c_cand = factor_against(m.mat, m.space, rho_mat, ("S0",))
    residual = 0.5 * trace_norm(m.mat - kron(c_cand, rho_mat))
    tp_res = tp_residual(c_cand, d, d)
    psd_res = max(0.0, -min_eig(c_cand))
    passed = residual <= tolerance and tp_res <= tolerance
    return _report(
        "one_step_factorization",
        residual,
        tolerance,
        passed=passed,
        channel=c_cand,
        rho=rho_mat,
        tp_residual=float(tp_res),
        psd_residual=float(psd_res),
    )


def markov_product_residual(
    t: ProcessTensor,
    t1: QuantumMap,
    t0: QuantumMap,
    rho: DensityMatrix,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ConditionReport:
    """Distance of T from the given Markov product T1 (x) T0 (x) rho."""
    if t.steps != 2:
        raise ValueError("markov_product_residual expects a two-step tensor")
    d = t.d_sys
    if t1.dim_in != d or t1.dim_out != d or t0.dim_in != d or t0.dim_out != d:
        raise ValueError(f"factor maps must be {d}->{d}")
    if rho.dim != d:
        raise ValueError(f"state dim {rho.dim}, expected {d}")
    candidate = kron(t1.choi, t0.choi, rho.mat)
    residual = 0.5 * trace_norm(t.mat - candidate)
    return _report("markov_product", residual, tolerance)


def default_probes(d_sys: int, seed=1234, n_random: int = 4) -> list[tuple[QuantumMap, QuantumMap]]:
    """Probe pairs for lemma1_probe: random TPCP maps at step 1 crossed with
    Pauli conjugations at step 0.

    Step 1 needs generic (non-unital) maps: unitary conjugations cannot see
    the correlation when the step-1 marginal is maximally mixed. The Pauli
    set at step 0 spans an operator basis of step-0 inputs.
    """
    from .quantum import choi_from_unitary_map

    paulis = [
        np.eye(2),
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    if d_sys == 2:
        step0 = [choi_from_unitary_map(p) for p in paulis]
    else:
        rng = np.random.default_rng(seed)
        step0 = [random_tpcp(d_sys, d_sys, rng) for _ in range(4)]
    rng = np.random.default_rng(seed + 1)
    step1 = [random_tpcp(d_sys, d_sys, rng) for _ in range(n_random)]
    return [(a1, a0) for a1 in step1 for a0 in step0]


def lemma1_probe(
    t: ProcessTensor,
    probes: list[tuple[QuantumMap, QuantumMap]],
    tolerance: float = DEFAULT_TOLERANCE,
) -> ConditionReport:
    """Randomized witness of the constant-map invariance T[A1, A0] =
    T[A1 o Lambda_{rho1/tr rho1}, A0].

    A sampling check, not a proof: it reports the worst violation over the
    given probe pairs.
    """
    if t.steps != 2:
        raise ValueError("lemma1_probe expects a two-step tensor")
    if not probes:
        raise ValueError("probe list must be nonempty")
    m = one_step_from_two(t)
    worst = 0.0
    for a1, a0 in probes:
        rho1 = apply(m, [a0]).mat
        tr1 = float(np.trace(rho1).real)
        lam = constant_map_choi(density(rho1 / tr1, "S"), t.d_sys)
        lhs = apply(t, [a1, a0]).mat
        rhs = apply(t, [compose(a1, lam), a0]).mat
        worst = max(worst, 0.5 * trace_norm(lhs - rhs))
    return _report("lemma1_probe", worst, tolerance, n_probes=len(probes))
