"""Estimator functions over an approximate state: Pauli monomials, Pauli
sums, tensor-factored observables, tiny-N density reconstruction, and
readout-attenuation predictions.

Every estimate is a plain snapshot average of the per-snapshot estimator
value; the returned error fields are the seminorm bound and the diagonal
seminorm approximation, both divided by sqrt(M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import (
    FactoredObservable,
    Observable,
    PauliAxis,
    PauliString,
    SingleQubitOperator,
    factored_seminorms,
    seminorm,
    seminorm2,
)
from .snapshots import ApproximateState, Direction

__all__ = [
    "EstimateResult",
    "r1_pauli",
    "r1_operator",
    "estimate_pauli_string",
    "estimate_observable",
    "estimate_factored",
    "reconstruct_density",
    "p_odd",
    "predict_attenuated",
]

DENSITY_QUBIT_CAP = 3


@dataclass(frozen=True)
class EstimateResult:
    """Estimate with its error scales: ``std_bound`` is the proven bound
    seminorm/sqrt(M), ``std_approx`` the diagonal-seminorm approximation."""

    value: float
    std_bound: float
    std_approx: float
    n_snapshots: int
    n_qubits: int

    def __post_init__(self):
        if self.std_approx > self.std_bound + 1e-12:
            raise ValueError("std_approx cannot exceed std_bound")


def r1_pauli(axis: PauliAxis, m: int, direction: Direction) -> float:
    """Single-qubit estimator of a Pauli operator: 1 for I, else 3*m*n_axis."""
    if axis is PauliAxis.I:
        return 1.0
    return 3.0 * m * direction.unit_vector()[int(axis) - 1]


def r1_operator(op: SingleQubitOperator, m: int, direction: Direction) -> float:
    """Single-qubit estimator of a0*I + ax*X + ay*Y + az*Z."""
    nx, ny, nz = direction.unit_vector()
    return op.a0 + 3.0 * m * (op.ax * nx + op.ay * ny + op.az * nz)


def _weights(state: ApproximateState) -> np.ndarray:
    """Per-snapshot, per-qubit estimator components 3*m*(nx, ny, nz).

    Computed once per state and cached; every Pauli term reuses the table.
    """
    if state._weights is None:
        sin_t = np.sin(state.thetas)
        w = np.empty(state.outcomes.shape + (3,))
        w[..., 0] = np.cos(state.phis) * sin_t
        w[..., 1] = np.sin(state.phis) * sin_t
        w[..., 2] = np.cos(state.thetas)
        w *= 3.0 * state.outcomes[..., None]
        w.setflags(write=False)
        state._weights = w
    return state._weights


def _string_values(state: ApproximateState, string: PauliString) -> np.ndarray:
    """Per-snapshot estimator values of one Pauli monomial, shape (M,)."""
    qubits = np.array([q for q, _ in string.support])
    axes = np.array([int(a) - 1 for _, a in string.support])
    w = _weights(state)
    if qubits.size == 1:
        return w[:, qubits[0], axes[0]]
    return np.prod(w[:, qubits, axes], axis=1)


def _mean(values: np.ndarray) -> float:
    # exact (compensated) accumulation; products can reach 3^N in magnitude
    return math.fsum(values.tolist()) / len(values)


def _check_qubits(state: ApproximateState, n_qubits: int) -> None:
    if n_qubits != state.n_qubits:
        raise ValueError(
            f"observable acts on {n_qubits} qubits, snapshots on {state.n_qubits}"
        )


def estimate_pauli_string(state: ApproximateState, string: PauliString) -> EstimateResult:
    """Snapshot average of the product estimator for one Pauli monomial.

    The error scale of a weight-r monomial is 3^(r/2)/sqrt(M); the identity
    estimates to exactly 1 with zero spread.
    """
    _check_qubits(state, string.n_qubits)
    m = state.n_snapshots
    if string.weight == 0:
        return EstimateResult(1.0, 0.0, 0.0, m, state.n_qubits)
    value = _mean(_string_values(state, string))
    scale = 3.0 ** (string.weight / 2.0) / math.sqrt(m)
    return EstimateResult(value, scale, scale, m, state.n_qubits)


def estimate_observable(
    state: ApproximateState,
    obs: Observable,
    norms: tuple[float, float] | None = None,
) -> EstimateResult:
    """Estimate <O> for a Pauli-sum observable in one streaming pass.

    ``norms`` may carry a precomputed (seminorm, seminorm2) pair to avoid
    re-deriving them, e.g. when the same observable is evaluated on many
    snapshot prefixes.
    """
    _check_qubits(state, obs.n_qubits)
    m = state.n_snapshots
    parts = []
    for coeff, string in obs.terms:
        if string.weight == 0:
            parts.append(coeff)
        else:
            parts.append(coeff * _mean(_string_values(state, string)))
    if norms is None:
        norms = (seminorm(obs), seminorm2(obs))
    root_m = math.sqrt(m)
    return EstimateResult(
        math.fsum(parts), norms[0] / root_m, norms[1] / root_m, m, state.n_qubits
    )


def estimate_factored(
    state: ApproximateState,
    fobs: FactoredObservable,
    norms: tuple[float, float] | None = None,
) -> EstimateResult:
    """Estimate a tensor-factored observable via per-qubit estimator products.

    This is the path for computational-basis projectors: cost O(M*N) per
    term, with no Pauli expansion.
    """
    _check_qubits(state, fobs.n_qubits)
    m = state.n_snapshots
    w = _weights(state)
    parts = []
    for coeff, factors in fobs.terms:
        bias = np.array([op.a0 for op in factors])
        pauli = np.array([[op.ax, op.ay, op.az] for op in factors])
        per_qubit = bias[None, :] + np.einsum("jka,ka->jk", w, pauli)
        parts.append(coeff * _mean(np.prod(per_qubit, axis=1)))
    if norms is None:
        norms = factored_seminorms(fobs)
    root_m = math.sqrt(m)
    return EstimateResult(
        math.fsum(parts), norms[0] / root_m, norms[1] / root_m, m, state.n_qubits
    )


def reconstruct_density(
    state: ApproximateState, max_qubits: int = DENSITY_QUBIT_CAP
) -> np.ndarray:
    """Average of the tensor-product kernels: the 2^N x 2^N matrix whose
    expectation is the true density operator.

    Exists only to verify the tomographic identity at tiny N; estimation
    never needs it.
    """
    n = state.n_qubits
    if n > max_qubits:
        raise ValueError(f"density reconstruction capped at {max_qubits} qubits")
    m = state.n_snapshots
    sin_t = np.sin(state.thetas)
    nx = np.cos(state.phis) * sin_t
    ny = np.sin(state.phis) * sin_t
    nz = np.cos(state.thetas)
    f = 1.5 * state.outcomes
    kernels = np.empty((m, n, 2, 2), dtype=complex)
    kernels[..., 0, 0] = 0.5 + f * nz
    kernels[..., 0, 1] = f * (nx - 1j * ny)
    kernels[..., 1, 0] = f * (nx + 1j * ny)
    kernels[..., 1, 1] = 0.5 - f * nz
    # qubit 0 is the least-significant index bit, so it is the rightmost
    # factor of the matrix tensor product
    subscripts = {
        1: "jab->ab",
        2: "jab,jcd->acbd",
        3: "jab,jcd,jef->acebdf",
    }[n]
    operands = [kernels[:, k] for k in reversed(range(n))]
    total = np.zeros((2**n, 2**n), dtype=complex)
    chunk = 10_000
    for start in range(0, m, chunk):
        parts = [op[start : start + chunk] for op in operands]
        total += np.einsum(subscripts, *parts).reshape(2**n, 2**n)
    return total / m


def p_odd(r: int, p_err: float) -> float:
    """Probability of an odd number of independent flips among r qubits."""
    if r < 0:
        raise ValueError("r must be non-negative")
    if not 0.0 <= p_err < 1.0:
        raise ValueError("p_err must lie in [0, 1)")
    return 0.5 * (1.0 - (1.0 - 2.0 * p_err) ** r)


def predict_attenuated(
    obs: Observable, exact_terms: list[float] | np.ndarray, p_err: float
) -> float:
    """Predicted noisy estimate: each term's expectation is attenuated by
    (1 - 2*p_err)^weight."""
    if len(exact_terms) != len(obs.terms):
        raise ValueError("need one exact expectation per observable term")
    damp = 1.0 - 2.0 * p_err
    return math.fsum(
        coeff * damp**string.weight * value
        for (coeff, string), value in zip(obs.terms, exact_terms)
    )
