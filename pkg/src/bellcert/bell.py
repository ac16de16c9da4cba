"""Bell functionals for the two-time scenario: operators, bounds, SOS data.

The family treated here is indexed by a target outcome vector ``a`` of N
bits.  Party 1 enters through the rotated combinations

    T0 = (A_{1,0} - A_{1,1}) / sqrt(2),   T1 = (A_{1,0} + A_{1,1}) / sqrt(2)

and the functional reads

    B_a = (-1)^{a_1} [ (N-1) <T1 ox A_{2,1} ox ... ox A_{N,1}>
                       + sum_{n>=2} (-1)^{a_n} <T0 ox A_{n,0}> ]

with identity padding on the parties absent from each second-group term.
Local deterministic models satisfy ``B_a <= sqrt(2) (N-1)``; quantum
strategies reach ``2 (N-1)`` and no more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DimensionMismatchError, dagger, kron, max_abs
from .quantum import QuantumState, as_matrix, expectation

__all__ = [
    "MAX_ENUMERATION_PARTIES",
    "BellExpression",
    "SOSWitness",
    "SOSRelationCheck",
    "ExtraStatistics",
    "tilde_observables",
    "build_bell_operator",
    "classical_bound",
    "quantum_value",
    "sos_terms",
    "sos_residual",
    "check_sos_relations",
    "extra_statistics_check",
]

MAX_ENUMERATION_PARTIES = 10  # enumeration walks 4^N deterministic assignments


@dataclass(frozen=True)
class BellExpression:
    """One member of the Bell family: party count and target outcome bits."""

    parties: int
    target_outcomes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "target_outcomes", tuple(int(b) for b in self.target_outcomes))
        if self.parties < 2:
            raise ValueError("the Bell family needs at least 2 parties")
        if len(self.target_outcomes) != self.parties:
            raise ValueError(
                f"need {self.parties} outcome bits, got {len(self.target_outcomes)}"
            )
        if any(b not in (0, 1) for b in self.target_outcomes):
            raise ValueError("target outcomes must be bits")

    @property
    def quantum_bound(self) -> float:
        return 2.0 * (self.parties - 1)

    @property
    def classical_bound_analytic(self) -> float:
        return math.sqrt(2.0) * (self.parties - 1)


def tilde_observables(a0, a1) -> tuple[np.ndarray, np.ndarray]:
    """Rotated party-1 pair ``((A0 - A1)/sqrt(2), (A0 + A1)/sqrt(2))``."""
    m0, m1 = as_matrix(a0), as_matrix(a1)
    if m0.shape != m1.shape:
        raise DimensionMismatchError("tilde_observables: settings have different shapes")
    return (m0 - m1) / math.sqrt(2.0), (m0 + m1) / math.sqrt(2.0)


def _observable_pairs(observables) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(as_matrix(p[0]), as_matrix(p[1])) for p in observables]


def _padded(parties: int, dims, factors: dict[int, np.ndarray]) -> np.ndarray:
    mats = [factors.get(n, np.eye(dims[n], dtype=complex)) for n in range(parties)]
    return kron(*mats)


def build_bell_operator(expr: BellExpression, observables) -> np.ndarray:
    """Bell operator for ``expr`` built from per-party (setting-0, setting-1)
    observable pairs."""
    n_parties = expr.parties
    pairs = _observable_pairs(observables)
    if len(pairs) != n_parties:
        raise DimensionMismatchError(
            f"need observables for {n_parties} parties, got {len(pairs)}"
        )
    dims = [p[0].shape[0] for p in pairs]
    for n, (m0, m1) in enumerate(pairs):
        if m0.shape != m1.shape or m0.shape != (dims[n], dims[n]):
            raise DimensionMismatchError(f"party {n}: inconsistent observable shapes")

    a = expr.target_outcomes
    t0, t1 = tilde_observables(pairs[0][0], pairs[0][1])
    lead = {0: t1}
    for n in range(1, n_parties):
        lead[n] = pairs[n][1]
    op = (n_parties - 1) * _padded(n_parties, dims, lead)
    for n in range(1, n_parties):
        sign = -1.0 if a[n] else 1.0
        op = op + sign * _padded(n_parties, dims, {0: t0, n: pairs[n][0]})
    if a[0]:
        op = -op
    return (op + dagger(op)) / 2.0


def classical_bound(expr: BellExpression) -> float:
    """Maximum of the functional over all deterministic +/-1 assignments to
    every observable symbol (exhaustive, exact up to floating arithmetic)."""
    n = expr.parties
    if n > MAX_ENUMERATION_PARTIES:
        raise ValueError(
            f"enumeration over 4^{n} assignments refused for N > "
            f"{MAX_ENUMERATION_PARTIES}; the closed form is sqrt(2)*(N-1)"
        )
    a = expr.target_outcomes
    # Bit b of the assignment index: value (-1)^b of one observable symbol.
    # Bits 2n, 2n+1 hold party n's setting-0 and setting-1 values.
    idx = np.arange(4**n, dtype=np.int64)
    val = [(1.0 - 2.0 * ((idx >> k) & 1)).astype(np.float64) for k in range(2 * n)]
    t0 = (val[0] - val[1]) / math.sqrt(2.0)
    t1 = (val[0] + val[1]) / math.sqrt(2.0)
    prod1 = np.ones_like(t1)
    for m in range(1, n):
        prod1 *= val[2 * m + 1]
    total = (n - 1) * t1 * prod1
    for m in range(1, n):
        sign = -1.0 if a[m] else 1.0
        total += sign * t0 * val[2 * m]
    if a[0]:
        total = -total
    return float(np.max(total))


def quantum_value(state: QuantumState, observables, expr: BellExpression) -> float:
    """Value ``Tr(B rho)`` of the Bell operator on a state."""
    op = build_bell_operator(expr, observables)
    if op.shape != (state.dim, state.dim):
        raise DimensionMismatchError(
            f"Bell operator dim {op.shape[0]} does not match state dim {state.dim}"
        )
    return float(np.real(np.trace(op @ state.density)))


def sos_terms(expr: BellExpression, observables) -> tuple[np.ndarray, list[np.ndarray]]:
    """The squared-operator witnesses whose combination bounds the operator:

        P   = (-1)^{a_1} T1 - A_{2,1} ox ... ox A_{N,1}
        Q_n = (-1)^{a_1 + a_n} T0 - A_{n,0}          (n = 2..N)

    each padded with identities to the full space.
    """
    n_parties = expr.parties
    pairs = _observable_pairs(observables)
    dims = [p[0].shape[0] for p in pairs]
    a = expr.target_outcomes
    t0, t1 = tilde_observables(pairs[0][0], pairs[0][1])
    s1 = -1.0 if a[0] else 1.0

    rest = {n: pairs[n][1] for n in range(1, n_parties)}
    p_term = s1 * _padded(n_parties, dims, {0: t1}) - _padded(n_parties, dims, rest)
    q_terms = []
    for n in range(1, n_parties):
        sn = -1.0 if (a[0] + a[n]) % 2 else 1.0
        q_terms.append(
            sn * _padded(n_parties, dims, {0: t0}) - _padded(n_parties, dims, {n: pairs[n][0]})
        )
    return p_term, q_terms


@dataclass(frozen=True, eq=False)
class SOSWitness:
    """Residual of the sum-of-squares identity

        R = 2 [beta_Q I - B] - [(N-1) P^2 + sum_n Q_n^2].

    ``residual_norm`` is the max-norm of R (zero exactly when every
    observable squares to the identity); ``min_eigenvalue`` certifies that R
    stays positive semidefinite for contractive observables.
    """

    residual_norm: float
    min_eigenvalue: float
    is_exact_identity: bool


def sos_residual(expr: BellExpression, observables, tol: float = 1e-9) -> SOSWitness:
    """Evaluate the SOS identity residual for the given observables."""
    op = build_bell_operator(expr, observables)
    p_term, q_terms = sos_terms(expr, observables)
    d = op.shape[0]
    rhs = (expr.parties - 1) * (p_term @ p_term)
    for q in q_terms:
        rhs = rhs + q @ q
    r = 2.0 * (expr.quantum_bound * np.eye(d) - op) - rhs
    norm = max_abs(r)
    min_eig = float(np.min(np.linalg.eigvalsh((r + dagger(r)) / 2.0)))
    return SOSWitness(
        residual_norm=norm, min_eigenvalue=min_eig, is_exact_identity=bool(norm < tol)
    )


@dataclass(frozen=True, eq=False)
class SOSRelationCheck:
    """Mean squared norms ``Tr(P^dag P rho)`` and ``Tr(Q_n^dag Q_n rho)``;
    all vanish exactly when the strategy attains the quantum bound."""

    p_violation: float
    q_violations: tuple[float, ...]

    @property
    def maximal(self) -> bool:
        return max(self.p_violation, *self.q_violations) < 1e-9


def check_sos_relations(state: QuantumState, observables, expr: BellExpression) -> SOSRelationCheck:
    p_term, q_terms = sos_terms(expr, observables)

    def msq(t):
        return float(np.real(np.trace(dagger(t) @ t @ state.density)))

    return SOSRelationCheck(
        p_violation=msq(p_term), q_violations=tuple(msq(q) for q in q_terms)
    )


@dataclass(frozen=True)
class ExtraStatistics:
    """Side conditions on the designated conditional post-interaction state.

    ``entries`` holds (label, value, target) triples: for every party
    n = 2..N the pair ``<T0 ox I> = -1`` (party-1 rotated observable) and
    ``<I ox A_{n,1}> = +1``.
    """

    passes: bool
    entries: tuple[tuple[str, float, float], ...]

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v, _ in self.entries)


def extra_statistics_check(
    state: QuantumState, observables, parties: int, tol: float = 1e-9
) -> ExtraStatistics:
    """Evaluate the side conditions on a conditional post-interaction state
    using the second-round observables."""
    pairs = _observable_pairs(observables)
    if len(pairs) != parties or len(state.dims) != parties:
        raise DimensionMismatchError("extra_statistics_check: party count mismatch")
    t0, _ = tilde_observables(pairs[0][0], pairs[0][1])
    tilde_val = expectation(state, [t0] + [None] * (parties - 1))
    entries = []
    for n in range(1, parties):
        ops = [None] * parties
        ops[n] = pairs[n][1]
        entries.append((f"tilde0(party 1) with party {n + 1}", tilde_val, -1.0))
        entries.append((f"setting-1 observable, party {n + 1}", expectation(state, ops), 1.0))
    passes = all(abs(v - t) < tol for _, v, t in entries)
    return ExtraStatistics(passes=passes, entries=tuple(entries))
