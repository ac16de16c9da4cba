"""Built-in reference strategy: the states, observables and entangling
unitary that saturate the Bell family.

Conventions used throughout (and relied on by the certifier's block
comparison, so they are fixed here once):

* ``HBAR_BASIS`` = eigenvectors of (X + Z)/sqrt(2):
      |b0> = cos(pi/8)|0> + sin(pi/8)|1>,  |b1> = -sin(pi/8)|0> + cos(pi/8)|1>
* ``X_BASIS`` = eigenvectors of X: |+>, |-> with |-> = (|0> - |1>)/sqrt(2)
* outcome ``a`` of an observable selects its ``(-1)^a`` eigenvector.

The entangling unitary maps the product basis
``|b_{a_1}> ox |a_2> ox |x_{a_3}> ox ... ox |x_{a_N}>`` onto the maximally
entangled family ``|phi_a> = (|a> + (-1)^{a_1} |a_complement>) / sqrt(2)``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .linalg import kron
from .quantum import DichotomicObservable, Interaction, QuantumState, pure_state

__all__ = [
    "PAULI_X",
    "PAULI_Z",
    "HBAR_BASIS",
    "X_BASIS",
    "Z_BASIS",
    "alice_targets",
    "other_targets",
    "target_observables",
    "ghz_like_vector",
    "reference_observables",
    "entangling_unitary",
    "pre_interaction_basis",
    "pre_interaction_vector",
    "measured_eigenvector",
    "reference_source_state",
    "reference_strategy",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

_C8, _S8 = math.cos(math.pi / 8.0), math.sin(math.pi / 8.0)
HBAR_BASIS = (
    np.array([_C8, _S8], dtype=complex),
    np.array([-_S8, _C8], dtype=complex),
)
X_BASIS = (
    np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0),
)
Z_BASIS = (
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
)


def alice_targets() -> tuple[np.ndarray, np.ndarray]:
    """Party-1 qubit observables ((X+Z)/sqrt2, (X-Z)/sqrt2)."""
    s = math.sqrt(2.0)
    return (PAULI_X + PAULI_Z) / s, (PAULI_X - PAULI_Z) / s


def other_targets() -> tuple[np.ndarray, np.ndarray]:
    """Qubit observables (Z, X) for every party after the first."""
    return PAULI_Z.copy(), PAULI_X.copy()


def target_observables(parties: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-party (setting-0, setting-1) qubit observable pairs."""
    return [alice_targets()] + [other_targets() for _ in range(parties - 1)]


def ghz_like_vector(outcomes: tuple[int, ...]) -> np.ndarray:
    """|phi_a> = (|a> + (-1)^{a_1} |a_complement>) / sqrt(2) on N qubits."""
    bits = tuple(int(b) for b in outcomes)
    n = len(bits)
    v = np.zeros(2**n, dtype=complex)
    idx = int("".join(map(str, bits)), 2)
    comp = int("".join(str(1 - b) for b in bits), 2)
    sign = -1.0 if bits[0] else 1.0
    v[idx] += 1.0
    v[comp] += sign
    return v / math.sqrt(2.0)


def _first_round_basis(parties: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # Party 1 in the (X+Z)/sqrt2 eigenbasis, party 2 computational,
    # the rest in the X eigenbasis: the post-measurement bases of the
    # Bell-branch first-round settings.
    bases = [HBAR_BASIS, Z_BASIS]
    bases.extend(X_BASIS for _ in range(parties - 2))
    return bases[:parties]


def pre_interaction_vector(outcomes: tuple[int, ...]) -> np.ndarray:
    """Product state entering the interaction after the Bell-branch
    first-round measurement with outcomes ``a``."""
    bits = tuple(int(b) for b in outcomes)
    bases = _first_round_basis(len(bits))
    return kron(*[bases[n][bits[n]].reshape(-1, 1) for n in range(len(bits))]).reshape(-1)


def pre_interaction_basis(parties: int) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """All 2^N pre-interaction product states, keyed by outcome bits."""
    out = []
    for bits in itertools.product((0, 1), repeat=parties):
        out.append((bits, pre_interaction_vector(bits)))
    return out


def entangling_unitary(parties: int) -> np.ndarray:
    """The reference interaction ``sum_a |phi_a><basis_a|`` on N qubits."""
    d = 2**parties
    u = np.zeros((d, d), dtype=complex)
    for bits, vec in pre_interaction_basis(parties):
        u += np.outer(ghz_like_vector(bits), np.conj(vec))
    return u


def measured_eigenvector(party: int, setting: int, outcome: int) -> np.ndarray:
    """Eigenvector with eigenvalue (-1)^outcome of the target observable of
    ``party`` (0-based) at ``setting``."""
    if party == 0:
        # Setting 0 is diagonal in HBAR_BASIS; setting 1 maps |b0> <-> |b1>,
        # so its eigenvectors are (|b0> +/- |b1>)/sqrt(2).
        if setting == 0:
            return HBAR_BASIS[outcome].copy()
        v = (HBAR_BASIS[0] + (1.0 if outcome == 0 else -1.0) * HBAR_BASIS[1]) / math.sqrt(2.0)
        return v
    return (Z_BASIS if setting == 0 else X_BASIS)[outcome].copy()


def reference_observables(parties: int, time_slice: int) -> tuple:
    """Labelled qubit observables for every party and both settings."""
    obs = []
    for n, (m0, m1) in enumerate(target_observables(parties)):
        obs.append(
            (
                DichotomicObservable(m0, party=n, setting=0, time_slice=time_slice),
                DichotomicObservable(m1, party=n, setting=1, time_slice=time_slice),
            )
        )
    return tuple(obs)


def reference_source_state(parties: int) -> QuantumState:
    """The maximally entangled source |phi_{0...0}>."""
    return pure_state(ghz_like_vector((0,) * parties), (2,) * parties)


def reference_strategy(parties: int):
    """Full reference strategy on N qubits (imported lazily to avoid a
    circular import with the scenario module)."""
    from .scenario import Strategy

    if parties < 2:
        raise ValueError("need at least 2 parties")
    dims = (2,) * parties
    interaction = Interaction(entangling_unitary(parties), dims, dims)
    return Strategy(
        source_state=reference_source_state(parties),
        observables_t1=reference_observables(parties, time_slice=1),
        observables_t2=reference_observables(parties, time_slice=2),
        interaction=interaction,
    )
