"""Completely positive trace-preserving maps on n qubits.

Channels come in two interchangeable forms: a chi matrix over the canonical
Pauli operator basis (see :func:`chitomo.pauli.label_index` for the ordering)
or a Kraus operator-sum set.  Every constructor here validates its output;
:func:`apply_channel` acts linearly on any input matrix, which downstream
oracles rely on.

The JSON channel-spec format accepted by :func:`channel_factory`:

    {"n": 1, "kind": "depolarizing", "p": 0.2}

with kinds identity | depolarizing | pauli_mixture | unitary |
amplitude_damping | kraus | compose.  Complex matrices serialize row-major
with each entry a [re, im] pair; ``compose`` children are full specs applied
first-listed-first.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import json
import logging
from dataclasses import dataclass

import numpy as np

from .pauli import (
    DENSE_QUBIT_CAP,
    DenseCapError,
    PauliLabel,
    all_labels,
    label_index,
    pauli_matrix,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9

# Eigenvalues of chi below this fraction of the largest one are dropped when
# extracting Kraus operators; the loss is logged, never renormalized away.
KRAUS_EIGVAL_CUTOFF = 1e-12


class ChannelSpecError(ValueError):
    """Malformed channel-spec document."""


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """Process matrix: D**2 x D**2, indexed by canonical Pauli label pairs."""

    n: int
    mat: np.ndarray

    def __post_init__(self):
        d2 = 4**self.n
        if self.mat.shape != (d2, d2):
            raise ValueError(f"chi matrix for n={self.n} must be {d2}x{d2}")

    def entry(self, m: PauliLabel, n_label: PauliLabel) -> complex:
        return complex(self.mat[label_index(m), label_index(n_label)])


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Operator-sum form: a tuple of D x D matrices with sum A^dag A = I."""

    n: int
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        d = 2**self.n
        if not self.operators:
            raise ValueError("KrausSet needs at least one operator")
        for a in self.operators:
            if a.shape != (d, d):
                raise ValueError(f"Kraus operators for n={self.n} must be {d}x{d}")


Channel = ChiMatrix | KrausSet


@functools.lru_cache(maxsize=8)
def pauli_basis(n: int) -> np.ndarray:
    """Stack of all 4**n Hermitian Pauli matrices, shape (4**n, D, D)."""
    if n > DENSE_QUBIT_CAP:
        raise DenseCapError(f"dense basis limited to n <= {DENSE_QUBIT_CAP}")
    return np.stack([pauli_matrix(a) for a in all_labels(n)])


def _kraus_stack(k: KrausSet) -> np.ndarray:
    return np.stack(k.operators)


def apply_channel(channel: Channel, rho: np.ndarray) -> np.ndarray:
    """Apply a channel to a matrix (linear action; rho need not be a state)."""
    d = 2**channel.n
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"state shape {rho.shape} does not match channel D={d}")
    if isinstance(channel, KrausSet):
        ops = _kraus_stack(channel)
        return np.einsum("kij,jl,kml->im", ops, rho, ops.conj(), optimize=True)
    b = pauli_basis(channel.n)
    return np.einsum(
        "mn,mij,jl,nkl->ik", channel.mat, b, rho, b.conj(), optimize=True
    )


@dataclass(frozen=True)
class ChiValidationReport:
    """Deviations of a chi matrix from a valid CPTP map."""

    hermiticity_deviation: float
    min_eigenvalue: float
    trace_condition_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.hermiticity_deviation <= self.tol
            and self.min_eigenvalue >= -self.tol
            and self.trace_condition_deviation <= self.tol
        )


def validate_chi(chi: ChiMatrix, tol: float = DEFAULT_TOL) -> ChiValidationReport:
    """Report hermiticity, positivity and trace-preservation deviations."""
    herm = float(np.max(np.abs(chi.mat - chi.mat.conj().T)))
    min_eig = float(np.min(np.linalg.eigvalsh((chi.mat + chi.mat.conj().T) / 2)))
    b = pauli_basis(chi.n)
    # sum_{mn} chi_mn E_n^dag E_m, which must be the identity
    t = np.einsum("mn,nli,mlj->ij", chi.mat, b.conj(), b, optimize=True)
    trace_dev = float(np.max(np.abs(t - np.eye(2**chi.n))))
    return ChiValidationReport(herm, min_eig, trace_dev, tol)


def kraus_completeness_deviation(k: KrausSet) -> float:
    """Max-norm deviation of sum A^dag A from the identity."""
    ops = _kraus_stack(k)
    s = np.einsum("kji,kjl->il", ops.conj(), ops)
    return float(np.max(np.abs(s - np.eye(2**k.n))))


def kraus_to_chi(k: KrausSet) -> ChiMatrix:
    """Expand Kraus operators in the Pauli basis and accumulate chi."""
    b = pauli_basis(k.n)
    ops = _kraus_stack(k)
    d = 2**k.n
    # c[k, m] = Tr(E_m^dag A_k) / D
    c = np.einsum("mji,kji->km", b.conj(), ops) / d
    return ChiMatrix(k.n, np.einsum("km,kn->mn", c, c.conj()))


def chi_to_kraus(chi: ChiMatrix, tol: float = DEFAULT_TOL) -> KrausSet:
    """Extract Kraus operators by eigendecomposition of chi.

    Eigenvalues below KRAUS_EIGVAL_CUTOFF times the largest are dropped (and
    logged); an eigenvalue below -tol means chi is not a CP map and raises.
    """
    herm_dev = float(np.max(np.abs(chi.mat - chi.mat.conj().T)))
    if herm_dev > tol:
        raise ValueError(f"chi is not Hermitian (deviation {herm_dev:.3e})")
    vals, vecs = np.linalg.eigh((chi.mat + chi.mat.conj().T) / 2)
    if vals[0] < -tol:
        raise ValueError(f"chi is not PSD (min eigenvalue {vals[0]:.3e})")
    cutoff = KRAUS_EIGVAL_CUTOFF * max(float(vals[-1]), 0.0)
    keep = vals > cutoff
    dropped = float(np.sum(np.abs(vals[~keep])))
    if dropped > 0:
        logger.debug("chi_to_kraus dropped eigenvalue weight %.3e", dropped)
    b = pauli_basis(chi.n)
    ops = tuple(
        np.einsum("m,mij->ij", np.sqrt(vals[j]) * vecs[:, j], b)
        for j in np.nonzero(keep)[0]
    )
    return KrausSet(chi.n, ops)


def as_kraus(channel: Channel) -> KrausSet:
    return channel if isinstance(channel, KrausSet) else chi_to_kraus(channel)


def modified_channel_diag(channel: Channel, m: PauliLabel) -> KrausSet:
    """The channel rho -> E_m^dag E(rho) E_m used for diagonal estimation."""
    k = as_kraus(channel)
    if m.n != k.n:
        raise ValueError(f"label n={m.n} does not match channel n={k.n}")
    em_dag = pauli_matrix(m).conj().T
    return KrausSet(k.n, tuple(em_dag @ a for a in k.operators))


def modified_channel_offdiag(
    channel: Channel, m: PauliLabel, n_label: PauliLabel
) -> KrausSet:
    """Ancilla-assisted channel on n+1 qubits for off-diagonal estimation.

    The ancilla is qubit 0 (most significant factor).  The pre-channel
    unitary is: Hadamard on the ancilla, E_m^dag on the main register
    controlled on the ancilla being 1, E_n^dag anti-controlled (ancilla 0);
    the original channel then acts on the main register alone.
    """
    k = as_kraus(channel)
    if m.n != k.n or n_label.n != k.n:
        raise ValueError("labels must match the channel qubit count")
    if k.n + 1 > DENSE_QUBIT_CAP:
        raise DenseCapError(
            f"ancilla-extended channel needs n+1 <= {DENSE_QUBIT_CAP}"
        )
    d = 2**k.n
    em_dag = pauli_matrix(m).conj().T
    en_dag = pauli_matrix(n_label).conj().T
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    v = (np.kron(p0, en_dag) + np.kron(p1, em_dag)) @ np.kron(h, np.eye(d))
    eye2 = np.eye(2, dtype=complex)
    return KrausSet(k.n + 1, tuple(np.kron(eye2, a) @ v for a in k.operators))


# ---------------------------------------------------------------------------
# Channel-spec documents

def matrix_to_json(mat: np.ndarray) -> list:
    """Row-major nested lists with [re, im] entries."""
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(mat)]


def matrix_from_json(obj, what: str = "matrix") -> np.ndarray:
    try:
        rows = []
        for row in obj:
            rows.append([complex(re, im) for re, im in row])
        mat = np.array(rows, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ChannelSpecError(f"{what} is not a nested [re, im] array") from exc
    if mat.ndim != 2:
        raise ChannelSpecError(f"{what} must be two-dimensional")
    return mat


def canonical_spec_bytes(spec: dict) -> bytes:
    """Canonical serialization used for hashing and log headers."""
    try:
        return json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()
    except (TypeError, ValueError) as exc:
        raise ChannelSpecError(f"spec is not JSON-serializable: {exc}") from exc


def channel_spec_sha256(spec: dict) -> str:
    return hashlib.sha256(canonical_spec_bytes(spec)).hexdigest()


def load_channel_spec(path) -> dict:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise ChannelSpecError(f"cannot read channel spec: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ChannelSpecError(f"channel spec is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise ChannelSpecError("channel spec must be a JSON object")
    return spec


def _require_n(spec: dict) -> int:
    n = spec.get("n")
    if not isinstance(n, int) or n < 1:
        raise ChannelSpecError("spec field 'n' must be a positive integer")
    return n


def _embed_single_qubit(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    left = np.eye(2**qubit, dtype=complex)
    right = np.eye(2 ** (n - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _mixture_kraus(n: int, weights: dict[PauliLabel, float]) -> KrausSet:
    ops = tuple(
        np.sqrt(w) * pauli_matrix(a) for a, w in weights.items() if w > 0
    )
    return KrausSet(n, ops)


def channel_factory(spec: dict) -> KrausSet:
    """Build a channel from a spec document.  Raises ChannelSpecError."""
    if not isinstance(spec, dict):
        raise ChannelSpecError("channel spec must be a JSON object")
    n = _require_n(spec)
    if n > DENSE_QUBIT_CAP:
        raise DenseCapError(
            f"channel construction limited to n <= {DENSE_QUBIT_CAP}, got {n}"
        )
    kind = spec.get("kind")
    d = 2**n

    if kind == "identity":
        return KrausSet(n, (np.eye(d, dtype=complex),))

    if kind == "depolarizing":
        p = spec.get("p")
        if not isinstance(p, (int, float)) or not 0 <= p <= 1:
            raise ChannelSpecError("depolarizing needs 'p' in [0, 1]")
        labels = all_labels(n)
        weights = {a: p / d**2 for a in labels}
        weights[labels[0]] = 1 - p + p / d**2
        return _mixture_kraus(n, weights)

    if kind == "pauli_mixture":
        raw = spec.get("weights")
        if not isinstance(raw, dict) or not raw:
            raise ChannelSpecError("pauli_mixture needs a non-empty 'weights' map")
        weights = {}
        for key, w in raw.items():
            try:
                a = PauliLabel.from_string(key)
            except ValueError as exc:
                raise ChannelSpecError(f"bad Pauli string {key!r}: {exc}") from exc
            if a.n != n:
                raise ChannelSpecError(f"weight key {key!r} has wrong qubit count")
            if not isinstance(w, (int, float)) or w < 0:
                raise ChannelSpecError(f"weight for {key!r} must be >= 0")
            weights[a] = float(w)
        total = sum(weights.values())
        if abs(total - 1) > 1e-9:
            raise ChannelSpecError(f"mixture weights sum to {total!r}, expected 1")
        return _mixture_kraus(n, weights)

    if kind == "unitary":
        if "matrix" in spec:
            u = matrix_from_json(spec["matrix"], "unitary matrix")
            if u.shape != (d, d):
                raise ChannelSpecError(f"unitary matrix must be {d}x{d}")
        elif "generator" in spec:
            try:
                g = PauliLabel.from_string(spec["generator"])
            except ValueError as exc:
                raise ChannelSpecError(str(exc)) from exc
            if g.n != n:
                raise ChannelSpecError("generator has wrong qubit count")
            theta = spec.get("theta")
            if not isinstance(theta, (int, float)):
                raise ChannelSpecError("unitary generator needs numeric 'theta'")
            # exp(-i theta P / 2) for an involutory generator P
            u = np.cos(theta / 2) * np.eye(d) - 1j * np.sin(theta / 2) * pauli_matrix(g)
        else:
            raise ChannelSpecError("unitary needs 'matrix' or 'generator'")
        dev = float(np.max(np.abs(u @ u.conj().T - np.eye(d))))
        if dev > 1e-9:
            raise ChannelSpecError(f"matrix is not unitary (deviation {dev:.3e})")
        return KrausSet(n, (u,))

    if kind == "amplitude_damping":
        gamma = spec.get("gamma")
        if not isinstance(gamma, (int, float)) or not 0 <= gamma <= 1:
            raise ChannelSpecError("amplitude_damping needs 'gamma' in [0, 1]")
        a0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
        a1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
        ops = []
        for combo in itertools.product((a0, a1), repeat=n):
            op = np.ones((1, 1), dtype=complex)
            for factor in combo:
                op = np.kron(op, factor)
            if np.any(op):
                ops.append(op)
        return KrausSet(n, tuple(ops))

    if kind == "kraus":
        raw_ops = spec.get("operators")
        if not isinstance(raw_ops, list) or not raw_ops:
            raise ChannelSpecError("kraus needs a non-empty 'operators' list")
        ops = tuple(
            matrix_from_json(o, f"Kraus operator {i}") for i, o in enumerate(raw_ops)
        )
        k = KrausSet(n, ops)
        dev = kraus_completeness_deviation(k)
        if dev > 1e-6:
            raise ChannelSpecError(f"Kraus set not complete (deviation {dev:.3e})")
        return k

    if kind == "compose":
        children = spec.get("children")
        if not isinstance(children, list) or not children:
            raise ChannelSpecError("compose needs a non-empty 'children' list")
        built = [channel_factory(c) for c in children]
        if any(c.n != n for c in built):
            raise ChannelSpecError("compose children must share the parent 'n'")
        # first listed acts first
        ops = built[0].operators
        for nxt in built[1:]:
            ops = tuple(b @ a for b in nxt.operators for a in ops)
        return KrausSet(n, ops)

    raise ChannelSpecError(f"unknown channel kind {kind!r}")
