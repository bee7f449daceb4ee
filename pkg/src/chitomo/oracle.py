"""Brute-force ground truth for everything the estimators target.

Everything here is exact (dense linear algebra, full design enumeration) and
deliberately slow-but-simple; it exists to pin down the Monte Carlo paths.
Desk-scale only: chi matrices are 4**n x 4**n, so the default cap is n = 4
with an explicit opt-in for n = 5.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channels import (
    Channel,
    ChiMatrix,
    KrausSet,
    apply_channel,
    as_kraus,
    kraus_to_chi,
    modified_channel_diag,
    modified_channel_offdiag,
)
from .mub import design_basis, design_average_survival
from .pauli import (
    DenseCapError,
    PauliLabel,
    all_labels,
    label_from_index,
    label_index,
    pauli_matrix,
)

logger = logging.getLogger(__name__)

ORACLE_QUBIT_CAP = 4
ORACLE_QUBIT_HARD_CAP = 5

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


def _check_oracle_cap(n: int, max_n: int) -> None:
    if max_n > ORACLE_QUBIT_HARD_CAP:
        raise ValueError(f"oracle cap cannot exceed {ORACLE_QUBIT_HARD_CAP}")
    if n > max_n:
        raise DenseCapError(
            f"oracle computation for n={n} exceeds cap {max_n}; "
            f"pass max_n={min(n, ORACLE_QUBIT_HARD_CAP)} to override up to "
            f"{ORACLE_QUBIT_HARD_CAP}"
        )
    if n >= ORACLE_QUBIT_HARD_CAP:
        logger.warning("oracle at n=%d builds a %d x %d chi matrix", n, 4**n, 4**n)


def exact_chi(channel: Channel, max_n: int = ORACLE_QUBIT_CAP) -> ChiMatrix:
    """Exact process matrix, independent of the Kraus decomposition used."""
    _check_oracle_cap(channel.n, max_n)
    return kraus_to_chi(as_kraus(channel))


def exact_average_fidelity(channel: Channel, max_n: int = ORACLE_QUBIT_CAP) -> float:
    """Average survival probability, enumerated over the full state design."""
    _check_oracle_cap(channel.n, max_n)
    d = 2**channel.n
    total = 0.0
    for J in range(d + 1):
        b = design_basis(channel.n, J)
        for k in range(d):
            v = b[:, k]
            out = apply_channel(channel, np.outer(v, v.conj()))
            total += float((v.conj() @ out @ v).real)
    return total / (d * (d + 1))


def exact_offdiag_average(
    channel: Channel,
    m: PauliLabel,
    n_label: PauliLabel,
    max_n: int = ORACLE_QUBIT_CAP,
) -> complex:
    """Design average of <psi| E(E_m^dag P_psi E_n) |psi>.

    Equals (D chi_mn + delta_mn) / (D + 1) for a valid channel.
    """
    _check_oracle_cap(channel.n, max_n)
    d = 2**channel.n
    em_dag = pauli_matrix(m).conj().T
    en = pauli_matrix(n_label)
    total = 0.0 + 0.0j
    for J in range(d + 1):
        b = design_basis(channel.n, J)
        for k in range(d):
            v = b[:, k]
            op = em_dag @ np.outer(v, v.conj()) @ en
            total += v.conj() @ apply_channel(channel, op) @ v
    return complex(total / (d * (d + 1)))


def exact_ancilla_polarization(
    channel: Channel,
    m: PauliLabel,
    n_label: PauliLabel,
    axis: str,
    max_n: int = ORACLE_QUBIT_CAP,
) -> float:
    """Design-averaged expectation of sigma_axis (x) P_psi after the
    ancilla-assisted circuit for the (m, n_label) coefficient.

    Axis "x" recovers (D Re chi_mn + delta_mn)/(D+1); axis "y" recovers
    D Im chi_mn / (D+1).
    """
    _check_oracle_cap(channel.n, max_n)
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    sigma = _SIGMA_X if axis == "x" else _SIGMA_Y
    mod = modified_channel_offdiag(channel, m, n_label)
    d = 2**channel.n
    anc_in = np.array([[1, 0], [0, 0]], dtype=complex)
    total = 0.0
    for J in range(d + 1):
        b = design_basis(channel.n, J)
        for k in range(d):
            v = b[:, k]
            p_psi = np.outer(v, v.conj())
            out = apply_channel(mod, np.kron(anc_in, p_psi))
            obs = np.kron(sigma, p_psi)
            total += float(np.trace(obs @ out).real)
    return total / (d * (d + 1))


def haar_closed_form(op1: np.ndarray, op2: np.ndarray) -> complex:
    """Second-moment Haar average (Tr op1 Tr op2 + Tr op1 op2) / (D(D+1))."""
    op1 = np.asarray(op1, dtype=complex)
    op2 = np.asarray(op2, dtype=complex)
    d = op1.shape[0]
    if op1.shape != (d, d) or op2.shape != (d, d):
        raise ValueError("operands must be square matrices of equal dimension")
    return complex(
        (np.trace(op1) * np.trace(op2) + np.trace(op1 @ op2)) / (d * (d + 1))
    )


def trace_identity_residual(
    channel: Channel, pairs: list[tuple[PauliLabel, PauliLabel]] | None = None
) -> float:
    """Max deviation of Tr[E(E_m^dag E_n)] from D*delta_mn over label pairs.

    This is the trace-preservation condition contracted against chi; pairs
    defaults to all label pairs (quadratic in 4**n — keep n small).
    """
    d = 2**channel.n
    if pairs is None:
        labels = all_labels(channel.n)
        pairs = [(a, b) for a in labels for b in labels]
    worst = 0.0
    for m, n_label in pairs:
        op = pauli_matrix(m).conj().T @ pauli_matrix(n_label)
        val = complex(np.trace(apply_channel(channel, op)))
        want = d if m == n_label else 0.0
        worst = max(worst, abs(val - want))
    return worst


@dataclass(frozen=True)
class OracleReport:
    """Exact chi plus residuals of the identities the estimators rely on."""

    chi: ChiMatrix
    design_residual: float
    fidelity_residual: float
    offdiag_residual: float
    ancilla_residual: float

    @property
    def max_residual(self) -> float:
        return max(
            self.design_residual,
            self.fidelity_residual,
            self.offdiag_residual,
            self.ancilla_residual,
        )


def random_label(n: int, rng: np.random.Generator) -> PauliLabel:
    return label_from_index(n, int(rng.integers(0, 4**n)))


def random_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    d = 2**n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_channel(n: int, rng: np.random.Generator) -> KrausSet:
    """Half a Haar-ish unitary, half a random diagonal Pauli mixture."""
    d = 2**n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    w = rng.random(4**n)
    w /= w.sum()
    ops = [np.sqrt(0.5) * u]
    for a, wa in zip(all_labels(n), w):
        if wa > 0:
            ops.append(np.sqrt(0.5 * wa) * pauli_matrix(a))
    return KrausSet(n, tuple(ops))


def oracle_report(
    channel: Channel,
    samples: int = 5,
    seed: int = 0,
    max_n: int = ORACLE_QUBIT_CAP,
) -> OracleReport:
    """Exact chi and worst-case residuals over sampled labels/operators."""
    _check_oracle_cap(channel.n, max_n)
    rng = np.random.default_rng(seed)
    chi = exact_chi(channel, max_n)
    d = 2**channel.n

    design_res = 0.0
    for _ in range(samples):
        o1 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        o2 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        design_res = max(
            design_res, abs(design_average_survival(o1, o2) - haar_closed_form(o1, o2))
        )

    fid_res = 0.0
    for _ in range(samples):
        m = random_label(channel.n, rng)
        fid = exact_average_fidelity(modified_channel_diag(channel, m), max_n)
        want = (d * chi.entry(m, m).real + 1) / (d + 1)
        fid_res = max(fid_res, abs(fid - want))

    off_res = 0.0
    anc_res = 0.0
    for _ in range(samples):
        m = random_label(channel.n, rng)
        n_label = random_label(channel.n, rng)
        delta = 1.0 if m == n_label else 0.0
        want = (d * chi.entry(m, n_label) + delta) / (d + 1)
        off = exact_offdiag_average(channel, m, n_label, max_n)
        off_res = max(off_res, abs(off - want))
        px = exact_ancilla_polarization(channel, m, n_label, "x", max_n)
        py = exact_ancilla_polarization(channel, m, n_label, "y", max_n)
        anc_res = max(anc_res, abs(px - want.real), abs(py - want.imag))

    return OracleReport(chi, design_res, fid_res, off_res, anc_res)
