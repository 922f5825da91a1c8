"""Concurrence and 3-tangle: trace-moment formulas plus two independent oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix, as_density, spin_flip
from .tensor import DenseOperator, PureState, mat_sqrt_psd

CLAMP_TOL = 1e-10
SPECTRUM_ROUNDOFF = 1e-14  # relative to the largest eigenvalue of rho rho~


class NegativeRadicandError(ValueError):
    def __init__(self, quantity: str, radicand: float, tol: float):
        self.quantity = quantity
        self.radicand = radicand
        super().__init__(
            f"radicand for {quantity} is {radicand:.3e}, below -{tol:.1e}; input is not rank 2 or is corrupted"
        )


@dataclass(frozen=True)
class Clamp:
    """A square-root argument that was slightly negative and set to zero."""

    quantity: str
    radicand: float


def clamped_sqrt(x: float, quantity: str, tol: float | None = CLAMP_TOL, clamps: list | None = None) -> float:
    """sqrt(max(0, x)); raises if ``x < -tol`` unless ``tol`` is None."""
    if x >= 0:
        return math.sqrt(x)
    if tol is not None and x < -tol:
        raise NegativeRadicandError(quantity, x, tol)
    if clamps is not None:
        clamps.append(Clamp(quantity, float(x)))
    return 0.0


@dataclass(frozen=True)
class MomentPair:
    """t1 = Tr(rho rho~) and t2 = Tr[(rho rho~)^2]."""

    t1: float
    t2: float

    @property
    def radicand(self) -> float:
        return self.t1**2 - self.t2


def _two_qubit(rho) -> DensityMatrix:
    rho = as_density(rho)
    if rho.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got dims {rho.dims}")
    return rho


def wootters_concurrence(rho) -> float:
    """max(0, l1 - l2 - l3 - l4) with l_i the descending square roots of eig(rho rho~).

    Uses the Hermitian form sqrt(rho) rho~ sqrt(rho), which has the same spectrum
    as rho rho~.
    """
    lam = spin_flip_spectrum(rho)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def spin_flip_spectrum(rho) -> np.ndarray:
    """Descending square roots of the eigenvalues of rho rho~."""
    rho = _two_qubit(rho)
    root = mat_sqrt_psd(rho)
    r = root @ spin_flip(rho) @ root
    herm = 0.5 * (r.data + r.data.conj().T)
    ev = np.linalg.eigvalsh(herm)
    # eigenvalues at roundoff level are zero; their square roots (~1e-8) are not
    floor = SPECTRUM_ROUNDOFF * max(float(ev[-1]), 0.0)
    return np.sqrt(np.where(ev > floor, ev, 0.0))[::-1]


def trace_moments(rho) -> MomentPair:
    rho = _two_qubit(rho)
    x = rho.data @ spin_flip(rho).data
    t1 = np.trace(x)
    t2 = np.einsum("ij,ji->", x, x)
    if abs(t1.imag) > 1e-12 or abs(t2.imag) > 1e-12:
        raise ValueError(f"trace moments have imaginary parts {t1.imag:.3e}, {t2.imag:.3e}")
    return MomentPair(float(t1.real), float(t2.real))


def tau_from_moments(m: MomentPair, clamps: list | None = None, tol: float | None = CLAMP_TOL) -> float:
    """sqrt(2 (t1^2 - t2)), which is 2 l1 l2 for rank-2 states."""
    return clamped_sqrt(2.0 * m.radicand, "tau", tol, clamps)


def concurrence_from_moments(m: MomentPair, clamps: list | None = None, tol: float | None = CLAMP_TOL) -> float:
    tau = tau_from_moments(m, clamps, tol)
    return clamped_sqrt(m.t1 - tau, "concurrence", tol, clamps)


def three_tangle_from_reduced(rho_ab, clamps: list | None = None) -> float:
    return 2.0 * tau_from_moments(trace_moments(rho_ab), clamps)


def hyperdeterminant(psi: PureState) -> complex:
    """Cayley hyperdeterminant d1 - 2 d2 + 4 d3 of the 2x2x2 amplitude tensor."""
    if psi.dims != (2, 2, 2):
        raise ValueError(f"expected a three-qubit state, got dims {psi.dims}")
    a = psi.amplitudes.reshape(2, 2, 2)
    a000, a001, a010, a011 = a[0, 0, 0], a[0, 0, 1], a[0, 1, 0], a[0, 1, 1]
    a100, a101, a110, a111 = a[1, 0, 0], a[1, 0, 1], a[1, 1, 0], a[1, 1, 1]
    d1 = (a000 * a111) ** 2 + (a001 * a110) ** 2 + (a010 * a101) ** 2 + (a100 * a011) ** 2
    d2 = (
        a000 * a111 * a011 * a100
        + a000 * a111 * a101 * a010
        + a000 * a111 * a110 * a001
        + a011 * a100 * a101 * a010
        + a011 * a100 * a110 * a001
        + a101 * a010 * a110 * a001
    )
    d3 = a000 * a110 * a101 * a011 + a111 * a001 * a010 * a100
    return complex(d1 - 2 * d2 + 4 * d3)


def three_tangle_hyperdet(psi: PureState) -> float:
    return float(4.0 * abs(hyperdeterminant(psi)))


def local_unitary(op: DenseOperator | PureState, unitaries) -> DenseOperator | PureState:
    """Apply one single-subsystem unitary per subsystem."""
    u = unitaries[0]
    for v in unitaries[1:]:
        u = np.kron(u, v)
    if isinstance(op, PureState):
        return PureState(u @ op.amplitudes, op.dims)
    return type(op)(u @ op.data @ u.conj().T, op.dims)
