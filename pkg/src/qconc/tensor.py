"""Dense operators on tensor products of small subsystems.

Subsystem ordering: the leftmost entry of ``dims`` is the most significant
digit of the row/column index, matching ``np.kron``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    def __init__(self, asymmetry: float, tol: float):
        self.asymmetry = asymmetry
        super().__init__(
            f"operator is not Hermitian: max |op - op^dag| = {asymmetry:.3e} > {tol:.1e}"
        )


class NotPositiveError(ValueError):
    def __init__(self, min_eigenvalue: float, tol: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} < -{tol:.1e}"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _check_dims(dims: Iterable[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("dims must be nonempty")
    if any(d < 2 for d in dims):
        raise DimensionError(f"every subsystem dimension must be >= 2, got {dims}")
    return dims


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Square complex matrix with an explicit subsystem dimension list."""

    data: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        data = _frozen(self.data)
        d = int(np.prod(dims))
        if data.shape != (d, d):
            raise DimensionError(f"matrix shape {data.shape} does not match dims {dims} (side {d})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def dag(self) -> DenseOperator:
        return DenseOperator(self.data.conj().T, self.dims)

    def asymmetry(self) -> float:
        """Largest entrywise deviation from Hermiticity."""
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.asymmetry() <= tol

    def expectation(self, state: DenseOperator) -> float:
        """Real part of Tr(state @ self)."""
        if state.dims != self.dims:
            raise DimensionError(f"dims mismatch: {state.dims} vs {self.dims}")
        return float(np.einsum("ij,ji->", state.data, self.data).real)

    def __matmul__(self, other: DenseOperator) -> DenseOperator:
        if not isinstance(other, DenseOperator):
            return NotImplemented
        if other.dims != self.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
        return DenseOperator(self.data @ other.data, self.dims)

    def __add__(self, other: DenseOperator) -> DenseOperator:
        if not isinstance(other, DenseOperator):
            return NotImplemented
        if other.dims != self.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
        return DenseOperator(self.data + other.data, self.dims)

    def __sub__(self, other: DenseOperator) -> DenseOperator:
        return self + (-1.0) * other

    def __mul__(self, scalar) -> DenseOperator:
        return DenseOperator(scalar * self.data, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> DenseOperator:
        return DenseOperator(self.data / scalar, self.dims)

    def __neg__(self) -> DenseOperator:
        return DenseOperator(-self.data, self.dims)

    def __repr__(self) -> str:
        return f"DenseOperator(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector with subsystem dimensions."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    NORM_TOL = 1e-12

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        if amps.shape[0] != int(np.prod(dims)):
            raise DimensionError(f"{amps.shape[0]} amplitudes do not match dims {dims}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > self.NORM_TOL:
            raise ValueError(f"state is not normalized: norm = {norm!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, vec, dims) -> PureState:
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        return cls(vec / np.linalg.norm(vec), dims)

    def projector(self) -> DenseOperator:
        return DenseOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def inner(self, other: PureState) -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def conj(self) -> PureState:
        return PureState(self.amplitudes.conj(), self.dims)

    def __repr__(self) -> str:
        return f"PureState(dims={self.dims})"


def kron(a: DenseOperator, b: DenseOperator, *more: DenseOperator) -> DenseOperator:
    out = DenseOperator(np.kron(a.data, b.data), a.dims + b.dims)
    for c in more:
        out = kron(out, c)
    return out


def kron_power(op: DenseOperator, n: int) -> DenseOperator:
    out = op
    for _ in range(n - 1):
        out = kron(out, op)
    return out


def identity(dims: Sequence[int]) -> DenseOperator:
    dims = tuple(dims)
    return DenseOperator(np.eye(int(np.prod(dims))), dims)


def partial_trace(op: DenseOperator, keep: Iterable[int]) -> DenseOperator:
    """Trace out every subsystem not listed in ``keep``; kept order follows ``dims``."""
    keep = sorted(set(int(k) for k in keep))
    n = op.n_subsystems
    if not keep:
        raise ValueError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"keep indices {keep} out of range for {n} subsystems")
    drop = [i for i in range(n) if i not in keep]
    t = op.data.reshape(op.dims + op.dims)
    # contract each dropped row index with its column index, highest first so
    # the remaining axis numbers stay valid
    for i in reversed(drop):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    kept_dims = tuple(op.dims[i] for i in keep)
    d = int(np.prod(kept_dims))
    return DenseOperator(t.reshape(d, d), kept_dims)


def reduce_pure(psi: PureState, keep: Iterable[int]) -> DenseOperator:
    """Reduced density operator of a pure state, without forming the full projector."""
    keep = sorted(set(int(k) for k in keep))
    n = len(psi.dims)
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"keep indices {keep} out of range for {n} subsystems")
    drop = [i for i in range(n) if i not in keep]
    t = psi.amplitudes.reshape(psi.dims).transpose(keep + drop)
    kept_dims = tuple(psi.dims[i] for i in keep)
    m = t.reshape(int(np.prod(kept_dims)), -1)
    return DenseOperator(m @ m.conj().T, kept_dims)


def _check_perm(perm: Sequence[int], n: int) -> list[int]:
    perm = [int(p) for p in perm]
    if len(perm) != n:
        raise DimensionError(f"permutation length {len(perm)} != number of subsystems {n}")
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of range({n})")
    return perm


def inverse_permutation(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for k, p in enumerate(perm):
        inv[p] = k
    return inv


def permute_subsystems(op: DenseOperator, perm: Sequence[int]) -> DenseOperator:
    """Relabel subsystems: subsystem ``k`` of the result is subsystem ``perm[k]`` of ``op``.

    Equivalent to ``P @ op @ P.conj().T`` with ``P = permutation_matrix(op.dims, perm)``.
    """
    n = op.n_subsystems
    perm = _check_perm(perm, n)
    t = op.data.reshape(op.dims + op.dims)
    t = t.transpose(perm + [n + p for p in perm])
    return DenseOperator(t.reshape(op.dim, op.dim), tuple(op.dims[p] for p in perm))


def permute_state(psi: PureState, perm: Sequence[int]) -> PureState:
    perm = _check_perm(perm, len(psi.dims))
    t = psi.amplitudes.reshape(psi.dims).transpose(perm)
    return PureState(t.reshape(-1), tuple(psi.dims[p] for p in perm))


def permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> DenseOperator:
    """0/1 unitary mapping |x_0 ... x_{n-1}> to |x_perm[0] ... x_perm[n-1]>."""
    dims = tuple(dims)
    perm = _check_perm(perm, len(dims))
    d = int(np.prod(dims))
    src = np.arange(d).reshape(dims).transpose(perm).reshape(-1)
    mat = np.zeros((d, d))
    mat[np.arange(d), src] = 1.0
    return DenseOperator(mat, tuple(dims[p] for p in perm))


def hermitian_eig(op: DenseOperator, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvector columns of a Hermitian operator."""
    asym = op.asymmetry()
    if asym > tol:
        raise NotHermitianError(asym, tol)
    h = 0.5 * (op.data + op.data.conj().T)
    vals, vecs = np.linalg.eigh(h)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def mat_sqrt_psd(op: DenseOperator, tol: float = HERMITIAN_TOL) -> DenseOperator:
    vals, vecs = hermitian_eig(op, tol)
    if vals[-1] < -tol:
        raise NotPositiveError(float(vals[-1]), tol)
    root = np.sqrt(np.clip(vals, 0.0, None))
    return DenseOperator((vecs * root) @ vecs.conj().T, op.dims)


def spectral_projectors(
    op: DenseOperator, zero_tol: float = 1e-10, cluster_tol: float = 1e-9
) -> tuple[np.ndarray, list[DenseOperator]]:
    """Distinct nonzero eigenvalues and the projectors onto their eigenspaces."""
    vals, vecs = hermitian_eig(op)
    groups: list[list[int]] = []
    for k, v in enumerate(vals):
        if abs(v) <= zero_tol:
            continue
        if groups and abs(vals[groups[-1][0]] - v) <= cluster_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    eigenvalues = np.array([vals[g].mean() for g in groups])
    projectors = [DenseOperator(vecs[:, g] @ vecs[:, g].conj().T, op.dims) for g in groups]
    return eigenvalues, projectors


def rank(op: DenseOperator, tol: float = 1e-10) -> int:
    """Number of eigenvalues with magnitude above ``tol`` (Hermitian input)."""
    vals, _ = hermitian_eig(op)
    return int(np.sum(np.abs(vals) > tol))


def operator_schmidt_rank(op: DenseOperator, n_left: int, tol: float = 1e-10) -> int:
    """Operator Schmidt rank across the cut after the first ``n_left`` subsystems."""
    dl = int(np.prod(op.dims[:n_left]))
    dr = int(np.prod(op.dims[n_left:]))
    t = op.data.reshape(dl, dr, dl, dr).transpose(0, 2, 1, 3).reshape(dl * dl, dr * dr)
    s = np.linalg.svd(t, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def frobenius(a: DenseOperator, b: DenseOperator | None = None) -> float:
    if b is None:
        return float(np.linalg.norm(a.data))
    return float(np.linalg.norm(a.data - b.data))
