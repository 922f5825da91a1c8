"""State construction, validation, randomization and JSON (de)serialization."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

from .tensor import DenseOperator, PureState, reduce_pure

VALIDATION_TOL = 1e-10
RNG_ALGORITHM = "numpy PCG64 seeded by SeedSequence(seed, spawn_key=(stream, ...))"

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)


class StateValidationError(ValueError):
    """A state violates one of its invariants.

    ``invariant`` names the violated property and ``violation`` is the measured
    deviation.
    """

    def __init__(self, invariant: str, violation: float, detail: str = ""):
        self.invariant = invariant
        self.violation = violation
        msg = f"{invariant} invariant violated (measured violation {violation:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DensityMatrix(DenseOperator):
    """Hermitian, positive semidefinite, unit-trace operator on qubits."""

    def __post_init__(self):
        super().__post_init__()
        if any(d != 2 for d in self.dims):
            raise StateValidationError("qubit", float(max(self.dims) - 2), f"dims {self.dims} are not all 2")
        tol = VALIDATION_TOL
        asym = self.asymmetry()
        if asym > tol:
            raise StateValidationError("hermitian", asym)
        tr = np.trace(self.data)
        if abs(tr - 1.0) > tol:
            raise StateValidationError("trace", abs(tr - 1.0), f"trace = {tr.real!r}")
        herm = 0.5 * (self.data + self.data.conj().T)
        min_eig = float(np.linalg.eigvalsh(herm)[0])
        if min_eig < -tol:
            raise StateValidationError("positivity", -min_eig, f"min eigenvalue {min_eig!r}")

    @classmethod
    def from_operator(cls, op: DenseOperator) -> DensityMatrix:
        return cls(op.data, op.dims)

    @classmethod
    def from_pure(cls, psi: PureState) -> DensityMatrix:
        p = psi.projector()
        return cls(p.data, p.dims)

    def eigenvalues(self) -> np.ndarray:
        """Descending eigenvalues."""
        herm = 0.5 * (self.data + self.data.conj().T)
        return np.linalg.eigvalsh(herm)[::-1]

    def rank(self, tol: float = VALIDATION_TOL) -> int:
        return int(np.sum(self.eigenvalues() > tol))

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


State = Union[PureState, DensityMatrix]


@dataclass(frozen=True)
class RandomSource:
    """Reproducible random stream identified by ``(seed, stream)``.

    The same pair always yields the same draws. ``child(i)`` and
    ``generator(*sub)`` open independent sub-streams, used to hand separate
    streams to parallel work.
    """

    seed: int
    stream: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self, *sub: int) -> np.random.Generator:
        key = (int(self.stream),) + tuple(self.path) + tuple(int(s) for s in sub)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> RandomSource:
        return RandomSource(self.seed, self.stream, self.path + (int(index),))

    def with_stream(self, stream: int) -> RandomSource:
        return RandomSource(self.seed, stream)

    def identity(self) -> dict:
        out = {"seed": int(self.seed), "stream": int(self.stream), "algorithm": RNG_ALGORITHM}
        if self.path:
            out["path"] = list(self.path)
        return out


def haar_random_pure(n_qubits: int, rng: RandomSource) -> PureState:
    if not 1 <= n_qubits <= 10:
        raise ValueError(f"n_qubits must be in [1, 10], got {n_qubits}")
    g = rng.generator()
    d = 2**n_qubits
    vec = g.standard_normal(d) + 1j * g.standard_normal(d)
    return PureState.from_unnormalized(vec, (2,) * n_qubits)


def random_rank2_with_parent(rng: RandomSource) -> tuple[DensityMatrix, PureState]:
    """Rank <= 2 two-qubit state obtained by tracing qubit C out of a Haar 3-qubit state."""
    psi = haar_random_pure(3, rng)
    rho = reduce_pure(psi, [0, 1])
    return DensityMatrix(rho.data, rho.dims), psi


def random_rank2_state(rng: RandomSource) -> DensityMatrix:
    return random_rank2_with_parent(rng)[0]


def _ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=np.complex128)
    v[int(bits, 2)] = 1.0
    return v


_CANONICAL = {
    "bell_psiminus": lambda: _ket("01") - _ket("10"),
    "bell_phiplus": lambda: _ket("00") + _ket("11"),
    "product00": lambda: _ket("00"),
    "ghz": lambda: _ket("000") + _ket("111"),
    "w": lambda: _ket("001") + _ket("010") + _ket("100"),
}
CANONICAL_NAMES = tuple(_CANONICAL)


def canonical_state(name: str) -> PureState:
    try:
        vec = _CANONICAL[name]()
    except KeyError:
        raise ValueError(f"unknown canonical state {name!r}; expected one of {CANONICAL_NAMES}") from None
    n = int(np.log2(vec.size))
    return PureState.from_unnormalized(vec, (2,) * n)


def as_density(state: State) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return DensityMatrix.from_pure(state)
    return DensityMatrix(state.data, state.dims)


def spin_flip(rho: DenseOperator) -> DenseOperator:
    """(sigma_y x sigma_y) rho* (sigma_y x sigma_y), conjugation in the computational basis."""
    if rho.dims != (2, 2):
        raise ValueError(f"spin flip needs a two-qubit operator, got dims {rho.dims}")
    return DenseOperator(SIGMA_YY @ rho.data.conj() @ SIGMA_YY, rho.dims)


# -- serialization ---------------------------------------------------------


def _pairs(values: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in values.reshape(-1)]


def state_to_dict(state: State) -> dict:
    if isinstance(state, PureState):
        return {"kind": "pure", "dims": list(state.dims), "data": _pairs(state.amplitudes)}
    return {"kind": "density", "dims": list(state.dims), "data": _pairs(state.data)}


def dumps_state(state: State) -> str:
    """JSON text with every real written to 17 significant digits."""
    obj = state_to_dict(state)
    data = ", ".join(f"[{re:.17g}, {im:.17g}]" for re, im in obj["data"])
    return f'{{"kind": "{obj["kind"]}", "dims": {json.dumps(obj["dims"])}, "data": [{data}]}}\n'


def state_from_dict(obj: dict) -> State:
    try:
        kind = obj["kind"]
        dims = [int(d) for d in obj["dims"]]
        raw = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError("schema", float("nan"), f"malformed state file: {exc}") from exc
    if raw.ndim != 2 or raw.shape[1] != 2:
        raise StateValidationError("schema", float("nan"), "data must be a list of [re, im] pairs")
    if any(d != 2 for d in dims):
        raise StateValidationError("qubit", float(max(dims) - 2), f"dims {dims} contain a non-qubit subsystem")
    values = raw[:, 0] + 1j * raw[:, 1]
    d = int(np.prod(dims))
    if kind == "pure":
        if values.size != d:
            raise StateValidationError("schema", float(abs(values.size - d)), f"expected {d} amplitudes")
        norm = float(np.linalg.norm(values))
        if abs(norm - 1.0) > PureState.NORM_TOL:
            raise StateValidationError("norm", abs(norm - 1.0), f"norm = {norm!r}")
        return PureState(values, dims)
    if kind == "density":
        if values.size != d * d:
            raise StateValidationError("schema", float(abs(values.size - d * d)), f"expected {d * d} entries")
        return DensityMatrix(values.reshape(d, d), dims)
    raise StateValidationError("schema", float("nan"), f"unknown kind {kind!r}")


def save_state(state: State, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_state(state))


def load_state(path: str | os.PathLike) -> State:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StateValidationError("schema", float("nan"), f"invalid JSON: {exc}") from exc
    return state_from_dict(obj)
