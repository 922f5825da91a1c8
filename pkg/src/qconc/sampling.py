"""Shot-noise simulation of the multi-copy measurement groups.

Each group is measured on its own batch of i.i.d. copies. Counts are
multinomial in the group's outcome probabilities; Tr(rho rho~) and
Tr[(rho rho~)^2] are plug-in linear estimates and tau, C and the 3-tangle
follow through the clamped square roots. Uncertainty of the nonlinear
quantities comes from a shot-level parametric bootstrap (percentile method).
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._parallel import parallel_map
from .entanglement import Clamp, clamped_sqrt
from .observables import ObservableGroup, copies, enumerate_groups, t1_from_overlap
from .states import RandomSource, as_density
from .tensor import DenseOperator

PROBABILITY_CLAMP_TOL = 1e-10
RADICAND_ROUNDOFF = 1e-14
PROBABILITY_DEFECT_TOL = 1e-8
N_BOOTSTRAP = 1000
MIN_SHOTS = 100
QUANTITIES = ("t1", "t2", "tau", "concurrence", "three_tangle")

# child-stream index reserved for bootstrap resampling
_BOOTSTRAP_STREAM = 1_000_000


class ProbabilityDefectError(ValueError):
    pass


@dataclass
class ShotRecord:
    group: str
    counts: np.ndarray  # one entry per projector, "rest" last
    shots: int
    rng: dict

    def __post_init__(self):
        if int(self.counts.sum()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def counts_map(self) -> dict[str, int]:
        n = len(self.counts) - 1
        return {(str(k) if k < n else "rest"): int(c) for k, c in enumerate(self.counts)}

    def to_dict(self) -> dict:
        return {"group": self.group, "counts": self.counts_map(), "shots": self.shots, "rng": self.rng}


def outcome_probabilities(rho_total: DenseOperator, group: ObservableGroup) -> np.ndarray:
    """Born probabilities clamped to [0, 1] and renormalized, rest outcome last."""
    p = group.probabilities(rho_total)
    low, high = float(p.min()), float(p.max())
    if low < -PROBABILITY_DEFECT_TOL or high > 1.0 + PROBABILITY_DEFECT_TOL:
        raise ProbabilityDefectError(
            f"group {group.label!r}: probabilities outside [0, 1] by more than {PROBABILITY_DEFECT_TOL:g} "
            f"(min {low:.3e}, max {high:.3e})"
        )
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum()


def measure_group(rho_total: DenseOperator, group: ObservableGroup, shots: int, rng: RandomSource) -> ShotRecord:
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = outcome_probabilities(rho_total, group)
    counts = rng.generator().multinomial(int(shots), p)
    return ShotRecord(group.label, counts.astype(np.int64), int(shots), rng.identity())


@dataclass
class EstimateReport:
    quantity: str
    mean: float
    stderr: float
    ci95: tuple[float, float]
    shots_per_group: int
    scheme: str
    clamps: list = field(default_factory=list)
    rng: dict = field(default_factory=dict)
    n_bootstrap: int = N_BOOTSTRAP
    bootstrap_clamp_fraction: float = 0.0

    def within(self, value: float, n_sigma: float = 5.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.stderr

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ci95"] = list(self.ci95)
        return out


@dataclass
class Simulation:
    scheme: str
    records: list[ShotRecord]
    reports: dict[str, EstimateReport]
    relation: str

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "two_copy_relation": self.relation,
            "estimates": {q: r.to_dict() for q, r in self.reports.items()},
            "records": [r.to_dict() for r in self.records],
        }


def _scores(groups: Sequence[ObservableGroup]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    s1 = [g.t1_scores if g.t1_scores is not None else np.zeros(g.n_outcomes) for g in groups]
    s2 = [g.t2_scores() for g in groups]
    return s1, s2


def moments_from_frequencies(
    groups: Sequence[ObservableGroup], freqs: Sequence[np.ndarray], relation: str = "linear"
) -> tuple[float, float]:
    """Plug-in (t1, t2) from per-group outcome frequencies."""
    s1, s2 = _scores(groups)
    overlap = sum(float(f @ s) for f, s in zip(freqs, s1))
    t2 = sum(float(f @ s) for f, s in zip(freqs, s2))
    return t1_from_overlap(overlap, relation), t2


def _snap(radicand: float, scale: float) -> float:
    # a difference of O(scale) terms below this is cancellation noise, and its
    # square root (~1e-8) would otherwise masquerade as signal
    return 0.0 if abs(radicand) <= RADICAND_ROUNDOFF * scale else radicand


def derived_quantities(t1: float, t2: float, clamps: list | None = None) -> dict[str, float]:
    """tau, C and 3-tangle from moment estimates, clamping negative radicands to 0."""
    tau = clamped_sqrt(_snap(2.0 * (t1 * t1 - t2), max(t1 * t1, abs(t2))), "tau", tol=None, clamps=clamps)
    c = clamped_sqrt(_snap(t1 - tau, max(abs(t1), tau)), "concurrence", tol=None, clamps=clamps)
    return {"t1": t1, "t2": t2, "tau": tau, "concurrence": c, "three_tangle": 2.0 * tau}


def infinite_shot_estimates(rho, scheme: str, relation: str = "linear") -> dict[str, float]:
    """The estimator evaluated at exact outcome probabilities."""
    rho = as_density(rho)
    groups = enumerate_groups(scheme)
    totals = {n: copies(rho, n) for n in {g.n_copies for g in groups}}
    freqs = [outcome_probabilities(totals[g.n_copies], g) for g in groups]
    return derived_quantities(*moments_from_frequencies(groups, freqs, relation))


def _allocation(groups: Sequence[ObservableGroup], shots_per_group, allocation) -> list[int]:
    if allocation is None:
        return [int(shots_per_group)] * len(groups)
    if isinstance(allocation, Mapping):
        return [int(allocation[g.label]) for g in groups]
    shots = [int(s) for s in allocation]
    if len(shots) != len(groups):
        raise ValueError(f"allocation has {len(shots)} entries for {len(groups)} groups")
    return shots


def _percentile_ci(samples: np.ndarray, point: float) -> tuple[float, float]:
    lo, hi = np.percentile(samples, [2.5, 97.5])
    return float(min(lo, point)), float(max(hi, point))


def simulate(
    rho,
    scheme: str,
    shots_per_group: int,
    rng: RandomSource,
    allocation=None,
    relation: str = "linear",
    n_bootstrap: int = N_BOOTSTRAP,
) -> Simulation:
    """Sample every group of ``scheme`` and estimate all five quantities."""
    rho = as_density(rho)
    if rho.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got dims {rho.dims}")
    groups = enumerate_groups(scheme)
    shots = _allocation(groups, shots_per_group, allocation)
    if min(shots) < MIN_SHOTS:
        raise ValueError(f"every group needs at least {MIN_SHOTS} shots, got {min(shots)}")
    totals = {n: copies(rho, n) for n in {g.n_copies for g in groups}}
    records = parallel_map(
        lambda k: measure_group(totals[groups[k].n_copies], groups[k], shots[k], rng.child(k)),
        range(len(groups)),
    )
    freqs = [r.frequencies() for r in records]
    s1, s2 = _scores(groups)

    clamps: list[Clamp] = []
    t1, t2 = moments_from_frequencies(groups, freqs, relation)
    point = derived_quantities(t1, t2, clamps)

    # multinomial variance of the linear pieces
    var_overlap = sum(float(f @ s**2 - (f @ s) ** 2) / n for f, s, n in zip(freqs, s1, shots))
    var_t2 = sum(float(f @ s**2 - (f @ s) ** 2) / n for f, s, n in zip(freqs, s2, shots))
    se_t1 = math.sqrt(max(var_overlap, 0.0))
    if relation == "sqrt":
        se_t1 = se_t1 / (2.0 * t1) if t1 > 0 else math.inf

    gen = rng.child(_BOOTSTRAP_STREAM).generator()
    boot_overlap = np.zeros(n_bootstrap)
    boot_t2 = np.zeros(n_bootstrap)
    for f, a, b, n in zip(freqs, s1, s2, shots):
        draws = gen.multinomial(n, f, size=n_bootstrap) / n
        boot_overlap += draws @ a
        boot_t2 += draws @ b
    boot_t1 = boot_overlap if relation == "linear" else np.sqrt(np.clip(boot_overlap, 0.0, None))
    rad_tau = 2.0 * (boot_t1**2 - boot_t2)
    boot_tau = np.sqrt(np.clip(rad_tau, 0.0, None))
    rad_c = boot_t1 - boot_tau
    boot_c = np.sqrt(np.clip(rad_c, 0.0, None))
    boot = {"t1": boot_t1, "t2": boot_t2, "tau": boot_tau, "concurrence": boot_c, "three_tangle": 2.0 * boot_tau}
    clamp_frac = {
        "t1": 0.0,
        "t2": 0.0,
        "tau": float(np.mean(rad_tau < 0)),
        "concurrence": float(np.mean((rad_c < 0) | (rad_tau < 0))),
        "three_tangle": float(np.mean(rad_tau < 0)),
    }
    clamp_of = {
        "t1": [],
        "t2": [],
        "tau": [c for c in clamps if c.quantity == "tau"],
        "concurrence": clamps,
        "three_tangle": [c for c in clamps if c.quantity == "tau"],
    }
    stderr = {"t1": se_t1, "t2": math.sqrt(max(var_t2, 0.0))}
    reports = {}
    for q in QUANTITIES:
        se = stderr.get(q, float(np.std(boot[q], ddof=1)))
        reports[q] = EstimateReport(
            quantity=q,
            mean=point[q],
            stderr=se,
            ci95=_percentile_ci(boot[q], point[q]),
            shots_per_group=int(shots_per_group),
            scheme=scheme,
            clamps=[asdict(c) for c in clamp_of[q]],
            rng=rng.identity(),
            n_bootstrap=n_bootstrap,
            bootstrap_clamp_fraction=clamp_frac[q],
        )
    return Simulation(scheme, records, reports, relation)


def estimate_moments(rho, scheme, shots_per_group, rng, **kw) -> tuple[EstimateReport, EstimateReport]:
    sim = simulate(rho, scheme, shots_per_group, rng, **kw)
    return sim.reports["t1"], sim.reports["t2"]


def estimate_concurrence(rho, scheme, shots_per_group, rng, **kw) -> EstimateReport:
    return simulate(rho, scheme, shots_per_group, rng, **kw).reports["concurrence"]


def estimate_three_tangle(rho_ab, scheme, shots_per_group, rng, **kw) -> EstimateReport:
    return simulate(rho_ab, scheme, shots_per_group, rng, **kw).reports["three_tangle"]


def write_shot_csv(records: Sequence[ShotRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "projector_index", "count"])
        for rec in records:
            for k, c in rec.counts_map().items():
                w.writerow([rec.group, k, c])
