"""Frontier estimators: success rate, efficiency, structural novelty, PDC and CDR."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

DEFAULT_TAU = 0.7


class UndefinedInput(ValueError):
    """A metric was asked for a quantity its definition leaves undefined."""


@dataclass(frozen=True)
class Signature:
    """Structural fingerprint of a solved episode."""

    modules: tuple  # sorted multiset of module ids in the final artefact
    skeleton: str  # one symbol per executed action: c/r/m/t/p

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(sorted(self.modules)))

    @classmethod
    def of(cls, result) -> Signature:
        return cls(result.modules, result.skeleton())


@dataclass(frozen=True)
class EpisodeRecord:
    solved: bool
    steps: int
    budget: int
    signature: Optional[Signature] = None


@dataclass
class LevelRecords:
    level: int
    episodes: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.episodes)

    @property
    def successes(self) -> int:
        return sum(1 for e in self.episodes if e.solved)


@dataclass
class PhaseResult:
    phase_time: float
    label: str
    levels: list  # LevelRecords, ordered by level

    def level(self, level: int) -> LevelRecords:
        for rec in self.levels:
            if rec.level == level:
                return rec
        raise KeyError(level)

    def solved_signatures(self) -> list:
        return [e.signature for rec in self.levels for e in rec.episodes if e.solved]


def success_rate(records: Sequence[EpisodeRecord]) -> float:
    if len(records) == 0:
        raise UndefinedInput("success rate needs at least one instance")
    return sum(1 for r in records if r.solved) / len(records)


def efficiency(records: Sequence[EpisodeRecord]) -> Optional[float]:
    """Mean of 1 - steps/B over solved episodes; None when nothing was solved."""
    solved = [r for r in records if r.solved]
    if not solved:
        return None
    return sum(1.0 - r.steps / r.budget for r in solved) / len(solved)


def multiset_jaccard(a: Sequence, b: Sequence) -> float:
    ca, cb = Counter(a), Counter(b)
    union = sum((ca | cb).values())
    if union == 0:
        return 1.0
    return sum((ca & cb).values()) / union


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def skeleton_distance(a: str, b: str) -> float:
    """Levenshtein distance normalised by the longer skeleton; 0 for two empty ones."""
    longest = max(len(a), len(b))
    return 0.0 if longest == 0 else levenshtein(a, b) / longest


def similarity(s1: Signature, s2: Signature, module_weight: float = 0.5) -> float:
    """Blend of module-multiset Jaccard and skeleton edit similarity, in [0, 1].

    1 - similarity is not a metric in general (multiset Jaccard is blended in);
    only the skeleton component's distance satisfies the triangle inequality.
    """
    if not 0.0 <= module_weight <= 1.0:
        raise ValueError("module_weight must lie in [0, 1]")
    jac = multiset_jaccard(s1.modules, s2.modules)
    edit = 1.0 - skeleton_distance(s1.skeleton, s2.skeleton)
    return module_weight * jac + (1.0 - module_weight) * edit


class NoveltyBaseline:
    """Previously observed solution signatures; only ever grows."""

    def __init__(self, signatures: Iterable[Signature] = ()):
        self._signatures: set = set(signatures)

    def __len__(self) -> int:
        return len(self._signatures)

    def __iter__(self):
        return iter(sorted(self._signatures, key=lambda s: (s.modules, s.skeleton)))

    def fold(self, signatures: Iterable[Signature]) -> None:
        self._signatures.update(signatures)

    def novelty_of(self, sig: Signature, module_weight: float = 0.5) -> float:
        """1 - max similarity to the baseline; 1 when the baseline is empty."""
        if not self._signatures:
            return 1.0
        return 1.0 - max(similarity(sig, b, module_weight) for b in self._signatures)


def novelty(records: Sequence[EpisodeRecord], baseline: NoveltyBaseline,
            module_weight: float = 0.5) -> Optional[float]:
    """Mean novelty of solved episodes against a frozen baseline; None if none solved."""
    solved = [r for r in records if r.solved]
    if not solved:
        return None
    return sum(baseline.novelty_of(r.signature, module_weight) for r in solved) / len(solved)


def pdc(rates: Sequence[float], tau: float = DEFAULT_TAU) -> int:
    """Highest 1-based level whose success rate is >= tau; 0 if none qualifies.

    ``rates[i]`` is the success rate at level i + 1. The highest qualifying
    level counts even when a lower level dips below tau.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    best = 0
    for level, rate in enumerate(rates, start=1):
        if rate >= tau:
            best = level
    return best


def cdr(phases: Sequence[tuple]) -> float:
    """(PDC at the last phase - PDC at the first) / (t_last - t_first)."""
    if len(phases) < 2:
        raise UndefinedInput("ceiling drift needs at least two phases")
    (t1, p1), (tn, pn) = phases[0], phases[-1]
    if tn == t1:
        raise UndefinedInput("first and last phase share the same time")
    return (pn - p1) / (tn - t1)


def drift_slope(phases: Sequence[tuple]) -> float:
    """Least-squares slope of PDC over phase time.

    An extension beside the endpoint drift rate; it is not reported unless
    explicitly requested.
    """
    if len(phases) < 2:
        raise UndefinedInput("drift slope needs at least two phases")
    ts = [float(t) for t, _ in phases]
    ps = [float(p) for _, p in phases]
    mt, mp = sum(ts) / len(ts), sum(ps) / len(ps)
    var = sum((t - mt) ** 2 for t in ts)
    if var == 0:
        raise UndefinedInput("all phases share the same time")
    return sum((t - mt) * (p - mp) for t, p in zip(ts, ps)) / var


@dataclass
class FrontierSummary:
    tau: float
    levels: list
    phase_times: list
    phase_labels: list
    curves: list  # per phase: success rate per level
    pdc_per_phase: list
    cdr: Optional[float]
    novelty_series: list  # per phase: mean novelty over solved episodes, or None
    level_novelty: list  # per phase: per level mean novelty, or None
    efficiency: list  # per phase: per level efficiency, or None
    drift_slope: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "tau": self.tau,
            "levels": self.levels,
            "phase_times": self.phase_times,
            "phase_labels": self.phase_labels,
            "curves": self.curves,
            "pdc_per_phase": self.pdc_per_phase,
            "cdr": self.cdr,
            "novelty_series": self.novelty_series,
            "level_novelty": self.level_novelty,
            "efficiency": self.efficiency,
        }
        if self.drift_slope is not None:
            out["drift_slope_lstsq"] = self.drift_slope
        return out


def frontier_curves(run: Sequence[PhaseResult], tau: float = DEFAULT_TAU,
                    module_weight: float = 0.5, with_drift_slope: bool = False) -> FrontierSummary:
    """Everything behind the frontier and ceiling-vs-novelty plots.

    The novelty baseline starts empty and, after each phase is scored against
    it, absorbs that phase's solved signatures in one batch.
    """
    if not run:
        raise UndefinedInput("no phases to summarise")
    levels = [rec.level for rec in run[0].levels]
    for phase in run:
        if [rec.level for rec in phase.levels] != levels:
            raise ValueError("phases were evaluated on different ladders")
        if [rec.N for rec in phase.levels] != [rec.N for rec in run[0].levels]:
            raise ValueError("phases were evaluated with different N")
    baseline = NoveltyBaseline()
    curves, pdcs, nov_series, level_nov, eff = [], [], [], [], []
    for phase in run:
        rates = [success_rate(rec.episodes) for rec in phase.levels]
        curves.append(rates)
        pdcs.append(pdc(rates, tau))
        level_nov.append([novelty(rec.episodes, baseline, module_weight) for rec in phase.levels])
        eff.append([efficiency(rec.episodes) for rec in phase.levels])
        solved = [e for rec in phase.levels for e in rec.episodes if e.solved]
        nov_series.append(novelty(solved, baseline, module_weight))
        baseline.fold(e.signature for e in solved)
    points = [(p.phase_time, v) for p, v in zip(run, pdcs)]
    drift = cdr(points) if len(run) >= 2 else None
    slope = drift_slope(points) if with_drift_slope and len(run) >= 2 else None
    return FrontierSummary(
        tau=tau,
        levels=levels,
        phase_times=[p.phase_time for p in run],
        phase_labels=[p.label for p in run],
        curves=curves,
        pdc_per_phase=pdcs,
        cdr=drift,
        novelty_series=nov_series,
        level_novelty=level_nov,
        efficiency=eff,
        drift_slope=slope,
    )
