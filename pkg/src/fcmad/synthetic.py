"""Seeded generators for synthetic multivariate series with known anomalies.

The pseudo-ECG is not a physiological simulator. Each variable is a beat
train whose beat is a fixed sum of three Gaussian bumps (P, QRS and T-like)
sitting on a constant baseline, sampled at ``fs`` Hz and perturbed by
Gaussian noise.

Defaults are tuned so that windows of about five samples still resolve the
QRS bump: a low sample rate, widened bumps and a baseline well away from
zero, which keeps a multiplicative amplitude fault visible after z-scoring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError
from .series import MultiSeries

# (phase centre, relative width, amplitude) of the P, QRS and T bumps
BEAT_WAVES = ((0.20, 0.07, 0.15), (0.40, 0.036, 1.00), (0.65, 0.12, 0.30))
DEFAULT_FS = 20.0
DEFAULT_NOISE = 0.02
DEFAULT_BASELINE = 3.0


@dataclass(frozen=True)
class Injection:
    start: int
    end: int
    kind: str
    factor: float | None
    variable: int | None = None


@dataclass
class InjectionLog:
    records: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __add__(self, other: "InjectionLog") -> "InjectionLog":
        return InjectionLog(self.records + other.records)

    def intervals(self) -> list[tuple[int, int]]:
        return [(r.start, r.end) for r in self.records]

    def labels(self, p: int) -> np.ndarray:
        """Boolean per-timestamp ground truth."""
        out = np.zeros(p, dtype=bool)
        for r in self.records:
            out[r.start:r.end] = True
        return out


def beat_period(rate: float, fs: float = DEFAULT_FS) -> int:
    """Samples per beat for a heart rate in beats per minute."""
    return int(round(60.0 * fs / rate))


def beat_template(period: int, waves=BEAT_WAVES) -> np.ndarray:
    phase = np.arange(period) / period
    beat = np.zeros(period)
    for centre, width, amp in waves:
        # wrap so bumps near the period edge stay periodic
        d = (phase - centre + 0.5) % 1.0 - 0.5
        beat += amp * np.exp(-0.5 * (d / width) ** 2)
    return beat


def gen_pseudo_ecg(
    p: int = 500,
    rates=(60, 80, 90),
    seed=0,
    fs: float = DEFAULT_FS,
    noise: float = DEFAULT_NOISE,
    baseline: float = DEFAULT_BASELINE,
    random_phase: bool = True,
    waves=BEAT_WAVES,
) -> MultiSeries:
    """One beat train per heart rate, length ``p``."""
    if p < 2:
        raise InvalidSpecError("series length must be >= 2")
    rates = list(rates)
    if not rates:
        raise InvalidSpecError("need at least one heart rate")
    rng = np.random.default_rng(seed)
    cols = []
    for rate in rates:
        period = beat_period(rate, fs)
        if period < 2:
            raise InvalidSpecError(f"rate {rate} bpm is too fast for fs={fs}")
        offset = int(rng.integers(period)) if random_phase else 0
        beat = beat_template(period, waves)
        cols.append(baseline + beat[(np.arange(p) + offset) % period])
    values = np.column_stack(cols)
    if noise > 0:
        values = values + noise * rng.standard_normal(values.shape)
    return MultiSeries(values, tuple(f"ecg{int(r)}" for r in rates))


def random_intervals(p: int, count: int, length: int, seed=0, margin: int = 0, gap: int = 0) -> list:
    """``count`` non-overlapping ``[start, start + length)`` intervals.

    Intervals keep ``margin`` samples from both series ends and at least
    ``gap`` samples between each other.
    """
    rng = np.random.default_rng(seed)
    slack = p - 2 * margin - count * length - (count - 1) * gap
    if slack < 0:
        raise InvalidSpecError(f"cannot place {count} intervals of length {length} in {p} samples")
    # stars and bars: split the slack into count + 1 random gaps
    cuts = np.sort(rng.integers(0, slack + 1, size=count))
    starts = margin + cuts + np.arange(count) * (length + gap)
    return [(int(s), int(s) + length) for s in starts]


def _check_intervals(intervals, p, allow_overlap, min_length=1):
    spans = sorted((int(a), int(b)) for a, b in intervals)
    for a, b in spans:
        if not 0 <= a < b <= p:
            raise InvalidSpecError(f"interval [{a}, {b}) outside series of length {p}")
        if b - a < min_length:
            raise InvalidSpecError(f"interval [{a}, {b}) shorter than {min_length}")
    if not allow_overlap:
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            if a1 < b0:
                raise InvalidSpecError(f"intervals [{a0}, {b0}) and [{a1}, {b1}) overlap")


def _draw(rng, lo, hi, exclude):
    while True:
        f = float(rng.uniform(lo, hi))
        if exclude is None or not exclude[0] <= f <= exclude[1]:
            return f


def _targets(rng, series, intervals, variables):
    if variables is None:
        return [int(v) for v in rng.integers(series.n, size=len(intervals))]
    if np.isscalar(variables):
        return [int(variables)] * len(intervals)
    variables = [int(v) for v in variables]
    if len(variables) != len(intervals):
        raise InvalidSpecError("need one variable per interval")
    return variables


def inject_amplitude(
    series: MultiSeries,
    intervals,
    factor_range=(0.0, 3.0),
    seed=0,
    variables=None,
    exclude=None,
    allow_overlap: bool = False,
) -> tuple[MultiSeries, InjectionLog]:
    """Multiply each interval of one variable by a random factor.

    ``variables`` picks the affected variable per interval (random when
    ``None``). Factors inside the closed range ``exclude`` are redrawn.
    """
    _check_intervals(intervals, series.p, allow_overlap)
    rng = np.random.default_rng(seed)
    targets = _targets(rng, series, intervals, variables)
    values = series.values.copy()
    log = InjectionLog()
    for (a, b), var in zip(intervals, targets):
        f = _draw(rng, factor_range[0], factor_range[1], exclude)
        values[a:b, var] = values[a:b, var] * f
        log.records.append(Injection(int(a), int(b), "amplitude", f, var))
    return series.with_values(values), log


def compress_segment(x, factor: float) -> np.ndarray:
    """Speed a segment up by ``factor``: resample to ``len/factor`` samples, tile back."""
    x = np.asarray(x, dtype=float)
    L = x.size
    short = max(2, int(round(L / factor)))
    grid = np.linspace(0.0, L - 1.0, short)
    squeezed = np.interp(grid, np.arange(L), x)
    reps = -(-L // short)
    return np.tile(squeezed, reps)[:L]


def inject_shape(
    series: MultiSeries,
    intervals,
    freq_factor_range=(1.0, 3.0),
    seed=0,
    variables=None,
    min_factor=None,
    allow_overlap: bool = False,
) -> tuple[MultiSeries, InjectionLog]:
    """Raise the frequency of each interval of one variable by a random factor."""
    _check_intervals(intervals, series.p, allow_overlap, min_length=4)
    rng = np.random.default_rng(seed)
    targets = _targets(rng, series, intervals, variables)
    values = series.values.copy()
    log = InjectionLog()
    exclude = None if min_factor is None else (freq_factor_range[0], min_factor - 1e-12)
    for (a, b), var in zip(intervals, targets):
        f = _draw(rng, freq_factor_range[0], freq_factor_range[1], exclude)
        values[a:b, var] = compress_segment(values[a:b, var], f)
        log.records.append(Injection(int(a), int(b), "shape", f, var))
    return series.with_values(values), log


def gen_ecg_experiment(
    injection: str = "amplitude",
    seed=0,
    p: int = 500,
    rates=(60, 80, 90),
    count: int = 3,
    length: int = 5,
    factor_range=None,
) -> tuple[MultiSeries, InjectionLog]:
    """Pseudo-ECG with ``count`` injected faults spread over the variables.

    Amplitude factors come from ``[0, 3]`` with ``[0.8, 1.2]`` redrawn;
    frequency factors from ``[1, 3]`` with values below 1.5 redrawn. Faults
    keep 10 samples from the ends and from each other, and consecutive
    faults land on different variables.
    """
    series = gen_pseudo_ecg(p, rates, seed=seed)
    if injection == "none":
        return series, InjectionLog()
    intervals = random_intervals(series.p, count, length, seed=seed, margin=10, gap=10)
    order = np.random.default_rng(seed).permutation(count)
    variables = [int(v) % series.n for v in order]
    if injection == "amplitude":
        return inject_amplitude(
            series, intervals, factor_range or (0.0, 3.0), seed=seed, variables=variables, exclude=(0.8, 1.2)
        )
    if injection == "shape":
        return inject_shape(series, intervals, factor_range or (1.0, 3.0), seed=seed, variables=variables, min_factor=1.5)
    raise InvalidSpecError(f"unknown injection {injection!r}")


# (level, sine amplitude, cycles per block) of the six relational templates
RELATIONAL_TEMPLATES = (
    (0.0, 1.0, 1),
    (2.0, 1.0, 1),
    (4.0, 1.0, 1),
    (-2.0, 1.0, 1),
    (-4.0, 1.0, 1),
    (-6.0, 1.0, 1),
)
RELATIONAL_LAYOUT = (
    (1,) * 5 + (2,) * 6 + (3,) * 5,
    (4,) * 5 + (5,) * 5 + (6,) * 6,
)


def relational_block(template: int, block: int, templates=RELATIONAL_TEMPLATES) -> np.ndarray:
    level, amp, cycles = templates[template - 1]
    t = np.arange(block)
    return level + amp * np.sin(2 * np.pi * cycles * t / block)


def gen_relational(
    seed=0, block: int = 5, noise: float = DEFAULT_NOISE, layout=RELATIONAL_LAYOUT
) -> tuple[MultiSeries, InjectionLog]:
    """Two variables built from six block templates with one mismatched pairing.

    Templates pair as 1-4, 2-5 and 3-6. In the default layout block 10
    (0-based) carries template 2 over template 6, the only block whose
    pairing breaks the rule; each variable on its own is anomaly-free.
    """
    pairs = {1: 4, 2: 5, 3: 6}
    top, bottom = layout
    if len(top) != len(bottom):
        raise InvalidSpecError("both variables need the same number of blocks")
    rng = np.random.default_rng(seed)
    cols = [np.concatenate([relational_block(k, block) for k in seq]) for seq in layout]
    values = np.column_stack(cols)
    if noise > 0:
        values = values + noise * rng.standard_normal(values.shape)
    log = InjectionLog()
    for i, (a, b) in enumerate(zip(top, bottom)):
        if pairs.get(a) != b:
            log.records.append(Injection(i * block, (i + 1) * block, "relational", None))
    return MultiSeries(values, ("signal1", "signal2")), log


def gen_regime_pair(
    seed=0,
    blocks: int = 40,
    block: int = 10,
    state_share: float = 0.6,
    factors=(2.0, 2.5, 3.0, 3.5),
) -> tuple[MultiSeries, InjectionLog]:
    """Two variables where only the first carries cluster structure.

    Variable 1 switches block-wise between two levels under unit-variance
    noise, ``state_share`` setting the level's share of the amplitude.
    Variable 2 is white noise with one amplitude fault per factor, each
    filling a whole block. Unweighted clustering tends to collapse onto the
    grand mean here because the structureless variable dilutes the level
    split; weighting the first variable recovers it.
    """
    if not 0.0 < state_share < 1.0:
        raise InvalidSpecError("state_share must lie in (0, 1)")
    if len(factors) > blocks - 2:
        raise InvalidSpecError("too many faults for the number of blocks")
    rng = np.random.default_rng(seed)
    p = blocks * block
    levels = np.repeat(rng.choice([-1.0, 1.0], blocks), block)
    x1 = state_share * levels + np.sqrt(1.0 - state_share ** 2) * rng.standard_normal(p)
    x2 = rng.standard_normal(p)
    # first and last blocks stay clean
    where = np.sort(rng.choice(np.arange(1, blocks - 1), len(factors), replace=False))
    log = InjectionLog()
    for b, f in zip(where, rng.permutation(np.asarray(factors, dtype=float))):
        x2[b * block:(b + 1) * block] *= f
        log.records.append(Injection(int(b * block), int((b + 1) * block), "amplitude", float(f), 1))
    return MultiSeries(np.column_stack([x1, x2]), ("regime", "noise")), log


def inject_twins(
    series: MultiSeries,
    starts,
    length: int,
    factor: float,
    variable: int = 0,
    context: int = 0,
) -> tuple[MultiSeries, InjectionLog]:
    """Scale one segment and paste an exact copy of it elsewhere.

    The segment at ``starts[0]`` is multiplied by ``factor``; then the span
    ``[start - context, start + length + context)`` around it is copied over
    every other start, so each copy and its surroundings match bit for bit.
    """
    first, *rest = (int(s) for s in starts)
    spans = [(s - context, s + length + context) for s in (first, *rest)]
    _check_intervals(spans, series.p, allow_overlap=False)
    values = series.values.copy()
    values[first:first + length, variable] *= factor
    a0, b0 = spans[0]
    log = InjectionLog([Injection(first, first + length, "amplitude", float(factor), variable)])
    for s, (a, b) in zip(rest, spans[1:]):
        values[a:b] = values[a0:b0]
        log.records.append(Injection(s, s + length, "amplitude", float(factor), variable))
    return series.with_values(values), log
