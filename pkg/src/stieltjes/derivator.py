"""Piecewise-monotone representation of left-continuous derivators.

A derivator g on a compact interval [a, b] drives every integral, derivative
and differential equation in this package. It is stored as

* an ordered list of segments tiling [a, b], each carrying a monotone profile
  (linear, power, constant, or tabulated with shape-preserving piecewise-linear
  interpolation), and
* a separate list of jumps, each located at a segment boundary in [a, b).

Values accumulate left-continuously: ``eval(t)`` collects the segment
increments up to t plus every jump strictly to the left of t, so the jump at
t itself only affects ``eval_right(t)``. Bounded variation is structural
(finitely many monotone pieces), and sign changes of the slope are allowed.

Conventions that the rest of the package relies on:

* tabulated profiles extend constantly from their first/last sample to the
  segment endpoints, and a segment's continuous increment is measured from the
  profile value at the segment's left endpoint;
* a jump's ``delta`` equals ``eval_right(at) - eval(at)`` exactly;
* instances are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

NONDECREASING = "nondecreasing"
NONINCREASING = "nonincreasing"
CONSTANT = "constant"

_DIRECTIONS = (NONDECREASING, NONINCREASING, CONSTANT)

#: kinds of variation exposed by :meth:`Derivator.variation`
TOTAL = "total"
POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class LinearProfile:
    """Affine growth with constant slope; the workhorse profile."""

    slope: float
    kind: str = field(default="linear", init=False)

    def increment(self, lo: float, hi: float, t):
        return self.slope * (np.asarray(t, dtype=float) - lo)

    def density(self, lo: float, hi: float, t):
        return np.full_like(np.asarray(t, dtype=float), self.slope)

    def inferred_direction(self) -> str:
        if self.slope > 0:
            return NONDECREASING
        if self.slope < 0:
            return NONINCREASING
        return CONSTANT


@dataclass(frozen=True)
class PowerProfile:
    """Growth ``scale * (t - lo)**exponent`` measured from the segment start.

    ``exponent`` must be positive; exponents below 1 give an integrable
    density singularity at the left endpoint, which the integration routines
    remove by substitution.
    """

    exponent: float
    scale: float
    kind: str = field(default="power", init=False)

    def __post_init__(self):
        if not self.exponent > 0:
            raise DomainError(f"power profile exponent must be positive, got {self.exponent}")

    def increment(self, lo: float, hi: float, t):
        return self.scale * (np.asarray(t, dtype=float) - lo) ** self.exponent

    def density(self, lo: float, hi: float, t):
        t = np.asarray(t, dtype=float)
        return self.scale * self.exponent * (t - lo) ** (self.exponent - 1.0)

    def inferred_direction(self) -> str:
        if self.scale > 0:
            return NONDECREASING
        if self.scale < 0:
            return NONINCREASING
        return CONSTANT


@dataclass(frozen=True)
class ConstantProfile:
    """No continuous growth at all."""

    kind: str = field(default="constant", init=False)

    def increment(self, lo: float, hi: float, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def density(self, lo: float, hi: float, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def inferred_direction(self) -> str:
        return CONSTANT


@dataclass(frozen=True)
class TabulatedProfile:
    """Monotone samples joined by shape-preserving piecewise-linear interpolation.

    Sample abscissae must be strictly inside the owning segment; the profile
    is constant between each segment endpoint and the nearest sample, so the
    declared direction is preserved exactly.
    """

    points: tuple[tuple[float, float], ...]
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) < 2:
            raise DomainError("tabulated profile needs at least two samples")
        xs = [p[0] for p in pts]
        if any(x1 >= x2 for x1, x2 in zip(xs, xs[1:])):
            raise DomainError("tabulated sample abscissae must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def _arrays(self):
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return xs, ys

    def increment(self, lo: float, hi: float, t):
        xs, ys = self._arrays()
        # np.interp extends constantly outside the sample range already
        return np.interp(np.asarray(t, dtype=float), xs, ys) - ys[0]

    def density(self, lo: float, hi: float, t):
        raise DomainError("tabulated profiles expose no density; integrate by refinement")

    def inferred_direction(self) -> str:
        _, ys = self._arrays()
        d = np.diff(ys)
        if np.all(d >= 0):
            return CONSTANT if np.all(d == 0) else NONDECREASING
        if np.all(d <= 0):
            return NONINCREASING
        raise DomainError("tabulated samples are not monotone")


Profile = LinearProfile | PowerProfile | ConstantProfile | TabulatedProfile


@dataclass(frozen=True)
class Segment:
    """One monotone piece of a derivator, on [lo, hi]."""

    lo: float
    hi: float
    profile: Profile
    direction: str | None = None

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"segment needs lo < hi, got [{self.lo}, {self.hi}]")
        inferred = self.profile.inferred_direction()
        if self.direction is None:
            object.__setattr__(self, "direction", inferred)
        elif self.direction not in _DIRECTIONS:
            raise DomainError(f"unknown direction {self.direction!r}")
        elif self.direction != inferred:
            raise DomainError(
                f"declared direction {self.direction!r} conflicts with profile ({inferred})"
            )
        if isinstance(self.profile, TabulatedProfile):
            xs = [p[0] for p in self.profile.points]
            if xs[0] <= self.lo or xs[-1] >= self.hi:
                raise DomainError(
                    f"tabulated samples must lie strictly inside ({self.lo}, {self.hi})"
                )
        self._check_monotone_by_sampling()

    def _check_monotone_by_sampling(self, n: int = 257):
        ts = np.linspace(self.lo, self.hi, n)
        vals = self.profile.increment(self.lo, self.hi, ts)
        steps = np.diff(vals)
        scale = max(1.0, float(np.max(np.abs(vals))))
        tol = 1e-12 * scale
        if self.direction == NONDECREASING and np.any(steps < -tol):
            raise DomainError("profile decreases on a nondecreasing segment")
        if self.direction == NONINCREASING and np.any(steps > tol):
            raise DomainError("profile increases on a nonincreasing segment")
        if self.direction == CONSTANT and np.any(np.abs(steps) > tol):
            raise DomainError("profile moves on a constant segment")

    def increment_to(self, t):
        """Continuous increment accumulated from lo up to t (vectorized)."""
        return self.profile.increment(self.lo, self.hi, t)

    @property
    def total_increment(self) -> float:
        return float(self.profile.increment(self.lo, self.hi, self.hi))

    def density_at(self, t):
        return self.profile.density(self.lo, self.hi, t)

    @property
    def is_constant(self) -> bool:
        return self.direction == CONSTANT

    def interior_knots(self) -> list[float]:
        """Abscissae where the profile's slope may kink (tabulated samples)."""
        if isinstance(self.profile, TabulatedProfile):
            return [p[0] for p in self.profile.points]
        return []


@dataclass(frozen=True)
class Jump:
    """A discontinuity: ``eval_right(at) = eval(at) + delta`` with delta nonzero."""

    at: float
    delta: float

    def __post_init__(self):
        if self.delta == 0:
            raise DomainError(f"jump at {self.at} has zero delta")


@dataclass(frozen=True)
class StructuralSets:
    """Decomposition of [a, b] into jump points and maximal monotone runs.

    ``rising``/``falling`` are the open intervals where the derivator strictly
    accumulates in one direction; ``constant`` holds the maximal open
    constancy intervals. All lists are pairwise disjoint and, together with
    the run boundary points, cover the interval.
    """

    jumps_up: tuple[float, ...]
    jumps_down: tuple[float, ...]
    rising: tuple[tuple[float, float], ...]
    falling: tuple[tuple[float, float], ...]
    constant: tuple[tuple[float, float], ...]


class Derivator:
    """A left-continuous bounded-variation derivator on [a, b].

    Parameters
    ----------
    interval:
        Pair (a, b) with a < b.
    segments:
        Monotone segments tiling [a, b] exactly (consecutive endpoints equal).
    jumps:
        Jumps located at segment boundaries in [a, b); at most one per point.
        A segment must be pre-split wherever a jump is placed.
    anchor:
        The value g(a).
    """

    def __init__(
        self,
        interval: tuple[float, float],
        segments: Sequence[Segment],
        jumps: Iterable[Jump] = (),
        anchor: float = 0.0,
    ):
        a, b = float(interval[0]), float(interval[1])
        if not a < b:
            raise DomainError(f"interval needs a < b, got [{a}, {b}]")
        segs = tuple(segments)
        if not segs:
            raise DomainError("at least one segment is required")
        if segs[0].lo != a or segs[-1].hi != b:
            raise DomainError("segments must tile [a, b] exactly")
        for left, right in zip(segs, segs[1:]):
            if left.hi != right.lo:
                raise DomainError(
                    f"segments must tile without gaps: {left.hi} != {right.lo}"
                )
        jmps = tuple(sorted((Jump(float(j.at), float(j.delta)) for j in jumps), key=lambda j: j.at))
        ats = [j.at for j in jmps]
        if len(set(ats)) != len(ats):
            raise DomainError("duplicate jump locations")
        boundaries = {s.lo for s in segs}
        for j in jmps:
            if not (a <= j.at < b):
                raise DomainError(f"jump at {j.at} outside [{a}, {b})")
            if j.at not in boundaries:
                raise DomainError(
                    f"jump at {j.at} is not a segment boundary; split the segment there"
                )

        self.interval = (a, b)
        self.segments = segs
        self.jumps = jmps
        self.anchor = float(anchor)

        self._seg_lo = np.array([s.lo for s in segs])
        self._cum_inc = np.concatenate(
            [[0.0], np.cumsum([s.total_increment for s in segs])]
        )
        self._jump_at = np.array(ats) if ats else np.empty(0)
        self._jump_delta = np.array([j.delta for j in jmps]) if jmps else np.empty(0)
        self._jump_cum = np.concatenate([[0.0], np.cumsum(self._jump_delta)])
        self._delta_by_at = {j.at: j.delta for j in jmps}
        self._runs = self._build_runs()

    # ------------------------------------------------------------------ basics

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @classmethod
    def identity(cls, a: float, b: float, jumps: Iterable = ()) -> "Derivator":
        """Slope-1 derivator, auto-split at the requested jumps.

        Jumps may be given as (at, delta) pairs or Jump records.
        """
        jmps = sorted(
            (j.at, j.delta) if isinstance(j, Jump) else (float(j[0]), float(j[1]))
            for j in jumps
        )
        cuts = [a] + [at for at, _ in jmps if a < at < b] + [b]
        cuts = sorted(set(cuts))
        segs = [Segment(lo, hi, LinearProfile(1.0)) for lo, hi in zip(cuts, cuts[1:])]
        return cls((a, b), segs, [Jump(at, d) for at, d in jmps], anchor=a)

    @classmethod
    def constant(cls, a: float, b: float, level: float = 0.0) -> "Derivator":
        return cls((a, b), [Segment(a, b, ConstantProfile())], anchor=level)

    def _check_domain(self, t: np.ndarray):
        a, b = self.interval
        if np.any(t < a) or np.any(t > b):
            bad = t[(t < a) | (t > b)]
            raise DomainError(f"time {float(np.ravel(bad)[0])} outside [{a}, {b}]")

    def segment_index(self, t):
        """Index of the segment owning t; boundaries belong to the left segment."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._seg_lo, t, side="left") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def eval(self, t):
        """Left-continuous value g(t); accepts scalars or arrays."""
        arr = np.asarray(t, dtype=float)
        self._check_domain(arr)
        idx = self.segment_index(arr)
        cont = np.empty_like(arr, dtype=float)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                cont[mask] = self._cum_inc[k] + seg.increment_to(arr[mask])
        jumps_before = self._jump_cum[np.searchsorted(self._jump_at, arr, side="left")]
        out = self.anchor + cont + jumps_before
        return float(out) if np.isscalar(t) else out

    def eval_right(self, t):
        """Right limit g(t+); equals ``eval(t) + delta`` at a jump, ``eval(t)`` otherwise."""
        arr = np.asarray(t, dtype=float)
        base = self.eval(arr)
        if self._jump_at.size:
            pos = np.searchsorted(self._jump_at, arr)
            hit = (pos < self._jump_at.size) & np.isclose(
                self._jump_at[np.minimum(pos, self._jump_at.size - 1)], arr, rtol=0, atol=0
            )
            extra = np.where(hit, self._jump_delta[np.minimum(pos, self._jump_at.size - 1)], 0.0)
            base = base + extra
        return float(base) if np.isscalar(t) else base

    def delta_at(self, t: float) -> float:
        """Jump mass at t, 0.0 when g is continuous there."""
        return self._delta_by_at.get(float(t), 0.0)

    # -------------------------------------------------------------- variation

    def variation(self, lo: float, hi: float, kind: str = TOTAL) -> float:
        """Variation of g over [lo, hi), split by kind (total/positive/negative)."""
        lo, hi = float(lo), float(hi)
        a, b = self.interval
        if not (a <= lo <= hi <= b):
            raise DomainError(f"[{lo}, {hi}) not inside [{a}, {b}]")
        if kind not in (TOTAL, POSITIVE, NEGATIVE):
            raise DomainError(f"unknown variation kind {kind!r}")
        if lo == hi:
            return 0.0
        pos = neg = 0.0
        for seg in self.segments:
            c, d = max(lo, seg.lo), min(hi, seg.hi)
            if c >= d:
                continue
            inc = float(seg.increment_to(d) - seg.increment_to(c))
            if inc > 0:
                pos += inc
            else:
                neg += -inc
        if self._jump_at.size:
            sel = (self._jump_at >= lo) & (self._jump_at < hi)
            deltas = self._jump_delta[sel]
            pos += float(np.sum(deltas[deltas > 0]))
            neg += float(-np.sum(deltas[deltas < 0]))
        if kind == POSITIVE:
            return pos
        if kind == NEGATIVE:
            return neg
        return pos + neg

    def variation_cumulative(self, times, kind: str = TOTAL) -> np.ndarray:
        """Vectorized ``variation(a, t, kind)`` for an array of times."""
        ts = np.asarray(times, dtype=float)
        self._check_domain(ts)
        pos = np.zeros_like(ts)
        neg = np.zeros_like(ts)
        for k, seg in enumerate(self.segments):
            upper = np.clip(ts, seg.lo, seg.hi)
            inc = seg.increment_to(upper) - 0.0
            if seg.direction == NONDECREASING:
                pos = pos + inc
            elif seg.direction == NONINCREASING:
                neg = neg - inc
        if self._jump_at.size:
            idx = np.searchsorted(self._jump_at, ts, side="left")
            pos_cum = np.concatenate([[0.0], np.cumsum(np.maximum(self._jump_delta, 0.0))])
            neg_cum = np.concatenate([[0.0], np.cumsum(np.maximum(-self._jump_delta, 0.0))])
            pos = pos + pos_cum[idx]
            neg = neg + neg_cum[idx]
        if kind == POSITIVE:
            return pos
        if kind == NEGATIVE:
            return neg
        return pos + neg

    # -------------------------------------------------------- structural sets

    def _build_runs(self):
        """Group segments into maximal runs broken at jumps and direction changes."""
        runs = []
        current = None
        for seg in self.segments:
            broken = (
                current is None
                or seg.lo in self._delta_by_at
                or seg.direction != current["direction"]
            )
            if broken:
                if current is not None:
                    runs.append(current)
                current = {"lo": seg.lo, "hi": seg.hi, "direction": seg.direction,
                           "segments": [seg]}
            else:
                current["hi"] = seg.hi
                current["segments"].append(seg)
        if current is not None:
            runs.append(current)
        return runs

    def structural_sets(self) -> StructuralSets:
        up = tuple(float(j.at) for j in self.jumps if j.delta > 0)
        down = tuple(float(j.at) for j in self.jumps if j.delta < 0)
        rising, falling, constant = [], [], []
        for run in self._runs:
            iv = (run["lo"], run["hi"])
            if run["direction"] == NONDECREASING:
                rising.append(iv)
            elif run["direction"] == NONINCREASING:
                falling.append(iv)
            else:
                constant.append(iv)
        return StructuralSets(up, down, tuple(rising), tuple(falling), tuple(constant))

    def run_boundaries(self) -> tuple[float, ...]:
        """Points delimiting the maximal monotone runs (jumps included)."""
        pts = {self.a, self.b}
        for run in self._runs:
            pts.add(run["lo"])
            pts.add(run["hi"])
        return tuple(sorted(pts))

    def classify_point(self, t: float) -> tuple[str, object]:
        """Where t sits for derivative purposes.

        Returns one of
        ``("jump", delta)``, ``("interior", run_direction)`` for points strictly
        inside a rising/falling run, or ``("excluded", reason)`` for run
        boundaries and anything in the closure of a constancy interval.
        """
        t = float(t)
        self._check_domain(np.asarray(t))
        if t in self._delta_by_at:
            return ("jump", self._delta_by_at[t])
        for run in self._runs:
            if run["lo"] < t < run["hi"]:
                if run["direction"] == CONSTANT:
                    return ("excluded", "inside a constancy interval")
                return ("interior", run["direction"])
        return ("excluded", "run boundary without a jump")

    def segments_adjacent(self, t: float) -> tuple[int | None, int | None]:
        """Indices of the segments just left and just right of t (None at a or b)."""
        t = float(t)
        left = right = None
        for k, seg in enumerate(self.segments):
            if seg.lo < t <= seg.hi:
                left = k
            if seg.lo <= t < seg.hi:
                right = k
        return (left, right)

    # ----------------------------------------------------------------- extras

    def breakpoints(self) -> tuple[float, ...]:
        """Segment boundaries plus tabulated knots; natural grid refinement points."""
        pts = {self.a, self.b}
        for seg in self.segments:
            pts.add(seg.lo)
            pts.add(seg.hi)
            pts.update(seg.interior_knots())
        return tuple(sorted(pts))

    def __repr__(self):
        return (
            f"Derivator([{self.a}, {self.b}], {len(self.segments)} segments, "
            f"{len(self.jumps)} jumps, anchor={self.anchor})"
        )
