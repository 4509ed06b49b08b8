"""Deterministic market inputs.

Discount curves (flat rate or tabulated log-discount) and information-flow
schedules sigma(t) with their derived deterministic functions: the running
integral, the drift weight nu(t) = sigma(t) + Sigma(t)/(T-t), the tilt
variance omega^2(t), and the re-initialized schedule used for restarting the
model at an intermediate time.

Schedules are stored as closed-form linear segments so every cumulative
integral is exact; the exponents downstream are amplified by T/(T-t) and
cannot tolerate compounding quadrature error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

#: fraction of T used as the default guard against the t -> T singularity
DEFAULT_MATURITY_GUARD = 1e-9


class CurveError(ValueError):
    pass


class ScheduleError(ValueError):
    pass


class DiscountCurve:
    """Initial discount function P(0, t), deterministic rates only."""

    def discount(self, t: float) -> float:
        raise NotImplementedError

    def domain_end(self) -> float:
        return np.inf

    def discount_factor(self, t: float, maturity: float) -> float:
        """P(t, T) = P(0, T) / P(0, t); requires 0 <= t <= T."""
        if t < 0.0 or maturity < t:
            raise CurveError(f"need 0 <= t <= T, got t={t}, T={maturity}")
        return self.discount(maturity) / self.discount(t)

    def short_rate(self, t: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class FlatCurve(DiscountCurve):
    rate: float = 0.0

    def discount(self, t: float) -> float:
        if t < 0.0:
            raise CurveError("time must be nonnegative")
        return float(np.exp(-self.rate * t))

    def short_rate(self, t: float) -> float:
        if t < 0.0:
            raise CurveError("time must be nonnegative")
        return self.rate


@dataclass(frozen=True)
class TabulatedCurve(DiscountCurve):
    """Log-linear interpolation of (t, P(0,t)) pillars.

    Piecewise-constant forward rates; the short rate at a pillar is the
    right-sided forward.
    """

    times: tuple[float, ...]
    discounts: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.discounts, dtype=float)
        if t.size < 2 or t.shape != p.shape:
            raise CurveError("need matching time/discount pillars with >= 2 points")
        if t[0] != 0.0 or abs(p[0] - 1.0) > 1e-12:
            raise CurveError("curve must start at (0, 1)")
        if np.any(np.diff(t) <= 0.0):
            raise CurveError("pillar times must be strictly increasing")
        if np.any(p <= 0.0) or np.any(p > 1.0) or np.any(np.diff(p) >= 0.0):
            raise CurveError("discounts must be in (0, 1] and strictly decreasing")

    @classmethod
    def from_csv(cls, path) -> "TabulatedCurve":
        """Two-column CSV (t, P) with a header row."""
        ts, ps = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                if not row:
                    continue
                ts.append(float(row[0]))
                ps.append(float(row[1]))
        return cls(tuple(ts), tuple(ps))

    def domain_end(self) -> float:
        return self.times[-1]

    def _check(self, t: float) -> None:
        if t < 0.0 or t > self.times[-1]:
            raise CurveError(f"t={t} outside curve domain [0, {self.times[-1]}]")

    def discount(self, t: float) -> float:
        self._check(t)
        logp = np.log(np.asarray(self.discounts))
        return float(np.exp(np.interp(t, self.times, logp)))

    def short_rate(self, t: float) -> float:
        self._check(t)
        ts = np.asarray(self.times)
        logp = np.log(np.asarray(self.discounts))
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        return float(-(logp[i + 1] - logp[i]) / (ts[i + 1] - ts[i]))


@dataclass(frozen=True)
class Segment:
    """sigma varies linearly from s0 at t0 to s1 at t1."""

    t0: float
    t1: float
    s0: float
    s1: float

    def value(self, t: float) -> float:
        if self.t1 == self.t0:
            return self.s0
        w = (t - self.t0) / (self.t1 - self.t0)
        return self.s0 + w * (self.s1 - self.s0)

    def integral(self, a: float, b: float) -> float:
        # exact integral of sigma over [a, b] within the segment
        va, vb = self.value(a), self.value(b)
        return 0.5 * (va + vb) * (b - a)

    def integral_sq(self, a: float, b: float) -> float:
        # exact integral of sigma^2: quadratic integrand
        va, vb = self.value(a), self.value(b)
        vm = self.value(0.5 * (a + b))
        return (b - a) * (va * va + 4.0 * vm * vm + vb * vb) / 6.0  # Simpson, exact for quadratics

    def shifted(self, offset: float) -> "Segment":
        return Segment(self.t0, self.t1, self.s0 + offset, self.s1 + offset)

    def clipped(self, a: float) -> "Segment":
        if a <= self.t0:
            return self
        return Segment(a, self.t1, self.value(a), self.s1)


@dataclass(frozen=True)
class FlowSchedule:
    """Deterministic information-flow rate sigma(t) on [start, T].

    ``start`` is nonzero only for re-initialized schedules, whose cumulative
    integrals run from the restart time.
    """

    segments: tuple[Segment, ...]
    maturity: float
    start: float = 0.0
    maturity_guard: float = field(default=DEFAULT_MATURITY_GUARD)

    def __post_init__(self):
        if not self.segments:
            raise ScheduleError("schedule needs at least one segment")
        if self.maturity <= self.start:
            raise ScheduleError("maturity must exceed the schedule start")
        prev = self.start
        for seg in self.segments:
            if abs(seg.t0 - prev) > 1e-12:
                raise ScheduleError(f"segments must tile [{self.start}, T]; gap at t={prev}")
            if seg.t1 <= seg.t0:
                raise ScheduleError("segment must have positive length")
            if seg.s0 < 0.0 or seg.s1 < 0.0:
                raise ScheduleError("sigma must be nonnegative")
            prev = seg.t1
        if abs(prev - self.maturity) > 1e-12:
            raise ScheduleError(f"segments end at {prev}, expected maturity {self.maturity}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, sigma: float, maturity: float) -> "FlowSchedule":
        return cls((Segment(0.0, maturity, sigma, sigma),), maturity)

    @classmethod
    def piecewise_constant(cls, breakpoints, values, maturity: float) -> "FlowSchedule":
        """``breakpoints`` are the interior boundaries; len(values) = len(breakpoints)+1."""
        edges = [0.0, *breakpoints, maturity]
        if len(values) != len(edges) - 1:
            raise ScheduleError("need one sigma value per interval")
        segs = tuple(Segment(edges[i], edges[i + 1], values[i], values[i]) for i in range(len(values)))
        return cls(segs, maturity)

    @classmethod
    def piecewise_linear(cls, times, values, maturity: float) -> "FlowSchedule":
        if len(times) != len(values) or len(times) < 2:
            raise ScheduleError("need matching times/values with >= 2 points")
        if times[0] != 0.0 or abs(times[-1] - maturity) > 1e-12:
            raise ScheduleError("times must span [0, maturity]")
        segs = tuple(
            Segment(times[i], times[i + 1], values[i], values[i + 1]) for i in range(len(times) - 1)
        )
        return cls(segs, maturity)

    @classmethod
    def from_csv(cls, path, maturity: float | None = None) -> "FlowSchedule":
        """Segment CSV with header: t_start, t_end, sigma [, sigma_end]."""
        segs = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                if not row:
                    continue
                t0, t1, s0 = float(row[0]), float(row[1]), float(row[2])
                s1 = float(row[3]) if len(row) > 3 and row[3] != "" else s0
                segs.append(Segment(t0, t1, s0, s1))
        T = maturity if maturity is not None else segs[-1].t1
        return cls(tuple(segs), T)

    # -- queries -------------------------------------------------------------

    @property
    def is_constant(self) -> bool:
        vals = {(s.s0, s.s1) for s in self.segments}
        if len(vals) != 1:
            return False
        s0, s1 = next(iter(vals))
        return s0 == s1

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(s.t0 for s in self.segments[1:])

    def guard(self, t: float) -> None:
        eps = self.maturity_guard * self.maturity
        if t < self.start - 1e-15:
            raise ScheduleError(f"t={t} before schedule start {self.start}")
        if t > self.maturity - eps:
            raise ScheduleError(
                f"t={t} violates the maturity guard T - {eps:g}; "
                "the filter exponents are singular at T (use the exact payout limit there)"
            )

    def sigma_at(self, t: float) -> float:
        """sigma(t), right-continuous at breakpoints (the Ito convention
        evaluates the integrand at the left endpoint of the step ahead)."""
        if t < self.start - 1e-15 or t > self.maturity + 1e-15:
            raise ScheduleError(f"t={t} outside [{self.start}, {self.maturity}]")
        for seg in self.segments:
            if t < seg.t1:
                return seg.value(max(t, seg.t0))
        return self.segments[-1].value(self.maturity)

    def cumulative_sigma(self, t: float) -> float:
        """Sigma(t) = integral of sigma over [start, t]; exact per segment."""
        if t < self.start - 1e-15 or t > self.maturity + 1e-15:
            raise ScheduleError(f"t={t} outside [{self.start}, {self.maturity}]")
        total = 0.0
        for seg in self.segments:
            if t <= seg.t0:
                break
            total += seg.integral(seg.t0, min(t, seg.t1))
        return total

    def cumulative_sigma_sq(self, t: float) -> float:
        """Integral of sigma^2 over [start, t]; exact per segment."""
        if t < self.start - 1e-15 or t > self.maturity + 1e-15:
            raise ScheduleError(f"t={t} outside [{self.start}, {self.maturity}]")
        total = 0.0
        for seg in self.segments:
            if t <= seg.t0:
                break
            total += seg.integral_sq(seg.t0, min(t, seg.t1))
        return total

    def nu(self, t: float) -> float:
        """sigma(t) + Sigma(t)/(T - t); singular at T."""
        self.guard(t)
        return self.sigma_at(t) + self.cumulative_sigma(t) / (self.maturity - t)

    def omega_squared(self, t: float) -> float:
        """Variance of the accumulated tilt: Sigma(t)^2/(T-t) + int sigma^2.

        Equals the integral of nu^2 from the schedule start.
        """
        self.guard(t)
        s = self.cumulative_sigma(t)
        return s * s / (self.maturity - t) + self.cumulative_sigma_sq(t)

    def reinitialize(self, at: float) -> "FlowSchedule":
        """Schedule seen from a restart at ``at``: sigma + Sigma(at)/(T - at) on [at, T]."""
        if at < self.start:
            raise ScheduleError("restart must not precede the schedule start")
        self.guard(at)
        if at == self.start:
            return self
        offset = self.cumulative_sigma(at) / (self.maturity - at)
        segs = tuple(
            seg.clipped(at).shifted(offset) for seg in self.segments if seg.t1 > at + 1e-15
        )
        return FlowSchedule(segs, self.maturity, start=at, maturity_guard=self.maturity_guard)
