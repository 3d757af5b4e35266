"""Measure-driven initial value problems: horizon selection, Euler, Picard.

A system couples one derivator per state component. The Euler scheme splits
each step in two: the jump part applies x(t+) = x(t) + f(t, x(t)) * delta
exactly (the pre-jump state feeds every component, even when several
components jump at once), then the continuous part advances with the
between-jump increment of each derivator. The Picard route iterates the
integral operator with a trapezoid rule in each driving function and the same
exact atom terms.

Every solve carries a jump audit: at each jump time and component the stored
right value is compared against left + f(t, left) * delta recomputed from the
stored left state. The residual is reported in units of the state's ulp and
is zero when the transition was applied exactly.

Horizon selection integrates nonnegative dominators of the right-hand side
against the total-variation measures and returns the largest grid time at
which every component's accumulated bound still fits inside the safety
radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calculus import Trajectory, _cell_integrals
from .derivator import Derivator
from .errors import (
    DomainError,
    HorizonSelectionError,
    RhsEvaluationError,
)
from .measure import Integrand, _as_integrand


@dataclass
class SystemSpec:
    """A coupled system: one derivator per component, shared interval."""

    derivators: Sequence[Derivator]
    rhs: Callable[[float, np.ndarray], np.ndarray]
    initial: Sequence[float]
    horizon: float | None = None

    def __post_init__(self):
        self.derivators = tuple(self.derivators)
        if not self.derivators:
            raise DomainError("a system needs at least one derivator")
        base = self.derivators[0].interval
        for d in self.derivators[1:]:
            if d.interval != base:
                raise DomainError(
                    f"derivator intervals differ: {d.interval} vs {base}"
                )
        self.initial = np.asarray(self.initial, dtype=float)
        if self.initial.ndim != 1 or len(self.initial) != len(self.derivators):
            raise DomainError(
                "initial state must be one value per derivator "
                f"(got shape {self.initial.shape} for {len(self.derivators)} components)"
            )
        if self.horizon is not None:
            a, b = base
            if not (a < self.horizon <= b):
                raise DomainError(f"horizon {self.horizon} outside ({a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.derivators)

    @property
    def interval(self) -> tuple[float, float]:
        return self.derivators[0].interval

    def call_rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(self.rhs(float(t), x), dtype=float)
        except RhsEvaluationError:
            raise
        except Exception as exc:
            raise RhsEvaluationError(
                f"right-hand side failed at t={t}: {exc}"
            ) from exc
        if out.shape != (self.dim,):
            raise RhsEvaluationError(
                f"right-hand side returned shape {out.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(out)):
            raise RhsEvaluationError(
                f"right-hand side returned a non-finite value at t={t}"
            )
        return out


@dataclass
class CaratheodoryBound:
    """Safety ball radius plus dominators |f_j(t, x)| <= h_j(t) on the ball."""

    radius: float
    dominators: Sequence
    tau_star: float | None = None

    def dominator_for(self, j: int, dim: int) -> Integrand:
        doms = list(self.dominators)
        if len(doms) == 1:
            return _as_integrand(doms[0])
        if len(doms) != dim:
            raise DomainError(
                f"need one dominator or one per component, got {len(doms)} for dim {dim}"
            )
        return _as_integrand(doms[j])


def system_grid(derivators: Sequence[Derivator], horizon: float, mesh: int) -> np.ndarray:
    """Union of every derivator's breakpoints with a uniform mesh up to horizon."""
    a = derivators[0].interval[0]
    if mesh < 2:
        raise DomainError("mesh must be at least 2")
    pieces = [np.linspace(a, horizon, mesh + 1)]
    for d in derivators:
        pts = np.asarray(d.breakpoints(), dtype=float)
        pieces.append(pts[(pts > a) & (pts < horizon)])
    grid = np.unique(np.concatenate(pieces))
    return grid


def select_horizon(spec: SystemSpec, bound: CaratheodoryBound, mesh: int = 4096) -> float:
    """Largest grid time the dominator mass certifies inside the safety ball.

    For each component the dominator is integrated against the derivator's
    total-variation measure, cumulatively along a fine grid; the atom at the
    start time counts from the first positive time onward. The returned time
    is a point of the selection grid, not a supremum over the continuum.
    """
    a, b = spec.interval
    grid = system_grid(spec.derivators, b, mesh)
    worst = np.zeros(len(grid))
    for j, d in enumerate(spec.derivators):
        h = bound.dominator_for(j, spec.dim)
        hv = np.asarray(h(grid), dtype=float)
        if np.any(hv < 0):
            raise DomainError(f"dominator for component {j} is negative on the grid")
        cells = np.abs(_cell_integrals(d, h, grid))
        deltas = np.array([abs(d.delta_at(float(t))) for t in grid])
        atoms = hv * deltas
        cum = np.concatenate([[0.0], np.cumsum(atoms[:-1] + cells)])
        worst = np.maximum(worst, cum)
    ok = worst <= bound.radius
    ok[0] = False
    if not np.any(ok):
        raise HorizonSelectionError(
            f"no positive grid time keeps the dominator mass within radius {bound.radius}"
        )
    last = int(np.max(np.nonzero(ok)[0]))
    tau = float(grid[last])
    bound.tau_star = tau
    return tau


def _jump_table(derivators: Sequence[Derivator], grid: np.ndarray) -> np.ndarray:
    """deltas[k, j] = jump of derivator j at grid[k] (zero off jumps)."""
    deltas = np.zeros((len(grid), len(derivators)))
    for j, d in enumerate(derivators):
        for jump in d.jumps:
            if grid[0] <= jump.at <= grid[-1]:
                k = int(np.searchsorted(grid, jump.at))
                if k >= len(grid) or grid[k] != jump.at:
                    raise DomainError(f"solver grid is missing jump time {jump.at}")
                deltas[k, j] = jump.delta
    return deltas


def _continuous_increments(derivators: Sequence[Derivator], grid: np.ndarray) -> np.ndarray:
    """inc[k, j] = g_j(t_{k+1}) - g_j(t_k+), the between-jump advance per cell."""
    inc = np.empty((len(grid) - 1, len(derivators)))
    for j, d in enumerate(derivators):
        inc[:, j] = d.eval(grid[1:]) - d.eval_right(grid[:-1])
    return inc


def solve_euler(spec: SystemSpec, grid: np.ndarray,
                safety_radius: float | None = None):
    """Forward Euler in measure. Returns (left, right, warnings).

    Components whose increment is exactly zero over a step keep their bits:
    the update is masked, not added, so a constant derivator propagates the
    initial value unchanged.
    """
    n = len(grid)
    dim = spec.dim
    deltas = _jump_table(spec.derivators, grid)
    cont = _continuous_increments(spec.derivators, grid)
    left = np.empty((n, dim))
    right = np.empty((n, dim))
    left[0] = spec.initial
    warnings: list[str] = []
    ball_left = False
    for k in range(n - 1):
        x = left[k]
        dk = deltas[k]
        if np.any(dk != 0.0):
            fx = spec.call_rhs(grid[k], x)
            xr = x.copy()
            moved = dk != 0.0
            xr[moved] = x[moved] + fx[moved] * dk[moved]
        else:
            xr = x
        right[k] = xr
        ck = cont[k]
        if np.any(ck != 0.0):
            fr = spec.call_rhs(grid[k], xr)
            xn = xr.copy()
            moved = ck != 0.0
            xn[moved] = xr[moved] + fr[moved] * ck[moved]
        else:
            xn = xr.copy()
        left[k + 1] = xn
        if safety_radius is not None and not ball_left:
            drift = float(np.max(np.abs(xn - spec.initial)))
            if drift > safety_radius:
                ball_left = True
                warnings.append(
                    f"state left the safety ball (radius {safety_radius}) "
                    f"near t={float(grid[k + 1])}; continuing anyway"
                )
    # final row: apply a jump at the horizon if one lands there
    dk = deltas[n - 1]
    if np.any(dk != 0.0):
        fx = spec.call_rhs(grid[n - 1], left[n - 1])
        xr = left[n - 1].copy()
        moved = dk != 0.0
        xr[moved] = left[n - 1][moved] + fx[moved] * dk[moved]
        right[n - 1] = xr
    else:
        right[n - 1] = left[n - 1]
    return left, right, warnings


def solve_picard(spec: SystemSpec, grid: np.ndarray, tol: float = 1e-10,
                 max_iter: int = 25):
    """Picard iteration of the integral operator on a fixed grid.

    Each sweep rebuilds the cumulative integral with a trapezoid rule in each
    driving function; atoms use the left value of the previous iterate. After
    the last sweep the jump rows are recomputed from the final left values so
    the jump audit closes exactly.

    Returns (left, right, converged, iterations, last_change, warnings).
    """
    n = len(grid)
    dim = spec.dim
    deltas = _jump_table(spec.derivators, grid)
    cont = _continuous_increments(spec.derivators, grid)
    jump_rows = np.nonzero(np.any(deltas != 0.0, axis=1))[0]

    left = np.tile(spec.initial, (n, 1))
    right = left.copy()
    warnings: list[str] = []
    converged = False
    last_change = np.inf
    iterations = 0
    for sweep in range(max_iter):
        iterations = sweep + 1
        f_left = np.empty((n, dim))
        for k in range(n):
            f_left[k] = spec.call_rhs(grid[k], left[k])
        f_right = f_left.copy()
        for k in jump_rows:
            f_right[k] = spec.call_rhs(grid[k], right[k])
        atoms = f_left * deltas
        cells = 0.5 * (f_right[:-1] + f_left[1:]) * cont
        increments = atoms[:-1] + cells
        new_left = np.empty_like(left)
        new_left[0] = spec.initial
        new_left[1:] = spec.initial + np.cumsum(increments, axis=0)
        new_right = new_left + atoms
        last_change = float(np.max(np.abs(new_left - left)))
        left, right = new_left, new_right
        if last_change < tol:
            converged = True
            break
    if not converged:
        warnings.append(
            f"fixed-point sweep stopped after {iterations} iterations "
            f"with change {last_change:.3e} (tolerance {tol:.1e})"
        )
    # exact jump resweep against the final left values
    for k in jump_rows:
        fx = spec.call_rhs(grid[k], left[k])
        right[k] = left[k] + fx * deltas[k]
    off = np.setdiff1d(np.arange(n), jump_rows)
    right[off] = left[off]
    return left, right, converged, iterations, last_change, warnings


@dataclass(frozen=True)
class JumpAuditRow:
    time: float
    component: int
    left: float
    right: float
    expected_increment: float
    residual: float
    residual_ulps: float


@dataclass
class SolveConfig:
    mesh: int = 1024
    picard: bool = True
    tol: float = 1e-10
    max_iter: int = 25
    safety_radius: float | None = None
    error_estimate: bool = True


@dataclass
class SolutionReport:
    trajectories: tuple[Trajectory, ...]
    grid: np.ndarray
    method: str
    converged: bool
    iterations: int
    last_change: float
    error_estimate: float | None
    jump_audit: tuple[JumpAuditRow, ...]
    simultaneous_jumps: tuple[float, ...]
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def final_state(self) -> np.ndarray:
        return np.array([tr.right_values[-1] for tr in self.trajectories])


def _audit_jumps(spec: SystemSpec, grid: np.ndarray,
                 left: np.ndarray, right: np.ndarray) -> tuple[JumpAuditRow, ...]:
    deltas = _jump_table(spec.derivators, grid)
    rows = []
    for k in np.nonzero(np.any(deltas != 0.0, axis=1))[0]:
        fx = spec.call_rhs(grid[k], left[k])
        for j in range(spec.dim):
            if deltas[k, j] == 0.0:
                continue
            expected = left[k, j] + fx[j] * deltas[k, j]
            residual = right[k, j] - expected
            scale = max(abs(left[k, j]), abs(right[k, j]), 1e-300)
            rows.append(JumpAuditRow(
                time=float(grid[k]),
                component=j,
                left=float(left[k, j]),
                right=float(right[k, j]),
                expected_increment=float(fx[j] * deltas[k, j]),
                residual=float(residual),
                residual_ulps=float(abs(residual) / np.spacing(scale)),
            ))
    return tuple(rows)


def _simultaneous_jump_times(derivators: Sequence[Derivator]) -> tuple[float, ...]:
    seen: dict[float, int] = {}
    for d in derivators:
        for j in d.jumps:
            seen[j.at] = seen.get(j.at, 0) + 1
    return tuple(sorted(t for t, c in seen.items() if c > 1))


def _run(spec: SystemSpec, grid: np.ndarray, config: SolveConfig):
    if config.picard:
        left, right, conv, iters, change, warns = solve_picard(
            spec, grid, tol=config.tol, max_iter=config.max_iter
        )
    else:
        left, right, warns = solve_euler(
            spec, grid, safety_radius=config.safety_radius
        )
        conv, iters, change = True, 1, 0.0
    return left, right, conv, iters, change, warns


def solve(spec: SystemSpec, config: SolveConfig | None = None) -> SolutionReport:
    """Integrate the system and report trajectories with a jump audit.

    The error estimate reruns the scheme on a doubled mesh and takes the
    largest difference at shared grid times; pass
    ``SolveConfig(error_estimate=False)`` to skip the second run.
    """
    config = config or SolveConfig()
    a, b = spec.interval
    horizon = spec.horizon if spec.horizon is not None else b
    grid = system_grid(spec.derivators, horizon, config.mesh)
    left, right, conv, iters, change, warns = _run(spec, grid, config)

    err = None
    if config.error_estimate:
        fine_grid = system_grid(spec.derivators, horizon, 2 * config.mesh)
        f_left, _, _, _, _, _ = _run(spec, fine_grid, config)
        pos = np.searchsorted(fine_grid, grid)
        exact = (pos < len(fine_grid)) & (fine_grid[np.clip(pos, 0, len(fine_grid) - 1)] == grid)
        err = float(np.max(np.abs(left[exact] - f_left[pos[exact]])))
        if not np.all(exact):
            warns = list(warns) + [
                "coarse grid not fully contained in the doubled grid; "
                "error estimate taken over the shared points only"
            ]

    trajectories = tuple(
        Trajectory(grid, left[:, j], right[:, j], spec.derivators[j])
        for j in range(spec.dim)
    )
    sim = _simultaneous_jump_times(spec.derivators)
    sim = tuple(t for t in sim if grid[0] <= t <= grid[-1])
    all_warns = list(warns)
    if sim:
        all_warns.append(
            "multiple components jump together at "
            + ", ".join(f"t={t}" for t in sim)
            + "; the shared pre-jump state feeds every component"
        )
    return SolutionReport(
        trajectories=trajectories,
        grid=grid,
        method="picard" if config.picard else "euler",
        converged=conv,
        iterations=iters,
        last_change=change,
        error_estimate=err,
        jump_audit=_audit_jumps(spec, grid, left, right),
        simultaneous_jumps=sim,
        warnings=tuple(all_warns),
    )
