"""Composition of subproblem flows into splitting steps and full runs.

A splitting step with stage coefficients (a_j, b_j), j = 1..s advances

    U_j = FlowB(b_j * h, FlowA(a_j * h, U_{j-1})),    U_0 = u,

where scaling an autonomous flow's operator corresponds to scaling time.
Stages with a zero coefficient are skipped entirely, which keeps the
closed-form B-flow's positive-duration precondition intact.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

from .errors import (BlowupDetected, DegenerateState, NewtonDivergence,
                     RadicandNonpositive, WesterveltError)
from .model import (Decomposition, ModelParams, NU_MIN_DEFAULT, State,
                    check_nondegeneracy)
from .subsolvers import (CLOSED_FORM, FLAG_OK, InnerScheme, SubstepResult,
                         solve_A, solve_B_closed_form, solve_B_wave)


@dataclass(frozen=True)
class SplitScheme:
    """Stage coefficients of an exponential splitting method."""

    name: str
    coeffs: tuple[tuple[float, float], ...]
    order_nominal: int

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise ValueError("at least one stage is required")
        if self.order_nominal not in (1, 2):
            raise ValueError("order_nominal must be 1 or 2")
        sum_a = sum(a for a, _ in self.coeffs)
        sum_b = sum(b for _, b in self.coeffs)
        if abs(sum_a - 1.0) > 1e-14 or abs(sum_b - 1.0) > 1e-14:
            raise ValueError(
                f"inconsistent stage coefficients: sum a = {sum_a}, sum b = {sum_b}")

    @property
    def stages(self) -> int:
        return len(self.coeffs)


LIE_AB = SplitScheme("lie_ab", ((1.0, 1.0),), 1)
LIE_BA = SplitScheme("lie_ba", ((0.0, 1.0), (1.0, 0.0)), 1)
STRANG_ABA = SplitScheme("strang_aba", ((0.5, 1.0), (0.5, 0.0)), 2)
STRANG_BAB = SplitScheme("strang_bab", ((0.0, 0.5), (1.0, 0.5)), 2)

SCHEME_PRESETS = {s.name: s for s in (LIE_AB, LIE_BA, STRANG_ABA, STRANG_BAB)}


@dataclass(frozen=True)
class IntegratorConfig:
    """Everything needed to advance a state: decomposition, splitting
    scheme, inner solvers, and run-time safeguards."""

    decomposition: Decomposition
    scheme: SplitScheme
    inner_a: InnerScheme
    inner_b: InnerScheme
    nu_min: float = NU_MIN_DEFAULT
    record_trajectory: bool = False
    trajectory_stride: int = 1

    def __post_init__(self):
        if self.inner_b.tag == CLOSED_FORM and self.decomposition != Decomposition.I:
            raise ValueError("closed_form B-solver is restricted to decomposition I")
        if self.decomposition == Decomposition.I and self.inner_b.tag != CLOSED_FORM:
            raise ValueError("decomposition I uses the closed-form B-solver")
        if self.inner_a.tag == CLOSED_FORM:
            raise ValueError("the A-subproblem has no closed-form solver")
        if self.trajectory_stride < 1:
            raise ValueError("trajectory_stride must be at least 1")


@dataclass
class SolveCounters:
    """Work counters accumulated over a run."""

    a_solves: int = 0
    b_solves: int = 0
    newton_iters_a: int = 0
    newton_iters_b: int = 0


@dataclass(frozen=True)
class IntegrationResult:
    state: State
    steps_completed: int
    counters: SolveCounters
    min_nondeg_factor: float
    wall_time: float
    trajectory: tuple[State, ...] = field(default=())


def apply_split_stages(u: State, h: float, scheme: SplitScheme,
                       flow_a, flow_b) -> SubstepResult:
    """Run the stage recursion with arbitrary flow callables.

    ``flow_a(state, duration)`` and ``flow_b(state, duration)`` must return
    a :class:`SubstepResult`.  Zero-coefficient stages are skipped.  Errors
    raised by a flow are re-raised with the stage index attached.
    """
    iters = 0
    for j, (aj, bj) in enumerate(scheme.coeffs):
        for flow, cj in ((flow_a, aj), (flow_b, bj)):
            if cj == 0.0:
                continue
            try:
                res = flow(u, cj * h)
            except WesterveltError as exc:
                exc.stage_index = j
                raise
            iters += res.newton_iters_total
            u = res.state
            if res.stability_flag != FLAG_OK:
                return SubstepResult(u, iters, res.stability_flag)
    return SubstepResult(u, iters, FLAG_OK)


def _standard_flows(p: ModelParams, cfg: IntegratorConfig):
    d = cfg.decomposition

    def flow_a(state, duration):
        return solve_A(state, duration, p, state.grid, d, cfg.inner_a)

    if d == Decomposition.I:
        def flow_b(state, duration):
            return solve_B_closed_form(state, duration, p, state.grid)
    else:
        def flow_b(state, duration):
            return solve_B_wave(state, duration, p, state.grid, d, cfg.inner_b)

    return flow_a, flow_b


def split_step(u: State, h: float, p: ModelParams,
               cfg: IntegratorConfig) -> SubstepResult:
    """One splitting step of size h with the configured subproblem solvers."""
    if h <= 0.0:
        raise ValueError("step size must be positive")
    flow_a, flow_b = _standard_flows(p, cfg)
    return apply_split_stages(u, h, cfg.scheme, flow_a, flow_b)


def _counted_flows(p, cfg, counters):
    flow_a, flow_b = _standard_flows(p, cfg)

    def counted_a(state, duration):
        res = flow_a(state, duration)
        counters.a_solves += 1
        counters.newton_iters_a += res.newton_iters_total
        return res

    def counted_b(state, duration):
        res = flow_b(state, duration)
        counters.b_solves += 1
        counters.newton_iters_b += res.newton_iters_total
        return res

    return counted_a, counted_b


def integrate(u0: State, t_final: float, n_steps: int, p: ModelParams,
              cfg: IntegratorConfig) -> IntegrationResult:
    """Advance u0 over [0, t_final] in n_steps uniform splitting steps.

    After every step the non-degeneracy factor 1 - delta*vel is checked
    against ``cfg.nu_min`` and the fields against the blowup bound.
    Failures raise DegenerateState / NewtonDivergence / BlowupDetected
    carrying the step index and the last valid state; a closed-form
    radicand failure is surfaced as BlowupDetected (the subflow ceased to
    exist for this step size).
    """
    if n_steps < 0 or t_final < 0.0:
        raise ValueError("t_final and n_steps must be non-negative")
    start = _time.perf_counter()
    counters = SolveCounters()
    trajectory = [u0] if cfg.record_trajectory else []
    min_factor = check_nondegeneracy(u0, p, cfg.nu_min).min_factor
    if n_steps == 0:
        return IntegrationResult(u0, 0, counters, min_factor,
                                 _time.perf_counter() - start,
                                 tuple(trajectory))
    h = t_final / n_steps
    flow_a, flow_b = _counted_flows(p, cfg, counters)
    u = u0
    for step in range(n_steps):
        try:
            res = apply_split_stages(u, h, cfg.scheme, flow_a, flow_b)
        except RadicandNonpositive as exc:
            raise BlowupDetected(
                f"step {step}: closed-form B-substep inadmissible ({exc}); "
                f"suggested h_max = {exc.h_max:.6e}",
                step_index=step, last_state=u) from exc
        except (DegenerateState, NewtonDivergence) as exc:
            exc.step_index = step
            exc.last_state = u
            raise
        if res.stability_flag != FLAG_OK:
            raise BlowupDetected(
                f"step {step}: field left the finite/bounded range",
                step_index=step, last_state=u)
        report = check_nondegeneracy(res.state, p, cfg.nu_min)
        min_factor = min(min_factor, report.min_factor)
        if not report.passed:
            raise DegenerateState(
                f"step {step}: min(1 - delta*vel) = {report.min_factor:.3e} "
                f"below nu_min = {cfg.nu_min:.1e}",
                step_index=step, last_state=u)
        u = res.state
        if cfg.record_trajectory and ((step + 1) % cfg.trajectory_stride == 0
                                      or step + 1 == n_steps):
            trajectory.append(u)
    return IntegrationResult(u, n_steps, counters, min_factor,
                             _time.perf_counter() - start, tuple(trajectory))


def config_for(decomposition: Decomposition, scheme: SplitScheme,
               inner_a: InnerScheme, inner_b: InnerScheme | None = None,
               **kwargs) -> IntegratorConfig:
    """Convenience constructor filling the B-solver for decomposition I."""
    if inner_b is None:
        if decomposition == Decomposition.I:
            inner_b = InnerScheme(CLOSED_FORM)
        else:
            inner_b = inner_a
    return IntegratorConfig(decomposition, scheme, inner_a, inner_b, **kwargs)
