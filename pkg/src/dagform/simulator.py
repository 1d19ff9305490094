"""Closed-loop simulation of single-integrator agents under the formation law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DimensionMismatch, NonPositiveStep, UncertifiedFormation
from .geometry import SimilarityTransform, apply_similarity, as_points, stack
from .laplacian import BlockLaplacian, desired_followers, localizability_report

DEFAULT_DT = 0.01
DEFAULT_HORIZON = 30.0
BEST_EFFORT = "best-effort tracking"


@dataclass(frozen=True, eq=False)
class LeaderSchedule:
    """Exogenous leader motion.

    ``static`` keeps the leaders at ``positions``. ``parameterized`` moves
    them along a similar copy of their nominal positions, with scale,
    angle and translation interpolated linearly between breakpoints and
    held constant past the last one.
    """

    mode: str
    positions: np.ndarray | None = None
    nominal: np.ndarray | None = None
    times: np.ndarray | None = None
    alpha: np.ndarray | None = None
    theta: np.ndarray | None = None
    b: np.ndarray | None = None

    @classmethod
    def static(cls, p_l) -> "LeaderSchedule":
        return cls("static", positions=as_points(p_l).copy())

    @classmethod
    def parameterized(cls, r_l, times, alpha, theta, b) -> "LeaderSchedule":
        times = np.asarray(times, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        theta = np.asarray(theta, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1, 2)
        k = times.size
        if k == 0 or not (alpha.size == theta.size == b.shape[0] == k):
            raise ValueError("schedule breakpoints must all have the same nonzero length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("schedule times must be strictly increasing")
        if np.any(alpha <= 0):
            raise ValueError("scale must stay positive at every breakpoint")
        return cls(
            "parameterized", nominal=as_points(r_l).copy(),
            times=times, alpha=alpha, theta=theta, b=b,
        )

    @property
    def is_static(self) -> bool:
        return self.mode == "static"

    def transform_at(self, t: float) -> SimilarityTransform:
        if self.is_static:
            raise ValueError("static schedules carry positions, not a transform")
        ts = self.times
        return SimilarityTransform(
            float(np.interp(t, ts, self.alpha)),
            float(np.interp(t, ts, self.theta)),
            (float(np.interp(t, ts, self.b[:, 0])), float(np.interp(t, ts, self.b[:, 1]))),
        )

    def positions_at(self, t: float) -> np.ndarray:
        """Stacked leader positions at time ``t``."""
        if self.is_static:
            return self.positions.reshape(-1)
        return stack(apply_similarity(self.transform_at(t), self.nominal))


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.times.shape[0]
        if self.states.shape[0] != k or self.inputs.shape[0] != k:
            raise ValueError("trajectory arrays must have equal length")
        if k > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2

    def positions(self, k: int) -> np.ndarray:
        return self.states[k].reshape(-1, 2)


@dataclass(eq=False)
class ErrorSeries:
    times: np.ndarray
    values: np.ndarray

    @property
    def final(self) -> float:
        return float(self.values[-1])


def control_input(L: BlockLaplacian, p) -> np.ndarray:
    """Distributed control u = -L p; zero for leaders and on the similar image."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != L.matrix.shape[0]:
        raise DimensionMismatch(f"state has {p.size} entries, Laplacian expects {L.matrix.shape[0]}")
    return -(L.matrix @ p)


def _step_count(T: float, dt: float) -> int:
    if not dt > 0:
        raise NonPositiveStep(f"time step must be positive, got {dt}")
    if T < dt:
        raise ValueError(f"horizon {T} shorter than one step {dt}")
    return int(math.floor(T / dt + 1e-9))


def simulate(
    L: BlockLaplacian,
    p0,
    schedule: LeaderSchedule,
    T: float = DEFAULT_HORIZON,
    dt: float = DEFAULT_DT,
) -> Trajectory:
    """Integrate the followers with classical RK4; leaders follow ``schedule``.

    Leader entries of ``p0`` are replaced by the schedule. The trajectory
    holds floor(T/dt) + 1 samples.
    """
    report = localizability_report(L)
    if not report.certified:
        raise UncertifiedFormation(f"formation is not certified: {report.to_dict()}")
    steps = _step_count(T, dt)
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    if p0.size != 2 * L.n:
        raise DimensionMismatch(f"initial state has {p0.size} entries, expected {2 * L.n}")
    fd, ld = L.follower_dofs, L.leader_dofs
    Lff, Lfl = L.L_ff, L.L_fl
    times = np.arange(steps + 1) * dt
    states = np.empty((steps + 1, 2 * L.n))

    if schedule.is_static:
        pl = schedule.positions_at(0.0)
        drive = -(Lfl @ pl)
        leader_at = lambda t: pl  # noqa: E731
        rhs = lambda t, x: drive - Lff @ x  # noqa: E731
    else:
        leader_at = schedule.positions_at
        rhs = lambda t, x: -(Lff @ x + Lfl @ leader_at(t))  # noqa: E731

    x = p0[fd].copy()
    states[0, fd] = x
    states[0, ld] = leader_at(0.0)
    for k in range(steps):
        t = times[k]
        k1 = rhs(t, x)
        k2 = rhs(t + dt / 2, x + dt / 2 * k1)
        k3 = rhs(t + dt / 2, x + dt / 2 * k2)
        k4 = rhs(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        states[k + 1, fd] = x
        states[k + 1, ld] = leader_at(times[k + 1])

    inputs = -(states @ L.matrix.T)
    meta = {"dt": dt, "T": T, "schedule": schedule.mode}
    if not schedule.is_static:
        meta["label"] = BEST_EFFORT
    return Trajectory(times, states, inputs, meta)


def closed_form_followers(L: BlockLaplacian, p0, schedule: LeaderSchedule, t) -> np.ndarray:
    """Exact follower positions p*_f + expm(-L_ff t)(p_f(0) - p*_f).

    ``t`` may be a scalar or an array; the result has one stacked follower
    vector per time.
    """
    if not schedule.is_static:
        raise ValueError("closed form only covers static leaders")
    target = desired_followers(L, schedule.positions_at(0.0))
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    e0 = p0[L.follower_dofs] - target
    Lff = L.L_ff
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([target + expm(-Lff * tk) @ e0 for tk in ts])
    return out[0] if np.ndim(t) == 0 else out


def tracking_error(traj: Trajectory, L: BlockLaplacian, schedule: LeaderSchedule) -> ErrorSeries:
    """Distance of the followers from their desired positions at each sample."""
    if traj.states.shape[1] != L.matrix.shape[0]:
        raise DimensionMismatch("trajectory and Laplacian sizes differ")
    Lff, Lfl = L.L_ff, L.L_fl
    if schedule.is_static:
        pl = np.tile(schedule.positions_at(0.0), (len(traj), 1))
    else:
        pl = np.array([schedule.positions_at(t) for t in traj.times])
    target = np.linalg.solve(Lff, -(Lfl @ pl.T)).T
    err = np.linalg.norm(traj.states[:, L.follower_dofs] - target, axis=1)
    return ErrorSeries(traj.times.copy(), err)
