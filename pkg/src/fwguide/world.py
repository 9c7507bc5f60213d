"""Beacon motion, agent dynamics and the fixed-step simulation loop.

All beacons share one velocity profile ``v*(t)``, so the Fermat-Weber point
is advected with the same velocity and is solved only once, at ``t = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from fwguide import analysis
from fwguide.errors import PhysicsError
from fwguide.fermat_weber import existence_check, weiszfeld
from fwguide.geometry import bearings, projector_sum
from fwguide import _kernel
from fwguide.laws import (
    ControlLaw,
    ControllerState,
    NoiseModel,
    gain_vector,
    initial_controller_state,
)

DEFAULT_DT = 1e-3
DEFAULT_STRIDE = 10
DEFAULT_GUARD = 1e-3

MOTION_KINDS = ("stationary", "constant", "sinusoid")


def _arr(values) -> np.ndarray:
    return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class MotionProfile:
    """Common beacon velocity.

    ``constant``: ``v*(t) = velocity``.
    ``sinusoid``: ``v*_k(t) = offset_k + amp_k sin(freq t + phase_k)``.
    ``eta`` is the declared bound handed to sliding-mode laws; it is metadata
    and never enters the motion itself.
    """

    kind: str = "stationary"
    velocity: tuple[float, ...] = ()
    offset: tuple[float, ...] = ()
    amp: tuple[float, ...] = ()
    freq: float = 0.0
    phase: tuple[float, ...] = ()
    eta: float = 0.0

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}; expected one of {MOTION_KINDS}")

    def velocity_at(self, t: float, d: int) -> np.ndarray:
        if self.kind == "stationary":
            return np.zeros(d)
        if self.kind == "constant":
            return _arr(self.velocity)
        return _arr(self.offset) + _arr(self.amp) * np.sin(self.freq * t + self._phase(d))

    def displacement(self, t: float, d: int) -> np.ndarray:
        """Closed-form ``int_0^t v*(s) ds``."""
        if self.kind == "stationary":
            return np.zeros(d)
        if self.kind == "constant":
            return _arr(self.velocity) * t
        phase = self._phase(d)
        out = _arr(self.offset) * t
        if self.freq != 0.0:
            out = out + _arr(self.amp) / self.freq * (np.cos(phase) - np.cos(self.freq * t + phase))
        else:
            out = out + _arr(self.amp) * np.sin(phase) * t
        return out

    def acceleration_at(self, t: float, d: int) -> np.ndarray:
        if self.kind != "sinusoid":
            return np.zeros(d)
        return _arr(self.amp) * self.freq * np.cos(self.freq * t + self._phase(d))

    def speed_bound(self, d: int) -> float:
        """``sup_t ||v*(t)||_inf``."""
        if self.kind == "stationary":
            return 0.0
        if self.kind == "constant":
            return float(np.max(np.abs(self.velocity)))
        if self.freq == 0.0:
            return float(np.max(np.abs(_arr(self.offset) + _arr(self.amp) * np.sin(self._phase(d)))))
        return float(np.max(np.abs(self.offset) + np.abs(self.amp)))

    def accel_bound(self, d: int) -> float:
        """``sup_t ||dv*/dt(t)||_inf``."""
        if self.kind != "sinusoid":
            return 0.0
        return float(np.max(np.abs(self.amp)) * abs(self.freq))

    def _phase(self, d: int) -> np.ndarray:
        return _arr(self.phase) if self.phase else np.zeros(d)


@dataclass(frozen=True)
class BeaconField:
    """Initial beacon positions, positive weights and a shared motion profile."""

    positions: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]
    motion: MotionProfile = field(default_factory=MotionProfile)

    @cached_property
    def p0(self) -> np.ndarray:
        return _arr(self.positions)

    @cached_property
    def w(self) -> np.ndarray:
        return _arr(self.weights)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return len(self.positions[0])

    def validate(self) -> None:
        """Raise :class:`PhysicsError` if a modelling assumption fails."""
        if self.n < 3:
            raise PhysicsError("at least three beacons are required")
        if self.dim not in (2, 3):
            raise PhysicsError("only d = 2 and d = 3 are supported")
        if any(len(p) != self.dim for p in self.positions):
            raise PhysicsError("beacon positions must share one dimension")
        if len(self.weights) != self.n:
            raise PhysicsError("one weight per beacon is required")
        if np.any(self.w <= 0):
            raise PhysicsError("beacon weights must be positive")
        centered = self.p0 - self.p0.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
            raise PhysicsError(
                "beacons are collinear; the Fermat-Weber point is not guaranteed unique"
            )
        try:
            report = existence_check(self.p0, self.w)
        except ValueError as exc:
            raise PhysicsError(f"duplicate beacons: {exc}") from None
        if not report.interior_minimum:
            k = int(np.argmin(report.margins))
            raise PhysicsError(
                "uniqueness condition |sum_{i != k} w_i g_ik| > w_k fails at beacon "
                f"{k} (margin {report.margins[k]:.3g}); the optimum may be a beacon"
            )
        if self.motion.kind == "constant" and len(self.motion.velocity) != self.dim:
            raise PhysicsError("beacon velocity has the wrong dimension")
        if self.motion.kind == "sinusoid":
            for name in ("offset", "amp"):
                if len(getattr(self.motion, name)) != self.dim:
                    raise PhysicsError(f"sinusoid {name} has the wrong dimension")
            if self.motion.phase and len(self.motion.phase) != self.dim:
                raise PhysicsError("sinusoid phase has the wrong dimension")

    # -- kinematics -------------------------------------------------------

    def positions_at(self, t: float) -> np.ndarray:
        return self.p0 + self.motion.displacement(t, self.dim)

    def velocity_at(self, t: float) -> np.ndarray:
        return self.motion.velocity_at(t, self.dim)

    @cached_property
    def solution(self):
        sol = weiszfeld(self.p0, self.w)
        if not sol.converged:
            raise PhysicsError("Weiszfeld iteration did not converge for this beacon set")
        return sol

    @property
    def optimum(self) -> np.ndarray:
        """Fermat-Weber point at ``t = 0``."""
        return self.solution.point

    def optimum_at(self, t: float) -> np.ndarray:
        return self.optimum + self.motion.displacement(t, self.dim)

    # -- geometry at the optimum (time invariant) ---------------------------

    @cached_property
    def g_star(self) -> np.ndarray:
        return bearings(self.optimum, self.p0)[0]

    @cached_property
    def d_star(self) -> np.ndarray:
        return bearings(self.optimum, self.p0)[1]

    @cached_property
    def f_star(self) -> float:
        return float(self.w @ self.d_star)

    @cached_property
    def projector_sum_star(self) -> np.ndarray:
        """``sum_i w_i P_{g_i*}``."""
        return projector_sum(self.g_star, self.w)

    def ball_radius(self, margin: float) -> float:
        """Radius ``R = min_i d_i* - margin`` of the collision-free ball ``B_R``."""
        return float(self.d_star.min() - margin)


def beacon_state(field_: BeaconField, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Beacon positions and common velocity at time ``t``."""
    return field_.positions_at(t), field_.velocity_at(t)


def moving_optimum(field_: BeaconField, t: float) -> np.ndarray:
    return field_.optimum_at(t)


@dataclass(frozen=True)
class AgentState:
    p: np.ndarray
    v: np.ndarray | None = None
    controller: ControllerState = field(default_factory=ControllerState)
    t: float = 0.0
    collided: bool = False


@dataclass
class Trajectory:
    """Sampled closed-loop run.

    Rows are recorded every ``stride`` integration steps plus the final step.
    Optional arrays are None when the model or law does not carry them.
    """

    t: np.ndarray
    p: np.ndarray
    u: np.ndarray
    delta_norm: np.ndarray
    f: np.ndarray
    V: np.ndarray
    min_dist: np.ndarray
    v: np.ndarray | None = None
    beta: np.ndarray | None = None
    vhat: np.ndarray | None = None
    q: np.ndarray | None = None
    collision_time: float | None = None
    dt: float = DEFAULT_DT

    @property
    def collided(self) -> bool:
        return self.collision_time is not None

    def __len__(self) -> int:
        return len(self.t)


class _Layout:
    """Offsets of ``(p, v, v_hat, beta, q)`` inside the flat state vector."""

    def __init__(self, law: ControlLaw, d: int):
        self.d = d
        off = d
        self.v = self.vhat = self.beta = self.q = -1
        if law.model == "double":
            self.v, off = off, off + d
        if law.uses_vhat:
            self.vhat, off = off, off + d
        if law.uses_beta:
            self.beta, off = off, off + 1
        if law.uses_q:
            self.q, off = off, off + d
        self.size = off

    def _get(self, x, off):
        return x[off:off + self.d].copy() if off >= 0 else None

    def pack(self, state: AgentState) -> np.ndarray:
        x = np.zeros(self.size)
        x[: self.d] = state.p
        c = state.controller
        for off, val in ((self.v, state.v), (self.vhat, c.v_hat), (self.q, c.q)):
            if off >= 0:
                x[off:off + self.d] = val
        if self.beta >= 0:
            x[self.beta] = c.beta
        return x

    def unpack(self, x: np.ndarray, t: float, collided: bool = False) -> AgentState:
        return AgentState(
            p=x[: self.d].copy(),
            v=self._get(x, self.v),
            controller=ControllerState(
                v_hat=self._get(x, self.vhat),
                beta=float(x[self.beta]) if self.beta >= 0 else None,
                q=self._get(x, self.q),
            ),
            t=t,
            collided=collided,
        )


class _ClosedLoop:
    """Argument bundle handed to the compiled kernel."""

    def __init__(self, field_: BeaconField, law: ControlLaw, noise: NoiseModel | None):
        d, n = field_.dim, field_.n
        self.layout = lay = _Layout(law, d)
        m = field_.motion
        if m.kind == "constant":
            mvel = _arr(m.velocity)
        elif m.kind == "sinusoid":
            mvel = _arr(m.offset)
        else:
            mvel = np.zeros(d)
        mamp = _arr(m.amp) if m.kind == "sinusoid" else np.zeros(d)
        mphase = _arr(m.phase) if m.phase else np.zeros(d)
        noise_on = noise is not None and noise.active
        if noise_on:
            if len(noise.angles) != n:
                raise ValueError("the noise model needs one angle signal per beacon")
            noff = _arr([s.offset for s in noise.angles])
            namp = _arr([s.amp for s in noise.angles])
            nfreq = _arr([s.freq for s in noise.angles])
            naxis = _arr(noise.axis) / np.linalg.norm(noise.axis)
        else:
            noff = namp = nfreq = np.zeros(n)
            naxis = np.array([0.0, 0.0, 1.0])
        self.motion_args = (np.ascontiguousarray(field_.p0), _kernel.MOTION_CODES[m.kind], mvel,
                            mamp, float(m.freq), mphase)
        self.args = (
            np.ascontiguousarray(field_.p0), field_.w, _kernel.MOTION_CODES[m.kind], mvel, mamp,
            float(m.freq), mphase, noise_on, noff, namp, nfreq, naxis,
            _kernel.LAW_CODES[law.kind], gain_vector(law), d, lay.v, lay.vhat, lay.beta, lay.q,
        )
        self.rk4 = law.smooth

    def min_dist(self, t: float, x: np.ndarray) -> float:
        P0, mk, mv, ma, mf, mp = self.motion_args
        return float(_kernel._min_dist(t, x, P0, mk, mv, ma, mf, mp, self.layout.d))


def step(state: AgentState, law: ControlLaw, field_: BeaconField, dt: float,
         noise: NoiseModel | None = None, guard: float = DEFAULT_GUARD) -> AgentState:
    """Advance ``state`` by ``dt``.

    Classical RK4 for smooth closed loops, explicit Euler when the law uses
    an exact sign (``phi == 0``). Bearings are re-measured at every stage. The
    result is flagged as collided if any stage, or the end point, comes within
    ``guard`` of a beacon.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.collided:
        raise ValueError("cannot step a collided state")
    loop = _ClosedLoop(field_, law, noise)
    x = loop.layout.pack(state)
    x_next, seen = _kernel.advance(float(state.t), x, float(dt), loop.rk4, *loop.args)
    return loop.layout.unpack(x_next, state.t + dt, collided=seen < guard)


def simulate(field_: BeaconField, law: ControlLaw, p0, v0=None, *,
             noise: NoiseModel | None = None, dt: float = DEFAULT_DT, horizon: float = 10.0,
             stride: int = DEFAULT_STRIDE, guard: float = DEFAULT_GUARD) -> Trajectory:
    """Integrate the closed loop from ``p0`` until ``horizon`` or a collision.

    The controller starts from ``v_hat = 0``, ``beta = beta0``, ``q = 0``; a
    double integrator starts from ``v0`` (default rest). Diagnostics are
    recorded every ``stride`` steps and at the last step. A run that comes
    within ``guard`` of a beacon stops there and reports ``collision_time``.
    """
    if dt <= 0 or horizon <= 0 or stride < 1:
        raise ValueError("dt, horizon and stride must be positive")
    d = field_.dim
    loop = _ClosedLoop(field_, law, noise)
    init = AgentState(
        p=_arr(p0),
        v=(_arr(v0) if v0 is not None else np.zeros(d)) if law.model == "double" else None,
        controller=initial_controller_state(law, d),
    )
    x0 = loop.layout.pack(init)
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    steps, states, collided, diverged = _kernel.integrate(
        x0, float(dt), n_steps, int(stride), float(guard), loop.rk4, *loop.args
    )
    if diverged:
        raise FloatingPointError(f"state became non-finite at t={steps[-1] * dt}")
    t = steps * dt
    collision_time = float(t[-1]) if collided else None
    return _record(t, states, loop, law, field_, dt, collision_time)


def _record(t, X, loop: _ClosedLoop, law: ControlLaw, field_: BeaconField, dt, collision_time):
    lay = loop.layout
    d = lay.d
    m = len(t)
    U = _kernel.rhs_batch(t, X, *loop.args)
    P = X[:, :d].copy()
    shift = np.stack([field_.motion.displacement(ti, d) for ti in t])
    dist = np.linalg.norm(field_.p0[None, :, :] + shift[:, None, :] - P[:, None, :], axis=2)
    delta = np.linalg.norm(P - (field_.optimum + shift), axis=1)
    V = np.array([analysis.lyap_value(law.theorem, lay.unpack(X[i], t[i]), field_, t[i], law)
                  for i in range(m)])

    def cols(off, width):
        return X[:, off:off + width].copy() if off >= 0 else None

    return Trajectory(
        t=t,
        p=P,
        u=U,
        delta_norm=delta,
        f=dist @ field_.w,
        V=V,
        min_dist=dist.min(axis=1),
        v=cols(lay.v, d),
        beta=X[:, lay.beta].copy() if lay.beta >= 0 else None,
        vhat=cols(lay.vhat, d),
        q=cols(lay.q, d),
        collision_time=collision_time,
        dt=dt,
    )
