"""Bearing-only control laws.

Every law is built on the weighted bearing sum ``w = sum_i w_i g_i``, which
is ``-grad f`` for exact bearings. Laws are pure functions of a
:class:`Measurement` and, for the adaptive and sliding-mode variants, a
:class:`ControllerState`. Stateful laws return ``(u, dstate)`` where
``dstate`` holds time derivatives of the internal states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fwguide import _kernel

SINGLE_INTEGRATOR_LAWS = ("gradient", "finite_time", "adaptive_si", "smc_si", "adaptive_smc_si")
DOUBLE_INTEGRATOR_LAWS = ("pd_di", "adaptive_di", "smc_di")
ALL_LAWS = SINGLE_INTEGRATOR_LAWS + DOUBLE_INTEGRATOR_LAWS

# Laws whose right-hand side contains sgn(.)
SWITCHING_LAWS = ("smc_si", "adaptive_smc_si", "smc_di")

# Certificate (theorem) associated with each law.
THEOREM_OF_LAW = {
    "gradient": 1,
    "finite_time": 3,
    "adaptive_si": 4,
    "smc_si": 5,
    "adaptive_smc_si": 6,
    "pd_di": 7,
    "adaptive_di": 8,
    "smc_di": 9,
}

DEFAULT_PHI = 1e-3


@dataclass(frozen=True)
class ControlLaw:
    """A law variant together with its gains.

    Only the gains relevant to ``kind`` are read; the rest keep defaults.
    ``beta0`` is the initial adaptive gain of ``adaptive_smc_si``. ``phi`` is
    the boundary-layer width of the sign surrogate (0 means exact sign).
    """

    kind: str = "gradient"
    k: float = 1.0
    a: float = 0.5
    beta: float = 1.0
    k_beta: float = 1.0
    tau_beta: float = 0.1
    beta0: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    phi: float = DEFAULT_PHI

    def __post_init__(self):
        if self.kind not in ALL_LAWS:
            raise ValueError(f"unknown control law {self.kind!r}; expected one of {ALL_LAWS}")
        if not 0.0 < self.a < 1.0:
            raise ValueError("finite-time exponent a must lie in (0, 1)")
        for name in ("k", "beta", "k_beta", "tau_beta", "k1", "k2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"gain {name} must be positive")
        if self.phi < 0:
            raise ValueError("boundary layer width phi must be non-negative")
        if self.beta0 < 0:
            raise ValueError("initial adaptive gain beta0 must be non-negative")

    @property
    def model(self) -> str:
        return "double" if self.kind in DOUBLE_INTEGRATOR_LAWS else "single"

    @property
    def theorem(self) -> int:
        return THEOREM_OF_LAW[self.kind]

    @property
    def uses_vhat(self) -> bool:
        return self.kind in ("adaptive_si", "adaptive_di")

    @property
    def uses_beta(self) -> bool:
        return self.kind == "adaptive_smc_si"

    @property
    def uses_q(self) -> bool:
        return self.kind == "smc_di"

    @property
    def switching(self) -> bool:
        return self.kind in SWITCHING_LAWS

    @property
    def smooth(self) -> bool:
        """True when the closed loop can be integrated with Runge-Kutta."""
        return not self.switching or self.phi > 0


@dataclass(frozen=True)
class Measurement:
    bearings: np.ndarray
    own_velocity: np.ndarray | None = None
    relative_velocity: np.ndarray | None = None
    time: float = 0.0


@dataclass(frozen=True)
class ControllerState:
    v_hat: np.ndarray | None = None
    beta: float | None = None
    q: np.ndarray | None = None


@dataclass(frozen=True)
class StateRate:
    """Time derivative of a :class:`ControllerState` (components may be negative)."""

    v_hat: np.ndarray | None = None
    beta: float | None = None
    q: np.ndarray | None = None


def initial_controller_state(law: ControlLaw, d: int) -> ControllerState:
    """Zero estimates, ``beta(0) = beta0``, ``q(0) = 0``."""
    return ControllerState(
        v_hat=np.zeros(d) if law.uses_vhat else None,
        beta=float(law.beta0) if law.uses_beta else None,
        q=np.zeros(d) if law.uses_q else None,
    )


# ---------------------------------------------------------------------------
# measurement noise


@dataclass(frozen=True)
class AngleSignal:
    """``theta(t) = offset + amp * sin(freq * t)`` in radians."""

    offset: float = 0.0
    amp: float = 0.0
    freq: float = 0.0

    def __call__(self, t):
        return self.offset + self.amp * np.sin(self.freq * t)

    def inf_cos(self) -> float:
        """Infimum of ``cos(theta(t))`` over ``t >= 0``."""
        if self.amp == 0.0 or self.freq == 0.0:
            return math.cos(self.offset)
        lo, hi = self.offset - abs(self.amp), self.offset + abs(self.amp)
        # an odd multiple of pi inside [lo, hi] drives cos to -1
        j = math.ceil((lo - math.pi) / (2 * math.pi))
        if math.pi + 2 * math.pi * j <= hi:
            return -1.0
        return min(math.cos(lo), math.cos(hi))


@dataclass(frozen=True)
class NoiseModel:
    """Per-beacon rotations applied to measured bearings.

    In 3-D every rotation is about the fixed unit ``axis``.
    """

    angles: tuple[AngleSignal, ...] = ()
    axis: tuple[float, ...] = (0.0, 0.0, 1.0)

    @property
    def active(self) -> bool:
        return any(s.offset != 0.0 or s.amp != 0.0 for s in self.angles)

    def thetas(self, t: float) -> np.ndarray:
        return np.array([s(t) for s in self.angles])

    def worst_alignment(self) -> float:
        """``Lambda = min_i inf_t cos(theta_i(t))``; 1 for a noiseless model."""
        if not self.angles:
            return 1.0
        return min(s.inf_cos() for s in self.angles)

    def apply(self, g: np.ndarray, t: float) -> np.ndarray:
        if not self.angles:
            return g
        theta = self.thetas(t)
        return rotate_bearings(g, theta, np.asarray(self.axis, dtype=float))


def rotate_bearing(g, theta: float, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Rotate one bearing by ``theta``.

    Planar rotation in 2-D; rotation about ``axis`` (Rodrigues) in 3-D.
    A zero bearing is returned unchanged.
    """
    g = np.asarray(g, dtype=float)
    return rotate_bearings(g[None, :], np.array([theta]), np.asarray(axis, dtype=float))[0]


def rotate_bearings(g: np.ndarray, theta: np.ndarray, axis: np.ndarray) -> np.ndarray:
    g = np.ascontiguousarray(g, dtype=float)
    if g.shape[1] not in (2, 3):
        raise ValueError("bearing rotation is only defined for d = 2 or 3")
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return _kernel.rotate_rows(g, np.asarray(theta, dtype=float), axis)


def rotation_matrix(theta: float, d: int = 2, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    return np.stack([rotate_bearing(e, theta, axis) for e in np.eye(d)], axis=1)


# ---------------------------------------------------------------------------
# laws


def sig(x, a: float) -> np.ndarray:
    """Componentwise ``sgn(x) |x|^a``."""
    return _kernel.sig(np.atleast_1d(np.asarray(x, dtype=float)), float(a))


def sgn_phi(x, phi: float) -> np.ndarray:
    """Exact sign for ``phi == 0``, otherwise the saturation ``x / max(|x|, phi)``."""
    return _kernel.sgn_phi(np.atleast_1d(np.asarray(x, dtype=float)), float(phi))


def wsum(meas: Measurement, weights) -> np.ndarray:
    """``sum_i w_i g_i`` over the measured bearings."""
    return np.asarray(weights, dtype=float) @ np.asarray(meas.bearings, dtype=float)


def gain_vector(law: ControlLaw) -> np.ndarray:
    return np.array([law.k, law.a, law.beta, law.k_beta, law.tau_beta, law.k1, law.k2, law.phi])


def _output(law: ControlLaw, meas: Measurement, weights, state: ControllerState | None):
    w = wsum(meas, weights)
    d = w.shape[0]
    zero = np.zeros(d)

    def vec(x):
        return zero if x is None else np.asarray(x, dtype=float)

    state = state or ControllerState()
    return _kernel.law_output(
        _kernel.LAW_CODES[law.kind],
        gain_vector(law),
        w,
        vec(meas.own_velocity),
        vec(meas.relative_velocity),
        vec(state.v_hat),
        float(state.beta or 0.0),
        vec(state.q),
    )


def law_gradient(meas: Measurement, weights, law: ControlLaw | None = None) -> np.ndarray:
    """``u = sum_i w_i g_i``; with rotated bearings this is the perturbed gradient law."""
    return wsum(meas, weights)


def law_finite_time(meas: Measurement, weights, law: ControlLaw) -> np.ndarray:
    """``u = sig^a(sum_i w_i g_i)``."""
    return _output(law, meas, weights, None)[0]


def law_adaptive_si(meas, weights, law: ControlLaw, state: ControllerState):
    """``u = w + v_hat`` with ``dv_hat/dt = k w``."""
    u, dvhat, _, _ = _output(law, meas, weights, state)
    return u, StateRate(v_hat=dvhat)


def law_smc_si(meas, weights, law: ControlLaw) -> np.ndarray:
    return _output(law, meas, weights, None)[0]


def law_adaptive_smc_si(meas, weights, law: ControlLaw, state: ControllerState):
    """Sliding-mode law whose gain follows ``dbeta/dt = k_beta (|w|_1 - tau_beta beta)``."""
    u, _, dbeta, _ = _output(law, meas, weights, state)
    return u, StateRate(beta=float(dbeta))


def law_pd_di(meas, weights, law: ControlLaw) -> np.ndarray:
    _require(meas.own_velocity, "own velocity")
    return _output(law, meas, weights, None)[0]


def law_adaptive_di(meas, weights, law: ControlLaw, state: ControllerState):
    _require(meas.own_velocity, "own velocity")
    u, dvhat, _, _ = _output(law, meas, weights, state)
    return u, StateRate(v_hat=dvhat)


def law_smc_di(meas, weights, law: ControlLaw, state: ControllerState):
    """``u = 2w - 2(v - v*) + beta sgn(q - (v - v*))`` with ``dq/dt = w - (v - v*)``."""
    _require(meas.relative_velocity, "relative velocity")
    u, _, _, dq = _output(law, meas, weights, state)
    return u, StateRate(q=dq)


def _require(value, what):
    if value is None:
        raise ValueError(f"this law needs the {what} in the measurement")


def evaluate(law: ControlLaw, meas: Measurement, weights, state: ControllerState | None = None):
    """Dispatch to the law named by ``law.kind``.

    Returns ``(u, dstate)``; ``dstate`` is None for memoryless laws.
    """
    kind = law.kind
    if kind == "gradient":
        return law_gradient(meas, weights), None
    if kind == "finite_time":
        return law_finite_time(meas, weights, law), None
    if kind == "smc_si":
        return law_smc_si(meas, weights, law), None
    if kind == "pd_di":
        return law_pd_di(meas, weights, law), None
    if state is None:
        raise ValueError(f"law {kind!r} needs a controller state")
    if kind == "adaptive_si":
        return law_adaptive_si(meas, weights, law, state)
    if kind == "adaptive_smc_si":
        return law_adaptive_smc_si(meas, weights, law, state)
    if kind == "adaptive_di":
        return law_adaptive_di(meas, weights, law, state)
    return law_smc_di(meas, weights, law, state)


__all__ = [
    "ALL_LAWS",
    "AngleSignal",
    "ControlLaw",
    "ControllerState",
    "DOUBLE_INTEGRATOR_LAWS",
    "Measurement",
    "NoiseModel",
    "SINGLE_INTEGRATOR_LAWS",
    "StateRate",
    "evaluate",
    "initial_controller_state",
    "law_adaptive_di",
    "law_adaptive_si",
    "law_adaptive_smc_si",
    "law_finite_time",
    "law_gradient",
    "law_pd_di",
    "law_smc_di",
    "law_smc_si",
    "rotate_bearing",
    "sgn_phi",
    "sig",
    "wsum",
]
