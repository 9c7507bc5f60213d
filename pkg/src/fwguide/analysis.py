"""Lyapunov certificates and convergence diagnostics evaluated on trajectories.

Functions here only read a trajectory plus the beacon field, law and noise
model that produced it; re-running them always gives the same report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from fwguide.geometry import bearings, hessian_min_eig

MU = 0.5
BETA_BAR_MARGIN = 0.1
STRONG_CONVEXITY_GRID = 41
MONOTONE_SLACK = 1e-9
ENVELOPE_SLACK = 0.05
LAYER_SLACK = 1e-6


# ---------------------------------------------------------------------------
# Lyapunov functions


def bearing_energy(p, field_, t: float) -> float:
    """``z^T W (g - g*) = sum_i w_i d_i (1 - g_i . g_i*)``.

    Non-negative and zero only at the optimum; equals ``f(p) - f(p*)``.
    """
    g, dist = bearings(p, field_.positions_at(t))
    cos = np.einsum("ij,ij->i", g, field_.g_star)
    return float(field_.w @ (dist * (1.0 - cos)))


def beta_bar(field_) -> float:
    """Reference gain used in the adaptive sliding-mode certificate (> eta)."""
    return field_.motion.eta + BETA_BAR_MARGIN


def lyap_value(theorem: int, state, field_, t: float, law=None) -> float:
    """Value of the Lyapunov function used for ``theorem`` (1-9).

    ``state`` is an :class:`~fwguide.world.AgentState`; ``law`` supplies the
    gains that scale the estimator terms (theorems 4, 6 and 8).
    """
    p = np.asarray(state.p, dtype=float)
    if theorem in (1, 2):
        delta = p - field_.optimum_at(t)
        return 0.5 * float(delta @ delta)
    energy = bearing_energy(p, field_, t)
    if theorem in (3, 5):
        return energy
    c = state.controller
    vstar = field_.velocity_at(t)
    if theorem == 4:
        e = c.v_hat - vstar
        return energy + float(e @ e) / (2.0 * law.k)
    if theorem == 6:
        return energy + (c.beta - beta_bar(field_)) ** 2 / (2.0 * law.k_beta)
    if theorem == 7:
        return energy + 0.5 * float(state.v @ state.v)
    if theorem == 8:
        a = state.v - c.v_hat
        b = c.v_hat - vstar
        return energy + 0.5 * float(a @ a) + float(b @ b) / (2.0 * law.k2)
    if theorem == 9:
        r = c.q - state.v + vstar
        return energy + 0.5 * float(c.q @ c.q) + 0.5 * float(r @ r)
    raise ValueError(f"no certificate for theorem {theorem}")


# ---------------------------------------------------------------------------
# constants derived from the beacon geometry


def exponential_rate(field_, delta0: float) -> float:
    """Guaranteed decay rate ``sigma`` of ``|delta|^2`` under the gradient law."""
    lam = np.linalg.eigvalsh(field_.projector_sum_star)[0]
    return float(lam / (delta0 + field_.d_star.max()))


def chi(field_) -> float:
    eig = np.linalg.eigvalsh(field_.projector_sum_star)
    return float(eig[0] ** 2 / (4.0 * eig[-1]))


def h_of(field_, radius: float) -> float:
    """Lower bound ``(min d* - r) / (r + max d*)^2`` on ``min d_i / max d_i^2``."""
    return float((field_.d_star.min() - radius) / (radius + field_.d_star.max()) ** 2)


def finite_time_constants(field_, a: float, margin: float) -> dict:
    """``chi``, ``h(R)`` and ``kappa`` of the finite-time estimate."""
    R = field_.ball_radius(margin)
    c = chi(field_)
    h = h_of(field_, R)
    kappa = field_.dim ** ((1.0 - a) / 2.0) * (c * h) ** ((a + 1.0) / 2.0)
    return {"R": R, "chi": c, "h_R": h, "kappa": kappa}


def settling_bound(V0: float, kappa: float, a: float) -> dict:
    """Settling-time estimates from ``dV/dt <= -kappa V^((a+1)/2)``.

    ``T`` keeps ``kappa`` raised to ``(a+1)/2`` in the denominator;
    ``T_comparison`` is the plain comparison value
    ``2 V0^((1-a)/2) / (kappa (1-a))``.
    """
    num = 2.0 * V0 ** ((1.0 - a) / 2.0)
    return {
        "T": num / (kappa ** ((a + 1.0) / 2.0) * (1.0 - a)),
        "T_comparison": num / (kappa * (1.0 - a)),
    }


def strong_convexity_constant(field_, radius: float, points: int = STRONG_CONVEXITY_GRID) -> float:
    """``m = min lambda_min(H(p))`` over a regular grid restricted to ``B_R``."""
    d = field_.dim
    axis = np.linspace(-radius, radius, points)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    grid = grid[np.linalg.norm(grid, axis=1) < radius] + field_.optimum
    return float(hessian_min_eig(grid, field_.p0, field_.w).min())


def noisy_ultimate_bound(field_, alignment: float, m: float, mu: float = MU) -> float:
    """``sqrt(2 (1 - L) f(p*) / ((1 - mu) m L))`` for rotated bearings.

    ``alignment`` is ``L = min_i inf_t cos(theta_i)``; infinite if ``L <= 0``.
    """
    if alignment <= 0.0:
        return math.inf
    return math.sqrt(2.0 * (1.0 - alignment) * field_.f_star / ((1.0 - mu) * m * alignment))


def adaptive_smc_radius(field_, law, margin: float, mu: float = MU) -> dict:
    """Neighbourhood radius ``xi`` of the adaptive sliding-mode law (reported only)."""
    R = field_.ball_radius(margin)
    lam = np.linalg.eigvalsh(field_.projector_sum_star)[0]
    rho = min(law.k * chi(field_) * h_of(field_, R), law.k_beta * law.tau_beta)
    bb = beta_bar(field_)
    zeta = law.tau_beta * bb**2 / (lam * rho * mu)
    xi = (zeta + math.sqrt(zeta**2 + 4.0 * zeta * field_.d_star.max())) / 2.0
    return {"beta_bar": bb, "rho": rho, "zeta": zeta, "xi": xi}


# ---------------------------------------------------------------------------
# trajectory checks


def monotone(values, times=None, slack_rate: float = 0.0, slack: float = MONOTONE_SLACK,
             mask=None) -> bool:
    """Whether consecutive differences stay below ``slack + slack_rate * dt``.

    ``mask[i]`` False skips the pair ``(i, i+1)``.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return True
    diffs = np.diff(values)
    allow = np.full(diffs.shape, slack)
    if times is not None:
        allow = allow + slack_rate * np.diff(np.asarray(times, dtype=float))
    ok = diffs <= allow
    if mask is not None:
        ok = ok | ~np.asarray(mask, dtype=bool)
    return bool(np.all(ok))


def rate_fit(traj, window=None, floor: float = 1e-12) -> float:
    """Least-squares slope of ``log |delta(t)|`` over ``window = (t0, t1)``.

    Samples with ``|delta|`` at or below ``floor`` are ignored.
    """
    t = np.asarray(traj.t, dtype=float)
    y = np.asarray(traj.delta_norm, dtype=float)
    keep = y > floor
    if window is not None:
        keep &= (t >= window[0]) & (t <= window[1])
    if keep.sum() < 2:
        raise ValueError("fewer than two usable samples in the fitting window")
    slope, _ = np.polyfit(t[keep], np.log(y[keep]), 1)
    return float(slope)


def ultimate_bound_check(traj, bound: float, after: float) -> bool:
    """True iff ``|delta(t)| <= bound`` for every sample with ``t >= after``."""
    t = np.asarray(traj.t)
    sel = t >= after
    if not np.any(sel):
        return False
    return bool(np.all(np.asarray(traj.delta_norm)[sel] <= bound))


def settling_time(traj, tol: float) -> float | None:
    """First sample time after which ``|delta|`` stays at or below ``tol``."""
    above = np.flatnonzero(np.asarray(traj.delta_norm) > tol)
    if above.size == 0:
        return float(traj.t[0])
    last = above[-1]
    if last == len(traj.t) - 1:
        return None
    return float(traj.t[last + 1])


def finite_time_check(traj, tol: float, field_=None, law=None, margin: float | None = None) -> dict:
    """Settling time to ``tol`` plus, when the field is given, the theorem's bound.

    The bound uses ``V(0) = z^T W (g - g*)`` at the first sample and only
    applies to starts inside ``B_R``.
    """
    out = {"settling_time": settling_time(traj, tol)}
    if field_ is None:
        return out
    consts = finite_time_constants(field_, law.a, margin)
    V0 = bearing_energy(traj.p[0], field_, float(traj.t[0]))
    bounds = settling_bound(V0, consts["kappa"], law.a)
    out.update(consts)
    out["V0"] = V0
    out["in_ball"] = bool(traj.delta_norm[0] < consts["R"])
    out["T_bound"] = bounds["T"]
    out["T_bound_comparison"] = bounds["T_comparison"]
    st = out["settling_time"]
    out["within_bound"] = st is not None and st <= bounds["T"]
    return out


def envelope_check(traj, sigma: float, slack: float = ENVELOPE_SLACK) -> bool:
    """``|delta(t)|^2 <= (1 + slack) |delta(0)|^2 exp(-sigma t)`` at every sample."""
    t = np.asarray(traj.t)
    d2 = np.asarray(traj.delta_norm) ** 2
    return bool(np.all(d2 <= (1.0 + slack) * d2[0] * np.exp(-sigma * (t - t[0]))))


def wsum_series(traj, field_, noise=None) -> np.ndarray:
    """``sum_i w_i g_i`` (as measured) at every recorded sample."""
    out = np.empty_like(traj.p)
    for i, (ti, pi) in enumerate(zip(traj.t, traj.p)):
        g, _ = bearings(pi, field_.positions_at(ti))
        if noise is not None and noise.active:
            g = noise.apply(g, ti)
        out[i] = field_.w @ g
    return out


def outside_layer_mask(traj, field_, law) -> np.ndarray | None:
    """Pairs of consecutive samples both outside the sign boundary layer.

    The switching variable is the bearing sum for single-integrator laws and
    ``r = q - (v - v*)`` for the double-integrator law. Returns None if the
    trajectory lacks ``q`` for the latter.
    """
    if law.kind == "smc_di":
        if traj.q is None or traj.v is None:
            return None
        vstar = np.stack([field_.velocity_at(ti) for ti in traj.t])
        s = traj.q - traj.v + vstar
    else:
        s = wsum_series(traj, field_)
    outside = np.max(np.abs(s), axis=1) >= max(law.phi, 0.0)
    return outside[:-1] & outside[1:]


def pointwise_checks(traj, field_, tol: float = 1e-12) -> dict:
    """Pointwise bounds that every trajectory must satisfy.

    ``energy_signs``: ``z^T W (g - g*) >= 0`` and ``z*^T W (g - g*) <= 0``.
    ``distance_bounds``: triangle-inequality bounds on ``d_i``.
    ``acute_in_ball``: samples inside ``B_R`` (with ``R = min d*``) see every beacon at
    an acute angle to its bearing from the optimum.
    """
    w = field_.w
    signs_ok = dist_ok = acute_ok = True
    dmax, dmin = field_.d_star.max(), field_.d_star.min()
    for ti, pi in zip(traj.t, traj.p):
        beacons = field_.positions_at(ti)
        g, dist = bearings(pi, beacons)
        cos = np.einsum("ij,ij->i", g, field_.g_star)
        a = w @ (dist * (1.0 - cos))
        b = w @ (field_.d_star * (cos - 1.0))
        signs_ok &= bool(a >= -tol and b <= tol)
        delta = float(np.linalg.norm(pi - field_.optimum_at(ti)))
        scale = tol * max(1.0, delta + dmax)
        dist_ok &= bool(
            np.all(dist <= delta + dmax + scale)
            and np.all(dist >= delta - dmax - scale)
            and np.all(dist >= dmin - delta - scale)
        )
        if delta < dmin:
            acute_ok &= bool(np.all(cos > 0))
    return {"energy_signs": signs_ok, "distance_bounds": dist_ok, "acute_in_ball": acute_ok}


# ---------------------------------------------------------------------------
# reports


@dataclass
class CertificateReport:
    law: str
    theorem: int
    passed: bool
    collision_free: bool
    final_delta: float
    monotone: bool | None = None
    rate: float | None = None
    settling_time: float | None = None
    ultimate_bound_observed: float | None = None
    details: dict = field(default_factory=dict)
    V: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> dict:
        """JSON-friendly view (drops the ``V`` samples)."""
        out = asdict(self)
        out.pop("V")
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def certify(traj, field_, law, noise=None, *, tol: float, after: float, margin: float) -> CertificateReport:
    """Evaluate the certificate matching ``law`` on ``traj``.

    ``tol`` is the convergence (or neighbourhood) tolerance on ``|delta|``;
    ``after`` is the time from which ultimate bounds must hold; ``margin`` is
    the ``epsilon`` defining ``B_R``.
    """
    kind = law.kind
    noisy = noise is not None and noise.active
    theorem = 2 if kind == "gradient" and noisy else law.theorem
    collision_free = not traj.collided
    t = np.asarray(traj.t)
    final_delta = float(traj.delta_norm[-1])
    tail = traj.delta_norm[t >= after]
    observed = float(tail.max()) if tail.size else None
    details: dict = {}
    mono = None
    rate = None
    settle = settling_time(traj, tol)

    if theorem == 1:
        sigma = exponential_rate(field_, float(traj.delta_norm[0]))
        mono = monotone(0.5 * np.asarray(traj.delta_norm) ** 2)
        env = envelope_check(traj, sigma)
        try:
            rate = rate_fit(traj)
        except ValueError:
            rate = None
        details.update(sigma=sigma, envelope=env)
        ok = mono and env and final_delta <= tol
    elif theorem == 2:
        R = field_.ball_radius(margin)
        m = strong_convexity_constant(field_, R)
        lam = noise.worst_alignment()
        bound = noisy_ultimate_bound(field_, lam, m)
        details.update(alignment=lam, m=m, mu=MU, bound=bound)
        ok = ultimate_bound_check(traj, bound, after)
    elif theorem == 3:
        ft = finite_time_check(traj, tol, field_, law, margin)
        details.update({k: v for k, v in ft.items() if k != "settling_time"})
        mono = monotone(traj.V, traj.t, slack_rate=LAYER_SLACK)
        ok = ft["settling_time"] is not None and (ft["within_bound"] or not ft["in_ball"])
    elif theorem in (5, 9):
        mask = outside_layer_mask(traj, field_, law)
        if mask is not None:
            mono = monotone(traj.V, mask=mask, slack=LAYER_SLACK)
        details.update(phi=law.phi)
        ok = final_delta <= tol and mono is not False
    elif theorem == 6:
        beta = np.asarray(traj.beta)
        details.update(beta_min=float(beta.min()), beta_max=float(beta.max()),
                       beta_final=float(beta[-1]))
        details.update(adaptive_smc_radius(field_, law, margin))
        ok = observed is not None and observed <= tol and beta.min() >= 0.0
    else:
        mono = monotone(traj.V, traj.t, slack_rate=LAYER_SLACK)
        ok = mono and final_delta <= tol
        if traj.v is not None:
            vstar = field_.velocity_at(float(t[-1]))
            details["final_velocity_error"] = float(np.linalg.norm(traj.v[-1] - vstar))
        if traj.vhat is not None:
            vstar = field_.velocity_at(float(t[-1]))
            details["final_estimate_error"] = float(np.linalg.norm(traj.vhat[-1] - vstar))

    return CertificateReport(
        law=kind,
        theorem=theorem,
        passed=bool(ok and collision_free),
        collision_free=collision_free,
        final_delta=final_delta,
        monotone=mono,
        rate=rate,
        settling_time=settle,
        ultimate_bound_observed=observed,
        details=details,
        V=np.asarray(traj.V),
    )
