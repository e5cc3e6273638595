"""Tilting-equation solver and the twisting-factor expansions.

The exponential change of measure is driven by the solution ``theta_n`` of

    beta'(alpha(theta) psi_n) * alpha'(theta) = u,

equivalently ``gamma_n'(theta_n) = u*n``.  The left-hand side is the
derivative of a convex function, hence increasing, so a bracketed Newton
iteration with bisection fallback always converges once the root is
straddled.

As the timescales separate, ``theta_n`` admits power expansions:

* fast regime: ``theta_n = theta_star + sum_k v_k psi_n^k`` where
  ``theta_star`` solves ``b alpha'(theta) = u``;
* slow regime: ``theta_n = sum_k w_k psi_n^{-k}`` where ``w_1 = tau_star``
  solves ``a beta'(a tau) = u``.

Coefficients up to order 2 are produced here for any model: ``v_1``/``v_2``
by implicit differentiation of the tilting equation, ``w_2`` by Richardson
extrapolation of the solved twist map (no general closed form exists).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import NoSolutionError, NotRareError, OrderError, ParamError, UnsupportedSignError
from .levy import ModelPair, PowerScaling, lmgf

__all__ = [
    "TwistSolution",
    "FastExpansion",
    "SlowExpansion",
    "solve_twist",
    "fast_expansion",
    "slow_expansion",
]

#: Relative residual the twist solver must reach (it typically lands at ~1e-16).
RESIDUAL_TOL = 1e-10

_MAX_NEWTON = 200
_MAX_EXPAND = 400


@dataclass(frozen=True)
class TwistSolution:
    """Solution of the tilting equation at a concrete (n, u)."""

    theta_n: float
    residual: float
    iterations: int
    bracket: tuple[float, float]


@dataclass(frozen=True)
class FastExpansion:
    """Fast-regime expansion; ``v[0]`` is theta_star, ``v[k]`` the psi^k coefficient."""

    theta_star: float
    v: tuple[float, ...]
    truncation_order: int


@dataclass(frozen=True)
class SlowExpansion:
    """Slow-regime expansion; ``w[0]`` is ``w_1 = tau_star``, ``w[k-1]`` the psi^{-k} coefficient."""

    tau_star: float
    w: tuple[float, ...]
    truncation_order: int


def _solve_increasing(
    g: Callable[[float], float],
    gprime: Callable[[float], float],
    lo: float,
    hi: float,
    scale: float,
) -> tuple[float, float, int]:
    """Root of an increasing function with g(lo) < 0 < g(hi).

    Newton steps are clamped to the live bracket; any step that leaves it is
    replaced by bisection.  Iterates to (near) machine precision; returns
    (root, |g(root)|, iterations).
    """
    x = 0.5 * (lo + hi)
    gx = g(x)
    best_x, best_g = x, abs(gx)
    for it in range(1, _MAX_NEWTON + 1):
        if gx > 0:
            hi = x
        else:
            lo = x
        dg = gprime(x)
        if dg > 0 and math.isfinite(dg):
            cand = x - gx / dg
        else:
            cand = math.nan
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        step = abs(cand - x)
        x = cand
        gx = g(x)
        if abs(gx) < best_g:
            best_x, best_g = x, abs(gx)
        if abs(gx) <= 1e-14 * scale and step <= 1e-15 * max(abs(x), 1.0):
            return x, abs(gx), it
        if hi - lo <= 4.0 * math.ulp(max(abs(lo), abs(hi))):
            break
    return best_x, best_g, _MAX_NEWTON


def _theta_max(model: ModelPair, psi: float) -> float:
    """Largest theta keeping ``alpha(theta) * psi`` inside B's domain."""
    sup_a = model.A.domain_sup
    sup_b = model.B.domain_sup
    if math.isinf(sup_b):
        return sup_a
    target = sup_b / psi
    # alpha is convex with alpha'(0) = a > 0, hence increasing on [0, inf).
    hi = 1.0
    if math.isfinite(sup_a):
        hi = sup_a
        if model.A.deriv(hi * (1.0 - 1e-12), 0) * psi <= sup_b:
            return sup_a
    else:
        for _ in range(_MAX_EXPAND):
            if model.A.deriv(hi, 0) >= target:
                break
            hi *= 2.0
        else:
            return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if model.A.deriv(mid if mid < sup_a else sup_a * (1 - 1e-15), 0) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    return lo


def _twist_at_psi(model: ModelPair, psi: float, u: float) -> TwistSolution:
    """Core solve of ``beta'(alpha(theta) psi) alpha'(theta) = u`` on (0, theta_max)."""

    def g(theta: float) -> float:
        # The tilted mean blows past the float range well before theta_max
        # when psi is large; that still brackets the root from above.
        try:
            return model.B.deriv(model.A.deriv(theta, 0) * psi, 1) * model.A.deriv(theta, 1) - u
        except OverflowError:
            return math.inf

    def gprime(theta: float) -> float:
        try:
            inner = model.A.deriv(theta, 0) * psi
            return (
                psi * model.B.deriv(inner, 2) * model.A.deriv(theta, 1) ** 2
                + model.B.deriv(inner, 1) * model.A.deriv(theta, 2)
            )
        except OverflowError:
            return math.inf

    theta_max = _theta_max(model, psi)

    # Starting point per the bracket recipe: theta_star + 1 when available.
    try:
        theta_star = _solve_theta_star(model, u)
    except NoSolutionError:
        theta_star = None
    if math.isfinite(theta_max):
        hi = min((theta_star + 1.0) if theta_star is not None else 0.5 * theta_max, 0.99 * theta_max)
        hi = max(hi, 1e-12 * theta_max)
    else:
        hi = (theta_star + 1.0) if theta_star is not None else 1.0

    ghi = g(hi)
    expansions = 0
    while ghi < 0:
        expansions += 1
        if expansions > _MAX_EXPAND:
            raise NoSolutionError(
                f"the tilted mean never reaches u = {u} on the admissible bracket"
            )
        lo_candidate = hi
        if math.isfinite(theta_max):
            new_hi = theta_max - 0.5 * (theta_max - hi)
            if theta_max - new_hi <= math.ulp(theta_max) * 4:
                raise NoSolutionError(
                    f"the tilted mean stays below u = {u} up to the domain edge {theta_max}"
                )
        else:
            new_hi = hi * 2.0
            if new_hi > 1e100 or (expansions > 60 and g(new_hi) <= ghi + 1e-300):
                raise NoSolutionError(
                    f"the tilted mean is bounded below u = {u}; no twist exists"
                )
        hi, _ = new_hi, lo_candidate
        ghi = g(hi)

    lo = 0.5 * hi
    while g(lo) > 0:
        hi = lo  # every probe above the root tightens the bracket
        lo *= 0.5
        if lo < 5e-324:
            # g(0+) = a*b - u < 0, so this cannot happen for admissible u.
            raise NoSolutionError("failed to bracket the twist from below")

    root, gabs, iters = _solve_increasing(g, gprime, lo, hi, scale=u)
    residual = gabs / u
    if residual > RESIDUAL_TOL:
        raise NoSolutionError(
            f"twist solver stalled at relative residual {residual:.3e} (> {RESIDUAL_TOL})"
        )
    return TwistSolution(theta_n=root, residual=residual, iterations=iters, bracket=(lo, hi))


def solve_twist(model: ModelPair, scaling: PowerScaling, n: float, u: float) -> TwistSolution:
    """Solve ``gamma_n'(theta) = u*n`` for the twisting factor ``theta_n``.

    Requires the rare direction ``u > a*b`` and ``n >= 1``.  The reported
    residual is ``|gamma_n'(theta_n) - u n| / (u n)``.
    """
    if n < 1:
        raise ParamError(f"n must be >= 1, got {n}")
    _require_rare(model, u)
    return _twist_at_psi(model, scaling.psi(n), u)


def _require_rare(model: ModelPair, u: float) -> None:
    ab = model.a * model.b
    if not u > ab:
        raise NotRareError(f"u = {u} must exceed a*b = {ab} for a rare upper tail")


def _solve_theta_star(model: ModelPair, u: float) -> float:
    """Solve ``b alpha'(theta) = u`` on (0, A.domain_sup)."""
    b = model.b

    def g(theta: float) -> float:
        return b * model.A.deriv(theta, 1) - u

    def gprime(theta: float) -> float:
        return b * model.A.deriv(theta, 2)

    sup_a = model.A.domain_sup
    if math.isfinite(sup_a):
        hi = sup_a * (1.0 - 1e-12)
        if g(hi) < 0:
            raise NoSolutionError(f"b*alpha' stays below u = {u} on A's domain")
    else:
        hi = 1.0
        for k in range(_MAX_EXPAND):
            ghi = g(hi)
            if ghi > 0:
                break
            hi *= 2.0
            if hi > 1e100:
                raise NoSolutionError(f"b*alpha' appears bounded below u = {u}")
        else:
            raise NoSolutionError(f"b*alpha' appears bounded below u = {u}")
    lo = 0.5 * hi
    while g(lo) > 0:
        hi = lo
        lo *= 0.5
        if lo < 5e-324:
            raise NoSolutionError("failed to bracket theta_star from below")
    root, gabs, _ = _solve_increasing(g, gprime, lo, hi, scale=u)
    if gabs / u > 1e-12:
        raise NoSolutionError(f"theta_star solve stalled at residual {gabs / u:.3e}")
    return root


def _solve_tau_star(model: ModelPair, u: float) -> float:
    """Solve ``a beta'(a tau) = u`` on (0, B.domain_sup / a)."""
    a = model.a

    def g(tau: float) -> float:
        return a * model.B.deriv(a * tau, 1) - u

    def gprime(tau: float) -> float:
        return a * a * model.B.deriv(a * tau, 2)

    sup_b = model.B.domain_sup
    if math.isfinite(sup_b):
        hi = (sup_b / a) * (1.0 - 1e-12)
        if g(hi) < 0:
            raise NoSolutionError(f"a*beta'(a tau) stays below u = {u} on B's domain")
    else:
        hi = 1.0
        for _ in range(_MAX_EXPAND):
            if g(hi) > 0:
                break
            hi *= 2.0
            if hi > 1e100:
                raise NoSolutionError(f"a*beta'(a tau) appears bounded below u = {u}")
        else:
            raise NoSolutionError(f"a*beta'(a tau) appears bounded below u = {u}")
    lo = 0.5 * hi
    while g(lo) > 0:
        hi = lo
        lo *= 0.5
        if lo < 5e-324:
            raise NoSolutionError("failed to bracket tau_star from below")
    root, gabs, _ = _solve_increasing(g, gprime, lo, hi, scale=u)
    if gabs / u > 1e-12:
        raise NoSolutionError(f"tau_star solve stalled at residual {gabs / u:.3e}")
    return root


def fast_expansion(model: ModelPair, u: float, order: int = 2) -> FastExpansion:
    """Expansion coefficients of ``theta_n`` in powers of ``psi_n`` (fast regime).

    Implicit differentiation of the tilting equation at ``psi = 0`` gives

        v_1 = -(alpha alpha'/alpha'')(theta*) * beta''(0)/beta'(0)

    and, collecting the order-psi^2 terms,

        v_2 = -[ b alpha'''(t*) v1^2 / 2
                 + beta''(0) v1 (alpha(t*) alpha''(t*) + alpha'(t*)^2)
                 + beta'''(0) alpha(t*)^2 alpha'(t*) / 2 ] / (b alpha''(t*)).
    """
    if order not in (0, 1, 2):
        raise OrderError(f"fast expansion supports orders 0..2, got {order}")
    _require_rare(model, u)
    theta_star = _solve_theta_star(model, u)
    coeffs = [theta_star]
    if order >= 1:
        a0 = model.A.deriv(theta_star, 0)
        a1 = model.A.deriv(theta_star, 1)
        a2 = model.A.deriv(theta_star, 2)
        b1 = model.B.deriv(0.0, 1)
        b2 = model.B.deriv(0.0, 2)
        v1 = -(a0 * a1 / a2) * (b2 / b1)
        coeffs.append(v1)
        if order >= 2:
            a3 = model.A.deriv(theta_star, 3)
            b3 = model.B.deriv(0.0, 3)
            v2 = -(
                0.5 * b1 * a3 * v1 * v1
                + b2 * v1 * (a0 * a2 + a1 * a1)
                + 0.5 * b3 * a0 * a0 * a1
            ) / (b1 * a2)
            coeffs.append(v2)
    return FastExpansion(theta_star=theta_star, v=tuple(coeffs), truncation_order=order)


def slow_expansion(model: ModelPair, u: float, order: int = 2) -> SlowExpansion:
    """Expansion coefficients of ``theta_n`` in powers of ``1/psi_n`` (slow regime).

    ``w_1 = tau_star`` solves ``a beta'(a tau) = u``.  ``w_2`` has no printed
    general closed form; it is extracted by Richardson-extrapolated
    differentiation of the solved twist map ``x -> theta(psi = 1/x)`` at
    ``x -> 0`` using the nodes ``{h, h/2, h/4}``.
    """
    if order not in (1, 2):
        raise OrderError(f"slow expansion supports orders 1..2, got {order}")
    if model.a <= 0:
        raise UnsupportedSignError("slow expansion requires a = alpha'(0) > 0")
    _require_rare(model, u)
    tau_star = _solve_tau_star(model, u)
    coeffs = [tau_star]
    if order >= 2:
        def curved(x: float) -> float:
            theta = _twist_at_psi(model, 1.0 / x, u).theta_n
            return (theta - tau_star * x) / (x * x)

        # Step scaled to the expansion's own curvature: pilot w2 at x0 sets
        # the x-scale on which the tau* term dominates, h = 1e-3 of it.
        x0 = 1e-2
        w2_pilot = curved(x0)
        scale = abs(tau_star / w2_pilot) if w2_pilot != 0 else 1.0
        h = 1e-3 * min(max(scale, 1e-2), 10.0)
        g_h, g_h2, g_h4 = curved(h), curved(h / 2), curved(h / 4)
        r1, r2 = 2.0 * g_h2 - g_h, 2.0 * g_h4 - g_h2
        coeffs.append((4.0 * r2 - r1) / 3.0)
    return SlowExpansion(tau_star=tau_star, w=tuple(coeffs), truncation_order=order)


def direct_exponent(model: ModelPair, scaling: PowerScaling, n: float, u: float) -> float:
    """The exact tilted exponent ``gamma_n(theta_n) - theta_n u n``.

    This equals the full expansion of either regime including every sublinear
    term and the o(1) remainder, with no truncation error by construction.
    """
    sol = solve_twist(model, scaling, n, u)
    return lmgf(model, scaling, n, sol.theta_n, 0) - sol.theta_n * u * n
