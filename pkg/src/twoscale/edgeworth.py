"""Leading-order Edgeworth corrections for the tilted, standardized count.

Under the twisted measure the standardized variable (mean 0, variance -> 1)
admits a normal approximation with Hermite-polynomial corrections.  Only the
leading printed coefficients are implemented:

* the skewness term ``H_2(x) kappa / sqrt(scale)`` in both regimes, and
* on the weak-separation branches, one location term ``H_1(x) c_1 * rate``.

Coefficients of the higher location terms exist but have no printed form and
are deliberately not guessed; the branch classification is still exact.

The module also exposes the exact tilted negative-binomial CDF, the natural
oracle for this approximation (the Esscher transform of a negative binomial
is again negative binomial).  Comparisons at its jump points should use a
half-integer continuity correction; no lattice correction is applied to the
expansion itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ParamError, RegimeError
from .levy import ModelPair, PowerScaling
from .models import WorkedModel, exact_law
from .twist import fast_expansion, slow_expansion, solve_twist

__all__ = [
    "EdgeworthExpansion",
    "EdgeworthDiagnostic",
    "hermite",
    "build_expansion",
    "tilted_cdf_approx",
    "tilted_negbin_cdf",
    "standardization",
    "diagnostic",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


def hermite(k: int, x):
    """Probabilists' Hermite polynomial H_k, k <= 3: phi^(k)(x) = (-1)^k H_k(x) phi(x)."""
    if k == 0:
        return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0
    if k == 1:
        return x
    if k == 2:
        return x * x - 1.0
    if k == 3:
        return x * (x * x - 3.0)
    raise ParamError(f"hermite implemented for k <= 3, got {k}")


@dataclass(frozen=True)
class EdgeworthExpansion:
    """Correction coefficients and the branch they apply to.

    ``kappa`` multiplies ``phi(x) H_2(x) / sqrt(n)`` (fast) or
    ``.. / sqrt(phi_n)`` (slow).  ``c1`` is present only on the branches whose
    location term survives (``psi_n sqrt(n)`` bounded away from 0, resp.
    ``phi_n^{3/2}/n``).
    """

    regime: str
    kappa: float
    c1: float | None
    applicable_branch: str


def build_expansion(model: ModelPair, scaling: PowerScaling, u: float) -> EdgeworthExpansion:
    """Compute kappa and (on the weak-separation branch) c_1 for the regime of f."""
    f = scaling.f
    if f == 1:
        raise RegimeError("Edgeworth corrections are defined for f != 1")
    if f > 1:
        exp2 = fast_expansion(model, u, order=1)
        ts = exp2.theta_star
        b = model.b
        sigma_sq = b * model.A.deriv(ts, 2)
        kappa = (b * model.A.deriv(ts, 3)) / (6.0 * sigma_sq**1.5)
        # psi_n sqrt(n) = n^(3/2 - f): vanishes iff f > 3/2.
        if f > 1.5:
            return EdgeworthExpansion("fast", kappa, None, "small_psi_sqrt_n")
        v1 = exp2.v[1]
        gamma_circ = (
            model.B.deriv(0.0, 2) * model.A.deriv(ts, 1) ** 2
            + model.B.deriv(0.0, 2) * model.A.deriv(ts, 0) * model.A.deriv(ts, 2)
            + model.B.deriv(0.0, 1) * model.A.deriv(ts, 3) * v1
        )
        return EdgeworthExpansion("fast", kappa, gamma_circ / (2.0 * sigma_sq), "large_psi_sqrt_n")
    exp2 = slow_expansion(model, u, order=2)
    tau = exp2.tau_star
    a = model.a
    at = a * tau
    sigma_sq = a * a * model.B.deriv(at, 2)
    kappa = (model.B.deriv(at, 3) * a**3) / (6.0 * sigma_sq**1.5)
    # phi_n^{3/2}/n = n^(3f/2 - 1): vanishes iff f < 2/3.
    if f < 2.0 / 3.0:
        return EdgeworthExpansion("slow", kappa, None, "small_phi32_over_n")
    w2 = exp2.w[1]
    a2 = model.A.deriv(0.0, 2)
    gamma_circ = (
        model.B.deriv(at, 1) * a2
        + 2.0 * a * a2 * model.B.deriv(at, 2) * tau
        + 0.5 * a * a * a2 * model.B.deriv(at, 3) * tau * tau
        + a**3 * model.B.deriv(at, 3) * w2
    )
    return EdgeworthExpansion("slow", kappa, gamma_circ / (2.0 * sigma_sq), "large_phi32_over_n")


def tilted_cdf_approx(model: ModelPair, scaling: PowerScaling, n: float, u: float, x):
    """Edgeworth CDF approximation for the tilted standardized count at x.

    Accepts scalar or array x.  Fast regime, strong separation:
    ``Phi(x) - phi(x) H_2(x) kappa / sqrt(n)``; weak separation subtracts
    additionally ``phi(x) H_1(x) c_1 psi_n``.  Slow regime analogously with
    ``sqrt(phi_n)`` and ``c_1 / psi_n``.
    """
    expansion = build_expansion(model, scaling, u)
    xs = np.asarray(x, dtype=float)
    dens = np.exp(-0.5 * xs * xs) / _SQRT2PI
    if expansion.regime == "fast":
        corr = hermite(2, xs) * (expansion.kappa / math.sqrt(n))
        if expansion.c1 is not None:
            corr = corr + hermite(1, xs) * (expansion.c1 * scaling.psi(n))
    else:
        corr = hermite(2, xs) * (expansion.kappa / math.sqrt(scaling.phi(n)))
        if expansion.c1 is not None:
            corr = corr + hermite(1, xs) * (expansion.c1 / scaling.psi(n))
    out = special.ndtr(xs) - dens * corr
    return float(out) if np.ndim(x) == 0 else out


def tilted_negbin_cdf(model: ModelPair, scaling: PowerScaling, n: float, u: float, counts):
    """Exact CDF of the theta_n-tilted count at integer values (poisson_gamma only).

    Tilting a negative binomial by theta shifts its success probability to
    ``1 - (1 - p) exp(theta)``; the twist domain guarantees this stays in (0, 1).
    """
    wm = WorkedModel.from_pair(model)
    if wm is None or wm.variant != "poisson_gamma":
        raise ParamError("the exact tilted CDF oracle needs the poisson_gamma model")
    law = exact_law(wm, scaling, n)
    theta = solve_twist(model, scaling, n, u).theta_n
    p_tilt = 1.0 - (1.0 - law.p) * math.exp(theta)
    cs = np.asarray(counts, dtype=float)
    out = np.where(cs < 0, 0.0, special.betainc(law.successes, np.maximum(cs, 0.0) + 1.0, p_tilt))
    return float(out) if np.ndim(counts) == 0 else out


def _tilted_compound_cdf(model: ModelPair, scaling: PowerScaling, n: float, u: float, values):
    """Exact CDF of the theta_n-tilted compound total (gamma_poisson only).

    The Poisson mixture is summed over a +-12 sigma window around the tilted
    rate; the mass outside is far below any tolerance used here.
    """
    wm = WorkedModel.from_pair(model)
    law = exact_law(wm, scaling, n)
    theta = solve_twist(model, scaling, n, u).theta_n
    rate_tilt = law.rate * (law.jump_rate / (law.jump_rate - theta)) ** law.jump_shape
    jump_rate_tilt = law.jump_rate - theta
    j_lo = max(1, int(rate_tilt - 12.0 * math.sqrt(rate_tilt) - 60.0))
    j_hi = int(rate_tilt + 12.0 * math.sqrt(rate_tilt) + 60.0)
    if j_hi - j_lo > 2_000_000:
        raise ParamError(
            "the exact tilted compound mixture has too many relevant terms at "
            f"this scale (Poisson rate {rate_tilt:.3g}); use a smaller n"
        )
    ys = np.atleast_1d(np.asarray(values, dtype=float))
    js = np.arange(j_lo, j_hi + 1, dtype=float)
    log_pmf = -rate_tilt + js * math.log(rate_tilt) - special.gammaln(js + 1.0)
    weights = np.exp(log_pmf)
    atom = math.exp(-rate_tilt) if j_lo == 1 else 0.0
    out = np.empty_like(ys)
    for i, y in enumerate(ys):
        if y < 0:
            out[i] = 0.0
            continue
        lower = special.gammainc(js * law.jump_shape, jump_rate_tilt * y)
        out[i] = atom + float(weights @ lower)
    return float(out[0]) if np.ndim(values) == 0 else out


def standardization(model: ModelPair, scaling: PowerScaling, n: float, u: float) -> tuple[float, float]:
    """(mean, scale) of the tilted count's standardization: mean u*n, scale by regime."""
    f = scaling.f
    if f == 1:
        raise RegimeError("standardization is defined for f != 1")
    if f > 1:
        ts = fast_expansion(model, u, order=0).theta_star
        scale = math.sqrt(model.b * model.A.deriv(ts, 2) * n)
    else:
        tau = slow_expansion(model, u, order=1).tau_star
        sig = model.a * math.sqrt(model.B.deriv(model.a * tau, 2))
        scale = sig * scaling.psi(n) * math.sqrt(scaling.phi(n))
    return u * n, scale


@dataclass(frozen=True)
class EdgeworthDiagnostic:
    """Approximation-vs-exact comparison rows (x, approx, exact) and their sup gap."""

    rows: tuple[tuple[float, float, float], ...]
    sup_gap: float


def diagnostic(
    model: ModelPair,
    scaling: PowerScaling,
    n: float,
    u: float,
    x_min: float = -6.0,
    x_max: float = 6.0,
    points: int | None = None,
) -> EdgeworthDiagnostic:
    """Compare the Edgeworth CDF with the exact tilted CDF on a standardized grid.

    For the lattice (poisson_gamma) variant the comparison runs over the
    count lattice inside [x_min, x_max], with the approximation evaluated at
    half-integer-corrected positions; the continuous (gamma_poisson) variant
    is compared pointwise.  ``points`` overrides the grid size (lattice
    variant: subsamples the lattice).
    """
    wm = WorkedModel.from_pair(model)
    if wm is None:
        raise ParamError("the Edgeworth diagnostic needs a built-in model pair")
    mean, scale = standardization(model, scaling, n, u)
    if wm.variant == "poisson_gamma":
        c_lo = int(math.floor(mean + x_min * scale))
        c_hi = int(math.ceil(mean + x_max * scale))
        counts = np.arange(max(c_lo, 0), c_hi + 1, dtype=float)
        if points is not None and counts.size > points:
            counts = counts[np.linspace(0, counts.size - 1, points).astype(int)]
        xs = (counts + 0.5 - mean) / scale
        exact = tilted_negbin_cdf(model, scaling, n, u, counts)
    else:
        xs = np.linspace(x_min, x_max, points if points is not None else 241)
        exact = _tilted_compound_cdf(model, scaling, n, u, mean + xs * scale)
    approx = tilted_cdf_approx(model, scaling, n, u, xs)
    gaps = np.abs(approx - exact)
    rows = tuple(
        (float(x), float(a), float(e)) for x, a, e in zip(xs, approx, exact)
    )
    return EdgeworthDiagnostic(rows=rows, sup_gap=float(np.max(gaps)))
