"""High-accuracy 1D reference solutions (independent of the grid solver).

Two closed-form/ODE constructions are provided:

* an explicit Dirichlet solution of -|u'|^alpha u'' = c0 on (-1, 1), used
  to measure convergence orders of the grid solver;
* a shooting integrator for the symmetric ergodic ODE
  -a |u'|^alpha u'' + |u'|^beta = f(x) + c, which tracks the blow-up
  location x*(c) of the maximal solution with u'(0) = 0 and recovers the
  ergodic constant of (-1, 1) by bisection on c (x*(c_erg) = 1).

The shooting integration works in the variable s = p^(1+alpha) (p = u')
near p = 0, switches to log p once p is O(1), and closes the remaining
distance to the blow-up point with a two-term asymptotic tail, giving
blow-up locations accurate to well below 1e-10.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BracketFailure, InsufficientSpan, InvalidRegime, OutOfRange
from .model import ExponentPair, ScalarField

_P_SWITCH_CAP = 2.0
_P_MAX = 1e8
_IVP_OPTS = {"rtol": 1e-11, "atol": 1e-13, "method": "DOP853"}


# ---------------------------------------------------------------------------
# explicit Dirichlet solution


def exact_dirichlet_1d(alpha: float, c0: float):
    """Exact solution of -|u'|^alpha u'' = c0 on (-1, 1), u(+-1) = 0.

    Returns a vectorized callable u(x) with attributes ``value_at_zero``
    and ``expression``.  Requires alpha > -1 and c0 > 0.
    """
    if alpha <= -1.0:
        raise OutOfRange("alpha must exceed -1")
    if c0 <= 0.0:
        raise OutOfRange("c0 must be positive")
    m = (2.0 + alpha) / (1.0 + alpha)
    amp = ((1.0 + alpha) * c0) ** (1.0 / (1.0 + alpha)) * (1.0 + alpha) / (2.0 + alpha)

    def u(x):
        x = np.asarray(x, dtype=float)
        return amp * (1.0 - np.abs(x) ** m)

    u.value_at_zero = amp
    u.exponent = m
    u.expression = f"{amp!r} * (1 - abs(x)**{m!r})"
    return u


# ---------------------------------------------------------------------------
# shooting for the symmetric ergodic ODE


@dataclass(frozen=True)
class ShootState:
    """Snapshot of the shooting trajectory at the phase switch points."""

    x: float
    p: float
    phase: str


def _forcing_margin(f: ScalarField, c: float, span: float = 1.0) -> float:
    """max of f + c on a fine sample of [0, span] (must be negative)."""
    xs = np.linspace(0.0, span, 4001)
    return float(np.max(f(xs)) + c)


def shoot_blowup(
    exponents: ExponentPair,
    c: float,
    f: ScalarField,
    trace_coefficient: float = 1.0,
) -> tuple:
    """Blow-up location x*(c) of the symmetric maximal solution.

    Integrates p = u' of  a |p|^alpha p' = p^beta - f(x) - c  from the
    symmetry point x = 0, p = 0.  Requires f + c < 0 on [0, 1] so that p
    is strictly increasing (InvalidRegime otherwise).  Returns
    (x_star, states) with the per-phase snapshots.
    """
    if f.dim != 1:
        raise OutOfRange("the shooting oracle is one-dimensional")
    if trace_coefficient <= 0.0:
        raise OutOfRange("trace coefficient must be positive")
    alpha, beta = exponents.alpha, exponents.beta
    margin = _forcing_margin(f, c)
    if margin >= -1e-12:
        raise InvalidRegime(
            f"shooting requires f + c < 0 on the half-domain (margin {margin:.3e})"
        )
    a = trace_coefficient
    opa = 1.0 + alpha

    def f_at(x) -> float:
        return float(np.asarray(f(np.atleast_1d(x)))[0])

    def denom(x, p):
        return (p**beta - f_at(x) - c) / a

    # phase 1: s = p^(1+alpha), regular through p = 0
    p_switch = min(_P_SWITCH_CAP, max(1.0, (2.0 * abs(margin)) ** (1.0 / beta)))
    s_end = p_switch**opa

    def rhs_s(s, x):
        p = s ** (1.0 / opa) if s > 0.0 else 0.0
        return 1.0 / (opa * denom(x, p))

    sol1 = solve_ivp(rhs_s, (0.0, s_end), [0.0], **_IVP_OPTS)
    if not sol1.success:
        raise InvalidRegime(f"shooting phase 1 failed: {sol1.message}")
    x1 = float(sol1.y[0, -1])
    states = [ShootState(x=x1, p=p_switch, phase="power")]

    # phase 2: ell = log p up to a large cutoff
    def rhs_log(ell, x):
        p = math.exp(ell)
        return a * p**opa / (p**beta - f_at(x) - c)

    sol2 = solve_ivp(
        rhs_log, (math.log(p_switch), math.log(_P_MAX)), [x1], **_IVP_OPTS
    )
    if not sol2.success:
        raise InvalidRegime(f"shooting phase 2 failed: {sol2.message}")
    x2 = float(sol2.y[0, -1])
    states.append(ShootState(x=x2, p=_P_MAX, phase="log"))

    # asymptotic tail: integral of a p^alpha / (p^beta - K) from P to infinity
    gap = beta - opa
    k_val = f_at(x2) + c
    tail = a * (
        _P_MAX ** (-gap) / gap + k_val * _P_MAX ** (-(beta + gap)) / (beta + gap)
    )
    x_star = x2 + tail
    states.append(ShootState(x=x_star, p=math.inf, phase="tail"))
    return x_star, tuple(states)


def ergodic_constant_1d(
    exponents: ExponentPair,
    f: ScalarField,
    trace_coefficient: float = 1.0,
    tol: float = 1e-8,
) -> tuple:
    """Ergodic constant of (-1, 1): the c with blow-up location x*(c) = 1.

    Returns (c_erg, report).  The report records the bracket that was
    expanded from below/above and the shooting evaluations used; the final
    |x*(c) - 1| is guaranteed <= tol (BracketFailure otherwise).
    """
    xs = np.linspace(-1.0, 1.0, 8001)
    sup_f = float(np.max(f(xs)))
    evaluations = []

    def xstar(c):
        val, _ = shoot_blowup(exponents, c, f, trace_coefficient)
        evaluations.append((c, val))
        return val

    # expand downward until the blow-up point enters the domain
    c_lo = -sup_f - 1.0
    for _ in range(200):
        if xstar(c_lo) < 1.0:
            break
        c_lo = -sup_f + 2.0 * (c_lo + sup_f)
    else:
        raise BracketFailure("could not bracket the ergodic constant from below")
    # expand upward (toward -sup f) until the blow-up point leaves the domain
    c_hi = None
    step = 0.5 * (-sup_f - c_lo)
    cand = c_lo + step
    for _ in range(200):
        if cand >= -sup_f - 1e-13:
            cand = 0.5 * (cand + (-sup_f))
            continue
        if xstar(cand) > 1.0:
            c_hi = cand
            break
        c_lo = cand
        cand = 0.5 * (cand + (-sup_f))
    else:
        raise BracketFailure("could not bracket the ergodic constant from above")

    c_erg = brentq(lambda c: xstar(c) - 1.0, c_lo, c_hi, xtol=1e-14, rtol=8.9e-16)
    final = xstar(c_erg)
    if abs(final - 1.0) > tol:
        raise BracketFailure(
            f"bisection finished with |x* - 1| = {abs(final - 1.0):.3e} > {tol:.1e}"
        )
    report = {
        "c_erg": float(c_erg),
        "bracket": [float(c_lo), float(c_hi)],
        "x_star_at_c": float(final),
        "evaluations": len(evaluations),
        "sup_f": sup_f,
        "tol": tol,
    }
    return float(c_erg), report


# ---------------------------------------------------------------------------
# profile fitting


def blowup_profile_fit(distances, values, case: str) -> dict:
    """Least-squares fit of boundary-layer samples to the blow-up profile.

    case "power": fit log v = -chi log d + log C  (v ~ C d^-chi);
    case "log":   fit v = C |log d| + k           (v ~ C |log d|).

    Requires at least 8 samples spanning a decade in d (InsufficientSpan).
    Returns the fitted amplitude ``c_hat``, the exponent ``chi_hat``
    (power case only) and the fit residual.
    """
    d = np.asarray(distances, dtype=float)
    v = np.asarray(values, dtype=float)
    if d.shape != v.shape or d.ndim != 1:
        raise OutOfRange("distances and values must be matching 1D arrays")
    if case not in ("power", "log"):
        raise OutOfRange(f"unknown profile case {case!r}")
    keep = np.isfinite(d) & np.isfinite(v) & (d > 0.0)
    if case == "power":
        keep &= v > 0.0
    d, v = d[keep], v[keep]
    if d.size < 8:
        raise InsufficientSpan(f"only {d.size} usable samples (need >= 8)")
    span = float(d.max() / d.min())
    if span < 10.0:
        raise InsufficientSpan(
            f"samples span a factor {span:.2f} in distance (need >= 10)"
        )
    if case == "power":
        design = np.column_stack([np.log(d), np.ones_like(d)])
        coef, res, _, _ = np.linalg.lstsq(design, np.log(v), rcond=None)
        chi_hat = -float(coef[0])
        c_hat = float(np.exp(coef[1]))
        fitted = design @ coef
        misfit = float(np.max(np.abs(fitted - np.log(v))))
        return {
            "case": "power",
            "chi_hat": chi_hat,
            "c_hat": c_hat,
            "samples": int(d.size),
            "span": span,
            "max_log_misfit": misfit,
        }
    design = np.column_stack([np.abs(np.log(d)), np.ones_like(d)])
    coef, _, _, _ = np.linalg.lstsq(design, v, rcond=None)
    c_hat = float(coef[0])
    fitted = design @ coef
    misfit = float(np.max(np.abs(fitted - v)))
    return {
        "case": "log",
        "chi_hat": None,
        "c_hat": c_hat,
        "intercept": float(coef[1]),
        "samples": int(d.size),
        "span": span,
        "max_misfit": misfit,
    }


def export_report(report: dict) -> str:
    """Deterministic JSON serialization (sorted keys, no timestamps)."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
