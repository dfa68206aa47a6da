"""Analytic tail models and extreme-value quantities for the best-of-n process.

A :class:`TailModel` is a distribution ``F`` of empirical objective values
with a known extreme-value index ``xi`` and right endpoint ``x*``. For each
model the module provides

* ``U(t)``, the left-continuous inverse of ``1 / (1 - F)``,
* ``V(t)``, the left-continuous inverse of ``1 / (-log F)``, for which the
  maximum of ``n`` draws has the law of ``V(n S)`` with
  ``P(S <= s) = exp(-1/s)``,
* the scale functions ``a(t)`` (closed form) and ``a0(t)`` (built from V),
* samplers for ``Z_n`` and a Monte-Carlo estimator of ``E[(Z_n - x)_+]``
  together with its large-n prediction ``m_xi a(n) + U(n) - x``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .rng import substream

EULER_GAMMA = 0.57721566490153286061
_XI_ZERO = 1e-6
_CHUNK = 1 << 17

KINDS = ("Pareto", "BoundedPower", "LogPower", "Exponential")


@dataclass(frozen=True)
class TailModel:
    """One of four distributions with closed-form tails.

    ========== ============================== =============== =========
    kind       survival ``1 - F(x)``           support         xi
    ========== ============================== =============== =========
    Pareto     ``x**(-1/xi)``                  ``[1, inf)``    (0, 1)
    BoundedPow ``(x* - x)**(-1/xi)``           ``[x*-1, x*]``  < 0
    LogPower   ``exp(-(x* - x)**-alpha)``      ``(-inf, x*)``  0
    Exponential``exp(-x)``                     ``[0, inf)``    0
    ========== ============================== =============== =========
    """

    kind: str
    xi: float = 0.0
    endpoint: float = math.inf
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "Pareto":
            if not 0 < self.xi < 1:
                raise ValueError("Pareto needs 0 < xi < 1 (finite mean)")
            if self.endpoint != math.inf:
                raise ValueError("Pareto has an infinite endpoint")
        elif self.kind == "BoundedPower":
            if not self.xi < 0:
                raise ValueError("BoundedPower needs xi < 0")
            if not math.isfinite(self.endpoint) or self.endpoint == 0:
                raise ValueError("BoundedPower needs a finite, non-zero endpoint")
        elif self.kind == "LogPower":
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("LogPower needs alpha > 0")
            if not math.isfinite(self.endpoint) or self.endpoint == 0:
                raise ValueError("LogPower needs a finite, non-zero endpoint")
            if self.xi != 0:
                raise ValueError("LogPower has xi = 0")
        elif self.xi != 0 or self.endpoint != math.inf:
            raise ValueError("Exponential has xi = 0 and an infinite endpoint")

    # constructors ---------------------------------------------------------

    @classmethod
    def pareto(cls, xi: float) -> "TailModel":
        return cls("Pareto", xi)

    @classmethod
    def bounded_power(cls, xi: float, endpoint: float = -1.0) -> "TailModel":
        return cls("BoundedPower", xi, endpoint)

    @classmethod
    def log_power(cls, alpha: float = 1.0, endpoint: float = -1.0) -> "TailModel":
        return cls("LogPower", 0.0, endpoint, alpha)

    @classmethod
    def exponential(cls) -> "TailModel":
        return cls("Exponential")

    @classmethod
    def from_spec(cls, spec: dict) -> "TailModel":
        """Build from ``{"kind": ..., "xi" | "alpha": ..., "endpoint": ...}``."""
        kind = spec.get("kind")
        endpoint = spec.get("endpoint")
        if kind == "Pareto":
            return cls.pareto(float(spec["xi"]))
        if kind == "BoundedPower":
            return cls.bounded_power(float(spec["xi"]), -1.0 if endpoint is None else float(endpoint))
        if kind == "LogPower":
            return cls.log_power(float(spec["alpha"]), -1.0 if endpoint is None else float(endpoint))
        if kind == "Exponential":
            return cls.exponential()
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")

    def to_spec(self) -> dict:
        d = asdict(self)
        if self.kind != "LogPower":
            d.pop("alpha")
        if not math.isfinite(self.endpoint):
            d.pop("endpoint")
        return d

    def __str__(self) -> str:
        return json.dumps(self.to_spec(), sort_keys=True)

    # distribution ---------------------------------------------------------

    @property
    def lower(self) -> float:
        return {"Pareto": 1.0, "BoundedPower": self.endpoint - 1.0,
                "LogPower": -math.inf, "Exponential": 0.0}[self.kind]

    @property
    def bounded_below(self) -> bool:
        return math.isfinite(self.lower)

    def sf(self, x):
        """Survival function ``1 - F(x)``."""
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "Pareto":
                out = np.where(x < 1, 1.0, np.power(np.maximum(x, 1.0), -1.0 / self.xi))
            elif self.kind == "BoundedPower":
                gap = np.clip(self.endpoint - x, 0.0, 1.0)
                out = np.power(gap, -1.0 / self.xi)
            elif self.kind == "LogPower":
                gap = self.endpoint - x
                out = np.where(gap <= 0, 0.0,
                               np.exp(-np.power(np.maximum(gap, 1e-300), -self.alpha)))
            else:
                out = np.where(x < 0, 1.0, np.exp(-np.maximum(x, 0.0)))
        return out

    def cdf(self, x):
        """Distribution function, accurate also where it is tiny."""
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "Pareto":
                out = np.where(x <= 1, 0.0, -np.expm1(-np.log(np.maximum(x, 1.0)) / self.xi))
            elif self.kind == "BoundedPower":
                gap = np.clip(self.endpoint - x, 0.0, 1.0)
                out = -np.expm1(np.log(gap) / -self.xi)
            elif self.kind == "LogPower":
                gap = self.endpoint - x
                out = np.where(gap <= 0, 1.0,
                               -np.expm1(-np.power(np.maximum(gap, 1e-300), -self.alpha)))
            else:
                out = np.where(x <= 0, 0.0, -np.expm1(-np.maximum(x, 0.0)))
        return out

    def neg_log_cdf(self, x):
        """``-log F(x)``, from whichever of F and 1 - F is small."""
        sf = self.sf(x)
        with np.errstate(divide="ignore"):
            return np.where(sf < 0.5, -np.log1p(-np.minimum(sf, 0.5)), -np.log(self.cdf(x)))

    def isf(self, q):
        """Inverse survival function: the quantile with upper-tail mass ``q``."""
        q = np.asarray(q, dtype=np.float64)
        with np.errstate(divide="ignore"):
            if self.kind == "Pareto":
                return np.power(q, -self.xi)
            if self.kind == "BoundedPower":
                return self.endpoint - np.power(q, -self.xi)
            if self.kind == "LogPower":
                return self.endpoint - np.power(-np.log(q), -1.0 / self.alpha)
            return -np.log(q)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        # 1 - U is uniform on (0, 1], which keeps isf finite
        return self.isf(1.0 - rng.random(size))

    # quantile and scale functions ----------------------------------------

    def U(self, t):
        """Closed-form ``U(t) = (1/(1-F))^{<-}(t)``, t >= 1."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "Pareto":
            return np.power(t, self.xi)
        if self.kind == "BoundedPower":
            return self.endpoint - np.power(t, self.xi)
        if self.kind == "LogPower":
            with np.errstate(divide="ignore"):
                return self.endpoint - np.power(np.log(t), -1.0 / self.alpha)
        with np.errstate(divide="ignore"):
            return np.log(t)

    def a(self, t):
        """Closed-form scale function ``a(t)``."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "Pareto":
            return self.xi * np.power(t, self.xi)
        if self.kind == "BoundedPower":
            return -self.xi * np.power(t, self.xi)
        if self.kind == "LogPower":
            return np.power(np.log(t), -1.0 - 1.0 / self.alpha) / self.alpha
        return np.ones_like(t)

    def V_closed(self, t):
        """``V(t) = F^{<-}(exp(-1/t))`` through the inverse survival function."""
        t = np.asarray(t, dtype=np.float64)
        return self.isf(-np.expm1(-1.0 / t))


# --------------------------------------------------------------------- GEV


def gev_cdf(xi: float, z):
    """Standard GEV distribution ``exp(-(1 + xi z)_+^(-1/xi))``; Gumbel at xi = 0."""
    z = np.asarray(z, dtype=np.float64)
    if xi == 0:
        return np.exp(-np.exp(-z))
    t = 1.0 + xi * z
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inner = np.exp(-np.power(np.where(t > 0, t, 1.0), -1.0 / xi))
    below = 0.0 if xi > 0 else 1.0
    out = np.where(t > 0, inner, below)
    return out if out.ndim else float(out)


def gev_mean(xi: float) -> float:
    """Mean of the standard GEV law: ``-Gamma(-xi) - 1/xi``, or Euler's constant at 0."""
    if xi >= 1:
        raise ValueError(f"the GEV mean is infinite for xi >= 1 (got {xi})")
    if abs(xi) < _XI_ZERO:
        return EULER_GAMMA
    return -math.gamma(-xi) - 1.0 / xi


def sample_S(rng: np.random.Generator, size=None):
    """Draw ``S`` with ``P(S <= s) = exp(-1/s)`` as the reciprocal of a unit exponential."""
    return 1.0 / rng.standard_exponential(size)


# ------------------------------------------------------------ U, V, a, a0


def quantile_U(model: TailModel, t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 1):
        raise ValueError("U(t) is defined for t >= 1")
    return model.U(t)


def quantile_V(model: TailModel, t, rtol: float = 1e-12):
    """``V(t) = inf{y : 1/(-log F(y)) >= t}`` by vectorized bisection.

    Bisects on ``-log F(y) <= 1/t`` over the model support, evaluating
    ``-log F`` from the smaller of F and 1 - F so that very small and very
    large ``t`` both keep full precision.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0):
        raise ValueError("V(t) is defined for t > 0")
    level = 1.0 / t
    scalar = level.ndim == 0
    level = np.atleast_1d(level)

    def right_of_root(y):
        return model.neg_log_cdf(y) <= level

    if math.isfinite(model.lower):
        lo = np.full(level.shape, model.lower)
    else:
        lo = np.full(level.shape, model.endpoint - 1.0)
        step = 1.0
        for _ in range(1000):
            bad = right_of_root(lo)
            if not bad.any():
                break
            step *= 2.0
            lo = np.where(bad, lo - step, lo)
        else:
            raise ValueError("V(t) is below the float range; t is too small")
    if math.isfinite(model.endpoint):
        hi = np.full(level.shape, model.endpoint)
    else:
        hi = lo + 1.0
        step = 1.0
        for _ in range(1000):
            bad = ~right_of_root(hi)
            if not bad.any():
                break
            step *= 2.0
            hi = np.where(bad, hi + step, hi)
        else:
            raise ValueError("V(t) is above the float range; t is too large")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        right = right_of_root(mid)
        hi = np.where(right, mid, hi)
        lo = np.where(right, lo, mid)
        scale = np.maximum(np.maximum(np.abs(lo), np.abs(hi)), 1e-300)
        if np.all(hi - lo <= rtol * scale):
            break
    return float(hi[0]) if scalar else hi


def scale_a0(model: TailModel, t: float) -> float:
    """The scale function built from V.

    ``xi V(t)`` for xi > 0, ``-xi (x* - V(t))`` for xi < 0, and
    ``V(t) - (1/t) int V(s) ds`` for xi = 0. The xi = 0 integral runs over
    ``(0, t)`` when the support is bounded below. Otherwise V(s) falls to
    minus infinity fast enough as s -> 0 that the integral diverges, and it
    runs over ``(1, t)`` instead; the choice only shifts a0 by ``O(1/t)``.
    """
    if t <= 1:
        raise ValueError("a0(t) is evaluated for t > 1")
    v = quantile_V(model, t)
    if model.xi > 0:
        return model.xi * v
    if model.xi < 0:
        return -model.xi * (model.endpoint - v)

    def integrand(u: float) -> float:
        s = math.exp(u)
        return quantile_V(model, s) * s

    u_hi = math.log(t)
    u_lo = -40.0 if model.bounded_below else 0.0
    pieces = np.unique(np.clip([u_lo, -5.0, 0.0, 5.0, u_hi], u_lo, u_hi))
    total = 0.0
    for a_, b_ in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(integrand, a_, b_, epsabs=0.0, epsrel=1e-9, limit=200)
        total += val
    return v - total / t


# ---------------------------------------------------------------- sampling


def sample_Zn_direct(model: TailModel, n: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Maxima of ``n`` i.i.d. draws by inversion, ``size`` times."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = np.empty(size)
    rows = max(1, _CHUNK // n)
    for start in range(0, size, rows):
        m = min(rows, size - start)
        out[start:start + m] = model.sample(rng, (m, n)).max(axis=1)
    return out


def sample_Zn_via_VS(model: TailModel, n: int, rng: np.random.Generator, size: int = 1,
                     S: np.ndarray | None = None) -> np.ndarray:
    """``V(n S)`` with V by bisection; pass ``S`` to make the map deterministic."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if S is None:
        S = sample_S(rng, size)
    return quantile_V(model, n * np.asarray(S, dtype=np.float64))


def zn_from_exponentials(model: TailModel, n, E: np.ndarray) -> np.ndarray:
    """Exact ``Z_n`` from unit exponentials ``E``: ``F^{<-}(exp(-E/n))``.

    This is ``V(n/E)`` in closed form. Reusing one ``E`` for several n gives
    common random numbers, and the output is non-decreasing in n.
    """
    return model.isf(-np.expm1(-np.asarray(E, dtype=np.float64) / n))


def exponential_blocks(seed: int, reps: int):
    """Unit exponentials for ``reps`` replications in fixed-size seeded blocks."""
    for b, start in enumerate(range(0, reps, _CHUNK)):
        yield substream(seed, b).standard_exponential(min(_CHUNK, reps - start))


# ------------------------------------------------------------ Monte Carlo


@dataclass(frozen=True)
class Estimate:
    model: str
    n: float
    x: float
    reps: int
    mean: float
    stderr: float
    prediction: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _check_below_endpoint(model: TailModel, x: float) -> None:
    if not x < model.endpoint:
        raise ValueError(f"x={x} must lie below the endpoint {model.endpoint}")


def theorem1_prediction(model: TailModel, n: float, x: float) -> float:
    """Large-n approximation ``m_xi a(n) + U(n) - x`` of ``E[(Z_n - x)_+]``."""
    _check_below_endpoint(model, x)
    return float(gev_mean(model.xi) * model.a(n) + model.U(n) - x)


def mc_expected_excess(model: TailModel, n: float, x: float, reps: int, seed: int) -> Estimate:
    """Monte-Carlo ``E[(Z_n - x)_+]`` with its standard error."""
    _check_below_endpoint(model, x)
    if reps < 1000:
        raise ValueError("reps must be >= 1000")
    s1 = s2 = 0.0
    for E in exponential_blocks(seed, reps):
        v = np.maximum(zn_from_exponentials(model, n, E) - x, 0.0)
        s1 += v.sum()
        s2 += np.square(v).sum()
    mean = s1 / reps
    var = max(s2 / reps - mean * mean, 0.0) * reps / (reps - 1)
    return Estimate(model.kind, float(n), float(x), int(reps), mean, math.sqrt(var / reps),
                    theorem1_prediction(model, n, x))
