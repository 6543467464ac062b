"""One-loop causal splitting by dispersion relations.

A SelfEnergy is a spectral density plus a subtraction order n at q^2 = 0:

    Sigma(q^2) = (q^2)^n / pi * integral_{s0}^inf ds rho(s) / (s^n (s - q^2 -+ i0))

evaluated with the i0 prescription realized as an explicit principal value
plus i pi delta decomposition (no finite-epsilon extrapolation).  The
central normalization chooses the minimal n making all momentum derivatives
through order omega vanish at zero; subtraction point fixed at q = 0.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .propagators_kinematics import two_body_phase_space


class SplittingError(ValueError):
    pass


# --------------------------------------------------------------------------- spectral densities


@dataclass(frozen=True)
class SpectralDensity:
    """Evaluator s -> rho(s) >= 0 above a threshold s0, with a large-s bound
    rho(s) <= bound_const * s^growth used for tail control."""

    fn: Callable[[float], float]
    threshold: float
    growth: float  # exponent; -inf for cut-off densities
    bound_const: float = 1.0
    label: str = "rho"

    def __call__(self, s):
        return self.fn(s)


def bubble_density(m1: float, m2: float, scale: float | None = None) -> SpectralDensity:
    """Two-particle spectral density of the one-loop bubble.

    rho(s) = w * phase_space(m1, m2, s) with the combinatorial weight w
    taken from the complete-pairing count of the underlying squared-field
    contraction (two pairings), and threshold (m1 + m2)^2.  An optional
    exp(-s/scale^2) weight models the test-function falloff for densities
    that would otherwise have no ultraviolet cutoff.
    """
    from .model_registry import builtin
    from .symbolic_fields import Generator, index_of
    from .wick_pairing import complete_pairings

    sm = builtin("scalar_model")
    gpsi = Generator(1)
    w = len(
        complete_pairings(
            [index_of(gpsi, gpsi)], [index_of(gpsi, gpsi)], sm, require_full=True
        )
    )
    s0 = (m1 + m2) ** 2

    if scale is None:
        def fn(s):
            return w * two_body_phase_space(m1, m2, s) if s > s0 else 0.0

        growth, c = 0.0, w / (8.0 * math.pi)
    else:
        def fn(s):
            if s <= s0:
                return 0.0
            return w * two_body_phase_space(m1, m2, s) * math.exp(-s / scale**2)

        growth, c = -math.inf, w / (8.0 * math.pi)
    return SpectralDensity(fn, s0, growth, c, label=f"bubble({m1},{m2})")


# --------------------------------------------------------------------------- self-energy


@dataclass(frozen=True)
class SelfEnergy:
    density: SpectralDensity
    n_sub: int = 0

    def required_n_sub(self) -> int:
        g = self.density.growth
        if g == -math.inf:
            return 0
        return int(math.floor(g)) + 1


def _tail_integral(se: SelfEnergy, smax: float, q2: float) -> float:
    """integral_{smax}^inf rho(s)/(s^n (s - q2)) ds via u = 1/s.

    The substituted integrand rho(1/u) u^(n-1) / (1 - q2 u) is bounded on
    (0, 1/smax] whenever the subtraction order beats the density growth, so
    adaptive quadrature resolves the tail to full precision.
    """
    n = se.n_sub

    def g(u):
        return se.density(1.0 / u) * u ** (n - 1) / (1.0 - q2 * u)

    return integrate.quad(g, 0.0, 1.0 / smax, limit=400, epsabs=1e-13, epsrel=1e-11)[0]


def dispersion_eval(se: SelfEnergy, q2: float, mode: str = "feynman") -> complex:
    """Subtracted dispersion integral at real q^2.

    mode "feynman"/"advanced": boundary value s - q^2 - i0 (below the cut);
    mode "retarded": s - q^2 + i0.  Below threshold the result is real; on
    the cut the i0 term contributes -+ i rho(q^2) via the Plemelj split.
    """
    if mode not in ("feynman", "advanced", "retarded"):
        raise SplittingError(f"unknown mode {mode!r}")
    n = se.n_sub
    need = se.required_n_sub()
    if n < need:
        raise SplittingError(
            f"dispersion integral diverges for n_sub = {n}; density growth "
            f"s^{se.density.growth} requires n_sub >= {need}"
        )
    s0 = se.density.threshold
    if q2 == 0.0 and n >= 1:
        return 0.0 + 0.0j

    def f(s):
        return se.density(s) / s**n

    smax = max(100.0 * max(1.0, abs(q2), s0 + 1.0), s0 + 10.0)
    val = _principal_integral(f, s0, smax, q2)
    val += _tail_integral(se, smax, q2)
    out = complex(val)
    on_cut = q2 > s0 and se.density(q2) != 0.0
    if on_cut:
        disc = math.pi * se.density(q2) / q2**n
        if mode == "retarded":
            out -= 1j * disc
        else:
            out += 1j * disc
    pref = q2**n / math.pi
    return pref * out


def _principal_integral(f, s0: float, smax: float, q2: float) -> float:
    """PV integral of f(s)/(s - q2) over [s0, smax]."""
    if q2 <= s0 or q2 >= smax:
        return integrate.quad(
            lambda s: f(s) / (s - q2), s0, smax, limit=400, epsabs=1e-13, epsrel=1e-11
        )[0]
    w = min(q2 - s0, smax - q2) * 0.5
    parts = 0.0
    if s0 < q2 - w:
        parts += integrate.quad(
            lambda s: f(s) / (s - q2), s0, q2 - w, limit=400, epsabs=1e-13, epsrel=1e-11
        )[0]
    parts += integrate.quad(
        f, q2 - w, q2 + w, weight="cauchy", wvar=q2, limit=400, epsabs=1e-13, epsrel=1e-11
    )[0]
    if q2 + w < smax:
        parts += integrate.quad(
            lambda s: f(s) / (s - q2), q2 + w, smax, limit=400, epsabs=1e-13, epsrel=1e-11
        )[0]
    return parts


def central_normalize(se: SelfEnergy, omega: int) -> SelfEnergy:
    """Minimal subtraction order such that all q-derivatives through order
    omega vanish at q = 0.

    Sigma is a function of q^2; a 4-momentum derivative of order 2j probes
    d^j Sigma / d(q^2)^j at 0, so the condition |gamma| <= omega amounts to
    zeros of order floor(omega/2) + 1 in q^2.  Needs a positive threshold
    (a massless cut has no analytic neighborhood of zero to normalize in).
    """
    if omega < 0:
        return replace(se, n_sub=0)
    if se.density.threshold <= 0:
        raise SplittingError(
            "central normalization needs a mass gap: the spectral threshold is "
            "at zero, the subtracted integral would be infrared-divergent at "
            "the subtraction point"
        )
    return replace(se, n_sub=omega // 2 + 1)


# --------------------------------------------------------------------------- normalization freedom


@dataclass(frozen=True)
class FreedomBasis:
    """Multi-indices gamma with |gamma| <= omega over 4n momentum variables:
    the polynomial coefficients multiplying the total-momentum delta."""

    omega: int
    n: int
    indices: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.indices)


def freedom_basis(omega: int, n: int) -> FreedomBasis:
    if n < 0:
        raise SplittingError("need n >= 0 arguments")
    dims = 4 * n
    if omega < 0 or dims == 0:
        idx = () if omega < 0 else ((),)
        return FreedomBasis(omega, n, idx if omega >= 0 and dims == 0 else ())
    out = []
    for total in range(omega + 1):
        for comb in itertools.combinations_with_replacement(range(dims), total):
            gamma = [0] * dims
            for c in comb:
                gamma[c] += 1
            out.append(tuple(gamma))
    return FreedomBasis(omega, n, tuple(out))


# --------------------------------------------------------------------------- scaling-degree estimator


@dataclass(frozen=True)
class ScaledProbe:
    """g(x / lam) for a fixed base profile g with g(0) = 1."""

    base: Callable[[np.ndarray], np.ndarray]
    lam: float

    def __call__(self, x):
        return self.base(np.asarray(x, dtype=float) / self.lam)


@dataclass
class SdEstimate:
    value: float
    slope: float
    residual: float
    ok: bool
    lambdas: tuple[float, ...]
    samples: tuple[float, ...]
    note: str = ""


def default_probe_base(dim: int):
    def g(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1) if x.ndim > 0 and x.shape[-1] == dim else x * x
        return np.exp(-0.5 * r2)

    return g


def scaling_degree_estimate(
    pairing: Callable[[ScaledProbe], complex],
    dim: int,
    lambdas: Sequence[float] | None = None,
    base: Callable | None = None,
) -> SdEstimate:
    """Least-squares slope of log|<t, g(./lam)>| against log lam.

    For a distribution of scaling degree sd the pairing scales like
    lam^(dim - sd), so the estimate is dim - slope.  A large fit residual or
    vanishing samples mark the estimate indeterminate.
    """
    if lambdas is None:
        lambdas = tuple(0.5 * 2.0 ** (-k / 2.0) for k in range(12))
    base = base or default_probe_base(dim)
    vals = []
    for lam in lambdas:
        vals.append(complex(pairing(ScaledProbe(base, lam))))
    mags = np.array([abs(v) for v in vals])
    if np.any(mags == 0.0):
        return SdEstimate(
            value=float("nan"),
            slope=float("nan"),
            residual=float("inf"),
            ok=False,
            lambdas=tuple(lambdas),
            samples=tuple(mags),
            note="zero sample; scaling degree is -inf or the probe misses the support",
        )
    x = np.log(np.asarray(lambdas))
    y = np.log(mags)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    ok = residual < 0.1
    note = "" if ok else "indeterminate: non-linear log-log fit"
    return SdEstimate(
        value=dim - slope,
        slope=slope,
        residual=residual,
        ok=ok,
        lambdas=tuple(lambdas),
        samples=tuple(mags),
        note=note,
    )
