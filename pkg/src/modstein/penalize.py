"""Gaussian laws biased by a penalizing weight, and their duality identities.

For a positive weight ``phi`` and a scale ``gamma`` the penalized law has
density proportional to ``phi(x / gamma^2) exp(-x^2 / (2 gamma^2))``. This
module evaluates that law, checks its Laplace and Fourier duality with a
shifted Gaussian expectation of ``phi``, and builds the Hermite (Edgeworth)
and signed-measure approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import HypothesisError
from .numerics import (GaussianEnvelope, GridFunction, fourier_invert, gauss_hermite,
                       integrate_line)

_HERMITE_NODES = 200


@dataclass(frozen=True)
class PenalizingFunction:
    """A positive weight with its logarithm and log-derivative.

    ``sup_norm`` bounds the weight on the real line when it is finite; it is
    used for quadrature tail envelopes.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    log_eval: Callable[[np.ndarray], np.ndarray]
    dlog_eval: Callable[[np.ndarray], np.ndarray]
    complex_eval: Callable[[np.ndarray], np.ndarray] | None = None
    sup_norm: float = math.inf
    integrable_on_line: bool = True
    phi_at_zero_is_one: bool = True
    even_symmetric: bool = True
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, u):
        return self.eval(u)

    def check(self, probes=(-1.5, -0.3, 0.0, 0.7, 2.0), step: float = 1e-5) -> None:
        """Spot-check positivity, normalisation and the log-derivative."""
        u = np.asarray(probes, dtype=float)
        vals = self.eval(u)
        if np.any(~(vals > 0)):
            raise HypothesisError(f"{self.name}: weight must be positive")
        if self.phi_at_zero_is_one and abs(float(self.eval(np.array(0.0))) - 1) > 1e-14:
            raise HypothesisError(f"{self.name}: weight at 0 must be 1")
        fd = (self.log_eval(u + step) - self.log_eval(u - step)) / (2 * step)
        if np.max(np.abs(fd - self.dlog_eval(u))) > 1e-6 * (1 + np.max(np.abs(fd))):
            raise HypothesisError(f"{self.name}: log-derivative inconsistent with log")

    def spot_check_rotation(self, probes=(0.25, 0.5, 1.0, 1.5, 2.0), tol: float = 1e-12) -> float:
        """Largest ``|phi(i x) - phi(x)|`` over a few real points.

        This is only a finite spot check of the rotation symmetry; it cannot
        certify it for a black-box weight.
        """
        if self.complex_eval is None:
            raise HypothesisError(f"{self.name}: no complex evaluation available")
        x = np.asarray(probes, dtype=float)
        gap = float(np.max(np.abs(self.complex_eval(1j * x) - self.eval(x))))
        if gap > tol:
            raise HypothesisError(f"{self.name}: phi(ix) != phi(x) (gap {gap:.3e})")
        return gap


def phi_quartic(c: float) -> PenalizingFunction:
    """The weight ``exp(-c u^4 / 4)`` for ``0 < c <= 3``."""
    c = float(c)
    if not 0 < c <= 3:
        raise HypothesisError(f"quartic strength must lie in (0, 3], got {c!r}")
    return PenalizingFunction(
        f"quartic(C={c:g})",
        eval=lambda u: np.exp(-c * np.asarray(u, dtype=float) ** 4 / 4),
        log_eval=lambda u: -c * np.asarray(u, dtype=float) ** 4 / 4,
        dlog_eval=lambda u: -c * np.asarray(u, dtype=float) ** 3,
        complex_eval=lambda z: np.exp(-c * np.asarray(z, dtype=complex) ** 4 / 4),
        sup_norm=1.0, params={"c_quartic": c})


def constant_one() -> PenalizingFunction:
    """The trivial weight, whose penalized law is the Gaussian itself."""
    return PenalizingFunction(
        "one",
        eval=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        log_eval=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        dlog_eval=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        complex_eval=lambda z: np.ones_like(np.asarray(z, dtype=complex)),
        sup_norm=1.0)


def _require_bounded(phi: PenalizingFunction) -> float:
    if not math.isfinite(phi.sup_norm):
        raise HypothesisError(f"{phi.name}: a finite sup_norm is needed for tail envelopes")
    return phi.sup_norm


def gaussian_expectation(phi: PenalizingFunction, gamma: float, shift: float = 0.0,
                         nodes: int = _HERMITE_NODES) -> float:
    """``E[phi(G / gamma + shift)]`` for a standard normal ``G`` and real ``shift``."""
    x, w = gauss_hermite(nodes)
    return float(np.dot(w, phi.eval(x / gamma + shift)))


def _complex_line_integral(fn, scale: float, rel_tol: float) -> complex:
    re = integrate_line(lambda x: np.real(fn(x)), rel_tol=rel_tol, scale=scale, abs_tol=1e-300)
    im = integrate_line(lambda x: np.imag(fn(x)), rel_tol=rel_tol, scale=scale, abs_tol=1e-300)
    return complex(re.value, im.value)


def imaginary_shift_expectation(phi: PenalizingFunction, gamma: float, theta: float,
                                rel_tol: float = 1e-12, paths: int = 9) -> complex:
    """``E[phi(G / gamma + i theta)]`` for a standard normal ``G``.

    Along the real axis the integrand can exceed the result by many orders of
    magnitude. The integral is therefore taken along ``Im y = -t`` for the
    ``t`` in ``[0, theta gamma]`` whose integrand has the smallest peak modulus.
    """
    if phi.complex_eval is None:
        raise HypothesisError(f"{phi.name}: complex shift needs complex evaluation")
    probe = np.linspace(-12.0, 12.0, 2401)

    def integrand(t):
        def fn(x):
            y = np.asarray(x, dtype=float) - 1j * t
            return phi.complex_eval(y / gamma + 1j * theta) * np.exp(-y * y / 2) / math.sqrt(2 * math.pi)
        return fn

    best_t, best_peak = 0.0, math.inf
    for t in np.linspace(0.0, theta * gamma, paths):
        with np.errstate(over="ignore"):
            peak = float(np.max(np.abs(integrand(t)(probe))))
        if peak < best_peak:
            best_t, best_peak = float(t), peak
    return _complex_line_integral(integrand(best_t), 1.0, rel_tol)


@dataclass(frozen=True)
class PenalizedLaw:
    """Density ``phi(x / gamma^2) exp(-x^2 / (2 gamma^2)) / c_gamma``."""

    phi: PenalizingFunction
    gamma: float
    c_gamma: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        g2 = self.gamma ** 2
        return self.phi.eval(x / g2) * np.exp(-x * x / (2 * g2)) / self.c_gamma

    def envelope(self, shift: float = 0.0, weight: float = 1.0) -> GaussianEnvelope:
        return GaussianEnvelope(shift, self.gamma, weight * _require_bounded(self.phi) / self.c_gamma)


def make_penalized_law(phi: PenalizingFunction, gamma: float, rel_tol: float = 1e-13) -> PenalizedLaw:
    if not gamma > 0:
        raise HypothesisError("gamma must be positive")
    g2 = gamma * gamma
    env = GaussianEnvelope(0.0, gamma, _require_bounded(phi))
    c = integrate_line(lambda x: phi.eval(x / g2) * np.exp(-x * x / (2 * g2)),
                       rel_tol=rel_tol, envelope=env).value
    return PenalizedLaw(phi, gamma, c)


def penalized_density(phi: PenalizingFunction, gamma: float, x):
    return make_penalized_law(phi, gamma).pdf(x)


def laplace_ratio(law: PenalizedLaw, u: float, rel_tol: float = 1e-12) -> float:
    """``E[exp(u H)] / E[exp(u X)]`` with ``X ~ N(0, gamma^2)``, by quadrature in x."""
    g, g2 = law.gamma, law.gamma ** 2
    # exp(u x - u^2 g^2 / 2 - x^2 / (2 g^2)) = exp(-(x - u g^2)^2 / (2 g^2))
    shift = u * g2

    def integrand(x):
        return law.phi.eval(x / g2) * np.exp(-(x - shift) ** 2 / (2 * g2)) / law.c_gamma

    return integrate_line(integrand, rel_tol=rel_tol, envelope=law.envelope(shift)).value


def laplace_duality_gap(phi: PenalizingFunction, gamma: float, u: float,
                        rel_tol: float = 1e-12, law: PenalizedLaw | None = None) -> float:
    """Gap between the exponential-moment ratio and the shifted weight ratio."""
    law = law or make_penalized_law(phi, gamma)
    lhs = laplace_ratio(law, u, rel_tol)
    rhs = gaussian_expectation(phi, gamma, u) / gaussian_expectation(phi, gamma)
    return abs(lhs - rhs)


def shifted_weight_by_quadrature(phi: PenalizingFunction, gamma: float, u: float) -> float:
    """``E[phi(X / gamma^2 + u)]`` for ``X ~ N(0, gamma^2)`` by quadrature in x."""
    g2 = gamma * gamma
    env = GaussianEnvelope(0.0, gamma, _require_bounded(phi) / (gamma * math.sqrt(2 * math.pi)))
    return integrate_line(
        lambda x: phi.eval(x / g2 + u) * np.exp(-x * x / (2 * g2)) / (gamma * math.sqrt(2 * math.pi)),
        rel_tol=1e-13, envelope=env).value


def fourier_ratio(law: PenalizedLaw, theta: float, rel_tol: float = 1e-12,
                  contour: str = "auto") -> complex:
    """``E[exp(i theta H)] / exp(-theta^2 gamma^2 / 2)``.

    ``contour="real"`` integrates along the real axis, which loses about
    ``theta^2 gamma^2 / 2`` nats of relative precision to cancellation.
    ``contour="shifted"`` moves the path to ``Im x = theta gamma^2``, where
    the integrand is no longer oscillatory; this needs the weight to be
    entire with enough decay in the strip. ``"auto"`` uses the real axis
    while the damping factor stays above ``exp(-8)``.
    """
    g, g2 = law.gamma, law.gamma ** 2
    phi = law.phi
    if contour == "auto":
        contour = "real" if theta * theta * g2 / 2 <= 8 else "shifted"
    if contour == "real":
        damp = math.exp(-theta * theta * g2 / 2)
        base = phi.eval

        def part(trig):
            return integrate_line(
                lambda x: base(x / g2) * trig(theta * x) * np.exp(-x * x / (2 * g2)),
                rel_tol=rel_tol, envelope=GaussianEnvelope(0.0, g, _require_bounded(phi)),
                abs_tol=1e-16 * law.c_gamma).value

        re = part(np.cos)
        im = 0.0 if phi.even_symmetric else part(np.sin)
        return complex(re, im) / (law.c_gamma * damp)
    if contour == "shifted":
        if phi.complex_eval is None:
            raise HypothesisError(f"{phi.name}: shifted contour needs complex evaluation")
        value = _complex_line_integral(
            lambda y: phi.complex_eval(y / g2 + 1j * theta) * np.exp(-y * y / (2 * g2)), g, rel_tol)
        return value / law.c_gamma
    raise ValueError(f"unknown contour {contour!r}")


def fourier_duality_gap(phi: PenalizingFunction, gamma: float, theta: float,
                        rel_tol: float = 1e-12, law: PenalizedLaw | None = None,
                        contour: str = "auto") -> float:
    if phi.complex_eval is None:
        raise HypothesisError(f"{phi.name}: Fourier duality needs complex evaluation")
    law = law or make_penalized_law(phi, gamma)
    lhs = fourier_ratio(law, theta, rel_tol, contour)
    rhs = imaginary_shift_expectation(phi, gamma, theta, rel_tol) / gaussian_expectation(phi, gamma)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class ModLimitReport:
    gamma: float
    u_grid: np.ndarray
    ratio_values: np.ndarray
    target_values: np.ndarray
    sup_error: float
    mode: str = "laplace"


def mod_limit_check(phi: PenalizingFunction, gammas, u_grid, mode: str = "laplace") -> list[ModLimitReport]:
    """Distance between the normalised transforms and the limiting weight."""
    u = np.asarray(u_grid, dtype=float)
    target = phi.eval(u)
    out = []
    for g in gammas:
        law = make_penalized_law(phi, g)
        if mode == "laplace":
            ratio = np.array([laplace_ratio(law, t) for t in u])
        elif mode == "fourier":
            ratio = np.array([fourier_ratio(law, t) for t in u])
        else:
            raise ValueError("mode must be 'laplace' or 'fourier'")
        err = float(np.max(np.abs(ratio - target)))
        out.append(ModLimitReport(float(g), u, ratio, target, err, mode))
    return out


MAX_HERMITE_DEGREE = 60


def hermite_coeffs(phi: PenalizingFunction, gamma: float, k_max: int,
                   nodes: int = 256) -> np.ndarray:
    """``a_k = E[He_k(G) phi(G / gamma)] / k!`` for ``k = 0..k_max``."""
    if not 0 <= k_max <= MAX_HERMITE_DEGREE:
        raise HypothesisError(f"hermite degree must lie in [0, {MAX_HERMITE_DEGREE}]")
    x, w = gauss_hermite(nodes)
    weighted = w * phi.eval(x / gamma)
    out = np.empty(k_max + 1)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    fact = 1.0
    for k in range(k_max + 1):
        if k > 0:
            fact *= k
        out[k] = np.dot(weighted, cur) / fact
        prev, cur = cur, x * cur - k * prev
    return out


def edgeworth_density(coeffs, gamma: float, y, k_trunc: int):
    """``exp(-y^2/2) * sum_{l <= k} a_l He_l(y)``.

    Dividing by ``c_gamma`` gives an approximation of the penalized density
    at ``gamma * y``; truncations need not be nonnegative.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if k_trunc >= coeffs.size:
        raise HypothesisError("truncation order exceeds available coefficients")
    y = np.asarray(y, dtype=float)
    total = np.zeros_like(y)
    prev, cur = np.zeros_like(y), np.ones_like(y)
    for k in range(k_trunc + 1):
        total = total + coeffs[k] * cur
        prev, cur = cur, y * cur - k * prev
    return total * np.exp(-y * y / 2)


def phi_tilde(coeffs, gamma: float, u, k_trunc: int):
    """Normalised series ``sum_k a_k (i gamma u)^k / a_0``.

    Multiplying by ``exp(-gamma^2 u^2 / 2)`` approximates the characteristic
    function of the penalized law.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if k_trunc >= coeffs.size:
        raise HypothesisError("truncation order exceeds available coefficients")
    z = 1j * gamma * np.asarray(u, dtype=float)
    powers = np.ones_like(z)
    total = np.zeros_like(z)
    for k in range(k_trunc + 1):
        total = total + coeffs[k] * powers
        powers = powers * z
    # componentwise, so that the value at u = 0 is exactly 1
    return total.real / coeffs[0] + 1j * (total.imag / coeffs[0])


def characteristic_function(law: PenalizedLaw, u) -> np.ndarray:
    """``E[exp(i u H)]`` by real-axis quadrature."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    g2 = law.gamma ** 2
    out = np.empty(u.shape, dtype=complex)
    env = GaussianEnvelope(0.0, law.gamma, _require_bounded(law.phi))
    for i, t in enumerate(u):
        re = integrate_line(lambda x: law.phi.eval(x / g2) * np.cos(t * x) * np.exp(-x * x / (2 * g2)),
                            rel_tol=1e-13, envelope=env, abs_tol=1e-16 * law.c_gamma).value
        im = 0.0
        if not law.phi.even_symmetric:
            im = integrate_line(
                lambda x: law.phi.eval(x / g2) * np.sin(t * x) * np.exp(-x * x / (2 * g2)),
                rel_tol=1e-13, envelope=env, abs_tol=1e-16 * law.c_gamma).value
        out[i] = complex(re, im) / law.c_gamma
    return out


def _check_signed_polynomial(p: Polynomial, gamma: float) -> None:
    coef = np.asarray(p.coef, dtype=float)
    if coef.size and abs(coef[0]) > 0:
        raise HypothesisError("P(0) must vanish")
    for k, c in enumerate(coef):
        if c != 0 and k % 4 != 0:
            raise HypothesisError("P(i t) = P(t) needs only powers divisible by 4")
    deg = int(np.max(np.flatnonzero(coef))) if np.any(coef) else 0
    if deg and coef[deg] > 0:
        raise HypothesisError("leading coefficient of P must be negative for integrability")


def signed_charfn(p: Polynomial, gamma: float):
    return lambda xi: np.exp(p(xi) - gamma * gamma * np.asarray(xi) ** 2 / 2)


def signed_density(p: Polynomial, gamma: float, x_grid, decay: float = 40.0) -> GridFunction:
    """Density of the signed measure with Fourier transform ``exp(P(xi) - gamma^2 xi^2/2)``."""
    p = p if isinstance(p, Polynomial) else Polynomial(p)
    _check_signed_polynomial(p, gamma)
    xs = np.asarray(x_grid, dtype=float)
    # smallest xi beyond which gamma^2 xi^2/2 - P(xi) >= decay (the exponent is increasing)
    xi = math.sqrt(2 * decay) / gamma
    while gamma * gamma * xi * xi / 2 - p(xi) < decay:
        xi *= 1.1
    lo = 0.0
    hi = xi
    for _ in range(60):
        mid = (lo + hi) / 2
        if gamma * gamma * mid * mid / 2 - p(mid) >= decay:
            hi = mid
        else:
            lo = mid
    cutoff = hi
    step = 2 * math.pi / (2 * float(np.max(np.abs(xs))) + 40 * gamma)
    return fourier_invert(signed_charfn(p, gamma), xs, cutoff, step,
                          decay_tol=math.exp(-decay) * 1.0001)


def quartic_signed_polynomial(gamma: float, c: float) -> Polynomial:
    """``P(xi) = -C xi^4 / (4 gamma^8)``."""
    return Polynomial([0, 0, 0, 0, -c / (4 * gamma ** 8)])
