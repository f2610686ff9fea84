"""Kinetics of the three-species food web.

u is the basal resource with logistic growth up to the local capacity K,
v the intermediate predator taking u through a Holling type II response,
w the top predator taking v the same way:

    F(u,v)   = alpha*u*(1 - u/K) - b*u*v/(u + a)
    G(u,v,w) = gamma*b*u*v/(u + a) - c*v*w/(v + d) - mu*v
    H(v,w)   = beta*c*v*w/(v + d) - nu*w

These pointwise rates are shared verbatim by the ODE analysis and the
PDE right-hand sides. The taxis sensitivities of the top predator are
chi1 = e1*w - e2*v (foraging minus avoidance, attractant v) for model 1
and chi2 = q*u*w (prey-taxis toward the resource, attractant u) for
model 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Params", "FieldState", "reaction", "reaction_coeffs", "chi1", "chi2"]

_POSITIVE_FIELDS = (
    "alpha", "a", "b", "c", "d", "beta", "gamma", "mu", "nu", "d0", "d1", "d2",
)
_NONNEGATIVE_FIELDS = ("e1", "e2", "q")


@dataclass(frozen=True)
class Params:
    """Model constants. Rates and diffusivities must be positive.

    d0, d1, d2 are the diffusivities of u, v, w in that order. The
    defaults are the canonical study values used throughout the tests
    and presets; configs override any subset.
    """

    alpha: float = 5.0
    a: float = 2.0
    b: float = 5.0
    c: float = 0.1
    d: float = 2.0
    beta: float = 1.0
    gamma: float = 1.0
    mu: float = 0.05
    nu: float = 0.05
    d0: float = 0.1
    d1: float = 1.0
    d2: float = 1.0
    e1: float = 1.0
    e2: float = 1.0
    q: float = 0.1
    model_id: int = 1

    def __post_init__(self):
        for name in _POSITIVE_FIELDS:
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0.0:
                raise ValueError(f"parameter {name} must be positive, got {val}")
        for name in _NONNEGATIVE_FIELDS:
            val = getattr(self, name)
            if not np.isfinite(val) or val < 0.0:
                raise ValueError(f"parameter {name} must be non-negative, got {val}")
        if self.model_id not in (1, 2):
            raise ValueError(f"model_id must be 1 or 2, got {self.model_id}")

    @property
    def meso_viable(self) -> bool:
        """gamma*b > mu: the intermediate predator can sustain itself."""
        return self.gamma * self.b > self.mu

    @property
    def top_viable(self) -> bool:
        """beta*c > nu: the top predator can sustain itself."""
        return self.beta * self.c > self.nu

    def survivability_notes(self) -> tuple[str, ...]:
        notes = []
        if not self.meso_viable:
            notes.append(
                f"gamma*b = {self.gamma * self.b!r} <= mu = {self.mu!r}: "
                "the intermediate predator cannot persist"
            )
        if not self.top_viable:
            notes.append(
                f"beta*c = {self.beta * self.c!r} <= nu = {self.nu!r}: "
                "the top predator cannot persist"
            )
        return tuple(notes)


@dataclass(frozen=True)
class FieldState:
    """Nodal values of the three fields at one time."""

    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError(f"state time must be finite, got {self.t}")
        if not (self.u.shape == self.v.shape == self.w.shape):
            raise ValueError(
                f"field shapes differ: {self.u.shape}, {self.v.shape}, {self.w.shape}"
            )

    @property
    def n(self) -> int:
        return self.u.shape[0]


def _reject_nan(k_val, u, v, w):
    for name, val in (("K", k_val), ("u", u), ("v", v), ("w", w)):
        if np.any(np.isnan(val)):
            raise ValueError(f"NaN in reaction input {name}")


def reaction(p: Params, k_val, u, v, w):
    """(F, G, H) at the given state; scalars and arrays both work.

    k_val is the local carrying capacity, which must be positive.
    """
    _reject_nan(k_val, u, v, w)
    if np.any(np.asarray(k_val) <= 0.0):
        raise ValueError("carrying capacity K must be positive")
    uv = p.b * u * v / (u + p.a)
    vw = p.c * v * w / (v + p.d)
    f = p.alpha * u * (1.0 - u / k_val) - uv
    g = p.gamma * uv - vw - p.mu * v
    h = p.beta * vw - p.nu * w
    return f, g, h


def reaction_coeffs(p: Params, k_val, u, v, w):
    """Per-capita rates (gu, gv, gw) with F = u*gu, G = v*gv, H = w*gw.

    This is the factorization used by the coefficient-lagged implicit
    step, where each species is linear in itself.
    """
    _reject_nan(k_val, u, v, w)
    if np.any(np.asarray(k_val) <= 0.0):
        raise ValueError("carrying capacity K must be positive")
    gu = p.alpha * (1.0 - u / k_val) - p.b * v / (u + p.a)
    gv = p.gamma * p.b * u / (u + p.a) - p.c * w / (v + p.d) - p.mu
    gw = p.beta * p.c * v / (v + p.d) - p.nu
    return gu, gv, gw


def chi1(p: Params, v, w):
    """Model-1 taxis sensitivity e1*w - e2*v (attractant is v)."""
    return p.e1 * w - p.e2 * v


def chi2(p: Params, u, w):
    """Model-2 taxis sensitivity q*u*w (attractant is u)."""
    return p.q * u * w
