"""Equilibria and linear stability of the spatially uniform system.

The kinetics admit five candidate equilibria:

    P1 = (0, 0, 0)
    P2 = (K, 0, 0)
    P3 = (a*mu/(b*gamma - mu), v3, 0)        prey and mesopredator only
    P4, P5 = (u_-, v*, w_-), (u_+, v*, w*)   full coexistence

with v* = d*nu/(c*beta - nu), u_{-,+} the roots of the prey nullcline
quadratic u^2 + (a - K)u + (b v* K/alpha - a K) = 0, and

    w = (d + v*) * (b*gamma*u - (a + u)*mu) / (c*(a + u))

from the mesopredator nullcline. A candidate "exists" when its
coordinates are real, finite and non-negative. Stability is read from
the eigenvalues of the analytic Jacobian, solved by Cardano's method
with a Newton-refined deflation fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Params, reaction

__all__ = [
    "EquilibriumPoint",
    "Threshold",
    "ScanResult",
    "compute_equilibria",
    "jacobian",
    "eigen3",
    "classify",
    "nullcline_residual",
    "pde_mode_stability",
    "scan_table1",
]

CLASSIFY_TOL = 1e-9


@dataclass(frozen=True)
class EquilibriumPoint:
    label: str
    u: float
    v: float
    w: float
    exists: bool
    eigenvalues: tuple[complex, complex, complex] | None
    classification: str  # "stable" | "unstable" | "marginal" | "undefined"

    @property
    def coords(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.w)

    @property
    def max_real_part(self) -> float:
        if self.eigenvalues is None:
            return math.nan
        return max(ev.real for ev in self.eigenvalues)


def jacobian(p: Params, k_val: float, point) -> np.ndarray:
    """Analytic Jacobian of the kinetics at (u, v, w)."""
    u, v, w = (float(c) for c in point)
    a, b, c, d = p.a, p.b, p.c, p.d
    ua = u + a
    vd = v + d
    j = np.empty((3, 3))
    j[0, 0] = p.alpha - 2.0 * p.alpha * u / k_val - b * v * a / ua**2
    j[0, 1] = -b * u / ua
    j[0, 2] = 0.0
    j[1, 0] = p.gamma * b * v * a / ua**2
    j[1, 1] = p.gamma * b * u / ua - c * w * d / vd**2 - p.mu
    j[1, 2] = -c * v / vd
    j[2, 0] = 0.0
    j[2, 1] = p.beta * c * w * d / vd**2
    j[2, 2] = p.beta * c * v / vd - p.nu
    return j


def _cubic_roots(a2: float, a1: float, a0: float) -> tuple[complex, complex, complex]:
    """Roots of t^3 + a2 t^2 + a1 t + a0 by Cardano / trigonometric form."""
    shift = a2 / 3.0
    p = a1 - a2 * a2 / 3.0
    q = 2.0 * a2**3 / 27.0 - a2 * a1 / 3.0 + a0
    disc = -4.0 * p**3 - 27.0 * q * q
    # |disc| is O(max(|p|^3, q^2)); treat a tiny negative as a double root.
    scale2 = max(abs(p) ** 3, q * q, 1e-300)
    if disc >= -1e-12 * scale2:
        # Three real roots (or nearly so).
        if p >= 0.0:
            # disc >= 0 forces p ~ 0 ~ q: a (near-)triple root.
            t0 = math.copysign(abs(q) ** (1.0 / 3.0), -q) if q != 0.0 else 0.0
            roots = (t0, t0, t0)
        else:
            m = 2.0 * math.sqrt(-p / 3.0)
            cosarg = 3.0 * q / (p * m)
            cosarg = min(1.0, max(-1.0, cosarg))
            theta = math.acos(cosarg)
            roots = tuple(
                m * math.cos((theta - 2.0 * math.pi * k) / 3.0) for k in range(3)
            )
        return tuple(complex(t - shift, 0.0) for t in roots)
    # One real root, stable Cardano without cancellation.
    sq = math.sqrt(q * q / 4.0 + p**3 / 27.0)
    u3 = -q / 2.0 - sq if q >= 0.0 else -q / 2.0 + sq
    ucb = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
    vcb = -p / (3.0 * ucb) if ucb != 0.0 else 0.0
    t1 = ucb + vcb
    # Deflate: t^2 + t1 t + (t1^2 + p) has the conjugate pair.
    disc2 = -3.0 * t1 * t1 - 4.0 * p
    im = math.sqrt(max(-disc2, 0.0)) / 2.0
    re = -t1 / 2.0
    return (complex(t1 - shift, 0.0), complex(re - shift, im), complex(re - shift, -im))


def _poly_val(coeffs: tuple[float, float, float], lam: complex) -> complex:
    a2, a1, a0 = coeffs
    return ((lam + a2) * lam + a1) * lam + a0


def _residual_ok(coeffs, lam: complex) -> bool:
    a2, a1, a0 = coeffs
    mag = abs(lam)
    scale = max(1.0, mag**3, abs(a2) * mag**2, abs(a1) * mag, abs(a0))
    return abs(_poly_val(coeffs, lam)) <= 1e-8 * scale


def eigen3(a: np.ndarray) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix, sorted by descending real part.

    Cardano on the characteristic polynomial; if a root fails the
    residual check it is Newton-refined and the other two recovered by
    deflation.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    tr = a[0, 0] + a[1, 1] + a[2, 2]
    m2 = (
        a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
        + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    )
    # Cofactor expansion keeps the coefficients exact for exact entries;
    # an LU-based determinant would perturb repeated roots at the
    # cube-root of its rounding error.
    det = (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )
    coeffs = (-tr, m2, -det)
    roots = _cubic_roots(*coeffs)
    if not all(_residual_ok(coeffs, lam) for lam in roots):
        roots = _refine_by_deflation(coeffs, roots)
    return tuple(sorted(roots, key=lambda z: (-z.real, -z.imag)))


def _refine_by_deflation(coeffs, roots):
    a2, a1, a0 = coeffs
    # Newton from the most-real current estimate.
    lam = max(roots, key=lambda z: -abs(z.imag)).real
    for _ in range(100):
        f = ((lam + a2) * lam + a1) * lam + a0
        fp = (3.0 * lam + 2.0 * a2) * lam + a1
        if fp == 0.0:
            break
        step = f / fp
        lam -= step
        if abs(step) <= 1e-16 * max(1.0, abs(lam)):
            break
    b1 = a2 + lam
    b0 = a1 + lam * b1
    disc = b1 * b1 - 4.0 * b0
    if disc >= 0.0:
        sq = math.sqrt(disc)
        r1 = (-b1 + sq) / 2.0
        r2 = (-b1 - sq) / 2.0
        return (complex(lam), complex(r1), complex(r2))
    sq = math.sqrt(-disc) / 2.0
    return (complex(lam), complex(-b1 / 2.0, sq), complex(-b1 / 2.0, -sq))


def classify(eigenvalues, tol: float = CLASSIFY_TOL) -> str:
    """stable / unstable / marginal by the largest real part."""
    top = max(ev.real for ev in eigenvalues)
    if top < -tol:
        return "stable"
    if top > tol:
        return "unstable"
    return "marginal"


def _make_point(p: Params, k_val: float, label: str, u, v, w, preconditions: bool):
    coords_finite = all(np.isfinite(c) for c in (u, v, w))
    exists = bool(preconditions and coords_finite and u >= 0.0 and v >= 0.0 and w >= 0.0)
    if coords_finite:
        eig = eigen3(jacobian(p, k_val, (u, v, w)))
        cls = classify(eig)
    else:
        eig = None
        cls = "undefined"
    return EquilibriumPoint(label, float(u), float(v), float(w), exists, eig, cls)


def compute_equilibria(p: Params, k_val: float) -> list[EquilibriumPoint]:
    """All five candidates with existence flags, eigenvalues, classification."""
    if not (np.isfinite(k_val) and k_val > 0.0):
        raise ValueError(f"carrying capacity K must be positive, got {k_val}")
    out = [
        _make_point(p, k_val, "P1", 0.0, 0.0, 0.0, True),
        _make_point(p, k_val, "P2", k_val, 0.0, 0.0, True),
    ]

    # P3: top predator absent.
    denom = p.b * p.gamma - p.mu
    if denom > 0.0:
        u3 = p.a * p.mu / denom
        v3 = (
            p.a * p.alpha * p.gamma
            * (p.b * p.gamma * k_val - p.mu * (p.a + k_val))
            / (k_val * denom**2)
        )
        out.append(_make_point(p, k_val, "P3", u3, v3, 0.0, True))
    else:
        out.append(_make_point(p, k_val, "P3", math.nan, math.nan, math.nan, False))

    # P4, P5: coexistence pair.
    cb = p.c * p.beta - p.nu
    if cb > 0.0:
        vstar = p.d * p.nu / cb
        disc = (
            p.c * p.alpha * p.beta * (p.a + k_val) ** 2
            - (4.0 * p.b * p.d * k_val + (p.a + k_val) ** 2 * p.alpha) * p.nu
        ) / (cb * p.alpha)
        if disc >= 0.0:
            root = math.sqrt(disc)
            for label, u_i in (("P4", 0.5 * (-p.a + k_val - root)),
                               ("P5", 0.5 * (-p.a + k_val + root))):
                ua = p.a + u_i
                if ua == 0.0:
                    out.append(
                        _make_point(p, k_val, label, math.nan, math.nan, math.nan, False)
                    )
                    continue
                w_i = (
                    (p.d + vstar)
                    * (p.b * p.gamma * u_i - ua * p.mu)
                    / (p.c * ua)
                )
                out.append(_make_point(p, k_val, label, u_i, vstar, w_i, True))
        else:
            for label in ("P4", "P5"):
                out.append(
                    _make_point(p, k_val, label, math.nan, math.nan, math.nan, False)
                )
    else:
        for label in ("P4", "P5"):
            out.append(_make_point(p, k_val, label, math.nan, math.nan, math.nan, False))
    return out


def nullcline_residual(p: Params, k_val: float, point) -> float:
    """max |(F, G, H)| at the point; ~0 for a true equilibrium."""
    u, v, w = point
    f, g, h = reaction(p, k_val, float(u), float(v), float(w))
    return float(max(abs(f), abs(g), abs(h)))


def pde_mode_stability(
    p: Params, k_val: float, mode_eig: float, diffusivities=None
) -> tuple[float, float, float]:
    """Eigenvalues of the prey-only state linearization on one Neumann mode.

    mode_eig is an eigenvalue of -laplace on the domain (0 for the
    constant mode). The species-to-diffusivity mapping is explicit:
    u carries diffusivities[0], v [1], w [2], defaulting to (d0, d1, d2).
    The state is stable against every mode iff b*K*gamma - (a+K)*mu < 0,
    since mode_eig >= 0 only shifts the roots left.
    """
    if mode_eig < 0.0:
        raise ValueError(f"mode eigenvalue must be >= 0, got {mode_eig}")
    dd = diffusivities if diffusivities is not None else (p.d0, p.d1, p.d2)
    return (
        -mode_eig * dd[0] - p.alpha,
        -mode_eig * dd[1] + p.b * k_val * p.gamma / (p.a + k_val) - p.mu,
        -mode_eig * dd[2] - p.nu,
    )


@dataclass(frozen=True)
class Threshold:
    label: str
    kind: str  # "existence" | "stability"
    k_value: float


@dataclass(frozen=True)
class ScanResult:
    k_values: tuple[float, ...]
    rows: tuple[tuple[EquilibriumPoint, ...], ...]
    thresholds: tuple[Threshold, ...]


def _point(p: Params, k_val: float, label: str) -> EquilibriumPoint:
    idx = {"P1": 0, "P2": 1, "P3": 2, "P4": 3, "P5": 4}[label]
    return compute_equilibria(p, k_val)[idx]


def _bisect(predicate, lo: float, hi: float, tol: float) -> float:
    """Smallest K (to tol) where predicate flips between lo and hi."""
    flo = predicate(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid) == flo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_table1(p: Params, k_values, bisect_tol: float = 1e-7) -> ScanResult:
    """Equilibria over a K grid plus bisected existence/stability thresholds.

    Between consecutive grid points each labelled candidate is checked
    for a flip in existence or classification; flips are located by
    bisection (the quantities are assumed monotone between neighbouring
    grid points, so the grid must resolve closely spaced events). When
    an existence onset and a stability change share one interval, the
    stability flip is re-bracketed just above the onset.
    """
    ks = tuple(float(k) for k in k_values)
    if len(ks) < 2 or any(k2 <= k1 for k1, k2 in zip(ks, ks[1:])):
        raise ValueError("K grid must be strictly increasing with >= 2 points")
    rows = tuple(tuple(compute_equilibria(p, k)) for k in ks)
    thresholds: list[Threshold] = []
    labels = ("P1", "P2", "P3", "P4", "P5")
    for j, label in enumerate(labels):
        for i in range(len(ks) - 1):
            lo_pt, hi_pt = rows[i][j], rows[i + 1][j]
            k_lo, k_hi = ks[i], ks[i + 1]
            if lo_pt.exists != hi_pt.exists:
                k_on = _bisect(
                    lambda k: _point(p, k, label).exists, k_lo, k_hi, bisect_tol
                )
                thresholds.append(Threshold(label, "existence", k_on))
                # A classification flip may hide on the existing side.
                probe = k_on + 10.0 * bisect_tol
                inner, outer = (probe, k_hi) if hi_pt.exists else (k_lo, k_on - 10.0 * bisect_tol)
                side_pt = hi_pt if hi_pt.exists else lo_pt
                if inner < outer:
                    probe_pt = _point(p, inner if hi_pt.exists else outer, label)
                    if (
                        probe_pt.exists
                        and probe_pt.classification != side_pt.classification
                    ):
                        k_sw = _bisect(
                            lambda k: _point(p, k, label).classification
                            == probe_pt.classification,
                            inner,
                            outer,
                            bisect_tol,
                        )
                        thresholds.append(Threshold(label, "stability", k_sw))
            elif (
                lo_pt.exists
                and hi_pt.exists
                and lo_pt.classification != hi_pt.classification
            ):
                k_sw = _bisect(
                    lambda k: _point(p, k, label).classification
                    == lo_pt.classification,
                    k_lo,
                    k_hi,
                    bisect_tol,
                )
                thresholds.append(Threshold(label, "stability", k_sw))
    return ScanResult(ks, rows, tuple(thresholds))
