"""Quasi-TM (WGH) whispering-gallery modes of a uniaxial dielectric cylinder.

Model
-----
The c-axis is along the cylinder axis z, with relative permittivity
``eps_par`` along it and ``eps_perp`` across it. Top and bottom faces are
treated as perfect magnetic walls, so the axial wavenumber is
``k_z = pi / height`` and

    E_z = J_m(k_rho r) cos(m phi) cos(k_z z),        r < radius
    k_rho**2 = eps_par * (k0**2 - k_z**2 / eps_perp)

Outside the crystal the field is ``C K_m(alpha r)`` with
``alpha = sqrt(|k0**2 - k_z**2|)``. When ``k_z > k0`` this is the exact
evanescent vacuum solution. Otherwise it stands in for the sub-caustic
branch of the radiating vacuum solution, which decays monotonically between
the rim and the caustic ``r = m / sqrt(k0**2 - k_z**2)``; modes whose rim lies
beyond the caustic are rejected as unconfined. Transverse fields follow from
E_z through the usual TM relations (with ``k0**2 - k_z**2`` outside), and the
resonance condition is continuity of E_z and H_phi at the rim. With H_z = 0
there is no freedom left to match E_phi as well; that residual mismatch is
the usual price of the single-polarisation ansatz.

An optional metal shield of radius ``shield_radius`` replaces ``K_m`` with
the combination of ``K_m`` and ``I_m`` that vanishes at the wall.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import c as C0
from scipy.constants import epsilon_0 as EPS0
from scipy.constants import mu_0 as MU0
from scipy.optimize import minimize_scalar

from . import bessel
from .errors import ModeNotFoundError, QuadratureError, UnconfinedModeError, ValidationError

log = logging.getLogger(__name__)

#: Cryogenic sapphire permittivities (perpendicular / parallel to the c-axis).
SAPPHIRE_EPS_PERP = 9.27
SAPPHIRE_EPS_PAR = 11.35

SCAN_STEP_HZ = 1e6


@dataclass(frozen=True)
class ModeSpec:
    m: int
    radius: float
    height: float
    eps_perp: float = SAPPHIRE_EPS_PERP
    eps_par: float = SAPPHIRE_EPS_PAR
    shield_radius: Optional[float] = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError("m must be a positive integer")
        object.__setattr__(self, "m", int(self.m))
        if not (self.radius > 0 and self.height > 0):
            raise ValidationError("radius and height must be positive")
        if not (self.eps_perp >= 1 and self.eps_par >= 1):
            raise ValidationError("permittivities must be >= 1")
        if self.shield_radius is not None and not self.shield_radius > self.radius:
            raise ValidationError("shield_radius must exceed radius")

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "radius_m": self.radius,
            "height_m": self.height,
            "eps_perp": self.eps_perp,
            "eps_par": self.eps_par,
            "shield_radius_m": self.shield_radius,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModeSpec":
        try:
            shield = d.get("shield_radius_m")
            return cls(
                m=d["m"],
                radius=float(d["radius_m"]),
                height=float(d["height_m"]),
                eps_perp=float(d.get("eps_perp", SAPPHIRE_EPS_PERP)),
                eps_par=float(d.get("eps_par", SAPPHIRE_EPS_PAR)),
                shield_radius=None if shield is None else float(shield),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"invalid mode config: {exc}") from None


def _k0(f):
    return 2.0 * np.pi * np.asarray(f, dtype=float) / C0


def _exterior_log_derivative(m: int, x, shield_ratio: Optional[float]):
    """``x R'(x) / R(x)`` for the exterior radial function at the rim (x = alpha * radius)."""
    if shield_ratio is None:
        return bessel.kn_log_derivative(m, x)
    x = np.asarray(x, dtype=float)
    xb = x * shield_ratio
    k_a = bessel.kn_all(m + 1, x)
    i_a = bessel.in_all(m + 1, x)
    k_b = bessel.kn_all(m, xb)[m]
    i_b = bessel.in_all(m, xb)[m]
    r = i_b * k_a[m] - k_b * i_a[m]
    dk = -0.5 * (k_a[m - 1] + k_a[m + 1])
    di = 0.5 * (i_a[m - 1] + i_a[m + 1])
    return x * (i_b * dk - k_b * di) / r


def _char_terms(m, radius, kz, eps_perp, eps_par, shield_ratio, f):
    """The two sides of the rim matching condition, as dimensionless arrays.

    G = (kout a)^2 (eps_par / u) J_m'(u) - [x K_m'(x)/K_m(x)] J_m(u) = 0
    with u = k_rho a, x = alpha a; the kout^2 factor keeps G finite where
    k0 = k_z.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    k0 = _k0(f)
    krho2 = eps_par * (k0**2 - kz**2 / eps_perp)
    kout2 = k0**2 - kz**2
    u = np.sqrt(np.where(krho2 > 0, krho2, np.nan)) * radius
    x = np.sqrt(np.abs(kout2)) * radius
    ok = np.isfinite(u)
    t1 = np.full(f.shape, np.nan)
    t2 = np.full(f.shape, np.nan)
    if ok.any():
        J = bessel.jn_all(m + 1, u[ok])
        jm, djm = J[m], 0.5 * (J[m - 1] - J[m + 1])
        lk = _exterior_log_derivative(m, x[ok], shield_ratio)
        t1[ok] = kout2[ok] * radius**2 * (eps_par / u[ok]) * djm
        t2[ok] = lk * jm
    return t1, t2


def _isotropic_terms(m, radius, kz, eps, f):
    """Same matching condition written directly for an isotropic dielectric."""
    f = np.atleast_1d(np.asarray(f, dtype=float))
    k0 = _k0(f)
    krho2 = eps * k0**2 - kz**2
    kout2 = k0**2 - kz**2
    u = np.sqrt(np.where(krho2 > 0, krho2, np.nan)) * radius
    x = np.sqrt(np.abs(kout2)) * radius
    ok = np.isfinite(u)
    t1 = np.full(f.shape, np.nan)
    t2 = np.full(f.shape, np.nan)
    if ok.any():
        jm = bessel.jn_all(m + 1, u[ok])
        # eps * J_m'(u) / u, folding (J_{m-1} - J_{m+1})/2 in directly
        t1[ok] = kout2[ok] * radius**2 * eps * (jm[m - 1] - jm[m + 1]) / (2.0 * u[ok])
        t2[ok] = bessel.kn_log_derivative(m, x[ok]) * jm[m]
    return t1, t2


def _spec_terms(spec: ModeSpec):
    kz = math.pi / spec.height
    ratio = None if spec.shield_radius is None else spec.shield_radius / spec.radius
    return lambda f: _char_terms(spec.m, spec.radius, kz, spec.eps_perp, spec.eps_par, ratio, f)


def characteristic(spec: ModeSpec, f):
    """Characteristic function normalised by the magnitude of its two terms (in [-1, 1])."""
    t1, t2 = _spec_terms(spec)(f)
    res = (t1 - t2) / (np.abs(t1) + np.abs(t2))
    return res if np.ndim(f) else float(res[0])


def characteristic_isotropic(m: int, radius: float, height: float, eps: float, f):
    t1, t2 = _isotropic_terms(m, radius, math.pi / height, eps, f)
    res = (t1 - t2) / (np.abs(t1) + np.abs(t2))
    return res if np.ndim(f) else float(res[0])


def default_window(spec: ModeSpec) -> tuple:
    """Frequency window covering k_rho * radius from m/2 to just past the first zero of J_m."""
    kz = math.pi / spec.height
    m = spec.m

    def f_of_u(u):
        k0sq = (u / spec.radius) ** 2 / spec.eps_par + kz**2 / spec.eps_perp
        return C0 * math.sqrt(k0sq) / (2.0 * math.pi)

    return f_of_u(0.5 * m), f_of_u(m + 3.0 * m ** (1.0 / 3.0) + 3.0)


def _find_root(fun, lo, hi, g_lo, g_hi, rtol):
    """Bisection to a narrow bracket, then Illinois-modified secant polish."""
    for _ in range(60):
        if hi - lo <= 1e-6 * hi:
            break
        mid = 0.5 * (lo + hi)
        g_mid = fun(mid)
        if g_mid == 0:
            return mid
        if math.copysign(1.0, g_mid) == math.copysign(1.0, g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    side = 0
    for _ in range(100):
        if hi - lo <= rtol * 1e-3 * hi:
            break
        x = hi - g_hi * (hi - lo) / (g_hi - g_lo)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        g = fun(x)
        if g == 0:
            return x
        if math.copysign(1.0, g) == math.copysign(1.0, g_hi):
            hi, g_hi = x, g
            if side == 1:
                g_lo *= 0.5
            side = 1
        else:
            lo, g_lo = x, g
            if side == -1:
                g_hi *= 0.5
            side = -1
    return lo if abs(g_lo) < abs(g_hi) else hi


def find_first_root(char, window, step=SCAN_STEP_HZ, rtol=1e-10):
    """Scan ``char`` (vectorised, normalised) over ``window`` and polish the first sign change."""
    f_lo, f_hi = window
    grid = np.arange(f_lo, f_hi + step, step)
    g = np.empty_like(grid)
    for start in range(0, grid.size, 4096):
        g[start:start + 4096] = char(grid[start:start + 4096])
    ok = np.isfinite(g[:-1]) & np.isfinite(g[1:])
    change = np.nonzero(ok & (np.sign(g[:-1]) * np.sign(g[1:]) < 0))[0]
    if change.size == 0:
        raise ModeNotFoundError(f"mode not found between {f_lo:.6e} and {f_hi:.6e} Hz")
    i = int(change[0])
    scalar = lambda f: float(char(np.array([f]))[0])
    return _find_root(scalar, grid[i], grid[i + 1], g[i], g[i + 1], rtol)


@dataclass(frozen=True)
class FieldPattern:
    """Field amplitudes of the solved mode, normalised to E_z = J_m(k_rho r) inside.

    Amplitudes are peak phasor values with the azimuthal factor removed:
    E_z, E_r, H_phi carry cos(m phi) and E_phi, H_r carry sin(m phi). The z
    dependence is included (cos(k_z z) for E_z and H, sin(k_z z) for E_t).
    """

    spec: ModeSpec
    f: float
    k_z: float
    k_rho: float
    alpha: float

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f

    @property
    def kout2(self) -> float:
        return (self.omega / C0) ** 2 - self.k_z**2

    @property
    def ext_amplitude(self) -> float:
        a = self.spec.radius
        jm = bessel.jn(self.spec.m, self.k_rho * a)
        return jm / float(self._exterior(np.array([a]))[0][0])

    def _exterior(self, r):
        """Unnormalised exterior radial function and its r-derivative."""
        m = self.spec.m
        x = self.alpha * r
        if self.spec.shield_radius is None:
            k = bessel.kn_all(m + 1, x)
            return k[m], -0.5 * self.alpha * (k[m - 1] + k[m + 1])
        xb = self.alpha * self.spec.shield_radius
        k_b = bessel.kn(m, xb)
        i_b = float(bessel.in_all(m, xb)[m][0])
        k = bessel.kn_all(m + 1, x)
        i = bessel.in_all(m + 1, x)
        r_val = i_b * k[m] - k_b * i[m]
        dr = self.alpha * (i_b * -0.5 * (k[m - 1] + k[m + 1]) - k_b * 0.5 * (i[m - 1] + i[m + 1]))
        return r_val, dr

    def radial(self, r):
        """Radial profiles (R, dR/dr, eps_t, eps_z, kappa2) for E_z = R(r) cos(k_z z)."""
        r = np.asarray(r, dtype=float)
        spec = self.spec
        m = spec.m
        inside = r <= spec.radius
        R = np.empty(r.shape)
        dR = np.empty(r.shape)
        if inside.any():
            J = bessel.jn_all(m + 1, self.k_rho * r[inside])
            R[inside] = J[m]
            dR[inside] = 0.5 * self.k_rho * (J[m - 1] - J[m + 1])
        if (~inside).any():
            c = self.ext_amplitude
            ro, dro = self._exterior(r[~inside])
            R[~inside] = c * ro
            dR[~inside] = c * dro
        eps_t = np.where(inside, spec.eps_perp, 1.0)
        eps_z = np.where(inside, spec.eps_par, 1.0)
        kappa2 = np.where(inside, (spec.eps_perp / spec.eps_par) * self.k_rho**2, self.kout2)
        return R, dR, eps_t, eps_z, kappa2

    def components_radial(self, r):
        """Radial parts of (E_r, E_phi, E_z, H_r, H_phi); multiply E_t by sin(k_z z), the rest by cos(k_z z)."""
        r = np.asarray(r, dtype=float)
        m = self.spec.m
        R, dR, eps_t, _, kappa2 = self.radial(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            m_over_r = np.where(r > 0, m / r, 0.0)
        e_fac = self.k_z / kappa2
        h_fac = self.omega * EPS0 * eps_t / kappa2
        return {
            "e_r": e_fac * dR,
            "e_phi": e_fac * m_over_r * R,
            "e_z": R,
            "h_r": h_fac * m_over_r * R,
            "h_phi": h_fac * dR,
        }

    def evaluate(self, r, z) -> dict:
        """All six components at (r, z), broadcast together."""
        r, z = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(z, dtype=float))
        comp = self.components_radial(r)
        cz = np.cos(self.k_z * z)
        sz = np.sin(self.k_z * z)
        return {
            "e_r": comp["e_r"] * sz,
            "e_phi": comp["e_phi"] * sz,
            "e_z": comp["e_z"] * cz,
            "h_r": comp["h_r"] * cz,
            "h_phi": comp["h_phi"] * cz,
            "h_z": np.zeros(r.shape),
        }


@dataclass(frozen=True)
class EnergyIntegrals:
    """Time-averaged energies (J) of the normalised pattern, split by region and component."""

    e_perp_in: float
    e_par_in: float
    e_out: float
    m_in: float
    m_out: float
    rel_change: float
    n_radial: int

    @property
    def electric(self) -> float:
        return self.e_perp_in + self.e_par_in + self.e_out

    @property
    def magnetic(self) -> float:
        return self.m_in + self.m_out

    @property
    def total(self) -> float:
        return self.electric + self.magnetic


def _gauss(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def energy_integrals_at(pattern: FieldPattern, n_radial: int, n_axial: int) -> EnergyIntegrals:
    """Tensor-product Gauss-Legendre quadrature over (r, z) at fixed resolution."""
    spec = pattern.spec
    a, h = spec.radius, spec.height
    z, wz = _gauss(n_axial, -0.5 * h, 0.5 * h)
    cz2 = float(wz @ np.cos(pattern.k_z * z) ** 2)
    sz2 = float(wz @ np.sin(pattern.k_z * z) ** 2)

    def region(r, wr, eps_t, eps_z):
        comp = pattern.components_radial(r)
        w = wr * r
        et = eps_t * float(w @ (comp["e_r"] ** 2 + comp["e_phi"] ** 2)) * sz2
        ez = eps_z * float(w @ comp["e_z"] ** 2) * cz2
        hm = float(w @ (comp["h_r"] ** 2 + comp["h_phi"] ** 2)) * cz2
        return et, ez, hm

    r_in, w_in = _gauss(n_radial, 0.0, a)
    et_in, ez_in, h_in = region(r_in, w_in, spec.eps_perp, spec.eps_par)
    if spec.shield_radius is None:
        # r = a / s maps [a, inf) onto (0, 1]; the integrand vanishes smoothly at s = 0
        s, ws = _gauss(n_radial, 0.0, 1.0)
        r_out, w_out = a / s, ws * a / s**2
    else:
        r_out, w_out = _gauss(n_radial, a, spec.shield_radius)
    et_out, ez_out, h_out = region(r_out, w_out, 1.0, 1.0)

    # azimuthal integral of cos^2 or sin^2 (m >= 1) is pi
    ke = 0.25 * EPS0 * math.pi
    km = 0.25 * MU0 * math.pi
    return EnergyIntegrals(
        e_perp_in=ke * et_in,
        e_par_in=ke * ez_in,
        e_out=ke * (et_out + ez_out),
        m_in=km * h_in,
        m_out=km * h_out,
        rel_change=float("nan"),
        n_radial=n_radial,
    )


def energy_integrals(pattern: FieldPattern, tol: float = 1e-10, n_start: int = 48, n_max: int = 3072) -> EnergyIntegrals:
    """Energy integrals with radial resolution doubled until every term changes by < ``tol``."""
    n_axial = 32
    prev = energy_integrals_at(pattern, n_start, n_axial)
    n = n_start
    change = float("inf")
    while n < n_max:
        n *= 2
        cur = energy_integrals_at(pattern, n, n_axial)
        a = np.array([prev.e_perp_in, prev.e_par_in, prev.e_out, prev.m_in, prev.m_out])
        b = np.array([cur.e_perp_in, cur.e_par_in, cur.e_out, cur.m_in, cur.m_out])
        change = float(np.max(np.abs(b - a) / np.maximum(np.abs(b), 1e-300)))
        prev = cur
        if change < tol:
            return EnergyIntegrals(**{**cur.__dict__, "rel_change": change})
    raise QuadratureError("energy quadrature did not converge", change)


@dataclass(frozen=True)
class ModeSolution:
    spec: ModeSpec
    f_res: float
    k_z: float
    k_rho: float
    decay: float
    p_e_perp: float
    p_e_par: float
    p_m_perp: float
    pattern: FieldPattern = field(repr=False)
    residual: float = 0.0
    integrals: Optional[EnergyIntegrals] = field(default=None, repr=False)

    @property
    def p_e_total(self) -> float:
        return self.p_e_perp + self.p_e_par

    @property
    def energy_balance(self) -> float:
        """Electric over magnetic energy of the pattern; unity for an exact eigenmode."""
        return self.integrals.electric / self.integrals.magnetic

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "f_res_hz": self.f_res,
            "k_z": self.k_z,
            "k_rho": self.k_rho,
            "decay": self.decay,
            "p_e_perp": self.p_e_perp,
            "p_e_par": self.p_e_par,
            "p_m_perp": self.p_m_perp,
            "residual": self.residual,
            "energy_balance": self.energy_balance,
        }


def solve_mode(spec: ModeSpec, window: Optional[tuple] = None, step: float = SCAN_STEP_HZ, rtol: float = 1e-10) -> ModeSolution:
    """Fundamental WGH_{m,0,0} resonance, field pattern and filling factors."""
    char = lambda f: characteristic(spec, f)
    window = window or default_window(spec)
    f_res = find_first_root(char, window, step, rtol)
    residual = abs(characteristic(spec, f_res))

    k0 = 2.0 * math.pi * f_res / C0
    kz = math.pi / spec.height
    kout2 = k0**2 - kz**2
    if kout2 > 0 and math.sqrt(kout2) * spec.radius >= spec.m:
        raise UnconfinedModeError(
            f"rim lies beyond the vacuum caustic at {f_res:.6e} Hz (kout*a >= m); exterior is not evanescent"
        )
    krho = math.sqrt(spec.eps_par * (k0**2 - kz**2 / spec.eps_perp))
    alpha = math.sqrt(abs(kout2))
    pattern = FieldPattern(spec, f_res, kz, krho, alpha)
    integ = energy_integrals(pattern)
    log.info("m=%d: f_res=%.9e Hz, residual=%.1e", spec.m, f_res, residual)
    return ModeSolution(
        spec=spec,
        f_res=f_res,
        k_z=kz,
        k_rho=krho,
        decay=alpha,
        p_e_perp=integ.e_perp_in / integ.electric,
        p_e_par=integ.e_par_in / integ.electric,
        p_m_perp=integ.m_in / integ.magnetic,
        pattern=pattern,
        residual=residual,
        integrals=integ,
    )


def solve_isotropic_frequency(m: int, radius: float, height: float, eps: float, window: tuple,
                              step: float = SCAN_STEP_HZ, rtol: float = 1e-10) -> float:
    """Root of the isotropic characteristic equation (independent of the uniaxial code path)."""
    return find_first_root(lambda f: characteristic_isotropic(m, radius, height, eps, f), window, step, rtol)


def filling_factors(solution: ModeSolution, tol: float = 1e-10) -> tuple:
    """(p_e_perp, p_e_par, p_m_perp) recomputed from the solution's field pattern."""
    integ = energy_integrals(solution.pattern, tol=tol)
    return (
        integ.e_perp_in / integ.electric,
        integ.e_par_in / integ.electric,
        integ.m_in / integ.magnetic,
    )


def _peak(fun, r_grid):
    vals = fun(r_grid)
    i = int(np.argmax(vals))
    lo = r_grid[max(i - 1, 0)]
    hi = r_grid[min(i + 1, r_grid.size - 1)]
    best = float(vals[i])
    if hi > lo:
        opt = minimize_scalar(lambda r: -float(fun(np.array([r]))[0]), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * hi})
        best = max(best, -float(opt.fun))
    return math.sqrt(best)


def pattern_peaks(pattern: FieldPattern) -> tuple:
    """Peak |E| and |H| of the normalised pattern over the crystal volume.

    E_z and E_r share cos(m phi) while E_phi carries sin(m phi); E_z goes as
    cos(k_z z) and E_t as sin(k_z z). Maximising over phi and z therefore
    gives max(E_z^2, E_r^2, E_phi^2), each taken at z = 0 or at a face, which
    reduces the search to a single radial line.
    """
    a = pattern.spec.radius
    r = np.linspace(a * 1e-3, a, 2001)

    def e2(rr):
        c = pattern.components_radial(rr)
        return np.maximum.reduce([c["e_z"] ** 2, c["e_r"] ** 2, c["e_phi"] ** 2])

    def h2(rr):
        c = pattern.components_radial(rr)
        return np.maximum(c["h_r"] ** 2, c["h_phi"] ** 2)

    return _peak(e2, r), _peak(h2, r)


def field_scales(solution: ModeSolution, energy: float) -> tuple:
    """Factors multiplying the normalised E and H patterns for a stored energy ``energy`` (J).

    Electric and magnetic halves are each set to ``energy / 2``.
    """
    if not (energy >= 0 and math.isfinite(energy)):
        raise ValidationError("energy must be finite and >= 0")
    integ = solution.integrals
    return math.sqrt(0.5 * energy / integ.electric), math.sqrt(0.5 * energy / integ.magnetic)


def field_amplitudes(solution: ModeSolution, energy: float) -> tuple:
    """Peak (E in V/m, H in A/m) over the crystal for stored energy ``energy``."""
    s_e, s_h = field_scales(solution, energy)
    e_pk, h_pk = pattern_peaks(solution.pattern)
    return s_e * e_pk, s_h * h_pk
