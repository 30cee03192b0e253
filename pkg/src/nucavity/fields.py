"""Stratified-medium wave solver: reflection, in-cavity fields, Green function.

Scalar (s-polarization) treatment of a plane wave at grazing incidence
phi on a stack of homogeneous layers.  Per layer the z-component of the
wavevector is

    k_z = k0 * sqrt(n^2 - cos^2 phi),  branch Im(k_z) >= 0,

so evanescent and absorbed waves decay downward (time convention
e^{-i omega t}).  Reflection coefficients come from the Parratt ratio
recursion; in-layer plane-wave amplitudes are re-anchored at each
interface so that only decaying exponentials are ever evaluated, which
keeps thick absorbing mirrors overflow-free.

Two independent solutions are kept:

* ``p``: unit wave incident from the ambient (above); in the ambient it
  is incident + reflected, in the substrate purely transmitted,
* ``q``: unit wave incident from the substrate (below); purely outgoing
  upward in the ambient.

They satisfy the outgoing boundary conditions at the bottom and top
respectively, so the one-dimensional Green function of the layered
Helmholtz operator (at the transverse wavevector selected by phi) is

    G(z, z') = -q(z_<) p(z_>) / W,        W = q p' - q' p  (constant),

normalized such that in a homogeneous medium
G(z, z') = i e^{i k_z |z - z'|} / (2 k_z).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .materials import refractive_index
from .stack import CavityStack

GRAZING_MAX_RAD = 0.1


@dataclass(frozen=True)
class AngleGrid:
    """Sorted grazing-incidence angles with an optional reference angle."""

    phi_rad: np.ndarray
    phi_c: float | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi_rad, dtype=float)
        if phi.ndim != 1 or phi.size == 0:
            raise ValueError("phi_rad must be a non-empty 1-d array")
        if np.any(phi <= 0) or np.any(phi >= GRAZING_MAX_RAD):
            raise ValueError(f"angles must lie in (0, {GRAZING_MAX_RAD}) rad")
        if np.any(np.diff(phi) <= 0):
            raise ValueError("angles must be strictly increasing")
        object.__setattr__(self, "phi_rad", phi)

    @property
    def deviations(self) -> np.ndarray:
        """Deviation angles relative to the reference angle."""
        if self.phi_c is None:
            raise ValueError("no reference angle set")
        return self.phi_rad - self.phi_c


def kz_in_layer(n: complex, phi: float, k0: float) -> complex:
    """z-wavenumber in a medium of index n, physical branch Im(k_z) >= 0."""
    kz = k0 * np.sqrt(n * n - np.cos(phi) ** 2 + 0j)
    if np.ndim(kz) == 0:
        kz = complex(kz)
        return -kz if kz.imag < 0 else kz
    return np.where(kz.imag < 0, -kz, kz)


def _stack_kz(stack: CavityStack, phi, k0):
    """k_z per region (ambient, layers..., substrate); phi may be an array."""
    phi = np.asarray(phi, dtype=float)
    cos2 = np.cos(phi) ** 2
    indices = [refractive_index(stack.ambient)]
    indices += [refractive_index(lay.material) for lay in stack.layers]
    indices.append(refractive_index(stack.substrate))
    kz = np.empty((len(indices),) + phi.shape, dtype=complex)
    for j, n in enumerate(indices):
        val = k0 * np.sqrt(n * n - cos2 + 0j)
        kz[j] = np.where(val.imag < 0, -val, val)
    return kz


def _parratt_ratios(kz, d):
    """Parratt reflected/incident ratios R_i at each interface, bottom-up.

    kz has shape (M+2, ...), d length M.  R_i is the ratio at the bottom
    of layer i (interface between layers i and i+1).  All exponentials
    decay, so arbitrarily thick absorbing layers are safe.
    """
    m = len(d)
    rho = [(kz[i] - kz[i + 1]) / (kz[i] + kz[i + 1]) for i in range(m + 1)]
    ratios = [None] * (m + 1)
    ratios[m] = rho[m]
    for i in range(m - 1, -1, -1):
        ph = np.exp(2j * kz[i + 1] * d[i])
        num = rho[i] + ratios[i + 1] * ph
        den = 1.0 + rho[i] * ratios[i + 1] * ph
        ratios[i] = num / den
    return ratios


def _sweep_amplitudes(kz, d, ratios):
    """Downward/upward amplitudes per region for unit incidence from above.

    Returns (a, bb): ``a[j]`` is the downward amplitude at the top of
    region j (at z = 0 for the ambient), ``bb[j]`` the upward amplitude at
    the bottom of region j (for the ambient: at z = 0; for the substrate
    it is zero).
    """
    m = len(d)
    a = [np.ones_like(kz[0])] + [None] * (m + 1)
    bb = [ratios[0]] + [None] * (m + 1)
    a_bot = a[0]
    b_bot = bb[0]
    for j in range(m + 1):
        a_next = ((kz[j] + kz[j + 1]) * a_bot + (kz[j + 1] - kz[j]) * b_bot) / (2.0 * kz[j + 1])
        a[j + 1] = a_next
        if j + 1 <= m:
            a_bot = a_next * np.exp(1j * kz[j + 1] * d[j])
            b_bot = ratios[j + 1] * a_bot
            bb[j + 1] = b_bot
        else:
            bb[j + 1] = np.zeros_like(a_next)
    return a, bb


class _Solution:
    """Piecewise plane-wave field, evaluated overflow-safely at any depth.

    Regions are indexed 0 (ambient), 1..M (layers), M+1 (substrate).  In
    region j with local coordinate zeta measured from its top interface,

        E = a[j] e^{i k zeta} + b_bot[j] e^{i k (d_j - zeta)}     (layers)
        E = a[0] e^{i k zeta} + b_bot[0] e^{-i k zeta}            (ambient, zeta <= 0)
        E = a[M+1] e^{i k zeta} + b_sub e^{-i k zeta}             (substrate)
    """

    def __init__(self, kz, d, tops, a, b_bot, b_sub=0.0):
        self.kz = kz
        self.d = d
        self.tops = tops      # z of the top of each region; tops[0] = 0 (ambient anchor)
        self.a = a
        self.b_bot = b_bot
        self.b_sub = b_sub
        self._edges = np.concatenate([[0.0], np.cumsum(d)])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        region = np.searchsorted(self._edges, z, side="right")
        out = np.empty(z.shape, dtype=complex)
        for j in np.unique(region):
            sel = region == j
            zeta = z[sel] - self.tops[j]
            k = self.kz[j]
            if j == 0:
                val = self.a[0] * np.exp(1j * k * zeta) + self.b_bot[0] * np.exp(-1j * k * zeta)
            elif j == len(self.d) + 1:
                val = self.a[j] * np.exp(1j * k * zeta) + self.b_sub * np.exp(-1j * k * zeta)
            else:
                val = self.a[j] * np.exp(1j * k * zeta) + self.b_bot[j] * np.exp(
                    1j * k * (self.d[j - 1] - zeta)
                )
            out[sel] = val
        return out[0] if scalar else out


@dataclass(frozen=True)
class FieldProfile:
    """Fields of a stack at one angle: p (top incidence), q (bottom incidence).

    ``r0`` is the bare complex reflection amplitude at the top surface,
    ``t_down`` the transmitted amplitude into the substrate, ``t_up`` the
    amplitude radiated into the ambient by the bottom-incidence solution.
    ``wronskian`` normalizes the Green function.
    """

    stack: CavityStack
    phi: float
    k0: float
    kz: np.ndarray
    r0: complex
    t_down: complex
    t_up: complex
    wronskian: complex
    _p: _Solution
    _q: _Solution

    def p(self, z):
        """Cavity field for a unit wave incident from above."""
        return self._p(z)

    def q(self, z):
        """Cavity field for a unit wave incident from below."""
        return self._q(z)

    def green(self, z, z_prime):
        """One-dimensional Green function between depths z and z' (nm units)."""
        z = np.asarray(z, dtype=float)
        zp = np.asarray(z_prime, dtype=float)
        lo = np.minimum(z, zp)
        hi = np.maximum(z, zp)
        return -self._q(lo) * self._p(hi) / self.wronskian


@dataclass(frozen=True)
class Green1D:
    """Green-function value between two depths at fixed angle and energy."""

    value: complex
    z: float
    z_prime: float
    phi: float
    k0: float


def _require_grazing(phi):
    if not 0 < phi < GRAZING_MAX_RAD:
        raise ValueError(f"grazing angle must be in (0, {GRAZING_MAX_RAD}) rad, got {phi}")


def field_profile(stack: CavityStack, phi: float, k0: float | None = None) -> FieldProfile:
    """Solve the piecewise Helmholtz problem for both incidence directions."""
    _require_grazing(phi)
    k0 = stack.k0 if k0 is None else k0
    kz = _stack_kz(stack, phi, k0)
    if np.any(kz == 0):
        bad = int(np.argwhere(kz == 0)[0][0])
        raise ArithmeticError(f"degenerate region {bad}: k_z = 0, transfer matrix singular")
    d = [lay.thickness_nm for lay in stack.layers]
    tops = np.concatenate([[0.0], [0.0], np.cumsum(d)])  # ambient anchor, layer tops, substrate top

    ratios = _parratt_ratios(kz, d)
    a_p, bb_p = _sweep_amplitudes(kz, d, ratios)
    p_sol = _Solution(kz, d, tops, a_p, bb_p)

    # Bottom incidence: solve the reversed stack, then map amplitudes back.
    kz_rev = kz[::-1]
    d_rev = d[::-1]
    ratios_rev = _parratt_ratios(kz_rev, d_rev)
    a_r, bb_r = _sweep_amplitudes(kz_rev, d_rev, ratios_rev)
    m = len(d)
    a_q = [np.zeros_like(kz[0])] * (m + 2)
    bb_q = [np.zeros_like(kz[0])] * (m + 2)
    # original layer j <-> reversed region m+1-j; the (a, b_bot) pair swaps.
    for j in range(1, m + 1):
        a_q[j] = bb_r[m + 1 - j]
        bb_q[j] = a_r[m + 1 - j]
    a_q[0] = np.zeros_like(kz[0])
    bb_q[0] = a_r[m + 1]                      # upward amplitude radiated into the ambient
    a_q[m + 1] = ratios_rev[0]                # reflected (downward) part in the substrate
    q_sol = _Solution(kz, d, tops, a_q, bb_q, b_sub=1.0)

    r0 = complex(bb_p[0])
    t_down = complex(a_p[m + 1])
    t_up = complex(bb_q[0])
    wronskian = 2j * kz[0] * t_up            # evaluated in the ambient, constant through the stack
    return FieldProfile(stack, phi, k0, kz, r0, t_down, t_up, wronskian, p_sol, q_sol)


def bare_reflectivity(stack: CavityStack, phi, k0: float | None = None):
    """Complex reflection amplitude of the stack without nuclear response.

    ``phi`` may be a scalar or an array of grazing angles.
    """
    k0 = stack.k0 if k0 is None else k0
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr <= 0) or np.any(phi_arr >= GRAZING_MAX_RAD):
        raise ValueError(f"grazing angles must be in (0, {GRAZING_MAX_RAD}) rad")
    kz = _stack_kz(stack, phi_arr, k0)
    d = [lay.thickness_nm for lay in stack.layers]
    r = _parratt_ratios(kz, d)[0]
    return complex(r) if phi_arr.ndim == 0 else r


def green_1d(stack: CavityStack, phi: float, k0: float | None, z: float, z_prime: float) -> Green1D:
    """Green function between two depths (one-shot convenience wrapper)."""
    profile = field_profile(stack, phi, k0)
    return Green1D(complex(profile.green(z, z_prime)), z, z_prime, profile.phi, profile.k0)


class ResonantAngles(NamedTuple):
    angles: list
    found_all: bool


def resonant_angles(stack: CavityStack, k0: float | None = None,
                    phi_range: tuple = (5e-4, 0.02), count: int = 3,
                    samples: int | None = None) -> ResonantAngles:
    """Locate guided-mode minima of the bare reflectivity |r0(phi)|^2.

    Returns the ``count`` lowest-angle local minima in ``phi_range``, each
    refined to 1e-7 rad.  If fewer minima exist, ``found_all`` is False.
    """
    lo, hi = phi_range
    if count == 0 or hi <= lo:
        return ResonantAngles([], False)
    lo = max(lo, 1e-6)
    hi = min(hi, GRAZING_MAX_RAD - 1e-9)
    if samples is None:
        samples = max(1000, int((hi - lo) / 2e-6))
    phis = np.linspace(lo, hi, samples)
    refl = np.abs(bare_reflectivity(stack, phis, k0)) ** 2

    interior = (refl[1:-1] < refl[:-2]) & (refl[1:-1] <= refl[2:])
    idx = np.where(interior)[0] + 1
    minima = []
    for i in idx:
        res = minimize_scalar(
            lambda ph: abs(bare_reflectivity(stack, float(ph), k0)) ** 2,
            bounds=(phis[i - 1], phis[i + 1]),
            method="bounded",
            options={"xatol": 1e-9},
        )
        minima.append(float(res.x))
        if len(minima) == count:
            break
    return ResonantAngles(minima, len(minima) == count)
