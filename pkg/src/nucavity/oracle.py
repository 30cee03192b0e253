"""Independent semiclassical cross-check: recursive reflectivity with a
resonant refractive index.

Resonant layers acquire a detuning-dependent index

    n(Delta) = n_base + sum_t chi_amp * w_t / (-2 (Delta - d_t) - i),

a causal Lorentzian per hyperfine line (absorption peak at the line
center, dispersive real part).  The amplitude per unit density scale is
tied to the quantum model once, on a single reference structure, by
matching the width of the resonant line; the resulting dimensionless
ratio is frozen below.  Apart from that one shared scalar the code path
is fully independent of the Green-function solver: a classic ratio
recursion written directly against the layer list.
"""

from __future__ import annotations

import math

import numpy as np

from .materials import refractive_index
from .stack import CavityStack, Layer

# chi_amp = SUSCEPTIBILITY_RATIO * 3 pi scale / (k0^3 (1 + alpha)), fixed by
# calibrate_susceptibility on the single-resonant-layer reference cavity at
# its first guided mode; the dipole-relation estimate is exactly 1.
FROZEN_SUSCEPTIBILITY_RATIO = 1.00038033

DEFAULT_SLICE_NM = 0.3


def _chi_amp(layer: Layer, k0: float, ratio: float) -> float:
    scale = layer.resonant.area_density_scale
    if scale is None:
        raise ValueError(f"resonant layer {layer.material.name!r} is uncalibrated")
    alpha = layer.resonant.species.internal_conversion_alpha
    return ratio * 3.0 * math.pi * scale / (k0 ** 3 * (1.0 + alpha))


def resonant_index(layer: Layer, delta, *, k0: float,
                   ratio: float = FROZEN_SUSCEPTIBILITY_RATIO):
    """Detuning-dependent complex index of a resonant layer (delta in Gamma_0)."""
    n = complex(refractive_index(layer.material))
    if layer.resonant is None:
        return n + 0.0 * np.asarray(delta)
    amp = _chi_amp(layer, k0, ratio)
    delta = np.asarray(delta, dtype=float)
    chi = sum(
        amp * w_t / (-2.0 * (delta - d_t) - 1j)
        for d_t, w_t in layer.resonant.species.transitions
    )
    return n + chi


def _sliced_layers(stack: CavityStack, slice_nm: float):
    """(layer, thickness) list with resonant layers cut into thin slabs."""
    out = []
    for lay in stack.layers:
        if lay.resonant is None or lay.thickness_nm <= slice_nm:
            out.append((lay, lay.thickness_nm))
            continue
        n_sub = math.ceil(lay.thickness_nm / slice_nm - 1e-12)
        for _ in range(n_sub):
            out.append((lay, lay.thickness_nm / n_sub))
    return out


def oracle_reflectivity(stack: CavityStack, delta, phi: float, *,
                        k0: float | None = None,
                        ratio: float = FROZEN_SUSCEPTIBILITY_RATIO,
                        slice_nm: float = DEFAULT_SLICE_NM):
    """Complex reflection amplitude from the semiclassical recursion.

    ``delta`` may be a scalar or array of detunings in Gamma_0 units.
    """
    k0 = stack.k0 if k0 is None else k0
    delta_arr = np.atleast_1d(np.asarray(delta, dtype=float))
    cos2 = math.cos(phi) ** 2

    def kz_of(n):
        val = k0 * np.sqrt(n * n - cos2 + 0j)
        return np.where(np.imag(val) < 0, -val, val)

    pieces = _sliced_layers(stack, slice_nm)
    kz_list = [kz_of(complex(refractive_index(stack.ambient)) + 0.0 * delta_arr)]
    d_list = []
    for lay, thick in pieces:
        kz_list.append(kz_of(resonant_index(lay, delta_arr, k0=k0, ratio=ratio)))
        d_list.append(thick)
    kz_list.append(kz_of(complex(refractive_index(stack.substrate)) + 0.0 * delta_arr))

    # bottom-up ratio recursion
    r = (kz_list[-2] - kz_list[-1]) / (kz_list[-2] + kz_list[-1])
    for j in range(len(d_list) - 1, -1, -1):
        ph = np.exp(2j * kz_list[j + 1] * d_list[j])
        rho = (kz_list[j] - kz_list[j + 1]) / (kz_list[j] + kz_list[j + 1])
        r = (rho + r * ph) / (1.0 + rho * r * ph)

    return complex(r[0]) if np.ndim(delta) == 0 else r


def oracle_spectrum(stack: CavityStack, delta_grid, phi_grid, *,
                    k0: float | None = None,
                    ratio: float = FROZEN_SUSCEPTIBILITY_RATIO,
                    slice_nm: float = DEFAULT_SLICE_NM):
    """Spectrum object from the oracle path (metadata marks the source)."""
    from .observables import Spectrum  # local import to avoid a cycle

    delta_arr = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    phi_arr = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    r = np.empty((phi_arr.size, delta_arr.size), dtype=complex)
    for i, phi in enumerate(phi_arr):
        r[i, :] = oracle_reflectivity(stack, delta_arr, float(phi), k0=k0,
                                      ratio=ratio, slice_nm=slice_nm)
    return Spectrum(delta_arr, phi_arr, r, {
        "source": "oracle",
        "stack": stack.content_hash(),
        "energy_keV": f"{stack.energy_keV:.12g}",
        "susceptibility_ratio": f"{ratio:.12g}",
    })


def _fwhm(x, y):
    """Full width at half maximum by linear interpolation of the crossings."""
    y = np.asarray(y, dtype=float)
    i_pk = int(np.argmax(y))
    half = 0.5 * (y[i_pk] + min(y[0], y[-1]))
    left = right = None
    for i in range(i_pk, 0, -1):
        if y[i - 1] < half <= y[i]:
            t = (half - y[i - 1]) / (y[i] - y[i - 1])
            left = x[i - 1] + t * (x[i] - x[i - 1])
            break
    for i in range(i_pk, len(y) - 1):
        if y[i + 1] < half <= y[i]:
            t = (y[i] - half) / (y[i] - y[i + 1])
            right = x[i] + t * (x[i + 1] - x[i])
            break
    if left is None or right is None:
        return None
    return right - left


def calibrate_susceptibility(stack: CavityStack, phi: float, *,
                             target_width: float,
                             k0: float | None = None,
                             bracket: tuple = (0.2, 5.0),
                             delta_window: float | None = None,
                             points: int = 8001) -> float:
    """Fit the susceptibility ratio so the oracle linewidth matches ``target_width``.

    ``target_width`` is the expected FWHM of the resonant line in Gamma_0
    units, i.e. the collectively broadened plus natural width of the
    quantum model.  The width is measured on the rescattered amplitude
    |r(Delta) - r(far)|^2, which is baseline-free; monotone bisection.
    """
    if delta_window is None:
        delta_window = max(60.0, 12.0 * target_width)
    delta = np.linspace(-delta_window, delta_window, points)

    def width(ratio):
        r = oracle_reflectivity(stack, delta, phi, k0=k0, ratio=ratio)
        r_far = oracle_reflectivity(stack, 1e9, phi, k0=k0, ratio=ratio)
        y = np.abs(r - r_far) ** 2
        w = _fwhm(delta, y)
        if w is None:
            raise CalibrationNeedsWindowError(
                f"resonance width not resolved in +-{delta_window} Gamma_0")
        return w

    lo, hi = bracket
    w_lo, w_hi = width(lo), width(hi)
    if not (w_lo < target_width < w_hi):
        raise ValueError(
            f"target width {target_width:.3g} outside bracket "
            f"[{w_lo:.3g}, {w_hi:.3g}] Gamma_0"
        )
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if width(mid) < target_width:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


class CalibrationNeedsWindowError(RuntimeError):
    """The detuning window did not resolve the resonance width."""
