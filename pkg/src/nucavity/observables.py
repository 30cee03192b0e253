"""Reflectivity spectra, calibration, and lineshape/eigenmode analysis.

The reflected amplitude per unit input is the bare cavity response plus
the field rescattered by the nuclear sites,

    R(Delta, phi) = r0(phi) + sum_l c sqrt(w_l) G_1D(0, z_l) S_l(Delta),

with the coherences S from the steady-state linear solve.  Hyperfine
lines are independent two-level resonances: the solve is repeated per
line with the detuning shifted and all site weights multiplied by the
line weight, and the rescattered fields are summed.

Because the coupling matrix does not depend on Delta, a dense detuning
grid is evaluated from one eigendecomposition per angle (pole expansion
of M(Delta)^{-1}); a direct linear-solve path is kept as fallback and
cross-check.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .ensemble import CouplingSystem, build_sites, coupling_system
from .fields import AngleGrid, field_profile
from .stack import CavityStack

CSV_HEADER = "# delta_gamma0, phi_mrad, re_R, im_R, abs2_R"
DARK_OVERLAP_THRESHOLD = 0.02


class CalibrationError(RuntimeError):
    """Calibration reference is unusable (no resonant feature)."""


class FitConvergenceError(RuntimeError):
    """Nonlinear fit failed to converge; carries the best attempt."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# per-angle solver

class _AngleSolver:
    """Reflectivity R(Delta) at a fixed angle, pole expansion with fallback."""

    def __init__(self, stack, sites, phi, k0=None):
        k0 = stack.k0 if k0 is None else k0
        self.prof = field_profile(stack, phi, k0)
        self.r0 = self.prof.r0
        self.sys = coupling_system(stack, sites, phi, k0, profile=self.prof) if sites else None
        self._use_poles = False
        if self.sys is not None:
            self._prepare_poles()

    def _prepare_poles(self):
        sys = self.sys
        try:
            lam, vec = np.linalg.eig(sys.gmat)
            c_in = np.linalg.solve(vec, sys.omega)
            self._lam = lam
            self._residues = (sys.g_out @ vec) * c_in
            self._use_poles = True
        except np.linalg.LinAlgError:
            return
        # cross-check the expansion against a direct solve at one detuning
        probe = 0.37
        pole = self._poles_value(np.array([probe]))[0]
        direct = self._direct_value(np.array([probe]))[0]
        scale = max(abs(direct), 1e-30)
        if abs(pole - direct) / scale > 1e-8:
            self._use_poles = False

    def _poles_value(self, delta):
        sys = self.sys
        out = np.zeros(delta.shape, dtype=complex)
        for d_t, w_t in sys.lines:
            denom = (delta - d_t)[:, None] + 0.5j * sys.gamma0 + w_t * self._lam[None, :]
            out -= w_t * (self._residues[None, :] / denom).sum(axis=1)
        return out

    def _direct_value(self, delta):
        sys = self.sys
        eye = np.eye(sys.size)
        out = np.empty(delta.shape, dtype=complex)
        for i, d in enumerate(delta):
            acc = 0.0 + 0.0j
            for d_t, w_t in sys.lines:
                m = (d - d_t + 0.5j * sys.gamma0) * eye + w_t * sys.gmat
                acc -= w_t * (sys.g_out @ np.linalg.solve(m, sys.omega))
            out[i] = acc
        return out

    def nuclear_amplitude(self, delta):
        delta = np.asarray(delta, dtype=float)
        if self.sys is None:
            return np.zeros(delta.shape, dtype=complex)
        return self._poles_value(delta) if self._use_poles else self._direct_value(delta)

    def reflectivity(self, delta):
        return self.r0 + self.nuclear_amplitude(delta)


# ---------------------------------------------------------------------------
# spectra

@dataclass
class Spectrum:
    """Complex reflectivity sampled on a (detuning x angle) grid.

    ``R[i, j]`` belongs to ``phi_grid[i]`` (rad) and ``delta_grid[j]``
    (Gamma_0 units).  CSV rows are angle-major.
    """

    delta_grid: np.ndarray
    phi_grid: np.ndarray
    R: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delta_grid = np.asarray(self.delta_grid, dtype=float)
        self.phi_grid = np.asarray(self.phi_grid, dtype=float)
        self.R = np.asarray(self.R, dtype=complex)
        if self.R.shape != (self.phi_grid.size, self.delta_grid.size):
            raise ValueError("R must have shape (n_phi, n_delta)")

    @property
    def abs2(self) -> np.ndarray:
        return np.abs(self.R) ** 2

    def to_csv(self) -> str:
        out = io.StringIO()
        for key in sorted(self.metadata):
            out.write(f"# {key}={self.metadata[key]}\n")
        out.write(CSV_HEADER + "\n")
        for i, phi in enumerate(self.phi_grid):
            phi_mrad = phi * 1e3
            for j, d in enumerate(self.delta_grid):
                r = self.R[i, j]
                out.write(
                    f"{d:.12g}, {phi_mrad:.12g}, {r.real:.12g}, {r.imag:.12g}, "
                    f"{abs(r) ** 2:.12g}\n"
                )
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        metadata = {}
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body and not body.startswith("delta_gamma0"):
                    key, _, value = body.partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            parts = [float(tok) for tok in line.split(",")]
            rows.append(parts)
        if not rows:
            raise ValueError("empty spectrum CSV")
        data = np.array(rows)
        deltas = np.unique(data[:, 0])
        phis_mrad = np.unique(data[:, 1])
        if data.shape[0] != deltas.size * phis_mrad.size:
            raise ValueError("spectrum CSV is not a complete grid")
        r = np.empty((phis_mrad.size, deltas.size), dtype=complex)
        di = {v: i for i, v in enumerate(deltas)}
        pi = {v: i for i, v in enumerate(phis_mrad)}
        for row in data:
            r[pi[row[1]], di[row[0]]] = row[2] + 1j * row[3]
        return cls(deltas, phis_mrad * 1e-3, r, metadata)


def _as_phi_array(phi_grid):
    if isinstance(phi_grid, AngleGrid):
        return phi_grid.phi_rad
    arr = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    if arr.size == 0:
        raise ValueError("empty angle grid")
    return arr


def _scan_sites(stack, h_max, phi_ref, k0):
    """Sites for a scan; the automatic policy uses one reference angle."""
    if not stack.resonant_layers():
        return []
    return build_sites(stack, h_max, phi=phi_ref, k0=k0)


def reflectivity(stack: CavityStack, delta, phi: float, *,
                 sites=None, h_max: float | None = None, k0: float | None = None):
    """Complex reflection amplitude at one angle; ``delta`` scalar or array."""
    k0 = stack.k0 if k0 is None else k0
    if sites is None:
        sites = _scan_sites(stack, h_max, phi, k0)
    solver = _AngleSolver(stack, sites, phi, k0)
    delta_arr = np.asarray(delta, dtype=float)
    out = solver.reflectivity(np.atleast_1d(delta_arr))
    return complex(out[0]) if delta_arr.ndim == 0 else out


def spectrum_scan(stack: CavityStack, delta_grid, phi_grid, *,
                  h_max: float | None = None, threads: int = 1,
                  k0: float | None = None) -> Spectrum:
    """Dense reflectivity scan over detuning and angle grids."""
    delta_arr = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    phi_arr = _as_phi_array(phi_grid)
    if delta_arr.size == 0:
        raise ValueError("empty detuning grid")
    k0 = stack.k0 if k0 is None else k0
    phi_ref = float(phi_arr[phi_arr.size // 2])
    sites = _scan_sites(stack, h_max, phi_ref, k0)

    r = np.empty((phi_arr.size, delta_arr.size), dtype=complex)

    def fill(i):
        r[i, :] = _AngleSolver(stack, sites, float(phi_arr[i]), k0).reflectivity(delta_arr)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(phi_arr.size)))
    else:
        for i in range(phi_arr.size):
            fill(i)

    metadata = {
        "source": "model",
        "stack": stack.content_hash(),
        "energy_keV": f"{stack.energy_keV:.12g}",
        "sites": str(len(sites)),
    }
    if h_max is not None:
        metadata["h_max_nm"] = f"{h_max:.12g}"
    return Spectrum(delta_arr, phi_arr, r, metadata)


# ---------------------------------------------------------------------------
# calibration

def calibrate_density(stack: CavityStack, reference: Spectrum,
                      which_layer: int | None = None):
    """Fit the resonant density scale against a reference spectrum.

    Minimizes the RMS of the complex difference |R_model - R_ref| over
    the reference grid with a single multiplicative factor on the
    resonant layer scales (all of them, or only ``which_layer``).
    Returns (factor, recalibrated stack); the factor times the prior
    scale-per-nm transfers to any structure with the same composition.
    """
    if not stack.resonant_layers():
        raise CalibrationError("stack has no resonant layers to calibrate")
    ref_abs2 = reference.abs2
    contrast = float(ref_abs2.max() - ref_abs2.min())
    if contrast <= 1e-9 * max(ref_abs2.max(), 1e-30):
        raise CalibrationError("reference spectrum is flat: no resonant feature to fit")

    def cost(log10_factor):
        trial = stack.with_scale_factor(10.0 ** log10_factor, which_layer)
        model = spectrum_scan(trial, reference.delta_grid, reference.phi_grid)
        return float(np.sqrt(np.mean(np.abs(model.R - reference.R) ** 2)))

    res = minimize_scalar(cost, bounds=(-4.0, 4.0), method="bounded",
                          options={"xatol": 1e-9})
    factor = float(10.0 ** res.x)
    return factor, stack.with_scale_factor(factor, which_layer)


# ---------------------------------------------------------------------------
# collective parameters and lineshape fits

def collective_parameters(stack: CavityStack, site, phi: float,
                          k0: float | None = None):
    """(Ng, Ngamma) of one macro-nucleus in Gamma_0 units.

    The collective frequency shift and enhanced decay rate are the real
    part and twice the imaginary part of the calibrated self-coupling.
    """
    sys = coupling_system(stack, [site], phi, k0)
    g11 = complex(sys.gmat[0, 0])
    return g11.real, 2.0 * g11.imag


@dataclass(frozen=True)
class FanoFit:
    """Asymmetric resonance fit  a |q + b dphi|^2 / (1 + b^2 dphi^2)."""

    a: float
    q: float
    b: float
    phi_c: float
    rms_residual: float

    def __call__(self, delta_phi):
        x = np.asarray(delta_phi, dtype=float) - self.phi_c
        u = self.b * x
        return self.a * (self.q + u) ** 2 / (1.0 + u ** 2)


def _fano_residual(params, x, f):
    a, q, b, phi_c = params
    u = b * (x - phi_c)
    return a * (q + u) ** 2 / (1.0 + u ** 2) - f


def fano_fit(delta_phi, f_p, *, max_starts: int = 16) -> FanoFit:
    """Least-squares fit of the asymmetric-profile parameters (a, q, b, phi_c).

    Multi-start (both signs of the asymmetry parameter and several
    widths); Levenberg-Marquardt steps, convergence on gradient norm
    1e-10 or step 1e-12.  Raises FitConvergenceError with the best
    attempt if no start converges.
    """
    x = np.asarray(delta_phi, dtype=float)
    f = np.asarray(f_p, dtype=float)
    if x.size != f.size or x.size < 8:
        raise ValueError("need at least 8 (delta_phi, F_p) samples")

    span = float(x.max() - x.min())
    if span <= 0:
        raise ValueError("delta_phi samples must span a window")
    i_pk = int(np.argmax(f))
    a0 = max(float(min(f[0], f[-1])), 1e-12 * float(f.max()))
    q2 = max(float(f[i_pk]) / a0 - 1.0, 1.0)
    q0 = math.sqrt(q2)
    phi_c0 = float(x[i_pk])

    starts = []
    for b0 in (4.0 / span, 12.0 / span, 40.0 / span):
        for qs in (q0, -q0, 3.0, -3.0):
            starts.append((a0, qs, b0, phi_c0))
    starts = starts[:max_starts]

    best = None
    best_cost = np.inf
    converged = False
    for p0 in starts:
        try:
            res = least_squares(_fano_residual, p0, args=(x, f), method="lm",
                                xtol=1e-12, gtol=1e-10, ftol=1e-14, max_nfev=4000)
        except Exception:
            continue
        a, q, b, phi_c = res.x
        if a < 0:
            continue
        if b < 0:  # (q, b) -> (-q, -b) is the same curve; canonicalize b > 0
            q, b = -q, -b
        cost = float(np.sqrt(2.0 * res.cost / x.size))
        if cost < best_cost:
            best_cost = cost
            best = FanoFit(float(a), float(q), float(b), float(phi_c), cost)
            converged = converged or res.status > 0
        elif res.status > 0:
            converged = True
    if best is None or not converged:
        raise FitConvergenceError("no fit start converged", best)
    return best


def jaynes_cummings_width(g_tilde: float, kappa: float, delta_c):
    """Single-mode comparison curve 2 |g|^2 kappa / (kappa^2 + Delta_C^2)."""
    if kappa <= 0:
        raise ValueError("cavity linewidth kappa must be positive")
    delta_c = np.asarray(delta_c, dtype=float)
    return 2.0 * abs(g_tilde) ** 2 * kappa / (kappa ** 2 + delta_c ** 2)


# ---------------------------------------------------------------------------
# eigenmode analysis

@dataclass(frozen=True)
class ModeReport:
    """Eigenmodes of the coupled system at fixed angle.

    ``eigenvalues`` are of the detuning-independent matrix G + i/2 per
    hyperfine line (line detuning included): resonance positions are
    -Re, half-widths Im, both in Gamma_0.  ``drive_overlaps`` are the
    squared expansion coefficients of the drive in the eigenbasis,
    normalized by |Omega|^2; modes below the dark threshold are labeled
    "dark".
    """

    eigenvalues: np.ndarray
    drive_overlaps: np.ndarray
    labels: tuple
    condition_number: float
    condition_warning: bool

    @property
    def positions(self):
        return -self.eigenvalues.real

    @property
    def half_widths(self):
        return self.eigenvalues.imag


def mode_analysis(sys: CouplingSystem) -> ModeReport:
    """Eigendecomposition of the collective coupling matrix, per line."""
    lam, vec = np.linalg.eig(sys.gmat)
    order = np.argsort(lam.real)
    lam, vec = lam[order], vec[:, order]
    cond = float(np.linalg.cond(vec))
    # share of the drive carried by each eigenmode: squared expansion
    # coefficients of Omega in the (unit-column) eigenbasis, normalized to
    # sum to one; for a unitary basis the raw coefficients reconstruct
    # |Omega|^2
    coeff = np.linalg.solve(vec, sys.omega)
    total = float(np.sum(np.abs(coeff) ** 2))
    overlaps_one = np.abs(coeff) ** 2 / max(total, 1e-300)

    eigenvalues = []
    overlaps = []
    labels = []
    for d_t, w_t in sys.lines:
        vals = w_t * lam - d_t + 0.5j * sys.gamma0
        widths = 2.0 * vals.imag
        wmax = widths.max()
        for k in range(lam.size):
            eigenvalues.append(vals[k])
            overlaps.append(overlaps_one[k])
            if overlaps_one[k] < DARK_OVERLAP_THRESHOLD:
                labels.append("dark")
            elif widths[k] >= 0.5 * wmax:
                labels.append("broad")
            else:
                labels.append("narrow")
    return ModeReport(
        np.array(eigenvalues), np.array(overlaps), tuple(labels),
        cond, cond > 1e8,
    )
