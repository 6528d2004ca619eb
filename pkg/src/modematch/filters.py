"""Spectral-temporal filter kernels, their mode content, and filter search.

A filter built from a spectral amplitude mask h(w) followed by a time
shutter |f(t)|^2 acts on broadband light through the correlation kernel

    kappa(w, w') = h(w) h(w') int |f(t)|^2 exp(i (w - w') t) dt

whose eigenvalues chi_j in [0, 1] are per-mode pass probabilities and
whose eigenmodes phi_j are the filter's principal spectral modes. For a
Gaussian shutter of intensity FWHM T the time integral is Gaussian in
(w - w') and the kernel is evaluated in closed form.

The filter search looks for a practical (super-Gaussian mask + Gaussian
shutter) filter whose fundamental mode phi_0 reproduces a target mode,
so that the filter passes one Schmidt mode of the pair source and blocks
the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _sopt

from .errors import DomainError, ParseError, PhysicalityError
from .numerics import TWO_PI, decompose_kernel, integrate, mode_overlap
from .sfwm import sfwm_modes
from .units import CODATA

LN2 = math.log(2.0)

# Eigenvalue clamps: tiny excursions outside [0, 1] are quadrature
# roundoff and are snapped; anything larger is a real physicality bug.
CHI_NEGATIVE_TOL = 1e-10
CHI_ABOVE_ONE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Amplitude transmission mask sampled on a band grid, 0 <= h <= 1."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise DomainError("profile samples do not match the grid")
        if np.any(vals < 0) or np.any(vals > 1.0 + 1e-9):
            raise DomainError("amplitude transmission must lie in [0, 1]")
        object.__setattr__(self, "values", np.clip(vals, 0.0, 1.0))


def super_gaussian(grid, width, order):
    """Flat-top mask h(w) = exp(-(w/width)^order / 2), even order.

    order 2 is a plain Gaussian; higher even orders square off the top
    and steepen the skirts at fixed width.
    """
    if width <= 0:
        raise DomainError("profile width must be positive")
    if order < 2 or order % 2 != 0:
        raise DomainError("profile order must be a positive even integer")
    if order > 20:
        raise DomainError("profile order above 20 is not supported")
    values = np.exp(-0.5 * (grid.nodes / width) ** order)
    return SpectralProfile(grid=grid, values=values)


def kappa_gaussian_shutter(profile, shutter_t):
    """Filter correlation kernel for a Gaussian shutter, closed form.

    shutter_t is the intensity FWHM of the shutter in the grid's time
    unit (inverse of the grid frequency unit).
    """
    if shutter_t <= 0:
        raise DomainError("shutter FWHM must be positive")
    h = profile.values
    d = profile.grid.nodes[:, None] - profile.grid.nodes[None, :]
    amp = (shutter_t / 2.0) * math.sqrt(math.pi / LN2)
    return amp * h[:, None] * h[None, :] * np.exp(-d**2 * shutter_t**2 / (16.0 * LN2))


def kappa_general(profile, time_nodes, time_weights, intensity):
    """Filter kernel for an arbitrary sampled shutter intensity |f(t)|^2.

    The time integral is evaluated by quadrature of cos((w - w') t); the
    result is real and symmetric for a real intensity. Rejects time
    grids too coarse for the band (Nyquist) or windows that truncate the
    shutter.
    """
    t = np.asarray(time_nodes, dtype=float)
    wt = np.asarray(time_weights, dtype=float)
    f2 = np.asarray(intensity, dtype=float)
    if t.ndim != 1 or t.shape != wt.shape or t.shape != f2.shape:
        raise DomainError("time nodes, weights and intensity must match")
    if np.any(f2 < 0):
        raise DomainError("shutter intensity must be nonnegative")
    peak = f2.max()
    if peak <= 0:
        raise DomainError("shutter intensity is identically zero")
    if f2[0] > 1e-6 * peak or f2[-1] > 1e-6 * peak:
        raise DomainError("time window truncates the shutter")
    dmax = profile.grid.hi - profile.grid.lo
    dt = np.max(np.diff(t))
    if dmax * dt > math.pi:
        raise DomainError("time grid too coarse for the band (Nyquist)")
    d = profile.grid.nodes[:, None] - profile.grid.nodes[None, :]
    kern = np.tensordot(np.cos(d[..., None] * t), wt * f2, axes=([2], [0]))
    h = profile.values
    return h[:, None] * h[None, :] * kern


def shutter_trace(profile, shutter_t):
    """Closed-form mode-weight sum (T / 4 pi) sqrt(pi/ln2) int h^2.

    Equals the eigenvalue sum of the Gaussian-shutter kernel; useful as
    an independent check on the decomposition.
    """
    amp = (shutter_t / 2.0) * math.sqrt(math.pi / LN2)
    return amp * integrate(profile.values**2, profile.grid) / TWO_PI


@dataclass(frozen=True, eq=False)
class FilterModes:
    """Pass probabilities and principal modes of a filter kernel.

    chis are sorted descending in [0, 1]; modes[:, j] is the matching
    eigenmode, orthonormal under (1/2pi) int phi^2.
    """

    chis: np.ndarray
    modes: np.ndarray
    grid: Grid

    @property
    def chi0(self):
        return float(self.chis[0])

    @property
    def residual_sum(self):
        """Total pass probability left in the non-fundamental modes."""
        return float(np.sum(self.chis[1:]))

    def significant(self, rel_tol=1e-6):
        if self.chi0 == 0.0:
            return np.array([], dtype=int)
        return np.nonzero(self.chis > rel_tol * self.chi0)[0]


def filter_modes(kernel, grid):
    """Decompose a filter kernel and validate its pass probabilities.

    Eigenvalues below -1e-10 or above 1 + 1e-6 indicate a non-physical
    kernel and raise; smaller excursions are snapped into [0, 1].
    """
    dec = decompose_kernel(kernel, grid)
    lam = dec.eigenvalues.copy()
    if np.any(lam < -CHI_NEGATIVE_TOL):
        raise PhysicalityError("filter kernel has negative pass probability %.3e" % lam.min())
    if np.any(lam > 1.0 + CHI_ABOVE_ONE_TOL):
        raise PhysicalityError("filter kernel has pass probability %.6f > 1" % lam.max())
    lam = np.clip(lam, 0.0, 1.0)
    order = np.argsort(-lam, kind="stable")
    return FilterModes(chis=lam[order], modes=dec.modes[:, order], grid=grid)


def practical_filter(grid, order, width, shutter_t):
    """Modes of a super-Gaussian mask followed by a Gaussian shutter."""
    profile = super_gaussian(grid, width, order)
    return filter_modes(kappa_gaussian_shutter(profile, shutter_t), grid)


def open_filter(grid):
    """No filtering: every mode passes.

    The identity kernel 2 pi delta(w - w') discretizes to one unit-chi
    spike mode per grid node, normalized like any other mode.
    """
    n = grid.n
    modes = np.diag(np.sqrt(TWO_PI / grid.weights))
    return FilterModes(chis=np.ones(n), modes=modes, grid=grid)


def ideal_matched_filter(decomposition):
    """Lossless single-mode filter passing the fundamental pair mode."""
    psi0 = decomposition.modes[:, 0]
    norm = mode_overlap(psi0, psi0, decomposition.grid)
    if abs(norm - 1.0) > 1e-8:
        raise DomainError("fundamental mode is not normalized")
    return FilterModes(chis=np.ones(1), modes=psi0[:, None].copy(), grid=decomposition.grid)


@dataclass(frozen=True)
class SearchSpace:
    """Box and objective for the practical-filter search.

    The mask width is always searched; the shutter FWHM is searched only
    when both t_lo and t_hi are given, otherwise it stays at shutter_t.
    Objectives:
      "mode-match": maximize |overlap(phi_0, psi_0)|. This is the
          single-mode design goal and the default. It has an interior
          optimum in width.
      "visibility": maximize the two-photon visibility at the configured
          operating point. Note that accidentals fall faster than
          coincidences as the filter narrows, so this objective rides
          the lower width bound rather than finding a matched filter.
    """

    orders: tuple = (2, 4, 6, 8, 10)
    width_lo: float = 0.5
    width_hi: float = 10.0
    shutter_t: float = 0.35
    t_lo: float = None
    t_hi: float = None
    objective: str = "mode-match"
    max_iter: int = 200

    def __post_init__(self):
        if self.width_lo <= 0 or self.width_hi < self.width_lo:
            raise DomainError("invalid width box")
        if self.objective not in ("mode-match", "visibility"):
            raise DomainError("unknown objective %r" % self.objective)
        if (self.t_lo is None) != (self.t_hi is None):
            raise DomainError("shutter search needs both t_lo and t_hi")
        if self.t_lo is not None and (self.t_lo <= 0 or self.t_hi < self.t_lo):
            raise DomainError("invalid shutter box")
        if self.shutter_t <= 0:
            raise DomainError("shutter FWHM must be positive")
        if not self.orders or any(o < 2 or o % 2 for o in self.orders):
            raise DomainError("orders must be positive even integers")


@dataclass(frozen=True, eq=False)
class FilterSearchResult:
    order: int
    width: float
    shutter_t: float
    objective: str
    objective_value: float
    achieved_v: float
    overlap: float
    filter: FilterModes
    profile: SpectralProfile
    converged: bool
    evaluations: int

    @property
    def chi0(self):
        return self.filter.chi0

    @property
    def residual_sum(self):
        return self.filter.residual_sum

    @property
    def collection_fraction(self):
        """Fraction of produced pairs collected with this filter on both arms."""
        return self.filter.chi0 ** 2


def optimize_filter(params, raman, search=None, n_points=201):
    """Search the practical-filter family for the best single-mode filter.

    Runs Nelder-Mead per mask order from a fixed seed simplex (capped
    iterations, one restart from the best point) and keeps the best
    order. Deterministic for fixed inputs.
    """
    from .visibility import evaluate_operating_point

    if search is None:
        search = SearchSpace()
    decomp = sfwm_modes(params, raman, n_points=n_points)
    grid = decomp.grid
    psi0 = decomp.modes[:, 0]
    search_t = search.t_lo is not None

    def build(order, x):
        width = float(np.clip(x[0], search.width_lo, search.width_hi))
        if search_t:
            t = float(np.clip(x[1], search.t_lo, search.t_hi))
        else:
            t = search.shutter_t
        return width, t, practical_filter(grid, order, width, t)

    def objective(x, order):
        _, _, fm = build(order, x)
        if search.objective == "mode-match":
            return -abs(mode_overlap(fm.modes[:, 0], psi0, grid))
        report = evaluate_operating_point(params, raman, fm, fm)
        return -report.visibility

    best = None
    for order in search.orders:
        x0 = [0.5 * (search.width_lo + search.width_hi)]
        steps = [max(1e-3, (search.width_hi - search.width_lo) / 5.0)]
        if search_t:
            x0.append(0.5 * (search.t_lo + search.t_hi))
            steps.append(max(1e-3, (search.t_hi - search.t_lo) / 5.0))
        x0 = np.array(x0)
        simplex = np.vstack([x0] + [x0 + s * e for s, e in zip(steps, np.eye(len(x0)))])
        res = _sopt.minimize(
            objective, x0, args=(order,), method="Nelder-Mead",
            options=dict(initial_simplex=simplex, maxiter=search.max_iter,
                         xatol=1e-6, fatol=1e-12))
        simplex2 = np.vstack([res.x] + [res.x + 0.1 * s * e
                                        for s, e in zip(steps, np.eye(len(x0)))])
        res2 = _sopt.minimize(
            objective, res.x, args=(order,), method="Nelder-Mead",
            options=dict(initial_simplex=simplex2, maxiter=search.max_iter,
                         xatol=1e-6, fatol=1e-12))
        pick = res2 if res2.fun <= res.fun else res
        cand = (float(pick.fun), order, pick.x.copy(),
                bool(pick.success), int(res.nfev + res2.nfev))
        if best is None or cand[0] < best[0]:
            best = cand
    fun, order, x, converged, evals = best
    width, shutter_t, fm = build(order, x)
    profile = super_gaussian(grid, width, order)
    report = evaluate_operating_point(params, raman, fm, fm)
    overlap = abs(mode_overlap(fm.modes[:, 0], psi0, grid))
    return FilterSearchResult(
        order=order, width=width, shutter_t=shutter_t,
        objective=search.objective, objective_value=-fun,
        achieved_v=report.visibility, overlap=overlap,
        filter=fm, profile=profile, converged=converged, evaluations=evals)


ATTENUATION_CAP_DB = 120.0
EXPORT_MAX_ROWS = 120


def export_filter_profile(path, params, order, width, shutter_t,
                          max_rows=EXPORT_MAX_ROWS, header_items=()):
    """Write the mask as wavelength / attenuation rows a pulse shaper takes.

    Wavelengths are absolute, on the blue (anti-Stokes) side of the
    pump; the mask is symmetric between bands. Power attenuation is
    capped at 120 dB. The shutter FWHM is recorded in the header in ps.
    """
    if max_rows < 2:
        raise DomainError("need at least two export rows")
    x = np.linspace(-params.b_sigma / 2.0, params.b_sigma / 2.0, int(max_rows))
    h = np.exp(-0.5 * (x / width) ** order)
    omega_abs = params.pump_omega + (params.b0_sigma + x) * params.sigma
    wavelength_nm = 2.0 * math.pi * CODATA.c / omega_abs * 1e9
    att_db = np.where(h < 10 ** (-ATTENUATION_CAP_DB / 20.0),
                      ATTENUATION_CAP_DB, -20.0 * np.log10(np.maximum(h, 1e-300)))
    att_db = np.minimum(att_db, ATTENUATION_CAP_DB)
    shutter_ps = shutter_t / params.sigma * 1e12
    with open(path, "w", encoding="ascii", newline="") as fh:
        for key, value in header_items:
            fh.write("# %s = %s\n" % (key, value))
        fh.write("# shutter_fwhm_ps = %.6e\n" % shutter_ps)
        fh.write("# profile_order = %d\n" % order)
        fh.write("# profile_width_sigma = %.6e\n" % width)
        fh.write("wavelength_nm,attenuation_db\n")
        for lam, db in zip(wavelength_nm, att_db):
            fh.write("%.6e,%.6e\n" % (lam, db))


def load_filter_profile(path):
    """Read back an exported mask; returns (wavelengths_nm, h, meta).

    meta holds the parsed '# key = value' header entries as floats when
    they parse, else strings. Raises ParseError with a line number.
    """
    meta = {}
    wavelengths = []
    h = []
    header_seen = False
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    value = value.strip()
                    try:
                        meta[key.strip()] = float(value)
                    except ValueError:
                        meta[key.strip()] = value
                continue
            if not header_seen:
                cols = [c.strip() for c in line.split(",")]
                if cols != ["wavelength_nm", "attenuation_db"]:
                    raise ParseError("expected header wavelength_nm,attenuation_db", line=lineno)
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError("expected two comma-separated fields", line=lineno)
            try:
                lam = float(parts[0])
                db = float(parts[1])
            except ValueError:
                raise ParseError("non-numeric field %r" % line, line=lineno)
            wavelengths.append(lam)
            h.append(10.0 ** (-db / 20.0))
    if not wavelengths:
        raise ParseError("mask table has no data rows", line=1)
    return np.array(wavelengths), np.array(h), meta
