"""Mollification commutators of the energy balance and their integrals.

Conventions: every "term" is the space-time integral of the named
density against a test function, evaluated on the shrunk domain by
midpoint quadrature.  Derivatives of mollified quantities use 4th-order
centered differences on the grid rather than differentiating the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import VacuumSingularityError
from .grids import (
    Field,
    MollifierKernel,
    align,
    ddt,
    div,
    dspace,
    grad,
    integrate,
    lp_norm,
    mollify,
    restrict,
)
from .pressure import C2Approximant, PressureLaw
from .rates import tv_divergence_estimate
from .synth import ns_stress, stress_apply, stress_contract_grad
from .testfn import TestFunction

ATOL_FACTOR = 1e-13


@dataclass(frozen=True)
class CommutatorReport:
    """Named commutator integrals at one (epsilon, test function) pair."""

    term_values: dict
    epsilon: float
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.term_values.items():
            if not np.isfinite(v):
                raise ValueError(f"term {k} is not finite")

    def total(self, keys=None) -> float:
        keys = keys or self.term_values.keys()
        return float(sum(abs(self.term_values[k]) for k in keys))


# ---------------------------------------------------------------------------
# Pointwise decomposition identity
# ---------------------------------------------------------------------------

def _kernel_offset_iter(kernel: MollifierKernel):
    """Yield (node offsets, weight*cell) for the kernel's nonzero nodes."""
    w = kernel.weights * kernel.cell_volume
    half = kernel.half_widths
    for idx in np.argwhere(w != 0.0):
        yield tuple(int(i - h) for i, h in zip(idx, half)), float(w[tuple(idx)])


def _shift_values(values: np.ndarray, steps, spatial_axes) -> np.ndarray:
    """f(. - y) for node offsets: roll in space, plain index shift in time.

    The time axis is rolled too; callers must restrict to interior time
    slices where the wrap cannot be reached.
    """
    out = values
    for axis, k in enumerate(steps):
        if k:
            out = np.roll(out, k, axis=axis)
    return out


def pointwise_decomposition_check(f: Field, g: Field,
                                  kernel: MollifierKernel) -> float:
    """Max node discrepancy of f_e g_e - (fg)_e against its two-term split.

    The identity is algebraic, so matched quadrature must reproduce it to
    round-off (about 1e-10 at double precision on O(1) fields).
    """
    if f.grid != g.grid:
        raise ValueError("fields must share a grid")
    fe = mollify(f, kernel)
    ge = mollify(g, kernel)
    fge = mollify(f * g, kernel)
    sub = fe.grid
    f0 = restrict(f, sub)
    g0 = restrict(g, sub)
    lhs = fe * ge - fge
    first = (fe - f0) * (ge - g0)

    conv = np.zeros(f.grid.shape + (f.values.shape[-1],))
    spatial_axes = tuple(range(1, len(f.grid.shape)))
    for steps, wgt in _kernel_offset_iter(kernel):
        df = _shift_values(f.values, steps, spatial_axes) - f.values
        dg = _shift_values(g.values, steps, spatial_axes) - g.values
        conv += wgt * df * dg
    rhs = first - restrict(Field(f.grid, conv), sub)
    return float(np.max(np.abs(lhs.values - rhs.values)))


# ---------------------------------------------------------------------------
# Energy-balance commutators
# ---------------------------------------------------------------------------

def _pair(phi_vals: Field, density: Field) -> float:
    """Integrate phi * density over the density's (shrunk) grid."""
    return integrate(phi_vals * density)


def _tensor_divergence(T: np.ndarray, grid, d: int) -> Field:
    """div of a row-major d*d tensor field: out_i = sum_j d_j T_ij."""
    out = np.zeros(grid.shape + (d,))
    for i in range(d):
        for j in range(d):
            comp = Field(grid, T[..., i * d + j])
            out[..., i] += dspace(comp, 1 + j).values[..., 0]
    return Field(grid, out)


def _outer(a: Field, b: Field) -> Field:
    """Row-major outer product a_i b_j as a d*d-component field."""
    d = a.components
    grid, av, bv = align(a, b)
    vals = (av[..., :, None] * bv[..., None, :]).reshape(grid.shape + (d * d,))
    return Field(grid, vals)


def energy_commutators(rho: Field, u: Field, law: PressureLaw,
                       kernel: MollifierKernel, phi: TestFunction,
                       atol: float | None = None) -> CommutatorReport:
    """The four commutator integrals of the mollified energy balance.

    r1: time-derivative commutator of the momentum;
    r2: transport commutator;
    r3: pressure-gradient commutator;
    s:  mass-flux divergence commutator weighted by P'(rho_e),
        with the integrand set to 0 on the numerical vacuum of rho_e.
    """
    if float(rho.values.min()) < 0:
        raise VacuumSingularityError("density has negative samples")
    d = u.components
    if d != rho.grid.spatial_dim:
        raise ValueError("u needs one component per spatial axis")
    if atol is None:
        atol = ATOL_FACTOR * max(float(rho.values.max()), 1.0)

    rho_e = mollify(rho, kernel)
    u_e = mollify(u, kernel)
    m_e = mollify(rho * u, kernel)
    mm_e = mollify(_outer(rho * u, u), kernel)
    p_e = mollify(rho.map(law.p), kernel)

    drift = ddt(rho_e * u_e - m_e)
    r1 = restrict(u_e, drift.grid).dot(drift)

    tens = _outer(m_e, u_e) - mm_e
    r2 = u_e.dot(_tensor_divergence(tens.values, tens.grid, d))

    p_comm = rho_e.map(law.p) - p_e
    r3 = u_e.dot(grad(p_comm))

    flux_div = div(rho_e * u_e - m_e)
    dP = law.dpotential(np.maximum(rho_e.values, 0.0))
    s_density = np.where(rho_e.values > atol, flux_div.values * dP, 0.0)
    s = Field(flux_div.grid, s_density)

    grids = {"r1": r1, "r2": r2, "r3": r3, "s": s}
    values = {}
    for name, dens in grids.items():
        values[name] = _pair(restrict(phi.phi(rho.grid), dens.grid), dens)
    return CommutatorReport(values, kernel.epsilon,
                            {"gamma": law.gamma, "kappa": law.kappa,
                             "atol": atol, "phi": phi.kind})


def mollified_mass_residual(rho: Field, u: Field,
                            kernel: MollifierKernel) -> float:
    """L1 norm of d_t rho_e + div (rho u)_e; zero for exact solutions up to O(h^2)."""
    rho_e = mollify(rho, kernel)
    m_e = mollify(rho * u, kernel)
    r = ddt(rho_e) + restrict(div(m_e), ddt(rho_e).grid)
    return lp_norm(r, 1)


# ---------------------------------------------------------------------------
# Localized pressure terms with the vacuum split
# ---------------------------------------------------------------------------

def R_S_terms(rho: Field, u: Field, law: PressureLaw,
              kernel: MollifierKernel, phi: TestFunction, beta: float,
              atol: float | None = None) -> CommutatorReport:
    """Localized pressure-gradient term R and mass-flux term S.

    R is evaluated in integrated-by-parts form.  S is reported whole and
    split across the vacuum set (rho_e numerically zero), the thin band
    (0 < rho_e < eps^beta) and its complement; the band/complement split
    applies to the part of S carrying the gradient of P'(rho_e).  The
    product (rho_e - rho)(u_e - u) leading form of the mass-flux defect
    and its gap from the full defect are reported alongside.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    from .vacuum import build_vacuum_sets
    sets = build_vacuum_sets(rho, kernel, beta, atol)
    atol = sets.atol

    rho_e = mollify(rho, kernel)
    u_e = mollify(u, kernel)
    m_e = mollify(rho * u, kernel)
    sub = rho_e.grid
    phi_f = restrict(phi.phi(rho.grid), sub)
    gphi = restrict(phi.grad(rho.grid), sub)

    # R = int grad(p(rho_e) - p(rho)_e) . phi u_e, by parts:
    p_comm = rho_e.map(law.p) - mollify(rho.map(law.p), kernel)
    R = -(integrate(p_comm * gphi.dot(u_e))
          + integrate(p_comm * phi_f * div(u_e)))

    # S in divergence form, vacuum integrand zeroed
    defect = rho_e * u_e - m_e
    dP = law.dpotential(np.maximum(rho_e.values, 0.0))
    s_dens = np.where(sets.A[..., None], 0.0, div(defect).values * dP)
    S_total = integrate(phi_f * Field(sub, s_dens))

    # by-parts split: grad-phi piece plus grad-P' piece over B and C
    S_gradphi = integrate(Field(sub, np.where(sets.A[..., None], 0.0,
                                              gphi.dot(defect).values * dP)))
    gradP = _grad_dpotential(rho_e, law, sets.A)
    inner = defect.dot(gradP) * phi_f
    S_band = integrate(inner, mask=sets.B)
    S_bulk = integrate(inner, mask=sets.C)

    # leading product form of the defect
    lead = (rho_e - restrict(rho, sub)) * (u_e - restrict(u, sub))
    inner_lead = lead.dot(gradP) * phi_f
    S_band_lead = integrate(inner_lead, mask=sets.B)

    values = {
        "R": R,
        "S": S_total,
        "S_gradphi": S_gradphi,
        "S_A": 0.0,
        "S_B": S_band,
        "S_C": S_bulk,
        "S_B_leading": S_band_lead,
        "S_B_gap": S_band - S_band_lead,
    }
    return CommutatorReport(values, kernel.epsilon,
                            {"gamma": law.gamma, "beta": beta, "atol": atol,
                             "measure_A": sets.measure("A"),
                             "measure_B": sets.measure("B"),
                             "measure_C": sets.measure("C"),
                             "phi": phi.kind})


def _grad_dpotential(rho_e: Field, law: PressureLaw, vacuum_mask) -> Field:
    """grad P'(rho_e) = (p'(rho_e)/rho_e) grad rho_e, zeroed on the vacuum set."""
    g = grad(rho_e)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = law.dp(np.maximum(rho_e.values, 0.0)) / rho_e.values
    w = np.where(vacuum_mask[..., None], 0.0, w)
    w = np.where(np.isfinite(w), w, 0.0)
    return Field(g.grid, g.values * w)


# ---------------------------------------------------------------------------
# Divergence-measure pressure term
# ---------------------------------------------------------------------------

def divmeasure_pressure_term(rho: Field, u: Field, law: PressureLaw,
                             approx: C2Approximant, kernel: MollifierKernel,
                             phi: TestFunction, eps_ladder=None) -> dict:
    """The two integrals controlling the C2-approximation defect.

    div-term:  int phi [(p_delta - p)(rho)]_e div u_e, bounded by
               sup|phi| * delta * ||div u||_TV-estimate;
    grad-term: int grad(phi) . u_e [(p_delta - p)(rho)]_e, bounded by
               C ||phi||_C1 * delta * ||u||_L3.
    """
    gap_field = Field(rho.grid, approx.p(rho.values) - law.p(rho.values))
    gap_e = mollify(gap_field, kernel)
    u_e = mollify(u, kernel)
    sub = gap_e.grid
    phi_f = restrict(phi.phi(rho.grid), sub)
    gphi = restrict(phi.grad(rho.grid), sub)

    div_term = integrate(phi_f * gap_e * div(u_e))
    grad_term = integrate(gap_e * gphi.dot(u_e))

    delta = float(approx.delta)
    realized_gap = float(np.max(np.abs(gap_field.values)))
    if eps_ladder is None:
        tv = lp_norm(div(mollify(u, kernel)), 1)
    else:
        tv = tv_divergence_estimate(u, eps_ladder)["sup"]
    u3 = lp_norm(u, 3)
    sup_phi = float(np.max(np.abs(phi_f.values)))
    sup_gphi = float(np.max(gphi.magnitude())) + sup_phi
    return {
        "div_term": div_term,
        "grad_term": grad_term,
        "delta": delta,
        "realized_gap": realized_gap,
        "div_bound": sup_phi * delta * tv,
        "grad_bound": sup_gphi * delta * u3,
        "div_holds": abs(div_term) <= sup_phi * delta * tv * (1 + 1e-9),
        "grad_holds": abs(grad_term) <= sup_gphi * delta * u3 * (1 + 1e-9),
    }


# ---------------------------------------------------------------------------
# Degenerate viscosity commutator
# ---------------------------------------------------------------------------

def degenerate_viscosity_commutator(rho: Field, u: Field, mu: float, nu: float,
                                    kernel: MollifierKernel,
                                    phi: TestFunction) -> float:
    """r_d for the density-weighted stress, in integrated-by-parts form.

    M = rho_e S(grad u_e) - (rho S(grad u))_e;
    r_d = - int (M u_e).grad(phi) - int M : grad(u_e) phi.
    """
    if mu <= 0 or nu < 0:
        raise ValueError("mu must be positive, nu non-negative")
    rho_e = mollify(rho, kernel)
    u_e = mollify(u, kernel)
    S_e = ns_stress(u_e, mu, nu)
    rhoS = Field(u.grid, rho.values * ns_stress(u, mu, nu).values)
    rhoS_e = mollify(rhoS, kernel)
    M = Field(rho_e.grid, rho_e.values * S_e.values) - rhoS_e

    sub = M.grid
    phi_f = restrict(phi.phi(rho.grid), sub)
    gphi = restrict(phi.grad(rho.grid), sub)

    first = integrate(stress_apply(M, u_e).dot(gphi))
    second = integrate(phi_f * stress_contract_grad(M, u_e))
    return float(-(first + second))
