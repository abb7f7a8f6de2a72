"""Generators of test inputs.

Lacunary cosine fields with a prescribed shift-regularity exponent,
vacuum-touching density profiles, exact smooth and discontinuous 1D flow
solutions, and the viscous stress assembly.  Everything is deterministic
under a recorded seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import AdmissibilityError, BlowupTimeError, ResolutionError
from .grids import Field, GridSpec, constant_field, div, dspace, from_function
from .pressure import PressureLaw


# ---------------------------------------------------------------------------
# Lacunary cosine fields with tunable regularity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeierstrassSpec:
    """Sum of dyadic cosines 2^(-alpha j) cos(2 pi k_j.(x,t) + theta_j)."""

    alpha: float
    levels: int = 10
    base_frequency: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.levels < 8:
            raise ValueError("need at least 8 levels")
        if self.base_frequency < 1:
            raise ValueError("base frequency must be a positive integer")


def weierstrass_field(spec: WeierstrassSpec, grid: GridSpec,
                      floor: float = 0.0) -> Field:
    """Sample the lacunary sum, then shift so the minimum equals ``floor``.

    Spatial wavenumbers are integers (periodicity on the torus); the
    direction of each level is randomized from the seed to avoid
    axis-aligned artifacts in shift scans.
    """
    rng = np.random.default_rng(spec.seed)
    d = grid.spatial_dim
    coords = grid.meshgrid()
    t = coords[0] / grid.extents[0]
    xs = [coords[1 + a] / grid.extents[1 + a] for a in range(d)]

    total = np.zeros(grid.shape)
    for j in range(spec.levels):
        mag = spec.base_frequency * 2 ** j
        for n in grid.shape:
            if mag >= n // 2:
                raise ResolutionError(
                    f"level {j} frequency {mag} reaches Nyquist of axis size {n}"
                )
        theta = rng.uniform(0.0, 2.0 * np.pi)
        if d == 1:
            sign = 1 if rng.random() < 0.5 else -1
            ks = [sign * mag]
        else:
            angle = rng.uniform(0.0, 2.0 * np.pi)
            k1 = int(round(mag * np.cos(angle)))
            k2 = int(round(mag * np.sin(angle)))
            if k1 == 0 and k2 == 0:
                k1 = mag
            ks = [k1, k2]
        kt = mag * rng.uniform(-1.0, 1.0)
        phase = kt * t
        for k, x in zip(ks, xs):
            phase = phase + k * x
        total += 2.0 ** (-spec.alpha * j) * np.cos(2.0 * np.pi * phase + theta)

    total = total - total.min() + floor
    return Field(grid, total)


# ---------------------------------------------------------------------------
# Vacuum-touching density profiles
# ---------------------------------------------------------------------------

def vacuum_profile(kind: str, m: float, grid: GridSpec,
                   x0: float = 0.5) -> Field:
    """1D-style density with a controlled descent rate into vacuum.

    ``power``: rho = |x - x0|^m near an isolated zero (periodic distance);
    ``sine-power``: rho = |sin(pi x / L)|^m with zeros at x = 0 mod L.
    Both are constant in time.
    """
    if m <= 0:
        raise ValueError("descent exponent m must be positive")
    L = grid.extents[1]

    if kind == "power":
        def fn(t, x, *rest):
            dist = np.abs((x - x0 + L / 2) % L - L / 2)
            return dist ** m
    elif kind == "sine-power":
        def fn(t, x, *rest):
            return np.abs(np.sin(np.pi * x / L)) ** m
    else:
        raise ValueError("kind must be 'power' or 'sine-power'")
    return from_function(grid, fn)


def descent_verdict(m: float, q: float) -> dict:
    """Whether 1/rho is L^q-integrable near an isolated zero of |x|^m."""
    return {"m": m, "q": q, "reciprocal_in_Lq": m * q < 1.0}


# ---------------------------------------------------------------------------
# Exact solutions
# ---------------------------------------------------------------------------

def constant_state(rho0: float, u0, grid: GridSpec) -> tuple[Field, Field]:
    if rho0 < 0:
        raise ValueError("density must be non-negative")
    d = grid.spatial_dim
    u0 = (float(u0),) if np.isscalar(u0) else tuple(float(v) for v in u0)
    if len(u0) != d:
        raise ValueError("velocity needs one component per spatial axis")
    return constant_field(grid, rho0), constant_field(grid, u0, components=d)


def simple_wave(law: PressureLaw, amplitude: float, grid: GridSpec,
                rho0: float = 1.0, u0: float = 0.0) -> tuple[Field, Field]:
    """Right-moving 1D simple wave: u = u0 + 2(c(rho) - c(rho0))/(gamma-1).

    The initial density rho0 + amplitude*sin(2 pi x / L) is transported
    along straight characteristics with speed u + c; the construction is
    valid strictly before the characteristic crossing time, which is
    computed and enforced.
    """
    if grid.spatial_dim != 1:
        raise ValueError("simple waves are one-dimensional")
    if amplitude < 0 or amplitude >= rho0:
        raise ValueError("amplitude must lie in [0, rho0)")
    L = grid.extents[1]
    g = law.gamma

    def c(r):
        return law.sound_speed(r)

    def u_of_rho(r):
        return u0 + 2.0 * (c(r) - c(rho0)) / (g - 1.0)

    def rho_init(x0):
        return rho0 + amplitude * np.sin(2.0 * np.pi * x0 / L)

    def lam(x0):
        r = rho_init(x0)
        return u_of_rho(r) + c(r)

    if amplitude > 0:
        # blow-up time = 1 / max(-dlambda/dx0) over a dense sample
        xs = np.linspace(0.0, L, 4096, endpoint=False)
        dx = L / 4096
        dlam = (lam((xs + dx) % L) - lam((xs - dx) % L)) / (2 * dx)
        steep = -dlam.min()
        if steep > 0:
            t_star = 1.0 / steep
            if grid.t_end >= t_star:
                raise BlowupTimeError(
                    f"final time {grid.t_end:.4g} >= characteristic crossing "
                    f"time {t_star:.4g}"
                )

    tt, xx = grid.meshgrid()
    x0 = xx.copy()
    # Newton iteration for x0 + lambda(x0) t = x (all nodes at once)
    for _ in range(60):
        r = rho_init(x0)
        f = x0 + lam(x0) * tt - xx
        dl = 2.0 * np.pi * amplitude / L * np.cos(2.0 * np.pi * x0 / L)
        # d lambda / d x0 = (u'(rho)+c'(rho)) * rho_init'(x0)
        dspeed = (np.sqrt(law.dp(r)) / r + 0.5 * law.kappa * law.gamma
                  * (law.gamma - 1) * r ** (law.gamma - 2)
                  / np.sqrt(law.dp(r)))
        jac = 1.0 + dspeed * dl * tt
        step = f / jac
        x0 = x0 - step
        if np.max(np.abs(step)) < 1e-14 * L:
            break
    rho = rho_init(x0)
    return Field(grid, rho), Field(grid, u_of_rho(rho))


# ---------------------------------------------------------------------------
# Riemann problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiemannSpec:
    rho_l: float
    u_l: float
    rho_r: float
    u_r: float
    law: PressureLaw

    def __post_init__(self):
        if self.rho_l <= 0 or self.rho_r <= 0:
            raise ValueError("Riemann states need positive density")


def _wave_fn(law: PressureLaw, rho_m: float, rho_s: float) -> float:
    """Velocity drop across one wave connecting rho_s to rho_m.

    Rarefaction (rho_m < rho_s): integral of c/rho in closed form.
    Shock (rho_m > rho_s): Rankine-Hugoniot velocity jump.
    """
    g = law.gamma
    if rho_m <= rho_s:
        return 2.0 * (law.sound_speed(rho_m) - law.sound_speed(rho_s)) / (g - 1.0)
    dp = law.p(rho_m) - law.p(rho_s)
    return float(np.sqrt(dp * (rho_m - rho_s) / (rho_m * rho_s)))


def solve_middle_state(spec: RiemannSpec) -> float:
    """Density of the intermediate state between the two waves."""
    law = spec.law

    def eq(rho_m):
        return (spec.u_l - _wave_fn(law, rho_m, spec.rho_l)
                - (spec.u_r + _wave_fn(law, rho_m, spec.rho_r)))

    lo = 1e-10
    hi = max(spec.rho_l, spec.rho_r)
    if eq(lo) < 0:
        raise AdmissibilityError("states open a vacuum region")
    while eq(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise AdmissibilityError("no intermediate state found")
    return float(optimize.brentq(eq, lo, hi, xtol=1e-14, rtol=8.9e-16))


def shock_states(law: PressureLaw, rho_l: float, rho_r: float,
                 family: int, u_l: float = 0.0) -> RiemannSpec:
    """Rankine-Hugoniot-matched states carrying a single admissible shock.

    Family 1 (speed u - c) requires the density to increase left to
    right; family 2 (speed u + c) the reverse.  The Lax inequalities are
    verified on the constructed states.
    """
    if family not in (1, 2):
        raise ValueError("family must be 1 or 2")
    if family == 1 and rho_l >= rho_r:
        raise AdmissibilityError("a 1-shock needs rho_l < rho_r")
    if family == 2 and rho_l <= rho_r:
        raise AdmissibilityError("a 2-shock needs rho_l > rho_r")
    dp = law.p(rho_l) - law.p(rho_r)
    jump = float(np.sqrt(dp * (rho_l - rho_r) / (rho_l * rho_r)))
    # mass flux m = rho(u - sigma): positive for family 1, negative for 2
    u_r = u_l - jump if family == 1 else u_l + jump
    spec = RiemannSpec(rho_l, u_l, rho_r, u_r, law)
    sigma = (rho_l * u_l - rho_r * u_r) / (rho_l - rho_r)
    cl, cr = law.sound_speed(rho_l), law.sound_speed(rho_r)
    if family == 1:
        lax = u_l - cl > sigma > u_r - cr
    else:
        lax = u_l + cl > sigma > u_r + cr
    if not lax:
        raise AdmissibilityError("constructed states violate the Lax conditions")
    return spec


def shock_dissipation(law: PressureLaw, rho_l, u_l, rho_r, u_r) -> float:
    """Closed-form energy dissipation rate across one shock.

    With the bracket [g] = g_left - g_right, D = sigma [E] - [F_E]; the
    value is strictly negative for admissible shocks.
    """
    if abs(rho_l - rho_r) < 1e-14:
        return 0.0
    sigma = (rho_l * u_l - rho_r * u_r) / (rho_l - rho_r)

    def E(r, u):
        return 0.5 * r * u ** 2 + law.potential(r)

    def F(r, u):
        return (0.5 * r * u ** 2 + law.p(r) + law.potential(r)) * u

    return float(sigma * (E(rho_l, u_l) - E(rho_r, u_r))
                 - (F(rho_l, u_l) - F(rho_r, u_r)))


def riemann_solution(spec: RiemannSpec, grid: GridSpec,
                     x_center: float | None = None
                     ) -> tuple[Field, Field, float]:
    """Exact self-similar solution sampled on the grid, plus total dissipation.

    The initial discontinuity sits at ``x_center`` (default mid-domain so
    the waves stay clear of the periodic re-entry over the grid's time
    span).  Shocks are sampled sharply: each node takes the one-sided
    state of its cell midpoint.
    """
    if grid.spatial_dim != 1:
        raise ValueError("Riemann sampling is one-dimensional")
    law = spec.law
    g = law.gamma
    L = grid.extents[1]
    xc = 0.5 * L if x_center is None else float(x_center)

    rho_m = solve_middle_state(spec)
    u_m = spec.u_l - _wave_fn(law, rho_m, spec.rho_l)
    dissipation = 0.0

    tt, xx = grid.meshgrid()
    xi = (xx - xc) / tt
    rho = np.empty(grid.shape)
    u = np.empty(grid.shape)

    # family-1 wave (left)
    cl = float(law.sound_speed(spec.rho_l))
    cm = float(law.sound_speed(rho_m))
    if rho_m > spec.rho_l:        # 1-shock
        s1_lo = s1_hi = (spec.rho_l * spec.u_l - rho_m * u_m) / (spec.rho_l - rho_m)
        dissipation += shock_dissipation(law, spec.rho_l, spec.u_l, rho_m, u_m)
    else:                          # 1-rarefaction fan
        s1_lo, s1_hi = spec.u_l - cl, u_m - cm
    # family-2 wave (right)
    cr = float(law.sound_speed(spec.rho_r))
    if rho_m > spec.rho_r:        # 2-shock
        s2_lo = s2_hi = (rho_m * u_m - spec.rho_r * spec.u_r) / (rho_m - spec.rho_r)
        dissipation += shock_dissipation(law, rho_m, u_m, spec.rho_r, spec.u_r)
    else:
        s2_lo, s2_hi = u_m + cm, spec.u_r + cr

    left = xi < s1_lo
    fan1 = (xi >= s1_lo) & (xi < s1_hi)
    mid = (xi >= s1_hi) & (xi <= s2_lo)
    fan2 = (xi > s2_lo) & (xi <= s2_hi)
    right = xi > s2_hi

    rho[left], u[left] = spec.rho_l, spec.u_l
    rho[mid], u[mid] = rho_m, u_m
    rho[right], u[right] = spec.rho_r, spec.u_r
    if fan1.any():
        c_fan = (g - 1.0) / (g + 1.0) * (spec.u_l + 2.0 * cl / (g - 1.0) - xi[fan1])
        rho[fan1] = (c_fan ** 2 / (law.kappa * g)) ** (1.0 / (g - 1.0))
        u[fan1] = xi[fan1] + c_fan
    if fan2.any():
        c_fan = (g - 1.0) / (g + 1.0) * (xi[fan2] - spec.u_r + 2.0 * cr / (g - 1.0))
        rho[fan2] = (c_fan ** 2 / (law.kappa * g)) ** (1.0 / (g - 1.0))
        u[fan2] = xi[fan2] - c_fan

    return Field(grid, rho), Field(grid, u), float(dissipation)


# ---------------------------------------------------------------------------
# Viscous stress
# ---------------------------------------------------------------------------

def ns_stress(u: Field, mu: float, nu: float, order: int = 4) -> Field:
    """S = mu (grad u + grad u^T - (2/3) div u I) + nu div u I.

    Returned as a d*d-component field, row-major (S_ij at index i*d + j);
    symmetric by construction.
    """
    if mu < 0 or nu < 0:
        raise ValueError("viscosities must be non-negative")
    d = u.grid.spatial_dim
    if u.components != d:
        raise ValueError("u needs one component per spatial axis")
    gradu = np.empty(u.grid.shape + (d, d))
    for i in range(d):
        for j in range(d):
            gradu[..., i, j] = dspace(u.component(i), 1 + j, order).values[..., 0]
    divu = np.trace(gradu, axis1=-2, axis2=-1)
    eye = np.eye(d)
    S = mu * (gradu + np.swapaxes(gradu, -1, -2)
              - (2.0 / 3.0) * divu[..., None, None] * eye)
    S = S + nu * divu[..., None, None] * eye
    return Field(u.grid, S.reshape(u.grid.shape + (d * d,)))


def stress_contract_grad(S: Field, u: Field, order: int = 4) -> Field:
    """Node-wise S : grad u (the viscous dissipation density)."""
    d = u.grid.spatial_dim
    out = np.zeros(u.grid.shape)
    for i in range(d):
        for j in range(d):
            out += (S.values[..., i * d + j]
                    * dspace(u.component(i), 1 + j, order).values[..., 0])
    return Field(u.grid, out)


def stress_apply(S: Field, v: Field) -> Field:
    """Matrix-vector product (S v)_i = S_ij v_j as a d-component field."""
    d = v.grid.spatial_dim
    out = np.zeros(v.grid.shape + (d,))
    for i in range(d):
        for j in range(d):
            out[..., i] += S.values[..., i * d + j] * v.values[..., j]
    return Field(v.grid, out)
