"""Uniform periodic space-time grids, sampled fields, plateau mollifiers.

Conventions used throughout the package:

* A grid covers ``(t0, t0 + T) x torus(L1[, L2])``.  Axis 0 is time and is
  *not* periodic; the remaining one or two axes are periodic.
* Samples sit at cell midpoints, so the midpoint quadrature rule
  ``sum(values) * cell_volume`` is exact for constants.
* Mollified quantities live on the time-shrunk domain (interior slices at
  distance greater than the kernel radius from both time boundaries).
  Shrunk grids keep the parent spacing and record their time origin, which
  is how fields on different (sub)domains are aligned for arithmetic.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    DomainExhaustedError,
    EmptyOverlapError,
    GridMemoryError,
    InfeasibleKernelError,
    ResolutionError,
)

# Total sample cap for a single field (nodes, not bytes).
MAX_NODES = 1 << 25

# Direct-summation convolution is used below this (field nodes x kernel
# nodes) work estimate; larger jobs go through the circular FFT path.
_DIRECT_WORK_LIMIT = 2e8

_TIE = 1e-12  # slack for grid-alignment comparisons


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid: shape = (nt, nx[, ny]), extents = (T, L...)."""

    spatial_dim: int
    shape: tuple[int, ...]
    extents: tuple[float, ...]
    t0: float = 0.0
    derived: bool = False

    def __post_init__(self):
        if self.spatial_dim not in (1, 2):
            raise ValueError(f"spatial_dim must be 1 or 2, got {self.spatial_dim}")
        naxes = 1 + self.spatial_dim
        if len(self.shape) != naxes or len(self.extents) != naxes:
            raise ValueError("shape/extents must have one time and spatial_dim axes")
        if any(e <= 0 for e in self.extents):
            raise ValueError("extents must be positive")
        if any(n < 1 for n in self.shape):
            raise ValueError("axis sizes must be positive")
        if not self.derived and any(n < 8 for n in self.shape):
            raise ValueError("root grids need at least 8 points per axis")
        if self.node_count > MAX_NODES:
            raise GridMemoryError(
                f"grid has {self.node_count} nodes, cap is {MAX_NODES}"
            )

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extents, self.shape))

    @property
    def dt(self) -> float:
        return self.extents[0] / self.shape[0]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def t_end(self) -> float:
        return self.t0 + self.extents[0]

    def axis_coords(self, axis: int) -> np.ndarray:
        """Midpoint coordinates along one axis (time includes t0 offset)."""
        h = self.spacings[axis]
        start = self.t0 if axis == 0 else 0.0
        return start + (np.arange(self.shape[axis]) + 0.5) * h

    def meshgrid(self) -> list[np.ndarray]:
        return list(
            np.meshgrid(*[self.axis_coords(a) for a in range(len(self.shape))],
                        indexing="ij")
        )

    def time_subgrid(self, j0: int, j1: int) -> "GridSpec":
        """Sub-grid keeping time indices [j0, j1)."""
        if j1 <= j0:
            raise DomainExhaustedError("empty time range")
        nt = j1 - j0
        shape = (nt,) + self.shape[1:]
        extents = (nt * self.dt,) + self.extents[1:]
        return GridSpec(self.spatial_dim, shape, extents,
                        t0=self.t0 + j0 * self.dt, derived=True)

    def time_offset_from(self, other: "GridSpec") -> int:
        """Index offset of this grid's first slice inside ``other``."""
        off = (self.t0 - other.t0) / self.dt
        k = int(round(off))
        if abs(off - k) > 1e-9:
            raise ValueError("grids are not time-aligned")
        return k

    def compatible(self, other: "GridSpec") -> bool:
        return (self.spatial_dim == other.spatial_dim
                and self.shape[1:] == other.shape[1:]
                and self.extents[1:] == other.extents[1:]
                and abs(self.dt - other.dt) < _TIE * self.dt)


def make_grid(spatial_dim: int, points_per_axis, extents) -> GridSpec:
    return GridSpec(spatial_dim, tuple(int(n) for n in points_per_axis),
                    tuple(float(e) for e in extents))


class Field:
    """Sampled real field; values have shape grid.shape + (components,)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape == grid.shape:
            values = values[..., None]
        if values.shape[:-1] != grid.shape or values.ndim != len(grid.shape) + 1:
            raise ValueError(
                f"values shape {values.shape} does not match grid {grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @property
    def components(self) -> int:
        return self.values.shape[-1]

    def component(self, i: int) -> "Field":
        return Field(self.grid, self.values[..., i])

    @property
    def scalar(self) -> np.ndarray:
        """Plain ndarray view for single-component fields."""
        if self.components != 1:
            raise ValueError("scalar view requires a single component")
        return self.values[..., 0]

    def magnitude(self) -> np.ndarray:
        if self.components == 1:
            return np.abs(self.values[..., 0])
        return np.sqrt(np.sum(self.values ** 2, axis=-1))

    def map(self, fn) -> "Field":
        return Field(self.grid, fn(self.values))

    # -- aligned arithmetic ------------------------------------------------

    def _binop(self, other, op):
        if isinstance(other, Field):
            grid, a, b = align(self, other)
            return Field(grid, op(a, b))
        return Field(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binop(other, np.add)

    def __radd__(self, other):
        return self._binop(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binop(other, np.subtract)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def dot(self, other: "Field") -> "Field":
        """Component contraction; yields a scalar field."""
        grid, a, b = align(self, other)
        return Field(grid, np.sum(a * b, axis=-1))


def align(*fields: Field):
    """Slice fields to their common time range.

    Returns ``(grid, values_a, values_b, ...)``; values broadcast over the
    trailing component axis as usual.
    """
    g0 = fields[0].grid
    for f in fields[1:]:
        if not g0.compatible(f.grid):
            raise ValueError("fields live on incompatible grids")
    t_lo = max(f.grid.t0 for f in fields)
    t_hi = min(f.grid.t_end for f in fields)
    if t_hi - t_lo < g0.dt * (1 - _TIE):
        raise EmptyOverlapError("fields share no time slices")
    out = []
    grid = None
    for f in fields:
        j0 = int(round((t_lo - f.grid.t0) / g0.dt))
        j1 = j0 + int(round((t_hi - t_lo) / g0.dt))
        sub = f.grid.time_subgrid(j0, j1)
        if grid is None:
            grid = sub
        out.append(f.values[j0:j1])
    return (grid, *out)


def restrict(field: Field, grid: GridSpec) -> Field:
    """Restrict a field to a time-aligned subgrid (e.g. the shrunk domain)."""
    j0 = grid.time_offset_from(field.grid)
    j1 = j0 + grid.shape[0]
    if j0 < 0 or j1 > field.grid.shape[0]:
        raise ValueError("subgrid is not contained in the field's grid")
    return Field(grid, field.values[j0:j1])


def constant_field(grid: GridSpec, value, components: int = 1) -> Field:
    vals = np.broadcast_to(np.asarray(value, float),
                           grid.shape + (components,)).copy()
    return Field(grid, vals)


def from_function(grid: GridSpec, fn, components: int = 1) -> Field:
    """Sample fn(t, x[, y]) -> scalar or tuple of components."""
    coords = grid.meshgrid()
    out = fn(*coords)
    if components == 1 and not isinstance(out, (tuple, list)):
        return Field(grid, np.asarray(out, float))
    arrs = [np.broadcast_to(np.asarray(c, float), grid.shape) for c in out]
    return Field(grid, np.stack(arrs, axis=-1))


# ---------------------------------------------------------------------------
# Mollifier kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierKernel:
    """Discretized plateau kernel of radius epsilon.

    The profile is 1 on r <= 1/3, exp(theta * (1 - 1/(1-s^2))) with
    s = (3r-1)/2 on 1/3 < r < 1, and 0 beyond; theta is solved so the
    discrete integral is exactly 1.
    """

    epsilon: float
    dim: int
    include_time: bool
    spacings: tuple[float, ...]
    weights: np.ndarray
    shape_parameter: float

    @property
    def peak(self) -> float:
        return 1.0 / self.epsilon ** self.dim

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def half_widths(self) -> tuple[int, ...]:
        return tuple((n - 1) // 2 for n in self.weights.shape)

    def mass(self) -> float:
        return float(self.weights.sum() * self.cell_volume)


def _profile(r: np.ndarray, theta: float) -> np.ndarray:
    out = np.zeros_like(r)
    out[r <= 1.0 / 3.0] = 1.0
    trans = (r > 1.0 / 3.0) & (r < 1.0)
    s = (3.0 * r[trans] - 1.0) / 2.0
    out[trans] = np.exp(theta * (1.0 - 1.0 / (1.0 - s ** 2)))
    return out


def make_mollifier(epsilon: float, dim: int, grid: GridSpec,
                   include_time: bool = True) -> MollifierKernel:
    """Build the unit-mass plateau kernel of radius ``epsilon`` on ``grid``.

    ``dim`` must equal 1 + spatial_dim for space-time kernels, or
    spatial_dim for purely spatial kernels (``include_time=False``).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    spacings = grid.spacings if include_time else grid.spacings[1:]
    axis_sizes = grid.shape if include_time else grid.shape[1:]
    if dim != len(spacings):
        raise ValueError(f"dim must be {len(spacings)} for this grid")
    for h in spacings:
        if epsilon < 3.0 * h * (1 - _TIE):
            raise ResolutionError(
                f"epsilon={epsilon} under-resolves spacing {h} (need >= 3h)"
            )
    half = []
    for h, n in zip(spacings, axis_sizes):
        k = int(np.floor(epsilon / h * (1 - _TIE)))
        if 2 * k + 1 > n:
            raise ResolutionError("kernel support wider than the grid axis")
        half.append(k)
    offsets = np.meshgrid(
        *[np.arange(-k, k + 1) * h for k, h in zip(half, spacings)],
        indexing="ij",
    )
    r = np.sqrt(sum(o ** 2 for o in offsets)) / epsilon
    vol = float(np.prod(spacings))
    scale = vol / epsilon ** dim

    def mass(theta):
        return float(_profile(r, theta).sum() * scale)

    plateau_mass = float((r <= 1.0 / 3.0).sum() * scale)
    full_mass = mass(0.0)
    if plateau_mass >= 1.0 or full_mass <= 1.0:
        raise InfeasibleKernelError(
            f"no steepness gives unit mass (plateau {plateau_mass:.3g}, "
            f"full {full_mass:.3g})"
        )
    lo, hi = 0.0, 1.0
    while mass(hi) > 1.0:
        hi *= 2.0
        if hi > 1e8:
            raise InfeasibleKernelError("steepness search did not bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mass(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, hi):
            break
    theta = 0.5 * (lo + hi)
    w = _profile(r, theta) / epsilon ** dim
    # Remove the last floating-point sliver so the discrete integral is 1
    # to full precision (rescales transition nodes only).
    m = float(w.sum() * vol)
    trans = (r > 1.0 / 3.0) & (r < 1.0)
    excess = m - 1.0
    tw = float(w[trans].sum() * vol)
    if tw > 0:
        w[trans] *= 1.0 - excess / tw
    return MollifierKernel(epsilon=float(epsilon), dim=dim,
                           include_time=include_time,
                           spacings=tuple(spacings), weights=w,
                           shape_parameter=theta)


def interior_time_slices(grid: GridSpec, epsilon: float) -> tuple[int, int]:
    """Index range [j0, j1) of slices farther than epsilon from both ends."""
    dt = grid.dt
    j0 = int(np.floor(epsilon / dt - 0.5 + _TIE)) + 1
    j1 = grid.shape[0] - j0
    return j0, j1


def mollify(field: Field, kernel: MollifierKernel, method: str = "auto") -> Field:
    """Convolve with the kernel; periodic in space, shrunk in time.

    Space-time kernels return a field on the interior time range; purely
    spatial kernels act slice-wise and keep the grid.
    """
    grid = field.grid
    if kernel.include_time:
        if kernel.epsilon >= grid.extents[0] / 2:
            raise DomainExhaustedError("kernel radius >= half the time extent")
        j0, j1 = interior_time_slices(grid, kernel.epsilon)
        if j1 <= j0:
            raise DomainExhaustedError("no interior time slices left")
        axes = tuple(range(len(grid.shape)))
    else:
        j0, j1 = 0, grid.shape[0]
        axes = tuple(range(1, len(grid.shape)))
    for h_grid, h_kernel in zip((grid.spacings[a] for a in axes), kernel.spacings):
        if abs(h_grid - h_kernel) > _TIE * h_grid:
            raise ValueError("kernel was built for different spacings")

    win = kernel.weights * kernel.cell_volume
    nwork = field.grid.node_count * win.size
    use_direct = method == "direct" or (method == "auto" and nwork <= _DIRECT_WORK_LIMIT)

    comps = []
    for c in range(field.components):
        v = field.values[..., c]
        if use_direct:
            if kernel.include_time:
                out = ndimage.convolve(v, win, mode="wrap")
            else:
                wfull = win.reshape((1,) + win.shape)
                out = ndimage.convolve(v, wfull, mode="wrap")
        else:
            out = _fft_circular_convolve(v, win, axes)
        comps.append(out)
    vals = np.stack(comps, axis=-1)
    if kernel.include_time:
        sub = grid.time_subgrid(j0, j1)
        return Field(sub, vals[j0:j1])
    return Field(grid, vals)


def _fft_circular_convolve(v: np.ndarray, win: np.ndarray,
                           axes: tuple[int, ...]) -> np.ndarray:
    shape = tuple(v.shape[a] for a in axes)
    kfull = np.zeros(shape)
    idx = np.ix_(*[
        (np.arange(-(n - 1) // 2, (n - 1) // 2 + 1)) % s
        for n, s in zip(win.shape, shape)
    ])
    kfull[idx] = win
    fv = np.fft.rfftn(v, axes=axes)
    fk = np.fft.rfftn(kfull)
    if len(axes) < v.ndim:
        # spatial-only kernel: broadcast over the leading time axis
        fk = fk.reshape((1,) * (v.ndim - len(axes)) + fk.shape)
    out = np.fft.irfftn(fv * fk, s=shape, axes=axes)
    return out


def shift(field: Field, xi) -> Field:
    """w(. + xi) for a node-aligned offset; torus rotation in space."""
    grid = field.grid
    xi = tuple(float(x) for x in xi)
    if len(xi) != len(grid.shape):
        raise ValueError("offset must have one entry per axis")
    steps = []
    for x, h in zip(xi, grid.spacings):
        k = int(round(x / h))
        if abs(x - k * h) > 1e-9 * max(h, abs(x)):
            raise ValueError(f"offset {x} is not node-aligned (spacing {h})")
        steps.append(k)
    s = steps[0]
    nt = grid.shape[0]
    if abs(s) >= nt:
        raise EmptyOverlapError("time shift consumes the whole domain")
    vals = field.values
    for a, k in enumerate(steps[1:], start=1):
        if k:
            vals = np.roll(vals, -k, axis=a)
    if s >= 0:
        sub = grid.time_subgrid(0, nt - s)
        out = vals[s:nt]
    else:
        sub = grid.time_subgrid(-s, nt)
        out = vals[: nt + s]
    return Field(sub, out)


def lp_norm(field: Field, p: float, mask: np.ndarray | None = None) -> float:
    """Midpoint-quadrature L^p norm of |w| (Euclidean over components).

    An empty mask returns 0 and emits a warning, distinguishing "set is
    empty" from "norm is zero".
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    mag = field.magnitude()
    if mask is not None:
        if mask.shape != field.grid.shape:
            raise ValueError("mask shape mismatch")
        if not mask.any():
            warnings.warn("lp_norm over an empty mask", stacklevel=2)
            return 0.0
        mag = mag[mask]
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag ** p) * field.grid.cell_volume) ** (1.0 / p))


def integrate(field: Field, mask: np.ndarray | None = None) -> float:
    """Midpoint quadrature of a scalar field (signed)."""
    v = field.scalar
    if mask is not None:
        v = np.where(mask, v, 0.0)
    return float(v.sum() * field.grid.cell_volume)


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

def _central_diff(vals: np.ndarray, axis: int, h: float, order: int,
                  periodic: bool) -> tuple[np.ndarray, int]:
    if order == 2:
        stencil = {1: 0.5, -1: -0.5}
        trim = 1
    elif order == 4:
        stencil = {2: -1 / 12, 1: 8 / 12, -1: -8 / 12, -2: 1 / 12}
        trim = 2
    else:
        raise ValueError("order must be 2 or 4")
    out = np.zeros_like(vals)
    for off, c in stencil.items():
        out += c * np.roll(vals, -off, axis=axis)
    out /= h
    if periodic:
        return out, 0
    sl = [slice(None)] * vals.ndim
    sl[axis] = slice(trim, vals.shape[axis] - trim)
    return out[tuple(sl)], trim


def ddt(field: Field, order: int = 4) -> Field:
    """Time derivative; trims stencil-width slices at both ends."""
    vals, trim = _central_diff(field.values, 0, field.grid.dt, order,
                               periodic=False)
    sub = field.grid.time_subgrid(trim, field.grid.shape[0] - trim)
    return Field(sub, vals)


def dspace(field: Field, axis: int, order: int = 4) -> Field:
    """Spatial derivative along periodic axis (1-based over space axes)."""
    vals, _ = _central_diff(field.values, axis, field.grid.spacings[axis],
                            order, periodic=True)
    return Field(field.grid, vals)


def grad(field: Field, order: int = 4) -> Field:
    """Spatial gradient of a scalar field; components = spatial_dim."""
    if field.components != 1:
        raise ValueError("grad expects a scalar field")
    parts = [dspace(field, a, order).values[..., 0]
             for a in range(1, 1 + field.grid.spatial_dim)]
    return Field(field.grid, np.stack(parts, axis=-1))


def div(field: Field, order: int = 4) -> Field:
    """Spatial divergence of a vector field."""
    d = field.grid.spatial_dim
    if field.components != d:
        raise ValueError("div expects a d-component field")
    out = sum(dspace(field.component(i), 1 + i, order).values[..., 0]
              for i in range(d))
    return Field(field.grid, out)


def spacetime_gradient_norm(field: Field, order: int = 4) -> Field:
    """|(d_t w, grad w)| as a scalar field on the time-trimmed grid."""
    if field.components != 1:
        raise ValueError("expects a scalar field")
    gt = ddt(field, order)
    parts = [restrict(dspace(field, a, order), gt.grid).values[..., 0]
             for a in range(1, 1 + field.grid.spatial_dim)]
    total = gt.values[..., 0] ** 2 + sum(p ** 2 for p in parts)
    return Field(gt.grid, np.sqrt(total))


# ---------------------------------------------------------------------------
# Import / export
# ---------------------------------------------------------------------------

def save_field(field: Field, path, fmt: str = "bin") -> None:
    """Write a field as raw little-endian float64 (or CSV) plus JSON header."""
    path = Path(path)
    header = {
        "schema": "vacuumlab-field-1",
        "spatial_dim": field.grid.spatial_dim,
        "shape": list(field.grid.shape),
        "extents": list(field.grid.extents),
        "t0": field.grid.t0,
        "components": field.components,
        "format": fmt,
        "dtype": "<f8",
        "order": "C",
        "data_file": path.name + (".bin" if fmt == "bin" else ".csv"),
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(header, indent=2, sort_keys=True) + "\n")
    data = Path(str(path) + (".bin" if fmt == "bin" else ".csv"))
    flat = field.values.astype("<f8")
    if fmt == "bin":
        data.write_bytes(flat.tobytes(order="C"))
    elif fmt == "csv":
        np.savetxt(data, flat.reshape(-1, field.components), delimiter=",")
    else:
        raise ValueError("fmt must be 'bin' or 'csv'")


def load_field(path) -> Field:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    if header.get("schema") != "vacuumlab-field-1":
        raise ValueError("unrecognized field header")
    grid = GridSpec(header["spatial_dim"], tuple(header["shape"]),
                    tuple(header["extents"]), t0=header["t0"],
                    derived=header["t0"] != 0.0)
    shape = tuple(header["shape"]) + (header["components"],)
    data = path.parent / header["data_file"]
    if header["format"] == "bin":
        vals = np.frombuffer(data.read_bytes(), dtype="<f8").reshape(shape)
    else:
        vals = np.loadtxt(data, delimiter=",").reshape(shape)
    return Field(grid, vals.copy())
