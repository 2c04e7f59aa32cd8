"""Problem definition: grid, coefficient fields, data scaling, manufactured cases.

The spatial domain is the slab (0, L) on a uniform cell grid.  Coefficients
are declarative (constant, piecewise constant, or a named smooth profile) so
that problems pickle cleanly and bounds are known exactly.  The diffusive
scaling multiplies absorption, source and inflow by eps and divides the
scattering coefficient by eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .velocity_space import (
    AngularQuadrature,
    apply_K,
    assemble_scattering,
    kernel_isotropic,
    kernel_linear,
)

__all__ = [
    "Grid1D",
    "CoefficientField",
    "KernelSpec",
    "ProblemSpec",
    "ScaledCoefficients",
    "scale",
    "ManufacturedCase",
    "manufactured_case",
    "mms_transport_source",
    "mms_diffusion_source",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell grid on (0, length)."""

    length: float
    n_cells: int

    def __post_init__(self):
        if not (self.length > 0.0):
            raise ValidationError(f"grid length must be positive, got {self.length}")
        if int(self.n_cells) < 1:
            raise ValidationError(f"n_cells must be >= 1, got {self.n_cells}")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def h(self):
        return self.length / self.n_cells

    @property
    def centers(self):
        return (np.arange(self.n_cells) + 0.5) * self.h

    @property
    def edges(self):
        return np.arange(self.n_cells + 1) * self.h


@dataclass(frozen=True)
class CoefficientField:
    """Declarative scalar field on the slab with recorded bounds.

    kinds:
      constant  : value
      piecewise : breakpoints (strictly increasing) and one value per piece
      sinusoid  : value + amplitude * sin(2 pi frequency x + phase)
    """

    kind: str
    value: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    breakpoints: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "piecewise", "sinusoid"):
            raise ValidationError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "piecewise":
            bp = tuple(float(b) for b in self.breakpoints)
            vals = tuple(float(v) for v in self.values)
            if len(vals) != len(bp) + 1:
                raise ValidationError(
                    "piecewise field needs one more value than breakpoints"
                )
            if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
                raise ValidationError("breakpoints must be strictly increasing")
            object.__setattr__(self, "breakpoints", bp)
            object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value):
        return cls(kind="constant", value=float(value))

    @classmethod
    def piecewise(cls, breakpoints, values):
        return cls(kind="piecewise", breakpoints=tuple(breakpoints),
                   values=tuple(values))

    @classmethod
    def sinusoid(cls, offset, amplitude, frequency=1.0, phase=0.0):
        return cls(kind="sinusoid", value=float(offset), amplitude=float(amplitude),
                   frequency=float(frequency), phase=float(phase))

    @property
    def bounds(self):
        """Global envelope (c_lo, c_hi) of the field values."""
        if self.kind == "constant":
            return (self.value, self.value)
        if self.kind == "piecewise":
            return (min(self.values), max(self.values))
        return (self.value - abs(self.amplitude), self.value + abs(self.amplitude))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "piecewise":
            idx = np.searchsorted(np.asarray(self.breakpoints), x, side="right")
            return np.asarray(self.values)[idx]
        return self.value + self.amplitude * np.sin(
            2.0 * np.pi * self.frequency * x + self.phase
        )

    def derivative(self, x):
        """Pointwise derivative; zero for piecewise fields away from jumps."""
        x = np.asarray(x, dtype=float)
        if self.kind == "sinusoid":
            om = 2.0 * np.pi * self.frequency
            return self.amplitude * om * np.cos(om * x + self.phase)
        return np.zeros_like(x)


@dataclass(frozen=True)
class KernelSpec:
    """Scattering kernel selector: isotropic, linear (g_factor), or table file."""

    kind: str = "isotropic"
    g_factor: float = 0.0
    table_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("isotropic", "linear", "table"):
            raise ValidationError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "table" and not self.table_path:
            raise ValidationError("table kernel requires table_path")

    def build(self, quad):
        """Assemble the scattering operator on the given quadrature."""
        if self.kind == "isotropic":
            return assemble_scattering(kernel_isotropic(), quad)
        if self.kind == "linear":
            return assemble_scattering(kernel_linear(self.g_factor), quad)
        try:
            table = np.loadtxt(self.table_path)
        except OSError as exc:
            raise ValidationError(f"cannot read kernel table: {exc}") from exc
        return assemble_scattering(table, quad)


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem description shared by the transport and diffusion solvers.

    sigma and gamma must be strictly positive; inflow data g_left/g_right may
    be constants or callables of mu and default to zero.  Under the diffusive
    scaling the solver sees gamma_eps = eps*gamma, sigma_eps = sigma/eps,
    f_eps = eps*f and g_eps = eps*g; with scaling "unscaled" the fields are
    used verbatim.
    """

    grid: Grid1D
    sigma: CoefficientField
    gamma: CoefficientField
    source: CoefficientField
    kernel: KernelSpec = KernelSpec()
    g_left: object = 0.0
    g_right: object = 0.0
    scaling: str = "diffusive"

    def __post_init__(self):
        if self.scaling not in ("diffusive", "unscaled"):
            raise ValidationError(f"unknown scaling {self.scaling!r}")
        if self.sigma.bounds[0] <= 0.0:
            raise ValidationError(
                f"sigma must be strictly positive (bounds {self.sigma.bounds})"
            )
        if self.gamma.bounds[0] <= 0.0:
            raise ValidationError(
                f"gamma must be strictly positive (bounds {self.gamma.bounds})"
            )


def _eval_inflow(g, mu):
    mu = np.asarray(mu, dtype=float)
    if callable(g):
        return np.asarray(g(mu), dtype=float) * np.ones_like(mu)
    return np.full_like(mu, float(g))


@dataclass(frozen=True)
class ScaledCoefficients:
    """Evaluable views of the coefficients at a fixed eps."""

    problem: ProblemSpec
    eps: float
    diffusive: bool

    def sigma(self, x):
        v = self.problem.sigma(x)
        return v / self.eps if self.diffusive else v

    def gamma(self, x):
        v = self.problem.gamma(x)
        return self.eps * v if self.diffusive else v

    def f(self, x):
        v = self.problem.source(x)
        return self.eps * v if self.diffusive else v

    def g_left(self, mu):
        v = _eval_inflow(self.problem.g_left, mu)
        return self.eps * v if self.diffusive else v

    def g_right(self, mu):
        v = _eval_inflow(self.problem.g_right, mu)
        return self.eps * v if self.diffusive else v


def scale(problem, eps):
    """Diffusively scaled coefficient views at the given eps."""
    if not (eps > 0.0):
        raise ValidationError(f"eps must be positive, got {eps}")
    if problem.scaling != "diffusive":
        raise ValidationError("scale() requires a problem with diffusive scaling")
    return ScaledCoefficients(problem, float(eps), True)


def coefficient_views(problem, eps):
    """Views honoring the problem's scaling convention (verbatim if unscaled)."""
    if problem.scaling == "diffusive":
        return scale(problem, eps)
    if not (eps > 0.0):
        raise ValidationError(f"eps must be positive, got {eps}")
    return ScaledCoefficients(problem, float(eps), False)


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution (transport or diffusion flavor) with its derivatives."""

    name: str
    u: object = None            # u(x, mu)
    du_dx: object = None
    ubar: object = None         # ubar(x)
    dubar_dx: object = None
    d2ubar_dx2: object = None

    @property
    def is_transport(self):
        return self.u is not None

    @property
    def is_diffusion(self):
        return self.ubar is not None


def manufactured_case(name, length=1.0):
    """Predefined manufactured cases on a slab of the given length.

    transport-poly : u = (x/L)(1 - x/L)(1 + mu)
    transport-trig : u = sin(pi x / L)(1 + mu/2)
    diffusion-sin  : ubar = sin(pi x / L)
    diffusion-parabola : ubar = (x/L)(1 - x/L)

    All cases vanish at both slab ends, so the zero-inflow and homogeneous
    Dirichlet boundary conditions are satisfied exactly.
    """
    L = float(length)
    if name == "transport-poly":
        return ManufacturedCase(
            name=name,
            u=lambda x, mu: (x / L) * (1.0 - x / L) * (1.0 + mu),
            du_dx=lambda x, mu: (1.0 - 2.0 * x / L) / L * (1.0 + mu),
        )
    if name == "transport-trig":
        return ManufacturedCase(
            name=name,
            u=lambda x, mu: np.sin(np.pi * x / L) * (1.0 + 0.5 * mu),
            du_dx=lambda x, mu: (np.pi / L) * np.cos(np.pi * x / L) * (1.0 + 0.5 * mu),
        )
    if name == "diffusion-sin":
        return ManufacturedCase(
            name=name,
            ubar=lambda x: np.sin(np.pi * x / L),
            dubar_dx=lambda x: (np.pi / L) * np.cos(np.pi * x / L),
            d2ubar_dx2=lambda x: -((np.pi / L) ** 2) * np.sin(np.pi * x / L),
        )
    if name == "diffusion-parabola":
        return ManufacturedCase(
            name=name,
            ubar=lambda x: (x / L) * (1.0 - x / L),
            dubar_dx=lambda x: (1.0 - 2.0 * x / L) / L,
            d2ubar_dx2=lambda x: np.full_like(np.asarray(x, dtype=float), -2.0 / L**2),
        )
    raise ValidationError(f"unknown manufactured case {name!r}")


def mms_transport_source(case, sigma, gamma, op, grid):
    """Source making the manufactured transport solution exact.

    f = mu du/dx + gamma u - sigma (K - I) u, evaluated on cell centers and
    the quadrature nodes of the operator.  sigma and gamma are callables of x
    (CoefficientField works).
    """
    if not case.is_transport:
        raise ValidationError(f"case {case.name!r} has no transport solution")
    if not isinstance(op.quadrature, AngularQuadrature):
        raise ValidationError("transport manufactured source needs a slab quadrature")
    xc = grid.centers
    mu = op.quadrature.nodes
    u = case.u(xc[:, None], mu[None, :])
    du = case.du_dx(xc[:, None], mu[None, :])
    scatter = apply_K(op, u) - u
    return mu[None, :] * du + gamma(xc)[:, None] * u - sigma(xc)[:, None] * scatter


def mms_diffusion_source(case, sigma, gamma, velocity_factor=1.0 / 3.0):
    """Source callable making the manufactured diffusion solution exact.

    The slab diffusivity is a(x) = velocity_factor / sigma(x); the factor is
    1/3 for isotropic scattering and 1/(3(1-g)) for the linear kernel.  sigma
    must expose derivative(x) (CoefficientField does); for piecewise fields
    the derivative is zero away from jumps, so manufactured verification is
    meaningful only for smooth sigma.
    """
    if not case.is_diffusion:
        raise ValidationError(f"case {case.name!r} has no diffusion solution")
    t = float(velocity_factor)

    def f(x):
        x = np.asarray(x, dtype=float)
        s = sigma(x)
        ds = sigma.derivative(x) if hasattr(sigma, "derivative") else 0.0
        a = t / s
        da = -t * ds / s**2
        return -(da * case.dubar_dx(x) + a * case.d2ubar_dx2(x)) + gamma(x) * case.ubar(x)

    return f


def cells_for_eps(eps, length, floor=64):
    """Mesh-coupling rule for rate studies: h <= eps/4 with a cell floor.

    The cell count is rounded up to an even number so interface-aligned
    material jumps at the midpoint stay aligned.
    """
    if not (eps > 0.0):
        raise ValidationError(f"eps must be positive, got {eps}")
    n = max(int(floor), 2 * math.ceil(2.0 * length / eps))
    return n + (n % 2)
