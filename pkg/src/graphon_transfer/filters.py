"""Filter functions, their periodic extension and Fourier-based stability constants.

A filter ``h`` acting on operators with spectrum inside ``[-G, G]`` is
extended to a function of period ``gamma = 2 (G + margin)``: it equals ``h`` on
``[-G, G]`` and on ``[G, G + 2 margin]`` a cubic Hermite blend joins
``h(G), h'(G)`` to ``h(-G), h'(-G)``.  The result is C^1 with a Lipschitz
derivative, so ``sum |c_n| |n|`` over its Fourier coefficients is finite and

    ||h(A) - h(B)|| <= (2 + 2 pi C / gamma) ||A - B||

for self-adjoint ``A, B`` with spectra in ``[-G, G]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P

ZERO_TOL = 1e-12
SINGULAR_TOL = 1e-12
FD_STEP = 1e-5


class RegularityError(ValueError):
    """The filter lacks the smoothness (or h(0) = 0) a construction needs."""


class SingularFilterError(ArithmeticError):
    """A rational filter's denominator vanishes on the spectrum."""


@dataclass(frozen=True, eq=False)
class FilterSpec:
    """Scalar filter ``h``: polynomial, rational ``p/q``, or a tabulated callable.

    Coefficients are in ascending order.  ``domain_bound`` is the ``G`` such
    that ``h`` is only ever evaluated on ``[-G, G]``.
    """

    kind: str
    num: tuple = ()
    den: tuple = (1.0,)
    func: Optional[Callable] = None
    deriv: Optional[Callable] = None
    differentiable: bool = True
    domain_bound: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("polynomial", "rational", "tabulated"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "tabulated" and self.func is None:
            raise ValueError("tabulated filter needs a callable")
        if self.kind == "rational" and not np.any(np.asarray(self.den) != 0):
            raise ValueError("rational filter has a zero denominator polynomial")

    @classmethod
    def polynomial(cls, coeffs, domain_bound=1.0, name=""):
        c = tuple(float(v) for v in coeffs) or (0.0,)
        return cls("polynomial", num=c, domain_bound=domain_bound, name=name or _poly_name(c))

    @classmethod
    def rational(cls, num, den, domain_bound=1.0, name=""):
        n = tuple(float(v) for v in num) or (0.0,)
        d = tuple(float(v) for v in den)
        label = name or f"rat:{','.join(map(repr, n))}/{','.join(map(repr, d))}"
        return cls("rational", num=n, den=d, domain_bound=domain_bound, name=label)

    @classmethod
    def tabulated(cls, func, deriv=None, differentiable=True, domain_bound=1.0, name="tabulated"):
        return cls(
            "tabulated",
            func=func,
            deriv=deriv,
            differentiable=differentiable,
            domain_bound=domain_bound,
            name=name,
        )

    def with_bound(self, domain_bound: float) -> "FilterSpec":
        return FilterSpec(
            self.kind, self.num, self.den, self.func, self.deriv,
            self.differentiable, float(domain_bound), self.name,
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return P.polyval(x, self.num)
        if self.kind == "rational":
            return P.polyval(x, self.num) / P.polyval(x, self.den)
        return np.asarray(self.func(x), dtype=float)

    def on_spectrum(self, lams) -> np.ndarray:
        """Evaluate at eigenvalues, failing loudly near a rational pole."""
        lams = np.asarray(lams, dtype=float)
        if self.kind == "rational":
            q = P.polyval(lams, self.den)
            scale = np.max(np.abs(q)) if q.size else 0.0
            bad = np.abs(q) < SINGULAR_TOL * scale if scale > 0 else np.ones(q.shape, bool)
            if np.any(bad):
                raise SingularFilterError(
                    f"denominator of {self.name} vanishes at eigenvalue(s) {lams[bad]}"
                )
            return P.polyval(lams, self.num) / q
        return self(lams)

    @property
    def has_derivative(self) -> bool:
        return self.kind != "tabulated" or self.deriv is not None or self.differentiable

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return P.polyval(x, P.polyder(self.num)) if len(self.num) > 1 else np.zeros_like(x)
        if self.kind == "rational":
            p, q = P.polyval(x, self.num), P.polyval(x, self.den)
            dp = P.polyval(x, P.polyder(self.num)) if len(self.num) > 1 else 0.0
            dq = P.polyval(x, P.polyder(self.den)) if len(self.den) > 1 else 0.0
            return (dp * q - p * dq) / q**2
        if self.deriv is not None:
            return np.asarray(self.deriv(x), dtype=float)
        if not self.differentiable:
            raise RegularityError(f"{self.name}: no derivative available")
        return (self(x + FD_STEP) - self(x - FD_STEP)) / (2 * FD_STEP)

    @property
    def value_at_zero(self) -> float:
        return float(self(0.0))

    @property
    def zero_at_zero(self) -> bool:
        return abs(self.value_at_zero) <= ZERO_TOL

    def sup_norm(self, grid: int = 4001) -> float:
        g = self.domain_bound
        return float(np.max(np.abs(self(np.linspace(-g, g, grid)))))

    def check_regular(self) -> None:
        """C^1 with Lipschitz derivative on ``[-G, G]``, as far as the kind tells."""
        g = self.domain_bound
        if not self.has_derivative:
            raise RegularityError(f"{self.name}: no derivative available")
        if self.kind == "rational":
            roots = P.polyroots(self.den) if len(self.den) > 1 else np.array([])
            real = roots[np.abs(np.imag(roots)) < 1e-12].real
            if np.any(np.abs(real) <= g):
                raise RegularityError(f"{self.name}: pole inside [-{g}, {g}]")

    def __repr__(self):
        return f"FilterSpec({self.name or self.kind})"


def _poly_name(c) -> str:
    return "poly:" + ",".join(repr(float(v)) for v in c)


PRESETS = {
    "id": (0.0, 1.0),
    "sq": (0.0, 0.0, 1.0),
    "cube-minus-id": (0.0, -1.0, 0.0, 1.0),
}


def parse_filter(text: str, domain_bound: float = 1.0) -> FilterSpec:
    """Parse ``poly:c0,c1,..`` | ``rat:c0,../d0,..`` | a preset name."""
    if text in PRESETS:
        return FilterSpec.polynomial(PRESETS[text], domain_bound, name=text)
    if any(ch.isspace() for ch in text):
        raise ValueError(f"filter spec must not contain whitespace: {text!r}")
    try:
        if text.startswith("poly:"):
            return FilterSpec.polynomial(
                [float(t) for t in text[5:].split(",")], domain_bound, name=text
            )
        if text.startswith("rat:"):
            num, den = text[4:].split("/")
            return FilterSpec.rational(
                [float(t) for t in num.split(",")],
                [float(t) for t in den.split(",")],
                domain_bound,
                name=text,
            )
    except ValueError as exc:
        raise ValueError(f"bad filter spec {text!r}: {exc}") from None
    raise ValueError(f"unknown filter spec {text!r}; expected poly:, rat: or one of {sorted(PRESETS)}")


# -- periodic extension ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PeriodicFunction:
    """A real function of period ``period``, evaluated on all of R."""

    func: Callable
    period: float
    blend: str = "none"
    source: Optional[FilterSpec] = None

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)


def _hermite(s, y0, d0, y1, d1, length):
    s2, s3 = s * s, s * s * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * length * d0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * length * d1
    )


def periodic_extension(h: FilterSpec, gamma_margin: float = 1.0) -> PeriodicFunction:
    """Extend ``h`` from ``[-G, G]`` to a C^{1,1} function of period ``2 (G + margin)``."""
    h.check_regular()
    g = float(h.domain_bound)
    gap = 2.0 * gamma_margin
    period = 2.0 * g + gap
    y0, y1 = float(h(g)), float(h(-g))
    d0, d1 = float(h.derivative(g)), float(h.derivative(-g))

    def ext(t):
        r = np.mod(t + g, period) - g  # in [-g, g + gap)
        out = np.empty_like(r)
        inside = r <= g
        out[inside] = h(r[inside])
        s = (r[~inside] - g) / gap
        out[~inside] = _hermite(s, y0, d0, y1, d1, gap)
        return out

    return PeriodicFunction(ext, period, blend=f"cubic-hermite(margin={gamma_margin:g})", source=h)


def fourier_coefficients(h_ext: PeriodicFunction, n_max: int, sample_count: int = 2**14) -> np.ndarray:
    """Coefficients ``c_n = (1/gamma) int h(t) exp(-2 pi i n t / gamma) dt`` for ``n = -N..N``.

    Computed from one FFT of ``sample_count`` uniform samples on
    ``[-gamma/2, gamma/2)``.  Entry ``N + n`` of the result holds ``c_n``.
    """
    m = int(sample_count)
    if m <= 0 or m & (m - 1):
        raise ValueError("sample_count must be a power of two")
    if n_max > m // 4:
        raise ValueError(f"n_max={n_max} exceeds sample_count/4={m // 4}")
    gamma = h_ext.period
    t = -gamma / 2 + gamma * np.arange(m) / m
    spec = np.fft.fft(h_ext(t)) / m
    ns = np.arange(-n_max, n_max + 1)
    # shift from t in [0, gamma) to t in [-gamma/2, gamma/2)
    return spec[ns % m] * np.where(ns % 2 == 0, 1.0, -1.0)


def partial_sum(coeffs: np.ndarray, period: float, t) -> np.ndarray:
    n_max = (coeffs.size - 1) // 2
    ns = np.arange(-n_max, n_max + 1)
    t = np.asarray(t, dtype=float)
    phase = np.exp(2j * np.pi * np.outer(t, ns) / period)
    return (phase @ coeffs).real


@dataclass(frozen=True)
class StabilityConstant:
    gamma: float
    coeff_sum: float
    lemma_constant: float
    truncation_n: int
    tail_estimate: float
    blend: str = ""

    @property
    def lipschitz_bound(self) -> float:
        """``(2 pi / gamma) C``: bounds ``||h(A) - h(B)|| / ||A - B||`` for self-adjoint A, B.

        Each harmonic ``exp(2 pi i n x / gamma)`` is operator-Lipschitz with
        constant ``2 pi |n| / gamma``; summing over the series gives the bound.
        Vanishes for the zero filter.
        """
        return 2.0 * math.pi * self.coeff_sum / self.gamma


def stability_constant(
    h, n_max: int = 2048, sample_count: int = 2**14, gamma_margin: float = 1.0
) -> StabilityConstant:
    """Fourier constant ``C = sum_{|n| <= N} |c_n| |n|``, ``2 + 2 pi C / gamma`` and the
    operator-Lipschitz bound ``2 pi C / gamma``.

    ``h`` is a :class:`FilterSpec` (extended first; must vanish at 0) or an
    already periodic :class:`PeriodicFunction`.
    """
    if isinstance(h, FilterSpec):
        if not h.zero_at_zero:
            raise RegularityError(f"{h.name}: h(0) = {h.value_at_zero:g}, must be 0")
        h = periodic_extension(h, gamma_margin)
    coeffs = fourier_coefficients(h, n_max, sample_count)
    ns = np.arange(-n_max, n_max + 1)
    weighted = np.abs(coeffs) * np.abs(ns)
    c = float(np.sum(weighted))
    lo = max(1, n_max // 10)
    decade = np.abs(ns) >= lo
    k = float(np.max(weighted[decade] * ns[decade].astype(float) ** 2)) if n_max >= 1 else 0.0
    tail = 2.0 * k / n_max if n_max >= 1 else 0.0
    return StabilityConstant(
        gamma=h.period,
        coeff_sum=c,
        lemma_constant=2.0 + 2.0 * math.pi * c / h.period,
        truncation_n=n_max,
        tail_estimate=tail,
        blend=h.blend,
    )


def lipschitz_estimate(h: FilterSpec, interval=None, grid: int = 1000) -> float:
    """Max |h'| on a grid (finite-difference slopes when h' is unknown).

    A lower estimate for reporting, not a certified constant.
    """
    if grid < 1000:
        raise ValueError("grid must have at least 1000 points")
    a, b = interval if interval is not None else (-h.domain_bound, h.domain_bound)
    x = np.linspace(a, b, grid)
    if h.kind != "tabulated" or h.deriv is not None:
        return float(np.max(np.abs(h.derivative(x))))
    y = h(x)
    return float(np.max(np.abs(np.diff(y) / np.diff(x))))


def jackson_gap(h_ext: PeriodicFunction, n: int, sample_count: int = 2**14) -> float:
    """``sup |h - S_n h|`` over a ``10 n``-point grid of one period."""
    if n < 2:
        raise ValueError("n must be at least 2")
    coeffs = fourier_coefficients(h_ext, n, max(sample_count, 4 * n))
    t = -h_ext.period / 2 + h_ext.period * np.arange(10 * n) / (10 * n)
    return float(np.max(np.abs(h_ext(t) - partial_sum(coeffs, h_ext.period, t))))
