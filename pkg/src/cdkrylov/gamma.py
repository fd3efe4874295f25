"""Rules producing the free scaling sequence ``gamma_k`` of the CD iteration.

A strategy is called once per direction update with a :class:`GammaContext`
describing direction ``p_j`` and returns ``gamma_j``. Any nonzero sequence
yields conjugate directions; the choice only changes direction scaling and
rounding behaviour. ``gamma_j = -a_j`` reproduces CG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import SpecError


@dataclass(frozen=True)
class GammaContext:
    """Scalars available when ``gamma_j`` is chosen.

    ``Ap_sq`` is ``||A p_j||^2`` (``(A p_j)^T M (A p_j)`` when preconditioned);
    the ``*_prev`` fields describe ``p_{j-1}`` and are ``None`` at ``j = 0``.
    """

    index: int
    a: float
    pAp: float
    Ap_sq: float
    gamma_prev: Optional[float] = None
    pAp_prev: Optional[float] = None
    Ap_sq_prev: Optional[float] = None


class GammaStrategy:
    name = "gamma"

    def __call__(self, ctx: GammaContext) -> float:
        raise NotImplementedError

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Constant(GammaStrategy):
    c: float = 1.0

    def __post_init__(self):
        if self.c == 0 or not math.isfinite(self.c):
            raise SpecError("constant gamma must be finite and nonzero")

    @property
    def name(self):
        return f"const:{self.c!r}"

    def __call__(self, ctx):
        return float(self.c)


@dataclass(frozen=True)
class PlusA(GammaStrategy):
    """``gamma_0 = 1``, then ``gamma_k = a_k``."""

    name = "a"

    def __call__(self, ctx):
        return 1.0 if ctx.index == 0 else ctx.a


@dataclass(frozen=True)
class MinusA(GammaStrategy):
    """``gamma_k = -a_k`` for every k; the CG member of the class."""

    name = "neg-a"

    def __call__(self, ctx):
        return -ctx.a


@dataclass(frozen=True)
class AbsA(GammaStrategy):
    name = "abs-a"

    def __call__(self, ctx):
        return 1.0 if ctx.index == 0 else abs(ctx.a)


@dataclass(frozen=True)
class NegAbsA(GammaStrategy):
    name = "neg-abs-a"

    def __call__(self, ctx):
        return -abs(ctx.a)


@dataclass(frozen=True)
class CdRedRecursion(GammaStrategy):
    """``gamma_0 = -a_0`` and the recursion that collapses CD to a two-term form.

    ``gamma_k = -(gamma_{k-1}^2 ||A p_{k-1}||^2 + gamma_{k-1} p_{k-1}^T A p_{k-1}) / p_k^T A p_k``
    """

    name = "red"

    def __call__(self, ctx):
        if ctx.index == 0:
            return -ctx.a
        g = ctx.gamma_prev
        return -(g * g * ctx.Ap_sq_prev + g * ctx.pAp_prev) / ctx.pAp


@dataclass(frozen=True)
class ScaledCgMap(GammaStrategy):
    """Gamma sequence under which CD reproduces the scaled CG with factors ``rho``.

    ``gamma_k = -rho_{k+1} alpha_k`` where ``alpha_k`` is the scaled-CG step.
    CD starts from ``p_0 = r_0`` rather than ``rho_0 r_0``, so
    ``alpha_k = a_k / rho_0``. The sequence is extended with its last value.
    """

    rho: tuple

    def __init__(self, rho: Sequence[float]):
        rho = tuple(float(x) for x in rho)
        if not rho:
            raise SpecError("rho sequence is empty")
        if any(not (x > 0) or not math.isfinite(x) for x in rho):
            raise SpecError("every rho_k must be a finite positive number")
        object.__setattr__(self, "rho", rho)

    name = "scaled"

    def at(self, k):
        return self.rho[k] if k < len(self.rho) else self.rho[-1]

    def __call__(self, ctx):
        return -self.at(ctx.index + 1) * ctx.a / self.rho[0]


@dataclass(frozen=True)
class GeometricDecay(GammaStrategy):
    """``gamma_k = c**k``. Exploratory: shrinks ``|gamma_k / gamma_{k-i}|``."""

    c: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.c < 1.0):
            raise SpecError("decay factor must lie in (0, 1)")

    @property
    def name(self):
        return f"decay:{self.c!r}"

    def __call__(self, ctx):
        return self.c ** ctx.index


@dataclass(frozen=True)
class Custom(GammaStrategy):
    fn: Callable[[GammaContext], float]
    label: str = "custom"

    @property
    def name(self):
        return self.label

    def __call__(self, ctx):
        return float(self.fn(ctx))


def parse_gamma(spec) -> GammaStrategy:
    """Parse ``const:<c> | a | neg-a | abs-a | neg-abs-a | red | scaled:<file> | decay:<c>``.

    Strategy objects pass through unchanged.
    """
    if isinstance(spec, GammaStrategy):
        return spec
    if not isinstance(spec, str):
        raise SpecError(f"cannot interpret gamma spec {spec!r}")
    simple = {"a": PlusA, "neg-a": MinusA, "abs-a": AbsA, "neg-abs-a": NegAbsA, "red": CdRedRecursion}
    if spec in simple:
        return simple[spec]()
    head, _, arg = spec.partition(":")
    if head == "const" and arg:
        return Constant(_to_float(arg, spec))
    if head == "decay" and arg:
        return GeometricDecay(_to_float(arg, spec))
    if head == "scaled" and arg:
        return ScaledCgMap(load_rho(arg))
    raise SpecError(f"unknown gamma strategy {spec!r}")


def load_rho(path) -> tuple:
    """Read whitespace-separated positive scaling factors from a file."""
    try:
        with open(path) as fh:
            tokens = [t for line in fh for t in line.split("#", 1)[0].split()]
        data = [float(t) for t in tokens]
    except (OSError, ValueError) as exc:
        raise SpecError(f"cannot read rho file {path!r}: {exc}") from exc
    return tuple(data)


def _to_float(text, spec):
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"bad number in gamma spec {spec!r}") from None


STRATEGY_NAMES = ("const:<c>", "a", "neg-a", "abs-a", "neg-abs-a", "red", "scaled:<file>", "decay:<c>")
