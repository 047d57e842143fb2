"""Catalog of bounded Lipschitz test functions.

Every entry carries its sup-norm bound and Lipschitz constant, both computed
analytically. Ids have the form ``name:param[:param]``, e.g. ``cos:1`` or
``ramp:1:0.5``; a leading ``-`` negates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]

# logistic bump sech^2(x / 2w) has max slope 2 / (3 sqrt 3 w)
_BUMP_SLOPE = 2.0 / (3.0 * math.sqrt(3.0))

DEFAULT_CATALOG = ("ramp:1:1", "absclip:10", "cos:1", "sin:1", "bump:1", "poly:2:3")

# ten functions with Lipschitz constant exactly 1; "/L" rescales by 1 / Lip
LIP1_BATTERY = (
    "cos:1",
    "sin:1",
    "cos:0.5/L",
    "sin:2/L",
    "ramp:1:1",
    "ramp:1:0.5",
    "absclip:2",
    "absclip:0.5",
    "bump:1/L",
    "poly:2:1/L",
)


@dataclass(frozen=True)
class TestFunction:
    """A named bounded Lipschitz function f with |f| <= bound and Lip(f) <= lip.

    ``convex_radius`` is the half-width of the interval around ``center`` on
    which f is convex (``concave_radius`` likewise); 0 when no such claim is
    made.
    """

    __test__ = False  # not a pytest class

    id: str
    bound: float
    lip: float
    fn: ArrayFn = field(compare=False, repr=False)
    convex_radius: float = 0.0
    concave_radius: float = 0.0
    center: float = 0.0

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.lip == 0.0

    def __neg__(self) -> "TestFunction":
        new_id = self.id[1:] if self.id.startswith("-") else "-" + self.id
        fn = self.fn
        return TestFunction(
            new_id,
            self.bound,
            self.lip,
            lambda x: -fn(x),
            convex_radius=self.concave_radius,
            concave_radius=self.convex_radius,
            center=self.center,
        )

    def scale(self, a: float) -> "TestFunction":
        if a < 0:
            return (-self).scale(-a)
        fn = self.fn
        return TestFunction(
            f"{a!r}*{self.id}",
            a * self.bound,
            a * self.lip,
            lambda x: a * fn(x),
            convex_radius=self.convex_radius,
            concave_radius=self.concave_radius,
            center=self.center,
        )

    def __add__(self, other: "TestFunction") -> "TestFunction":
        f, g = self.fn, other.fn
        return TestFunction(
            f"({self.id})+({other.id})",
            self.bound + other.bound,
            self.lip + other.lip,
            lambda x: f(x) + g(x),
            center=max(abs(self.center), abs(other.center)),
        )

    def normalized(self) -> "TestFunction":
        """Rescale to Lipschitz constant 1 (constants are returned unchanged)."""
        if self.lip == 0.0:
            return self
        fn, c = self.fn, 1.0 / self.lip
        return TestFunction(
            f"{self.id}/L",
            self.bound * c,
            1.0,
            lambda x: c * fn(x),
            convex_radius=self.convex_radius,
            concave_radius=self.concave_radius,
            center=self.center,
        )


def constant(c: float) -> TestFunction:
    c = float(c)
    inf = math.inf
    return TestFunction(
        f"const:{c!r}",
        abs(c),
        0.0,
        lambda x: np.full_like(x, c, dtype=float),
        convex_radius=inf,
        concave_radius=inf,
    )


def ramp(slope: float = 1.0, cap: float = 1.0) -> TestFunction:
    return TestFunction(
        f"ramp:{slope!r}:{cap!r}",
        cap,
        abs(slope),
        lambda x: np.clip(slope * x, -cap, cap),
    )


def absclip(cap: float = 10.0) -> TestFunction:
    return TestFunction(
        f"absclip:{cap!r}",
        cap,
        1.0,
        lambda x: np.minimum(np.abs(x), cap),
        convex_radius=cap,
    )


def cosine(freq: float = 1.0) -> TestFunction:
    return TestFunction(f"cos:{freq!r}", 1.0, abs(freq), lambda x: np.cos(freq * x))


def sine(freq: float = 1.0) -> TestFunction:
    return TestFunction(f"sin:{freq!r}", 1.0, abs(freq), lambda x: np.sin(freq * x))


def bump(width: float = 1.0) -> TestFunction:
    def fn(x):
        # sech^2(x / 2w) written to avoid overflow for large |x|
        e = np.exp(-np.abs(x) / width)
        return 4.0 * e / (1.0 + e) ** 2

    return TestFunction(f"bump:{width!r}", 1.0, _BUMP_SLOPE / width, fn)


def clipped_poly(power: int = 2, cap: float = 3.0) -> TestFunction:
    power = int(power)
    if power < 1:
        raise ValueError("poly power must be >= 1")
    radius = cap if power % 2 == 0 else 0.0
    return TestFunction(
        f"poly:{power}:{cap!r}",
        cap**power,
        power * cap ** (power - 1),
        lambda x: np.clip(x, -cap, cap) ** power,
        convex_radius=radius,
    )


_BUILDERS = {
    "const": (constant, 1),
    "ramp": (ramp, 2),
    "absclip": (absclip, 1),
    "cos": (cosine, 1),
    "sin": (sine, 1),
    "bump": (bump, 1),
    "poly": (clipped_poly, 2),
}


def parse_function(spec: str) -> TestFunction:
    """Build a catalog function from its id, e.g. ``absclip:10`` or ``-cos:1``."""
    spec = spec.strip()
    if spec.startswith("-"):
        return replace(-parse_function(spec[1:]), id=spec)
    normalize = spec.endswith("/L")
    if normalize:
        spec = spec[:-2]
    name, *args = spec.split(":")
    if name not in _BUILDERS:
        raise ValueError(f"unknown test function {name!r}; known: {sorted(_BUILDERS)}")
    builder, max_args = _BUILDERS[name]
    if len(args) > max_args:
        raise ValueError(f"{name} takes at most {max_args} parameters, got {spec!r}")
    try:
        values = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"non-numeric parameter in {spec!r}") from None
    f = builder(*values)
    if normalize:
        f = f.normalized()
    return replace(f, id=spec + ("/L" if normalize else ""))


def catalog(ids=DEFAULT_CATALOG) -> list[TestFunction]:
    return [parse_function(i) for i in ids]
