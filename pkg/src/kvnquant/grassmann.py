"""Finite-dimensional complex Grassmann algebra.

Monomials are stored as integer bitmasks over an ordered generator set; bit ``i``
set means generator ``i`` is present. The canonical form of a monomial lists its
generators in ascending index order, and every stored coefficient refers to that
canonical ordering.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence, Union

__all__ = [
    "GeneratorSet",
    "GrassmannElement",
    "GrassmannError",
    "berezin",
    "grade",
    "left_derivative",
    "multiply",
]

MAX_GENERATORS = 64

Scalar = Union[int, float, complex]


class GrassmannError(ValueError):
    """Raised on contract violations inside the Grassmann algebra."""


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _reorder_sign(a: int, b: int) -> int:
    """Sign picked up when bringing the concatenation ``a b`` to canonical order.

    Every generator of ``b`` must hop over each generator of ``a`` with a larger
    index.
    """
    swaps = 0
    while b:
        low = b & -b
        swaps += _popcount(a & ~((low << 1) - 1))
        b ^= low
    return -1 if swaps & 1 else 1


class GeneratorSet:
    """Immutable ordered collection of odd generator labels."""

    __slots__ = ("_names", "_index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise GrassmannError(f"generator labels must be unique: {names}")
        if len(names) > MAX_GENERATORS:
            raise GrassmannError(
                f"at most {MAX_GENERATORS} generators supported, got {len(names)}"
            )
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def size(self) -> int:
        return len(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        return iter(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __repr__(self) -> str:
        return f"GeneratorSet({list(self._names)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GrassmannError(f"unknown generator {name!r}") from None

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for name in names:
            bit = 1 << self.index(name)
            if m & bit:
                raise GrassmannError(f"generator {name!r} repeated")
            m |= bit
        return m

    def gen(self, name: str, coeff: Scalar = 1) -> "GrassmannElement":
        """The element ``coeff * name``."""
        return GrassmannElement(self, {1 << self.index(name): coeff})

    def scalar(self, value: Scalar) -> "GrassmannElement":
        return GrassmannElement(self, {0: value})

    def zero(self) -> "GrassmannElement":
        return GrassmannElement(self, {})

    def monomial(self, names: Sequence[str], coeff: Scalar = 1) -> "GrassmannElement":
        """Product ``coeff * names[0] names[1] ...`` in the order given."""
        out = self.scalar(coeff)
        for name in names:
            out = out * self.gen(name)
        return out


class GrassmannElement:
    """Element of the Grassmann algebra generated by a :class:`GeneratorSet`.

    Values are immutable. Arithmetic with Python/numpy scalars is supported on both
    sides; products between elements are graded.
    """

    __slots__ = ("gens", "_terms")

    def __init__(self, gens: GeneratorSet, terms: Mapping[int, Scalar] | None = None):
        self.gens = gens
        clean: dict[int, complex] = {}
        if terms:
            limit = 1 << gens.size
            for mask, coeff in terms.items():
                if mask < 0 or mask >= limit:
                    raise GrassmannError(f"monomial mask {mask} outside generator set")
                coeff = complex(coeff)
                if coeff != 0:
                    clean[mask] = coeff
        self._terms = clean

    @property
    def terms(self) -> dict[int, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, names: Iterable[str] = ()) -> complex:
        """Coefficient of the canonical monomial made of ``names``."""
        return self._terms.get(self.gens.mask(names), 0j)

    @property
    def scalar_part(self) -> complex:
        return self._terms.get(0, 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def is_even(self) -> bool:
        return all(_popcount(m) % 2 == 0 for m in self._terms)

    def is_odd(self) -> bool:
        return all(_popcount(m) % 2 == 1 for m in self._terms)

    def _check(self, other: "GrassmannElement") -> None:
        if other.gens is not self.gens:
            raise GrassmannError("elements belong to different generator sets")

    def _coerce(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            self._check(other)
            return other
        if isinstance(other, (int, float, complex)) or hasattr(other, "__complex__"):
            return GrassmannElement(self.gens, {0: complex(other)})
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0j) + c
        return GrassmannElement(self.gens, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement(self.gens, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0j) - c
        return GrassmannElement(self.gens, out)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            return multiply(self, other)
        if isinstance(other, (int, float, complex)) or hasattr(other, "__complex__"):
            s = complex(other)
            return GrassmannElement(self.gens, {m: c * s for m, c in self._terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)) or hasattr(other, "__complex__"):
            s = complex(other)
            return GrassmannElement(self.gens, {m: s * c for m, c in self._terms.items()})
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)) or hasattr(other, "__complex__"):
            s = complex(other)
            return GrassmannElement(self.gens, {m: c / s for m, c in self._terms.items()})
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, GrassmannElement):
            return other.gens is self.gens and other._terms == self._terms
        if isinstance(other, (int, float, complex)):
            return self._terms == ({0: complex(other)} if other != 0 else {})
        return NotImplemented

    __hash__ = None

    def max_abs_diff(self, other: "GrassmannElement") -> float:
        """Largest coefficient difference, used for floating-point comparisons."""
        diff = self - other
        return max((abs(c) for c in diff._terms.values()), default=0.0)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def restrict(self, names: Iterable[str]) -> "GrassmannElement":
        """Set the listed generators to zero."""
        kill = self.gens.mask(names)
        return GrassmannElement(
            self.gens, {m: c for m, c in self._terms.items() if not m & kill}
        )

    def component(self, names: Sequence[str], among: Sequence[str]) -> "GrassmannElement":
        """Coefficient element ``X`` of the monomial ``names`` in the ``among`` sector.

        ``self = ... + names X + ...`` where ``X`` contains no generator of
        ``among``. ``names`` is taken in canonical order and the generators of
        ``among`` are required to precede every other generator present.
        """
        sector = self.gens.mask(among)
        target = self.gens.mask(names)
        if target & ~sector:
            raise GrassmannError("component names must lie inside the sector")
        top = sector.bit_length()
        out = {}
        for m, c in self._terms.items():
            if m & sector != target:
                continue
            rest = m & ~sector
            if rest and (rest & ((1 << top) - 1)):
                raise GrassmannError("sector generators must come first in the order")
            out[rest] = c
        return GrassmannElement(self.gens, out)

    def substitute(self, name: str, value: "GrassmannElement") -> "GrassmannElement":
        """Replace generator ``name`` by the odd element ``value``."""
        self._check(value)
        bit = 1 << self.gens.index(name)
        out = self.gens.zero()
        for m, c in self._terms.items():
            if not m & bit:
                out = out + GrassmannElement(self.gens, {m: c})
                continue
            rest = m & ~bit
            # bring the generator to the front: count generators before it
            sign = -1 if _popcount(rest & (bit - 1)) & 1 else 1
            out = out + value * GrassmannElement(self.gens, {rest: sign * c})
        return out

    def __repr__(self) -> str:
        return f"GrassmannElement({render(self)!r})"

    def __str__(self) -> str:
        return render(self)


def _fmt_coeff(c: complex) -> str:
    return f"({c.real:.17g}{c.imag:+.17g}j)"


def render(a: GrassmannElement) -> str:
    """Deterministic text form: ``coeff * g1 g2 ...`` terms sorted by subset index."""
    if not a._terms:
        return "0"
    parts = []
    for m in sorted(a._terms):
        names = [a.gens.names[i] for i in range(a.gens.size) if m >> i & 1]
        label = " ".join(names) if names else "1"
        parts.append(f"{_fmt_coeff(a._terms[m])} * {label}")
    return " + ".join(parts)


def multiply(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    """Graded product ``a b``."""
    if a.gens is not b.gens:
        raise GrassmannError("elements belong to different generator sets")
    out: dict[int, complex] = {}
    for ma, ca in a._terms.items():
        for mb, cb in b._terms.items():
            if ma & mb:
                continue
            m = ma | mb
            term = ca * cb
            if _reorder_sign(ma, mb) < 0:
                term = -term
            out[m] = out.get(m, 0j) + term
    return GrassmannElement(a.gens, out)


def grade(a: GrassmannElement) -> set[int]:
    """Degrees of the monomials present in ``a``."""
    return {_popcount(m) for m in a._terms}


def left_derivative(a: GrassmannElement, name: str) -> GrassmannElement:
    """Graded left derivative: anticommute ``name`` to the front, then drop it."""
    bit = 1 << a.gens.index(name)
    out = {}
    for m, c in a._terms.items():
        if not m & bit:
            continue
        sign = -1 if _popcount(m & (bit - 1)) & 1 else 1
        out[m & ~bit] = sign * c
    return GrassmannElement(a.gens, out)


def berezin(a: GrassmannElement, names: Sequence[str]) -> GrassmannElement:
    """Iterated Berezin integral ``∫ d names[0] ... d names[-1] a``.

    The innermost (last listed) measure acts first and each single integral is a
    left derivative, ``∫dθ (x + θ y) = y``. With this choice
    ``∫ dθ dθ̄ θ̄θ = 1``.
    """
    if len(set(names)) != len(names):
        raise GrassmannError(f"duplicate integration variables: {list(names)}")
    out = a
    for name in reversed(names):
        out = left_derivative(out, name)
    return out
