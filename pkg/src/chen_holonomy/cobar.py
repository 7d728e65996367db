"""The cobar complex of a coalgebra: words, product, differential, truncation.

A word ``("a", "b")`` stands for ``[a|b]``; its degree is the sum of
``deg(letter) - 1``.  Elements are finitely supported sums of words, truncated
at a maximal length and a maximal degree.  Coefficients may be exact
fractions or floats.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

from .coalgebra import CoalgebraSpec, format_rational, parse_rational

Word = tuple

SCHEMA = "cobar-element/1"


@dataclass(frozen=True)
class Truncation:
    l_max: int = 4
    d_max: int = 6

    def __post_init__(self):
        if self.l_max < 0 or self.d_max < 0:
            raise ValueError("truncation bounds must be nonnegative")

    def meet(self, other: "Truncation") -> "Truncation":
        return Truncation(min(self.l_max, other.l_max), min(self.d_max, other.d_max))

    def admits(self, length: int, degree: int) -> bool:
        return length <= self.l_max and degree <= self.d_max


DEFAULT_TRUNCATION = Truncation()


def word_degree(spec: CoalgebraSpec, word: Iterable[str]) -> int:
    return sum(spec.degree(c) - 1 for c in word)


def word_to_string(word: Word) -> str:
    return "[" + "|".join(word) + "]"


def word_from_string(text: str) -> Word:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"word {text!r} must look like [a|b|...]")
    body = text[1:-1].strip()
    return tuple(s.strip() for s in body.split("|")) if body else ()


def _letter_table(spec: CoalgebraSpec) -> dict:
    """Cache of d_Ω on single letters, stored on the (immutable) spec."""
    table = spec.__dict__.get("_cobar_letters")
    if table is None:
        table = {}
        for b in spec.basis:
            out: dict = {}
            for t, c in spec.d(b.id).items():
                out[(t,)] = out.get((t,), 0) - c
            for (left, right), c in spec.delta(b.id).items():
                sign = -1 if spec.degree(left) % 2 else 1
                out[(left, right)] = out.get((left, right), 0) + sign * c
            table[b.id] = {w: c for w, c in out.items() if c != 0}
        object.__setattr__(spec, "_cobar_letters", table)
    return table


class CobarElement:
    """Immutable sparse linear combination of cobar words.

    Parameters
    ----------
    coalgebra : CoalgebraSpec
        Coalgebra whose basis supplies the letters.
    terms : mapping
        ``word -> coefficient``; zero coefficients are dropped and words
        outside the truncation are discarded.
    truncation : Truncation
        Maximal word length and degree kept.
    """

    __slots__ = ("coalgebra", "truncation", "_terms")

    def __init__(self, coalgebra: CoalgebraSpec, terms: Mapping | None = None, truncation: Truncation = DEFAULT_TRUNCATION):
        self.coalgebra = coalgebra
        self.truncation = truncation
        clean = {}
        for word, c in (terms or {}).items():
            word = tuple(word)
            if c == 0:
                continue
            if not truncation.admits(len(word), word_degree(coalgebra, word)):
                continue
            clean[word] = c
        self._terms = MappingProxyType(clean)

    @classmethod
    def _raw(cls, coalgebra, terms, truncation):
        # terms already clean
        obj = cls.__new__(cls)
        obj.coalgebra = coalgebra
        obj.truncation = truncation
        obj._terms = MappingProxyType(terms)
        return obj

    @property
    def terms(self) -> Mapping[Word, object]:
        return self._terms

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def coeff(self, word) -> object:
        if isinstance(word, str):
            word = word_from_string(word)
        return self._terms.get(tuple(word), 0)

    def degrees(self) -> set[int]:
        return {word_degree(self.coalgebra, w) for w in self._terms}

    def is_exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self._terms.values())

    def to_float(self) -> "CobarElement":
        return CobarElement._raw(self.coalgebra, {w: float(c) for w, c in self._terms.items()}, self.truncation)

    def max_abs(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def retruncate(self, truncation: Truncation) -> "CobarElement":
        return CobarElement(self.coalgebra, self._terms, self.truncation.meet(truncation))

    def _check(self, other: "CobarElement"):
        if other.coalgebra is not self.coalgebra and other.coalgebra != self.coalgebra:
            raise ValueError("cobar elements over different coalgebras")

    def __add__(self, other):
        if isinstance(other, numbers.Number):
            other = unit(self.coalgebra, self.truncation) * other
        self._check(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            total = out.get(w, 0) + c
            if total == 0:
                out.pop(w, None)
            else:
                out[w] = total
        return CobarElement(self.coalgebra, out, self.truncation.meet(other.truncation))

    __radd__ = __add__

    def __neg__(self):
        return CobarElement._raw(self.coalgebra, {w: -c for w, c in self._terms.items()}, self.truncation)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            if other == 0:
                return CobarElement._raw(self.coalgebra, {}, self.truncation)
            return CobarElement._raw(self.coalgebra, {w: c * other for w, c in self._terms.items()}, self.truncation)
        return cobar_product(self, other)

    def __rmul__(self, other):
        if isinstance(other, numbers.Number):
            return self * other
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, CobarElement):
            return NotImplemented
        return self.truncation == other.truncation and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self.truncation, frozenset(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return "CobarElement(0)"
        parts = [f"{c}*{word_to_string(w)}" for w, c in self]
        return "CobarElement(" + " + ".join(parts) + ")"


def zero(coalgebra: CoalgebraSpec, truncation: Truncation = DEFAULT_TRUNCATION) -> CobarElement:
    return CobarElement._raw(coalgebra, {}, truncation)


def unit(coalgebra: CoalgebraSpec, truncation: Truncation = DEFAULT_TRUNCATION) -> CobarElement:
    return CobarElement._raw(coalgebra, {(): Fraction(1)}, truncation)


def word(coalgebra: CoalgebraSpec, letters, coeff=Fraction(1), truncation: Truncation = DEFAULT_TRUNCATION) -> CobarElement:
    """Element ``coeff * [letters]``; accepts a tuple or a ``"[a|b]"`` string."""
    if isinstance(letters, str):
        letters = word_from_string(letters)
    for c in letters:
        coalgebra.degree(c)
    return CobarElement(coalgebra, {tuple(letters): coeff}, truncation)


def cobar_product(x: CobarElement, y: CobarElement) -> CobarElement:
    """Concatenation product, truncated to the componentwise minimum truncation."""
    x._check(y)
    trunc = x.truncation.meet(y.truncation)
    spec = x.coalgebra
    ydeg = [(w, c, len(w), word_degree(spec, w)) for w, c in y._terms.items()]
    out: dict = {}
    for w1, c1 in x._terms.items():
        l1, d1 = len(w1), word_degree(spec, w1)
        for w2, c2, l2, d2 in ydeg:
            if l1 + l2 > trunc.l_max or d1 + d2 > trunc.d_max:
                continue
            w = w1 + w2
            total = out.get(w, 0) + c1 * c2
            if total == 0:
                out.pop(w, None)
            else:
                out[w] = total
    return CobarElement._raw(spec, out, trunc)


def _differential_word(spec: CoalgebraSpec, w: Word, trunc: Truncation, table: dict, out: dict, coeff):
    prefix_degree = 0
    for i, letter in enumerate(w):
        sign = -1 if prefix_degree % 2 else 1
        head, tail = w[:i], w[i + 1:]
        for piece, c in table[letter].items():
            if len(w) - 1 + len(piece) > trunc.l_max:
                continue
            new = head + piece + tail
            total = out.get(new, 0) + sign * c * coeff
            if total == 0:
                out.pop(new, None)
            else:
                out[new] = total
        prefix_degree += spec.degree(letter) - 1


def cobar_differential(x: CobarElement) -> CobarElement:
    """Apply d_Ω, the degree -1 derivation extending the letter differential.

    On letters ``d[c] = -[∂c] + Σ (-1)^{deg c'} [c'|c'']`` over the reduced
    coproduct, and ``d(uv) = d(u)v + (-1)^{deg u} u d(v)``.
    """
    spec = x.coalgebra
    table = _letter_table(spec)
    out: dict = {}
    for w, c in x._terms.items():
        _differential_word(spec, w, x.truncation, table, out, c)
    return CobarElement._raw(spec, out, x.truncation)


def graded_component(x: CobarElement, n: int) -> CobarElement:
    if n < 0:
        raise ValueError("degree must be nonnegative")
    spec = x.coalgebra
    return CobarElement._raw(spec, {w: c for w, c in x._terms.items() if word_degree(spec, w) == n}, x.truncation)


def enumerate_words(spec: CoalgebraSpec, degree: int, l_max: int) -> list[Word]:
    """All words of the given degree and length at most ``l_max``, sorted lexicographically."""
    letters = sorted((b.id, b.degree - 1) for b in spec.basis)
    out: list = []

    def grow(prefix, remaining):
        if remaining == 0:
            out.append(tuple(prefix))
        if len(prefix) == l_max:
            return
        for ident, s in letters:
            if s <= remaining:
                prefix.append(ident)
                grow(prefix, remaining - s)
                prefix.pop()

    if degree >= 0:
        grow([], degree)
    return sorted(out)


def _format_coeff(c):
    if isinstance(c, (int, Fraction)):
        return format_rational(Fraction(c))
    return float(c)


def cobar_to_dict(x: CobarElement) -> dict:
    return {
        "schema": SCHEMA,
        "truncation": {"L_max": x.truncation.l_max, "D_max": x.truncation.d_max},
        "terms": {word_to_string(w): _format_coeff(c) for w, c in sorted(x._terms.items(), key=lambda t: word_to_string(t[0]))},
    }


def dump_cobar(x: CobarElement) -> str:
    return json.dumps(cobar_to_dict(x), sort_keys=True, ensure_ascii=False)


def cobar_from_dict(spec: CoalgebraSpec, data: Mapping) -> CobarElement:
    t = data.get("truncation", {})
    trunc = Truncation(int(t.get("L_max", DEFAULT_TRUNCATION.l_max)), int(t.get("D_max", DEFAULT_TRUNCATION.d_max)))
    terms = {}
    for key, value in data.get("terms", {}).items():
        w = word_from_string(key)
        for c in w:
            spec.degree(c)
        terms[w] = parse_rational(value) if isinstance(value, str) else float(value)
    return CobarElement(spec, terms, trunc)


def load_cobar(spec: CoalgebraSpec, text: str) -> CobarElement:
    return cobar_from_dict(spec, json.loads(text))


def verify_cobar_identities(spec: CoalgebraSpec, truncation: Truncation = DEFAULT_TRUNCATION) -> dict:
    """Exact check of ``d² = 0`` and the graded Leibniz rule over every admissible word.

    Words range over length <= L_max and degree <= D_max; the Leibniz rule is
    tested on every split of every such word into two nonempty factors.
    """
    words = []
    for degree in range(truncation.d_max + 1):
        words.extend(enumerate_words(spec, degree, truncation.l_max))
    d2_fail, leibniz_fail, splits = [], [], 0
    for w in words:
        x = word(spec, w, truncation=truncation)
        if cobar_differential(cobar_differential(x)):
            d2_fail.append(word_to_string(w))
        for k in range(1, len(w)):
            a, b = word(spec, w[:k], truncation=truncation), word(spec, w[k:], truncation=truncation)
            sign = -1 if word_degree(spec, w[:k]) % 2 else 1
            lhs = cobar_differential(a * b)
            rhs = cobar_differential(a) * b + a * cobar_differential(b) * sign
            splits += 1
            if lhs != rhs:
                leibniz_fail.append(f"{word_to_string(w[:k])}·{word_to_string(w[k:])}")
    return {
        "words": len(words),
        "splits": splits,
        "d_squared_failures": d2_fail,
        "leibniz_failures": leibniz_fail,
        "pass": not d2_fail and not leibniz_fail,
    }
