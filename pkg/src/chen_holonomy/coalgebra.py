"""Exact representation and validation of coaugmented DG coalgebras.

Only the coaugmentation coideal is stored: every basis element has positive
degree, the differential lowers degree by one and the reduced coproduct
preserves total degree.  All coefficients are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

DEFAULT_DEGREE_CAP = 8


class CoalgebraError(ValueError):
    """Raised when a coalgebra description is malformed or violates an axiom.

    The ``violations`` attribute lists one human-readable message per problem;
    every message names the offending basis element.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class BasisElement:
    id: str
    degree: int


def parse_rational(value) -> Fraction:
    """Parse a coefficient given as ``"p/q"``, ``"p"`` or an int."""
    if isinstance(value, bool):
        raise CoalgebraError([f"coefficient {value!r} is not a rational"])
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError):
            pass
    raise CoalgebraError([f"coefficient {value!r} is not a rational string 'p/q'"])


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class CoalgebraSpec:
    """Finite-type coideal of a coaugmented differential graded coalgebra.

    Parameters
    ----------
    basis : tuple of BasisElement
        Basis of the coideal, each of positive degree.
    differential : mapping
        ``id -> {id: Fraction}``; missing ids have zero differential.
    coproduct : mapping
        ``id -> {(left, right): Fraction}`` giving the reduced coproduct.
    degree_cap : int
        Largest admissible basis degree.

    Construction only checks that ids are unique and referenced ids exist;
    use :func:`check_coalgebra` or :func:`validate_coalgebra` for the axioms.
    """

    basis: tuple[BasisElement, ...]
    differential: Mapping[str, Mapping[str, Fraction]] = field(default_factory=dict)
    coproduct: Mapping[str, Mapping[tuple[str, str], Fraction]] = field(default_factory=dict)
    degree_cap: int = DEFAULT_DEGREE_CAP

    def __post_init__(self):
        problems = []
        seen = set()
        for b in self.basis:
            if b.id in seen:
                problems.append(f"duplicate basis id {b.id}")
            seen.add(b.id)
        for src, terms in self.differential.items():
            if src not in seen:
                problems.append(f"differential of undeclared element {src}")
            for tgt in terms:
                if tgt not in seen:
                    problems.append(f"differential of {src} references undeclared element {tgt}")
        for src, terms in self.coproduct.items():
            if src not in seen:
                problems.append(f"coproduct of undeclared element {src}")
            for left, right in terms:
                for x in (left, right):
                    if x not in seen:
                        problems.append(f"coproduct of {src} references undeclared element {x}")
        if problems:
            raise CoalgebraError(problems)
        # drop explicit zeros so equality and serialization are canonical
        diff = {k: {t: Fraction(c) for t, c in v.items() if c != 0} for k, v in self.differential.items()}
        cop = {k: {t: Fraction(c) for t, c in v.items() if c != 0} for k, v in self.coproduct.items()}
        object.__setattr__(self, "differential", {k: v for k, v in diff.items() if v})
        object.__setattr__(self, "coproduct", {k: v for k, v in cop.items() if v})
        object.__setattr__(self, "_degrees", {b.id: b.degree for b in self.basis})

    def __hash__(self):
        return hash((self.basis, self.degree_cap, _freeze(self.differential), _freeze(self.coproduct)))

    def __eq__(self, other):
        if not isinstance(other, CoalgebraSpec):
            return NotImplemented
        return (
            set(self.basis) == set(other.basis)
            and self.degree_cap == other.degree_cap
            and self.differential == other.differential
            and self.coproduct == other.coproduct
        )

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.basis)

    def degree(self, ident: str) -> int:
        return self._degrees[ident]

    def d(self, ident: str) -> Mapping[str, Fraction]:
        return self.differential.get(ident, {})

    def delta(self, ident: str) -> Mapping[tuple[str, str], Fraction]:
        return self.coproduct.get(ident, {})


def _freeze(nested):
    return tuple(sorted((k, tuple(sorted(v.items()))) for k, v in nested.items()))


def _add(acc: dict, key, value):
    total = acc.get(key, 0) + value
    if total == 0:
        acc.pop(key, None)
    else:
        acc[key] = total


@dataclass
class CheckEntry:
    invariant: str
    passed: bool
    failures: list[str] = field(default_factory=list)


@dataclass
class CheckReport:
    entries: list[CheckEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def violations(self) -> list[str]:
        return [msg for e in self.entries for msg in e.failures]

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "invariants": [
                {"invariant": e.invariant, "pass": e.passed, "failures": e.failures} for e in self.entries
            ],
        }


def _sorted_basis(spec: CoalgebraSpec) -> list[BasisElement]:
    # order-independent: always walk the basis sorted by (degree, id)
    return sorted(spec.basis, key=lambda b: (b.degree, b.id))


def check_coalgebra(spec: CoalgebraSpec) -> CheckReport:
    """Check every structure axiom exactly and report pass/fail per invariant."""
    basis = _sorted_basis(spec)
    deg = spec.degree

    degrees = CheckEntry("positive degrees within cap", True)
    for b in basis:
        if b.degree < 1 or b.degree > spec.degree_cap:
            degrees.failures.append(f"degree {b.degree} of {b.id} outside [1, {spec.degree_cap}]")

    d_degree = CheckEntry("differential lowers degree by 1", True)
    for b in basis:
        for t in sorted(spec.d(b.id)):
            if deg(t) != b.degree - 1:
                d_degree.failures.append(f"∂{b.id} has term {t} of degree {deg(t)} (expected {b.degree - 1})")

    cop_degree = CheckEntry("coproduct preserves degree", True)
    for b in basis:
        for left, right in sorted(spec.delta(b.id)):
            if deg(left) + deg(right) != b.degree:
                cop_degree.failures.append(
                    f"Δ̄{b.id} has term {left}⊗{right} of total degree {deg(left) + deg(right)}"
                )

    d_squared = CheckEntry("∂² = 0", True)
    for b in basis:
        acc: dict = {}
        for t, c in spec.d(b.id).items():
            for u, c2 in spec.d(t).items():
                _add(acc, u, c * c2)
        if acc:
            d_squared.failures.append(f"∂² ≠ 0 at {b.id}")

    leibniz = CheckEntry("co-Leibniz Δ̄∂ = (∂⊗1 + 1⊗∂)Δ̄", True)
    for b in basis:
        lhs: dict = {}
        for t, c in spec.d(b.id).items():
            for pair, c2 in spec.delta(t).items():
                _add(lhs, pair, c * c2)
        rhs: dict = {}
        for (left, right), c in spec.delta(b.id).items():
            for t, c2 in spec.d(left).items():
                _add(rhs, (t, right), c * c2)
            sign = -1 if deg(left) % 2 else 1
            for t, c2 in spec.d(right).items():
                _add(rhs, (left, t), sign * c * c2)
        if lhs != rhs:
            leibniz.failures.append(f"co-Leibniz fails at {b.id}")

    coassoc = CheckEntry("coassociativity of Δ̄", True)
    for b in basis:
        lhs = {}
        rhs = {}
        for (left, right), c in spec.delta(b.id).items():
            for (a1, a2), c2 in spec.delta(left).items():
                _add(lhs, (a1, a2, right), c * c2)
            for (b1, b2), c2 in spec.delta(right).items():
                _add(rhs, (left, b1, b2), c * c2)
        if lhs != rhs:
            coassoc.failures.append(f"coassociativity fails at {b.id}")

    entries = [degrees, d_degree, cop_degree, d_squared, leibniz, coassoc]
    for e in entries:
        e.passed = not e.failures
    return CheckReport(entries)


def validate_coalgebra(spec: CoalgebraSpec) -> CoalgebraSpec:
    report = check_coalgebra(spec)
    if not report.passed:
        raise CoalgebraError(report.violations)
    return spec


def coalgebra_from_dict(data: Mapping, degree_cap: int = DEFAULT_DEGREE_CAP, validate: bool = True) -> CoalgebraSpec:
    """Build a spec from the JSON object layout (``basis``/``differential``/``coproduct``)."""
    problems = []
    try:
        basis = tuple(BasisElement(str(b["id"]), int(b["degree"])) for b in data["basis"])
        differential: dict = {}
        for entry in data.get("differential", []):
            src = str(entry["from"])
            terms = differential.setdefault(src, {})
            for term in entry["terms"]:
                _add(terms, str(term["to"]), parse_rational(term["coeff"]))
        coproduct: dict = {}
        for entry in data.get("coproduct", []):
            src = str(entry["from"])
            terms = coproduct.setdefault(src, {})
            for term in entry["terms"]:
                _add(terms, (str(term["left"]), str(term["right"])), parse_rational(term["coeff"]))
    except CoalgebraError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CoalgebraError([f"parse error: {exc!r}"]) from exc
    for b in basis:
        if b.degree < 1 or b.degree > degree_cap:
            problems.append(f"degree {b.degree} of {b.id} outside [1, {degree_cap}]")
    if problems:
        raise CoalgebraError(problems)
    spec = CoalgebraSpec(basis, differential, coproduct, degree_cap)
    return validate_coalgebra(spec) if validate else spec


def load_coalgebra(text: str, degree_cap: int = DEFAULT_DEGREE_CAP, validate: bool = True) -> CoalgebraSpec:
    """Parse coalgebra JSON text and validate every axiom exactly.

    Raises
    ------
    CoalgebraError
        On parse errors or violated invariants; ``violations`` names each
        offending basis element.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CoalgebraError([f"parse error: {exc}"]) from exc
    if not isinstance(data, dict):
        raise CoalgebraError(["parse error: top level must be an object"])
    return coalgebra_from_dict(data, degree_cap=degree_cap, validate=validate)


def coalgebra_to_dict(spec: CoalgebraSpec) -> dict:
    return {
        "basis": [{"id": b.id, "degree": b.degree} for b in spec.basis],
        "differential": [
            {"from": b.id, "terms": [{"to": t, "coeff": format_rational(c)} for t, c in sorted(spec.d(b.id).items())]}
            for b in spec.basis
            if spec.d(b.id)
        ],
        "coproduct": [
            {
                "from": b.id,
                "terms": [
                    {"left": left, "right": right, "coeff": format_rational(c)}
                    for (left, right), c in sorted(spec.delta(b.id).items())
                ],
            }
            for b in spec.basis
            if spec.delta(b.id)
        ],
    }


def dump_coalgebra(spec: CoalgebraSpec) -> str:
    return json.dumps(coalgebra_to_dict(spec), indent=2, ensure_ascii=False) + "\n"


def make_coalgebra(
    degrees: Mapping[str, int] | Iterable[tuple[str, int]],
    differential: Mapping | None = None,
    coproduct: Mapping | None = None,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    validate: bool = True,
) -> CoalgebraSpec:
    """Convenience constructor from Python mappings with int/str/Fraction coefficients."""
    items = degrees.items() if isinstance(degrees, Mapping) else degrees
    basis = tuple(BasisElement(k, int(v)) for k, v in items)
    diff = {k: {t: parse_rational(c) for t, c in v.items()} for k, v in (differential or {}).items()}
    cop = {k: {t: parse_rational(c) for t, c in v.items()} for k, v in (coproduct or {}).items()}
    problems = [
        f"degree {b.degree} of {b.id} outside [1, {degree_cap}]" for b in basis if not 1 <= b.degree <= degree_cap
    ]
    if problems:
        raise CoalgebraError(problems)
    spec = CoalgebraSpec(basis, diff, cop, degree_cap)
    return validate_coalgebra(spec) if validate else spec
