"""Weight systems, charges and the diagonal symmetry group <J1, J2, sigma>."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .arith import frac

# Fermat K3 weight systems (w0, w1, w2, w3) with x^2 + y^a + z^b + w^c and
# their Nikulin invariants (N, N').
ADMISSIBLE = {
    (3, 1, 1, 1): (1, 10),
    (5, 2, 2, 1): (2, 6),
    (15, 10, 3, 2): (4, 4),
    (21, 14, 6, 1): (6, 6),
    (9, 6, 2, 1): (3, 7),
    (4, 2, 1, 1): (1, 9),
    (10, 5, 4, 1): (2, 6),
    (6, 3, 2, 1): (1, 7),
    (6, 4, 1, 1): (2, 10),
    (12, 8, 3, 1): (3, 7),
}

VARS = ("X", "Y", "Z", "x", "y", "z", "w")
E_IDX = (0, 1, 2)
K_IDX = (3, 4, 5, 6)


class InvalidSpec(ValueError):
    pass


class Curve(str, Enum):
    QUARTIC = "quartic"
    CUBIC_SEXTIC = "cubic-sextic"

    @property
    def weights(self) -> tuple[int, int, int]:
        return (2, 1, 1) if self is Curve.QUARTIC else (3, 2, 1)

    @property
    def exponents(self) -> tuple[int, int, int]:
        return (2, 4, 4) if self is Curve.QUARTIC else (2, 3, 6)


def is_admissible_weight_table(w) -> tuple[bool, tuple[int, int] | None]:
    w = tuple(int(a) for a in w)
    if w in ADMISSIBLE:
        return True, ADMISSIBLE[w]
    return False, None


@dataclass(frozen=True)
class OrbifoldSpec:
    curve: Curve
    k3_weights: tuple[int, int, int, int]

    def __post_init__(self):
        ok, _ = is_admissible_weight_table(self.k3_weights)
        if not ok:
            raise InvalidSpec(f"weights {self.k3_weights} are not in the admissible Fermat table")
        object.__setattr__(self, "curve", Curve(self.curve))
        object.__setattr__(self, "k3_weights", tuple(int(a) for a in self.k3_weights))

    @property
    def d(self) -> int:
        return 2 * self.k3_weights[0]

    @property
    def nikulin(self) -> tuple[int, int]:
        return ADMISSIBLE[self.k3_weights]

    @property
    def k3_exponents(self) -> tuple[int, int, int, int]:
        w = self.k3_weights
        return (2,) + tuple(self.d // wi for wi in w[1:])

    @property
    def exponents(self) -> tuple[int, ...]:
        return self.curve.exponents + self.k3_exponents

    @property
    def weights(self) -> tuple[int, ...]:
        return self.curve.weights + self.k3_weights

    @property
    def charges(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(1, a) for a in self.exponents)

    @property
    def label(self) -> str:
        return f"{self.curve.value}/{','.join(map(str, self.k3_weights))}"


@dataclass(frozen=True, order=True)
class GroupElement:
    theta: tuple  # of Fraction in [0, 1)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(tuple(frac(a + b) for a, b in zip(self.theta, other.theta)))

    def inverse(self) -> "GroupElement":
        return GroupElement(tuple(frac(-a) for a in self.theta))

    def __pow__(self, n: int) -> "GroupElement":
        return GroupElement(tuple(frac(n * a) for a in self.theta))

    @property
    def age(self) -> Fraction:
        return sum(self.theta, Fraction(0))

    @property
    def fixed(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.theta) if a == 0)


@dataclass(frozen=True)
class SectorInfo:
    element: GroupElement
    label: str
    fix_dim: int
    age: Fraction
    deg_W: Fraction
    narrow: bool
    i_values: tuple


def J1(spec: OrbifoldSpec) -> GroupElement:
    q = spec.charges
    return GroupElement(tuple(q[i] if i in E_IDX else Fraction(0) for i in range(7)))


def J2(spec: OrbifoldSpec) -> GroupElement:
    q = spec.charges
    return GroupElement(tuple(q[i] if i in K_IDX else Fraction(0) for i in range(7)))


def sigma() -> GroupElement:
    h = Fraction(1, 2)
    z = Fraction(0)
    return GroupElement((h, z, z, h, z, z, z))


def identity() -> GroupElement:
    return GroupElement((Fraction(0),) * 7)


def word_label(t: int, r: int, s: int) -> str:
    def p(name, n):
        return "" if n == 0 else (name if n == 1 else f"{name}^{n}")

    lab = ("σ" if t else "") + p("J1", r) + p("J2", s)
    return lab or "id"


@dataclass
class Group:
    spec: OrbifoldSpec
    elements: list = field(default_factory=list)
    words: dict = field(default_factory=dict)

    def label(self, h: GroupElement) -> str:
        return word_label(*self.words[h])

    def by_label(self, lab: str) -> GroupElement:
        for h, w in self.words.items():
            if word_label(*w) == lab:
                return h
        raise KeyError(lab)


_GROUPS: dict = {}


def build_group(spec: OrbifoldSpec) -> Group:
    """All products sigma^t J1^r J2^s, deduplicated and sorted by theta."""
    if spec in _GROUPS:
        return _GROUPS[spec]
    j1, j2, sg = J1(spec), J2(spec), sigma()
    o1 = max(spec.curve.exponents)
    o2 = spec.d
    words: dict = {}
    for t in (0, 1):
        for r in range(o1):
            for s in range(o2):
                h = (sg ** t) * (j1 ** r) * (j2 ** s)
                words.setdefault(h, (t, r, s))
    g = Group(spec, sorted(words), words)
    _GROUPS[spec] = g
    return g


def sector_info(h: GroupElement, spec: OrbifoldSpec) -> SectorInfo:
    q = spec.charges
    fixed = h.fixed
    age = h.age
    # two Calabi-Yau factors, total charge 2
    deg = len(fixed) + 2 * (age - 2)
    i_vals = tuple(frac(t - qk) for t, qk in zip(h.theta, q))
    g = build_group(spec)
    return SectorInfo(h, g.label(h), len(fixed), age, deg, len(fixed) == 0, i_vals)
