"""Speed functions Psi(x1, x2) with x1 = H and x2 = H^2 - 4K.

A curvature flow moving with normal speed W(k1, k2) is described here through
the symmetric change of variables x1 = k1 + k2, x2 = (k1 - k2)^2.  Every family
below is homogeneous, Psi(a x1, a^2 x2) = a^beta Psi(x1, x2), except possibly a
``Custom`` speed.

All arithmetic goes through numpy scalar operators, so evaluation in
``np.longdouble`` stays in extended precision (the Hopf checks rely on this).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import ClassVar


from .defaults import DEFAULTS
from .errors import ArgError, DomainError

_MAX_DENOMINATOR = 10_000


def odd_fraction(p) -> Fraction | None:
    """Return ``p`` as a Fraction with odd denominator, or None if it is not one."""
    if isinstance(p, Fraction):
        fr = p
    else:
        p = float(p)
        fr = Fraction(p).limit_denominator(_MAX_DENOMINATOR)
        if abs(float(fr) - p) > 1e-12 * max(1.0, abs(p)):
            return None
    return fr if fr.denominator % 2 == 1 else None


def real_power(base, p):
    """Real power with the odd-root convention for negative bases.

    ``base ** (m/q)`` with q odd is ``sign(base)**m * |base|**(m/q)``.  Any other
    exponent on a negative base raises DomainError rather than picking a
    complex branch.
    """
    if base > 0:
        return base ** float(p)
    if base == 0:
        if float(p) > 0:
            return base * 0
        if float(p) == 0:
            return base * 0 + 1
        raise DomainError(f"0 raised to non-positive power {p}")
    fr = odd_fraction(p)
    if fr is None:
        raise DomainError(f"negative base {float(base):g} with exponent {p} has no real odd-root value")
    mag = (-base) ** float(fr)
    return -mag if fr.numerator % 2 else mag


def _exponent(value) -> Fraction | float:
    return value if isinstance(value, Fraction) else float(value)


def clamp_x2(x2):
    """Round tiny negative x2 (round-off near umbilics) up to zero."""
    if x2 < 0:
        if x2 < -DEFAULTS["x2_clamp"]:
            raise DomainError(f"x2 = {float(x2):g} < 0: (k1 - k2)^2 cannot be negative")
        return x2 * 0
    return x2


@dataclass(frozen=True, kw_only=True)
class SpeedFunction:
    """Base class; ``lam`` is the flow constant lambda of the soliton equation."""

    lam: float = 1.0

    family: ClassVar[str] = ""

    # -- to be provided by families -------------------------------------
    @property
    def beta(self) -> float | None:
        raise NotImplementedError

    def _psi(self, x1, x2):
        raise NotImplementedError

    def _grad(self, x1, x2):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    # -- public surface ---------------------------------------------------
    def __call__(self, x1, x2):
        return self._psi(x1, clamp_x2(x2))

    def eval(self, x1, x2):
        return self(x1, x2)

    def grad(self, x1, x2):
        """Return (dPsi/dx1, dPsi/dx2)."""
        return self._grad(x1, clamp_x2(x2))

    def psi10(self):
        return self(1.0, 0.0)

    def homogeneity_residual(self, x1, x2, a):
        if not a > 0:
            raise ArgError("scale factor a must be positive")
        if self.beta is None:
            raise ArgError(f"{self.family} speed has no declared homogeneity degree")
        return self(a * x1, a * a * x2) - a ** self.beta * self(x1, x2)

    def parabolicity(self, x1, x2):
        """Psi_1^2 - 4 x2 Psi_2^2; positive means the flow is parabolic there."""
        x2 = clamp_x2(x2)
        g1, g2 = self._grad(x1, x2)
        return g1 * g1 - 4 * x2 * g2 * g2

    def from_principal(self, k1, k2):
        d = k1 - k2
        return self(k1 + k2, d * d)

    def psi2_over_psi1(self, x1, x2):
        g1, g2 = self.grad(x1, x2)
        if g1 == 0:
            raise DomainError("Psi_1 vanishes")
        return g2 / g1

    def with_lambda(self, lam: float) -> "SpeedFunction":
        return replace(self, lam=lam)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params(),
                "beta": None if self.beta is None else float(self.beta),
                "lambda": float(self.lam)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True, kw_only=True)
class MeanCurvature(SpeedFunction):
    family: ClassVar[str] = "mean-curvature"

    @property
    def beta(self):
        return 1.0

    def _psi(self, x1, x2):
        return x1

    def _grad(self, x1, x2):
        return x1 * 0 + 1, x1 * 0


@dataclass(frozen=True, kw_only=True)
class PowerMean(SpeedFunction):
    """Psi = H^power.  Negative H is admitted only for odd-denominator powers."""

    power: Fraction | float = 2.0
    family: ClassVar[str] = "power-mean"

    def __post_init__(self):
        object.__setattr__(self, "power", _exponent(self.power))
        if float(self.power) == 0:
            raise ArgError("power must be non-zero")

    @property
    def beta(self):
        return float(self.power)

    def _check(self, x1):
        if x1 <= 0 and odd_fraction(self.power) is None:
            raise DomainError(f"H^{self.power} requires H > 0")
        if x1 == 0 and float(self.power) < 0:
            raise DomainError("H = 0 with a negative power")

    def _psi(self, x1, x2):
        self._check(x1)
        return real_power(x1, self.power)

    def _grad(self, x1, x2):
        self._check(x1)
        p = float(self.power)
        if x1 == 0 and p < 1:
            raise DomainError("dPsi/dH is singular at H = 0")
        d = p * real_power(x1, self.power - 1) if p != 1 else x1 * 0 + 1
        return d, x1 * 0

    def params(self):
        return {"power": _exp_to_json(self.power)}


@dataclass(frozen=True, kw_only=True)
class HarmonicMeanPower(SpeedFunction):
    """Psi = (K/H)^alpha written as ((x1^2 - x2) / (4 x1))^alpha."""

    alpha: Fraction | float = 1.0
    family: ClassVar[str] = "harmonic-mean-power"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _exponent(self.alpha))

    @classmethod
    def from_mn(cls, m: int, n: int, **kw):
        if m < 1 or n < 1:
            raise ArgError("m and n must be positive integers")
        return cls(alpha=Fraction(m, 2 * n - 1), **kw)

    @property
    def beta(self):
        return float(self.alpha)

    def _base(self, x1, x2):
        if x1 == 0:
            raise DomainError("K/H is undefined at H = 0")
        return (x1 * x1 - x2) / (4 * x1)

    def _psi(self, x1, x2):
        return real_power(self._base(x1, x2), self.alpha)

    def _dbase(self, x1, x2):
        return 0.25 + x2 / (4 * x1 * x1), -1 / (4 * x1)

    def _grad(self, x1, x2):
        base = self._base(x1, x2)
        a = float(self.alpha)
        if base == 0 and a < 1:
            raise DomainError("Psi_1 is singular at K = 0; use psi2_over_psi1 / inv_psi1")
        outer = a * real_power(base, self.alpha - 1) if a != 1 else base * 0 + 1
        d1, d2 = self._dbase(x1, x2)
        return outer * d1, outer * d2

    def psi2_over_psi1(self, x1, x2):
        x2 = clamp_x2(x2)
        if x1 == 0:
            raise DomainError("K/H is undefined at H = 0")
        return -x1 / (x1 * x1 + x2)

    def inv_psi1(self, x1, x2):
        """1/Psi_1 in closed form; finite at K = 0 where Psi_1 itself blows up."""
        x2 = clamp_x2(x2)
        base = self._base(x1, x2)
        d1, _ = self._dbase(x1, x2)
        return real_power(base, 1 - self.alpha) / (float(self.alpha) * d1)

    def params(self):
        return {"alpha": _exp_to_json(self.alpha)}


@dataclass(frozen=True, kw_only=True)
class GaussPower(SpeedFunction):
    """Psi = K^alpha with K = (x1^2 - x2)/4."""

    alpha: Fraction | float = 1.0
    family: ClassVar[str] = "gauss-power"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _exponent(self.alpha))

    @property
    def beta(self):
        return 2.0 * float(self.alpha)

    def _psi(self, x1, x2):
        return real_power((x1 * x1 - x2) / 4, self.alpha)

    def _grad(self, x1, x2):
        k = (x1 * x1 - x2) / 4
        a = float(self.alpha)
        if k == 0 and a < 1:
            raise DomainError("K^alpha is not differentiable at K = 0 for alpha < 1")
        outer = a * real_power(k, self.alpha - 1) if a != 1 else k * 0 + 1
        return outer * x1 / 2, -outer / 4

    def params(self):
        return {"alpha": _exp_to_json(self.alpha)}


@dataclass(frozen=True, kw_only=True)
class QuadraticHK(SpeedFunction):
    """W = a H^2 + b K, i.e. Psi = a x1^2 + b (x1^2 - x2)/4."""

    a: float = 1.0
    b: float = 1.0
    family: ClassVar[str] = "quadratic-hk"

    @property
    def beta(self):
        return 2.0

    def _psi(self, x1, x2):
        return self.a * x1 * x1 + self.b * (x1 * x1 - x2) / 4

    def _grad(self, x1, x2):
        return x1 * (2 * self.a + self.b / 2), x1 * 0 - self.b / 4

    def parabolic_boundary(self) -> float:
        """Coefficient m such that the flow is parabolic for K > m H^2."""
        if self.b == 0:
            raise ArgError("b = 0 gives a K-independent indicator")
        return -2 * self.a * (2 * self.a + self.b) / self.b ** 2

    def params(self):
        return {"a": float(self.a), "b": float(self.b)}


@dataclass(frozen=True, kw_only=True)
class NormASquared(QuadraticHK):
    """|A|^2 = k1^2 + k2^2 = (x1^2 + x2)/2, the a=1, b=-2 member of QuadraticHK."""

    a: float = field(default=1.0, init=False)
    b: float = field(default=-2.0, init=False)
    family: ClassVar[str] = "norm-a-squared"

    def _psi(self, x1, x2):
        return (x1 * x1 + x2) / 2

    def params(self):
        return {}


@dataclass(frozen=True, kw_only=True)
class Custom(SpeedFunction):
    """Sum of power-wrapped polynomials.

    ``terms`` is a tuple of ``(coef, power, poly)`` where ``poly`` is a tuple of
    monomials ``(c, p, q)``; the speed is

        sum coef * (sum c * x1^p * x2^q) ** power

    ``beta`` is the declared homogeneity degree, or None for non-homogeneous
    speeds (sphere radii are then found by root search only).
    """

    terms: tuple = ()
    declared_beta: float | None = None
    family: ClassVar[str] = "custom"

    def __post_init__(self):
        norm = []
        for coef, power, poly in self.terms:
            mons = tuple((float(c), _exponent(p), _exponent(q)) for c, p, q in poly)
            if not mons:
                raise ArgError("empty polynomial in custom speed")
            norm.append((float(coef), _exponent(power), mons))
        if not norm:
            raise ArgError("custom speed needs at least one term")
        object.__setattr__(self, "terms", tuple(norm))

    @property
    def beta(self):
        return self.declared_beta

    @staticmethod
    def _mono(x1, x2, c, p, q):
        v = c * real_power(x1, p) if float(p) != 0 else c + x1 * 0
        if float(q) != 0:
            v = v * real_power(x2, q)
        return v

    def _psi(self, x1, x2):
        total = x1 * 0
        for coef, power, mons in self.terms:
            inner = sum(self._mono(x1, x2, c, p, q) for c, p, q in mons)
            total = total + coef * (inner if float(power) == 1 else real_power(inner, power))
        return total

    def _grad(self, x1, x2):
        g1 = x1 * 0
        g2 = x1 * 0
        for coef, power, mons in self.terms:
            inner = sum(self._mono(x1, x2, c, p, q) for c, p, q in mons)
            d1 = d2 = x1 * 0
            for c, p, q in mons:
                if float(p) != 0:
                    d1 = d1 + float(p) * self._mono(x1, x2, c, p - 1, q)
                if float(q) != 0:
                    d2 = d2 + float(q) * self._mono(x1, x2, c, p, q - 1)
            if float(power) == 1:
                outer = 1
            else:
                if inner == 0 and float(power) < 1:
                    raise DomainError("power wrapper is not differentiable at 0")
                outer = float(power) * real_power(inner, power - 1)
            g1 = g1 + coef * outer * d1
            g2 = g2 + coef * outer * d2
        return g1, g2

    def params(self):
        return {"terms": [[c, _exp_to_json(pw), [[m, _exp_to_json(p), _exp_to_json(q)] for m, p, q in mons]]
                          for c, pw, mons in self.terms]}


def _exp_to_json(p):
    if isinstance(p, Fraction) and p.denominator != 1:
        return [p.numerator, p.denominator]
    return float(p)


def _exp_from_json(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ArgError(f"rational exponent must be [num, den], got {v!r}")
        return Fraction(int(v[0]), int(v[1]))
    return float(v)


FAMILIES = {cls.family: cls for cls in
            (MeanCurvature, PowerMean, HarmonicMeanPower, GaussPower, QuadraticHK, NormASquared, Custom)}


def from_dict(d: dict) -> SpeedFunction:
    """Inverse of ``SpeedFunction.to_dict``."""
    if not isinstance(d, dict) or "family" not in d:
        raise ArgError("speed JSON needs a 'family' key")
    family = d["family"]
    if family not in FAMILIES:
        raise ArgError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    params = dict(d.get("params") or {})
    lam = float(d.get("lambda", 1.0))
    try:
        if family == "power-mean":
            f = PowerMean(power=_exp_from_json(params.pop("power")), lam=lam)
        elif family == "harmonic-mean-power":
            if "m" in params:
                f = HarmonicMeanPower.from_mn(int(params.pop("m")), int(params.pop("n")), lam=lam)
            else:
                f = HarmonicMeanPower(alpha=_exp_from_json(params.pop("alpha")), lam=lam)
        elif family == "gauss-power":
            f = GaussPower(alpha=_exp_from_json(params.pop("alpha")), lam=lam)
        elif family == "quadratic-hk":
            f = QuadraticHK(a=float(params.pop("a")), b=float(params.pop("b")), lam=lam)
        elif family == "custom":
            terms = [(c, _exp_from_json(pw), [(m, _exp_from_json(p), _exp_from_json(q)) for m, p, q in mons])
                     for c, pw, mons in params.pop("terms")]
            beta = d.get("beta")
            f = Custom(terms=tuple(terms), declared_beta=None if beta is None else float(beta), lam=lam)
        else:
            f = FAMILIES[family](lam=lam)
    except KeyError as exc:
        raise ArgError(f"missing parameter {exc} for family {family!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ArgError):
            raise
        raise ArgError(f"bad parameters for {family!r}: {exc}") from None
    if params:
        raise ArgError(f"unexpected parameters {sorted(params)} for family {family!r}")
    beta = d.get("beta")
    if beta is not None and f.beta is not None and abs(float(beta) - f.beta) > 1e-12 * max(1.0, abs(f.beta)):
        raise ArgError(f"declared beta {beta} disagrees with family degree {f.beta}")
    return f


def from_json(text: str) -> SpeedFunction:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArgError(f"malformed speed JSON: {exc}") from None
    return from_dict(d)
