"""Curvatures and pinching quantities of surfaces of revolution.

The surface is X(t, theta) = (x(t) cos theta, x(t) sin theta, y(t)).  Graph
profiles (x, gamma(x)) are the special case x(t) = t.  The normal is the inward
one, N = (y' cos theta, y' sin theta, -x') / |c'|, which makes a sphere centred
at the origin have k1 = k2 = 1/R and support <X, N> = -R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .defaults import DEFAULTS
from .errors import ArgError, DomainError


@dataclass(frozen=True)
class GraphJet:
    x: float
    gamma: float
    gamma_p: float
    gamma_pp: float


@dataclass(frozen=True)
class ParamJet:
    x: float
    y: float
    xp: float
    yp: float
    xpp: float
    ypp: float

    @classmethod
    def from_graph(cls, j: GraphJet) -> "ParamJet":
        return cls(j.x, j.gamma, 1.0, j.gamma_p, 0.0, j.gamma_pp)

    def graph_slopes(self) -> tuple[float, float]:
        """(gamma', gamma'') of the same curve viewed as a graph over x."""
        if self.xp == 0:
            return math.inf, math.inf
        gp = self.yp / self.xp
        gpp = (self.xp * self.ypp - self.yp * self.xpp) / self.xp ** 3
        return gp, gpp


Jet = Union[GraphJet, ParamJet]


@dataclass(frozen=True)
class CurvatureSample:
    k1: float
    k2: float
    H: float
    K: float
    support: float
    tangential_sq: float
    Q: Optional[float]

    @property
    def x2(self) -> float:
        return (self.k1 - self.k2) ** 2


def curvature_graph(j: GraphJet) -> tuple[float, float]:
    if not j.x > 0:
        raise DomainError(f"graph curvature needs x > 0, got {j.x}")
    w = 1.0 + j.gamma_p ** 2
    k1 = -j.gamma_p / (j.x * math.sqrt(w))
    k2 = -j.gamma_pp / w ** 1.5
    return k1, k2


def curvature_param(j: ParamJet) -> tuple[float, float]:
    speed2 = j.xp ** 2 + j.yp ** 2
    if not speed2 > 0:
        raise DomainError("irregular point: x'^2 + y'^2 = 0")
    if not j.x > 0:
        raise DomainError(f"parametric curvature needs x > 0, got {j.x}")
    k1 = -j.yp / (j.x * math.sqrt(speed2))
    k2 = (j.xpp * j.yp - j.xp * j.ypp) / speed2 ** 1.5
    return k1, k2


def support_quantities(j: GraphJet) -> tuple[float, float]:
    """Return (<X, N>, |X|^2 - <X, N>^2) for a graph jet."""
    if not j.x > 0:
        raise DomainError(f"support quantities need x > 0, got {j.x}")
    w = 1.0 + j.gamma_p ** 2
    support = (j.x * j.gamma_p - j.gamma) / math.sqrt(w)
    tangential_sq = (j.x + j.gamma * j.gamma_p) ** 2 / w
    return support, tangential_sq


def support_quantities_param(j: ParamJet) -> tuple[float, float]:
    speed2 = j.xp ** 2 + j.yp ** 2
    if not speed2 > 0:
        raise DomainError("irregular point: x'^2 + y'^2 = 0")
    support = (j.x * j.yp - j.y * j.xp) / math.sqrt(speed2)
    tangential_sq = (j.x * j.xp + j.y * j.yp) ** 2 / speed2
    return support, tangential_sq


def is_umbilic(H: float, x2: float, length_scale: float = 1.0) -> bool:
    return x2 <= DEFAULTS["umbilic_rel"] * max(H * H, 1.0 / length_scale ** 2)


def curvature_sample(j: Jet, length_scale: float = 1.0) -> CurvatureSample:
    if isinstance(j, GraphJet):
        k1, k2 = curvature_graph(j)
        support, tsq = support_quantities(j)
    else:
        k1, k2 = curvature_param(j)
        support, tsq = support_quantities_param(j)
    H = k1 + k2
    x2 = (k1 - k2) ** 2
    Q = None
    if not is_umbilic(H, x2, length_scale):
        Q = abs(H) * math.sqrt(tsq) / math.sqrt(x2)
    return CurvatureSample(k1, k2, H, k1 * k2, support, tsq, Q)


def pinching_ratio(c: CurvatureSample, length_scale: float = 1.0) -> Optional[float]:
    """|H| sqrt(|X|^2 - <X,N>^2) / sqrt(H^2 - 4K), or None at umbilics (0/0)."""
    x2 = c.x2
    if is_umbilic(c.H, x2, length_scale):
        return None
    return abs(c.H) * math.sqrt(c.tangential_sq) / math.sqrt(x2)


def pinching_epsilon_sup(samples: Iterable[CurvatureSample], lam: float) -> float:
    """Largest epsilon for which the upper pinching hypothesis holds on ``samples``.

    The hypothesis K <= (1 - eps lam^2 (|X|^2 - <X,N>^2)) H^2 / 4 is equivalent
    to Q <= 1 / (|lam| sqrt(eps)) wherever H^2 - 4K > 0, so the answer is
    1 / (lam^2 sup Q^2).  Returns ``math.inf`` when every sample is umbilic or
    sup Q = 0.
    """
    if lam == 0:
        raise ArgError("lambda = 0: the pinching hypothesis does not involve epsilon")
    qs = [s.Q for s in samples if s.Q is not None]
    qmax = max(qs, default=0.0)
    if qmax == 0:
        return math.inf
    return 1.0 / (lam * lam * qmax * qmax)
