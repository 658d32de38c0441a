"""Von Neumann entropy of a Gaussian mode as a function of its symplectic
eigenvalue, together with the series expansion used by the perturbative
solvers.

All entropies are in bits.  The vacuum sits at symplectic eigenvalue 1/2,
so every function here has domain nu >= 1/2.
"""

from __future__ import annotations

import math
from enum import Enum

_LN2 = math.log(2.0)

# Below this distance from 1/2 the x*log2(x) term is treated as its limit 0.
_VACUUM_TOL = 1e-12


class ApproxOrder(Enum):
    """Truncation level used when solving the stationarity equations."""

    EXACT = "exact"
    ZEROTH = "zeroth"
    FIRST = "first"


def g_entropy(nu: float) -> float:
    """Entropy (bits) of a Gaussian mode with symplectic eigenvalue ``nu``.

    Returns (nu+1/2)*log2(nu+1/2) - (nu-1/2)*log2(nu-1/2); the second term
    is a removable singularity at nu = 1/2 and is taken as 0 there.
    """
    if nu < 0.5 - 1e-12:
        raise ValueError(f"symplectic eigenvalue {nu} below the vacuum bound 1/2")
    lo = nu - 0.5
    hi = nu + 0.5
    if lo <= _VACUUM_TOL:
        return hi * math.log2(hi)
    return hi * math.log2(hi) - lo * math.log2(lo)


def g_photons(m: float) -> float:
    """Entropy (bits) of a thermal-like mode holding ``m`` mean photons.

    Convenience wrapper: the capacity formulas quote entropies at photon
    number nu - 1/2 rather than at the symplectic eigenvalue itself.
    """
    return g_entropy(m + 0.5)


def g_series(nu: float, terms: int) -> float:
    """Series form of ``g_entropy`` truncated after ``terms`` correction terms.

    g = log2(nu) + (1/ln2)*[1 - (1/2) * sum_{j=1..terms} (2 nu)^(-2j)/(j(2j+1))]

    ``terms=0`` is the zeroth-order (pure logarithm) approximation.  The
    series converges for nu > 1/2; the logarithm part diverges at nu = 1/2.
    """
    if nu <= 0.5:
        raise ValueError(f"series expansion requires nu > 1/2, got {nu}")
    if terms < 0:
        raise ValueError("terms must be non-negative")
    acc = 0.0
    z = 1.0 / (2.0 * nu) ** 2
    zj = 1.0
    for j in range(1, terms + 1):
        zj *= z
        acc += zj / (j * (2 * j + 1))
    return math.log2(nu) + (1.0 - 0.5 * acc) / _LN2


def g_derivative(nu: float) -> float:
    """Derivative of ``g_entropy`` with respect to nu: log2((nu+1/2)/(nu-1/2)).

    Monotone decreasing, diverging as nu -> 1/2+ and vanishing at infinity.
    """
    if nu <= 0.5:
        raise ValueError(f"derivative requires nu > 1/2, got {nu}")
    return math.log2((nu + 0.5) / (nu - 0.5))


def nu_g_derivative(nu: float, order: ApproxOrder = ApproxOrder.EXACT) -> float:
    """The factor nu * dg/dnu entering the stationarity equations.

    EXACT evaluates it literally.  ZEROTH replaces it by its large-nu limit
    1/ln2.  FIRST keeps the leading 1/nu^2 correction of the series.
    """
    if order is ApproxOrder.EXACT:
        return nu * g_derivative(nu)
    if order is ApproxOrder.ZEROTH:
        return 1.0 / _LN2
    # d/dnu of the one-term series: log2(nu) + (1/ln2)(1 - 1/(24 nu^2))
    return (1.0 + 1.0 / (12.0 * nu * nu)) / _LN2
