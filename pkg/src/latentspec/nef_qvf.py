"""The six one-parameter exponential families with quadratic variance.

Each family carries its mean-variance relation V[y] = b0 + b1*m + b2*m^2,
the canonical link, and a per-observation transform v(.) whose expectation
equals the variance.  That last identity is what lets a column average of
v(y) estimate the column-average variance without knowing the means.

All means are in MEAN parameterization: the binomial mean is s*p (not the
probability p), the negative binomial mean is s*p/(1-p), and the gamma mean
is shape/rate.  Callers working in other parameterizations convert first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, OutOfSupportError

FAMILY_KINDS = ("normal", "poisson", "binomial", "negbin", "gamma", "ghs")
_NEEDS_S = frozenset({"binomial", "negbin", "gamma", "ghs"})


@dataclass(frozen=True)
class Family:
    """One of the six distributions, with auxiliary parameter ``s``.

    ``s`` is the binomial trial count, negative binomial size, gamma shape,
    or GHS shape; it is absent for normal (unit variance) and poisson.
    """

    kind: str
    s: float | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise InvalidParameterError(f"unknown family kind {self.kind!r}")
        if self.kind in _NEEDS_S:
            if self.s is None or not np.isfinite(self.s) or self.s <= 0:
                raise InvalidParameterError(
                    f"family {self.kind!r} needs a positive parameter s"
                )
            if self.kind == "binomial":
                if float(self.s) != int(self.s) or int(self.s) < 2:
                    raise InvalidParameterError(
                        "binomial trial count s must be an integer >= 2"
                    )
            object.__setattr__(self, "s", float(self.s))
        elif self.s is not None:
            raise InvalidParameterError(
                f"family {self.kind!r} takes no parameter s"
            )


def normal() -> Family:
    return Family("normal")


def poisson() -> Family:
    return Family("poisson")


def binomial(s) -> Family:
    return Family("binomial", s)


def negbin(s) -> Family:
    return Family("negbin", s)


def gamma(s) -> Family:
    return Family("gamma", s)


def ghs(s) -> Family:
    return Family("ghs", s)


@dataclass(frozen=True)
class QvfCoefficients:
    """Coefficients of the quadratic mean-variance relation."""

    b0: float
    b1: float
    b2: float

    def __post_init__(self):
        if self.b2 == -1.0:
            raise InvalidParameterError("b2 = -1 is not admissible")


def qvf_coefficients(f: Family) -> QvfCoefficients:
    """Return (b0, b1, b2) with variance = b0 + b1*mean + b2*mean^2."""
    s = f.s
    table = {
        "normal": (1.0, 0.0, 0.0),
        "poisson": (0.0, 1.0, 0.0),
        "binomial": (0.0, 1.0, -1.0 / s) if s else None,
        "negbin": (0.0, 1.0, 1.0 / s) if s else None,
        "gamma": (0.0, 0.0, 1.0 / s) if s else None,
        "ghs": (s, 0.0, 1.0 / s) if s else None,
    }
    return QvfCoefficients(*table[f.kind])


def v_value(f: Family, y):
    """Per-observation transform with E[v(y)] equal to the variance of y.

    Accepts scalars or arrays (applied elementwise).  Agrees with
    (1 + b2)^-1 * (b0 + b1*y + b2*y^2) built from ``qvf_coefficients``.
    """
    y = np.asarray(y, dtype=float)
    s = f.s
    if f.kind == "normal":
        out = np.ones_like(y)
    elif f.kind == "poisson":
        out = y.copy()
    elif f.kind == "binomial":
        out = (s * y - y * y) / (s - 1.0)
    elif f.kind == "negbin":
        out = (s * y + y * y) / (s + 1.0)
    elif f.kind == "gamma":
        out = y * y / (1.0 + s)
    else:  # ghs
        out = (s * s + y * y) / (1.0 + s)
    if out.ndim == 0:
        return float(out)
    return out


def _check_mean_region(f: Family, theta: np.ndarray) -> None:
    s = f.s
    kind = f.kind
    if kind == "poisson" and np.any(theta < 0):
        raise OutOfSupportError("poisson mean must be >= 0")
    if kind == "binomial" and (np.any(theta < 0) or np.any(theta > s)):
        raise OutOfSupportError(f"binomial mean must lie in [0, s={s:g}]")
    if kind == "negbin" and np.any(theta < 0):
        raise OutOfSupportError("negative binomial mean must be >= 0")
    if kind == "gamma" and np.any(theta <= 0):
        raise OutOfSupportError("gamma mean must be > 0")


def variance_from_mean(f: Family, theta):
    """Family variance at the given mean(s); raises outside the mean region."""
    arr = np.asarray(theta, dtype=float)
    _check_mean_region(f, arr)
    c = qvf_coefficients(f)
    out = c.b0 + c.b1 * arr + c.b2 * arr * arr
    if out.ndim == 0:
        return float(out)
    return out


def natural_link(f: Family, theta):
    """Canonical link evaluated at the mean; domain is the open mean region."""
    arr = np.asarray(theta, dtype=float)
    s = f.s
    kind = f.kind
    if kind == "normal":
        out = arr + 0.0
    elif kind == "poisson":
        if np.any(arr <= 0):
            raise OutOfSupportError("poisson link needs mean > 0")
        out = np.log(arr)
    elif kind == "binomial":
        if np.any(arr <= 0) or np.any(arr >= s):
            raise OutOfSupportError(f"binomial link needs mean in (0, s={s:g})")
        p = arr / s
        out = np.log(p / (1.0 - p))
    elif kind == "negbin":
        if np.any(arr <= 0):
            raise OutOfSupportError("negative binomial link needs mean > 0")
        out = np.log(arr / (s + arr))
    elif kind == "gamma":
        if np.any(arr <= 0):
            raise OutOfSupportError("gamma link needs mean > 0")
        out = -1.0 / arr
    else:  # ghs
        out = np.arctan(arr / s)
    if out.ndim == 0:
        return float(out)
    return out


def data_support_mask(f: Family, y) -> np.ndarray:
    """Boolean mask of entries inside the family's observation support.

    Counts (poisson, binomial, negbin) must be nonnegative integers, the
    binomial additionally capped at s; gamma observations must be positive.
    Normal and GHS accept any finite real.
    """
    arr = np.asarray(y, dtype=float)
    kind = f.kind
    if kind in ("normal", "ghs"):
        return np.isfinite(arr)
    if kind == "gamma":
        return np.isfinite(arr) & (arr > 0)
    ok = np.isfinite(arr) & (arr >= 0) & (arr == np.floor(arr))
    if kind == "binomial":
        ok &= arr <= f.s
    return ok


def family_to_dict(f: Family) -> dict:
    """JSON-ready mapping, e.g. {"family": "binomial", "s": 20}."""
    out = {"family": f.kind}
    if f.s is not None:
        out["s"] = int(f.s) if float(f.s).is_integer() else f.s
    return out


def family_from_dict(d: dict) -> Family:
    """Inverse of ``family_to_dict``; unknown keys are rejected."""
    extra = set(d) - {"family", "s"}
    if extra:
        raise InvalidParameterError(f"unknown family keys {sorted(extra)}")
    if "family" not in d:
        raise InvalidParameterError("missing 'family' key")
    return Family(str(d["family"]).lower(), d.get("s"))
