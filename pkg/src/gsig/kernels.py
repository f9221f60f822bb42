"""Spectral kernels: real functions of the Laplacian eigenvalue.

Every kernel clamps its argument to ``[0, lambda_max]`` before evaluation
(``lambda_max`` only when supplied), so Chebyshev sampling and eigenvalue
round-off never extrapolate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError


class Kernel:
    nonnegative: bool = False

    def _eval(self, lam: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, lam, lambda_max: float | None = None):
        scalar = np.ndim(lam) == 0
        x = np.asarray(lam, dtype=float)
        x = np.clip(x, 0.0, np.inf if lambda_max is None else float(lambda_max))
        v = np.asarray(self._eval(x), dtype=float)
        v = np.broadcast_to(v, x.shape).copy()
        if self.nonnegative:
            np.maximum(v, 0.0, out=v)
        return float(v) if scalar else v

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} has no JSON form")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __mul__(self, other: "Kernel") -> "Kernel":
        return FunctionKernel(lambda x, a=self, b=other: a(x) * b(x), name="product")


@dataclass(frozen=True)
class Heat(Kernel):
    """``exp(-tau * lam)``."""
    tau: float

    def _eval(self, lam):
        return np.exp(-self.tau * lam)

    def to_dict(self):
        return {"type": "heat", "tau": self.tau}


@dataclass(frozen=True)
class Gaussian(Kernel):
    """``exp(-(lam - mu)^2 / sigma2)``."""
    mu: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InputError("gaussian kernel needs sigma2 > 0")

    def _eval(self, lam):
        return np.exp(-((lam - self.mu) ** 2) / self.sigma2)

    def to_dict(self):
        return {"type": "gaussian", "mu": self.mu, "sigma2": self.sigma2}


@dataclass(frozen=True)
class InverseLambda(Kernel):
    """``1 / (lam + delta)``, the spectrum implied by a Laplacian smoothness prior."""
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise InputError("inverse_lambda kernel needs delta > 0")

    def _eval(self, lam):
        return 1.0 / (lam + self.delta)

    def to_dict(self):
        return {"type": "inverse_lambda", "delta": self.delta}


@dataclass(frozen=True)
class Bandlimit(Kernel):
    """Indicator of ``lam <= cutoff``."""
    cutoff: float

    def _eval(self, lam):
        return (lam <= self.cutoff).astype(float)

    def to_dict(self):
        return {"type": "bandlimit", "cutoff": self.cutoff}


@dataclass(frozen=True)
class Constant(Kernel):
    c: float

    def _eval(self, lam):
        return np.full_like(lam, self.c)

    def to_dict(self):
        return {"type": "constant", "c": self.c}


@dataclass(frozen=True)
class Polynomial(Kernel):
    """``sum_k coeffs[k] * lam**k``."""
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def _eval(self, lam):
        return np.polynomial.polynomial.polyval(lam, self.coeffs)

    def to_dict(self):
        return {"type": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class RaisedCosine(Kernel):
    """1 up to ``flat``, cosine roll-off to 0 at ``stop``, 0 beyond."""
    flat: float
    stop: float

    def __post_init__(self):
        if not self.stop > self.flat >= 0:
            raise InputError("raised_cosine needs 0 <= flat < stop")

    def _eval(self, lam):
        t = np.clip((lam - self.flat) / (self.stop - self.flat), 0.0, 1.0)
        return 0.5 * (1.0 + np.cos(np.pi * t))

    def to_dict(self):
        return {"type": "raised_cosine", "flat": self.flat, "stop": self.stop}


@dataclass(frozen=True)
class Sampled(Kernel):
    """Piecewise-linear interpolation of knots, constant beyond the end knots."""
    lams: np.ndarray
    values: np.ndarray
    nonnegative: bool = False

    def __post_init__(self):
        lams = np.asarray(self.lams, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        if lams.size == 0 or lams.shape != vals.shape:
            raise InputError("sampled kernel needs matching, non-empty knot arrays")
        if np.any(np.diff(lams) <= 0):
            raise InputError("sampled kernel knots must be strictly increasing")
        if not (np.all(np.isfinite(lams)) and np.all(np.isfinite(vals))):
            raise InputError("sampled kernel knots must be finite")
        lams.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "lams", lams)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_knots(cls, knots, nonnegative: bool = False) -> "Sampled":
        k = np.asarray(knots, dtype=float).reshape(-1, 2)
        return cls(k[:, 0], k[:, 1], nonnegative)

    @property
    def knots(self) -> np.ndarray:
        return np.column_stack([self.lams, self.values])

    def _eval(self, lam):
        # interp ignores the lambda_max clamp: beyond the knots it is flat anyway
        return np.interp(lam, self.lams, self.values)

    def __eq__(self, other):
        return (isinstance(other, Sampled) and self.nonnegative == other.nonnegative
                and np.array_equal(self.lams, other.lams)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def to_dict(self):
        d = {"type": "sampled", "knots": self.knots.tolist()}
        if self.nonnegative:
            d["nonnegative"] = True
        return d


@dataclass(frozen=True, eq=False)
class FunctionKernel(Kernel):
    """Wraps an arbitrary vectorised callable; has no JSON form."""
    fn: Callable = field(repr=False)
    name: str = "function"
    nonnegative: bool = False

    def _eval(self, lam):
        return self.fn(lam)


def from_callable(fn: Callable, name: str = "function", nonnegative: bool = False) -> Kernel:
    return FunctionKernel(fn, name, nonnegative)


_PARAMS = {
    "heat": (Heat, ("tau",)),
    "gaussian": (Gaussian, ("mu", "sigma2")),
    "inverse_lambda": (InverseLambda, ("delta",)),
    "bandlimit": (Bandlimit, ("cutoff",)),
    "constant": (Constant, ("c",)),
    "polynomial": (Polynomial, ("coeffs",)),
    "raised_cosine": (RaisedCosine, ("flat", "stop")),
}


def kernel_from_dict(d: dict) -> Kernel:
    """Parse the JSON form, e.g. ``{"type": "heat", "tau": 2.0}``."""
    if not isinstance(d, dict) or "type" not in d:
        raise InputError("kernel spec must be an object with a 'type' field")
    kind = d["type"]
    if kind == "sampled":
        if "knots" not in d:
            raise InputError("sampled kernel is missing field 'knots'")
        return Sampled.from_knots(d["knots"], bool(d.get("nonnegative", False)))
    if kind not in _PARAMS:
        raise InputError(f"unknown kernel type {kind!r}")
    cls, names = _PARAMS[kind]
    missing = [n for n in names if n not in d]
    if missing:
        raise InputError(f"{kind} kernel is missing field {missing[0]!r}")
    args = [d[n] if n == "coeffs" else float(d[n]) for n in names]
    return cls(*args)


def kernel_from_json(text: str) -> Kernel:
    return kernel_from_dict(json.loads(text))
