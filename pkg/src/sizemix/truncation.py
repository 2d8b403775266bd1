"""Doubly truncated ("tt") model variants and empirical trimming windows.

Mixtures are truncated component by component and then convex-combined,
which in general differs from truncating the pooled mixture.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import _BaseDist
from .errors import DomainError, MassTooSmall
from .mixtures import MixtureParams

__all__ = [
    "TruncationWindow",
    "TruncatedModel",
    "truncate_pdf",
    "truncate_mixture",
    "empirical_window",
]

_MIN_MASS = 1e-300


@dataclass(frozen=True)
class TruncationWindow:
    """Support window [a, b] in sales units, 0 < a < b."""

    a: float
    b: float

    def __post_init__(self):
        if not 0 < self.a < self.b < math.inf:
            raise DomainError("window requires 0 < a < b < inf")

    @property
    def y_min(self):
        return math.log(self.a)

    @property
    def y_max(self):
        return math.log(self.b)


@dataclass(frozen=True)
class TruncatedModel(_BaseDist):
    """A base density renormalized to a TruncationWindow, zero outside it."""

    base: object
    window: TruncationWindow

    def __post_init__(self):
        if self.mass <= _MIN_MASS:
            raise MassTooSmall(
                f"window [{self.window.a}, {self.window.b}] captures "
                f"negligible probability"
            )

    @property
    def _use_sf(self):
        # when the window sits in the base's upper tail the CDF difference
        # cancels catastrophically; survival differences keep precision there
        return self.base.sf_y(self.window.y_min) < self.base.cdf_y(self.window.y_min)

    @property
    def mass(self):
        if self._use_sf:
            m = self.base.sf_y(self.window.y_min) - self.base.sf_y(self.window.y_max)
        else:
            m = self.base.cdf_y(self.window.y_max) - self.base.cdf_y(self.window.y_min)
        return float(m)

    def _inside_y(self, y):
        y = np.asarray(y, dtype=float)
        return (y >= self.window.y_min) & (y <= self.window.y_max)

    def log_pdf_y(self, y):
        y = np.asarray(y, dtype=float)
        out = self.base.log_pdf_y(y) - math.log(self.mass)
        out = np.where(self._inside_y(y), out, -np.inf)
        return out[()] if out.ndim == 0 else out

    def cdf_y(self, y):
        y = np.asarray(y, dtype=float)
        yc = np.clip(y, self.window.y_min, self.window.y_max)
        if self._use_sf:
            num = self.base.sf_y(self.window.y_min) - self.base.sf_y(yc)
        else:
            num = self.base.cdf_y(yc) - self.base.cdf_y(self.window.y_min)
        out = np.clip(num / self.mass, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out


def truncate_pdf(base, window):
    """Renormalize a single-family density to [a, b] per the tt construction."""
    return TruncatedModel(base=base, window=window)


def truncate_mixture(params, window):
    """Truncate each mixture component to the window, then re-mix.

    For a single component this coincides with :func:`truncate_pdf`.  A
    MassTooSmall raised by any component propagates.
    """
    if not isinstance(params, MixtureParams):
        return truncate_pdf(params, window)
    return MixtureParams(
        components=tuple(TruncatedModel(c, window) for c in params.components),
        weights=params.weights,
    )


def empirical_window(data, lower_frac=0.10, upper_frac=0.001, convention="floor"):
    """Trim the sample tails and return (window, survivors).

    With the default "floor" convention the strictly lowest
    floor(n*lower_frac) and strictly highest floor(n*upper_frac)
    observations are dropped and [a, b] is the min/max of the survivors
    (bounds inclusive).  The "ceil" convention rounds the drop counts up
    instead.  The rounding the trimming percentages imply is not unique,
    hence the switch.
    """
    if lower_frac < 0 or upper_frac < 0 or lower_frac + upper_frac >= 1:
        raise DomainError("need 0 <= lower_frac + upper_frac < 1")
    x = np.sort(np.asarray(data, dtype=float))
    n = x.size
    rnd = math.floor if convention == "floor" else math.ceil
    n_lo = rnd(n * lower_frac)
    n_hi = rnd(n * upper_frac)
    survivors = x[n_lo : n - n_hi]
    if survivors.size == 0:
        raise DomainError("no observations survive the trimming")
    return TruncationWindow(a=float(survivors[0]), b=float(survivors[-1])), survivors
