from abc import ABC, abstractmethod

import numpy as np


class SlabFamily(ABC):
    """Base class and registry for the slab densities of the spike-and-slab prior.

    A family is a symmetric unimodal density gamma on the real line. The
    built-in families are:
    - heavy_tail: gamma(u) = (delta/2) (1 + |u|)^(-1-delta), delta in (0, 2)
    - cauchy: gamma(u) = 1 / (pi (1 + u^2))
    - laplace: gamma(u) = exp(-|u|/b) / (2b)

    All family classes must have a 'family_name' class variable that uniquely
    identifies them; subclasses register themselves on definition.
    """

    # Registry of families, key = cls.family_name, value = cls
    registry = {}

    def __init_subclass__(cls, **kwargs):
        """Enforce family descriptive attributes on subclasses, register them"""
        family_attrs = ["family_name"]
        for attr in family_attrs:
            if not hasattr(cls, attr):
                raise RuntimeError("SlabFamily subclass must have `" + attr + "` attribute")

        super().__init_subclass__(**kwargs)
        __class__.registry[cls.family_name] = cls

    def __init__(self, delta=None, scale=1.0):
        self.delta = delta
        self.scale = scale

    @abstractmethod
    def log_density(self, u):
        """log gamma(u), vectorised."""

    @abstractmethod
    def tail_mass(self, radius):
        """Mass of {|u| > radius} in closed form."""

    @abstractmethod
    def log_slope_bound(self):
        """sup_{u>0} |d/du log gamma(u)|."""

    def density(self, u):
        return np.exp(self.log_density(u))

    def closed_form_convolution(self, x):
        """Exact (phi * gamma)(x) when the family has one, else None."""
        return None


def normalize_family(name):
    """Accept 'HeavyTail', 'heavy-tail', 'heavy_tail' and the like."""
    key = str(name).replace("_", "").replace("-", "").lower()
    for family_name in SlabFamily.registry:
        if family_name.replace("_", "") == key:
            return family_name
    return None


from . import heavy_tail, cauchy, laplace  # noqa: E402,F401  registers the built-in families
