"""Model parameter records shared by the encoder and the reference solver."""

from dataclasses import dataclass


@dataclass(frozen=True)
class TV:
    """Spinless nearest-neighbor model: hopping t, density-density V."""

    t: float
    V: float


@dataclass(frozen=True)
class Hubbard:
    """Spinful model: hopping t per spin species, on-site U."""

    t: float
    U: float
