"""Numerical certification of differential Harnack inequalities for
semilinear heat equations ``u_t = Δu + H(u)``."""

from harnackcheck.equations import (
    CurvatureParams,
    EquationSpec,
    Linear,
    Logarithmic,
    PowerSum,
    big_H,
    h,
    h1,
    h2,
)

__all__ = [
    "CurvatureParams",
    "EquationSpec",
    "Linear",
    "Logarithmic",
    "PowerSum",
    "big_H",
    "h",
    "h1",
    "h2",
]

__version__ = "0.1.0"
