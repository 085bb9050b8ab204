"""Estimation of integrated volatility functionals with sqrt(n) windows.

The heavy lifting lives in the compiled extension ``_volfn``; this package
re-exports its public surface.
"""

try:
    from ._volfn import (  # type: ignore[attr-defined]
        ConfigError,
        Functional,
        IoError,
        NumericalError,
        __version__,
        estimate,
        mc,
        normal_quantile,
        simulate,
        spot_cov_series,
        window_size,
    )
except ImportError:  # pragma: no cover - dev layout with the module on sys.path
    from _volfn import (  # type: ignore[no-redef]
        ConfigError,
        Functional,
        IoError,
        NumericalError,
        __version__,
        estimate,
        mc,
        normal_quantile,
        simulate,
        spot_cov_series,
        window_size,
    )

__all__ = [
    "ConfigError",
    "Functional",
    "IoError",
    "NumericalError",
    "__version__",
    "estimate",
    "mc",
    "normal_quantile",
    "simulate",
    "spot_cov_series",
    "window_size",
]
