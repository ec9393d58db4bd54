"""Distributed consensus of probability measures on the line in the Wasserstein metric."""

__version__ = "0.1.0"

from .barycenter import (
    FixedPointReport,
    GaussianND,
    barycenter_empirical_1d,
    barycenter_gaussian_1d,
    barycenter_gaussian_nd,
    barycenter_quantile,
    geodesic_interpolate,
    objective,
)
from .diagnostics import DiagnosticsRecord, RateFit, envelope, fit_rate, hull_membership, lyapunov
from .engine import ConsensusConfig, ConsensusState, RunResult, WeightScheme, predicted_limit, run, step
from .measures import (
    EmpiricalMeasure,
    Gaussian1D,
    GridSpec,
    QuantileMeasure,
    cdf,
    discrete_w_oracle,
    gaussian_w2,
    quantile,
    to_quantile,
    validate,
    wasserstein,
)
from .network import (
    NetworkSnapshot,
    TopologySchedule,
    is_connected,
    jointly_connected,
    lazy_uniform_weights,
    metropolis_weights,
    spectral_report,
    union_graph,
)
