"""Numerics for sl(n, R): flags, the flow of exp(tH), charts and index pairs."""
from ._kernels import HAVE_NUMBA, active_backend
from .flags import (
    Flag,
    FlowDegenerationError,
    FlowTimeoutError,
    SplitElement,
    TrajectoryRecord,
    UnclassifiableFlagError,
    classify,
    classify_frames,
    component_of,
    coordinate_flag,
    distance,
    embed_in_s,
    flow,
    flow_frames,
    flow_to_limit,
    flow_to_limit_frames,
    perm_of,
    random_frames,
    signature_of,
    stable_set_frames,
    trace_trajectory,
)
from .linearization import (
    ChartError,
    LinChart,
    chart_coordinates,
    lin_chart,
    linearized_eigenvalues,
    psi,
    psi_frames,
    transport,
)
from .indexpair import IndexPairReport, RadiusError, index_pair
from .counterexample import isotropy_invariance, paper_counterexample, sl3_counterexample
