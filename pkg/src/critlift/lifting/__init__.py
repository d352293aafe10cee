from .probe import ProbeResult, sample_independence_probe
from .saddle import (
    LiftCertificate,
    Witness,
    certify_saddle,
    classify_lift,
    find_level_set_witnesses,
    negative_curvature_witnesses,
)
from .synthesis import (
    HiddenConstruction,
    NonCriticalSynthesis,
    Synthesis,
    WideForm,
    build_sample_matrix,
    critical_sample_size,
    extend_hidden_params,
    extra_row_value,
    make_wide_form,
    saddle_sample_size,
    synthesize_critical_outputs,
    synthesize_noncritical_outputs,
    synthesize_wide_critical_outputs,
)
from .varphi import varphi, varphi_grad, varphi_zero_set_1d
