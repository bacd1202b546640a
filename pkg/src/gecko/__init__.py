"""Level-set optimisation of piecewise-constant quantum control pulses.

Given a pulse that already implements a target gate, move it along directions
in the kernel of the pulse-to-unitary Jacobian (which leave the gate unchanged
to first order) to improve a secondary quality such as spectral content,
smoothness, robustness or duration.
"""

__version__ = "0.1.0"

from .engine import GeckoConfig, GeckoTrace, gecko_run, refine_and_smooth
from .errors import (
    BudgetError,
    DegenerateStepError,
    FormatError,
    GeckoError,
    InputError,
    NumericalError,
    RestoreFailedError,
    StepRejectedError,
)
from .kernel import kernel_basis, project_gradient, pulse_jacobian, take_step
from .operators import (
    algebra_project,
    expm_directional_derivative,
    hermitian_expm,
    hs_metric,
    pauli_operator,
)
from .pulse import (
    GateTarget,
    HamiltonianSpec,
    PulseParams,
    fidelity,
    gate_target,
    preset,
    pulse_unitary,
    refine_pulse,
    segment_unitary,
    tfim1,
    tfim2,
)
from .pulse_io import load_pulse, save_pulse
from .quality import (
    CompositeQuality,
    DriftQuality,
    FilterQuality,
    PathQuality,
    RobustQuality,
    RobustSpec,
    SmoothQuality,
)
from .restore import RestoreConfig, fidelity_gradient, random_pulse, restore
from .spectral import dst1_forward, dst1_inverse, gaussian_baseline, make_filter
