"""Joint phase and dephasing estimation with one-axis-twisted spin-squeezed states."""

__version__ = "0.1.0"

from .channel import ChannelParams, dual_pauli, kraus_ops, single_qubit_qfi  # noqa: E402
from .moments import MomentTable, SqueezingConfig, epsilon_angle, oat_moment, roat_moments  # noqa: E402

__all__ = [
    "ChannelParams",
    "MomentTable",
    "SqueezingConfig",
    "dual_pauli",
    "epsilon_angle",
    "kraus_ops",
    "oat_moment",
    "roat_moments",
    "single_qubit_qfi",
]
