"""Ready-made protocols, environments, simulators and certificates."""

from .protocols import (
    BOTTOM,
    build_bc,
    build_bc_module,
    build_ct,
    build_ct_module,
    build_ideal_bc,
    build_ideal_ct,
    build_ideal_sot,
    build_real_sot,
    xor_bottom_fn,
)
from .environments import (
    STDLIB_ENVIRONMENTS,
    build_bias_attack_environment,
    build_corrupt_bob_environment,
    build_ct_environment,
    build_honest_environment,
)
from .simulators import InvalidSimulator, build_bc_simulator, build_identity_simulator, build_real_sot_simulator
from .certificates import (
    bc_certificate,
    bc_certificates,
    bc_epsilon,
    bc_tree,
    ct_certificates,
    ct_self_certificate,
    ct_tree,
    real_sot_certificate,
)
from .settings import StdlibSetting, stdlib_settings

PROTOCOLS = {
    "ideal-sot": build_ideal_sot,
    "real-sot": build_real_sot,
    "bc": build_bc,
    "bc-real-sot": lambda k: build_bc(k, build_real_sot(k)),
    "ideal-bc": build_ideal_bc,
    "ct": lambda k: build_ct(build_bc(k)),
    "ideal-ct": lambda k=None: build_ideal_ct(),
}

__all__ = [
    "BOTTOM",
    "PROTOCOLS",
    "STDLIB_ENVIRONMENTS",
    "StdlibSetting",
    "InvalidSimulator",
    "bc_certificate",
    "bc_certificates",
    "bc_epsilon",
    "bc_tree",
    "build_bc",
    "build_bc_module",
    "build_bc_simulator",
    "build_bias_attack_environment",
    "build_corrupt_bob_environment",
    "build_ct",
    "ct_certificates",
    "ct_self_certificate",
    "ct_tree",
    "build_ct_environment",
    "build_ct_module",
    "build_honest_environment",
    "build_ideal_bc",
    "build_ideal_ct",
    "build_ideal_sot",
    "build_identity_simulator",
    "build_real_sot",
    "build_real_sot_simulator",
    "real_sot_certificate",
    "stdlib_settings",
    "xor_bottom_fn",
]
