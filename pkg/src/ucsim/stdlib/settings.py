"""Every (environment, protocol) pairing shipped with the library, with its ideal side."""

from __future__ import annotations

from dataclasses import dataclass

from ..protocol import Environment, Protocol, Simulator, compose_protocols
from .environments import (
    build_bias_attack_environment,
    build_corrupt_bob_environment,
    build_ct_environment,
    build_honest_environment,
)
from .protocols import build_bc, build_bc_module, build_ct, build_ct_module, build_ideal_bc, build_ideal_sot, build_real_sot
from .simulators import build_bc_simulator, build_real_sot_simulator


@dataclass(frozen=True, eq=False)
class StdlibSetting:
    name: str
    environment: Environment
    protocol: Protocol
    ideal: Protocol
    simulator: Simulator
    expected_advantage: float


def stdlib_settings(k: int) -> list[StdlibSetting]:
    """Commitment over ideal and dealer OT, and coin tossing over commitment."""
    bc = build_bc(k)
    bc_dealer = build_bc(k, build_real_sot(k))
    bc_over_ideal = compose_protocols(bc_dealer.name + "~", build_bc_module(k, build_real_sot(k)), build_ideal_sot(k))
    ct = build_ct(bc)
    ct_tilde = compose_protocols("~CT", build_ct_module(), build_ideal_bc(k))
    bias = 2.0 ** -(k + 1)
    out = []
    envs = [
        ("bias-attack", build_bias_attack_environment(k), bias),
        ("honest", build_honest_environment(k), 0.0),
        ("corrupt-bob", build_corrupt_bob_environment(k), 0.0),
    ]
    for name, e, adv in envs:
        out.append(StdlibSetting(f"{name}|BC", e, bc, build_ideal_bc(k, bc), build_bc_simulator(e, k), adv))
        out.append(StdlibSetting(f"{name}|BC-dealer", e, bc_dealer, bc_over_ideal, build_real_sot_simulator(e, k), 0.0))
    for name, e, adv in [
        ("bias-attack/ct", build_bias_attack_environment(k, with_ct=False), bias),
        ("honest/ct", build_bias_attack_environment(k, corrupt=False, with_ct=False), 0.0),
        ("ct-honest", build_ct_environment(), 0.0),
    ]:
        out.append(StdlibSetting(f"{name}|CT", e, ct, ct_tilde, build_bc_simulator(e, k), adv))
    return out
