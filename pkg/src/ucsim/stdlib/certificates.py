"""Certificates and the commitment-over-dealer-OT protocol tree."""

from __future__ import annotations

from ..composition import ProtocolTree, SecurityCertificate
from ..protocol import EMPTY_SIMULATOR, compose_protocols
from .protocols import _check_k, build_bc_module, build_ct_module, build_ideal_bc, build_ideal_sot, build_real_sot
from .simulators import build_bc_simulator, build_real_sot_simulator


def bc_epsilon(n, size=0) -> float:
    """Advantage bound 2^-(n+1) of commitment over ideal OT with n-bit strings."""
    return 2.0 ** -(n + 1)


def bc_certificate(k: int) -> SecurityCertificate:
    return SecurityCertificate("BC", build_ideal_bc(k), lambda e: build_bc_simulator(e, k), bc_epsilon, "BC")


def real_sot_certificate(k: int) -> SecurityCertificate:
    return SecurityCertificate("RealSOT", build_ideal_sot(k), lambda e: build_real_sot_simulator(e, k), lambda n, size=0: 0.0, "RealSOT")


def bc_tree(k: int) -> ProtocolTree:
    """Root BC (the two commitment roles) calling the dealer-based OT leaf."""
    _check_k(k)
    sot = build_real_sot(k)
    return ProtocolTree("BC", {"BC": ["RealSOT"]}, {"BC": build_bc_module(k, sot), "RealSOT": sot})


def bc_certificates(k: int) -> dict[str, SecurityCertificate]:
    return {"BC": bc_certificate(k), "RealSOT": real_sot_certificate(k)}


def ct_self_certificate(k: int) -> SecurityCertificate:
    """Coin tossing certified against its own tilde protocol (CT over ideal BC).

    The library has no coin-tossing simulator; this certificate holds
    trivially with the empty simulator and epsilon 0, and lets the CT layer
    sit at the root of a tree whose lower nodes carry the real bounds.
    """
    tilde = compose_protocols("~CT", build_ct_module(), build_ideal_bc(k))
    return SecurityCertificate("CT", tilde, lambda e: EMPTY_SIMULATOR, lambda n, size=0: 0.0, "CT~")


def ct_tree(k: int) -> ProtocolTree:
    """CT calling BC calling the dealer-based OT."""
    _check_k(k)
    sot = build_real_sot(k)
    modules = {"CT": build_ct_module(), "BC": build_bc_module(k, sot), "RealSOT": sot}
    return ProtocolTree("CT", {"CT": ["BC"], "BC": ["RealSOT"]}, modules)


def ct_certificates(k: int) -> dict[str, SecurityCertificate]:
    return {"CT": ct_self_certificate(k), **bc_certificates(k)}
