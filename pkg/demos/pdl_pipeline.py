"""From a protocol description to an exact distribution.

The bundled listings describe string OT, bit commitment and coin tossing
step by step.  Compiled, they behave exactly like the hand-built stdlib
protocols, down to the last bit of every probability.  A description in
which two roles write the same channel with nothing ordering them fails
validation before it is ever run.
"""

from ucsim.circuit import validate_circuit
from ucsim.engine import run_exact
from ucsim.pdl import PdlError, compile_listing, compile_text, format_document, load_listing, parse
from ucsim.protocol import bind_overall_setting, compose_protocols
from ucsim.stdlib import build_bc, build_bias_attack_environment

CLASH = """protocol Clash
role P1 participant Alice corruptible
role P2 participant Bob corruptible
step 1
P1: picks x ∈_R {0,1}; send input x to Z;
step 2
P2: picks x ∈_R {0,1}; send input x to Z;
"""


def main():
    doc = parse(load_listing("bc"))
    print(format_document(doc))

    k = 4
    sot = compile_listing("sot", k)
    bc = compose_protocols("BC", compile_listing("bc", k, sot.channels), sot)
    env = build_bias_attack_environment(k)
    compiled = run_exact(bind_overall_setting(env, bc), ["Z"])
    built = run_exact(bind_overall_setting(env, build_bc(k)), ["Z"])
    print(f"k={k}: compiled Pr(Z=0) = {compiled[0]!r}, builder Pr(Z=0) = {built[0]!r}")

    try:
        p = compile_text(CLASH)
        report = validate_circuit(p.circuit)
        print(f"\nclash compiled; circuit valid: {report.ok}")
        for v in report.violations[:2]:
            print(" ", v.message)
    except PdlError as err:
        print("\nclash rejected:", err)


if __name__ == "__main__":
    main()
