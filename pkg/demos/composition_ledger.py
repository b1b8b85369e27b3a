"""Swapping real modules for ideal ones, one tree node at a time.

Coin tossing (CT) calls bit commitment (BC), which calls a dealer-based
string OT (RealSOT).  Working bottom-up, each node is replaced by its ideal
functionality and the price of that step is recorded in an epsilon ledger.
The end-to-end advantage of the whole real stack against the fully ideal
one never exceeds the ledger total.

A protocol graph where two callers share a callee is not a tree.  The last
part shows how such a diamond is rewritten into a chain before composing.
"""

from ucsim.composition import ProtocolDag, compose_bottom_up, dag_to_tree, preorder
from ucsim.stdlib import build_bias_attack_environment, ct_certificates, ct_tree


def main():
    k = 3
    env = build_bias_attack_environment(k, with_ct=False)
    res = compose_bottom_up(ct_tree(k), ct_certificates(k), env, n=k)
    print(f"{'node':8} {'certified by':12} {'epsilon':>8} {'measured':>9} {'|E|':>4}")
    for e in res.ledger.entries:
        print(f"{e.node:8} {e.definition_id:12} {e.epsilon:8.4f} {e.measured:9.4f} {e.env_size:4}")
    print(f"ledger total {res.ledger.total:.4f}; end-to-end advantage {res.end_to_end.advantage:.4f}")

    honest = compose_bottom_up(ct_tree(k), ct_certificates(k), build_bias_attack_environment(k, corrupt=False, with_ct=False), n=k)
    print(f"same tree, nobody corrupted: end-to-end advantage {honest.end_to_end.advantage:.4f}")

    dag = ProtocolDag.of("root", {"root": ["R1", "R2"], "R1": ["Q"], "R2": ["Q"]})
    out = dag_to_tree(dag, {n: f"I({n})" for n in ("Q", "R1", "R2")})
    print("\ndiamond root -> R1, R2 -> Q becomes the chain", " -> ".join(preorder(out.tree)))
    for node in ("R1", "R2"):
        print(f"  ideal replacing {node}: {' + '.join(out.ideals[node])}")


if __name__ == "__main__":
    main()
