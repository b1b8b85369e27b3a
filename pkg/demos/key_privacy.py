"""Why key-privacy metrics alone are a weak security notion.

An attacker who forces both parties to the all-zero key learns nothing new
from her view, so the conditioned mutual information vanishes.  The
uniformity distance and the combined entropy criterion do notice that the
key is worthless.
"""

import itertools

from ucsim.privacy import (
    KeyExperimentRecord,
    combined_privacy,
    conditioned_mutual_information,
    correctness,
    uniformity_distance,
)


def main():
    m = 3
    keys = ["".join(b) for b in itertools.product("01", repeat=m)]
    cases = {
        "forced zero key": KeyExperimentRecord.of([("0" * m, "0" * m, "quiet", m, 1.0)]),
        "uniform, unseen": KeyExperimentRecord.of((k, k, "quiet", m, 2.0**-m) for k in keys),
        "uniform, first bit leaked": KeyExperimentRecord.of((k, k, k[0], m, 2.0**-m) for k in keys),
    }
    print(f"{'m=3 key':28} {'I(K;V|M)':>9} {'uniformity':>11} {'combined':>9} {'Pr(KA!=KB)':>11}")
    for name, r in cases.items():
        print(
            f"{name:28} {conditioned_mutual_information(r):9.4f} {uniformity_distance(r):11.4f}"
            f" {combined_privacy(r):9.4f} {correctness(r):11.4f}"
        )


if __name__ == "__main__":
    main()
