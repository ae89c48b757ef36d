"""Total revenue against workload intensity for SNB, SIB and SFB."""
from _common import parser, run

from greenedge.harness import DEFAULT_RHOS

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    # SNB ignores the battery, SFB needs a finite one, SIB an unbounded one
    run("rho", args, rhos=DEFAULT_RHOS, beta_max=(0, 7000, "inf"), schedulers=("snb", "offline"))
