"""Total revenue against battery capacity for each workload intensity."""
from _common import parser, run

from greenedge.harness import DEFAULT_BETAS, DEFAULT_RHOS

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    run("battery", args, rhos=DEFAULT_RHOS, beta_max=DEFAULT_BETAS, schedulers=("offline",))
