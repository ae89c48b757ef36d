"""Proposed offline approach against NPEDF, ASAP-HUF, ASAP-LUF and EA."""
from _common import parser, run

from greenedge.harness import DEFAULT_BETAS

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--rho", type=float, nargs="+", default=[0.4])
    args = p.parse_args()
    run("baselines", args, rhos=tuple(args.rho), beta_max=DEFAULT_BETAS,
        schedulers=("offline", "baseline:npedf", "baseline:asap_huf", "baseline:asap_luf", "baseline:ea"))
