"""Online revenue% against forecast error in solar supply and task trace."""
from _common import parser, run

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--rho", type=float, default=0.4)
    args = p.parse_args()
    levels = (0.0, 5.0, 10.0, 15.0, 20.0)
    deviations = [(d, 0.0) for d in levels] + [(0.0, d) for d in levels[1:]] + [(d, d) for d in levels[1:]]
    run("deviation", args, rhos=(args.rho,), beta_max=(0, 7000, "inf"), schedulers=("online",),
        deviations=deviations)
