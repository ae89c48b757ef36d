"""Online revenue% against the share of slots hit by sudden solar drops."""
from _common import parser, run

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--rho", type=float, default=0.2)
    p.add_argument("--target", choices=["solar", "tasks", "both"], default="solar")
    args = p.parse_args()
    run("spikes", args, rhos=(args.rho,), beta_max=(0, 2000, "inf"), schedulers=("online",),
        deviations=((5.0, 5.0),), spike_rates=(0.0, 2.0, 4.0, 8.0, 12.0), spike_target=args.target)
