"""``plots <kind> --in ... --out image.(png|pdf)`` batch figure renderer."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_convergence, plot_cross_section, plot_decay, plot_heatmap


def main(argv=None):
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("cross_section", help="density along x2 = const")
    p.add_argument("--in", dest="input", required=True, help="snapshot CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--overlay-profile", action="store_true")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--normalize", action="store_true")

    p = sub.add_parser("heatmap", help="pseudocolor field map")
    p.add_argument("--in", dest="input", required=True, help="snapshot CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--column", default="rho", choices=("rho", "c"))

    p = sub.add_parser("convergence", help="log-log error curves")
    p.add_argument("--in", dest="input", required=True, help="errors CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", default="vs_h", choices=("vs_h", "vs_dt"))

    p = sub.add_parser("decay", help="semilog decay of a diagnostics column")
    p.add_argument("--in", dest="input", required=True, help="diagnostics CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--column", default="entropy")
    p.add_argument("--theoretical-rate", type=float, default=None)

    args = parser.parse_args(argv)
    try:
        if args.kind == "cross_section":
            info = plot_cross_section(args.input, args.out, y0=args.y0,
                                      overlay_profile=args.overlay_profile,
                                      s=args.s, d=args.d,
                                      normalize=args.normalize)
        elif args.kind == "heatmap":
            info = plot_heatmap(args.input, args.out, column=args.column)
        elif args.kind == "convergence":
            info = plot_convergence(args.input, args.out, mode=args.mode)
        else:
            info = plot_decay(args.input, args.out, column=args.column,
                              theoretical_rate=args.theoretical_rate)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(info)
    return 0


if __name__ == "__main__":
    sys.exit(main())
