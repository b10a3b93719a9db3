"""Command-line interface: betti, sweep, and verify subcommands.

Exit codes: 0 success, 1 usage or configuration errors, 2 verification or
agreement failures. Reports are JSON (schema 1) and CSV, written with sorted
keys and fixed column order; repeated runs with the same configuration
produce byte-identical files.

NLH_THREADS caps internal parallelism. All kernels run on pinned
single-threaded BLAS pools regardless, so results never depend on the cap;
the variable is validated and recorded for forward compatibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

USAGE_EXIT = 1
VERIFY_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_EXIT)


def _pin_threads() -> int:
    """Resolve NLH_THREADS and pin BLAS pools before numpy loads."""
    raw = os.environ.get("NLH_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise SystemExit(f"error: NLH_THREADS must be a positive integer, got {raw!r}")
    if cap < 1:
        raise SystemExit(f"error: NLH_THREADS must be >= 1, got {cap}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
        os.environ[var] = "1"
    return cap


def _build_space(args):
    from . import space as spc

    kind = args.space
    if kind == "circle":
        return spc.gen_circle(args.n, args.radius)
    if kind == "interval":
        return spc.gen_interval(args.n)
    if kind == "two_components":
        return spc.gen_two_components(args.n_each, args.gap)
    if kind == "punctured_interval":
        return spc.gen_punctured_interval(args.n, args.hole_center, args.hole_radius)
    if kind == "sphere":
        return spc.gen_sphere(args.n)
    if kind == "file":
        if not args.dist:
            raise ValueError("--space file needs --dist PATH")
        return spc.load_distance_matrix(args.dist, args.weights)
    raise ValueError(f"unknown space {kind!r}")


def _build_system(args, eps=None):
    from . import neighborhoods as nb

    eps = args.eps if eps is None else eps
    if args.system == "full":
        return nb.full_system()
    if args.system == "rips":
        if eps is None:
            raise ValueError("rips system needs --eps")
        return nb.rips_system(eps, strict=not args.closed_eps)
    if args.system == "hausdorff":
        if eps is None:
            raise ValueError("hausdorff system needs --eps")
        return nb.hausdorff_system(eps)
    raise ValueError(f"unknown system {args.system!r}")


def _build_kernel(args):
    from . import kernels as kn

    if args.kernel == "constant":
        return kn.constant_kernel(args.scale)
    if args.kernel == "fractional":
        if args.alpha is None:
            raise ValueError("fractional kernel needs --alpha")
        return kn.fractional_kernel(args.d, args.alpha, scale=args.scale)
    if args.kernel == "truncated":
        if args.alpha is None or args.eps_trunc is None:
            raise ValueError("truncated kernel needs --alpha and --eps-trunc")
        return kn.truncated_fractional_kernel(
            args.d, args.alpha, args.eps_trunc, scale=args.scale, floor=args.floor
        )
    if args.kernel == "table":
        if not args.kernel_table:
            raise ValueError("table kernel needs --kernel-table PATH")
        space = _build_space(args)
        return kn.load_kernel_table(args.kernel_table, space.n)
    raise ValueError(f"unknown kernel {args.kernel!r}")


def _write_json(payload: dict, path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def cmd_betti(args) -> int:
    from .hodge import build_weighted_complex, hodge_report
    from .cohomology import exact_betti, compare_numeric_exact

    space = _build_space(args)
    system = _build_system(args)
    kernel = _build_kernel(args)
    cx = build_weighted_complex(space, system, kernel, args.pmax)
    params = {
        "space": args.space,
        "n": space.n,
        "system": args.system,
        "eps": args.eps,
        "kernel": args.kernel,
        "alpha": args.alpha,
        "d": args.d,
        "scale": args.scale,
        "p_max": args.pmax,
    }
    betti = exact_betti(cx, parameters=params)
    reports = [hodge_report(cx, p, oracle=betti.betti[p]) for p in range(args.pmax + 1)]
    agreement = compare_numeric_exact(reports, betti)
    if args.out:
        _write_json(betti.to_json(), os.path.join(args.out, "betti_report.json"))
        _write_json(
            {
                "schema": 1,
                "degrees": [r.to_json() for r in reports],
                "agreement": agreement.to_json(),
                "parameters": params,
            },
            os.path.join(args.out, "hodge_report.json"),
        )
    for p in range(args.pmax + 1):
        flag = " flagged" if reports[p].flagged else ""
        print(
            f"p={p} betti={betti.betti[p]} harmonic={reports[p].harmonic_dim}"
            f" dim={betti.dims[p]}{flag}"
        )
    if not agreement.all_agree:
        print("DISAGREEMENT between spectral and exact counts", file=sys.stderr)
        return VERIFY_EXIT
    return 0


def cmd_sweep(args) -> int:
    import numpy as np

    from .hodge import build_weighted_complex, hodge_report
    from .cohomology import exact_betti
    from . import kernels as kn

    space = _build_space(args)
    eps_grid = [float(v) for v in args.eps_grid.split(",")]
    alpha_grid = [float(v) for v in args.alpha_grid.split(",")]
    lines = []
    header = ["eps", "alpha"]
    for p in range(args.pmax + 1):
        header += [f"betti_{p}", f"harmonic_{p}", f"min_pos_eig_{p}"]
    lines.append(",".join(header))
    rc = 0
    for eps in eps_grid:
        system = _build_system(args, eps=eps)
        for alpha in alpha_grid:
            kernel = kn.fractional_kernel(args.d, alpha, scale=args.scale)
            cx = build_weighted_complex(space, system, kernel, args.pmax)
            betti = exact_betti(cx)
            row = [f"{eps:.17g}", f"{alpha:.17g}"]
            for p in range(args.pmax + 1):
                rep = hodge_report(cx, p, oracle=betti.betti[p])
                eigs = np.asarray(rep.eigenvalues)
                pos = eigs[eigs >= rep.threshold] if eigs.size else np.empty(0)
                min_pos = float(pos[0]) if pos.size else float("nan")
                row += [str(betti.betti[p]), str(rep.harmonic_dim), f"{min_pos:.17g}"]
                if rep.harmonic_dim != betti.betti[p]:
                    rc = VERIFY_EXIT
            lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
            fh.write(text)
    print(text, end="")
    return rc


def _suite_identity():
    import numpy as np

    from .space import gen_circle, gen_interval
    from .neighborhoods import rips_system, hausdorff_system
    from .kernels import fractional_kernel
    from .cochains import Cochain, alt_project
    from .hodge import build_weighted_complex, adjoint_matrix
    from .covers import default_cover, PartitionOfUnity

    checks = []
    rng = np.random.default_rng(7)
    space = gen_circle(24)
    cx = build_weighted_complex(space, rips_system(0.8), fractional_kernel(1, 0.5), 2)
    comp = cx.coboundary(1).matrix @ cx.coboundary(0).matrix
    checks.append(("coboundary-squares-to-zero", comp.nnz == 0 or not comp.data.any(), ""))
    F = Cochain(0, cx.tuple_sets[0], rng.standard_normal(cx.dim(0)))
    G = Cochain(1, cx.tuple_sets[1], rng.standard_normal(cx.dim(1)))
    dF = cx.coboundary(0).matrix @ F.values
    aG = adjoint_matrix(cx, 0) @ G.values
    lhs = cx.inner(1, dF, G.values)
    rhs = cx.inner(0, F.values, aG)
    checks.append(
        ("adjoint-identity", abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0),
         f"|lhs-rhs|={abs(lhs - rhs):.2e}")
    )
    def ev(idx):
        return float(np.sin(idx[0]) + 2.0 * idx[1] - 0.3 * idx[0] * idx[1])

    A1 = alt_project(ev, cx.tuple_sets[1])
    A2 = alt_project(lambda idx: A1.evaluate(idx), cx.tuple_sets[1])
    checks.append(
        ("alt-idempotent", np.allclose(A1.values, A2.values, atol=1e-12), "")
    )
    ispace = gen_interval(32)
    isys = hausdorff_system(0.2)
    icx = build_weighted_complex(ispace, isys, fractional_kernel(1, 0.5), 2)
    cov = default_cover(ispace, isys)
    pou = PartitionOfUnity(cov)
    worst = 0.0
    for p in range(3):
        t = icx.tuple_sets[p].tuples
        if t.size:
            worst = max(worst, float(np.abs(pou.sums(t) - 1.0).max()))
    checks.append(("partition-sums-to-one", worst <= 1e-14, f"worst={worst:.2e}"))
    return checks


def _suite_poincare():
    from .space import gen_circle, gen_interval
    from .neighborhoods import hausdorff_system
    from .kernels import fractional_kernel
    from .hodge import build_weighted_complex
    from .covers import default_cover, poincare_suite, SliceEmptyError

    checks = []
    for name, space, eps in (
        ("circle", gen_circle(32), 0.5),
        ("interval", gen_interval(32), 0.2),
    ):
        system = hausdorff_system(eps)
        cx = build_weighted_complex(space, system, fractional_kernel(1, 0.5), 2)
        cov = default_cover(space, system)
        try:
            results = poincare_suite(cov, cx, p_check=2, max_depth=2)
            worst = max((r.max_residual for r in results), default=0.0)
            checks.append(
                (f"homotopy-identity-{name}", worst <= 1e-12,
                 f"{len(results)} intersections, worst={worst:.2e}")
            )
        except SliceEmptyError as exc:
            checks.append((f"homotopy-identity-{name}", False, str(exc)))
    return checks


def _suite_mv():
    from .space import gen_circle, gen_interval
    from .neighborhoods import hausdorff_system
    from .kernels import fractional_kernel
    from .hodge import build_weighted_complex
    from .covers import default_cover, mayer_vietoris_check, cech_nerve_betti

    checks = []
    for name, space, eps, nerve_ref in (
        ("circle", gen_circle(32), 0.5, (1, 1)),
        ("interval", gen_interval(32), 0.2, (1, 0)),
    ):
        system = hausdorff_system(eps)
        cx = build_weighted_complex(space, system, fractional_kernel(1, 0.5), 2)
        cov = default_cover(space, system)
        for p in range(3):
            cert = mayer_vietoris_check(cx, cov, p=p, q_max=1)
            checks.append(
                (f"mv-exact-{name}-p{p}", cert.exact,
                 f"rows={[r['exact'] for r in cert.rows]} recon={cert.reconstruction_ok}")
            )
        nerve = cech_nerve_betti(cov, q_max=1)
        checks.append(
            (f"cech-nerve-{name}", tuple(nerve.betti[:2]) == nerve_ref, f"{nerve.betti}")
        )
    return checks


def _suite_capacity():
    from .capacity import removability_sweep

    rep = removability_sweep()
    checks = [
        ("removability-alpha-0.5", rep.verdict_for(0.5) == "removable", rep.verdict_for(0.5)),
        ("removability-alpha-1.5", rep.verdict_for(1.5) == "non-removable", rep.verdict_for(1.5)),
    ]
    return checks, rep


def cmd_verify(args) -> int:
    checks = []
    artifacts = {}
    if args.suite in ("identity", "all"):
        checks += _suite_identity()
    if args.suite in ("poincare", "all"):
        checks += _suite_poincare()
    if args.suite in ("mv", "all"):
        checks += _suite_mv()
    if args.suite in ("capacity", "all"):
        cap_checks, rep = _suite_capacity()
        checks += cap_checks
        artifacts["removability_csv"] = rep.to_csv()
    if args.dist:
        from .space import load_distance_matrix, SpaceValidationError

        try:
            space = load_distance_matrix(args.dist, args.weights)
            checks.append(("file-space-valid", True, f"n={space.n}"))
        except SpaceValidationError as exc:
            checks.append(("file-space-valid", False, str(exc)))
    failed = [c for c in checks if not c[1]]
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"{status} {name}{suffix}")
    if args.out:
        payload = {
            "schema": 1,
            "suite": args.suite,
            "checks": [
                {"name": n, "passed": bool(ok), "detail": d} for n, ok, d in checks
            ],
            "failed": len(failed),
        }
        _write_json(payload, os.path.join(args.out, "verify.json"))
        if "removability_csv" in artifacts:
            with open(os.path.join(args.out, "removability.csv"), "w") as fh:
                fh.write(artifacts["removability_csv"])
    return VERIFY_EXIT if failed else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="nlhodge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--space", default="circle",
                       choices=["circle", "interval", "two_components",
                                "punctured_interval", "sphere", "file"])
        p.add_argument("--n", type=int, default=32)
        p.add_argument("--radius", type=float, default=1.0)
        p.add_argument("--n-each", type=int, default=16)
        p.add_argument("--gap", type=float, default=0.5)
        p.add_argument("--hole-center", type=float, default=0.5)
        p.add_argument("--hole-radius", type=float, default=0.0)
        p.add_argument("--dist", default=None, help="distance matrix CSV for --space file")
        p.add_argument("--weights", default=None, help="weight sidecar, one value per line")
        p.add_argument("--system", default="rips", choices=["full", "rips", "hausdorff"])
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--closed-eps", action="store_true",
                       help="use <= eps instead of < eps for rips admissibility")
        p.add_argument("--kernel", default="fractional",
                       choices=["fractional", "constant", "truncated", "table"])
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--d", type=float, default=1.0)
        p.add_argument("--scale", type=float, default=1.0)
        p.add_argument("--eps-trunc", type=float, default=None)
        p.add_argument("--floor", type=float, default=0.0)
        p.add_argument("--kernel-table", default=None)
        p.add_argument("--pmax", type=int, default=1)
        p.add_argument("--out", default=None, help="directory for report files")

    pb = sub.add_parser("betti", help="exact and spectral Betti numbers")
    add_common(pb)
    pb.set_defaults(func=cmd_betti)

    ps = sub.add_parser("sweep", help="scale/order sweep to CSV")
    add_common(ps)
    ps.add_argument("--eps-grid", default="0.2,0.5,1.0")
    ps.add_argument("--alpha-grid", default="0.5,1.5")
    ps.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("verify", help="run bundled verification suites")
    pv.add_argument("--suite", default="all",
                    choices=["identity", "poincare", "mv", "capacity", "all"])
    pv.add_argument("--dist", default=None)
    pv.add_argument("--weights", default=None)
    pv.add_argument("--out", default=None)
    pv.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    _pin_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    return rc


if __name__ == "__main__":
    sys.exit(main())
