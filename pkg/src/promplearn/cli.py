"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data/file error, 4 numerical
failure. Errors are also emitted as one JSON object on stderr.
"""

import argparse
import json
import sys

from . import io as promp_io
from .basis import BasisConfig
from .errors import PrompLearnError, SingularCovariance
from .estimators import fit_em_map, fit_em_mle, fit_ridge
from .incremental import StepwiseConfig, add_demonstration, init_session
from .metrics import compare_to_reference, pc_rotation_deg
from .synthlab import (ReferenceSpec, build_reference_promp,
                       generate_seed_trajectories, preset_adapt,
                       preset_compare, preset_progress, sample_dataset)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _error_json(exc):
    return json.dumps({"error": {"type": type(exc).__name__,
                                 "message": str(exc)}})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(_error_json(argparse.ArgumentTypeError(message)),
              file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="promplearn",
                     description="Incremental movement-primitive learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-ref", help="build a synthetic reference skill")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-trajectories", type=int, default=60)
    p.add_argument("--task-scale", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="sample demonstrations from a skill")
    p.add_argument("--ref", required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="fit a skill to a demo directory")
    p.add_argument("--algo", required=True,
                   choices=["ridge", "em-mle", "em-map", "sem"])
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.75)
    p.add_argument("--passes", type=int, default=1)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-12)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="metric report of estimate vs reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)

    p = sub.add_parser("experiment", help="run a regenerated protocol")
    p.add_argument("kind", choices=["compare", "progress", "adapt"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["sorted", "panda"], default="sorted")
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="start the live session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--snapshot-dir", default=None)
    p.add_argument("--cors-origin", default=None)
    p.add_argument("--ui-dir", default=None)

    return parser


def _cmd_gen_ref(args):
    spec = ReferenceSpec(n_basis=args.k, n_dof=args.d, seed=args.seed,
                         num_via_trajectories=args.num_trajectories,
                         task_scale=args.task_scale)
    ref = build_reference_promp(generate_seed_trajectories(spec), spec)
    promp_io.save_promp(args.out, ref)
    print(json.dumps({"written": args.out, "K": args.k, "D": args.d}))


def _cmd_sample(args):
    ref, _ = promp_io.load_promp(args.ref)
    demos = sample_dataset(ref, args.n, args.steps, seed=args.seed)
    promp_io.save_dataset(args.out, demos)
    print(json.dumps({"written": args.out, "n": len(demos)}))


def _cmd_train(args):
    demos = promp_io.load_dataset(args.data)
    basis = BasisConfig.create(args.k, demos[0].n_dof)
    state = None
    if args.algo == "ridge":
        params = fit_ridge(demos, basis, lam=args.lam).params
    elif args.algo == "em-mle":
        params = fit_em_mle(demos, basis, iterations=args.iters).params
    elif args.algo == "em-map":
        params = fit_em_map(demos, basis, iterations=args.iters).params
    else:
        cfg = StepwiseConfig(beta=args.beta)
        state = init_session(cfg, basis)
        for _ in range(args.passes):
            for demo in demos:
                state, _ = add_demonstration(state, demo)
        params = state.params
    promp_io.save_promp(args.out, params, state)
    print(json.dumps({"written": args.out, "algo": args.algo,
                      "n_demos": len(demos)}))


def _cmd_eval(args):
    ref, _ = promp_io.load_promp(args.ref)
    est, _ = promp_io.load_promp(args.est)
    rep = compare_to_reference(ref, est)
    rotation = pc_rotation_deg(ref.sigma_w, est.sigma_w)
    print(json.dumps({
        "d_b": rep.d_b,
        "e_f_mu": rep.e_f_mu,
        "e_f_sigma": rep.e_f_sigma,
        "log_kappa": rep.log_kappa,
        "pc_rotation_deg": rotation,
    }))


def _cmd_experiment(args):
    if args.kind == "compare":
        report = preset_compare(seed=args.seed)
    elif args.kind == "progress":
        report = preset_progress(seed=args.seed)
    else:
        report = preset_adapt(seed=args.seed, variant=args.preset)
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    print(json.dumps({"written": args.out, "experiment": args.kind}))


def _cmd_serve(args):
    from .service import serve
    serve(port=args.port, host=args.host, snapshot_dir=args.snapshot_dir,
          cors_origin=args.cors_origin, ui_dir=args.ui_dir)


def cli_dispatch(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    handlers = {
        "gen-ref": _cmd_gen_ref,
        "sample": _cmd_sample,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "experiment": _cmd_experiment,
        "serve": _cmd_serve,
    }
    try:
        handlers[args.command](args)
    except SingularCovariance as exc:
        print(_error_json(exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except (PrompLearnError, OSError) as exc:
        print(_error_json(exc), file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    raise SystemExit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
