"""Reproducible experiment runner.

Every subcommand defers to one library operation, takes an explicit seed
where randomness is involved, prints a one-line JSON summary to stdout and
writes optional CSV/JSON artifacts; identical configurations produce
byte-identical outputs.  Exit codes: 0 success, 2 bad configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import epr, qcore, qinfo, qmodels, serialize, tomo, trajectory
from .qcore import QsinfError
from .serialize import fmt


class ConfigInvalid(QsinfError):
    pass


class InputMissing(QsinfError):
    pass


def _emit(summary: dict, out_path, artifact: str | None):
    if out_path and artifact is not None:
        Path(out_path).write_text(artifact)
    sys.stdout.write(serialize.dumps(summary))


def _model_from_name(name: str):
    if name == "great-circle":
        return qmodels.great_circle_model()
    if name.startswith("equatorial"):
        return qinfo.equatorial_model()
    raise ConfigInvalid(f"unknown model {name!r}; use great-circle or equatorial")


def _cmd_fisher(args):
    model = _model_from_name(args.model)
    theta = args.theta
    if args.measurement == "optimal":
        m = qinfo.optimal_measurement(model, theta)
    elif args.measurement == "triad":
        from .measure import triad_povm

        m = triad_povm()
    else:
        raise ConfigInvalid(f"unknown measurement {args.measurement!r}")
    report = qinfo.bc_audit(model, theta, m)
    summary = {
        "I": fmt(report.quantum_info[0, 0]),
        "i": fmt(report.classical_info[0, 0]),
        "attained": bool(report.attained),
    }
    _emit(summary, args.out, serialize.dumps(serialize.info_report_to_json(report)))
    return 0


def _cmd_bounds(args):
    model = qinfo.random_full_rank_model(args.dim, args.seed)
    m = qinfo.random_povm(args.dim, args.outcomes, args.seed + 1)
    theta = args.theta
    report = qinfo.bc_audit(model, theta, m)
    helstrom = qinfo.helstrom_bound(model, theta)
    gm = qinfo.gill_massar_value(model, theta, m)
    summary = {
        "I": fmt(report.quantum_info[0, 0]),
        "i": fmt(report.classical_info[0, 0]),
        "gap_min_eig": fmt(report.gap_min_eig),
        "helstrom": fmt(helstrom),
        "gill_massar": fmt(gm),
        "attained": bool(report.attained),
    }
    _emit(summary, args.out, serialize.dumps(serialize.info_report_to_json(report)))
    return 0


def _cmd_adaptive(args):
    mean_mse, vals = qinfo.adaptive_mc(args.theta, args.eta, args.n, args.reps, args.seed)
    summary = {
        "theta": fmt(args.theta),
        "n": args.n,
        "reps": args.reps,
        "mean_scaled_mse": fmt(mean_mse),
        "helstrom_scaled": fmt(1.0 / np.sin(args.eta) ** 2),
    }
    artifact = "rep,scaled_mse\n" + "".join(
        f"{r},{v:.15g}\n" for r, v in enumerate(vals)
    )
    _emit(summary, args.out, artifact)
    return 0


def _cmd_model(args):
    if args.kind == "great-circle":
        rho = qmodels.great_circle_model().state(args.theta)
    else:
        if args.spec is None:
            raise ConfigInvalid("--spec is required for exponential kinds")
        spec = serialize.model_spec_from_json(json.loads(Path(args.spec).read_text()))
        if spec.kind != args.kind:
            raise ConfigInvalid(f"spec kind {spec.kind!r} does not match --kind {args.kind!r}")
        rho = qmodels.exp_model_state(spec, args.theta)
    _emit(
        {"kind": args.kind, "theta": fmt(args.theta), "trace": fmt(np.trace(rho.matrix).real)},
        args.out,
        serialize.dumps(serialize.density_to_json(rho)),
    )
    return 0


def _cmd_instrument(args):
    from .instrument import apply, choi_cp_check, simple_instrument, transpose_map

    if args.op == "choi-transpose":
        ok, min_eig = choi_cp_check(transpose_map, dim=args.dim)
        _emit({"cp": bool(ok), "min_choi_eig": fmt(min_eig)}, args.out, None)
        return 0
    axis = {"x": qcore.SIGMA_X, "y": qcore.SIGMA_Y, "z": qcore.SIGMA_Z}[args.op]
    instr = simple_instrument(axis)
    theta = args.theta
    rho = qmodels.great_circle_model().state(theta)
    fam = apply(instr, rho)
    posts = [serialize.density_to_json(p) if p is not None else None for p in fam.posteriors]
    summary = {"outcomes": [fmt(float(o)) for o in fam.outcomes], "probs": [fmt(p) for p in fam.probs]}
    _emit(summary, args.out, serialize.dumps({"posteriors": posts}))
    return 0


def _cmd_traj(args):
    gen = trajectory.two_level_decay(args.alpha_sq)
    excited = qcore.basis_state(2, 1)
    if args.kind == "master":
        sol = trajectory.integrate_master(gen, excited.to_density(), args.t_max, args.dt)
        summary = {
            "kind": args.kind,
            "t_max": fmt(args.t_max),
            "final_excited": fmt(sol.rhos[-1, 1, 1].real),
        }
        _emit(summary, args.out, sol.to_csv())
        return 0
    if args.kind in ("jump", "diffusion"):
        if args.n_traj == 1:
            fn = trajectory.jump_trajectory if args.kind == "jump" else trajectory.diffusion_trajectory
            tr = fn(gen, excited, args.t_max, args.dt, args.seed)
            summary = {
                "kind": args.kind,
                "n_traj": 1,
                "jumps": int(len(tr.jump_times)),
                "seed": args.seed,
            }
            _emit(summary, args.out, tr.to_csv())
            return 0
        res = trajectory.ensemble_mean(
            gen, excited, args.t_max, args.dt, args.n_traj, args.seed, kind=args.kind
        )
        lines = ["t,excited_mean,se_total"]
        for t, m, se in zip(res.times, res.rho_mean, res.se_total):
            lines.append(f"{t:.15g},{m[1, 1].real:.15g},{se:.15g}")
        summary = {
            "kind": args.kind,
            "n_traj": args.n_traj,
            "final_excited": fmt(res.rho_mean[-1, 1, 1].real),
            "seed": args.seed,
        }
        _emit(summary, args.out, "\n".join(lines) + "\n")
        return 0
    raise ConfigInvalid(f"unknown trajectory kind {args.kind!r}")


def _state_from_name(name: str, n_max: int):
    d = n_max + 1
    if name == "vacuum":
        v = np.zeros(d, dtype=complex)
        v[0] = 1.0
    elif name == "one":
        v = np.zeros(d, dtype=complex)
        v[1] = 1.0
    elif name == "super01":
        v = np.zeros(d, dtype=complex)
        v[0] = v[1] = 1.0 / np.sqrt(2.0)
    else:
        raise ConfigInvalid(f"unknown state {name!r}; use vacuum, one or super01")
    return qcore.StateVector(v).to_density()


def _cmd_tomo(args):
    if args.tomo_cmd == "simulate":
        rho = _state_from_name(args.state, args.nmax)
        samples = tomo.sample_homodyne(rho, args.n, args.seed)
        if not args.out:
            raise ConfigInvalid("tomo simulate requires --out for the samples CSV")
        _emit(
            {"n": args.n, "seed": args.seed, "state": args.state, "mean_x": fmt(samples.xs.mean())},
            args.out,
            serialize.samples_to_csv(samples),
        )
        return 0
    if args.tomo_cmd == "estimate":
        if not args.infile:
            raise ConfigInvalid("tomo estimate requires --in")
        path = Path(args.infile)
        if not path.exists():
            raise InputMissing(f"samples file {path} not found")
        samples = serialize.samples_from_csv(path.read_text())
        if args.method == "mle":
            res = tomo.mle_estimate(samples, args.nmax)
            artifact = serialize.dumps(
                {
                    "n_max": args.nmax,
                    "rho": serialize.density_to_json(res.rho),
                    "loglik": fmt(res.loglik[-1]),
                    "iters": res.iters,
                }
            )
            summary = {
                "method": "mle",
                "iters": res.iters,
                "converged": bool(res.converged),
                "loglik": fmt(res.loglik[-1]),
                "fidelity_vacuum": fmt(tomo.fidelity_pure(res.rho, [1.0] + [0.0] * args.nmax)),
            }
            _emit(summary, args.out, artifact)
            return 0
        if args.method == "kernel":
            est = tomo.kernel_reconstruct(samples, args.nmax)
            artifact = serialize.dumps({"n_max": args.nmax, "rho": serialize.matrix_to_json(est)})
            summary = {"method": "kernel", "trace": fmt(np.trace(est).real)}
            _emit(summary, args.out, artifact)
            return 0
        raise ConfigInvalid(f"unknown method {args.method!r}")
    raise ConfigInvalid("use tomo simulate or tomo estimate")


def _cmd_bell(args):
    report = epr.bell_demo()
    summary = {
        "p_equal": [fmt(p) for p in report.p_equal],
        "lhv_max": fmt(report.lhv_max),
        "violated": bool(report.violated),
    }
    _emit(summary, args.out, report.to_csv())
    return 0


def _cmd_teleport(args):
    alpha = complex(args.alpha_re, args.alpha_im)
    beta_sq = 1.0 - abs(alpha) ** 2
    if beta_sq < -1e-12:
        raise ConfigInvalid("|alpha| must be at most 1")
    beta = np.sqrt(max(beta_sq, 0.0)) * np.exp(1j * args.beta_phase)
    label, state, fid = epr.teleport(alpha, beta, args.seed)
    _emit(
        {"outcome": label, "fidelity": fmt(fid), "seed": args.seed},
        args.out,
        serialize.dumps(serialize.density_to_json(state)),
    )
    return 0


def _cmd_decohere(args):
    st = np.random.RandomState(args.seed)
    a = st.randn(args.dim, args.dim) + 1j * st.randn(args.dim, args.dim)
    h = 0.5 * (a + a.conj().T)
    alpha = args.alpha
    beta = np.sqrt(1.0 - alpha**2)
    joint = epr.decoherence_average(alpha, beta, h, args.tau, args.nphase)
    summary = {
        "off_diag_norm": fmt(epr.off_diagonal_block_norm(joint)),
        "n_phase": args.nphase,
        "weights": [fmt(alpha**2), fmt(beta**2)],
    }
    _emit(summary, args.out, serialize.dumps(serialize.density_to_json(joint)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsinf", description=__doc__)
    p.add_argument("--config", help="JSON file with argument defaults", default=None)
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", default=None, help="artifact output path")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("fisher", help="quantum vs measurement information for a model")
    sp.add_argument("--model", default="great-circle")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--measurement", default="optimal")
    common(sp)
    sp.set_defaults(fn=_cmd_fisher)

    sp = sub.add_parser("bounds", help="information bound audit on a random model")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--outcomes", type=int, default=4)
    sp.add_argument("--theta", type=float, default=0.0)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_bounds)

    sp = sub.add_parser("adaptive", help="two-stage adaptive estimation")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--eta", type=float, default=np.pi / 2)
    sp.add_argument("--n", type=int, default=10000)
    sp.add_argument("--reps", type=int, default=100)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_adaptive)

    sp = sub.add_parser("model", help="evaluate a state family at a parameter")
    sp.add_argument("--kind", default="great-circle")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--spec", default=None, help="model spec JSON (exponential kinds)")
    common(sp)
    sp.set_defaults(fn=_cmd_model)

    sp = sub.add_parser("instrument", help="simple instrument application / CP checks")
    sp.add_argument("--op", default="z", help="x, y, z or choi-transpose")
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--dim", type=int, default=2)
    common(sp)
    sp.set_defaults(fn=_cmd_instrument)

    sp = sub.add_parser("traj", help="master equation and unravelings (two-level decay)")
    sp.add_argument("--kind", default="master", help="master, jump or diffusion")
    sp.add_argument("--alpha-sq", type=float, default=1.0)
    sp.add_argument("--t-max", type=float, default=3.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--n-traj", type=int, default=1)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_traj)

    sp = sub.add_parser("tomo", help="homodyne simulation and estimation")
    tsub = sp.add_subparsers(dest="tomo_cmd", required=True)
    ssp = tsub.add_parser("simulate")
    ssp.add_argument("--state", default="vacuum")
    ssp.add_argument("--n", type=int, required=True)
    ssp.add_argument("--nmax", type=int, default=4)
    common(ssp, seed=True)
    ssp.set_defaults(fn=_cmd_tomo)
    esp = tsub.add_parser("estimate")
    esp.add_argument("--method", default="mle")
    esp.add_argument("--nmax", type=int, default=4)
    esp.add_argument("--in", dest="infile", default=None)
    common(esp, seed=True)
    esp.set_defaults(fn=_cmd_tomo)

    sp = sub.add_parser("bell", help="singlet equality table vs local strategies")
    common(sp)
    sp.set_defaults(fn=_cmd_bell)

    sp = sub.add_parser("teleport", help="one teleportation run")
    sp.add_argument("--alpha-re", type=float, default=0.6)
    sp.add_argument("--alpha-im", type=float, default=0.0)
    sp.add_argument("--beta-phase", type=float, default=0.0)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_teleport)

    sp = sub.add_parser("decohere", help="phase-averaged detector coupling")
    sp.add_argument("--alpha", type=float, default=np.sqrt(0.5))
    sp.add_argument("--dim", type=int, default=8)
    sp.add_argument("--tau", type=float, default=1.0)
    sp.add_argument("--nphase", type=int, default=360)
    common(sp, seed=True)
    sp.set_defaults(fn=_cmd_decohere)

    return p


_STOCHASTIC = {"adaptive", "traj", "teleport", "decohere", "bounds"}

# native artifact format per command; --format only confirms it
_NATIVE_FORMAT = {
    "fisher": "json",
    "bounds": "json",
    "adaptive": "csv",
    "model": "json",
    "instrument": "json",
    "traj": "csv",
    ("tomo", "simulate"): "csv",
    ("tomo", "estimate"): "json",
    "bell": "csv",
    "teleport": "json",
    "decohere": "json",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "format", None):
        key = (args.cmd, args.tomo_cmd) if args.cmd == "tomo" else args.cmd
        native = _NATIVE_FORMAT.get(key)
        if native and args.format != native:
            sys.stderr.write(f"{args.cmd} writes {native} artifacts, not {args.format}\n")
            return 2
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            sys.stderr.write(f"config file {args.config} not found\n")
            return 2
        for key, val in overrides.items():
            if hasattr(args, key) and getattr(args, key) is None:
                setattr(args, key, val)
    seed = getattr(args, "seed", None)
    if seed is None:
        if args.cmd in _STOCHASTIC or getattr(args, "tomo_cmd", "") == "simulate":
            sys.stderr.write("a --seed is required for stochastic commands\n")
            return 2
    elif not 0 <= seed < 2**64:
        sys.stderr.write("--seed must fit in an unsigned 64-bit integer\n")
        return 2
    try:
        return args.fn(args)
    except (ConfigInvalid, InputMissing) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except QsinfError as exc:
        sys.stderr.write(f"numerical failure ({type(exc).__name__}): {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
