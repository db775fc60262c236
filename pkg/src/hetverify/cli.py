"""Command-line front end: ``hetverify <command> [flags]``.

Commands
--------
plan       sample sizes for fidelity estimation, witnesses or Boson Sampling
simulate   heterodyne samples of a simulated prover, written as CSV + sidecar
estimate   single-mode fidelity estimate from a sample file
witness    multimode fidelity witness from a sample file
verify-bs  Boson Sampling accept/abort from a sample file or a streamed simulation
noniid     discarding, energy test and confidence terms without the i.i.d. assumption
oracle     exact fidelities, witnesses and estimator expectations

Exit codes: 0 success or accept, 1 abort, 2 parameter error, 3 numerical or
truncation error.
"""

import argparse
import csv
import math
import sys
import time

import numpy as np

from . import io
from .errors import HetVerifyError, NumericalError, ParameterError, TruncationError, ValidationError
from .estimators import EstimatorConfig, g_kl
from .protocols import (
    EnergyTestConfig,
    PlanRequest,
    VerificationReport,
    WitnessAccumulator,
    default_config,
    noniid_confidence,
    noniid_postprocess,
    protocol1_plan,
    protocol2_plan,
    protocol2_witness,
    protocol3_plan,
    protocol3_verify,
    witness_from_means,
)
from .sampler import ProverModel, iter_prover_blocks, sample_density_q
from .states import (
    CoreState,
    TargetSpec,
    expectation_g_exact,
    fidelity_pure,
    haar_unitary,
    input_frame_reduced_states,
    target_state_vector,
    witness_exact,
)

EXIT_OK, EXIT_ABORT, EXIT_PARAM, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


# -- flag parsing helpers ---------------------------------------------------------------


def _complex_list(text):
    try:
        return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse complex list {text!r}") from exc


def _float_list(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse number list {text!r}") from exc


def _int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse integer list {text!r}") from exc


def _broadcast(values, m, what):
    if values is None:
        return None
    if len(values) == 1:
        return list(values) * m
    if len(values) != m:
        raise ParameterError(f"{what}: need 1 or {m} values, got {len(values)}")
    return list(values)


def _flags(args):
    out = {}
    for k, v in vars(args).items():
        if callable(v):
            continue
        if isinstance(v, list):
            v = [[x.real, x.imag] if isinstance(x, complex) else x for x in v]
        out[k] = v
    return out


def _cfgs(args, cores, epsilon=None, copies=1):
    """Per-mode estimator configs; a missing eta falls back to the admissible cap."""
    m = len(cores)
    ps = _broadcast(args.p or [1], m, "--p")
    etas = _broadcast(args.eta, m, "--eta")
    out = []
    for i, core in enumerate(cores):
        if etas is not None:
            out.append(EstimatorConfig(ps[i], etas[i]))
        elif epsilon is not None:
            out.append(default_config(core, ps[i], epsilon / m, copies))
        else:
            raise ParameterError("--eta is required when no --epsilon is given to derive it")
    return out


def _emit(doc, args, summary_lines):
    text = io.dumps(doc)
    if getattr(args, "out", None) and args.command != "simulate":
        io.write_json(doc, args.out)
    if args.json:
        sys.stdout.write(text)
    else:
        for line in summary_lines:
            print(line)


def _prover(spec, target):
    """Prover from ``ideal``, ``loss:T[,T...]``, ``spoof[:a,b,...]``,
    ``substitute:rho1.json[,rho2.json...]`` or ``noniid:GOOD:<prover>``."""
    kind, _, rest = spec.partition(":")
    if kind == "ideal" and not rest:
        return ProverModel.ideal(target)
    if kind == "loss":
        taus = _broadcast(_float_list(rest), target.modes, "loss")
        return ProverModel.lossy(target, taus)
    if kind == "spoof":
        return ProverModel.coherent_spoof(target, _complex_list(rest) if rest else None)
    if kind == "substitute":
        states = [io.load_state(p) for p in rest.split(",")]
        if len(states) == 1:
            states = states * target.modes
        return ProverModel.substitute(target, states)
    if kind == "noniid":
        good, _, inner = rest.partition(":")
        return ProverModel.block_noniid(target, int(good), _prover(inner, target))
    raise ParameterError(f"unknown prover {spec!r}")


def _bs_target(args):
    if args.target:
        target = io.load_target(args.target)
        photons = [c.support == 2 and abs(c.coefficients[1]) == 1 for c in target.core_states]
        vacua = [c.support == 1 for c in target.core_states]
        n = sum(photons)
        if not all(photons[:n]) or not all(vacua[n:]) or np.any(target.beta) or np.any(target.xi):
            raise ParameterError("Boson Sampling targets need |1> in the first modes, |0> elsewhere, no beta or xi")
        if args.photons is not None and args.photons != n:
            raise ParameterError(f"--photons {args.photons} disagrees with the target's {n} photons")
        return target, n
    if args.modes is None or args.photons is None:
        raise ParameterError("give --target, or --modes, --photons and --unitary-seed")
    return TargetSpec.boson_sampling(haar_unitary(args.modes, seed=args.unitary_seed), args.photons), args.photons


# -- commands ---------------------------------------------------------------------------------


def cmd_plan(args):
    if args.protocol == "fe":
        if args.core is None:
            raise ParameterError("--core is required for --protocol fe")
        core = CoreState(args.core)
        cfg = _cfgs(args, [core], args.epsilon, args.copies)[0]
        plan = protocol1_plan(PlanRequest(args.epsilon, args.delta, core, cfg, args.copies))
    elif args.protocol == "witness":
        if args.target is None:
            raise ParameterError("--target is required for --protocol witness")
        target = io.load_target(args.target)
        cfgs = _cfgs(args, target.core_states, args.epsilon, args.copies)
        plan = protocol2_plan(PlanRequest(args.epsilon, args.delta, target, cfgs, args.copies))
    else:
        if args.modes is None or args.photons is None:
            raise ParameterError("--modes and --photons are required for --protocol bs")
        p = args.p[0] if args.p else 2
        eta = args.eta[0] if args.eta else 0.3
        plan = protocol3_plan(args.epsilon, args.delta, args.modes, args.photons, EstimatorConfig(p, eta), args.copies)
    doc = io.plan_to_dict(plan)
    doc["params"]["flags"] = _flags(args)
    io.validate(doc)
    lines = [
        f"N = {plan.shots_required}",
        f"P(N) = {plan.failure_probability:.6g} <= delta = {args.delta:g}",
        f"formula = {plan.formula_tag}",
    ]
    if plan.params.get("c") is not None and args.protocol == "fe":
        c, p = plan.params["c"], plan.params["p"]
        lines.append(f"exponent 2+2c/p = {2 + 2 * c / p:g} (c={c}, p={p}, eta={plan.params['eta']:.6g})")
    for i, k in enumerate(plan.constants):
        if k is not None:
            lines.append(f"mode {i}: A={k.a:.6g} B={k.b:.6g} K={k.k_big:.6g} eta_max={k.eta_max:.6g} G={k.g_cp:.6g}")
    _emit(doc, args, lines)
    return EXIT_OK


def cmd_simulate(args):
    target = io.load_target(args.target)
    model = _prover(args.prover, target)
    t0 = time.perf_counter()
    with io.SampleWriter(args.out, target.modes, args.seed, model.tag, extra={"flags": _flags(args)}) as w:
        for _, block in iter_prover_blocks(model, args.shots, args.seed):
            w.write(block)
    lines = [f"wrote {args.shots * target.modes} rows ({args.shots} shots x {target.modes} modes) to {args.out}",
             f"prover {model.tag}, seed {args.seed}, {time.perf_counter() - t0:.2f} s"]
    if args.json:
        sys.stdout.write(io.dumps(io.read_metadata(args.out)))
    else:
        print("\n".join(lines))
    return EXIT_OK


def cmd_estimate(args):
    core = CoreState(args.core)
    cfg = _cfgs(args, [core])[0]
    meta = io.read_metadata(args.samples)
    if not 0 <= args.mode < meta["modes"]:
        raise ParameterError(f"--mode must lie in [0, {meta['modes']})")
    acc = WitnessAccumulator([core], cfg)
    for _, block in io.iter_samples(args.samples):
        acc.update(block[:, args.mode])
    w, f = witness_from_means(acc.means(), args.copies)
    rep = VerificationReport(
        per_mode_fidelity=list(f), witness=w, formula_tag="protocol1",
        per_mode_stderr=list(acc.stderrs()), shots=acc.count, flags=_flags(args),
    )
    doc = io.report_to_dict(rep)
    _emit(doc, args, [f"fidelity estimate = {f[0]:.6f} (stderr of mean {acc.stderrs()[0]:.2g}, N = {acc.count})"])
    return EXIT_OK


def cmd_witness(args):
    target = io.load_target(args.target)
    cfgs = _cfgs(args, target.core_states)
    rep = protocol2_witness(io.iter_samples(args.samples), target, cfgs, args.copies)
    rep.flags = _flags(args)
    doc = io.report_to_dict(rep)
    lines = [f"witness W = {rep.witness:.6f} over {rep.shots} shots"]
    lines += [f"  mode {i}: F = {f:.6f}" for i, f in enumerate(rep.per_mode_fidelity)]
    _emit(doc, args, lines)
    return EXIT_OK


def cmd_verify_bs(args):
    if not 0 < args.epsilon < args.lam:
        raise ParameterError(f"need 0 < epsilon < lambda, got epsilon={args.epsilon:g}, lambda={args.lam:g}")
    target, n = _bs_target(args)
    cfg = EstimatorConfig(args.p, args.eta)
    plan = protocol3_plan(args.epsilon, args.delta, target.modes, n, cfg, args.copies)
    if (args.samples is None) == (args.simulate is None):
        raise ParameterError("give exactly one of --samples and --simulate")
    t0 = time.perf_counter()
    if args.samples:
        source = io.iter_samples(args.samples)
    else:
        shots = plan.shots_required if args.shots is None else args.shots
        source = iter_prover_blocks(_prover(args.simulate, target), shots, args.seed)
    rep = protocol3_verify(source, target.unitary, n, args.lam, args.epsilon, cfg, args.copies, plan=plan)
    rep.flags = {**_flags(args), "elapsed_s": time.perf_counter() - t0, "under_planned": rep.shots < plan.shots_required}
    doc = io.report_to_dict(rep)
    lines = [
        f"decision: {rep.decision}",
        f"witness W = {rep.witness:.6f}, threshold 1 - lambda + epsilon = {rep.threshold:.6f}",
        f"shots {rep.shots} (planned {plan.shots_required}, P_BS = {plan.failure_probability:.3g})",
    ]
    if rep.tvd_bound is not None:
        lines.append(f"tvd_bound: {rep.tvd_bound:g}")
    _emit(doc, args, lines)
    return EXIT_OK if rep.accepted else EXIT_ABORT


def cmd_noniid(args):
    target = io.load_target(args.target)
    m = target.modes
    energy = _broadcast(args.energy, m, "--energy")
    allowance = _broadcast(args.allowance, m, "--allowance")
    etc = EnergyTestConfig(args.n_estimate, args.k_energy, args.q_discard, energy, allowance)
    batch = io.read_samples(args.samples)
    out = noniid_postprocess(batch, etc, args.perm_seed, target.unitary, target.beta)
    flags = {**_flags(args), "energy_counts": list(out.energy_counts)}
    if out.aborted:
        rep = out.report()
        rep.flags = flags
        _emit(io.report_to_dict(rep), args, [f"decision: abort (energy test: R = {list(out.energy_counts)}, S = {allowance})"])
        return EXIT_ABORT
    cfgs = _cfgs(args, target.core_states)
    rep = protocol2_witness(out.kept, target, cfgs, args.copies)
    probs = noniid_confidence(
        args.n_estimate, args.k_energy, args.q_discard, args.copies, energy, allowance,
        args.epsilon, list(target.core_states), cfgs,
    )
    rep.failure_probabilities = {k: probs[k] for k in ("support", "definetti", "choice", "hoeffding", "total")}
    rep.formula_tag = "protocol5" if m > 1 else "protocol4"
    flags["regime_ok"] = probs["regime_ok"]
    if args.lam is not None:
        if not 0 < args.epsilon < args.lam:
            raise ParameterError("need 0 < epsilon < lambda")
        rep.threshold = 1.0 - args.lam + args.epsilon
        rep.decision = "accept" if rep.witness >= rep.threshold else "abort"
        rep.tvd_bound = math.sqrt(args.lam) if rep.decision == "accept" else None
    rep.flags = flags
    lines = [f"energy test passed (R = {list(out.energy_counts)}, S = {allowance})",
             f"witness W = {rep.witness:.6f} over {rep.shots} kept shots"]
    lines += [f"  P^{k} = {v:.4g}" for k, v in rep.failure_probabilities.items()]
    if rep.decision:
        lines.insert(0, f"decision: {rep.decision}")
    _emit(io.report_to_dict(rep), args, lines)
    return EXIT_ABORT if rep.decision == "abort" else EXIT_OK


def _oracle_target(args, rho):
    if args.target:
        return io.load_target(args.target)
    if args.core:
        return TargetSpec.product([CoreState(args.core)] * len(rho.dims))
    raise ParameterError("give --target or --core")


def cmd_oracle(args):
    rho = io.load_state(args.state)
    flags = _flags(args)
    doc = {"format": io.ORACLE_FORMAT, "quantity": args.quantity, "flags": flags}
    if args.quantity == "fidelity":
        target = _oracle_target(args, rho)
        vec, deficit = target_state_vector(target, rho.dims, return_deficit=True)
        flags["norm_deficit"] = deficit
        value = fidelity_pure(vec, rho)
        doc["value"] = value
        line = f"fidelity = {value:.12g}"
    elif args.quantity == "witness":
        target = _oracle_target(args, rho)
        reduced = input_frame_reduced_states(rho, target)
        fids = [fidelity_pure(c, r) for c, r in zip(target.core_states, reduced)]
        value = witness_exact(fids)
        doc["value"] = value
        doc["per_mode_fidelity"] = fids
        line = f"witness = {value:.12g} (per mode {', '.join(f'{f:.6g}' for f in fids)})"
    else:
        if rho.modes != 1:
            raise ParameterError("--quantity expectation needs a single-mode state")
        cfg = EstimatorConfig(args.p[0] if args.p else 1, args.eta[0] if args.eta else 0.5)
        pairs = args.kl or [[0, 0]]
        values = [expectation_g_exact(rho, k, l, cfg) for k, l in pairs]
        doc["value"] = [float(values[0].real), float(values[0].imag)]
        line = "; ".join(f"E[g_{k}{l}] = {v.real:.12g}{v.imag:+.3g}j" for (k, l), v in zip(pairs, values))
        if args.table:
            _expectation_table(args, rho, cfg, pairs, values)
    io.validate(doc)
    _emit(doc, args, [line])
    return EXIT_OK


def _expectation_table(args, rho, cfg, pairs, exact):
    """Tidy CSV of exact versus Monte-Carlo estimator means."""
    z = sample_density_q(rho, args.shots, args.seed)
    with open(args.table, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "l", "p", "eta", "part", "exact", "monte_carlo", "stderr", "shots"])
        for (k, l), ex in zip(pairs, exact):
            vals = g_kl(k, l, z, cfg)
            for part, fn in (("re", np.real), ("im", np.imag)):
                v = fn(vals)
                se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.inf
                w.writerow([k, l, cfg.p, repr(cfg.eta), part, repr(float(fn(ex))), repr(float(v.mean())), repr(se), v.size])


# -- parser -----------------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="hetverify", description="Heterodyne verification of continuous-variable states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--json", action="store_true", help="print the JSON document instead of a summary")
        p.add_argument("--out", help="also write the JSON document to this path")

    def estimator(p, default_p=None):
        p.add_argument("--p", type=_int_list, default=default_p, help="estimator order(s), one or per mode")
        p.add_argument("--eta", type=_float_list, help="damping parameter(s) in (0, 1), one or per mode")

    p = sub.add_parser("plan", help="number of shots for a protocol")
    common(p)
    p.add_argument("--protocol", choices=["fe", "witness", "bs"], required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--copies", type=int, default=1, help="number of copies M")
    p.add_argument("--core", type=_complex_list, help="core-state amplitudes, e.g. '0,1' for |1>")
    p.add_argument("--target", help="target JSON (witness)")
    p.add_argument("--modes", type=int)
    p.add_argument("--photons", type=int)
    estimator(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="write heterodyne samples of a simulated prover")
    p.add_argument("--json", action="store_true")
    p.add_argument("--target", required=True)
    p.add_argument("--prover", default="ideal", help="ideal | loss:T | spoof[:a,...] | substitute:rho.json | noniid:GOOD:<prover>")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path; the sidecar is written to <out>.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="single-mode fidelity estimate")
    common(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--core", type=_complex_list, required=True)
    p.add_argument("--mode", type=int, default=0, help="sample column to use")
    p.add_argument("--copies", type=int, default=1)
    estimator(p, default_p=[1])
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("witness", help="multimode fidelity witness")
    common(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--copies", type=int, default=1)
    estimator(p, default_p=[1])
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("verify-bs", help="Boson Sampling accept/abort")
    common(p)
    p.add_argument("--target", help="Boson Sampling target JSON")
    p.add_argument("--modes", type=int)
    p.add_argument("--photons", type=int)
    p.add_argument("--unitary-seed", type=int, default=0, help="seed of the Haar interferometer without --target")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1, help="failure probability used for the plan")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--samples", help="sample CSV")
    p.add_argument("--simulate", help="stream samples from this prover instead of a file")
    p.add_argument("--shots", type=int, help="shots to simulate (default: the planned N)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_bs)

    p = sub.add_parser("noniid", help="energy test and confidence terms without the i.i.d. assumption")
    common(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--n-estimate", type=int, required=True)
    p.add_argument("--k-energy", type=int, required=True)
    p.add_argument("--q-discard", type=int, required=True)
    p.add_argument("--energy", type=_float_list, required=True, help="threshold(s) E, one or per mode")
    p.add_argument("--allowance", type=_int_list, required=True, help="allowance(s) S, one or per mode")
    p.add_argument("--perm-seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--copies", type=int, default=1)
    estimator(p, default_p=[1])
    p.set_defaults(func=cmd_noniid)

    p = sub.add_parser("oracle", help="exact oracle quantities")
    common(p)
    p.add_argument("--state", required=True, help="density-matrix JSON")
    p.add_argument("--quantity", choices=["fidelity", "witness", "expectation"], required=True)
    p.add_argument("--target")
    p.add_argument("--core", type=_complex_list)
    p.add_argument("--kl", type=_int_list, action="append", help="index pair k,l (repeatable)")
    p.add_argument("--table", help="write exact vs Monte-Carlo expectations as CSV")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    estimator(p)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TruncationError as exc:
        deficit = "" if exc.deficit is None else f" (norm deficit {exc.deficit:.3g})"
        print(f"hetverify: truncation error: {exc}{deficit}", file=sys.stderr)
        return EXIT_NUMERIC
    except NumericalError as exc:
        print(f"hetverify: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, ValidationError, OSError) as exc:
        print(f"hetverify: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except HetVerifyError as exc:
        print(f"hetverify: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
