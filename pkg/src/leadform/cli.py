"""Command-line front end: ``leadform {check,synth,protocol,simulate,verify}``.

Exit codes: 0 success, 1 structural or verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import export
from .bipartite import char_poly_matchings
from .errors import (
    DuplicateEdge,
    FormationError,
    IndexOutOfRange,
    MissingOffset,
    PoleCountMismatch,
    ScenarioError,
    SelfLoop,
    ZeroFollowerPole,
)
from .graph import structural_report
from .protocol import OffsetTable, init_protocol, retarget, run_rounds
from .scenario import base_diagonal, horizon_for, load_scenario, simulate_scenario, solve_axis
from .sim import fit_rates, settling_time
from .spectral import faddeev_leverrier, match_multisets, poly_from_roots, spectrum
from .synthesis import verify_formation

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (ScenarioError, DuplicateEdge, SelfLoop, IndexOutOfRange, PoleCountMismatch, ZeroFollowerPole, MissingOffset)


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, default=_json_default))
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def _out_dir(args, scn) -> Path | None:
    d = args.out or scn.output_dir
    if d is None:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _fmt_poly(c) -> str:
    return "(" + ", ".join(f"{v:.10g}" for v in c) + ")"


def cmd_check(args) -> int:
    scn = load_scenario(args.scenario)
    rep = structural_report(scn.graph)
    verdict = "PASS" if rep.synthesizable else "FAIL"
    lines = [
        f"scenario: {scn.name}",
        f"agents: {rep.n}  edges: {rep.edge_count} (min {rep.min_edges}, max {rep.max_edges})",
        f"rooted spanning tree: {rep.spanning_tree}",
        f"acyclic: {rep.acyclic}" + ("" if rep.acyclic else f"  cycle through agents {list(rep.cycle[:-1])}"),
        f"beta unique: {rep.beta_unique}",
        verdict,
    ]
    _emit(args, {"scenario": scn.name, **rep.as_dict(), "verdict": verdict}, "\n".join(lines))
    return EXIT_OK if rep.synthesizable else EXIT_FAIL


def _gains_text(sol) -> str:
    rows = [f"axis {sol.axis}", f"{'agent':>5} {'a_ii':>10} {'alpha':>10}  betas"]
    for r in sol.gains.table():
        betas = ", ".join(f"b{r['agent']},{j}={b:.8g}" for j, b in r["betas"].items())
        rows.append(f"{r['agent']:>5} {r['a_ii']:>10.6g} {r['alpha']:>10.6g}  {betas}")
    return "\n".join(rows)


def _gains_payload(sol, scn, report) -> dict:
    return {
        "axis": sol.axis,
        "gains": [
            {**r, "betas": {str(j): b for j, b in r["betas"].items()}} for r in sol.gains.table()
        ],
        "matrix": sol.A.tolist(),
        "formation": sol.F.tolist(),
        "poles": list(scn.poles.lambdas),
        "verification": report.as_dict(),
    }


def cmd_synth(args) -> int:
    scn = load_scenario(args.scenario)
    if args.policy:
        scn.policy = args.policy
    out = _out_dir(args, scn)
    payload, text, ok = {"scenario": scn.name, "axes": []}, [], True
    for ax in scn.axes:
        sol = solve_axis(scn, ax)
        rep = verify_formation(sol.A, sol.F, scn.poles)
        ok &= rep.ok
        entry = _gains_payload(sol, scn, rep)
        payload["axes"].append(entry)
        text.append(_gains_text(sol))
        text.append(
            f"kernel residual {rep.kernel_residual:.3g}  spectrum "
            + ", ".join(f"{complex(z).real:.6g}" for z in rep.spectrum)
            + f"  matches poles: {rep.spectrum_matches}"
        )
        if out:
            (out / f"gains_{ax.name}.json").write_text(json.dumps(entry, indent=2, default=_json_default))
    _emit(args, payload, "\n".join(text))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_protocol(args) -> int:
    scn = load_scenario(args.scenario)
    payload, text = {"scenario": scn.name, "axes": []}, []
    for ax in scn.axes:
        offsets = ax.offsets or OffsetTable.from_formation(scn.graph, ax.F, ax.name)
        run = run_rounds(init_protocol(scn.graph, offsets, base_diagonal(scn)), ax.leader_target)
        runs = [run] + [retarget(run, t) for _, t in ax.retarget]
        for k, r in enumerate(runs):
            payload["axes"].append(
                {
                    "axis": ax.name,
                    "leader_target": r.leader_target,
                    "rounds": r.rounds,
                    "trace": [rec.as_dict() for rec in r.trace],
                    "targets": r.targets(),
                }
            )
            label = "initial" if k == 0 else f"retarget {k}"
            text += [f"axis {ax.name} ({label}, leader target {r.leader_target:g}): {r.rounds} rounds", r.format_trace()]
    _emit(args, payload, "\n".join(text))
    return EXIT_OK


def cmd_simulate(args) -> int:
    scn = load_scenario(args.scenario)
    T = args.horizon if args.horizon is not None else horizon_for(scn)
    runs = simulate_scenario(scn, dt=args.dt, horizon=T)
    out = _out_dir(args, scn)
    payload, text, ok = {"scenario": scn.name, "axes": []}, [], True
    for r in runs:
        F = r.final_F
        tr = r.trajectory
        err = float(np.max(np.abs(tr.final - F)))
        settle = settling_time(tr, F)
        try:
            rates = fit_rates(tr, F).rates
        except FormationError:
            rates = {}
        ok &= err < 1e-3 * max(float(np.max(np.abs(F))), 1.0)
        payload["axes"].append(
            {
                "axis": r.axis,
                "final_state": tr.final.tolist(),
                "target": F.tolist(),
                "final_error": err,
                "settling_time": settle,
                "fitted_rates": {str(k): v for k, v in rates.items()},
            }
        )
        text.append(f"axis {r.axis}: final error {err:.3g}, settled at {settle}")
        if out:
            export.write_csv(tr, out / f"trajectory_{r.axis}.csv")
            export.plot_positions(tr, out / f"positions_{r.axis}.svg", F)
    if out and len(runs) == 2:
        formations = []
        for k in range(len(runs[0].solutions)):
            formations.append((runs[0].solutions[k].F, runs[1].solutions[min(k, len(runs[1].solutions) - 1)].F))
        export.plot_paths(runs[0].trajectory, runs[1].trajectory, out / "paths.svg", formations)
    _emit(args, payload, "\n".join(text))
    return EXIT_OK if ok else EXIT_FAIL


def _parse_vector(s: str, kind=float):
    return [kind(v.strip().replace(" ", "")) for v in s.split(",") if v.strip()]


def _load_matrix(path: Path):
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        return np.asarray(data["matrix"], dtype=float), data.get("formation"), data.get("poles")
    text = path.read_text()
    delim = "," if "," in text else None
    return np.loadtxt(path, delimiter=delim, ndmin=2), None, None


def cmd_verify(args) -> int:
    F = poles = None
    if args.random:
        rng = np.random.default_rng(args.seed)
        A = rng.standard_normal((args.random, args.random))
    elif args.matrix:
        try:
            A, F, poles = _load_matrix(Path(args.matrix))
        except (OSError, ValueError, KeyError) as exc:
            raise ScenarioError(f"cannot read matrix {args.matrix}: {exc}") from exc
    else:
        raise ScenarioError("verify needs --matrix or --random")
    if A.shape[0] != A.shape[1]:
        raise ScenarioError(f"matrix is not square: {A.shape}")
    if args.formation:
        F = _parse_vector(args.formation)
    if args.poles:
        poles = _parse_vector(args.poles, complex)
    n = A.shape[0]

    c_match = char_poly_matchings(A)
    c_fl = faddeev_leverrier(A)
    ev = spectrum(A)
    c_eig = poly_from_roots(ev)
    scale = max(1.0, float(np.max(np.abs(c_match))))
    agree = bool(np.allclose(c_match, c_fl, rtol=0, atol=1e-9 * scale) and np.allclose(c_match, c_eig, rtol=0, atol=1e-7 * scale))
    rep = verify_formation(A, F if F is not None else np.zeros(n), poles, tol=args.tol)
    roots_match = np.roots(c_match) if n else np.array([])
    _, root_gap = match_multisets(ev, roots_match)

    ok = agree and (F is None or rep.kernel_ok) and rep.spectrum_matches is not False
    payload = {
        "n": n,
        "char_poly_matchings": c_match,
        "char_poly_faddeev_leverrier": c_fl,
        "char_poly_from_eigenvalues": c_eig,
        "coefficients_agree": agree,
        "eigenvalues": [[complex(z).real, complex(z).imag] for z in ev],
        "matching_roots_vs_eigenvalues": root_gap,
        "kernel_residual": None if F is None else rep.kernel_residual,
        "spectrum_matches": rep.spectrum_matches,
        "max_pole_error": rep.max_pole_error,
        "ok": ok,
    }
    text = [
        f"char poly (matchings):  {_fmt_poly(c_match)}",
        f"char poly (Faddeev-LeVerrier): {_fmt_poly(c_fl)}",
        f"char poly (eigenvalues): {_fmt_poly(c_eig)}",
        f"coefficients agree: {agree}",
        "eigenvalues: " + ", ".join(f"{complex(z):.6g}" for z in ev),
    ]
    if F is not None:
        text.append(f"A.F residual: {rep.kernel_residual:.3g}  kernel ok: {rep.kernel_ok}")
    if poles is not None:
        text.append(f"spectrum vs requested poles: max error {rep.max_pole_error:.3g}  match: {rep.spectrum_matches}")
    text.append("PASS" if ok else "FAIL")
    _emit(args, payload, "\n".join(text))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leadform", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.add_argument("--scenario", required=True)
        sp.set_defaults(func=func)
        return sp

    scenario_cmd("check", cmd_check, "structural hypotheses of the graph")
    sp = scenario_cmd("synth", cmd_synth, "synthesize and verify gains")
    sp.add_argument("--policy", choices=("tree-unique", "min-norm"))
    scenario_cmd("protocol", cmd_protocol, "distributed gain computation trace")
    sp = scenario_cmd("simulate", cmd_simulate, "simulate and export trajectories")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--horizon", type=float)

    sp = sub.add_parser("verify", parents=[common], help="cross-check a closed-loop matrix")
    sp.add_argument("--matrix", help="text matrix (rows per line) or gains JSON from synth")
    sp.add_argument("--formation", help="comma-separated F")
    sp.add_argument("--poles", help="comma-separated follower poles, complex like -2.7+1.5j")
    sp.add_argument("--random", type=int, metavar="N", help="random N x N matrix (uses --seed)")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FormationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
