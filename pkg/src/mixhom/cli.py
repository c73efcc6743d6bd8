"""Batch command-line front end.

Reads a job specification (a line-oriented block format), runs the
requested computations, and writes one JSON result file plus a plain-text
summary per task.  Every numeric value is an exact rational rendered
canonically; two runs on the same input produce byte-identical artifacts.

Job file format::

    [algebra]
    kind exterior          # exterior | polynomial | quadratic
    n 2
    # polynomial algebras take a weight cutoff:
    # cutoff 4

    [poisson]              # optional; polynomial-side quadratic bivector
    c 1 2 1 2 1            # c^{j1 j2}_{i1 i2}: i1 i2 j1 j2 value

    [window]
    p_max 4
    w_max 4
    u_trunc 3
    arity_max 3

    [tasks]
    hh
    hc-minus
    check

Exit codes: 0 all checks pass, 2 verification failure, 3 window too small,
4 parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import (
    WindowOverflowError,
    check_frobenius_pairing,
    exterior_pairing,
    exterior_presentation,
    make_exterior_algebra,
    make_truncated_polynomial_algebra,
    polynomial_presentation,
    QuadraticPresentation,
)
from .calculus import (
    DualityError,
    WindowError,
    attach_duality,
    hochschild_dual_bundle,
    poisson_bundle,
    polyvector_pd_twist,
    verify_bv_axioms,
)
from .gravity import GravityStructure, verify_gravity_axioms
from .koszul import (
    dual_bivector_coeffs,
    is_koszul,
    koszul_dual_algebra,
    koszul_poisson_identification,
    small_hochschild_models,
)
from .mixed import (
    NegativeCyclic,
    cyclic_homology,
    default_truncation,
    les_check,
    slice_from_hochschild,
    slice_from_hochschild_dual,
    slice_from_poisson,
)
from . import poisson as po

Q = Fraction

SCHEMA = "mixhom-result@1"

TASKS = ("hh", "hc-minus", "poisson", "gravity", "koszul", "check")


class ParseError(Exception):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass
class JobSpecification:
    kind: str
    n: int
    cutoff: int | None = None
    relations: list | None = None
    poisson_coeffs: dict | None = None
    p_max: int = 4
    w_max: int = 4
    u_trunc: int | None = None
    arity_max: int = 3
    tasks: list[str] = field(default_factory=list)


def parse_rational(token: str, line_no: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(line_no, f"not an exact rational: {token!r}")


def parse_job(text: str) -> JobSpecification:
    """Parse a job file; raises ParseError with a line position on failure."""
    section = None
    algebra: dict = {}
    coeffs: dict = {}
    window: dict = {}
    tasks: list[str] = []
    relations: list = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("algebra", "poisson", "window", "tasks"):
                raise ParseError(line_no, f"unknown section {section!r}")
            continue
        if section is None:
            raise ParseError(line_no, "content before any [section] header")
        parts = line.split()
        if section == "algebra":
            key = parts[0].lower()
            if key == "kind":
                if len(parts) != 2 or parts[1] not in ("exterior", "polynomial", "quadratic"):
                    raise ParseError(line_no, "kind must be exterior | polynomial | quadratic")
                algebra["kind"] = parts[1]
            elif key in ("n", "cutoff"):
                try:
                    algebra[key] = int(parts[1])
                except (IndexError, ValueError):
                    raise ParseError(line_no, f"{key} takes one integer")
            elif key == "relation":
                # relation i j c [i j c ...]: a vector in the tensor basis
                body = parts[1:]
                if len(body) % 3:
                    raise ParseError(line_no, "relation takes triples: i j coeff")
                terms = []
                for t in range(0, len(body), 3):
                    i, j = int(body[t]), int(body[t + 1])
                    c = parse_rational(body[t + 2], line_no)
                    terms.append((i, j, c))
                relations.append(terms)
            else:
                raise ParseError(line_no, f"unknown algebra key {key!r}")
        elif section == "poisson":
            if parts[0].lower() != "c" or len(parts) != 6:
                raise ParseError(line_no, "poisson lines are: c i1 i2 j1 j2 value")
            idx = []
            for tok in parts[1:5]:
                try:
                    idx.append(int(tok))
                except ValueError:
                    raise ParseError(line_no, f"bad generator index {tok!r}")
            coeffs[tuple(idx)] = coeffs.get(tuple(idx), Q(0)) + parse_rational(parts[5], line_no)
        elif section == "window":
            key = parts[0].lower()
            if key not in ("p_max", "w_max", "u_trunc", "arity_max"):
                raise ParseError(line_no, f"unknown window key {key!r}")
            try:
                val = int(parts[1])
            except (IndexError, ValueError):
                raise ParseError(line_no, f"{key} takes one integer")
            if val <= 0:
                raise ParseError(line_no, f"{key} must be positive")
            window[key] = val
        elif section == "tasks":
            task = parts[0].lower()
            if task not in TASKS:
                raise ParseError(line_no, f"unknown task {task!r}")
            tasks.append(task)
    if "kind" not in algebra:
        raise ParseError(0, "missing [algebra] kind")
    n = algebra.get("n", 0)
    if n < 1:
        raise ParseError(0, "algebra needs n >= 1")
    spec = JobSpecification(
        kind=algebra["kind"],
        n=n,
        cutoff=algebra.get("cutoff"),
        relations=relations or None,
        poisson_coeffs=coeffs or None,
        tasks=tasks,
    )
    for k, v in window.items():
        setattr(spec, k, v)
    if spec.poisson_coeffs:
        for (i1, i2, j1, j2) in spec.poisson_coeffs:
            for t in (i1, i2, j1, j2):
                if not (1 <= t <= n):
                    raise ParseError(0, f"poisson coefficient index {t} out of range 1..{n}")
    return spec


# -- the runner -----------------------------------------------------------------


def _rat(x) -> str:
    return str(x)


def _sorted_dims(dims: dict) -> list:
    return [[d, w, dims[(d, w)]] for (d, w) in sorted(dims)]


def _build_algebra(spec: JobSpecification):
    if spec.kind == "exterior":
        return make_exterior_algebra(spec.n)
    if spec.kind == "polynomial":
        return make_truncated_polynomial_algebra(spec.n, spec.cutoff or spec.w_max)
    raise ValueError("structure-constant algebras are driven through presentations")


def _presentation(spec: JobSpecification) -> QuadraticPresentation:
    if spec.kind == "polynomial":
        return polynomial_presentation(spec.n)
    if spec.kind == "exterior":
        return exterior_presentation(spec.n)
    if spec.kind == "quadratic":
        if not spec.relations:
            raise ValueError("quadratic algebras need relation lines")
        rels = []
        for terms in spec.relations:
            vec = [Q(0)] * (spec.n * spec.n)
            for (i, j, c) in terms:
                if not (1 <= i <= spec.n and 1 <= j <= spec.n):
                    raise ValueError(f"relation index ({i},{j}) out of range")
                vec[(i - 1) * spec.n + (j - 1)] += c
            rels.append(tuple(vec))
        return QuadraticPresentation(spec.n, (0,) * spec.n, tuple(rels), name="input")
    raise ValueError(f"no presentation for kind {spec.kind}")


def task_hh(spec: JobSpecification) -> dict:
    A = _build_algebra(spec)
    sl = slice_from_hochschild(A, spec.w_max)
    hh = {k: v for k, v in sl.hh_dims().items() if v}
    return {
        "algebra": A.name,
        "hochschild_homology_dims": _sorted_dims(hh),
    }


def task_hc_minus(spec: JobSpecification) -> dict:
    A = _build_algebra(spec)
    sl = slice_from_hochschild(A, spec.w_max)
    N = spec.u_trunc or default_truncation(sl)
    hc = NegativeCyclic(sl, N)
    les = les_check(hc)
    return {
        "algebra": A.name,
        "truncation": N,
        "hc_minus_dims_stable": _sorted_dims({k: v for k, v in hc.stable_dims().items() if v}),
        "unstable_pieces": [[d, w] for (d, w) in sorted(hc.pres) if not hc.stable.get((d, w))],
        "cyclic_dims": _sorted_dims({k: v for k, v in cyclic_homology(sl).items() if v}),
        "les": {
            "beta_after_pi_zero": les.beta_after_pi_zero,
            "pi_after_beta_is_B": les.pi_after_beta_is_B,
            "kernel_beta_is_image_pi": les.kernel_beta_is_image_pi,
            "failures": les.failures,
        },
    }


def _poisson_data(spec: JobSpecification):
    if spec.kind != "polynomial":
        raise ValueError("poisson tasks need a polynomial algebra")
    ctx = po.PoissonContext.make(spec.n, "poly")
    pi = po.quadratic_bivector(ctx, spec.poisson_coeffs or {})
    return ctx, pi


def task_poisson(spec: JobSpecification) -> dict:
    ctx, pi = _poisson_data(spec)
    rep = po.unimodularity_check(ctx, pi, w_max=min(spec.w_max, 3))
    sl = slice_from_poisson(ctx, pi, spec.w_max)
    hp = {k: v for k, v in sl.hh_dims().items() if v}
    out = {
        "poisson_homology_dims": _sorted_dims(hp),
        "unimodular": rep.unimodular,
        "volume_is_cycle": rep.boundary_of_volume_zero,
        "diagram_commutes": rep.diagram_commutes,
        "modular_field_zero": rep.modular_field_zero,
    }
    ctxe = po.PoissonContext.make(spec.n, "ext")
    pid = po.quadratic_bivector(ctxe, dual_bivector_coeffs(spec.poisson_coeffs or {}))
    dual = po.DualSide(ctxe, pid, w_max=spec.n + 2)
    frep = po.frobenius_poisson_check(dual)
    out["dual_unimodular_frobenius"] = frep.unimodular
    out["equivalence_holds"] = frep.unimodular == rep.unimodular
    return out


def _gravity_structure(spec: JobSpecification):
    ctx, pi = _poisson_data(spec)
    w_slice = max(spec.w_max + 1, 2 * spec.n)
    sl = slice_from_poisson(ctx, pi, w_slice)
    N = spec.u_trunc or default_truncation(sl)
    hc = NegativeCyclic(sl, N)
    bundle = poisson_bundle(
        ctx, pi, sl, w_shift_min=-spec.n, w_shift_max=w_slice - spec.n, coeff_wmax=w_slice
    )
    vol = (0,) * spec.n + (1,) * spec.n
    piece = (spec.n, spec.n)
    coords = sl.hh(piece).reduce(sl.element_vector(piece, {vol: Q(1)}))
    eta = (piece, [i for i, c in enumerate(coords) if c][0])
    duality = attach_duality(bundle, eta, pd_twist=polyvector_pd_twist(1))
    # bracket tables stay inside the slice for low weights; out-of-window
    # tuples are reported as skips rather than silently dropped
    basis = [
        k
        for k in GravityStructure(hc, duality).basis
        if k[0][1] <= spec.w_max // 2 + 1
    ]
    return GravityStructure(hc, duality, basis)


def task_gravity(spec: JobSpecification) -> dict:
    g = _gravity_structure(spec)
    report = verify_gravity_axioms(g, n_max=min(spec.arity_max, 3), check_max=min(spec.arity_max + 1, 4))
    tables = {}
    for arity in range(2, min(spec.arity_max, 3) + 1):
        table = g.build_table(arity)
        rendered = {}
        # auxiliary lookups memoize under non-basis keys; render only the
        # basis-indexed entries
        entries = [
            (tup, val)
            for tup, val in table.items()
            if all(isinstance(i, int) for i in tup)
        ]
        for tup, val in sorted(entries):
            if val:
                rendered[",".join(map(str, tup))] = {
                    f"{k[0][0]},{k[0][1]},{k[1]}": _rat(v) for k, v in sorted(val.items())
                }
        tables[str(arity)] = rendered
    return {
        "basis": [[k[0][0], k[0][1], k[1]] for k in g.basis],
        "basis_degrees": [g.degree(k) for k in g.basis],
        "tables": tables,
        "skew_checked": report.skew_checked,
        "jacobi_checked": report.jacobi_checked,
        "violations": report.skew_failures + report.jacobi_failures,
        "window_skips": report.window_skips,
        "nonzero_brackets": {str(k): v for k, v in sorted(report.nonzero_brackets.items())},
    }


def task_koszul(spec: JobSpecification) -> dict:
    pres = _presentation(spec)
    W = spec.w_max
    verdict = is_koszul(pres, W)
    out = {
        "presentation": pres.name,
        "koszul_up_to_weight": {str(w): ok for w, ok in sorted(verdict.per_weight.items())},
        "koszul_up_to_cutoff": verdict.koszul_up_to_cutoff,
    }
    data = koszul_dual_algebra(pres, W)
    out["dual_piece_dims"] = {str(w): data.piece_dim(w) for w in range(W + 1)}
    if verdict.koszul_up_to_cutoff:
        models = small_hochschild_models(pres, W)
        out["small_model_chain_dims"] = [
            [s, t, d] for (s, t), d in sorted(models.chain_dims.items())
        ]
        out["small_model_cochain_dims"] = [
            [s, t, d] for (s, t), d in sorted(models.cochain_dims.items())
        ]
        if spec.kind == "polynomial":
            A = make_truncated_polynomial_algebra(spec.n, W)
            sl = slice_from_hochschild(A, W)
            bar = {k: v for k, v in sl.hh_dims().items() if v}
            conv = {}
            for (s, t), d in models.chain_dims.items():
                key = (t, s + t)
                conv[key] = conv.get(key, 0) + d
            out["bar_dims"] = _sorted_dims(bar)
            out["cross_model_dims_match"] = conv == bar
    if spec.poisson_coeffs and spec.kind == "polynomial":
        ident = koszul_poisson_identification(spec.n)
        failures = ident.check_chain_map(spec.poisson_coeffs, w_max=min(spec.w_max, 4))
        out["poisson_identification_chain_map"] = not failures
    return out


def task_check(spec: JobSpecification) -> dict:
    """Run every verification relevant to the specified algebra."""
    out: dict = {"passed": True, "checks": {}}

    def record(name, ok, detail=None):
        out["checks"][name] = {"passed": bool(ok)}
        if detail:
            out["checks"][name]["detail"] = detail
        if not ok:
            out["passed"] = False

    A = None
    if spec.kind in ("exterior", "polynomial"):
        A = _build_algebra(spec)
        sl = slice_from_hochschild(A, spec.w_max)
        record("mixed_complex_axioms", True)  # validated at construction
        N = spec.u_trunc or default_truncation(sl)
        hc = NegativeCyclic(sl, N)
        les = les_check(hc)
        record("long_exact_sequence", les.passed, les.failures[:4] or None)
    if spec.kind == "exterior":
        Ae, pairing = exterior_pairing(spec.n)
        rep = check_frobenius_pairing(Ae, pairing)
        record("frobenius_pairing", rep.passed)
        if spec.n <= 2:
            sld = slice_from_hochschild_dual(Ae, spec.w_max)
            # PD sends weight shift ω to hom weight n - ω, so ω stays above
            # n - w_max to keep every target inside the slice
            bundle = hochschild_dual_bundle(
                Ae, sld, q_max=spec.p_max + 1,
                coh_window=lambda p: spec.n - spec.w_max <= p[1] <= spec.n
                and -spec.n <= p[0] <= 0,
            )
            top = Ae.dim - 1
            piece = (spec.n, spec.n)
            coords = sld.hh(piece).reduce(sld.element_vector(piece, {(top,): Q(1)}))
            eta = (piece, [i for i, c in enumerate(coords) if c][0])
            try:
                duality = attach_duality(bundle, eta)
                bv = verify_bv_axioms(duality, max_classes=24, quartic_limit=60)
                record(
                    "bv_suite",
                    bv.passed,
                    {
                        "seven_term_checked": bv.seven_term_checked,
                        "quartic_checked": bv.quartic_checked,
                        "failures": (bv.seven_term_failures + bv.bracket_failures)[:4] or None,
                    },
                )
            except DualityError as exc:
                record("bv_suite", False, str(exc))
    if spec.poisson_coeffs and spec.kind == "polynomial":
        ctx, pi = _poisson_data(spec)
        try:
            po.check_jacobi(ctx, pi)
            record("jacobi", True)
        except po.JacobiError as exc:
            record("jacobi", False, str(exc))
            return out
        rep = po.unimodularity_check(ctx, pi, w_max=min(spec.w_max, 3))
        agreement = rep.boundary_of_volume_zero == rep.diagram_commutes == rep.modular_field_zero
        record("unimodularity_diagnostics_agree", agreement)
        ctxe = po.PoissonContext.make(spec.n, "ext")
        pid = po.quadratic_bivector(ctxe, dual_bivector_coeffs(spec.poisson_coeffs))
        frep = po.frobenius_poisson_check(po.DualSide(ctxe, pid, w_max=spec.n + 2))
        record("primal_dual_unimodularity_equivalence", frep.unimodular == rep.unimodular)
    return out


TASK_RUNNERS = {
    "hh": task_hh,
    "hc-minus": task_hc_minus,
    "poisson": task_poisson,
    "gravity": task_gravity,
    "koszul": task_koszul,
    "check": task_check,
}


def _atomic_write(path: str, content: str):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-mixhom-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _summarize(task: str, result: dict) -> str:
    lines = [f"task: {task}"]

    def emit(prefix, value):
        if isinstance(value, dict):
            for k in sorted(value):
                emit(f"{prefix}{k}.", value[k])
        elif isinstance(value, list):
            lines.append(f"{prefix[:-1]}: {json.dumps(value, sort_keys=True)}")
        else:
            lines.append(f"{prefix[:-1]}: {value}")

    emit("", result)
    return "\n".join(lines) + "\n"


def run_job(spec: JobSpecification, out_dir: str) -> int:
    """Run the job's tasks, write artifacts, and return the exit code."""
    os.makedirs(out_dir, exist_ok=True)
    exit_code = 0
    for task in spec.tasks or ["check"]:
        try:
            result = TASK_RUNNERS[task](spec)
        except (WindowOverflowError, WindowError) as exc:
            result = {"error": "window too small", "detail": str(exc)}
            exit_code = max(exit_code, 3)
        except (DualityError, po.JacobiError) as exc:
            result = {"error": "verification failure", "detail": str(exc)}
            exit_code = max(exit_code, 2)
        payload = {"schema": SCHEMA, "task": task, "result": result}
        blob = json.dumps(payload, sort_keys=True, indent=1, default=str) + "\n"
        _atomic_write(os.path.join(out_dir, f"{task}.json"), blob)
        _atomic_write(os.path.join(out_dir, f"{task}.txt"), _summarize(task, result))
        if task == "check" and isinstance(result, dict) and not result.get("passed", True):
            exit_code = max(exit_code, 2)
        if task == "gravity" and isinstance(result, dict) and result.get("violations"):
            exit_code = max(exit_code, 2)
    return exit_code


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mixhom",
        description="Exact homological calculus for small graded algebras",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="job specification file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--pmax", type=int, help="override p_max")
    common.add_argument("--wmax", type=int, help="override w_max")
    common.add_argument("--utrunc", type=int, help="override u-truncation order")
    common.add_argument("--nmax", "--arity-check", dest="nmax", type=int, help="override arity_max")
    sub.add_parser("run", parents=[common], help="run the task list from the job file")
    for task in TASKS:
        sub.add_parser(task, parents=[common], help=f"run the {task} task")
    args = parser.parse_args(argv)
    try:
        with open(args.input) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return 4
    try:
        spec = parse_job(text)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 4
    if args.pmax:
        spec.p_max = args.pmax
    if args.wmax:
        spec.w_max = args.wmax
    if args.utrunc:
        spec.u_trunc = args.utrunc
    if args.nmax:
        spec.arity_max = args.nmax
    if args.command != "run":
        spec.tasks = [args.command]
    elif not spec.tasks:
        print("job file lists no tasks", file=sys.stderr)
        return 4
    return run_job(spec, args.out)


if __name__ == "__main__":
    sys.exit(main())
