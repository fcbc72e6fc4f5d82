import logging
from contextlib import contextmanager
from typing import List

import numpy as np
import pandas as pd
import typer

from modules import analysis, configuration, tools
from modules.Exporter import Exporter
from modules.enumerators import EXACT, EnumeratorVector
from modules.errors import QweError
from modules.estimation import estimate_enumerators, fit_depolarizing_mitigation, fit_mitigation, mitigated_vectors
from modules.noise import CRITERIA, NoiseModel, noisy_family_enumerators, threshold_scan
from modules.sampler.decoder import build_lookup_decoder, correct, postselect
from modules.sampler.frames import sample_tpd, simulate_bell_circuit, simulate_code_bell_sampling
from modules.sampler.samples import BellSampleSet
from modules.states.families import prep_circuit, product_sld
from modules.states.stabilizer import code_enumerators
from modules.transforms import build_transform, convert, matrix_frame, round_trip_residual

# logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

app = typer.Typer()

IniOption = typer.Option(None, "--ini", help="settings file, defaults to ./settings.ini when present")
DebugOption = typer.Option(False, "--debug", help="debug logging")
OutOption = typer.Option(None, "--out", help="output path, stdout when omitted")
FormatOption = typer.Option("json", "--format", help="json or csv")


def setup(inifile: str, debug: bool):
    conf = configuration.load(inifile)
    if debug or conf.getBool("Debug", "flag"):
        logging.getLogger().setLevel(logging.DEBUG)
    return conf


@contextmanager
def guarded():
    """Map library errors to exit codes: 2 contract, 3 resource limit, 4 I/O."""
    try:
        yield
    except QweError as e:
        logger.error("Error: " + type(e).__name__ + " - " + str(e))
        raise typer.Exit(code=e.exit_code)
    except OSError as e:
        logger.error("Error: " + type(e).__name__ + " - " + str(e))
        raise typer.Exit(code=4)


def check_format(fmt: str):
    if fmt not in ("json", "csv"):
        raise typer.BadParameter(f"unknown format {fmt!r}; use json or csv")


def resolve_seed(seed: int) -> int:
    if seed is not None:
        return seed
    generated = int(np.random.SeedSequence().entropy % 2**32)
    logger.warning(f"No --seed given; using generated seed {generated}")
    return generated


@app.command("enumerate")
def enumerateStates(
    family: str = typer.Option(None, "--family", help="e.g. ghz, dicke:2, mixture:1/3"),
    n: int = typer.Option(None, "--n"),
    code: str = typer.Option(None, "--code", help="built-in code name or .stab/.json file"),
    precision: str = typer.Option(None, "--precision", help="exact or f64"),
    out: str = OutOption,
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Exact enumerators of a state family or a stabilizer code, in all six kinds.

    Codes also report the weight counts A, B, A_shadow and the distance.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        payload = {}
        if code is not None:
            group = tools.resolve_code(code)
            enums = code_enumerators(group)
            mode = tools.resolve_precision(precision, group.n)
            vectors = tools.all_kinds(enums.sld(), mode)
            distance = analysis.code_distance(enums)
            payload["source"] = group.name or code
            payload["code"] = {**enums.to_json(), "distance": distance.to_json()}
            logger.info(f"{payload['source']}: n={group.n}, k={group.k}, distance {distance.distance}")
        elif family is not None and n is not None:
            state = tools.parse_family(family, n)
            mode = tools.resolve_precision(precision, n)
            vectors = tools.family_vectors(state, mode)
            payload["source"] = state.label
        else:
            raise typer.BadParameter("give --code, or --family with --n")
        arguments = {"family": family, "n": n, "code": code, "precision": mode, "format": fmt}
        exporter = Exporter("enumerate", precision=mode, arguments=arguments)
        if fmt == "csv":
            exporter.toCSV(out, tools.vectors_frame(vectors), index=True)
        else:
            payload["vectors"] = {kind: vec.to_json() for kind, vec in vectors.items()}
            exporter.toJSON(out, payload)


@app.command()
def transform(
    kind: str = typer.Option(..., "--kind", help="source-to-target (e.g. sld-to-apd) or matrix"),
    infile: str = typer.Option(None, "--in", help="enumerator vector file"),
    which: str = typer.Option(None, "--which", help="matrix name for --kind matrix, e.g. M, T_tilde_inv"),
    n: int = typer.Option(None, "--n"),
    precision: str = typer.Option(None, "--precision", help="exact or f64"),
    out: str = OutOption,
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Convert an enumerator vector between kinds, or export one of the nine transform matrices.

    Vector conversions report the round-trip residual max|v - back(forward(v))|.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        if kind == "matrix":
            if which is None or n is None:
                raise typer.BadParameter("--kind matrix needs --which and --n")
            mode = tools.resolve_precision(precision, n)
            matrix = build_transform(which, n, mode)
            arguments = {"kind": kind, "which": which, "n": n, "precision": mode, "format": fmt}
            exporter = Exporter("transform", precision=mode, arguments=arguments)
            if fmt == "csv":
                exporter.toCSV(out, matrix_frame(matrix), index=True)
            else:
                exporter.toJSON(out, {"matrix": matrix.to_json()})
            return

        source, sep, target = kind.partition("-to-")
        if not sep or infile is None:
            raise typer.BadParameter("--kind must read source-to-target and --in is required")
        source, target = source.replace("-", "_"), target.replace("-", "_")
        vector = EnumeratorVector.load(infile)
        if vector.kind != source:
            raise typer.BadParameter(f"{infile} holds a {vector.kind} vector, not {source}")
        mode = tools.resolve_precision(precision, vector.n) if precision else vector.precision
        result = convert(vector, target, mode)
        residual = round_trip_residual(vector, target)
        logger.info(f"{source} -> {target} (n={vector.n}), round-trip residual {residual:.3g}")
        arguments = {"kind": kind, "in": infile, "precision": mode, "format": fmt}
        exporter = Exporter("transform", precision=mode, arguments=arguments)
        if fmt == "csv":
            exporter.toCSV(out, tools.vectors_frame({source: vector, target: result}), index=True)
        else:
            exporter.toJSON(out, {"vector": result.to_json(), "residual": residual})


@app.command()
def sample(
    family: str = typer.Option(None, "--family"),
    n: int = typer.Option(None, "--n"),
    code: str = typer.Option(None, "--code", help="CSS code; samples its maximally mixed code state"),
    shots: int = typer.Option(1000, "--shots"),
    seed: int = typer.Option(None, "--seed"),
    p: float = typer.Option(0.0, "--p", help="local depolarizing strength before the Bell measurement"),
    gate_error: float = typer.Option(0.0, "--gate-error", help="depolarizing error after every gate"),
    from_tpd: bool = typer.Option(False, "--from-tpd", help="draw triplet counts from the exact TPD"),
    show_progress: bool = typer.Option(False, "--progress"),
    out: str = typer.Option(None, "--out", help=".bell for the binary codec, JSON otherwise"),
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Two-copy Bell sampling of a state family or a CSS code.

    Stabilizer families run through the Pauli-frame simulator; other families (or --from-tpd)
    are sampled as triplet-count histograms from their exact, noisy TPD.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        seed = resolve_seed(seed)
        noise = NoiseModel(p, gate_error)
        if code is not None:
            group = tools.resolve_code(code)
            samples = simulate_code_bell_sampling(group, noise, shots, seed, show_progress)
        elif family is not None and n is not None:
            state = tools.parse_family(family, n)
            if state.is_stabilizer and not from_tpd:
                samples = simulate_bell_circuit(prep_circuit(state), n, noise, shots, seed, show_progress)
            else:
                if gate_error > 0:
                    raise typer.BadParameter("--gate-error needs a circuit; drop --from-tpd or use a stabilizer family")
                tpd = noisy_family_enumerators(state, p)["tpd"]
                samples = sample_tpd(tpd, shots, seed)
            samples = samples.with_provenance(family=state.label)
        else:
            raise typer.BadParameter("give --code, or --family with --n")
        logger.info(f"Sampled {samples.shots} shots on {samples.n} pairs (seed {seed})")
        arguments = {"family": family, "n": n, "code": code, "shots": shots, "seed": seed, "p": p,
                     "gate-error": gate_error, "from-tpd": from_tpd, "format": fmt}
        exporter = Exporter("sample", seed=seed, precision=EXACT, arguments=arguments)
        if fmt == "csv":
            exporter.toCSV(out, samples.histogram_frame())
        else:
            exporter.toSamples(out, samples)


@app.command()
def estimate(
    infile: str = typer.Option(..., "--in", help="Bell samples (.json or .bell)"),
    postselect_code: str = typer.Option(None, "--postselect", help="keep shots with zero syndrome of this code"),
    correct_code: str = typer.Option(None, "--correct", help="apply lookup-table corrections for this code"),
    mitigate_ref: str = typer.Option(None, "--mitigate-ref", help="Bell samples of the |0...0> reference state"),
    mitigation_mode: str = typer.Option("damping", "--mitigation-mode", help="damping or depolarizing"),
    bootstrap: int = typer.Option(None, "--bootstrap", help="bootstrap resamples, 0 disables intervals"),
    seed: int = typer.Option(None, "--seed", help="bootstrap seed, defaults to the samples' seed"),
    out: str = OutOption,
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Unbiased estimates of all six enumerators from Bell samples, with bootstrap intervals.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        if postselect_code and correct_code:
            raise typer.BadParameter("--postselect and --correct are exclusive")
        samples = BellSampleSet.load(infile)
        retained = 1.0
        if postselect_code:
            samples, retained = postselect(samples, tools.resolve_code(postselect_code))
            logger.info(f"Postselection retained {retained:.4f} of the shots")
        elif correct_code:
            samples = correct(samples, build_lookup_decoder(tools.resolve_code(correct_code)))
        report = estimate_enumerators(samples, bootstrap_resamples=bootstrap, seed=seed)
        report.retained_fraction = retained

        if mitigate_ref:
            reference = BellSampleSet.load(mitigate_ref)
            ideal = product_sld(reference.n)
            raw = estimate_enumerators(reference, bootstrap_resamples=0)
            if mitigation_mode == "damping":
                model = fit_mitigation(raw.vectors["sld"], ideal, mitigate_ref)
            elif mitigation_mode == "depolarizing":
                model = fit_depolarizing_mitigation(raw.purity, ideal, mitigate_ref)
            else:
                raise typer.BadParameter(f"unknown mitigation mode {mitigation_mode!r}")
            mitigated = mitigated_vectors(report.vectors["sld"], model)
            report.mitigation = {
                "mode": mitigation_mode,
                "model": model.to_json(),
                "vectors": {kind: vec.to_json() for kind, vec in mitigated.items()},
            }

        seed = seed if seed is not None else samples.seed
        arguments = {"in": infile, "postselect": postselect_code, "correct": correct_code,
                     "mitigate-ref": mitigate_ref, "mitigation-mode": mitigation_mode,
                     "bootstrap": report.bootstrap, "seed": seed, "format": fmt}
        exporter = Exporter("estimate", seed=seed, precision="float64", arguments=arguments)
        if fmt == "csv":
            exporter.toCSV(out, tools.estimation_frame(report), index=True)
        else:
            exporter.toJSON(out, {"estimation": report.to_json()})


@app.command()
def analyze(
    infile: str = typer.Option(..., "--in", help="estimation report, enumerate output or vector file"),
    k: int = typer.Option(None, "--k", help="logical qubits, enables the distance rule on estimates"),
    sigmas: float = typer.Option(3.0, "--sigmas", help="standard errors a margin must clear"),
    out: str = OutOption,
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Entanglement criteria, distance, TPD moments and admissibility checks for enumerator vectors.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        vectors, report, code = tools.load_analysis_input(infile)
        if report is not None:
            criteria = analysis.criteria_from_estimate(report, sigmas)
        else:
            primal = {kind: vectors[kind] for kind in ("sld", "apd", "tpd") if kind in vectors}
            if not primal:
                first = next(iter(vectors.values()))
                primal = {first.kind.replace("dual_", ""): convert(first, first.kind.replace("dual_", ""))}
            criteria = analysis.criteria_report(**primal)

        sld = vectors["sld"] if "sld" in vectors else convert(next(iter(vectors.values())), "sld")
        tpd = convert(sld, "tpd")
        result = {
            "criteria": criteria.to_json(),
            "tpd_moments": analysis.tpd_moments(tpd),
            "admissibility": [v.to_json() for v in analysis.tpd_admissibility(tpd)],
        }
        if code is not None:
            result["distance"] = code["distance"]
        elif k is not None:
            dual = vectors["dual_sld"] if "dual_sld" in vectors else convert(sld, "dual_sld")
            result["distance"] = analysis.code_distance_from_estimates(sld, dual, k).to_json()
        for name, verdict in criteria.verdicts.items():
            logger.info(f"{name} criterion: {'entangled' if verdict else 'inconclusive'}")

        arguments = {"in": infile, "k": k, "sigmas": sigmas, "format": fmt}
        exporter = Exporter("analyze", precision=sld.precision, arguments=arguments)
        if fmt == "csv":
            rows = [{"criterion": name, "margin": margin, "tolerance": criteria.tolerances[name],
                     "certified": criteria.verdicts[name]}
                    for name, margin in (("n_body", criteria.n_body_margin), ("purity", criteria.purity_margin),
                                         ("concurrence", criteria.concurrence_lower_bound))]
            exporter.toCSV(out, pd.DataFrame(rows))
        else:
            exporter.toJSON(out, result)


@app.command()
def plan(
    family: str = typer.Option(..., "--family"),
    n: List[int] = typer.Option(..., "--n", help="repeat for several qubit counts"),
    target_var: float = typer.Option(1e-4, "--target-var", help="total SLD variance to reach"),
    epsilon: float = typer.Option(0.01, "--epsilon"),
    delta: float = typer.Option(0.05, "--delta"),
    simultaneous: bool = typer.Option(False, "--simultaneous", help="union bound over all n+1 entries"),
    show_progress: bool = typer.Option(False, "--progress"),
    out: str = OutOption,
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Shot budgets per qubit count: variance-based SLD counts and Hoeffding bounds.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        df = tools.plan_frame(family, n, target_var, epsilon, delta, simultaneous, show_progress)
        arguments = {"family": family, "n": list(n), "target-var": target_var, "epsilon": epsilon, "delta": delta,
                     "simultaneous": simultaneous, "format": fmt}
        exporter = Exporter("plan", precision=EXACT, arguments=arguments)
        if fmt == "csv":
            exporter.toCSV(out, df)
        else:
            exporter.toJSON(out, {"plan": df.to_dict(orient="records")})


@app.command()
def thresholds(
    family: List[str] = typer.Option(..., "--family", help="repeat for several families"),
    n: List[int] = typer.Option(..., "--n", help="repeat for several qubit counts"),
    criterion: List[str] = typer.Option(None, "--criterion", help="n-body, purity, concurrence, fidelity"),
    bound: float = typer.Option(None, "--bound", help="fidelity bound, [Threshold] fidelity_bound by default"),
    show_progress: bool = typer.Option(False, "--progress"),
    out: str = OutOption,
    fmt: str = FormatOption,
    ini: str = IniOption,
    debug: bool = DebugOption,
):
    """
    Largest local depolarizing strength at which each criterion still certifies entanglement.
    """
    setup(ini, debug)
    check_format(fmt)
    with guarded():
        criteria = [c.replace("-", "_") for c in criterion] if criterion else list(CRITERIA)
        states = []
        for spec in family:
            for size in n:
                try:
                    states.append(tools.parse_family(spec, size))
                except QweError as e:
                    logger.warning(f"Skipping {spec} at n={size}: {e}")
        df = threshold_scan(states, criteria, bound, show_progress)
        arguments = {"family": list(family), "n": list(n), "criterion": criteria, "bound": bound, "format": fmt}
        exporter = Exporter("thresholds", precision="float64", arguments=arguments)
        if fmt == "csv":
            exporter.toCSV(out, df)
        else:
            exporter.toJSON(out, {"thresholds": df.to_dict(orient="records")})


if __name__ == "__main__":
    app()
