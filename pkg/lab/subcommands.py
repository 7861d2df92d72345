"""
One runner per CLI subcommand.

A runner takes the JSON-safe parameter dict stored in a run manifest (rationals,
points and ranges still in their text form) and returns a RunOutcome, so the
management command and manifest replay go through the same code.
"""

import itertools
import math
import re
import time
from dataclasses import asdict, replace
from fractions import Fraction

from lab.choices import PolymerModel, WalkKind
from lab.diagrams import DiagramSpec, L_scaling_probe, catalogue, eval_diagram, walk_box_field
from lab.enumeration import (
    check_exponential_decay,
    check_subadditivity,
    enumerate_census,
    enumerate_counts,
    pc_estimate,
    simon_lieb_check,
    xi2_from_census,
)
from lab.exceptions import PreconditionError
from lab.greens import (
    decomposition_params,
    green_axis,
    nn_mass,
    phi_remainder,
    so_mass,
    verify_decay_bound,
    verify_mass_chi_product,
)
from lab.kernel import make_kernel
from lab.profile import faxen_general, log_convexity_defect, profile_table, window_prediction
from lab.runs import RunOutcome, csv_table
from lab.schemas import (
    CensusOut,
    DecompositionOut,
    DiagramValueOut,
    GreensOut,
    InequalityOut,
    LiftAuditOut,
    MassOut,
    ProfileValueOut,
    SandwichOut,
    SandwichRowOut,
    SeriesOut,
    TruncationOut,
    WindowOut,
    WrapIdentityOut,
)
from lab.torus import (
    lift_audit,
    representative,
    sandwich_check,
    torus_susceptibility_series,
    torus_two_point_series,
    wrap_identity_check,
)
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)

SUBCOMMANDS = {}

RATIONAL_PATTERN = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def subcommand(name: str):
    def register(function):
        SUBCOMMANDS[name] = function
        return function

    return register


def execute(name: str, parameters: dict, workers: int | None = None) -> RunOutcome:
    if name not in SUBCOMMANDS:
        raise PreconditionError(f"unknown subcommand {name!r}")
    return SUBCOMMANDS[name](parameters, workers)


def parse_rational(text) -> Fraction:
    """'a/b' or an integer; decimals are rejected because the checks that need this are exact."""
    match = RATIONAL_PATTERN.match(str(text))
    if not match:
        raise PreconditionError(f"{text!r} is not an exact rational of the form a/b")
    numerator, denominator = match.groups()
    if denominator is not None and int(denominator) == 0:
        raise PreconditionError(f"{text!r} has a zero denominator")
    return Fraction(int(numerator), int(denominator or 1))


def parse_activity(text) -> Fraction | float:
    if RATIONAL_PATTERN.match(str(text)):
        return parse_rational(text)
    try:
        value = float(text)
    except ValueError as error:
        raise PreconditionError(f"{text!r} is not a number") from error
    if not math.isfinite(value):
        raise PreconditionError(f"{text!r} is not finite")
    return value


def parse_point(text) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in str(text).split(","))
    except ValueError as error:
        raise PreconditionError(f"{text!r} is not a comma-separated lattice point") from error


def parse_range(text) -> tuple[float, float, float]:
    """'lo:hi:step' or a single value."""
    parts = str(text).split(":")
    try:
        values = [float(part) for part in parts]
    except ValueError as error:
        raise PreconditionError(f"{text!r} is not a range lo:hi:step") from error
    if len(values) == 1:
        return values[0], values[0], 1.0
    if len(values) != 3:
        raise PreconditionError(f"{text!r} is not a range lo:hi:step")
    return values[0], values[1], values[2]


def _lattice(parameters: dict) -> tuple[int, int, int, str]:
    return parameters["d"], parameters["L"], parameters["nmax"], parameters["model"]


def _series_out(series) -> dict:
    return SeriesOut(**series.to_payload()).model_dump()


def _verdict(holds: bool) -> str:
    return "PASS" if holds else "FAIL"


@subcommand("enum")
def run_enum(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, n_max, model = _lattice(parameters)
    census = enumerate_counts(d, L, n_max, model, workers=workers)
    subadditivity = check_subadditivity(census)

    estimate = None
    if n_max >= 4 and all(census.t_n):
        estimate = pc_estimate(census)

    squares = [(n + 1) ** 2 * count for n, count in enumerate(census.t_n)]
    identities = {
        "chi_bound": all(
            chi <= bound for chi, bound in zip(census.square_n, squares, strict=True)
        )
    }
    if model == PolymerModel.TREE:
        rooted = [(n + 1) * count for n, count in enumerate(census.t_n)]
        identities["rooted"] = census.rooted_n == rooted
        identities["chi"] = census.square_n == squares

    summary = [f"{model} polymers, d={d}, L={L}, omega={census.omega}, n_max={n_max}"]
    summary.extend(f"t_{n} = {count}" for n, count in enumerate(census.t_n))
    summary.append(
        f"subadditivity t_n t_m <= t_(n+m+1): {_verdict(subadditivity.holds)} "
        f"({subadditivity.checked} pairs)"
    )
    if estimate is not None:
        summary.append(f"p_c ratio estimate (advisory) = {estimate.estimate:.6f}")

    return RunOutcome(
        subcommand="enum",
        payload={
            "census": CensusOut(**census.to_payload()).model_dump(),
            "subadditivity": {
                "holds": subadditivity.holds,
                "checked": subadditivity.checked,
                "violations": [list(pair) for pair in subadditivity.violations],
            },
            "identities": identities,
            "pc_estimate": None
            if estimate is None
            else {"estimate": estimate.estimate, "ratios": list(estimate.ratios)},
        },
        truncation=TruncationOut(n_max=n_max),
        tables={
            "counts.csv": csv_table(
                ["n", "t_n", "rooted_n", "chi_n"],
                zip(range(n_max + 1), census.t_n, census.rooted_n, census.square_n, strict=True),
            )
        },
        summary=summary,
    )


@subcommand("twopoint")
def run_twopoint(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, n_max, model = _lattice(parameters)
    x = parse_point(parameters["x"])
    census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers)
    series = census.two_point(x)

    payload = {"x": list(x), "series": _series_out(series)}
    summary = [f"c_n({parameters['x']}) = {list(series.coeffs)}"]

    if parameters.get("p") is not None:
        p = parse_rational(parameters["p"])
        value = series.evaluate(p)
        payload["p"] = str(p)
        payload["value"] = str(value)
        summary.append(f"G_p(x) at p={p}, truncated at n_max={n_max}: {value}")

        if parameters.get("lambda_radius") is not None:
            radius = parameters["lambda_radius"]
            region = list(itertools.product(range(-radius, radius + 1), repeat=d))
            report = simon_lieb_check(d, L, n_max, p, region, x, model=model, census=census)
            payload["simon_lieb"] = InequalityOut(
                lhs=str(report.lhs), rhs=str(report.rhs), holds=report.holds
            ).model_dump()
            payload["lambda_radius"] = radius
            summary.append(
                f"Simon-Lieb on the radius-{radius} box: {_verdict(report.holds)} "
                f"(lhs={report.lhs}, rhs={report.rhs})"
            )
    elif parameters.get("lambda_radius") is not None:
        raise PreconditionError("--lambda-radius needs an exact activity --p")

    header = [f"x{axis + 1}" for axis in range(d)] + [f"c_{n}" for n in range(n_max + 1)]
    rows = [list(point) + list(census.two_point(point).coeffs) for point in census.support()]
    return RunOutcome(
        subcommand="twopoint",
        payload=payload,
        truncation=TruncationOut(n_max=n_max),
        tables={"two_point.csv": csv_table(header, rows)},
        summary=summary,
    )


@subcommand("chi")
def run_chi(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, n_max, model = _lattice(parameters)
    census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers)
    chi = census.susceptibility()
    moment = census.second_moment()

    payload = {"chi": _series_out(chi), "second_moment": _series_out(moment)}
    summary = [f"chi_n = {list(chi.coeffs)}"]
    header = ["n", "chi_n", "second_moment_n"]
    columns = [range(n_max + 1), chi.coeffs, moment.coeffs]

    m = parameters.get("m")
    if m is not None:
        tilted = census.tilted_susceptibility(m)
        payload["tilted_chi"] = _series_out(tilted)
        header.append("tilted_chi_n")
        columns.append(tilted.coeffs)

    if parameters.get("p") is not None:
        p = parse_activity(parameters["p"])
        xi2 = xi2_from_census(census, p)
        payload["p"] = str(p)
        payload["xi2"] = xi2
        summary.append(f"xi_2(p={p}) = {xi2:.12g} (truncated at n_max={n_max})")
        if m is not None:
            decay = check_exponential_decay(census, p, m)
            payload["exponential_decay"] = {
                "holds": decay.holds,
                "worst_ratio": decay.worst_ratio,
                "worst_point": None if decay.worst_point is None else list(decay.worst_point),
            }
            summary.append(f"G_p(x) <= chi^(m)(p) e^(-m|x|): {_verdict(decay.holds)}")

    return RunOutcome(
        subcommand="chi",
        payload=payload,
        truncation=TruncationOut(n_max=n_max),
        tables={"chi.csv": csv_table(header, zip(*columns, strict=True))},
        summary=summary,
    )


@subcommand("mass")
def run_mass(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, kind = parameters["d"], parameters["L"], parameters["kind"]
    z_values = list(parameters["z"])

    rows = []
    if kind == WalkKind.NEAREST_NEIGHBOUR:
        for z in z_values:
            result = nn_mass(z, d)
            rows.append(
                MassOut(
                    d=d,
                    activity=z,
                    m=result.m,
                    xi=result.xi,
                    method=result.method,
                    residual=result.residual,
                )
            )
        ratios = [None] * len(rows)
    else:
        kernel = make_kernel(d, L)
        for z in z_values:
            result = so_mass(kernel, z)
            rows.append(
                MassOut(
                    d=d,
                    L=L,
                    activity=z,
                    m=result.m,
                    xi=result.xi,
                    method=result.method,
                    residual=result.residual,
                )
            )
        ratios = [row.ratio for row in verify_mass_chi_product(kernel, z_values)]

    summary = [f"z = {row.activity}  m = {row.m!r}  xi = {row.xi!r}" for row in rows]
    return RunOutcome(
        subcommand="mass",
        payload={
            "kind": kind,
            "rows": [row.model_dump() for row in rows],
            "mass_chi_ratio": ratios,
        },
        tables={
            "mass.csv": csv_table(
                ["z", "m", "xi", "residual", "mass_chi_ratio"],
                (
                    (row.activity, row.m, row.xi, row.residual, "" if ratio is None else ratio)
                    for row, ratio in zip(rows, ratios, strict=True)
                ),
            )
        },
        summary=summary,
    )


@subcommand("greens")
def run_greens(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, z, kind = parameters["d"], parameters["L"], parameters["z"], parameters["kind"]
    kernel = make_kernel(d, L)
    report = verify_decay_bound(kernel, z, parameters.get("grid"), kind=kind)
    axis = green_axis(kernel, z, report.grid_size, kind=kind)

    greens = GreensOut(
        d=d,
        L=L,
        z=z,
        kind=kind,
        grid_size=report.grid_size,
        mass=report.mass,
        slope=report.slope,
        slope_ratio=report.ratio,
        window=list(report.window),
    )
    return RunOutcome(
        subcommand="greens",
        payload=greens.model_dump() | {"prefactor_power": report.prefactor_power},
        truncation=TruncationOut(grid_size=report.grid_size),
        tables={"axis.csv": axis.axis_csv()},
        summary=[
            f"mass = {report.mass!r}",
            f"axis decay slope = {report.slope!r} on n in [{report.window[0]}, {report.window[1]}]",
            f"slope / mass = {report.ratio:.6f} (grid N={report.grid_size})",
        ],
    )


@subcommand("decomp")
def run_decomp(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, z = parameters["d"], parameters["L"], parameters["z"]
    kernel = make_kernel(d, L)
    params = decomposition_params(kernel, z)
    tables = {"E_z_axis.csv": params.E_z.axis_csv()}
    summary = [
        f"lambda_z = {params.lambda_z!r}  mu_z = {params.mu_z!r}",
        f"sum E_z = {params.moment0:.3e}  sum |x|^2 E_z = {params.moment2:.3e}",
    ]

    phi_sup = None
    grid_size = parameters.get("grid")
    if grid_size is not None:
        phi, phi_sup = phi_remainder(kernel, z, grid_size)
        tables["phi_axis.csv"] = phi.axis_csv()
        summary.append(f"sup |x|^(d-2) |phi_z(x)| = {phi_sup:.6e} (grid N={grid_size})")

    decomposition = DecompositionOut(
        d=d,
        L=L,
        z=z,
        lambda_z=params.lambda_z,
        mu_z=params.mu_z,
        moment0=params.moment0,
        moment2=params.moment2,
        phi_sup=phi_sup,
    )
    return RunOutcome(
        subcommand="decomp",
        payload=decomposition.model_dump() | {"E_z": params.E_z.to_payload()},
        truncation=TruncationOut(box_radius=L, grid_size=grid_size),
        tables=tables,
        summary=summary,
    )


@subcommand("torus")
def run_torus(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, n_max, model = _lattice(parameters)
    period = parameters["r"]
    x = representative(parse_point(parameters["x"]), period)
    series = torus_two_point_series(d, L, period, n_max, model, x, workers=workers)
    chi = torus_susceptibility_series(d, L, period, n_max, model, workers=workers)

    payload = {"x": list(x), "two_point": _series_out(series), "chi": _series_out(chi)}
    summary = [f"torus c_n(x) = {list(series.coeffs)}", f"torus chi_n = {list(chi.coeffs)}"]
    if parameters.get("p") is not None:
        p = parse_rational(parameters["p"])
        payload["p"] = str(p)
        payload["value"] = str(series.evaluate(p))
        payload["chi_value"] = str(chi.evaluate(p))
        summary.append(f"G^T_p(x) at p={p}: {payload['value']}")

    return RunOutcome(
        subcommand="torus",
        payload=payload,
        truncation=TruncationOut(n_max=n_max, period=period),
        tables={
            "torus.csv": csv_table(
                ["n", "c_n", "chi_n"], zip(range(n_max + 1), series.coeffs, chi.coeffs, strict=True)
            )
        },
        summary=summary,
    )


@subcommand("sandwich")
def run_sandwich(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, n_max, model = _lattice(parameters)
    period = parameters["r"]
    p = parse_rational(parameters["p"])
    x = parse_point(parameters["x"])
    report = sandwich_check(d, L, period, n_max, model, x, p, workers=workers)

    sandwich = SandwichOut(
        verdict=_verdict(report.holds),
        trivial=report.trivial,
        zd_value=str(report.zd_value),
        torus_value=str(report.torus_value),
        psi_value=str(report.psi_value),
        bigE_value=str(report.bigE_value),
        upper_holds=report.upper_holds,
        lower_holds=report.lower_holds,
        note=report.note,
        rows=[SandwichRowOut(**asdict(row)) for row in report.rows],
    )
    return RunOutcome(
        subcommand="sandwich",
        payload=sandwich.model_dump() | {"p": str(p)},
        truncation=TruncationOut(n_max=n_max, period=period),
        tables={
            "sandwich.csv": csv_table(
                ["n", "zd", "torus", "psi", "E", "upper_holds", "lower_holds"],
                (
                    (row.n, row.zd, row.torus, row.psi, row.bigE, row.upper_holds, row.lower_holds)
                    for row in report.rows
                ),
            )
        },
        summary=[
            f"verdict {sandwich.verdict}" + (" (no wrapping reachable)" if report.trivial else ""),
            f"G_p(x) = {report.zd_value}",
            f"G^T_p(x) = {report.torus_value}",
            f"psi_p(x) = {report.psi_value}",
            f"E_p(x) = {report.bigE_value}",
        ],
    )


@subcommand("lift-audit")
def run_lift_audit(parameters: dict, workers: int | None = None) -> RunOutcome:
    d, L, n_max, model = _lattice(parameters)
    period = parameters["r"]
    report = lift_audit(d, L, period, n_max, model, workers=workers)
    audit = LiftAuditOut(verdict=_verdict(report.passed), **asdict(report))
    return RunOutcome(
        subcommand="lift-audit",
        payload=audit.model_dump(),
        truncation=TruncationOut(n_max=n_max, period=period),
        summary=[
            f"verdict {audit.verdict}",
            f"{report.torus_polymers} torus polymers, "
            f"{report.round_trip_failures} round-trip failures, "
            f"{report.lift_collisions} collisions",
            f"{report.pool_size} faithful Z^d polymers, {report.pool_failures} failed to re-lift",
        ],
    )


@subcommand("diagram")
def run_diagram(parameters: dict, workers: int | None = None) -> RunOutcome:  # noqa: C901
    d, L, z = parameters["d"], parameters["L"], parameters["z"]

    if parameters.get("probe_L"):
        probe = L_scaling_probe(d, z, parameters["probe_L"], box_radius=parameters.get("radius"))
        rows = [asdict(row) for row in probe.rows]
        return RunOutcome(
            subcommand="diagram",
            payload={
                "probe": {
                    "d": d,
                    "z": z,
                    "tilt": probe.tilt,
                    "fitted_power": probe.fitted_power,
                    "rows": rows,
                }
            },
            truncation=TruncationOut(box_radius=probe.box_radius),
            tables={"probe.csv": csv_table(list(rows[0]), (row.values() for row in rows))},
            summary=[
                f"square ~ L^{probe.fitted_power:.4f} over L in {[row['L'] for row in rows]}",
                *(
                    f"L={row['L']}: tilted square {row['tilted_square']:.6e} <= "
                    f"{row['bound']:.6e}: {_verdict(row['bound_holds'])}"
                    for row in rows
                ),
            ],
        )

    kernel = make_kernel(d, L)
    if parameters.get("spec") is not None:
        spec = DiagramSpec.from_payload(parameters["spec"])
    else:
        specs = catalogue(a=parameters.get("a") or 0.0, m=parameters.get("m") or 0.0)
        if parameters.get("name") not in specs:
            raise PreconditionError(
                f"unknown diagram {parameters.get('name')!r}; choose from {sorted(specs)}"
            )
        spec = specs[parameters["name"]]
    if parameters.get("reduction"):
        spec = replace(spec, reduction=parameters["reduction"])

    radius = parameters.get("radius")
    if radius is None:
        radius = max(6, math.ceil(4 / so_mass(kernel, z).m))
    walk = walk_box_field(kernel, z, radius)

    started = time.perf_counter()
    value = eval_diagram(spec, {"G": walk}, p=z, kernel=kernel, one_point=walk.value_at((0,) * d))
    runtime = time.perf_counter() - started

    diagram = DiagramValueOut(
        name=value.name,
        value=value.value,
        box_radius=value.box_radius,
        reduction=spec.reduction,
        factors=[factor.to_payload() for factor in spec.factors],
    )
    return RunOutcome(
        subcommand="diagram",
        payload=diagram.model_dump() | {"field_radius": radius},
        truncation=TruncationOut(box_radius=radius),
        summary=[
            f"{value.name} = {value.value!r}",
            f"field radius {radius}, result radius {value.box_radius}, runtime {runtime:.3f}s",
        ],
    )


@subcommand("wrap")
def run_wrap(parameters: dict, workers: int | None = None) -> RunOutcome:
    kernel = make_kernel(parameters["d"], parameters["L"])
    report = wrap_identity_check(
        kernel,
        parameters["z"],
        parameters["r"],
        parameters["k"],
        box_radius=parameters.get("radius"),
    )
    wrap = WrapIdentityOut(**asdict(report))
    return RunOutcome(
        subcommand="wrap",
        payload=wrap.model_dump(),
        truncation=TruncationOut(box_radius=report.box_radius, period=report.period),
        summary=[
            f"max |Gamma^(*k) - wrapped S^(*k)| = {report.max_discrepancy:.3e}",
            f"max |Gamma^(*k) - torus Fourier sum| = {report.fourier_discrepancy:.3e}",
        ],
    )


@subcommand("profile")
def run_profile(parameters: dict, workers: int | None = None) -> RunOutcome:
    lo, hi, step = parse_range(parameters["s"])
    table = profile_table(lo, hi, step)
    payload = {
        "rows": [ProfileValueOut(**asdict(value)).model_dump() for value in table],
        "log_convexity_defect": log_convexity_defect(table),
    }
    summary = [
        f"I0({value.s:g}) = {value.I0!r} [{value.method}]"
        if value.I0 is not None
        else f"log I0({value.s:g}) = {value.log_I0!r} [{value.method}]"
        for value in table
    ]

    general = [parameters.get(key) for key in ("alpha", "beta", "y")]
    if all(item is not None for item in general):
        value = faxen_general(*general)
        alpha, beta, y = general
        payload["faxen_general"] = {"alpha": alpha, "beta": beta, "y": y, "value": value}
        summary.append(f"Fi({general[0]}, {general[1]}; {general[2]}) = {value!r}")

    return RunOutcome(
        subcommand="profile",
        payload=payload,
        tables={
            "profile.csv": csv_table(
                ["s", "I0", "log_I0", "method", "est_error", "asymptotic_I0"],
                (
                    (
                        value.s,
                        "" if value.I0 is None else value.I0,
                        value.log_I0,
                        value.method,
                        value.est_error,
                        "" if value.asymptotic_I0 is None else value.asymptotic_I0,
                    )
                    for value in table
                ),
            )
        },
        summary=summary,
    )


@subcommand("window")
def run_window(parameters: dict, workers: int | None = None) -> RunOutcome:
    prediction = window_prediction(
        parameters["d"],
        parameters["r"],
        gamma=parse_rational(parameters["gamma"]),
        dc=parse_rational(parameters["dc"]),
    )
    window = WindowOut(
        d=prediction.d,
        period=prediction.period,
        volume=prediction.volume,
        window_exponent=str(prediction.window_exponent),
        chi_exponent=str(prediction.chi_exponent),
        plateau_exponent=str(prediction.plateau_exponent),
        window=prediction.window,
        chi_scale=prediction.chi_scale,
        plateau_scale=prediction.plateau_scale,
        matches_specialised=prediction.matches_specialised,
    )
    return RunOutcome(
        subcommand="window",
        payload=window.model_dump(),
        summary=[
            f"V = {prediction.volume}",
            f"window width V^({prediction.window_exponent}) = {prediction.window!r}",
            f"chi scale V^({prediction.chi_exponent}) = {prediction.chi_scale!r}",
            f"plateau V^({prediction.plateau_exponent}) = {prediction.plateau_scale!r}",
        ],
    )
