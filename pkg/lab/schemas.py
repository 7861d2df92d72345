from ninja import Schema


class TruncationOut(Schema):
    n_max: int | None = None
    box_radius: int | None = None
    grid_size: int | None = None
    period: int | None = None


class SeriesOut(Schema):
    omega: int
    weight_spec: str = "none"
    n_max: int
    coeffs: list[int | float | str]


class CensusOut(Schema):
    model: str
    d: int
    L: int
    n_max: int
    t_n: list[int]
    rooted_n: list[int]
    chi_n: list[int]
    generated: int


class MassOut(Schema):
    d: int
    L: int | None = None
    activity: float
    m: float
    xi: float
    method: str
    residual: float


class GreensOut(Schema):
    d: int
    L: int
    z: float
    kind: str
    grid_size: int
    mass: float
    slope: float | None = None
    slope_ratio: float | None = None
    window: list[int] = []


class DecompositionOut(Schema):
    d: int
    L: int
    z: float
    lambda_z: float
    mu_z: float
    moment0: float
    moment2: float
    phi_sup: float | None = None


class InequalityOut(Schema):
    lhs: str
    rhs: str
    holds: bool


class SandwichRowOut(Schema):
    n: int
    zd: int
    torus: int
    psi: int
    bigE: int
    upper_holds: bool
    lower_holds: bool


class SandwichOut(Schema):
    verdict: str
    trivial: bool
    zd_value: str
    torus_value: str
    psi_value: str
    bigE_value: str
    upper_holds: bool
    lower_holds: bool
    note: str
    rows: list[SandwichRowOut]


class LiftAuditOut(Schema):
    verdict: str
    torus_polymers: int
    round_trip_failures: int
    lift_collisions: int
    pool_size: int
    pool_failures: int


class WrapIdentityOut(Schema):
    period: int
    fold: int
    box_radius: int
    max_discrepancy: float
    fourier_discrepancy: float


class DiagramValueOut(Schema):
    name: str
    value: float
    box_radius: int
    reduction: str
    factors: list[dict]


class ProfileValueOut(Schema):
    s: float
    I0: float | None = None
    log_I0: float
    method: str
    est_error: float
    asymptotic_I0: float | None = None


class WindowOut(Schema):
    d: int
    period: int
    volume: int
    window_exponent: str
    chi_exponent: str
    plateau_exponent: str
    window: float
    chi_scale: float
    plateau_scale: float
    matches_specialised: bool | None = None


class ResultEnvelope(Schema):
    schema_version: str
    subcommand: str
    manifest_digest: str
    truncation: TruncationOut
    payload: dict


class ManifestOut(Schema):
    subcommand: str
    parameters: dict
    code_version: str
    thread_count: int
    wall_time_seconds: float
    output_digest: str
