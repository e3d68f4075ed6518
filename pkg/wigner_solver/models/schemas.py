import math
from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


MAX_POTENTIAL_DEGREE = 8


class BasisFamily(str, Enum):
    """Hermite basis family used in momentum space."""
    SYMMETRIC_HERMITE = "symmetric_hermite"
    ASYMMETRIC_HERMITE = "asymmetric_hermite"


class StreamScheme(str, Enum):
    """Finite-difference scheme for the characteristic advection."""
    UPWIND = "upwind"
    LAX_WENDROFF = "lax_wendroff"


class Splitting(str, Enum):
    """Operator-splitting order."""
    FIRST_ORDER = "first_order"
    STRANG = "strang"


class ForcingMethod(str, Enum):
    """One-step propagator for the reaction (forcing) part."""
    CAYLEY = "cayley"
    EXACT = "exact"
    EULER = "euler"
    RK4 = "rk4"

    @property
    def is_unitary(self) -> bool:
        return self in (ForcingMethod.CAYLEY, ForcingMethod.EXACT)


class EigenSource(str, Enum):
    """Where the eigenstates of the initial superposition come from."""
    HARMONIC = "harmonic"
    NUMERICAL = "numerical"


class PotentialKind(str, Enum):
    """Named potential shortcuts."""
    FREE = "free"
    HARMONIC = "harmonic"
    ANHARMONIC = "anharmonic"
    DOUBLE_WELL = "double_well"
    RAW = "raw"


class BasisSpec(BaseModel):
    """Momentum-space basis: family, size N and the effective constants."""
    model_config = ConfigDict(frozen=True)

    family: BasisFamily = BasisFamily.SYMMETRIC_HERMITE
    n_basis: int = Field(ge=1)
    epsilon: float = Field(default=1.0, gt=0.0)
    b_strength: float = 1.0


class PolynomialPotential(BaseModel):
    """V(x) = sum_p coeffs[p] * x**p, static in time."""
    model_config = ConfigDict(frozen=True)

    coeffs: Tuple[float, ...] = ()

    @field_validator("coeffs")
    @classmethod
    def _trim_trailing_zeros(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        coeffs = list(float(c) for c in value)
        while coeffs and coeffs[-1] == 0.0:
            coeffs.pop()
        if any(not math.isfinite(c) for c in coeffs):
            raise ValueError("potential coefficients must be finite")
        if len(coeffs) - 1 > MAX_POTENTIAL_DEGREE:
            raise ValueError(f"potential degree above {MAX_POTENTIAL_DEGREE} is not supported")
        return tuple(coeffs)

    @property
    def degree(self) -> int:
        """Polynomial degree; -1 for the zero potential."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PotentialConfig(_Section):
    """Potential section: a named shortcut or raw (power, coefficient) terms."""
    kind: PotentialKind
    c: Optional[float] = None
    K: Optional[float] = None
    terms: List[Tuple[int, float]] = []

    @model_validator(mode="after")
    def _check_terms(self) -> "PotentialConfig":
        if self.kind == PotentialKind.RAW:
            if not self.terms:
                raise ValueError("raw potential needs at least one (power, coefficient) term")
            for power, _ in self.terms:
                if power < 0 or power > MAX_POTENTIAL_DEGREE:
                    raise ValueError(f"power {power} outside 0..{MAX_POTENTIAL_DEGREE}")
        elif self.terms:
            raise ValueError("terms are only accepted for kind 'raw'")
        return self


class GridConfig(_Section):
    """Uniform periodic grid on [x_min, x_max)."""
    x_min: float = -3.5
    x_max: float = 3.5
    dx: Optional[float] = Field(default=None, gt=0.0)
    nx: Optional[int] = Field(default=None, ge=4)

    @model_validator(mode="after")
    def _check_extent(self) -> "GridConfig":
        if self.x_max <= self.x_min:
            raise ValueError("x_max must be larger than x_min")
        if (self.dx is None) == (self.nx is None):
            raise ValueError("give exactly one of dx or nx")
        if self.resolved_nx < 4:
            raise ValueError("grid needs at least 4 points")
        return self

    @property
    def resolved_nx(self) -> int:
        if self.nx is not None:
            return self.nx
        return int(round((self.x_max - self.x_min) / self.dx))


class TimeConfig(_Section):
    """End time and either a target Courant number or an explicit dt."""
    t_end: float = Field(default=2.0 * math.pi, ge=0.0)
    courant: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    dt: Optional[float] = Field(default=None, gt=0.0)
    observe_interval: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _one_of(self) -> "TimeConfig":
        if self.courant is not None and self.dt is not None:
            raise ValueError("give at most one of courant or dt")
        return self


class InitialStateConfig(_Section):
    """Superposition of eigenstates given as (eigen index, weight) pairs."""
    components: List[Tuple[int, float]] = Field(default=[(0, 1.0), (1, 1.0)], validate_default=True)
    source: EigenSource = EigenSource.HARMONIC

    @field_validator("components")
    @classmethod
    def _normalize(cls, value: List[Tuple[int, float]]) -> List[Tuple[int, float]]:
        if not value:
            raise ValueError("at least one component is required")
        indices = [i for i, _ in value]
        if any(i < 0 for i in indices):
            raise ValueError("eigen indices must be non-negative")
        if len(set(indices)) != len(indices):
            raise ValueError("eigen indices must be distinct")
        norm = math.sqrt(sum(w * w for _, w in value))
        if not math.isfinite(norm) or norm == 0.0:
            raise ValueError("weights cannot be normalized")
        if abs(norm - 1.0) <= 1e-12:
            return [(i, float(w)) for i, w in value]
        return [(i, w / norm) for i, w in value]


class ConvergenceConfig(_Section):
    """Grid/basis sweep for the second-order convergence study."""
    dx_values: List[float] = [1.0 / 25.0, 1.0 / 50.0, 1.0 / 100.0]
    n_values: List[int] = [8, 16, 32]

    @field_validator("dx_values")
    @classmethod
    def _positive_dx(cls, value: List[float]) -> List[float]:
        if not value or any(dx <= 0.0 for dx in value):
            raise ValueError("dx values must be positive")
        return value

    @field_validator("n_values")
    @classmethod
    def _positive_n(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("basis sizes must be positive")
        return value


class StabilityConfig(_Section):
    """Amplification-factor study and the asymmetric-basis demonstration."""
    methods: List[ForcingMethod] = [ForcingMethod.EULER, ForcingMethod.RK4, ForcingMethod.CAYLEY]
    resolution: Dict[ForcingMethod, float] = {}  # 1/dx per method
    dt: Optional[float] = Field(default=None, gt=0.0)
    asymmetric_demo: bool = True
    demo_basis: int = Field(default=5, ge=2)
    demo_steps: int = Field(default=1000, ge=1)


class EigenReportConfig(_Section):
    """Range of eigen-basis sizes for the coefficient convergence report."""
    nb_min: int = Field(default=4, ge=2)
    nb_max: int = Field(default=40, ge=2)
    step: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def _ascending(self) -> "EigenReportConfig":
        if self.nb_max < self.nb_min:
            raise ValueError("nb_max must not be below nb_min")
        return self


class RunConfig(_Section):
    """Complete, validated description of one experiment."""
    name: str = "run"
    potential: PotentialConfig
    epsilon: float = Field(default=1.0, gt=0.0)
    b_strength: float = 1.0
    n_basis: int = Field(default=16, ge=1)
    n_eigen_basis: int = Field(default=2, ge=2)
    grid: GridConfig = GridConfig(dx=1.0 / 50.0)
    time: TimeConfig = TimeConfig()
    scheme: StreamScheme = StreamScheme.LAX_WENDROFF
    splitting: Splitting = Splitting.STRANG
    forcing_method: ForcingMethod = ForcingMethod.CAYLEY
    allow_unsafe_forcing: bool = False
    initial_state: InitialStateConfig = InitialStateConfig()
    output_dir: Optional[str] = None
    snapshot_times: List[float] = []
    convergence: Optional[ConvergenceConfig] = None
    stability: Optional[StabilityConfig] = None
    eigen_report: Optional[EigenReportConfig] = None

    @model_validator(mode="after")
    def _check_run(self) -> "RunConfig":
        for t in self.snapshot_times:
            if t < 0.0 or t > self.time.t_end:
                raise ValueError(f"snapshot time {t} outside [0, {self.time.t_end}]")
        if not self.forcing_method.is_unitary and not self.allow_unsafe_forcing:
            raise ValueError(
                f"forcing method '{self.forcing_method.value}' is not unitary; "
                "set allow_unsafe_forcing: true to use it"
            )
        max_index = max(i for i, _ in self.initial_state.components)
        if self.initial_state.source == EigenSource.NUMERICAL and max_index >= self.n_eigen_basis:
            raise ValueError("eigen index exceeds n_eigen_basis")
        if self.initial_state.source == EigenSource.HARMONIC:
            self.n_eigen_basis = max(self.n_eigen_basis, max_index + 1)
        return self

    @property
    def basis_spec(self) -> BasisSpec:
        return BasisSpec(
            family=BasisFamily.SYMMETRIC_HERMITE,
            n_basis=self.n_basis,
            epsilon=self.epsilon,
            b_strength=self.b_strength,
        )


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

class MomentReport(BaseModel):
    """Phase-space moments of a Wigner function at one time."""
    time: float
    mass: float
    mean_x: float
    mean_v: float
    var_x: float
    var_v: float
    cov_xv: float
    uncertainty: float
    normalized_cov: float
    degenerate: bool = False


class RunSummary(BaseModel):
    """Outcome of one simulation run."""
    name: str
    success: bool
    n_steps: int = 0
    dt: float = 0.0
    courant: float = 0.0
    mass_drift: float = 0.0
    final_delta: Optional[float] = None
    max_abs_error: Optional[float] = None
    deltas: Dict[float, float] = {}
    wall_clock_s: float = 0.0
    manifest_hash: str = ""
    files: List[str] = []


class ConvergenceRow(BaseModel):
    """One point of the convergence study."""
    n_basis: int
    dx: float
    delta: float


class RunRecord(BaseModel):
    """Run ledger entry."""
    model_config = ConfigDict(from_attributes=True)

    id: Optional[int] = None
    command: str
    preset: Optional[str] = None
    manifest_hash: str = ""
    output_dir: str = ""
    started_at: Optional[datetime] = None
    wall_clock_s: float = 0.0
    n_steps: int = 0
    final_delta: Optional[float] = None
    status: str = "ok"
    message: Optional[str] = None


class AmplificationRow(BaseModel):
    """Largest amplification factor of one forcing method over the grid."""
    method: ForcingMethod
    dx: float
    dt: float
    max_g: float
    x_at_max: float


class EigenReportRow(BaseModel):
    """Coefficient-vector change when the eigen basis grows by two."""
    n_b: int
    e0: float
    e1: float
    diff_ground: float
    diff_excited: float
