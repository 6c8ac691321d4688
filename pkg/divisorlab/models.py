from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .arith import K_MAX
from .laurent import DEFAULT_STIELTJES
from .utils import geometric_grid

OutputFormat = Literal["csv", "json", "gnuplot-data", "xlsx"]
TailMode = Literal["crude", "gcd-weighted"]

DEFAULT_Q_MAX = 1000
MAX_TRUNC = DEFAULT_STIELTJES.max_index + 1
# β_k used in the envelopes; k = 7, 8 need an explicit override.
BETA_K = {1: 0.0, 2: 0.25, 3: 1 / 3, 4: 3 / 8, 5: 9 / 20, 6: 0.5}
DEFAULT_THETAS = (0.4, 0.5, 0.6, 0.7, 0.8)
MIN_SLOPE_POINTS = 4


class SingularSeriesConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_max: int = Field(DEFAULT_Q_MAX, ge=1)
    local_trunc: Optional[int] = Field(None, ge=0)
    tail_estimate_mode: TailMode = "gcd-weighted"


class HRule(BaseModel):
    """Window length per N: a fixed H or H = round(N^theta)."""

    model_config = ConfigDict(frozen=True)

    H: Optional[int] = Field(None, ge=1)
    theta: Optional[float] = Field(None, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_exclusive(self):
        if (self.H is None) == (self.theta is None):
            raise ValueError("exactly one of H and theta must be given")
        return self

    @property
    def label(self) -> str:
        return f"H={self.H}" if self.H is not None else f"theta={self.theta:g}"

    def window(self, N: int) -> int:
        if self.H is not None:
            return min(self.H, N)
        return max(1, min(N, round(N**self.theta)))


class SummatoryPoint(BaseModel):
    x: int
    D: int
    main: float
    delta: float


class ShiftedSumResult(BaseModel):
    N: int
    h: int
    k: int
    D_Nh: int
    main_integral: float
    delta_Nh: float
    tail_bound: float


class AveragedParts(BaseModel):
    """Pieces of Σ_{h<=H} Δ_k(N;h): the exact double sum and the averaged singular integral."""

    N: int
    H: int
    k: int
    double_sum: int
    main_integral: float
    tail_bound: float

    @property
    def delta(self) -> float:
        return float(self.double_sum) - self.main_integral


class Decomposition(BaseModel):
    N: int
    H: int
    k: int
    lhs: int
    m_term: float
    r_term: float
    residual: float

    @property
    def relative_residual(self) -> float:
        return self.residual / max(1.0, abs(float(self.lhs)))


class ExponentFit(BaseModel):
    slope: float
    intercept: float
    stderr: float


class BetaEstimate(BaseModel):
    k: int
    X_grid: list[int]
    mean_square: list[float]
    exponent: Optional[float] = None
    beta_hat: Optional[float] = None
    stderr: Optional[float] = None
    floor: float
    degenerate: bool = False


class ScanRow(BaseModel):
    h_rule: str
    N: int
    H: int
    averaged_delta: float
    double_sum: int
    main_integral: float
    tail_bound: float
    trivial_envelope: float
    theorem_envelope: float
    dominant: Literal["H^2", "N^(1+beta)"]
    proof_envelope: float
    ratio_trivial: float
    ratio_theorem: float
    conjecture_comparison_root: float
    conjecture_comparison_k: float
    k3_comparison: Optional[float] = None
    identity_residual: Optional[float] = None


class SlopeFit(BaseModel):
    h_rule: str
    slope: float
    stderr: float


class ScanConfigEcho(BaseModel):
    k: int
    h_rules: list[str]
    beta: float
    N_grid: list[int]
    singular: SingularSeriesConfig


class ScanReport(BaseModel):
    k: int
    config: ScanConfigEcho
    rows: list[ScanRow]
    fitted_slopes: list[SlopeFit] = Field(default_factory=list)
    identity_residuals: list[float] = Field(default_factory=list)


class AverageCheck(BaseModel):
    k: int
    N: int
    H: int
    lhs: float
    rhs_main: float
    discrepancy: float
    scale: float


class SplitCheck(BaseModel):
    k: int
    N: int
    H: int
    smooth: float
    split_main: float
    discrepancy: float
    discrepancy_over_H2: float


class RunConfig(BaseModel):
    """Validated flags of one CLI invocation."""

    model_config = ConfigDict(frozen=True)

    command: Optional[str] = None
    k: int = Field(3, ge=1, le=K_MAX)
    N: Optional[int] = Field(None, ge=2)
    H: Optional[int] = Field(None, ge=0)
    theta: Optional[float] = Field(None, gt=0.0, le=1.0)
    thetas: Optional[tuple[float, ...]] = Field(None, min_length=1)
    h: Optional[int] = Field(None, ge=1)
    x: Optional[float] = Field(None, ge=2.0)
    q: Optional[int] = Field(None, ge=1)
    n: Optional[int] = Field(None, ge=1)
    lo: Optional[int] = Field(None, ge=1)
    hi: Optional[int] = Field(None, ge=1)
    xmin: int = Field(10**4, ge=2)
    xmax: int = Field(10**6, ge=2)
    nmin: int = Field(2**14, ge=2)
    nmax: int = Field(2**23, ge=2)
    ratio: float = Field(2.0, gt=1.0)
    beta: Optional[float] = Field(None, ge=0.0, le=1.0)
    q_max: int = Field(DEFAULT_Q_MAX, ge=1)
    local_trunc: Optional[int] = Field(None, ge=0, le=MAX_TRUNC)
    tail_estimate_mode: TailMode = "gcd-weighted"
    workers: int = Field(1, ge=1)
    format: OutputFormat = "csv"
    output: Optional[str] = None

    @model_validator(mode="after")
    def check_window(self):
        if self.H is not None and self.theta is not None:
            raise ValueError("--H and --theta are mutually exclusive")
        if self.N is not None and self.H is not None and self.H > self.N:
            raise ValueError("--H must not exceed --N")
        if self.local_trunc is not None and self.local_trunc < self.k - 1:
            raise ValueError(f"--trunc must be at least k-1 = {self.k - 1}")
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError("--lo must not exceed --hi")
        if self.xmin >= self.xmax or self.nmin > self.nmax:
            raise ValueError("grid bounds must be increasing")
        if self.thetas is not None:
            if self.H is not None:
                raise ValueError("--H and --theta are mutually exclusive")
            if not all(0.0 < t <= 1.0 for t in self.thetas):
                raise ValueError("--theta values must lie in (0, 1]")
        if self.H == 0 and self.command != "decompose":
            raise ValueError("--H must be at least 1")
        if self.format == "xlsx" and self.output is None:
            raise ValueError("--format xlsx needs --output")
        if self.command == "scan" and self.beta is None and self.k not in BETA_K:
            raise ValueError(f"--beta is required for k={self.k}")
        if self.command == "beta":
            points = len(geometric_grid(self.xmin, self.xmax, self.ratio))
            if points < MIN_SLOPE_POINTS:
                raise ValueError(
                    f"--xmin/--xmax/--ratio give {points} grid points, at least {MIN_SLOPE_POINTS} are needed"
                )
        return self

    def singular(self) -> SingularSeriesConfig:
        return SingularSeriesConfig(
            q_max=self.q_max,
            local_trunc=self.local_trunc,
            tail_estimate_mode=self.tail_estimate_mode,
        )

    def h_rule(self) -> HRule:
        return HRule(H=self.H, theta=self.theta)

    def h_rules(self) -> list[HRule]:
        if self.H is not None:
            return [HRule(H=self.H)]
        if self.theta is not None:
            return [HRule(theta=self.theta)]
        return [HRule(theta=t) for t in self.thetas or DEFAULT_THETAS]
