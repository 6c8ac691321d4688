from typing import Optional


class DivisorLabError(Exception):
    def __init__(self, detail: str = "Computation failed"):
        super().__init__(detail)
        self.detail = detail


class DomainError(DivisorLabError, ValueError):
    def __init__(self, detail: str = "Argument outside the supported domain"):
        super().__init__(detail)


class ResourceError(DivisorLabError, MemoryError):
    def __init__(self, detail: str = "Requested table exceeds the memory bound"):
        super().__init__(detail)


class DivisorOverflowError(DivisorLabError, OverflowError):
    def __init__(self, n: Optional[int] = None, detail: Optional[str] = None):
        if detail is None:
            detail = "d_k value overflows 64 bits" + (f" at n={n}" if n is not None else "")
        super().__init__(detail)
        self.n = n


class SingularityError(DivisorLabError, ZeroDivisionError):
    def __init__(self, detail: str = "Series has no invertible leading coefficient"):
        super().__init__(detail)


class NumericError(DivisorLabError, ArithmeticError):
    def __init__(self, detail: str = "Numerical procedure did not converge"):
        super().__init__(detail)


class RankError(DivisorLabError, ValueError):
    def __init__(self, detail: str = "Regression design matrix is rank deficient"):
        super().__init__(detail)
