"""Exception hierarchy shared by the library and the CLI."""

from typing import Any


class EvsceError(Exception):
    """Base class for every error raised by evsce."""


class DomainError(EvsceError, ValueError):
    """A parameter or precondition is outside the operation's domain."""


class NumericalFailure(EvsceError, RuntimeError):
    """A numerical routine could not deliver a trustworthy value.

    ``detail`` carries the diagnostics (residuals, iteration counts, the
    offending grid point or replica index).
    """

    def __init__(self, message: str, **detail: Any) -> None:
        super().__init__(message)
        self.detail: dict[str, Any] = detail

    def with_detail(self, **extra: Any) -> "NumericalFailure":
        return NumericalFailure(super().__str__(), **{**self.detail, **extra})

    def __str__(self) -> str:
        message = super().__str__()
        if not self.detail:
            return message
        extras = ", ".join(f"{k}={v!r}" for k, v in self.detail.items())
        return f"{message} ({extras})"


class ZeroVarianceColumn(DomainError):
    """One or more panel columns have zero sample standard deviation."""

    def __init__(self, tickers: list[str]) -> None:
        self.tickers = list(tickers)
        super().__init__(
            f"zero-variance column(s), drop before renormalising: {', '.join(self.tickers)}"
        )


class PriceError(DomainError):
    """Nonpositive prices where a price is present."""

    def __init__(self, cells: list[tuple[int, int]]) -> None:
        self.cells = list(cells)
        preview = ", ".join(f"({r}, {c})" for r, c in self.cells[:10])
        more = "" if len(self.cells) <= 10 else f" and {len(self.cells) - 10} more"
        super().__init__(f"nonpositive price at cells {preview}{more}")
