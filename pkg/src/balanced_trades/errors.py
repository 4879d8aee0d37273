"""Exception hierarchy shared by the library and the CLI."""


class TradeError(ValueError):
    """Domain error: malformed input or an infeasible request."""


class InvalidDefiningSets(TradeError):
    def __init__(self, verdict):
        self.verdict = verdict
        super().__init__("invalid defining sets: " + "; ".join(str(v) for v in verdict.violations))


class InvalidSwapSet(TradeError):
    pass


class BudgetExceeded(RuntimeError):
    """A search or enumeration would exceed its configured cap.

    ``reached`` carries how far the computation got (or the size it would
    have needed) so callers can report it.
    """

    def __init__(self, message, reached=None, limit=None):
        super().__init__(message)
        self.reached = reached
        self.limit = limit
