"""Exception types shared across the solver pipeline."""


class SolveError(Exception):
    """Base class for solver failures."""


class NumericDomainError(SolveError):
    """A coefficient or intermediate quantity became non-finite.

    ``where`` names the offending coefficient or recursion step;
    ``location`` optionally carries the (time index, state) pair.
    """

    def __init__(self, where, location=None, detail=""):
        self.where = where
        self.location = location
        msg = f"non-finite value in {where}"
        if location is not None:
            msg += f" at (i={location[0]}, x={location[1]})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class IterationLimitError(SolveError):
    """The inner control iteration hit its cap before converging.

    Carries the last residual and, when raised from a sweep, the
    (time index, state) of the first offending grid point.
    """

    def __init__(self, residual, location=None, iters=None):
        self.residual = residual
        self.location = location
        self.iters = iters
        msg = f"inner iteration limit reached (residual={residual:.3e}"
        if iters is not None:
            msg += f", iters={iters}"
        msg += ")"
        if location is not None:
            msg += f" at (i={location[0]}, x={location[1]})"
        super().__init__(msg)
