"""Exception types shared across the pipeline stages."""


class AnalysisError(Exception):
    """An analysis step could not produce a defined result.

    ``module`` names the pipeline stage so the CLI can report where the
    failure happened.
    """

    module = "analysis"

    def __str__(self) -> str:
        return f"{self.module}: {super().__str__()}"


class IngestError(AnalysisError):
    module = "ingest"


class TemporalError(AnalysisError):
    module = "temporal"


class CentralityError(AnalysisError):
    module = "centrality"


class ConvergenceError(CentralityError):
    """Power iteration hit ``max_iter`` without meeting its tolerance."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class InfluenceError(AnalysisError):
    module = "influence"


class StatsError(AnalysisError):
    module = "stats"


class SynthConfigError(AnalysisError):
    module = "synth"
