"""Co-play network analysis of multiplayer match logs.

Separates structurally central players from behaviourally influential ones:
centrality on the static teammate graph, influence from how neighbours'
participation drifts towards a player across weekly snapshots.
"""

from .errors import AnalysisError
from .ingest import MatchRecord, PlayerParticipation, parse_match_log, read_match_log

__all__ = ["AnalysisError", "MatchRecord", "PlayerParticipation", "parse_match_log", "read_match_log"]
__version__ = "0.1.0"
