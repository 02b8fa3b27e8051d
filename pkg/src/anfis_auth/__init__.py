"""Continuous implicit authentication from phone usage events with an ANFIS classifier."""

from .anfis import AnfisModel, init_model, load_model, predict, save_model, train_hybrid
from .events import Event, EventTrace, FeatureKind, SyntheticProfile, generate_trace, read_trace, write_trace
from .harness import AttackMode, AttackSpec, EvalReport, evaluate, graft_attack, run_experiment
from .pipeline import AuthInputs, Mode, PipelineConfig, Verdict, decide, run_trace
from .ranklist import RankingList, RankParams, ranking_score, record_occurrence
from .reference import EsbState, esb_update
from .scoring import FeatureScorerConfig, Scorer, score_trace

__all__ = [
    "AnfisModel", "AttackMode", "AttackSpec", "AuthInputs", "EsbState", "EvalReport", "Event",
    "EventTrace", "FeatureKind", "FeatureScorerConfig", "Mode", "PipelineConfig", "RankParams",
    "RankingList", "Scorer", "SyntheticProfile", "Verdict", "decide", "esb_update", "evaluate",
    "generate_trace", "graft_attack", "init_model", "load_model", "predict", "ranking_score",
    "read_trace", "record_occurrence", "run_experiment", "run_trace", "save_model", "score_trace",
    "train_hybrid", "write_trace",
]
