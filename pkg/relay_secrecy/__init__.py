from .af import AfBeamformer, af_secrecy_rate, af_snr, extract_rank_one, t1_max_total, t2_max_total
from .df import DfBeamformer, df_secrecy_rate, erf_inv, verify_outage
from .conic import ConicSolver, bisect
from .channel import derive_af, load_channel, sample_channel, sample_df_channel, save_channel
from .experiments import SweepRunner
from .models.channel_models import ChannelState, DfChannel, PowerConstraint
from .models.beam_models import AfAlgorithmConfig, BeamSolution, DfAlgorithmConfig, StatisticalParams, WorstCaseParams
from .models.experiment_models import ExperimentConfig
from .exceptions import BeamformingError
