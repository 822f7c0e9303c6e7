"""Hybrid analog/digital MIMO precoding with learned step-size schedules."""

from .admm import AdmmParams, AdmmState, admm_run
from .channel import (ChannelDataset, ChannelSet, ErrorSet, SystemDims, gen_rayleigh,
                      load_dataset, normalize, sample_error_set, save_dataset, split)
from .learn import TrainConfig, TrainResult, train_admm, train_pcmp, train_pga
from .objective import (AnalogConstraint, Precoders, grad_analog, grad_digital, grad_error,
                        min_rate_over_errors, sum_rate)
from .optim import (ErrorRadius, PcmpSchedule, PgaSchedule, Trajectory,
                    fully_digital_baseline, pcmp_run, pga_run)

__version__ = "0.1.0"
