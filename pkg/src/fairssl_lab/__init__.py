"""Training laboratory for fair semi-supervised learning on tabular multi-output data."""

from . import baselines, controller, data, fairness, harness, nnet, pseudolabel
from .controller import EpochSignals, OpdaConfig, opda_init, opda_lite_step, opda_step
from .harness import RunConfig, run_sweep, train_run, write_report

__version__ = "0.1.0"

__all__ = [
    "baselines", "controller", "data", "fairness", "harness", "nnet",
    "pseudolabel",
    "EpochSignals", "OpdaConfig", "opda_init", "opda_lite_step", "opda_step",
    "RunConfig", "run_sweep", "train_run", "write_report",
    "__version__",
]
