"""Fair binary classification with N-naive-Bayes ensembles."""

__version__ = "0.1.0"

from .balancing import BalanceConfig, BalanceTrace, balance_df, balance_parity, disc_score, rho_scores
from .dataset import Dataset, GroupSpec, Schema, SplitSpec, generate_synthetic, load_csv, load_schema, partition_privileged, split
from .errors import ConfigError, DataError, FairBayesError, SchemaError, UnknownGroupError
from .gnb import GaussianNBModel
from .metrics import FairnessReport, GroupStats, df_epsilon, disparate_impact_mean, parity_disc
from .nnb import CountTable, FitOptions, NNBModel
