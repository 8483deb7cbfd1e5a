"""Network inference from partial correlations.

Two engines score every variable pair: a classical one (inverse correlation
matrix plus Fisher z p-values) and a Bayesian one (Normal-Inverse-Wishart
posterior plus FBST e-values). Both run in full mode (condition on all other
variables) or local mode (condition on a selected neighborhood, usable with
fewer observations than variables). A tree simulator and ROC tools evaluate
the recovered networks.
"""

from .bayes import (
    NiwParams,
    bayesian_network,
    elicit_prior,
    fbst_e_value,
    iw_moments,
    kde,
    posterior_update,
    sample_iw,
    sample_partial_rho,
)
from .classical import EdgeScores, classical_network, edge_p_value, fisher_z
from .evaluation import AveragedRoc, RocCurve, average_roc, compare_engines, roc_from_scores
from .local import NeighborhoodSpec, local_scores, select_neighborhood
from .partial import (
    PartialCorrEstimate,
    partial_corr_inverse,
    partial_corr_regression,
    partial_corr_schur,
)
from .simulate import SimConfig, TreeNetwork, generate_data, generate_pair, generate_topology
from .stats import (
    Dataset,
    invert_spd,
    read_dataset_csv,
    sample_correlation,
    sample_covariance,
    sample_mean,
    schur_complement,
    write_dataset_csv,
)

__version__ = "0.1.0"
