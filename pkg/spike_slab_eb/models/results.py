from .model_utils import filter_empty_fields
from jsonmodels import models, fields, validators

"""
Records exchanged between the computational modules and the CLI.

Everything that is reported, written to disk or read back from an
experiment file is one of these jsonmodels records; computational value
objects (slab models, quadrature specs, tabulated densities) are plain
frozen dataclasses in their own modules.
"""


class Record(models.Base):

    def to_dict(self):
        """
        Convert the model instance to a dictionary with empty fields removed.
        """
        return filter_empty_fields(self.to_struct())


class ThresholdTriple(Record):
    alpha = fields.FloatField(required=True, validators=[validators.Min(0.0, exclusive=True), validators.Max(1.0)])
    zeta = fields.FloatField(required=True)
    tau = fields.FloatField(required=True)
    t = fields.FloatField(required=True)


class MomentPoint(Record):
    mu = fields.FloatField(required=True)
    m1 = fields.FloatField(required=True)
    m2 = fields.FloatField(required=True)


class MomentDiagnostics(Record):
    alpha = fields.FloatField(required=True)
    # -E_0 B(X, alpha)
    m_tilde = fields.FloatField(required=True)
    points = fields.ListField(MomentPoint)

    def m1_at(self, mu):
        return {p.mu: p.m1 for p in self.points}[float(mu)]

    def m2_at(self, mu):
        return {p.mu: p.m2 for p in self.points}[float(mu)]


class CoordinatePosterior(Record):
    x = fields.FloatField(required=True)
    alpha = fields.FloatField(required=True)
    slab_weight = fields.FloatField(required=True, validators=[validators.Min(0.0), validators.Max(1.0)])
    median = fields.FloatField(required=True)
    mean = fields.FloatField(required=True)


class MmleResult(Record):
    alpha_hat = fields.FloatField(required=True)
    alpha_n = fields.FloatField(required=True)
    at_lower_boundary = fields.BoolField(required=True)
    at_upper_boundary = fields.BoolField(required=True)
    score_at_solution = fields.FloatField(required=True)
    iterations = fields.IntField(required=True)


class CredibleBall(Record):
    q = fields.FloatField(required=True, validators=[validators.Min(0.0, exclusive=True), validators.Max(2.0)])
    center = fields.ListField(float)
    radius = fields.FloatField(required=True, validators=[validators.Min(0.0)])
    multiplier_M = fields.FloatField(nullable=True, validators=[validators.Min(1.0)])
    alpha_used = fields.FloatField(required=True)
    radius_kind = fields.StringField(required=True, validators=[validators.Enum("moment", "quantile")])
    beta = fields.FloatField(nullable=True, validators=[validators.Min(0.0, exclusive=True), validators.Max(1.0, exclusive=True)])
    # blow-up factor L of an inflated quantile set, 1 when not inflated
    inflation = fields.FloatField()


class EbConstants(Record):
    A = fields.FloatField(required=True, validators=[validators.Min(1.0, exclusive=True)])
    C_q = fields.FloatField(required=True, validators=[validators.Min(0.0, exclusive=True)])
    D_q = fields.FloatField(required=True, validators=[validators.Min(0.0, exclusive=True)])
    q = fields.FloatField(required=True, validators=[validators.Min(0.0, exclusive=True), validators.Max(2.0)])


class EbReport(Record):
    satisfied = fields.BoolField(required=True)
    smallest_ell = fields.IntField()
    effective_sparsity = fields.IntField()
    large_signal_count_at_ell = fields.IntField()
    small_signal_energy_at_ell = fields.FloatField()
    ell_floor = fields.IntField(required=True)
    n = fields.IntField(required=True)
    s = fields.IntField(required=True)
    q = fields.FloatField(required=True)


SIGNAL_KINDS = ("zero", "flat", "adversarial", "eb_tail", "b0_construction", "eb_weaker")


class SignalSpec(Record):
    kind = fields.StringField(required=True, validators=[validators.Enum(*SIGNAL_KINDS)])
    # flat: multiple of sqrt(2 log(n/s)); b0_construction: A
    amplitude = fields.FloatField()
    # adversarial: the alpha whose t(alpha) places the signals
    alpha = fields.FloatField()
    # eb_tail
    D_q = fields.FloatField()
    q = fields.FloatField()
    # b0_construction
    s1 = fields.IntField()
    c = fields.FloatField()
    # eb_weaker
    variant = fields.IntField(nullable=True, validators=[validators.Enum(1, 2, 3)])
    m_n = fields.FloatField()


class ExperimentConfig(Record):
    study = fields.StringField(nullable=True, validators=[validators.Enum("coverage", "risk", "mean_suboptimality")])
    n = fields.IntField(required=True, validators=[validators.Min(2)])
    s = fields.IntField(required=True, validators=[validators.Min(0)])
    q = fields.FloatField(nullable=True, validators=[validators.Min(0.0, exclusive=True), validators.Max(2.0)])
    family = fields.StringField()
    delta = fields.FloatField()
    scale = fields.FloatField()
    signal = fields.EmbeddedField(SignalSpec)
    alpha_rule = fields.StringField(nullable=True, validators=[validators.Enum("mmle", "fixed", "oracle")])
    alpha = fields.FloatField()
    oracle_multiplier = fields.FloatField()
    radius_kind = fields.StringField(nullable=True, validators=[validators.Enum("moment", "quantile")])
    M = fields.FloatField(nullable=True, validators=[validators.Min(1.0)])
    beta = fields.FloatField()
    inflation = fields.FloatField()
    draws = fields.IntField()
    replicates = fields.IntField(nullable=True, validators=[validators.Min(1)])
    seed = fields.IntField(nullable=True, validators=[validators.Min(0)])


class ReplicateRecord(Record):
    replicate = fields.IntField(required=True)
    covered = fields.BoolField()
    radius = fields.FloatField()
    alpha_hat = fields.FloatField()
    risk_q = fields.FloatField()
    point_risk_median = fields.FloatField()
    point_risk_mean = fields.FloatField()
    error = fields.StringField()


class ExperimentResult(Record):
    config = fields.EmbeddedField(ExperimentConfig, required=True)
    coverage_rate = fields.FloatField()
    coverage_interval = fields.ListField(float)
    mean_radius = fields.FloatField()
    mean_diameter_bound = fields.FloatField()
    mean_posterior_risk_q = fields.FloatField()
    mean_point_risk_median = fields.FloatField()
    mean_point_risk_mean = fields.FloatField()
    mean_to_median_risk_ratio = fields.FloatField()
    mean_alpha_hat = fields.FloatField()
    completed_replicates = fields.IntField()
    failed_replicates = fields.IntField()
    records = fields.ListField(ReplicateRecord)
    warnings = fields.ListField(str)
    bands = fields.DictField()


class FitReport(Record):
    n = fields.IntField(required=True)
    slab = fields.StringField(required=True)
    alpha_hat = fields.FloatField(required=True)
    alpha_n = fields.FloatField(required=True)
    at_lower_boundary = fields.BoolField(required=True)
    at_upper_boundary = fields.BoolField(required=True)
    score_at_solution = fields.FloatField()
    threshold = fields.FloatField(required=True)
    q = fields.FloatField(required=True)
    M = fields.FloatField(required=True)
    radius_v = fields.FloatField(required=True)
    ball_radius = fields.FloatField(required=True)
    nonzero_count = fields.IntField()
    theta_hat_path = fields.StringField()
    manifest = fields.StringField()


class RunManifest(Record):
    tool_version = fields.StringField(required=True)
    command = fields.StringField(required=True)
    config = fields.DictField()
    seed = fields.IntField()
    started = fields.StringField()
    finished = fields.StringField()
    warnings = fields.ListField(str)
