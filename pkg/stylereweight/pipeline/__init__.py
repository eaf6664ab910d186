from stylereweight.pipeline.diagnostics import StepDiagnostics, diagnostics_csv, parse_diagnostics_csv
from stylereweight.pipeline.dual_path import (
    DualPathState,
    DualPathStylizer,
    StylePathRecord,
    StylizeResult,
    apply_sain,
    stylize,
)
from stylereweight.pipeline.extractor import ConvFeatureExtractor, deterministic_extractor
from stylereweight.pipeline.injection_config import InjectionConfig, InjectionConfigBuilder
from stylereweight.pipeline.metrics import FeatureExtractor, gram_matrix, gram_style_distance, perceptual_losses
