from stylereweight.video.consistency import ConsistencyReport, consistency_report
from stylereweight.video.frame_context import FrameContext, FrameMemory, interframe_attend
from stylereweight.video.guidance import (
    GuidanceConfig,
    energy,
    energy_gradient,
    energy_guidance_step,
    guided_latent,
    guided_prediction,
    noise_free_distance,
)
from stylereweight.video.video_stylizer import FrameStylizer, stylize_video
