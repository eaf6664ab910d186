from stylereweight.diffusion.ddim import (
    ClipRange,
    clip_prediction,
    ddim_invert,
    ddim_reverse,
    ddim_step,
    ddim_update,
    forward_noise,
    predict_x0,
)
from stylereweight.diffusion.denoisers import (
    AnalyticGaussianDenoiser,
    DenoiserContract,
    OracleDenoiser,
    analytic_gaussian_denoiser,
)
from stylereweight.diffusion.schedule import NoiseSchedule, ScheduleConfig, make_schedule
from stylereweight.diffusion.trajectory import Trajectory
