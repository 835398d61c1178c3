"""Event-camera tooling for diffusion-based video frame interpolation.

Event simulation and file formats, voxel grids and ROI masks, the condition
arithmetic that feeds a video diffusion model, EDM-style noise handling with a
guided sampler, and a coarse event-based interpolator with PSNR/SSIM
evaluation. Learned networks are left to pluggable callables.
"""

from .core import Event, EventStream, Frame, FrameSequence, ValidationReport, slice_window, validate_stream
from .cond import (
    DownsampleFeatures,
    FusionWeights,
    IdentityFeatures,
    MaskedVoxelFeatures,
    WeightSchedule,
    assemble_conditions,
    coarse_condition_provider,
    fuse_mmf,
    mmcg_objective,
    weight_schedule,
)
from .diffusion import (
    NoiseDistParams,
    PreconditionCoeffs,
    SamplerConfig,
    add_noise,
    denoise_loss,
    gaussian_oracle_denoiser,
    precondition,
    reconstruct,
    sample,
    sample_batch,
    sample_sigma,
    sigma_schedule,
)
from .errors import (
    ConfigError,
    CorruptionError,
    DomainError,
    EventVFIError,
    FormatError,
    InstanceError,
    InvalidRangeError,
    ManifestError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .fileio import (
    read_events,
    read_events_binary,
    read_events_text,
    read_frames,
    read_tensor,
    write_events,
    write_events_binary,
    write_events_text,
    write_frames,
    write_tensor,
)
from .interp import EvalReport, InterpConfig, crossfade, evaluate, event_interpolator, integrate_events, interpolate, psnr, ssim
from .sim import InterpInstance, SimConfig, build_instances, simulate_events
from .voxel import RoiMaskConfig, gaussian_blur, normalize_abs, roi_mask, voxelize

__version__ = "0.1.0"
