# Copyright 2026 The bandflow Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Flow-matching audio super-resolution to 48 kHz."""

from bandflow._core import (
    BINS,
    COMPRESS_ALPHA,
    FULL_RATE,
    GEN_BINS,
    HOP,
    MIN_CUTOFF_BINS,
    N_FFT,
    DataError,
    NumericError,
    UsageError,
    Upsampler,
    cfg_combine,
    cfm_loss,
    compress,
    cutoff_bins_for_rate,
    default_config_json,
    expand,
    istft,
    lowpass_hann,
    lsd,
    lsd_hf,
    midpoint_solve,
    nearest_supported_rate,
    read_wav,
    sample_path,
    sinc_resample,
    stft,
    target_field,
    write_wav,
)

__version__ = "0.1.0"

__all__ = [
    "BINS",
    "COMPRESS_ALPHA",
    "FULL_RATE",
    "GEN_BINS",
    "HOP",
    "MIN_CUTOFF_BINS",
    "N_FFT",
    "DataError",
    "NumericError",
    "UsageError",
    "Upsampler",
    "cfg_combine",
    "cfm_loss",
    "compress",
    "cutoff_bins_for_rate",
    "default_config_json",
    "expand",
    "istft",
    "lowpass_hann",
    "lsd",
    "lsd_hf",
    "midpoint_solve",
    "nearest_supported_rate",
    "read_wav",
    "sample_path",
    "sinc_resample",
    "stft",
    "target_field",
    "write_wav",
    "__version__",
]
