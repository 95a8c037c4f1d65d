//! Multisensor preparation: temporal registration of camera frames with
//! audio, average-pool downscaling, spectrograms, and the entropy sweep used
//! to choose a downscaled size.

mod fft;
mod image;
mod register;
mod spectrogram;
mod sweep;

pub use image::{avg_pool_downscale, image_entropy, ImageFrame};
pub use register::{register_streams, AlignedPair, AudioClip, Registration, SensorStream};
pub use spectrogram::{
    block_resize, hann_window, stft_magnitude, stft_spectrogram, Spectrogram, DEFAULT_HOP,
    DEFAULT_WINDOW,
};
pub use sweep::{
    downscale_sweep, resize_to, EntropyStats, ModalitySweep, SizeEntropy, StepRedundancy,
    SweepReport, DEFAULT_DRIFT_TOL,
};
