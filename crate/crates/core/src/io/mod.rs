//! On-disk formats: 16-bit PCM WAVE and raw f32 audio, wideband I/Q captures
//! with a JSON sidecar, spectrogram images, and dataset manifests.

mod audio;
mod iq;
mod manifest;
mod image;

pub use audio::{read_audio, read_raw_f32, read_wav, write_audio, write_raw_f32, write_wav, AudioFormat, ClipPolicy};
pub use image::{read_spectrogram_sidecar, write_spectrogram, SpectrogramSidecar};
pub use iq::{read_iq, sidecar_path, write_iq, IqMeta, IQ_FORMAT};
pub use manifest::{Manifest, ManifestEntry, MANIFEST_SCHEMA_VERSION};
