use std::path::Path;

use super::{FormatError, IoError};

/// Mono audio with samples scaled to `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavAudio {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

fn u16_at(b: &[u8], at: usize) -> Result<u16, FormatError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| FormatError::at(b.len(), "unexpected end of file"))
}

fn u32_at(b: &[u8], at: usize) -> Result<u32, FormatError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| FormatError::at(b.len(), "unexpected end of file"))
}

/// Parses a RIFF/WAVE file holding 16-bit PCM mono samples.
pub fn decode_wav(bytes: &[u8]) -> Result<WavAudio, FormatError> {
    if bytes.get(0..4) != Some(b"RIFF") {
        return Err(FormatError::at(0, "missing RIFF tag"));
    }
    if bytes.get(8..12) != Some(b"WAVE") {
        return Err(FormatError::at(8, "missing WAVE tag"));
    }
    let mut pos = 12;
    let mut rate = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4)? as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                let format = u16_at(bytes, body)?;
                if format != 1 {
                    return Err(FormatError::at(body, format!("format {format} is not PCM")));
                }
                let channels = u16_at(bytes, body + 2)?;
                if channels != 1 {
                    return Err(FormatError::at(
                        body + 2,
                        format!("{channels} channels, need mono"),
                    ));
                }
                let bits = u16_at(bytes, body + 14)?;
                if bits != 16 {
                    return Err(FormatError::at(body + 14, format!("{bits}-bit samples, need 16")));
                }
                let r = u32_at(bytes, body + 4)?;
                if r == 0 {
                    return Err(FormatError::at(body + 4, "zero sample rate"));
                }
                rate = Some(r);
            }
            b"data" => {
                let sample_rate =
                    rate.ok_or_else(|| FormatError::at(pos, "data chunk before fmt chunk"))?;
                let end = body + len;
                if end > bytes.len() || len % 2 != 0 {
                    return Err(FormatError::at(bytes.len().min(end), "data chunk truncated"));
                }
                let samples = bytes[body..end]
                    .chunks_exact(2)
                    .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0)
                    .collect();
                return Ok(WavAudio {
                    sample_rate,
                    samples,
                });
            }
            _ => {}
        }
        pos = body + len + (len & 1);
    }
    Err(FormatError::at(bytes.len(), "no data chunk"))
}

/// Encodes samples as 16-bit PCM mono, scaling by 32768 and clamping.
pub fn encode_wav(audio: &WavAudio) -> Vec<u8> {
    let data_len = audio.samples.len() as u32 * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&audio.sample_rate.to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &audio.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_wav(path: &Path) -> Result<WavAudio, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    Ok(decode_wav(&bytes).map_err(|e| e.with_path(path))?)
}

pub fn write_wav(path: &Path, audio: &WavAudio) -> Result<(), IoError> {
    std::fs::write(path, encode_wav(audio)).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_on_grid_values() {
        let samples: Vec<f64> = [-32768i32, -1, 0, 1, 16384, 32767]
            .iter()
            .map(|&v| v as f64 / 32768.0)
            .collect();
        let a = WavAudio {
            sample_rate: 44_100,
            samples,
        };
        let bytes = encode_wav(&a);
        assert_eq!(bytes.len(), 44 + 12);
        assert_eq!(decode_wav(&bytes).unwrap(), a);
    }

    #[test]
    fn rejects_stereo_and_truncation() {
        let a = WavAudio {
            sample_rate: 8000,
            samples: vec![0.0; 4],
        };
        let mut bytes = encode_wav(&a);
        bytes[22] = 2;
        assert_eq!(decode_wav(&bytes).unwrap_err().offset, 22);
        let bytes = encode_wav(&a);
        let e = decode_wav(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(e.message.contains("truncated"));
        assert_eq!(decode_wav(b"RIFX").unwrap_err().offset, 0);
    }

    #[test]
    fn skips_unknown_chunks() {
        let a = WavAudio {
            sample_rate: 8000,
            samples: vec![0.25, -0.5],
        };
        let bytes = encode_wav(&a);
        let mut with_list = bytes[..36].to_vec();
        with_list.extend_from_slice(b"LIST\x03\x00\x00\x00abc\x00");
        with_list.extend_from_slice(&bytes[36..]);
        assert_eq!(decode_wav(&with_list).unwrap(), a);
    }
}
