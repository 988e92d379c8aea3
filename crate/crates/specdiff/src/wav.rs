//! WAV/RIFF decoding into normalized sample vectors.
//!
//! Integer PCM (8/16/24/32-bit) and 32-bit IEEE float are supported. Integer
//! samples are divided by 2^(bits-1), the asymmetric normalization used by
//! common audio tooling, so full-scale negative maps to -1.0 and full-scale
//! positive to (2^(bits-1)-1)/2^(bits-1). No resampling is performed.

use crate::error::{Error, Result};

/// A decoded audio clip. All channels have identical length and samples are
/// normalized amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl AudioClip {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn samples_per_channel(&self) -> usize {
        self.channels.first().map(|c| c.len()).unwrap_or(0)
    }
}

/// Returns the indicated channel unchanged.
pub fn select_channel(clip: &AudioClip, index: usize) -> Result<&[f64]> {
    clip.channels.get(index).map(|c| c.as_slice()).ok_or(Error::ChannelOutOfRange {
        index,
        channels: clip.channel_count(),
    })
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Decodes a RIFF/WAVE byte stream.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::MalformedWav(format!("chunk {:?} overruns the file", String::from_utf8_lossy(id))))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;

    let bytes_per_sample = (fmt.bits_per_sample / 8) as usize;
    let frame_size = bytes_per_sample * fmt.channels as usize;
    if frame_size == 0 {
        return Err(Error::MalformedWav("zero-size frames".into()));
    }
    if data.len() % frame_size != 0 {
        return Err(Error::MalformedWav(format!(
            "data size {} is not a multiple of the {}-byte frame",
            data.len(),
            frame_size
        )));
    }
    let n_frames = data.len() / frame_size;
    let mut channels = vec![Vec::with_capacity(n_frames); fmt.channels as usize];
    for frame in 0..n_frames {
        for ch in 0..fmt.channels as usize {
            let off = frame * frame_size + ch * bytes_per_sample;
            let raw = &data[off..off + bytes_per_sample];
            channels[ch].push(decode_sample(raw, &fmt));
        }
    }
    Ok(AudioClip { sample_rate: fmt.sample_rate, channels })
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::MalformedWav(format!("fmt chunk is {} bytes, need 16", body.len())));
    }
    let mut format = u16::from_le_bytes(body[0..2].try_into().unwrap());
    let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
    let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
    let bits_per_sample = u16::from_le_bytes(body[14..16].try_into().unwrap());

    if format == FORMAT_EXTENSIBLE {
        // WAVE_FORMAT_EXTENSIBLE: the effective format is the first two bytes
        // of the SubFormat GUID at offset 24.
        if body.len() < 26 {
            return Err(Error::MalformedWav("truncated extensible fmt chunk".into()));
        }
        format = u16::from_le_bytes(body[24..26].try_into().unwrap());
    }

    match (format, bits_per_sample) {
        (FORMAT_PCM, 8 | 16 | 24 | 32) => {}
        (FORMAT_IEEE_FLOAT, 32) => {}
        (FORMAT_PCM, bits) => {
            return Err(Error::UnsupportedEncoding(format!("{bits}-bit integer PCM")));
        }
        (FORMAT_IEEE_FLOAT, bits) => {
            return Err(Error::UnsupportedEncoding(format!("{bits}-bit float")));
        }
        (tag, _) => {
            return Err(Error::UnsupportedEncoding(format!("format tag 0x{tag:04X} (compressed?)")));
        }
    }
    if channels == 0 {
        return Err(Error::MalformedWav("zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(Error::MalformedWav("zero sample rate".into()));
    }
    Ok(FmtChunk { format, channels, sample_rate, bits_per_sample })
}

fn decode_sample(raw: &[u8], fmt: &FmtChunk) -> f64 {
    match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 8) => (raw[0] as f64 - 128.0) / 128.0,
        (FORMAT_PCM, 16) => i16::from_le_bytes([raw[0], raw[1]]) as f64 / 32768.0,
        (FORMAT_PCM, 24) => {
            let v = (raw[0] as i32) | ((raw[1] as i32) << 8) | ((raw[2] as i8 as i32) << 16);
            v as f64 / 8_388_608.0
        }
        (FORMAT_PCM, 32) => i32::from_le_bytes(raw.try_into().unwrap()) as f64 / 2_147_483_648.0,
        (FORMAT_IEEE_FLOAT, 32) => f32::from_le_bytes(raw.try_into().unwrap()) as f64,
        _ => unreachable!("rejected by parse_fmt"),
    }
}

/// Encodes interleaved 16-bit PCM; the inverse of [`decode_wav`] up to one
/// least significant bit of quantization.
pub fn encode_wav_pcm16(channels: &[Vec<f64>], sample_rate: u32) -> Result<Vec<u8>> {
    let n_channels = channels.len();
    if n_channels == 0 {
        return Err(Error::EmptyInput("no channels to encode".into()));
    }
    let n_frames = channels[0].len();
    if channels.iter().any(|c| c.len() != n_frames) {
        return Err(Error::ShapeMismatch("channels differ in length".into()));
    }

    let data_len = n_frames * n_channels * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&(n_channels as u16).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    let block_align = (n_channels * 2) as u16;
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for frame in 0..n_frames {
        for channel in channels {
            let q = (channel[frame] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            out.extend_from_slice(&q.to_le_bytes());
        }
    }
    Ok(out)
}
