//! Speech-to-text and text-to-speech behind one interface. Real cloud
//! clients implement [`SpeechProvider`]; the service ships only the mock.

use std::fmt;
use std::io::Cursor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AudioFormat {
    Wav,
}

impl AudioFormat {
    /// Maps a MIME type, falling back to the file extension.
    pub fn detect(content_type: Option<&str>, file_name: Option<&str>) -> Option<AudioFormat> {
        if let Some(ct) = content_type {
            let ct = ct.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
            match ct.as_str() {
                "audio/wav" | "audio/x-wav" | "audio/wave" | "audio/vnd.wave" => return Some(AudioFormat::Wav),
                "" | "application/octet-stream" => {}
                _ => return None,
            }
        }
        match file_name.and_then(|n| n.rsplit_once('.')).map(|(_, ext)| ext.to_ascii_lowercase()) {
            Some(ext) if ext == "wav" => Some(AudioFormat::Wav),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechError(pub String);

impl fmt::Display for SpeechError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpeechError {}

pub trait SpeechProvider: Send + Sync {
    fn transcribe(&self, audio: &[u8], format: AudioFormat) -> Result<String, SpeechError>;
    fn synthesize(&self, text: &str) -> Result<Vec<u8>, SpeechError>;
}

pub const MOCK_SAMPLE_RATE: u32 = 16_000;
/// Silence emitted per character of synthesized text.
pub const MOCK_SAMPLES_PER_CHAR: usize = 800;
pub const MOCK_TRANSCRIPT: &str = "i like to read books";

/// Deterministic provider: every transcription is the fixture text, every
/// synthesis is 16-bit mono silence. With `fail` set, both calls error.
#[derive(Debug, Clone)]
pub struct MockSpeechProvider {
    pub transcript: String,
    pub fail: bool,
}

impl Default for MockSpeechProvider {
    fn default() -> Self {
        MockSpeechProvider {
            transcript: MOCK_TRANSCRIPT.into(),
            fail: false,
        }
    }
}

impl SpeechProvider for MockSpeechProvider {
    fn transcribe(&self, _audio: &[u8], _format: AudioFormat) -> Result<String, SpeechError> {
        if self.fail {
            return Err(SpeechError("mock provider configured to fail".into()));
        }
        Ok(self.transcript.clone())
    }

    fn synthesize(&self, text: &str) -> Result<Vec<u8>, SpeechError> {
        if self.fail {
            return Err(SpeechError("mock provider configured to fail".into()));
        }
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: MOCK_SAMPLE_RATE,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut buf = Cursor::new(Vec::new());
        let err = |e: hound::Error| SpeechError(e.to_string());
        let mut w = hound::WavWriter::new(&mut buf, spec).map_err(err)?;
        for _ in 0..text.chars().count() * MOCK_SAMPLES_PER_CHAR {
            w.write_sample(0i16).map_err(err)?;
        }
        w.finalize().map_err(err)?;
        Ok(buf.into_inner())
    }
}
