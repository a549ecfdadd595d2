use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::LanguageId;

/// 10 ms hop between feature frames.
pub const FRAME_SHIFT_SECONDS: f64 = 0.01;

const FEATURE_MAGIC: &[u8; 4] = b"PGF1";

/// Row-major `frames x dim` matrix of features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(frames: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != frames * dim {
            return Err(Error::Shape(format!(
                "feature buffer of {} values for {frames}x{dim}",
                data.len()
            )));
        }
        Ok(Self { frames, dim, data })
    }

    pub fn zeros(frames: usize, dim: usize) -> Self {
        Self {
            frames,
            dim,
            data: vec![0.0; frames * dim],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn mean(&self) -> f32 {
        if self.data.is_empty() {
            return 0.0;
        }
        (self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64) as f32
    }

    /// Header (magic, frames, dim, reserved; all little-endian u32) followed by
    /// little-endian f32 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.data.len());
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.frames as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            what: "feature file",
            line: 0,
            reason: reason.to_string(),
        };
        if bytes.len() < 16 || &bytes[..4] != FEATURE_MAGIC {
            return Err(bad("missing header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (frames, dim) = (word(4), word(8));
        let body = &bytes[16..];
        if body.len() != frames * dim * 4 {
            return Err(bad("payload size does not match header"));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(frames, dim, data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub language: LanguageId,
    pub transcript: String,
    pub features: FeatureMatrix,
}

impl Utterance {
    pub fn duration_seconds(&self) -> f64 {
        self.features.frames() as f64 * FRAME_SHIFT_SECONDS
    }
}

/// One line of a manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub utterance_id: String,
    pub language_id: LanguageId,
    pub duration_s: f64,
    pub transcript: String,
    pub feature_file: String,
    pub frame_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusManifest {
    pub utterances: Vec<Utterance>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Languages in order of first appearance.
    pub fn languages(&self) -> Vec<LanguageId> {
        let mut out: Vec<LanguageId> = Vec::new();
        for u in &self.utterances {
            if !out.contains(&u.language) {
                out.push(u.language.clone());
            }
        }
        out
    }

    pub fn for_language<'a>(&'a self, language: &'a LanguageId) -> impl Iterator<Item = &'a Utterance> + 'a {
        self.utterances.iter().filter(move |u| &u.language == language)
    }

    /// Transcripts grouped by language, in order of first appearance.
    pub fn transcripts_by_language(&self) -> Vec<(LanguageId, Vec<String>)> {
        self.languages()
            .into_iter()
            .map(|lang| {
                let lines = self.for_language(&lang).map(|u| u.transcript.clone()).collect();
                (lang, lines)
            })
            .collect()
    }

    /// Writes `<dir>/<name>.jsonl` and one feature file per utterance under
    /// `<dir>/feats/`.
    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        let feats = dir.join("feats");
        fs::create_dir_all(&feats).map_err(|e| Error::io(&feats, e))?;
        let path = dir.join(format!("{name}.jsonl"));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for u in &self.utterances {
            let rel = format!("feats/{}.f32", u.id);
            let fpath = dir.join(&rel);
            fs::write(&fpath, u.features.to_bytes()).map_err(|e| Error::io(&fpath, e))?;
            let record = ManifestRecord {
                utterance_id: u.id.clone(),
                language_id: u.language.clone(),
                duration_s: u.duration_seconds(),
                transcript: u.transcript.clone(),
                feature_file: rel,
                frame_count: u.features.frames(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))
    }

    /// Reads a manifest written by [`CorpusManifest::write`]; feature paths are
    /// resolved relative to the manifest's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut utterances = Vec::new();
        for (ln, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ManifestRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                what: "manifest",
                line: ln + 1,
                reason: e.to_string(),
            })?;
            let fpath = dir.join(&record.feature_file);
            let bytes = fs::read(&fpath).map_err(|e| Error::io(&fpath, e))?;
            let features = FeatureMatrix::from_bytes(&bytes)?;
            if features.frames() != record.frame_count {
                return Err(Error::Parse {
                    what: "manifest",
                    line: ln + 1,
                    reason: format!(
                        "frame_count {} but feature file has {} frames",
                        record.frame_count,
                        features.frames()
                    ),
                });
            }
            utterances.push(Utterance {
                id: record.utterance_id,
                language: record.language_id,
                transcript: record.transcript,
                features,
            });
        }
        Ok(Self { utterances })
    }
}
