use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{CorpusError, Label};

/// Number of leading bytes the production networks consume.
pub const INPUT_LEN: usize = 200_000;

/// A file's leading bytes, truncated or zero-padded to a fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteSequence {
    data: Vec<u8>,
    original_length: usize,
    file_size: u64,
}

impl ByteSequence {
    /// Truncates or zero-pads `bytes` to `len`.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        let kept = bytes.len().min(len);
        let mut data = vec![0u8; len];
        data[..kept].copy_from_slice(&bytes[..kept]);
        ByteSequence {
            data,
            original_length: kept,
            file_size: bytes.len() as u64,
        }
    }

    /// Reads at most `len` bytes of `path`; the rest of the file is never touched.
    pub fn load(path: &Path, len: usize) -> Result<Self, CorpusError> {
        let load_err = |source| CorpusError::Load {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(load_err)?;
        let file_size = file.metadata().map_err(load_err)?.len();
        let mut head = Vec::with_capacity(len.min(file_size as usize));
        file.take(len as u64)
            .read_to_end(&mut head)
            .map_err(load_err)?;
        let mut seq = ByteSequence::from_bytes(&head, len);
        seq.file_size = file_size;
        Ok(seq)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of real (non-padding) bytes, `min(file_size, len)`.
    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn file_size(&self) -> u64 {
        self.file_size
    }
}

/// Loads the first [`INPUT_LEN`] bytes of a file.
pub fn load_bytes(path: &Path) -> Result<ByteSequence, CorpusError> {
    ByteSequence::load(path, INPUT_LEN)
}

/// A loaded sample ready for training or scoring.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub id: String,
    pub label: Label,
    pub bytes: ByteSequence,
}

impl LabeledSample {
    pub fn new(id: impl Into<String>, label: Label, bytes: ByteSequence) -> Self {
        LabeledSample {
            id: id.into(),
            label,
            bytes,
        }
    }
}
