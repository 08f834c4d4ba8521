use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Pixels};
use crate::tensor::{read_tensor_file, write_tensor_file};

use super::{EmbedKey, EmbeddingMap, Encoder};

/// Environment variable naming the embedding cache directory.
pub const CACHE_ENV: &str = "TRANSCORE_CACHE";

/// Memoizes embeddings on disk as NPY files keyed by a hash of the pixel
/// content and the wrapped encoder's id.
pub struct CachedEncoder<E> {
    inner: E,
    dir: PathBuf,
}

impl<E: Encoder> CachedEncoder<E> {
    pub fn new(inner: E, dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { inner, dir })
    }

    pub fn key_for(&self, img: &ImageBuffer) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.id().as_bytes());
        h.update([0u8]);
        let (height, width, channels) = img.dims();
        for d in [height, width, channels] {
            h.update((d as u64).to_le_bytes());
        }
        match img.pixels() {
            Pixels::U8(d) => {
                h.update(b"u8");
                h.update(d);
            }
            Pixels::F32(d) => {
                h.update(b"f32");
                for v in d {
                    h.update(v.to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}

impl<E: Encoder> Encoder for CachedEncoder<E> {
    fn embed(&self, img: &ImageBuffer, key: Option<&EmbedKey>) -> Result<EmbeddingMap> {
        let path = self.dir.join(format!("{}.npy", self.key_for(img)));
        if path.is_file() {
            match read_tensor_file(&path).and_then(EmbeddingMap::from_tensor) {
                Ok(e) => return Ok(e),
                Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
        let emb = self.inner.embed(img, key)?;
        // write under a unique name first so concurrent writers never expose a partial file
        let tmp = self.dir.join(format!(
            ".{}.{:?}.tmp",
            path.file_name().unwrap().to_string_lossy(),
            std::thread::current().id()
        ));
        write_tensor_file(&tmp, &emb.to_tensor())?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(emb)
    }

    fn id(&self) -> String {
        self.inner.id()
    }
}
