use std::fs;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

/// Content-addressed text cache under $CTM_CACHE_DIR; inactive when the variable is unset.
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os("CTM_CACHE_DIR").map(PathBuf::from) }
    }

    fn path(&self, kind: &str, key: &str) -> Option<PathBuf> {
        let digest = Sha256::digest(key.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.as_ref().map(|d| d.join(format!("{kind}-{hex}")))
    }

    /// Cached value for `key`, or `make()` stored for next time.
    pub fn get_or<E>(&self, kind: &str, key: &str, make: impl FnOnce() -> Result<String, E>) -> Result<String, E> {
        let path = self.path(kind, key);
        if let Some(text) = path.as_ref().and_then(|p| fs::read_to_string(p).ok()) {
            return Ok(text);
        }
        let text = make()?;
        if let Some(p) = path {
            // A cache that cannot be written only costs recomputation.
            if let Some(parent) = p.parent() {
                let _ = fs::create_dir_all(parent);
            }
            let _ = fs::write(p, &text);
        }
        Ok(text)
    }
}
