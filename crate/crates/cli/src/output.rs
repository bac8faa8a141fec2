//! Artifacts are assembled in memory and written together, so a failed run
//! leaves nothing behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    /// Writes every file into `dir`, creating it if needed. On any error the
    /// files written so far, and the directory if it was created here, are
    /// removed again.
    pub fn commit(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        let created = !dir.exists();
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, bytes) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                let _ = fs::remove_file(&path);
                if created {
                    let _ = fs::remove_dir(dir);
                }
                return Err(e);
            }
            written.push(path);
        }
        Ok(written)
    }
}
