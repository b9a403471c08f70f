//! Embedding stores and their on-disk formats.
//!
//! JSONL: one `{"id": …, "vec": […]}` object per line.
//!
//! Binary (little-endian):
//!
//! ```text
//! "QPEMB1\0"            7 bytes
//! dim                   u32
//! count                 u64
//! count × { id_len u16, id bytes (UTF-8), dim × f64 }
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 7] = b"QPEMB1\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreFormat {
    Jsonl,
    Binary,
}

impl StoreFormat {
    /// `.jsonl` / `.json` select JSONL; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => StoreFormat::Jsonl,
            _ => StoreFormat::Binary,
        }
    }
}

/// Id → vector map with a shared dimension. Iteration follows insertion
/// order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    vecs: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    vec: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vec: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vec.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: vec.len(),
            });
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vecs.push(vec);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.vecs[i].as_slice())
    }

    pub fn require(&self, id: &str) -> Result<&[f64]> {
        self.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.vecs.iter().map(Vec::as_slice))
    }

    pub fn load(path: &Path) -> Result<Self> {
        match StoreFormat::from_path(path) {
            StoreFormat::Jsonl => Self::load_jsonl(path),
            StoreFormat::Binary => Self::load_binary(path),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match StoreFormat::from_path(path) {
            StoreFormat::Jsonl => self.save_jsonl(path),
            StoreFormat::Binary => self.save_binary(path),
        }
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(format!("open {}", path.display()), e))?;
        let mut store: Option<Self> = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(format!("read {}", path.display()), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: e.to_string(),
            })?;
            let store = store.get_or_insert_with(|| Self::new(rec.vec.len()));
            if rec.vec.len() != store.dim {
                return Err(Error::StoreDimension {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected: store.dim,
                    got: rec.vec.len(),
                });
            }
            store.insert(rec.id, rec.vec)?;
        }
        store.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "empty JSONL store has no dimension".into(),
        })
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for (id, vec) in self.iter() {
                let rec = JsonRecord {
                    id: id.to_string(),
                    vec: vec.to_vec(),
                };
                serde_json::to_writer(&mut *w, &rec)?;
                w.write_all(b"\n").map_err(|e| Error::io("write store", e))?;
            }
            Ok(())
        })
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(format!("open {}", path.display()), e))?;
        let mut r = BufReader::new(file);
        let truncated = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Truncated(path.to_path_buf())
            } else {
                Error::io(format!("read {}", path.display()), e)
            }
        };
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::BadMagic(path.to_path_buf()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b4).map_err(truncated)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8).map_err(truncated)?;
        let count = u64::from_le_bytes(b8);
        let mut store = Self::new(dim);
        for rec in 0..count {
            r.read_exact(&mut b2).map_err(truncated)?;
            let mut id = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut id).map_err(truncated)?;
            let id = String::from_utf8(id).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: rec as usize + 1,
                msg: format!("id is not UTF-8: {e}"),
            })?;
            let mut vec = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut b8).map_err(truncated)?;
                vec.push(f64::from_le_bytes(b8));
            }
            store.insert(id, vec)?;
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(truncated)? != 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: count as usize + 1,
                msg: "trailing bytes after last record".into(),
            });
        }
        Ok(store)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let dim = u32::try_from(self.dim).map_err(|_| Error::Domain("dimension exceeds u32".into()))?;
        for id in &self.ids {
            if id.len() > u16::MAX as usize {
                return Err(Error::Domain(format!(
                    "id of {} bytes exceeds u16 length prefix",
                    id.len()
                )));
            }
        }
        write_atomic(path, |w| {
            let io = |e| Error::io("write store", e);
            w.write_all(BINARY_MAGIC).map_err(io)?;
            w.write_all(&dim.to_le_bytes()).map_err(io)?;
            w.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
            for (id, vec) in self.iter() {
                w.write_all(&(id.len() as u16).to_le_bytes()).map_err(io)?;
                w.write_all(id.as_bytes()).map_err(io)?;
                for x in vec {
                    w.write_all(&x.to_le_bytes()).map_err(io)?;
                }
            }
            Ok(())
        })
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial output behind.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let tmp = temp_path(path);
    let file = File::create(&tmp).map_err(|e| Error::io(format!("create {}", tmp.display()), e))?;
    let mut w = BufWriter::new(file);
    let result = body(&mut w).and_then(|()| w.flush().map_err(|e| Error::io("flush", e)));
    drop(w);
    match result {
        Ok(()) => std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("rename to {}", path.display()), e)),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn write_string_atomic(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, |w| {
        w.write_all(contents.as_bytes()).map_err(|e| Error::io("write", e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_store() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(3);
        s.insert("a", vec![0.1, -2.5, 1e-300]).unwrap();
        s.insert("β", vec![f64::MAX, -0.0, 1.0 / 3.0]).unwrap();
        s
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let s = sample_store();
        s.save(&path).unwrap();
        let back = EmbeddingStore::load(&path).unwrap();
        assert_eq!(back.dim(), 3);
        for ((ia, va), (ib, vb)) in s.iter().zip(back.iter()) {
            assert_eq!(ia, ib);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(va), bits(vb));
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let s = sample_store();
        s.save(&path).unwrap();
        assert_eq!(EmbeddingStore::load(&path).unwrap(), s);
    }

    #[test]
    fn jsonl_wrong_dim_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\":\"a\",\"vec\":[1,2]}\n{\"id\":\"b\",\"vec\":[1,2,3]}\n").unwrap();
        match EmbeddingStore::load(&path) {
            Err(Error::StoreDimension {
                line, expected, got, ..
            }) => assert_eq!((line, expected, got), (2, 2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let j = dir.path().join("e.jsonl");
        std::fs::write(&j, "").unwrap();
        assert!(matches!(EmbeddingStore::load(&j), Err(Error::Parse { .. })));

        let b = dir.path().join("e.bin");
        EmbeddingStore::new(7).save(&b).unwrap();
        let back = EmbeddingStore::load(&b).unwrap();
        assert_eq!((back.dim(), back.len()), (7, 0));
    }

    #[test]
    fn binary_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("g.bin");
        sample_store().save(&good).unwrap();
        let bytes = std::fs::read(&good).unwrap();

        let p = dir.path().join("magic.bin");
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(EmbeddingStore::load(&p), Err(Error::BadMagic(_))));

        let p = dir.path().join("trunc.bin");
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(EmbeddingStore::load(&p), Err(Error::Truncated(_))));

        let p = dir.path().join("dup.bin");
        let mut s = EmbeddingStore::new(1);
        s.insert("x", vec![1.0]).unwrap();
        s.save(&p).unwrap();
        let mut dup = std::fs::read(&p).unwrap();
        let record = dup[19..].to_vec();
        dup.extend_from_slice(&record);
        dup[11..19].copy_from_slice(&2u64.to_le_bytes());
        std::fs::write(&p, &dup).unwrap();
        assert!(matches!(EmbeddingStore::load(&p), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn insert_checks() {
        let mut s = EmbeddingStore::new(2);
        assert!(matches!(s.insert("a", vec![1.0]), Err(Error::Dimension { .. })));
        s.insert("a", vec![1.0, 2.0]).unwrap();
        assert!(matches!(s.insert("a", vec![1.0, 2.0]), Err(Error::DuplicateId(_))));
        assert!(matches!(s.require("zz"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        let r = write_atomic(&p, |_| Err(Error::Domain("boom".into())));
        assert!(r.is_err());
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    proptest! {
        #[test]
        fn binary_round_trip_any_store(
            rows in prop::collection::vec(prop::collection::vec(any::<f64>(), 4), 0..12)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.bin");
            let mut s = EmbeddingStore::new(4);
            for (i, r) in rows.iter().enumerate() {
                s.insert(format!("id-{i}"), r.clone()).unwrap();
            }
            s.save(&path).unwrap();
            let back = EmbeddingStore::load(&path).unwrap();
            prop_assert_eq!(back.len(), s.len());
            for ((_, a), (_, b)) in s.iter().zip(back.iter()) {
                prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}
