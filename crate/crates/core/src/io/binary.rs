//! Little-endian primitives with bounds-checked reads, and the shared
//! framing: 4-byte magic, `u32` version, payload, CRC-32 of everything before
//! the trailer.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f64) {
        self.buf.extend_from_slice(&(v as f32).to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len_u32(&mut self, n: usize) -> Result<()> {
        let v = u32::try_from(n).map_err(|_| Error::Usage(format!("length {n} exceeds the format limit")))?;
        self.u32(v);
        Ok(())
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.len_u32(b.len())?;
        self.buf.extend_from_slice(b);
        Ok(())
    }
}

/// Cursor over a byte slice; every read past the end is a format error at
/// the offending offset.
#[derive(Debug)]
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos as u64,
            message: message.into(),
        }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(self.err(format!(
                "truncated {what}: need {n} bytes, {} left",
                self.remaining()
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    pub fn f32(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from(f32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes"))))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    /// A `u32` count that must fit in the remaining bytes at
    /// `min_item_bytes` each.
    pub fn count(&mut self, min_item_bytes: usize, what: &str) -> Result<usize> {
        let at = self.pos;
        let n = self.u32(what)? as usize;
        if n.saturating_mul(min_item_bytes) > self.remaining() {
            return Err(Error::Format {
                offset: at as u64,
                message: format!("{what} count {n} exceeds the remaining {} bytes", self.remaining()),
            });
        }
        Ok(n)
    }

    pub fn bytes(&mut self, what: &str) -> Result<&'a [u8]> {
        let n = self.count(1, what)?;
        self.take(n, what)
    }

    pub fn string(&mut self, what: &str) -> Result<String> {
        let at = self.pos;
        let b = self.bytes(what)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::Format {
            offset: at as u64,
            message: format!("{what} is not valid UTF-8"),
        })
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.err(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

/// Starts a framed file with `magic` and `version`.
pub fn framed(magic: &[u8; 4], version: u32) -> Writer {
    let mut w = Writer::default();
    w.buf.extend_from_slice(magic);
    w.u32(version);
    w
}

/// Appends the CRC-32 trailer.
pub fn seal(mut w: Writer) -> Vec<u8> {
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.buf
}

/// Checks magic, version and trailer; returns a reader positioned after the
/// version with the trailer excluded.
pub fn open<'a>(bytes: &'a [u8], magic: &[u8; 4], version: u32, what: &'static str) -> Result<Reader<'a>> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != magic {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic, expected {:?}", String::from_utf8_lossy(magic)),
        });
    }
    let found = r.u32("version")?;
    if found != version {
        return Err(Error::UnsupportedVersion {
            what,
            found,
            expected: version,
        });
    }
    let end = bytes.len().checked_sub(4).filter(|e| *e >= 8).ok_or_else(|| r.err("missing checksum"))?;
    let stored = u32::from_le_bytes(bytes[end..].try_into().expect("4 bytes"));
    if crc32fast::hash(&bytes[..end]) != stored {
        return Err(Error::Format {
            offset: end as u64,
            message: "checksum mismatch".into(),
        });
    }
    let mut r = Reader::new(&bytes[..end]);
    r.pos = 8;
    Ok(r)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_read_reports_offset() {
        let mut r = Reader::new(&[1, 2, 3]);
        assert_eq!(r.u8("a").unwrap(), 1);
        match r.u32("b") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oversized_count_rejected() {
        let mut w = Writer::default();
        w.u32(1_000_000);
        let mut r = Reader::new(&w.buf);
        assert!(matches!(r.count(4, "items"), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn sealed_frame_opens_and_detects_flips() {
        let mut w = framed(b"TEST", 3);
        w.u64(42);
        let bytes = seal(w);
        assert_eq!(bytes.len(), 4 + 4 + 8 + 4);
        let mut r = open(&bytes, b"TEST", 3, "test").unwrap();
        assert_eq!(r.u64("v").unwrap(), 42);
        r.finish().unwrap();
        for i in 8..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x10;
            assert!(matches!(open(&b, b"TEST", 3, "test"), Err(Error::Format { .. })), "byte {i}");
        }
        assert!(matches!(open(&bytes, b"TEST", 4, "test"), Err(Error::UnsupportedVersion { found: 3, .. })));
    }
}
