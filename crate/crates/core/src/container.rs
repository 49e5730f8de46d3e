//! Artifact container: `MAGIC vN` line, `key=value` header lines, a CRC-32
//! over header and payload, an `end` line, then a binary payload.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub(crate) struct Encoded {
    head: String,
    pub(crate) payload: Vec<u8>,
}

impl Encoded {
    pub(crate) fn new(magic: &str, version: u32, fields: &[(&str, String)], payload: Vec<u8>) -> Self {
        let mut head = format!("{magic} v{version}\n");
        for (k, v) in fields {
            head.push_str(&format!("{k}={v}\n"));
        }
        head.push_str(&format!("payload_bytes={}\n", payload.len()));
        Self { head, payload }
    }

    pub(crate) fn checksum(&self) -> u32 {
        checksum(&self.head, &self.payload)
    }

    pub(crate) fn write(&self, w: &mut impl std::io::Write) -> Result<()> {
        w.write_all(self.head.as_bytes())?;
        w.write_all(format!("checksum={:08x}\nend\n", self.checksum()).as_bytes())?;
        w.write_all(&self.payload)?;
        Ok(())
    }
}

fn checksum(head: &str, payload: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(head.as_bytes());
    h.update(payload);
    h.finalize()
}

pub(crate) struct Decoded<'a> {
    fields: BTreeMap<&'a str, &'a str>,
    pub(crate) payload: &'a [u8],
}

impl<'a> Decoded<'a> {
    /// Checks magic and version, then the checksum, then the payload length,
    /// so a truncated file reports a checksum failure.
    pub(crate) fn parse(bytes: &'a [u8], magic: &str, version: u32) -> Result<Self> {
        let mut pos = 0;
        let mut lines = Vec::new();
        loop {
            let rest = &bytes[pos..];
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Format("header is not terminated".into()))?;
            let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
            pos += nl + 1;
            if line == "end" {
                break;
            }
            lines.push((line, pos));
        }
        let (first, _) = lines.first().ok_or_else(|| Error::Format("empty header".into()))?;
        let found = first
            .strip_prefix(magic)
            .and_then(|v| v.trim().strip_prefix('v'))
            .ok_or_else(|| Error::Format(format!("expected a {magic} file, first line is {first:?}")))?;
        let found: u32 = found.parse().map_err(|_| Error::Format(format!("bad version {found:?}")))?;
        if found != version {
            return Err(Error::Version { found, expected: version });
        }
        let mut fields = BTreeMap::new();
        let mut head_end = lines[0].1;
        let mut stored = None;
        for &(line, end) in &lines[1..] {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("bad header line {line:?}")))?;
            if k == "checksum" {
                stored = Some(u32::from_str_radix(v, 16).map_err(|_| Error::Format(format!("bad checksum {v:?}")))?);
            } else {
                if stored.is_some() {
                    return Err(Error::Format("header fields after checksum".into()));
                }
                fields.insert(k, v);
                head_end = end;
            }
        }
        let stored = stored.ok_or_else(|| Error::Format("header has no checksum".into()))?;
        let head = std::str::from_utf8(&bytes[..head_end]).expect("checked line by line");
        let payload = &bytes[pos..];
        let computed = checksum(head, payload);
        if computed != stored {
            return Err(Error::Checksum { stored, computed });
        }
        let d = Decoded { fields, payload };
        if d.num("payload_bytes")? != payload.len() {
            return Err(Error::Format("payload length disagrees with header".into()));
        }
        Ok(d)
    }

    pub(crate) fn get(&self, k: &str) -> Result<&'a str> {
        self.fields.get(k).copied().ok_or_else(|| Error::Format(format!("header lacks {k}")))
    }

    pub(crate) fn num(&self, k: &str) -> Result<usize> {
        self.get(k)?.parse().map_err(|_| Error::Format(format!("bad {k}")))
    }

    pub(crate) fn real(&self, k: &str) -> Result<f64> {
        self.get(k)?.parse().map_err(|_| Error::Format(format!("bad {k}")))
    }

    pub(crate) fn hex(&self, k: &str) -> Result<u32> {
        u32::from_str_radix(self.get(k)?, 16).map_err(|_| Error::Format(format!("bad {k}")))
    }

    pub(crate) fn reader(&self) -> Reader<'a> {
        Reader { bytes: self.payload, pos: 0 }
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| Error::Format("payload ends early".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }
    pub(crate) fn bytes(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| Error::Format("payload ends early".into()))?;
        self.pos = end;
        Ok(slice)
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(())
    }
}
