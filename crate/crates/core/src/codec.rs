//! Byte-level wire helpers shared by every message type.

use crate::error::{Error, Result};
use crate::group::{GroupElement, Scalar, POINT_LEN, SCALAR_LEN};

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn with_capacity(cap: usize) -> Self {
        Writer { buf: Vec::with_capacity(cap) }
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn point(&mut self, p: &GroupElement) -> &mut Self {
        self.bytes(&p.to_bytes())
    }

    pub fn scalar(&mut self, s: &Scalar) -> &mut Self {
        self.bytes(&s.to_bytes())
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Decode("truncated input"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    /// A 4-byte count, rejected if `count * item_len` exceeds the remaining input.
    pub fn count(&mut self, item_len: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(item_len) > self.remaining() {
            return Err(Error::Decode("count exceeds input"));
        }
        Ok(n)
    }

    pub fn point(&mut self) -> Result<GroupElement> {
        GroupElement::from_bytes(&self.array::<POINT_LEN>()?).ok_or(Error::Decode("invalid group element"))
    }

    pub fn scalar(&mut self) -> Result<Scalar> {
        Scalar::from_bytes(&self.array::<SCALAR_LEN>()?).ok_or(Error::Decode("non-canonical scalar"))
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Decode("trailing bytes"));
        }
        Ok(())
    }
}
