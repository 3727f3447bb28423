//! Minimal MSB-first bit stream reader/writer used by the certificate codec.

use crate::error::{FsdError, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: usize) {
        assert!(width <= 64);
        assert!(width == 64 || value < (1u64 << width), "value does not fit in width");
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            if self.bit_len % 8 == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                let byte = self.bit_len / 8;
                self.bytes[byte] |= 1 << (7 - self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// Finished byte stream; trailing bits of the last byte are zero.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: usize) -> Result<Self> {
        if bit_len > bytes.len() * 8 || (bit_len + 7) / 8 != bytes.len() {
            return Err(FsdError::MalformedCertificate(format!(
                "bit length {bit_len} inconsistent with {} bytes",
                bytes.len()
            )));
        }
        Ok(BitReader { bytes, bit_len, pos: 0 })
    }

    pub fn read_bits(&mut self, width: usize) -> Result<u64> {
        assert!(width <= 64);
        if self.pos + width > self.bit_len {
            return Err(FsdError::MalformedCertificate("truncated bit stream".into()));
        }
        let mut value = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            value = (value << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(value)
    }

    pub fn remaining(&self) -> usize {
        self.bit_len - self.pos
    }

    /// Checks the stream was consumed exactly and any padding bits are zero.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.bit_len {
            return Err(FsdError::MalformedCertificate(format!(
                "{} unread bits at end of stream",
                self.bit_len - self.pos
            )));
        }
        if self.bit_len % 8 != 0 {
            let last = self.bytes[self.bytes.len() - 1];
            let pad = 8 - self.bit_len % 8;
            if last & ((1 << pad) - 1) != 0 {
                return Err(FsdError::MalformedCertificate("nonzero padding bits".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_mixed_widths() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        w.write_bits(0, 0);
        w.write_bits(0xDEAD, 16);
        w.write_bits(1, 1);
        let bit_len = w.bit_len();
        assert_eq!(bit_len, 20);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes, bit_len).unwrap();
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
        assert_eq!(r.read_bits(16).unwrap(), 0xDEAD);
        assert_eq!(r.read_bits(1).unwrap(), 1);
        r.finish().unwrap();
    }

    #[test]
    fn detects_truncation_and_bad_padding() {
        let mut w = BitWriter::new();
        w.write_bits(3, 2);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes, 2).unwrap();
        assert!(r.read_bits(3).is_err());
        // padding bit set below the declared length
        let mut r2 = BitReader::new(&[0b1110_0000], 2).unwrap();
        r2.read_bits(2).unwrap();
        assert!(r2.finish().is_err());
    }
}
