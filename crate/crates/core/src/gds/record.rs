// SPDX-License-Identifier: Apache-2.0

//! Low-level GDSII record framing and the excess-64 real format.

pub const HEADER: u8 = 0x00;
pub const BGNLIB: u8 = 0x01;
pub const LIBNAME: u8 = 0x02;
pub const UNITS: u8 = 0x03;
pub const ENDLIB: u8 = 0x04;
pub const BGNSTR: u8 = 0x05;
pub const STRNAME: u8 = 0x06;
pub const ENDSTR: u8 = 0x07;
pub const BOUNDARY: u8 = 0x08;
pub const PATH: u8 = 0x09;
pub const SREF: u8 = 0x0A;
pub const AREF: u8 = 0x0B;
pub const TEXT: u8 = 0x0C;
pub const LAYER: u8 = 0x0D;
pub const DATATYPE: u8 = 0x0E;
pub const WIDTH: u8 = 0x0F;
pub const XY: u8 = 0x10;
pub const ENDEL: u8 = 0x11;
pub const SNAME: u8 = 0x12;
pub const COLROW: u8 = 0x13;
pub const NODE: u8 = 0x15;
pub const TEXTTYPE: u8 = 0x16;
pub const STRING: u8 = 0x19;
pub const STRANS: u8 = 0x1A;
pub const MAG: u8 = 0x1B;
pub const ANGLE: u8 = 0x1C;
pub const PATHTYPE: u8 = 0x21;
pub const BOX: u8 = 0x2D;

pub const DT_NONE: u8 = 0;
pub const DT_BITS: u8 = 1;
pub const DT_I16: u8 = 2;
pub const DT_I32: u8 = 3;
pub const DT_REAL8: u8 = 5;
pub const DT_ASCII: u8 = 6;

pub const STRANS_REFLECT: u16 = 0x8000;

pub fn record_name(rt: u8) -> &'static str {
    match rt {
        HEADER => "HEADER",
        BGNLIB => "BGNLIB",
        LIBNAME => "LIBNAME",
        UNITS => "UNITS",
        ENDLIB => "ENDLIB",
        BGNSTR => "BGNSTR",
        STRNAME => "STRNAME",
        ENDSTR => "ENDSTR",
        BOUNDARY => "BOUNDARY",
        PATH => "PATH",
        SREF => "SREF",
        AREF => "AREF",
        TEXT => "TEXT",
        LAYER => "LAYER",
        DATATYPE => "DATATYPE",
        WIDTH => "WIDTH",
        XY => "XY",
        ENDEL => "ENDEL",
        SNAME => "SNAME",
        COLROW => "COLROW",
        NODE => "NODE",
        TEXTTYPE => "TEXTTYPE",
        STRING => "STRING",
        STRANS => "STRANS",
        MAG => "MAG",
        ANGLE => "ANGLE",
        PATHTYPE => "PATHTYPE",
        BOX => "BOX",
        _ => "UNKNOWN",
    }
}

/// Decodes an 8-byte excess-64 base-16 real.
pub fn real8_to_f64(b: [u8; 8]) -> f64 {
    let negative = b[0] & 0x80 != 0;
    let exp = (b[0] & 0x7f) as i32 - 64;
    let mut mant = 0u64;
    for &byte in &b[1..] {
        mant = (mant << 8) | byte as u64;
    }
    if mant == 0 {
        return 0.0;
    }
    let v = mant as f64 * 2f64.powi(4 * exp - 56);
    if negative {
        -v
    } else {
        v
    }
}

/// Encodes an f64 as excess-64 real. Exact for every f64 whose magnitude is
/// representable (16^-65 .. 16^63); values outside saturate.
pub fn f64_to_real8(x: f64) -> [u8; 8] {
    if x == 0.0 || !x.is_finite() {
        return [0; 8];
    }
    let bits = x.abs().to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (s, e) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
    let len = 64 - s.leading_zeros() as i32;
    // Smallest k with |x| < 16^k.
    let mut k = (len + e).div_euclid(4) + if (len + e).rem_euclid(4) == 0 { 0 } else { 1 };
    k = k.clamp(-64, 63);
    let shift = e - 4 * k + 56;
    let mant = if shift >= 0 {
        if shift >= 64 {
            u64::MAX >> 8
        } else {
            (s << shift).min(u64::MAX >> 8)
        }
    } else if -shift >= 64 {
        0
    } else {
        s >> (-shift)
    };
    let mut out = [0u8; 8];
    out[0] = (k + 64) as u8 | if x < 0.0 { 0x80 } else { 0 };
    for i in 0..7 {
        out[7 - i] = (mant >> (8 * i)) as u8;
    }
    out
}

/// One framed record borrowed from the input.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    pub offset: usize,
    pub rtype: u8,
    pub dtype: u8,
    pub data: &'a [u8],
}

impl Record<'_> {
    pub fn name(&self) -> &'static str {
        record_name(self.rtype)
    }

    pub fn i16s(&self) -> Vec<i16> {
        self.data.chunks_exact(2).map(|c| i16::from_be_bytes([c[0], c[1]])).collect()
    }

    pub fn i32s(&self) -> Vec<i32> {
        self.data.chunks_exact(4).map(|c| i32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect()
    }

    pub fn reals(&self) -> Vec<f64> {
        self.data
            .chunks_exact(8)
            .map(|c| real8_to_f64([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect()
    }

    pub fn ascii(&self) -> String {
        let end = self.data.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
        String::from_utf8_lossy(&self.data[..end]).into_owned()
    }
}

/// Appends records to a byte buffer.
#[derive(Debug, Default)]
pub struct RecordWriter {
    pub buf: Vec<u8>,
}

impl RecordWriter {
    fn frame(&mut self, rtype: u8, dtype: u8, payload_len: usize) {
        let len = (payload_len + 4) as u16;
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.push(rtype);
        self.buf.push(dtype);
    }

    pub fn empty(&mut self, rtype: u8) {
        self.frame(rtype, DT_NONE, 0);
    }

    pub fn i16s(&mut self, rtype: u8, v: &[i16]) {
        self.frame(rtype, DT_I16, v.len() * 2);
        for x in v {
            self.buf.extend_from_slice(&x.to_be_bytes());
        }
    }

    pub fn bits(&mut self, rtype: u8, v: u16) {
        self.frame(rtype, DT_BITS, 2);
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn i32s(&mut self, rtype: u8, v: &[i32]) {
        self.frame(rtype, DT_I32, v.len() * 4);
        for x in v {
            self.buf.extend_from_slice(&x.to_be_bytes());
        }
    }

    pub fn reals(&mut self, rtype: u8, v: &[f64]) {
        self.frame(rtype, DT_REAL8, v.len() * 8);
        for &x in v {
            self.buf.extend_from_slice(&f64_to_real8(x));
        }
    }

    pub fn ascii(&mut self, rtype: u8, s: &str) {
        let mut bytes = s.as_bytes().to_vec();
        if bytes.len() % 2 == 1 {
            bytes.push(0);
        }
        self.frame(rtype, DT_ASCII, bytes.len());
        self.buf.extend_from_slice(&bytes);
    }
}
