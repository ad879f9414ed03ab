//! Minimal allocation-free JSON reader and writer.
//!
//! The reader is a pull parser over a borrowed byte slice. Strings and numbers
//! come back as borrowed views ([`JsonStr`], [`JsonNumber`]) that are only
//! decoded on demand, so parsing never copies into owned storage. The writer
//! appends into a caller-provided `&mut [u8]` and reports overflow instead of
//! growing.

use core::fmt;

use super::caps::JSON_MAX_DEPTH;
use super::error::DataError;

fn malformed(pos: usize, reason: &'static str) -> DataError {
    DataError::MalformedJson { pos, reason }
}

/// Borrowed string token, still in its escaped form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JsonStr<'a> {
    raw: &'a [u8],
    escaped: bool,
}

impl<'a> JsonStr<'a> {
    /// Decoded characters.
    pub fn chars(&self) -> JsonChars<'a> {
        JsonChars { raw: self.raw, pos: 0 }
    }

    /// Returns the string without escapes, if it had none.
    pub fn as_plain(&self) -> Option<&'a str> {
        if self.escaped {
            None
        } else {
            core::str::from_utf8(self.raw).ok()
        }
    }

    pub fn eq_str(&self, other: &str) -> bool {
        match self.as_plain() {
            Some(s) => s == other,
            None => self.chars().eq(other.chars()),
        }
    }

    /// Decodes into a fixed-capacity string.
    pub fn to_fixed<const N: usize>(&self) -> Result<heapless::String<N>, DataError> {
        let mut out = heapless::String::new();
        for c in self.chars() {
            out.push(c).map_err(|_| DataError::CapacityExceeded { limit: N })?;
        }
        Ok(out)
    }
}

/// Iterator over the decoded characters of a validated [`JsonStr`].
#[derive(Debug, Clone)]
pub struct JsonChars<'a> {
    raw: &'a [u8],
    pos: usize,
}

fn hex4(b: &[u8]) -> Option<u16> {
    if b.len() < 4 {
        return None;
    }
    let mut v = 0u16;
    for &c in &b[..4] {
        v = (v << 4) | (c as char).to_digit(16)? as u16;
    }
    Some(v)
}

impl Iterator for JsonChars<'_> {
    type Item = char;

    fn next(&mut self) -> Option<char> {
        let rest = &self.raw[self.pos..];
        let &first = rest.first()?;
        if first != b'\\' {
            // Raw UTF-8 was validated when the token was read.
            let width = match first {
                0x00..=0x7f => 1,
                0xc0..=0xdf => 2,
                0xe0..=0xef => 3,
                _ => 4,
            };
            let s = core::str::from_utf8(&rest[..width]).ok()?;
            self.pos += width;
            return s.chars().next();
        }
        let esc = rest[1];
        self.pos += 2;
        Some(match esc {
            b'"' => '"',
            b'\\' => '\\',
            b'/' => '/',
            b'b' => '\u{8}',
            b'f' => '\u{c}',
            b'n' => '\n',
            b'r' => '\r',
            b't' => '\t',
            _ => {
                let hi = hex4(&rest[2..])?;
                self.pos += 4;
                if (0xd800..0xdc00).contains(&hi) {
                    let lo = hex4(&rest[8..])?;
                    self.pos += 6;
                    let c = 0x10000 + (((hi as u32) - 0xd800) << 10) + ((lo as u32) - 0xdc00);
                    char::from_u32(c)?
                } else {
                    char::from_u32(hi as u32)?
                }
            }
        })
    }
}

/// Borrowed number token, validated against the JSON number grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JsonNumber<'a> {
    raw: &'a str,
}

impl<'a> JsonNumber<'a> {
    pub fn as_str(&self) -> &'a str {
        self.raw
    }

    /// Value as an unsigned integer, if the token is a plain non-negative
    /// integer that fits.
    pub fn as_u64(&self) -> Option<u64> {
        if self.raw.bytes().all(|b| b.is_ascii_digit()) {
            self.raw.parse().ok()
        } else {
            None
        }
    }
}

/// Pull parser over a JSON document.
#[derive(Debug, Clone)]
pub struct JsonReader<'a> {
    src: &'a [u8],
    pos: usize,
}

/// Cursor state while walking an object's members.
#[derive(Debug, Clone, Copy, Default)]
pub struct ObjectCursor {
    seen_member: bool,
}

impl<'a> JsonReader<'a> {
    pub fn new(src: &'a [u8]) -> Self {
        JsonReader { src, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn skip_ws(&mut self) {
        while let Some(&b) = self.src.get(self.pos) {
            if matches!(b, b' ' | b'\t' | b'\n' | b'\r') {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8, reason: &'static str) -> Result<(), DataError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(malformed(self.pos, reason))
        }
    }

    /// Consumes `{`.
    pub fn begin_object(&mut self) -> Result<ObjectCursor, DataError> {
        self.expect(b'{', "expected '{'")?;
        Ok(ObjectCursor::default())
    }

    /// Advances to the next member key, consuming the `:` after it. Returns
    /// `None` after consuming the closing `}`.
    pub fn next_key(&mut self, cur: &mut ObjectCursor) -> Result<Option<JsonStr<'a>>, DataError> {
        match self.peek() {
            Some(b'}') => {
                self.pos += 1;
                return Ok(None);
            }
            Some(b',') if cur.seen_member => {
                self.pos += 1;
            }
            Some(b'"') if !cur.seen_member => {}
            _ => return Err(malformed(self.pos, "expected member or '}'")),
        }
        cur.seen_member = true;
        let key = self.read_str()?;
        self.expect(b':', "expected ':'")?;
        Ok(Some(key))
    }

    /// Consumes `[`.
    pub fn begin_array(&mut self) -> Result<ObjectCursor, DataError> {
        self.expect(b'[', "expected '['")?;
        Ok(ObjectCursor::default())
    }

    /// Positions at the next array element; `false` after consuming `]`.
    pub fn next_element(&mut self, cur: &mut ObjectCursor) -> Result<bool, DataError> {
        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(false)
            }
            Some(b',') if cur.seen_member => {
                self.pos += 1;
                Ok(true)
            }
            Some(_) if !cur.seen_member => {
                cur.seen_member = true;
                Ok(true)
            }
            _ => Err(malformed(self.pos, "expected element or ']'")),
        }
    }

    pub fn read_str(&mut self) -> Result<JsonStr<'a>, DataError> {
        self.expect(b'"', "expected string")?;
        let start = self.pos;
        let mut escaped = false;
        loop {
            let Some(&b) = self.src.get(self.pos) else {
                return Err(malformed(self.pos, "unterminated string"));
            };
            match b {
                b'"' => break,
                b'\\' => {
                    escaped = true;
                    let Some(&e) = self.src.get(self.pos + 1) else {
                        return Err(malformed(self.pos, "unterminated escape"));
                    };
                    match e {
                        b'"' | b'\\' | b'/' | b'b' | b'f' | b'n' | b'r' | b't' => self.pos += 2,
                        b'u' => {
                            let hi = hex4(self.src.get(self.pos + 2..).unwrap_or(&[]))
                                .ok_or(malformed(self.pos, "bad \\u escape"))?;
                            self.pos += 6;
                            if (0xd800..0xdc00).contains(&hi) {
                                let rest = self.src.get(self.pos..).unwrap_or(&[]);
                                let lo = if rest.len() >= 6 && rest[0] == b'\\' && rest[1] == b'u' {
                                    hex4(&rest[2..])
                                } else {
                                    None
                                };
                                match lo {
                                    Some(lo) if (0xdc00..0xe000).contains(&lo) => self.pos += 6,
                                    _ => return Err(malformed(self.pos, "unpaired surrogate")),
                                }
                            } else if (0xdc00..0xe000).contains(&hi) {
                                return Err(malformed(self.pos, "unpaired surrogate"));
                            }
                        }
                        _ => return Err(malformed(self.pos, "bad escape")),
                    }
                }
                0x00..=0x1f => return Err(malformed(self.pos, "control character in string")),
                _ => self.pos += 1,
            }
        }
        let raw = &self.src[start..self.pos];
        self.pos += 1;
        // Validate raw UTF-8 between escapes.
        if core::str::from_utf8(raw).is_err() {
            return Err(malformed(start, "invalid UTF-8"));
        }
        Ok(JsonStr { raw, escaped })
    }

    pub fn read_bool(&mut self) -> Result<bool, DataError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(b"true") {
            self.pos += 4;
            Ok(true)
        } else if rest.starts_with(b"false") {
            self.pos += 5;
            Ok(false)
        } else {
            Err(malformed(self.pos, "expected boolean"))
        }
    }

    pub fn read_null(&mut self) -> Result<(), DataError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(b"null") {
            self.pos += 4;
            Ok(())
        } else {
            Err(malformed(self.pos, "expected null"))
        }
    }

    pub fn read_number(&mut self) -> Result<JsonNumber<'a>, DataError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while s.get(*p).is_some_and(u8::is_ascii_digit) {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        if s.get(p) == Some(&b'-') {
            p += 1;
        }
        match s.get(p) {
            Some(b'0') => p += 1,
            Some(b'1'..=b'9') => {
                digits(&mut p);
            }
            _ => return Err(malformed(p, "expected number")),
        }
        if s.get(p) == Some(&b'.') {
            p += 1;
            if !digits(&mut p) {
                return Err(malformed(p, "expected fraction digits"));
            }
        }
        if matches!(s.get(p), Some(b'e' | b'E')) {
            p += 1;
            if matches!(s.get(p), Some(b'+' | b'-')) {
                p += 1;
            }
            if !digits(&mut p) {
                return Err(malformed(p, "expected exponent digits"));
            }
        }
        self.pos = p;
        // The accepted grammar is ASCII only.
        let raw = core::str::from_utf8(&s[start..p]).map_err(|_| malformed(start, "number"))?;
        Ok(JsonNumber { raw })
    }

    /// Skips one complete value of any type without recursion.
    pub fn skip_value(&mut self) -> Result<(), DataError> {
        const _: () = assert!(JSON_MAX_DEPTH <= 64);
        // Bit `d` set: the container at depth `d` is an object.
        let mut objects = 0u64;
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Some(open @ (b'{' | b'[')) => {
                    if depth == JSON_MAX_DEPTH {
                        return Err(malformed(self.pos, "nesting too deep"));
                    }
                    self.pos += 1;
                    let is_obj = open == b'{';
                    let close = if is_obj { b'}' } else { b']' };
                    if self.peek() == Some(close) {
                        self.pos += 1;
                    } else {
                        if is_obj {
                            objects |= 1 << depth;
                            self.read_str()?;
                            self.expect(b':', "expected ':'")?;
                        } else {
                            objects &= !(1 << depth);
                        }
                        depth += 1;
                        continue;
                    }
                }
                Some(b'"') => {
                    self.read_str()?;
                }
                Some(b't' | b'f') => {
                    self.read_bool()?;
                }
                Some(b'n') => self.read_null()?,
                Some(b'-' | b'0'..=b'9') => {
                    self.read_number()?;
                }
                _ => return Err(malformed(self.pos, "expected value")),
            }
            // A value just ended: close containers or move to the next sibling.
            loop {
                if depth == 0 {
                    return Ok(());
                }
                let in_obj = objects & (1 << (depth - 1)) != 0;
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                        if in_obj {
                            self.read_str()?;
                            self.expect(b':', "expected ':'")?;
                        }
                        break;
                    }
                    Some(b'}') if in_obj => {
                        self.pos += 1;
                        depth -= 1;
                    }
                    Some(b']') if !in_obj => {
                        self.pos += 1;
                        depth -= 1;
                    }
                    _ => return Err(malformed(self.pos, "expected ',' or close")),
                }
            }
        }
    }

    /// Requires that only whitespace remains.
    pub fn finish(&mut self) -> Result<(), DataError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(malformed(self.pos, "trailing characters")),
        }
    }
}

/// Appends JSON text into a fixed buffer.
#[derive(Debug)]
pub struct JsonWriter<'a> {
    buf: &'a mut [u8],
    len: usize,
}

impl<'a> JsonWriter<'a> {
    pub fn new(buf: &'a mut [u8]) -> Self {
        JsonWriter { buf, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn written(&self) -> &[u8] {
        &self.buf[..self.len]
    }

    fn overflow(&self) -> DataError {
        DataError::CapacityExceeded { limit: self.buf.len() }
    }

    pub fn raw(&mut self, s: &str) -> Result<&mut Self, DataError> {
        let end = self.len + s.len();
        if end > self.buf.len() {
            return Err(self.overflow());
        }
        self.buf[self.len..end].copy_from_slice(s.as_bytes());
        self.len = end;
        Ok(self)
    }

    pub fn string(&mut self, s: &str) -> Result<&mut Self, DataError> {
        self.raw("\"")?;
        let mut start = 0;
        for (i, c) in s.char_indices() {
            let esc = match c {
                '"' => "\\\"",
                '\\' => "\\\\",
                '\n' => "\\n",
                '\r' => "\\r",
                '\t' => "\\t",
                c if (c as u32) < 0x20 => {
                    self.raw(&s[start..i])?;
                    fmt::write(self, format_args!("\\u{:04x}", c as u32)).map_err(|_| self.overflow())?;
                    start = i + 1;
                    continue;
                }
                _ => continue,
            };
            self.raw(&s[start..i])?;
            self.raw(esc)?;
            start = i + 1;
        }
        self.raw(&s[start..])?;
        self.raw("\"")
    }

    pub fn uint(&mut self, v: u64) -> Result<&mut Self, DataError> {
        fmt::write(self, format_args!("{v}")).map_err(|_| self.overflow())?;
        Ok(self)
    }

    pub fn boolean(&mut self, v: bool) -> Result<&mut Self, DataError> {
        self.raw(if v { "true" } else { "false" })
    }

    /// `"key":` including the leading comma unless `first`.
    pub fn key(&mut self, key: &str, first: bool) -> Result<&mut Self, DataError> {
        if !first {
            self.raw(",")?;
        }
        self.string(key)?.raw(":")
    }
}

impl fmt::Write for JsonWriter<'_> {
    fn write_str(&mut self, s: &str) -> fmt::Result {
        self.raw(s).map(|_| ()).map_err(|_| fmt::Error)
    }
}
