use thiserror::Error;

pub const SHT_NULL: u32 = 0;
pub const SHT_SYMTAB: u32 = 2;
pub const SHT_NOBITS: u32 = 8;
const SHN_XINDEX: u16 = 0xffff;
const STT_SECTION: u8 = 3;
const STT_FILE: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElfError {
    #[error("not an ELF file")]
    NotElf,
    #[error("file ends inside the {0}")]
    TruncatedHeader(&'static str),
    #[error("unsupported data encoding {0} (only little-endian is supported)")]
    UnsupportedEndianness(u8),
    #[error("unsupported ELF class {0}")]
    UnsupportedClass(u8),
    #[error("malformed {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElfClass {
    Elf32,
    Elf64,
}

/// One entry of the section header table, sizes read verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionStats {
    pub index: usize,
    pub name: String,
    pub kind: u32,
    pub flags: u64,
    pub addr: u64,
    pub offset: u64,
    pub size: u64,
    pub link: u32,
    pub entsize: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElfSymbol {
    /// Demangled where the name is a Rust or C++ symbol.
    pub name: String,
    pub raw_name: String,
    pub size: u64,
    pub value: u64,
    pub kind: u8,
    pub section: u16,
}

/// A parsed section header table over borrowed file bytes.
#[derive(Debug, Clone)]
pub struct ElfFile<'a> {
    bytes: &'a [u8],
    pub class: ElfClass,
    pub sections: Vec<SectionStats>,
}

fn slice(b: &[u8], off: u64, len: u64) -> Option<&[u8]> {
    let start = usize::try_from(off).ok()?;
    let end = start.checked_add(usize::try_from(len).ok()?)?;
    b.get(start..end)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn c_str(table: &[u8], off: u32) -> Option<String> {
    let tail = table.get(off as usize..)?;
    let end = tail.iter().position(|&c| c == 0)?;
    Some(String::from_utf8_lossy(&tail[..end]).into_owned())
}

impl<'a> ElfFile<'a> {
    pub fn parse(bytes: &'a [u8]) -> Result<Self, ElfError> {
        if bytes.len() < 4 || bytes[..4] != *b"\x7fELF" {
            return Err(ElfError::NotElf);
        }
        if bytes.len() < 6 {
            return Err(ElfError::TruncatedHeader("identification"));
        }
        let class = match bytes[4] {
            1 => ElfClass::Elf32,
            2 => ElfClass::Elf64,
            c => return Err(ElfError::UnsupportedClass(c)),
        };
        if bytes[5] != 1 {
            return Err(ElfError::UnsupportedEndianness(bytes[5]));
        }
        let (shoff, shentsize, shnum, shstrndx, min_ent) = match class {
            ElfClass::Elf32 => {
                if bytes.len() < 52 {
                    return Err(ElfError::TruncatedHeader("file header"));
                }
                (u32_at(bytes, 0x20) as u64, u16_at(bytes, 0x2e), u16_at(bytes, 0x30), u16_at(bytes, 0x32), 40)
            }
            ElfClass::Elf64 => {
                if bytes.len() < 64 {
                    return Err(ElfError::TruncatedHeader("file header"));
                }
                (u64_at(bytes, 0x28), u16_at(bytes, 0x3a), u16_at(bytes, 0x3c), u16_at(bytes, 0x3e), 64)
            }
        };
        let mut file = ElfFile { bytes, class, sections: Vec::new() };
        if shoff == 0 {
            return Ok(file);
        }
        if (shentsize as usize) < min_ent {
            return Err(ElfError::Malformed("section header entry size"));
        }
        let entry = |i: u64| -> Result<&[u8], ElfError> {
            let off = shoff
                .checked_add(i.checked_mul(shentsize as u64).ok_or(ElfError::Malformed("section header table"))?)
                .ok_or(ElfError::Malformed("section header table"))?;
            slice(bytes, off, shentsize as u64).ok_or(ElfError::TruncatedHeader("section header table"))
        };
        let first = file.read_section(0, entry(0)?);
        // Counts that overflow the header fields live in section 0.
        let count = if shnum == 0 { first.size } else { shnum as u64 };
        let strndx = if shstrndx == SHN_XINDEX { first.link as u64 } else { shstrndx as u64 };
        if count > (bytes.len() as u64) / shentsize as u64 {
            return Err(ElfError::TruncatedHeader("section header table"));
        }
        let mut raw = Vec::with_capacity(count as usize);
        raw.push(first);
        for i in 1..count {
            raw.push(file.read_section(i as usize, entry(i)?));
        }
        let names: &[u8] = match raw.get(strndx as usize) {
            Some(s) if strndx != 0 && s.kind != SHT_NOBITS => {
                slice(bytes, s.offset, s.size).ok_or(ElfError::Malformed("section name table"))?
            }
            _ => &[],
        };
        for s in &mut raw {
            let off = s.name.parse::<u32>().unwrap_or(0);
            s.name = if names.is_empty() {
                String::new()
            } else {
                c_str(names, off).ok_or(ElfError::Malformed("section name"))?
            };
        }
        file.sections = raw;
        Ok(file)
    }

    /// Reads one header; the name offset is parked in `name` until the
    /// string table is known.
    fn read_section(&self, index: usize, e: &[u8]) -> SectionStats {
        match self.class {
            ElfClass::Elf32 => SectionStats {
                index,
                name: u32_at(e, 0).to_string(),
                kind: u32_at(e, 4),
                flags: u32_at(e, 8) as u64,
                addr: u32_at(e, 12) as u64,
                offset: u32_at(e, 16) as u64,
                size: u32_at(e, 20) as u64,
                link: u32_at(e, 24),
                entsize: u32_at(e, 36) as u64,
            },
            ElfClass::Elf64 => SectionStats {
                index,
                name: u32_at(e, 0).to_string(),
                kind: u32_at(e, 4),
                flags: u64_at(e, 8),
                addr: u64_at(e, 16),
                offset: u64_at(e, 24),
                size: u64_at(e, 32),
                link: u32_at(e, 40),
                entsize: u64_at(e, 56),
            },
        }
    }

    pub fn section(&self, name: &str) -> Option<&SectionStats> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Sized function and object symbols from `.symtab`. Empty when the
    /// file is stripped.
    pub fn symbols(&self) -> Result<Vec<ElfSymbol>, ElfError> {
        let Some(tab) = self.sections.iter().find(|s| s.kind == SHT_SYMTAB) else { return Ok(Vec::new()) };
        let ent = match self.class {
            ElfClass::Elf32 => 16,
            ElfClass::Elf64 => 24,
        };
        if tab.entsize != 0 && tab.entsize < ent {
            return Err(ElfError::Malformed("symbol entry size"));
        }
        let stride = if tab.entsize == 0 { ent } else { tab.entsize };
        let data = slice(self.bytes, tab.offset, tab.size).ok_or(ElfError::Malformed("symbol table"))?;
        let strtab = self.sections.get(tab.link as usize).ok_or(ElfError::Malformed("symbol string table"))?;
        let names = slice(self.bytes, strtab.offset, strtab.size).ok_or(ElfError::Malformed("symbol string table"))?;
        let mut out = Vec::new();
        for e in data.chunks_exact(stride as usize).skip(1) {
            let (name, value, size, info, shndx) = match self.class {
                ElfClass::Elf32 => (u32_at(e, 0), u32_at(e, 4) as u64, u32_at(e, 8) as u64, e[12], u16_at(e, 14)),
                ElfClass::Elf64 => (u32_at(e, 0), u64_at(e, 8), u64_at(e, 16), e[4], u16_at(e, 6)),
            };
            let kind = info & 0x0f;
            if size == 0 || kind == STT_SECTION || kind == STT_FILE {
                continue;
            }
            let raw_name = c_str(names, name).ok_or(ElfError::Malformed("symbol name"))?;
            let name = format!("{:#}", rustc_demangle::demangle(&raw_name));
            out.push(ElfSymbol { name, raw_name, size, value, kind, section: shndx });
        }
        Ok(out)
    }
}

/// All sections except the reserved null entry.
pub fn parse_elf_sections(bytes: &[u8]) -> Result<Vec<SectionStats>, ElfError> {
    let f = ElfFile::parse(bytes)?;
    Ok(f.sections.into_iter().filter(|s| !(s.index == 0 && s.kind == SHT_NULL)).collect())
}

pub fn parse_elf_symbols(bytes: &[u8]) -> Result<Vec<ElfSymbol>, ElfError> {
    ElfFile::parse(bytes)?.symbols()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_elf() {
        assert_eq!(parse_elf_sections(b"\x00abc").unwrap_err(), ElfError::NotElf);
        assert_eq!(parse_elf_sections(b"").unwrap_err(), ElfError::NotElf);
    }

    #[test]
    fn rejects_big_endian_and_short_headers() {
        assert_eq!(parse_elf_sections(b"\x7fELF\x02\x02").unwrap_err(), ElfError::UnsupportedEndianness(2));
        assert_eq!(parse_elf_sections(b"\x7fELF\x02\x01\x01").unwrap_err(), ElfError::TruncatedHeader("file header"));
        assert_eq!(parse_elf_sections(b"\x7fELF\x07\x01").unwrap_err(), ElfError::UnsupportedClass(7));
    }

    #[test]
    fn header_without_sections() {
        let mut b = vec![0u8; 64];
        b[..6].copy_from_slice(b"\x7fELF\x02\x01");
        assert!(parse_elf_sections(&b).unwrap().is_empty());
    }
}
