//! Byte-level ELF writer for parser fixtures. Produces relocatable objects
//! with a section name table and, optionally, a symbol table.

pub struct Section {
    pub name: &'static str,
    pub kind: u32,
    pub flags: u64,
    /// File contents, or the reserved size for NOBITS sections.
    pub data: Vec<u8>,
    pub nobits_size: u64,
}

pub struct Symbol {
    pub name: &'static str,
    pub value: u64,
    pub size: u64,
    pub info: u8,
    pub section: u16,
}

pub const PROGBITS: u32 = 1;
pub const SYMTAB: u32 = 2;
pub const STRTAB: u32 = 3;
pub const NOBITS: u32 = 8;
pub const ALLOC: u64 = 0x2;
pub const WRITE: u64 = 0x1;
pub const EXEC: u64 = 0x4;
pub const FUNC_GLOBAL: u8 = 0x12;
pub const OBJECT_GLOBAL: u8 = 0x11;

pub fn progbits(name: &'static str, flags: u64, len: usize) -> Section {
    Section { name, kind: PROGBITS, flags, data: (0..len).map(|i| (i * 7 + 1) as u8).collect(), nobits_size: 0 }
}

pub fn nobits(name: &'static str, size: u64) -> Section {
    Section { name, kind: NOBITS, flags: ALLOC | WRITE, data: Vec::new(), nobits_size: size }
}

fn strtab(names: &[&str]) -> (Vec<u8>, Vec<u32>) {
    let mut t = vec![0u8];
    let mut offs = Vec::new();
    for n in names {
        offs.push(t.len() as u32);
        t.extend_from_slice(n.as_bytes());
        t.push(0);
    }
    (t, offs)
}

fn put(out: &mut Vec<u8>, v: u64, width: usize) {
    out.extend_from_slice(&v.to_le_bytes()[..width]);
}

fn align(out: &mut Vec<u8>, to: usize) {
    while !out.len().is_multiple_of(to) {
        out.push(0);
    }
}

/// Lays out: file header, section contents, section headers.
pub fn build(is64: bool, mut sections: Vec<Section>, symbols: &[Symbol]) -> Vec<u8> {
    let w = if is64 { 8 } else { 4 };
    let mut links = vec![0u32; sections.len()];
    if !symbols.is_empty() {
        let (names, offs) = strtab(&symbols.iter().map(|s| s.name).collect::<Vec<_>>());
        let mut tab = vec![0u8; if is64 { 24 } else { 16 }];
        for (s, off) in symbols.iter().zip(offs) {
            put(&mut tab, off as u64, 4);
            if is64 {
                tab.push(s.info);
                tab.push(0);
                put(&mut tab, s.section as u64, 2);
                put(&mut tab, s.value, 8);
                put(&mut tab, s.size, 8);
            } else {
                put(&mut tab, s.value, 4);
                put(&mut tab, s.size, 4);
                tab.push(s.info);
                tab.push(0);
                put(&mut tab, s.section as u64, 2);
            }
        }
        // Null section precedes everything, so .strtab lands at len + 2.
        links.push(sections.len() as u32 + 2);
        sections.push(Section { name: ".symtab", kind: SYMTAB, flags: 0, data: tab, nobits_size: 0 });
        links.push(0);
        sections.push(Section { name: ".strtab", kind: STRTAB, flags: 0, data: names, nobits_size: 0 });
    }
    let mut all_names: Vec<&str> = sections.iter().map(|s| s.name).collect();
    all_names.push(".shstrtab");
    let (shstr, name_offs) = strtab(&all_names);
    links.push(0);
    sections.push(Section { name: ".shstrtab", kind: STRTAB, flags: 0, data: shstr, nobits_size: 0 });

    let ehsize = if is64 { 64 } else { 52 };
    let mut out = vec![0u8; ehsize];
    let mut placed = Vec::new();
    for s in &sections {
        align(&mut out, w);
        placed.push(out.len() as u64);
        out.extend_from_slice(&s.data);
    }
    align(&mut out, w);
    let shoff = out.len() as u64;

    // Null section header.
    out.extend(std::iter::repeat_n(0, if is64 { 64 } else { 40 }));
    for (i, s) in sections.iter().enumerate() {
        let size = if s.kind == NOBITS { s.nobits_size } else { s.data.len() as u64 };
        let entsize = if s.kind == SYMTAB { if is64 { 24 } else { 16 } } else { 0 };
        let info = if s.kind == SYMTAB { 1 } else { 0 };
        put(&mut out, name_offs[i] as u64, 4);
        put(&mut out, s.kind as u64, 4);
        put(&mut out, s.flags, w);
        put(&mut out, 0, w);
        put(&mut out, placed[i], w);
        put(&mut out, size, w);
        put(&mut out, links[i] as u64, 4);
        put(&mut out, info, 4);
        put(&mut out, if s.kind == SYMTAB { w as u64 } else { 1 }, w);
        put(&mut out, entsize, w);
    }

    let mut h = Vec::new();
    h.extend_from_slice(b"\x7fELF");
    h.push(if is64 { 2 } else { 1 });
    h.extend_from_slice(&[1, 1, 0]);
    h.extend_from_slice(&[0; 8]);
    put(&mut h, 1, 2); // ET_REL
    put(&mut h, if is64 { 62 } else { 40 }, 2);
    put(&mut h, 1, 4);
    put(&mut h, 0, w); // entry
    put(&mut h, 0, w); // phoff
    put(&mut h, shoff, w);
    put(&mut h, if is64 { 0 } else { 0x0500_0000 }, 4);
    put(&mut h, ehsize as u64, 2);
    put(&mut h, 0, 2);
    put(&mut h, 0, 2);
    put(&mut h, if is64 { 64 } else { 40 }, 2);
    put(&mut h, sections.len() as u64 + 1, 2);
    put(&mut h, sections.len() as u64, 2);
    assert_eq!(h.len(), ehsize);
    out[..ehsize].copy_from_slice(&h);
    out
}

/// The three frozen parser fixtures, by file stem.
pub fn fixtures() -> Vec<(&'static str, Vec<u8>)> {
    let minimal = build(true, vec![progbits(".text", ALLOC | EXEC, 16)], &[]);
    let arm32 = build(
        false,
        vec![
            progbits(".text", ALLOC | EXEC, 24),
            progbits(".rodata", ALLOC, 10),
            progbits(".data", ALLOC | WRITE, 8),
            nobits(".bss", 32),
        ],
        &[
            Symbol { name: "main", value: 0, size: 16, info: FUNC_GLOBAL, section: 1 },
            Symbol { name: "HAL_Init", value: 16, size: 8, info: FUNC_GLOBAL, section: 1 },
            Symbol { name: "banner", value: 0, size: 10, info: OBJECT_GLOBAL, section: 2 },
            Symbol { name: "rx_ring", value: 0, size: 32, info: OBJECT_GLOBAL, section: 4 },
        ],
    );
    let mixed64 = build(
        true,
        vec![
            progbits(".text", ALLOC | EXEC, 48),
            progbits(".text.helper", ALLOC | EXEC, 6),
            progbits(".rodata", ALLOC, 13),
            progbits(".data", ALLOC | WRITE, 4),
            nobits(".bss", 100),
            progbits(".comment", 0, 9),
        ],
        &[
            Symbol { name: "_ZN4core3fmt5write17h0123456789abcdefE", value: 0, size: 40, info: FUNC_GLOBAL, section: 1 },
            Symbol { name: "helper", value: 0, size: 6, info: FUNC_GLOBAL, section: 2 },
            Symbol { name: "zero_sized", value: 40, size: 0, info: FUNC_GLOBAL, section: 1 },
            Symbol { name: "TABLE", value: 0, size: 13, info: OBJECT_GLOBAL, section: 3 },
        ],
    );
    vec![("minimal64", minimal), ("arm32", arm32), ("mixed64", mixed64)]
}
