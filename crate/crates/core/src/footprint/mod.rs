//! Binary footprint analysis: ELF section sizes, symbol categorization and
//! ROM/RAM reports.
//!
//! The parser reads little-endian ELF32 and ELF64 section header tables and
//! `.symtab`. It never panics on malformed input; every failure is an
//! [`ElfError`].

mod categorize;
mod elf;
mod report;

pub use categorize::{categorize, parse_rules, Category, CategoryBreakdown, CategoryRule, RuleError};
pub use elf::{
    parse_elf_sections, parse_elf_symbols, ElfClass, ElfError, ElfFile, ElfSymbol, SectionStats, SHT_NOBITS,
    SHT_NULL, SHT_SYMTAB,
};
pub use report::{build_memory_report, comparison_csv, render_comparison, MemoryReport};
