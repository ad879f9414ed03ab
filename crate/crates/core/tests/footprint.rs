mod support;

use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use support::elf_builder::fixtures;
use vdp_core::footprint::{
    build_memory_report, categorize, parse_elf_sections, parse_elf_symbols, parse_rules, Category, ElfError,
    ElfSymbol, MemoryReport, SectionStats,
};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// `(name, size)` for every section row of `readelf -S -W` output, null
/// section excluded.
fn parse_readelf(text: &str) -> Vec<(String, u64)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let Some(rest) = line.trim_start().strip_prefix('[') else { continue };
        let Some((idx, rest)) = rest.split_once(']') else { continue };
        if idx.trim().parse::<u32>().is_err() || idx.trim() == "0" {
            continue;
        }
        let cols: Vec<&str> = rest.split_whitespace().collect();
        // Name Type Address Off Size ...
        let size = u64::from_str_radix(cols[4], 16).unwrap();
        out.push((cols[0].to_owned(), size));
    }
    out
}

fn name_sizes(s: &[SectionStats]) -> Vec<(String, u64)> {
    s.iter().map(|s| (s.name.clone(), s.size)).collect()
}

fn readelf(path: &Path) -> Option<String> {
    let out = Command::new("readelf").args(["-S", "-W"]).arg(path).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn frozen_fixtures_are_reproducible() {
    let dir = fixture_dir();
    let bless = std::env::var_os("VDP_BLESS").is_some();
    for (stem, bytes) in fixtures() {
        let elf = dir.join(format!("{stem}.o"));
        if bless {
            std::fs::write(&elf, &bytes).unwrap();
            std::fs::write(dir.join(format!("{stem}.readelf.txt")), readelf(&elf).unwrap()).unwrap();
        }
        assert_eq!(std::fs::read(&elf).unwrap(), bytes, "{stem}");
    }
}

#[test]
fn fixture_sections_match_readelf() {
    let dir = fixture_dir();
    for (stem, _) in fixtures() {
        let elf = dir.join(format!("{stem}.o"));
        let ours = name_sizes(&parse_elf_sections(&std::fs::read(&elf).unwrap()).unwrap());
        let frozen = std::fs::read_to_string(dir.join(format!("{stem}.readelf.txt"))).unwrap();
        assert_eq!(ours, parse_readelf(&frozen), "{stem} vs frozen readelf");
        if let Some(live) = readelf(&elf) {
            assert_eq!(ours, parse_readelf(&live), "{stem} vs live readelf");
        }
    }
}

#[test]
fn minimal_fixture_has_sixteen_byte_text() {
    let s = parse_elf_sections(&std::fs::read(fixture_dir().join("minimal64.o")).unwrap()).unwrap();
    let text: Vec<_> = s.iter().filter(|s| s.name == ".text").collect();
    assert_eq!(text.len(), 1);
    assert_eq!(text[0].size, 16);
}

#[test]
fn fixture_symbols_and_report() {
    let bytes = std::fs::read(fixture_dir().join("arm32.o")).unwrap();
    let syms = parse_elf_symbols(&bytes).unwrap();
    let names: Vec<&str> = syms.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["main", "HAL_Init", "banner", "rx_ring"]);
    let r = build_memory_report(&parse_elf_sections(&bytes).unwrap(), 512, 0);
    assert_eq!(r, MemoryReport::from_parts(24, 10, 512, 40, 0));

    let bytes = std::fs::read(fixture_dir().join("mixed64.o")).unwrap();
    let syms = parse_elf_symbols(&bytes).unwrap();
    assert_eq!(syms[0].name, "core::fmt::write");
    assert_eq!(syms.len(), 3, "zero-sized symbols are skipped");
    let r = build_memory_report(&parse_elf_sections(&bytes).unwrap(), 0, 0);
    assert_eq!((r.text, r.rodata, r.static_ram), (54, 13, 104));
}

#[test]
fn own_binary_matches_readelf() {
    let exe = std::env::current_exe().unwrap();
    let Some(live) = readelf(&exe) else {
        eprintln!("readelf not available; skipped");
        return;
    };
    let ours = parse_elf_sections(&std::fs::read(&exe).unwrap()).unwrap();
    assert_eq!(name_sizes(&ours), parse_readelf(&live));
    assert!(ours.iter().any(|s| s.name == ".text" && s.size > 0));
    assert!(!parse_elf_symbols(&std::fs::read(&exe).unwrap()).unwrap().is_empty());
}

#[test]
fn table_arithmetic() {
    let c = MemoryReport::from_parts(66_240, 10_504, 2_048, 14_960, 25_600).with_stated_total_ram(44_656);
    let rust = MemoryReport::from_parts(69_764, 14_336, 10_240, 14_400, 0);
    assert_eq!((c.total_rom, rust.total_rom), (76_744, 84_100));
    assert_eq!((c.total_ram, rust.total_ram), (42_608, 24_640));
    assert_eq!(rust.total_ram as i64 - c.total_ram as i64, -17_968);
    assert_eq!(c.stated_total_ram, Some(44_656));
    assert_ne!(c.stated_total_ram, Some(c.total_ram));
    assert_eq!(c.stated_ram_discrepancy(), Some(-2_048));
}

fn sym(name: &str, size: u64) -> ElfSymbol {
    ElfSymbol { name: name.into(), raw_name: name.into(), size, value: 0, kind: 2, section: 1 }
}

#[test]
fn twenty_symbol_breakdown() {
    let rules = parse_rules(
        "app_*=Application\n\
         main=Application\n\
         lsm6dso_*=Drivers\n\
         *_i2c_*=Drivers\n\
         json_*=Serialization\n\
         *serde*=Serialization\n\
         HAL_*=HAL\n\
         *=System\n",
    )
    .unwrap();
    let symbols = [
        sym("main", 120),
        sym("app_loop", 340),
        sym("app_on_drdy", 88),
        sym("app_handle_cmd", 512),
        sym("lsm6dso_read_accel", 96),
        sym("lsm6dso_init", 210),
        sym("bus_i2c_read", 64),
        sym("bus_i2c_write", 60),
        sym("json_parse", 1_024),
        sym("json_emit_status", 300),
        sym("serde_json_core::de::from_slice", 2_048),
        sym("HAL_UART_Transmit", 400),
        sym("HAL_GPIO_EXTI_IRQHandler", 44),
        sym("HAL_I2C_Mem_Read", 380),
        sym("memcpy", 128),
        sym("memset", 96),
        sym("__aeabi_uldivmod", 56),
        sym("SysTick_Handler", 20),
        sym("app_json_reply", 70),
        sym("lsm6dso_i2c_probe", 32),
    ];
    let b = categorize(&symbols, &rules);
    // Application: 120+340+88+512+70; app_json_reply hits app_* first.
    assert_eq!(b.get(Category::Application), 1_130);
    // Drivers: 96+210+32 via lsm6dso_*, 64+60 via *_i2c_*.
    assert_eq!(b.get(Category::Drivers), 462);
    assert_eq!(b.get(Category::Serialization), 3_372);
    // HAL_I2C_Mem_Read: glob is case-sensitive, so *_i2c_* misses it.
    assert_eq!(b.get(Category::Hal), 824);
    assert_eq!(b.get(Category::System), 300);
    assert_eq!(b.uncategorized, 0);
    assert_eq!(b.total(), symbols.iter().map(|s| s.size).sum::<u64>());
    assert_eq!(b.symbols.iter().sum::<usize>(), 20);
}

#[test]
fn unmatched_symbols_are_reported() {
    let b = categorize(&[sym("a", 1), sym("b", 2)], &parse_rules("a=HAL").unwrap());
    assert_eq!((b.uncategorized, b.uncategorized_symbols), (2, 1));
}

fn sample_fixture() -> Vec<u8> {
    fixtures().remove(1).1
}

proptest! {
    #[test]
    fn parser_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = parse_elf_sections(&bytes);
        let _ = parse_elf_symbols(&bytes);
    }

    #[test]
    fn mutated_fixtures_never_panic(edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8),
                                    cut in any::<prop::sample::Index>()) {
        let mut b = sample_fixture();
        for (i, v) in edits {
            let at = i.index(b.len());
            b[at] = v;
        }
        b.truncate(cut.index(b.len() + 1));
        let _ = parse_elf_sections(&b);
        let _ = parse_elf_symbols(&b);
    }

    #[test]
    fn categories_conserve_bytes(sizes in proptest::collection::vec(0u64..10_000, 0..40)) {
        let names = ["app_x", "HAL_y", "json_z", "memcpy", "drv_a"];
        let symbols: Vec<ElfSymbol> =
            sizes.iter().enumerate().map(|(i, &s)| sym(names[i % names.len()], s)).collect();
        let b = categorize(&symbols, &parse_rules("app_*=Application\nHAL_*=HAL\njson_*=Serialization").unwrap());
        prop_assert_eq!(b.total(), sizes.iter().sum::<u64>());
    }
}

#[test]
fn truncated_prefixes_yield_errors() {
    let b = sample_fixture();
    for n in 0..64 {
        assert!(parse_elf_sections(&b[..n]).is_err());
    }
    assert_eq!(parse_elf_sections(&b[..3]), Err(ElfError::NotElf));
}
