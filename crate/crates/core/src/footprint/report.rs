use std::fmt::Write as _;

use super::elf::SectionStats;

/// ROM and RAM accounting for one firmware image, in bytes.
///
/// Stack and heap are inputs: the stack is a link-time reservation and the
/// heap a measured runtime peak, neither of which is visible in the image.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryReport {
    pub text: u64,
    pub rodata: u64,
    pub total_rom: u64,
    pub stack: u64,
    pub static_ram: u64,
    pub heap: u64,
    pub total_ram: u64,
    /// A total quoted by some other source, kept next to the computed one
    /// so disagreements stay visible.
    pub stated_total_ram: Option<u64>,
}

impl MemoryReport {
    pub fn from_parts(text: u64, rodata: u64, stack: u64, static_ram: u64, heap: u64) -> Self {
        MemoryReport {
            text,
            rodata,
            total_rom: text + rodata,
            stack,
            static_ram,
            heap,
            total_ram: stack + static_ram + heap,
            stated_total_ram: None,
        }
    }

    pub fn with_stated_total_ram(mut self, total: u64) -> Self {
        self.stated_total_ram = Some(total);
        self
    }

    /// Computed total minus the stated one, if a stated total exists.
    pub fn stated_ram_discrepancy(&self) -> Option<i64> {
        self.stated_total_ram.map(|s| self.total_ram as i64 - s as i64)
    }

    fn rows(&self) -> [(&'static str, u64); 7] {
        [
            (".text", self.text),
            (".rodata", self.rodata),
            ("Total ROM", self.total_rom),
            ("Stack RAM", self.stack),
            ("Static RAM", self.static_ram),
            ("Heap RAM", self.heap),
            ("Total RAM", self.total_ram),
        ]
    }
}

fn in_group(name: &str, group: &str) -> bool {
    name == group || name.strip_prefix(group).is_some_and(|rest| rest.starts_with('.'))
}

/// Sums section sizes by group: `.text`, `.rodata`, and `.data`/`.bss` as
/// static RAM, including `name.suffix` input sections.
pub fn build_memory_report(sections: &[SectionStats], stack_bytes: u64, heap_bytes: u64) -> MemoryReport {
    let sum = |groups: &[&str]| -> u64 {
        sections.iter().filter(|s| groups.iter().any(|g| in_group(&s.name, g))).map(|s| s.size).sum()
    };
    let text = sum(&[".text"]);
    let rodata = sum(&[".rodata"]);
    let static_ram = sum(&[".data", ".bss"]);
    MemoryReport::from_parts(text, rodata, stack_bytes, static_ram, heap_bytes)
}

/// Side-by-side table of two reports with a signed delta column (b - a).
pub fn render_comparison(a_name: &str, a: &MemoryReport, b_name: &str, b: &MemoryReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>10} {:>10} {:>10}", "Metric", a_name, b_name, "Delta");
    for ((label, x), (_, y)) in a.rows().into_iter().zip(b.rows()) {
        let _ = writeln!(out, "{label:<12} {x:>10} {y:>10} {:>10}", y as i64 - x as i64);
    }
    for (name, r) in [(a_name, a), (b_name, b)] {
        if let (Some(s), Some(d)) = (r.stated_total_ram, r.stated_ram_discrepancy().filter(|&d| d != 0)) {
            let _ = writeln!(out, "note: {name} stated total RAM {s} differs from computed {} by {d}", r.total_ram);
        }
    }
    out
}

/// `metric,<a>,<b>,delta` rows, plus stated totals when present.
pub fn comparison_csv(a_name: &str, a: &MemoryReport, b_name: &str, b: &MemoryReport) -> String {
    let mut out = format!("metric,{a_name},{b_name},delta\n");
    for ((label, x), (_, y)) in a.rows().into_iter().zip(b.rows()) {
        let _ = writeln!(out, "{label},{x},{y},{}", y as i64 - x as i64);
    }
    let stated = |r: &MemoryReport| r.stated_total_ram.map(|v| v.to_string()).unwrap_or_default();
    let _ = writeln!(out, "Stated total RAM,{},{},", stated(a), stated(b));
    out
}
