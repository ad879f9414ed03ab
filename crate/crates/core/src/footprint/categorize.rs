use std::fmt;
use std::str::FromStr;

use glob::Pattern;
use thiserror::Error;

use super::elf::ElfSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Application,
    Drivers,
    Serialization,
    System,
    Hal,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Application, Category::Drivers, Category::Serialization, Category::System, Category::Hal];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Application => "Application",
            Category::Drivers => "Drivers",
            Category::Serialization => "Serialization",
            Category::System => "System",
            Category::Hal => "HAL",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| RuleError { line: 0, reason: format!("unknown category `{s}`") })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rules line {line}: {reason}")]
pub struct RuleError {
    pub line: usize,
    pub reason: String,
}

/// A glob over symbol names (`*`, `?`, `[..]`) and the category it assigns.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryRule {
    pub pattern: Pattern,
    pub category: Category,
}

impl CategoryRule {
    pub fn new(pattern: &str, category: Category) -> Result<Self, RuleError> {
        let pattern = Pattern::new(pattern).map_err(|e| RuleError { line: 0, reason: e.to_string() })?;
        Ok(CategoryRule { pattern, category })
    }
}

/// Parses ordered `pattern=category` lines; blank lines and `#` comments
/// are skipped. The last `=` separates pattern and category.
pub fn parse_rules(text: &str) -> Result<Vec<CategoryRule>, RuleError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at_line = |mut e: RuleError| {
            e.line = i + 1;
            e
        };
        let (pat, cat) = line
            .rsplit_once('=')
            .ok_or_else(|| RuleError { line: i + 1, reason: "expected `pattern=category`".into() })?;
        let category = cat.trim().parse().map_err(at_line)?;
        rules.push(CategoryRule::new(pat.trim(), category).map_err(at_line)?);
    }
    Ok(rules)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryBreakdown {
    /// Bytes per category, indexed like [`Category::ALL`].
    pub bytes: [u64; 5],
    pub symbols: [usize; 5],
    pub uncategorized: u64,
    pub uncategorized_symbols: usize,
}

impl CategoryBreakdown {
    pub fn get(&self, c: Category) -> u64 {
        self.bytes[c as usize]
    }

    pub fn total(&self) -> u64 {
        self.bytes.iter().sum::<u64>() + self.uncategorized
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,bytes,symbols\n");
        for c in Category::ALL {
            out.push_str(&format!("{c},{},{}\n", self.get(c), self.symbols[c as usize]));
        }
        out.push_str(&format!("Uncategorized,{},{}\n", self.uncategorized, self.uncategorized_symbols));
        out
    }
}

/// First matching rule wins; unmatched symbols go to the uncategorized
/// bucket.
pub fn categorize(symbols: &[ElfSymbol], rules: &[CategoryRule]) -> CategoryBreakdown {
    let mut b = CategoryBreakdown::default();
    for s in symbols {
        match rules.iter().find(|r| r.pattern.matches(&s.name)) {
            Some(r) => {
                b.bytes[r.category as usize] += s.size;
                b.symbols[r.category as usize] += 1;
            }
            None => {
                b.uncategorized += s.size;
                b.uncategorized_symbols += 1;
            }
        }
    }
    b
}
