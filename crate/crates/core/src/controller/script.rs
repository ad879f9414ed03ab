use thiserror::Error;

use crate::data::caps::CMD_BUF_CAP;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptStep {
    /// JSON command sent verbatim.
    Command(String),
    /// Pause for this many periods of the fastest enabled sensor.
    Wait(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script line {line}: {reason}")]
pub struct ScriptError {
    pub line: usize,
    pub reason: String,
}

/// A command script: one JSON command per line, `wait <n>` directives,
/// blank lines and `#` comments.
///
/// ```text
/// {"set_property":{"sensor":"acc","enable":true,"odr":7680}}
/// {"start_log":{}}
/// wait 10
/// {"stop_log":{}}
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub steps: Vec<ScriptStep>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Script, ScriptError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |reason: String| ScriptError { line: i + 1, reason };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("wait") {
                let n = rest.trim().parse::<u32>().map_err(|_| err(format!("bad wait count `{}`", rest.trim())))?;
                steps.push(ScriptStep::Wait(n));
            } else if line.starts_with('{') {
                if line.len() > CMD_BUF_CAP {
                    return Err(err(format!("command longer than {CMD_BUF_CAP} bytes")));
                }
                steps.push(ScriptStep::Command(line.to_owned()));
            } else {
                return Err(err(format!("expected a JSON command or `wait <n>`, got `{line}`")));
            }
        }
        Ok(Script { steps })
    }

    pub fn commands(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(|s| match s {
            ScriptStep::Command(c) => Some(c.as_str()),
            ScriptStep::Wait(_) => None,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            match s {
                ScriptStep::Command(c) => out.push_str(c),
                ScriptStep::Wait(n) => out.push_str(&format!("wait {n}")),
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_steps() {
        let s = Script::parse("# setup\n{\"start_log\":{}}\n\n  wait 10 \n{\"stop_log\":{}}\n").unwrap();
        assert_eq!(
            s.steps,
            [
                ScriptStep::Command("{\"start_log\":{}}".into()),
                ScriptStep::Wait(10),
                ScriptStep::Command("{\"stop_log\":{}}".into()),
            ]
        );
        assert_eq!(Script::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn reports_line_numbers() {
        let e = Script::parse("{\"a\":{}}\nwait x\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(Script::parse("start\n").unwrap_err().line, 1);
        assert!(Script::parse("").unwrap().steps.is_empty());
    }
}
