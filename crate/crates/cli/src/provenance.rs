use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Ordered `key=value` record written next to every output.
#[derive(Debug, Clone)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        let mut p = Self { entries: Vec::new() };
        p.set("command", command);
        p.set("vos_version", env!("CARGO_PKG_VERSION"));
        p.set("core_version", vos_core::VERSION);
        p.set("argv", std::env::args().collect::<Vec<_>>().join(" "));
        p
    }

    /// Adds or replaces `key`. Newlines in values are escaped.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let v = value.to_string().replace('\n', "\\n");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.to_owned(), v)),
        }
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// `<output>.provenance.txt`
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".provenance.txt");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_replaces_and_keeps_order() {
        let mut p = Provenance::new("x");
        p.set("a", 1);
        p.set("b", "two\nlines");
        p.set("a", 3);
        let text = p.render();
        let keys: Vec<_> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        assert_eq!(&keys[..], &["command", "vos_version", "core_version", "argv", "a", "b"]);
        assert!(text.contains("a=3\n"));
        assert!(text.contains("b=two\\nlines\n"));
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/den.png")), PathBuf::from("out/den.png.provenance.txt"));
    }
}
