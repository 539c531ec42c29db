//! Pass/fail bookkeeping for the acceptance binary.

use std::time::{Duration, Instant};

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record and print one criterion line.
    pub fn check(&mut self, id: &str, what: &str, pass: bool, detail: impl AsRef<str>) {
        let line = format!(
            "{} {id:<4} {what}: {}",
            if pass { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
        println!("{line}");
        self.lines.push((line, pass));
    }

    /// Informational line that does not count towards the verdict.
    pub fn info(&self, id: &str, what: &str, detail: impl AsRef<str>) {
        println!("INFO {id:<4} {what}: {}", detail.as_ref());
    }

    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().filter(|(_, p)| !p).map(|(l, _)| l.as_str())
    }

    pub fn passed(&self) -> usize {
        self.lines.iter().filter(|(_, p)| *p).count()
    }

    pub fn total(&self) -> usize {
        self.lines.len()
    }

    /// Print the summary and exit non-zero if anything failed.
    pub fn finish(self) -> ! {
        let failed: Vec<&str> = self.failures().collect();
        println!("\nacceptance: {} of {} criteria passed", self.passed(), self.total());
        if failed.is_empty() {
            std::process::exit(0);
        }
        for line in &failed {
            eprintln!("  {line}");
        }
        std::process::exit(1);
    }
}

/// Run `f` and return its value with the wall-clock time it took.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}
