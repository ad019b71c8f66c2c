use std::io::Write;
use std::path::Path;

/// A CSV table with optional leading comments and the trailing metadata line.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { comments: Vec::new(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, seed: u64, config_hash: &str) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.comments {
            writeln!(out, "# {c}").expect("write to memory");
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header).expect("write to memory");
            for r in &self.rows {
                w.write_record(r).expect("write to memory");
            }
            w.flush().expect("write to memory");
        }
        writeln!(out, "# version={} seed={seed} config_hash={config_hash}", env!("CARGO_PKG_VERSION")).expect("write to memory");
        out
    }
}

pub fn write(bytes: &[u8], path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, bytes)
        }
        None => std::io::stdout().write_all(bytes),
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}
