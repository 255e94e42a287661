//! Report files. Every file carries the config hash and seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Shortest round-trip text for a float.
pub fn num(x: f64) -> String {
    ryu::Buffer::new().format(x).to_owned()
}

pub struct Reports {
    dir: PathBuf,
    hash: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Reports {
    pub fn new(config: &RunConfig) -> Self {
        Self { dir: config.output.directory.clone(), hash: config.hash(), seed: config.seed, written: Vec::new() }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn create(&mut self, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok((path, BufWriter::new(file)))
    }

    fn finish(&mut self, path: PathBuf, mut w: impl Write) -> CliResult<()> {
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with a leading `# config_sha256=… seed=…` comment line.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let (path, mut file) = self.create(name)?;
        let io = |e: std::io::Error| CliError::io(&path, e);
        writeln!(file, "# config_sha256={} seed={}", self.hash, self.seed).map_err(io)?;
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| CliError::io(&path, e.into());
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let file = w.into_inner().map_err(|e| CliError::io(&path, e.into_error()))?;
        self.finish(path, file)
    }

    /// Pretty JSON; `body` must serialize to an object, which gains
    /// `config_sha256` and `seed` keys.
    pub fn json(&mut self, name: &str, body: &impl Serialize) -> CliResult<()> {
        let mut value = serde_json::to_value(body).expect("report serializes");
        if let Some(map) = value.as_object_mut() {
            map.insert("config_sha256".into(), self.hash.clone().into());
            map.insert("seed".into(), self.seed.into());
        }
        let (path, mut file) = self.create(name)?;
        serde_json::to_writer_pretty(&mut file, &value).map_err(|e| CliError::io(&path, e.into()))?;
        writeln!(file).map_err(|e| CliError::io(&path, e))?;
        self.finish(path, file)
    }

    /// Writes `body` (an SVG document) after an identifying comment.
    pub fn svg(&mut self, name: &str, body: &str) -> CliResult<()> {
        let (path, mut file) = self.create(name)?;
        let header = format!("<!-- config_sha256={} seed={} -->\n", self.hash, self.seed);
        file.write_all(header.as_bytes()).and_then(|_| file.write_all(body.as_bytes())).map_err(|e| CliError::io(&path, e))?;
        self.finish(path, file)
    }
}

/// One curve of an SVG chart, as `(x, y)` points in data units.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Static line chart on `[0, x_max] × [0, 1]`.
pub fn line_chart(title: &str, x_label: &str, x_max: f64, series: &[Series]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 60.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + pw * (x / x_max).clamp(0.0, 1.0);
    let sy = |y: f64| top + ph * (1.0 - y.clamp(0.0, 1.0));
    let mut s = String::new();
    s += &format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n");
    s += &format!("<text x=\"{}\" y=\"24\" text-anchor=\"middle\">{title}</text>\n", left + pw / 2.0);
    s += &format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n"
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        s += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n", sx(f * x_max), h - bottom + 16.0, num(f * x_max));
        s += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n", left - 6.0, sy(f) + 4.0, num(f));
    }
    s += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n", left + pw / 2.0, h - 12.0);
    for (i, series) in series.iter().enumerate() {
        let colour = if series.dashed { "#000" } else { PALETTE[i % PALETTE.len()] };
        let pts: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if series.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        s += &format!("<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>\n", pts.join(" "));
        let ly = top + 14.0 + 18.0 * i as f64;
        s += &format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash}/>\n",
            w - right + 10.0,
            w - right + 30.0
        );
        s += &format!("<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n", w - right + 36.0, ly + 4.0, series.label);
    }
    s += "</svg>\n";
    s
}
