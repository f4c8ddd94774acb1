//! CSV ingestion of external multichannel series and the bundled surrogate.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{generate_noise, Distribution, NoiseKind, NoiseSpec};
use crate::spectral::SignalSeries;

/// Path that selects the surrogate shipped inside the library.
pub const BUNDLED_SURROGATE_PATH: &str = "bundled:surrogate";

/// Random-walk (1/f²) surrogate with channels Fz, Cz, Pz.
pub const BUNDLED_SURROGATE: &str = include_str!("../../data/surrogate_1f2.csv");

pub const SURROGATE_CHANNELS: [&str; 3] = ["Fz", "Cz", "Pz"];
pub const SURROGATE_ROWS: usize = 20_480;
pub const SURROGATE_SEED: u64 = 1;
pub const SURROGATE_DECIMALS: usize = 4;

/// One column of a CSV file with a header row of channel names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSeriesFile {
    pub path: PathBuf,
    pub channel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,
}

/// A mean-removed channel with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedSeries {
    pub series: SignalSeries,
    pub channel: String,
    pub sample_rate_hz: Option<f64>,
}

/// Reads the selected channel from disk, or from the bundled surrogate.
pub fn ingest_series(file: &ExternalSeriesFile) -> Result<IngestedSeries> {
    if file.path == Path::new(BUNDLED_SURROGATE_PATH) {
        return read_channel(BUNDLED_SURROGATE.as_bytes(), file);
    }
    read_channel(std::fs::File::open(&file.path)?, file)
}

/// Parses CSV text from any reader. Rows and columns in errors are 1-based
/// with the header as row 1.
pub fn read_channel<R: Read>(reader: R, file: &ExternalSeriesFile) -> Result<IngestedSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = headers.iter().position(|h| h == file.channel).ok_or_else(|| Error::ChannelNotFound(file.channel.clone()))?;
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse { row, col: 0, msg: e.to_string() })?;
        let field = record.get(col).ok_or_else(|| Error::Parse { row, col: col + 1, msg: "missing field".into() })?;
        let v: f64 = field.parse().map_err(|_| Error::Parse { row, col: col + 1, msg: format!("not a number: {field:?}") })?;
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { row, col: col + 1 });
        }
        values.push(v);
    }
    if values.len() < 2 {
        return Err(Error::Parse { row: values.len() + 2, col: col + 1, msg: "need at least two samples".into() });
    }
    if let Some(fs) = file.sample_rate_hz {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Config(format!("sample_rate_hz {fs} must be positive")));
        }
    }
    let series = SignalSeries::new(values, None)?.centered();
    Ok(IngestedSeries { series, channel: file.channel.clone(), sample_rate_hz: file.sample_rate_hz })
}

/// Writes channels as CSV columns. `decimals = None` writes the shortest
/// representation that parses back to the same f64.
pub fn write_series_csv<W: Write>(out: W, channels: &[(&str, &SignalSeries)], decimals: Option<usize>) -> Result<()> {
    let rows = channels.first().map_or(0, |(_, s)| s.len());
    if let Some((_, s)) = channels.iter().find(|(_, s)| s.len() != rows) {
        return Err(Error::LengthMismatch { expected: rows, found: s.len() });
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(channels.iter().map(|(name, _)| *name))?;
    for i in 0..rows {
        w.write_record(channels.iter().map(|(_, s)| match decimals {
            Some(d) => format!("{:.*}", d, s.values()[i]),
            None => s.values()[i].to_string(),
        }))?;
    }
    w.flush()?;
    Ok(())
}

/// Random-walk channels with seeds `seed`, `seed + 1`, ..., one per name.
pub fn surrogate_channels(names: &[&str], rows: usize, seed: u64) -> Result<Vec<SignalSeries>> {
    (0..names.len() as u64)
        .map(|i| generate_noise(&NoiseSpec::new(NoiseKind::Rw { driver: Distribution::Uniform }, seed + i), rows))
        .collect()
}

/// CSV text of the bundled surrogate, regenerated from its recipe.
pub fn surrogate_csv() -> Result<String> {
    let series = surrogate_channels(&SURROGATE_CHANNELS, SURROGATE_ROWS, SURROGATE_SEED)?;
    let channels: Vec<(&str, &SignalSeries)> = SURROGATE_CHANNELS.iter().copied().zip(&series).collect();
    let mut buf = Vec::new();
    write_series_csv(&mut buf, &channels, Some(SURROGATE_DECIMALS))?;
    Ok(String::from_utf8(buf).expect("ASCII CSV"))
}
