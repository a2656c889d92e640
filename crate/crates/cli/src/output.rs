//! Result rows and their CSV form.

use std::io::{Read, Write};

use excode_core::MetricsReport;
use serde::{Deserialize, Serialize};

/// One CSV row per run. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scheme: String,
    pub seed: u64,
    pub flows: usize,
    pub offered_kbps: f64,
    pub throughput_kbps: f64,
    pub encoded_frac: f64,
    pub pdr: f64,
    pub mean_delay_s: Option<f64>,
    pub total_tx: u64,
    pub encodes: u64,
    pub decode_failures: u64,
}

pub const COLUMNS: [&str; 11] = [
    "scheme",
    "seed",
    "flows",
    "offered_kbps",
    "throughput_kbps",
    "encoded_frac",
    "pdr",
    "mean_delay_s",
    "total_tx",
    "encodes",
    "decode_failures",
];

impl From<&MetricsReport> for Row {
    fn from(m: &MetricsReport) -> Self {
        Row {
            scheme: m.scheme.name().to_string(),
            seed: m.seed,
            flows: m.flows,
            offered_kbps: m.offered_kbps,
            throughput_kbps: m.throughput_kbps,
            encoded_frac: m.encoded_fraction,
            pdr: m.delivery_ratio,
            mean_delay_s: m.mean_delay_s,
            total_tx: m.total_tx,
            encodes: m.encode_count,
            decode_failures: m.decode_failures,
        }
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<Row>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(delay: Option<f64>) -> Row {
        Row {
            scheme: "excode".into(),
            seed: 3,
            flows: 2,
            offered_kbps: 1638.4,
            throughput_kbps: 1500.25,
            encoded_frac: 0.125,
            pdr: 0.75,
            mean_delay_s: delay,
            total_tx: 10,
            encodes: 2,
            decode_failures: 0,
        }
    }

    #[test]
    fn header_and_empty_delay() {
        let mut buf = Vec::new();
        write_csv(&[row(None), row(Some(0.5))], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "excode,3,2,1638.4,1500.25,0.125,0.75,,10,2,0");
        assert_eq!(lines.next().unwrap(), "excode,3,2,1638.4,1500.25,0.125,0.75,0.5,10,2,0");
        assert_eq!(read_csv(&buf[..]).unwrap(), vec![row(None), row(Some(0.5))]);
    }

    #[test]
    fn no_rows_still_has_a_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), COLUMNS.join(","));
    }
}
