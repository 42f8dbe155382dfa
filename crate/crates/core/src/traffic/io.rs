//! CSV formats.
//!
//! Traces: header `ts,src,dst,sport,dport,proto`, one packet per row.
//! Flow records (snapshots and ground truth): `src,dst,sport,dport,proto,count`.
//! Addresses are dotted quads; everything else is decimal.

use std::fs::File;
use std::io::{self, Read, Write};
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use super::TraceEvent;
use crate::error::{Error, Result};
use crate::key::{FlowKey, FlowRecord};

pub const TRACE_HEADER: [&str; 6] = ["ts", "src", "dst", "sport", "dport", "proto"];
pub const RECORD_HEADER: [&str; 6] = ["src", "dst", "sport", "dport", "proto", "count"];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })
}

struct Located<'a> {
    source: &'a str,
    line: u64,
}

impl Located<'_> {
    fn field<T: FromStr>(&self, record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
        let raw = record.get(idx).ok_or_else(|| self.error(Some(name), "missing field".into()))?;
        raw.trim()
            .parse()
            .map_err(|_| self.error(Some(name), format!("invalid {name} `{raw}`")))
    }

    fn key(&self, record: &csv::StringRecord, offset: usize) -> Result<FlowKey> {
        let src: Ipv4Addr = self.field(record, offset, "src")?;
        let dst: Ipv4Addr = self.field(record, offset + 1, "dst")?;
        Ok(FlowKey::new(
            src.into(),
            dst.into(),
            self.field(record, offset + 2, "sport")?,
            self.field(record, offset + 3, "dport")?,
            self.field(record, offset + 4, "proto")?,
        ))
    }

    fn error(&self, field: Option<&str>, message: String) -> Error {
        Error::Parse {
            source_name: self.source.to_string(),
            line: self.line,
            field: field.map(str::to_string),
            message,
        }
    }
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, source: &str, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            source_name: source.to_string(),
            line: 1,
            field: None,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader)
}

/// Streams [`TraceEvent`]s from a CSV source in file order.
pub struct TraceReader<R: Read> {
    rdr: csv::Reader<R>,
    source: String,
    record: csv::StringRecord,
}

impl<R: Read> TraceReader<R> {
    pub fn new(reader: R, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        let mut rdr = csv_reader(reader);
        check_header(&mut rdr, &source, &TRACE_HEADER)?;
        Ok(TraceReader {
            rdr,
            source,
            record: csv::StringRecord::new(),
        })
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<TraceEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.rdr.read_record(&mut self.record) {
            Ok(false) => None,
            Err(e) => Some(Err(e.into())),
            Ok(true) => {
                let at = Located {
                    source: &self.source,
                    line: self.record.position().map_or(0, |p| p.line()),
                };
                if self.record.len() != TRACE_HEADER.len() {
                    return Some(Err(at.error(
                        None,
                        format!("expected {} fields, found {}", TRACE_HEADER.len(), self.record.len()),
                    )));
                }
                Some((|| {
                    Ok(TraceEvent {
                        timestamp: at.field(&self.record, 0, "ts")?,
                        key: at.key(&self.record, 1)?,
                    })
                })())
            }
        }
    }
}

pub fn parse_trace(path: impl AsRef<Path>) -> Result<TraceReader<File>> {
    let path = path.as_ref();
    TraceReader::new(open(path)?, path.display().to_string())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceEvent>> {
    parse_trace(path)?.collect()
}

pub fn write_trace<W: Write>(writer: W, events: &[TraceEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for e in events {
        let k = &e.key;
        w.write_record([
            e.timestamp.to_string(),
            k.src_ip().to_string(),
            k.dst_ip().to_string(),
            k.src_port.to_string(),
            k.dst_port.to_string(),
            k.protocol.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(writer: W, records: &[FlowRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        let k = &r.key;
        w.write_record([
            k.src_ip().to_string(),
            k.dst_ip().to_string(),
            k.src_port.to_string(),
            k.dst_port.to_string(),
            k.protocol.to_string(),
            r.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R, source: &str) -> Result<Vec<FlowRecord>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &RECORD_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let at = Located {
            source,
            line: rec.position().map_or(0, |p| p.line()),
        };
        out.push(FlowRecord::new(at.key(&rec, 0)?, at.field(&rec, 5, "count")?));
    }
    Ok(out)
}

/// Writes to `path`, or stdout for `-`.
pub fn create_output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(io::BufWriter::new(File::create(path)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{generate_trace, Preset, SyntheticSpec};
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Vec<TraceEvent>> {
        TraceReader::new(text.as_bytes(), "mem")?.collect()
    }

    #[test]
    fn empty_body() {
        assert!(parse("ts,src,dst,sport,dport,proto\n").unwrap().is_empty());
    }

    #[test]
    fn one_row() {
        let ev = parse("ts,src,dst,sport,dport,proto\n17,10.0.0.1,192.168.1.2,1234,80,6\n").unwrap();
        assert_eq!(
            ev,
            vec![TraceEvent {
                timestamp: 17,
                key: FlowKey::new(0x0a000001, 0xc0a80102, 1234, 80, 6)
            }]
        );
    }

    #[test]
    fn port_out_of_range_names_line_and_field() {
        let err = parse("ts,src,dst,sport,dport,proto\n1,10.0.0.1,10.0.0.2,1,2,6\n2,10.0.0.1,10.0.0.2,70000,2,6\n")
            .unwrap_err();
        match &err {
            Error::Parse { line, field, .. } => {
                assert_eq!(*line, 3);
                assert_eq!(field.as_deref(), Some("sport"));
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("mem:3"));
    }

    #[test]
    fn bad_header_and_missing_file() {
        assert!(matches!(parse("a,b,c\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_trace("/nonexistent/trace.csv"), Err(Error::Open { .. })));
        assert!(matches!(
            parse("ts,src,dst,sport,dport,proto\n1,10.0.0.1,10.0.0.2,1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("ts,src,dst,sport,dport,proto\n1,10.0.0.300,10.0.0.2,1,2,3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn generated_trace_roundtrips() {
        let (events, truth) = generate_trace(&SyntheticSpec::preset(Preset::Backbone, 300, 5)).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &events).unwrap();
        let back: Vec<_> = TraceReader::new(buf.as_slice(), "mem").unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(back, events);

        let mut buf = Vec::new();
        write_records(&mut buf, &truth.records()).unwrap();
        assert!(buf.starts_with(b"src,dst,sport,dport,proto,count\n"));
        assert_eq!(read_records(buf.as_slice(), "mem").unwrap(), truth.records());
    }

    proptest! {
        #[test]
        fn record_csv_roundtrip(rows in proptest::collection::vec((any::<u32>(), any::<u32>(), any::<u16>(), any::<u16>(), any::<u8>(), any::<u32>()), 0..50)) {
            let records: Vec<_> = rows.iter().map(|&(a, b, c, d, e, n)| FlowRecord::new(FlowKey::new(a, b, c, d, e), n)).collect();
            let mut buf = Vec::new();
            write_records(&mut buf, &records).unwrap();
            prop_assert_eq!(read_records(buf.as_slice(), "mem").unwrap(), records);
        }
    }
}
