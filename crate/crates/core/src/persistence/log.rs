use crate::error::{Error, Result};
use crate::evolution::{ConvergenceLog, LogRecord};

/// CSV with a header row: `generation,best_fitness,median_fitness,diversity_cv,evaluations,migration`.
pub fn log_to_csv(log: &ConvergenceLog) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in &log.records {
        writer.serialize(record).expect("writing to memory");
    }
    if log.records.is_empty() {
        writer
            .write_record(["generation", "best_fitness", "median_fitness", "diversity_cv", "evaluations", "migration"])
            .expect("writing to memory");
    }
    let bytes = writer.into_inner().expect("flushing to memory");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

pub fn parse_log(text: &str) -> Result<ConvergenceLog> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut records = Vec::new();
    for row in reader.deserialize::<LogRecord>() {
        records.push(row.map_err(csv_error)?);
    }
    Ok(ConvergenceLog { records })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let reason = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Parse { line, column: 0, reason }
}
