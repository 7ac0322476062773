use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;

use super::{run_replication, Clock, LoopConfig, RunRecord};
use crate::llm::ChatBackend;

/// Appends records to a JSON-lines file; safe to share between threads.
#[derive(Debug)]
pub struct RecordSink {
    writer: Mutex<BufWriter<File>>,
}

impl RecordSink {
    pub fn append(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordSink {
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    /// Writes one line and flushes, so a crash loses at most the record in
    /// flight.
    pub fn write(&self, record: &RunRecord) -> io::Result<()> {
        let mut writer = self.writer.lock().expect("sink lock");
        writeln!(writer, "{}", record.to_json())?;
        writer.flush()
    }
}

/// Reads every record of a JSON-lines file, skipping blank lines.
pub fn read_records(path: &Path) -> io::Result<Vec<RunRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
        records.push(record);
    }
    Ok(records)
}

/// Runs `replications` replications of every config in parallel. Each
/// replication gets its own backend from `backend_for`; records come back in
/// config-major order and are also written to `sink` as they finish.
///
/// Configs must already be valid.
pub fn run_batch<F>(
    configs: &[LoopConfig],
    replications: usize,
    backend_for: F,
    sink: Option<&RecordSink>,
    clock: &dyn Clock,
) -> Vec<RunRecord>
where
    F: Fn(&LoopConfig, usize) -> Box<dyn ChatBackend> + Sync,
{
    let jobs: Vec<(&LoopConfig, usize)> = configs
        .iter()
        .flat_map(|c| (0..replications).map(move |r| (c, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(config, replication)| {
            let backend = backend_for(config, replication);
            let record = run_replication(config, backend.as_ref(), replication, clock)
                .expect("batch configs are validated up front");
            if let Some(sink) = sink {
                if let Err(e) = sink.write(&record) {
                    log::error!("could not persist record: {e}");
                }
            }
            record
        })
        .collect()
}
