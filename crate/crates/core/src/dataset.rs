//! Click records and their on-disk formats.
//!
//! A [`ClickDataset`] stores counts column-wise (a 10⁷-sequence run is a few
//! hundred MB as a list of structs). [`ClickDataset::records`] yields
//! borrowed [`SequenceRecord`] views.
//!
//! Formats (schema version [`SCHEMA_VERSION`]):
//!
//! - JSON lines: one object per sequence,
//!   `{"write_clicks":0,"read_clicks":1,"delay_us":10.0,"write_pulse_present":true,"read_time_tags":[3.2]}`;
//!   `read_time_tags` is omitted when tags were not recorded. Block metadata
//!   lives in a separate manifest ([`DatasetMetadata`]).
//! - CSV (counts only): header `write_clicks,read_clicks,delay_us,write_pulse_present`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("datasets cannot be interleaved: {0}")]
    Incompatible(String),
    #[error("too many sequence blocks (max {})", u16::MAX)]
    TooManyBlocks,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A run of sequences sharing delay and write-pulse setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceBlock {
    pub delay_us: f64,
    pub write_pulse_present: bool,
    pub n_sequences: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub read_pulse_us: f64,
    pub blocks: Vec<SequenceBlock>,
}

/// One experimental sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceRecord<'a> {
    pub write_clicks: u32,
    pub read_clicks: u32,
    pub read_time_tags: Option<&'a [f64]>,
    pub delay_us: f64,
    pub write_pulse_present: bool,
}

impl SequenceRecord<'_> {
    /// Read clicks before `window_us`, or all read clicks when `window_us` is
    /// `None`. Returns `None` if a window is requested but tags are missing.
    pub fn read_clicks_within(&self, window_us: Option<f64>) -> Option<u32> {
        match window_us {
            None => Some(self.read_clicks),
            Some(w) => self
                .read_time_tags
                .map(|tags| tags.partition_point(|&t| t < w) as u32),
        }
    }
}

/// Owned record, the unit of the JSON-lines format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub write_clicks: u32,
    pub read_clicks: u32,
    pub delay_us: f64,
    pub write_pulse_present: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub read_time_tags: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct TagColumn {
    offsets: Vec<usize>,
    times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClickDataset {
    write_clicks: Vec<u32>,
    read_clicks: Vec<u32>,
    block_index: Vec<u16>,
    tags: Option<TagColumn>,
    metadata: DatasetMetadata,
}

impl ClickDataset {
    pub fn len(&self) -> usize {
        self.write_clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.write_clicks.is_empty()
    }

    pub fn metadata(&self) -> &DatasetMetadata {
        &self.metadata
    }

    pub fn has_time_tags(&self) -> bool {
        self.tags.is_some()
    }

    pub fn read_pulse_us(&self) -> f64 {
        self.metadata.read_pulse_us
    }

    /// Distinct delays in order of first appearance in the metadata.
    pub fn delays(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for b in &self.metadata.blocks {
            if !out.contains(&b.delay_us) {
                out.push(b.delay_us);
            }
        }
        out
    }

    pub fn record(&self, i: usize) -> SequenceRecord<'_> {
        let block = &self.metadata.blocks[self.block_index[i] as usize];
        SequenceRecord {
            write_clicks: self.write_clicks[i],
            read_clicks: self.read_clicks[i],
            read_time_tags: self
                .tags
                .as_ref()
                .map(|t| &t.times[t.offsets[i]..t.offsets[i + 1]]),
            delay_us: block.delay_us,
            write_pulse_present: block.write_pulse_present,
        }
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = SequenceRecord<'_>> + '_ {
        (0..self.len()).map(move |i| self.record(i))
    }

    /// Round-robin interleaving of several datasets, as when sequences of
    /// different kinds alternate during acquisition.
    pub fn interleave(parts: Vec<ClickDataset>) -> Result<ClickDataset, DatasetError> {
        let first = parts.first().ok_or(DatasetError::Empty)?;
        let pulse = first.metadata.read_pulse_us;
        let tagged = first.has_time_tags();
        if parts
            .iter()
            .any(|p| p.metadata.read_pulse_us != pulse || p.has_time_tags() != tagged)
        {
            return Err(DatasetError::Incompatible(
                "read pulse length and time-tag presence must agree".into(),
            ));
        }
        let mut builder = DatasetBuilder::new(pulse, tagged);
        let mut block_maps = Vec::with_capacity(parts.len());
        for part in &parts {
            let map: Vec<u16> = part
                .metadata
                .blocks
                .iter()
                .map(|b| builder.add_block(b.clone()))
                .collect::<Result<_, _>>()?;
            block_maps.push(map);
        }
        let longest = parts.iter().map(ClickDataset::len).max().unwrap_or(0);
        for i in 0..longest {
            for (part, map) in parts.iter().zip(&block_maps) {
                if i < part.len() {
                    let rec = part.record(i);
                    builder.push_raw(
                        map[part.block_index[i] as usize],
                        rec.write_clicks,
                        rec.read_clicks,
                        rec.read_time_tags,
                    );
                }
            }
        }
        builder.finish()
    }

    /// Sequence counts per block are recomputed; blocks are keyed by
    /// `(delay, write_pulse_present)`.
    pub fn from_records<I>(records: I, read_pulse_us: f64) -> Result<ClickDataset, DatasetError>
    where
        I: IntoIterator<Item = RecordLine>,
    {
        let mut records = records.into_iter().peekable();
        let tagged = match records.peek() {
            None => return Err(DatasetError::Empty),
            Some(r) => r.read_time_tags.is_some(),
        };
        let mut builder = DatasetBuilder::new(read_pulse_us, tagged);
        for (index, rec) in records.enumerate() {
            if rec.read_time_tags.is_some() != tagged {
                return Err(DatasetError::InvalidRecord {
                    index,
                    message: "time tags present on some records only".into(),
                });
            }
            if let Some(tags) = &rec.read_time_tags {
                validate_tags(tags, rec.read_clicks, read_pulse_us)
                    .map_err(|message| DatasetError::InvalidRecord { index, message })?;
            }
            let block = builder.block_for(rec.delay_us, rec.write_pulse_present)?;
            builder.push_raw(
                block,
                rec.write_clicks,
                rec.read_clicks,
                rec.read_time_tags.as_deref(),
            );
        }
        builder.finish()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        for rec in self.records() {
            let line = RecordLine {
                write_clicks: rec.write_clicks,
                read_clicks: rec.read_clicks,
                delay_us: rec.delay_us,
                write_pulse_present: rec.write_pulse_present,
                read_time_tags: rec.read_time_tags.map(<[f64]>::to_vec),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads JSON lines; `metadata` restores block seeds and ordering when
    /// available (from the manifest written alongside the data).
    pub fn read_jsonl<R: BufRead>(
        input: R,
        read_pulse_us: f64,
    ) -> Result<ClickDataset, DatasetError> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        ClickDataset::from_records(records, read_pulse_us)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["write_clicks", "read_clicks", "delay_us", "write_pulse_present"])?;
        for rec in self.records() {
            w.write_record([
                rec.write_clicks.to_string(),
                rec.read_clicks.to_string(),
                rec.delay_us.to_string(),
                rec.write_pulse_present.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(
        input: R,
        read_pulse_us: f64,
    ) -> Result<ClickDataset, DatasetError> {
        #[derive(Deserialize)]
        struct Row {
            write_clicks: u32,
            read_clicks: u32,
            delay_us: f64,
            write_pulse_present: bool,
        }
        let mut reader = csv::Reader::from_reader(input);
        let mut records = Vec::new();
        for row in reader.deserialize() {
            let row: Row = row.map_err(|e| DatasetError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            records.push(RecordLine {
                write_clicks: row.write_clicks,
                read_clicks: row.read_clicks,
                delay_us: row.delay_us,
                write_pulse_present: row.write_pulse_present,
                read_time_tags: None,
            });
        }
        ClickDataset::from_records(records, read_pulse_us)
    }

    /// Replaces the block table with `metadata`, preserving record-block
    /// assignment by `(delay, write_pulse_present)`.
    pub fn with_metadata(mut self, metadata: DatasetMetadata) -> Result<Self, DatasetError> {
        let remap: Vec<u16> = self
            .metadata
            .blocks
            .iter()
            .map(|b| {
                metadata
                    .blocks
                    .iter()
                    .position(|m| {
                        m.delay_us == b.delay_us && m.write_pulse_present == b.write_pulse_present
                    })
                    .map(|p| p as u16)
                    .ok_or_else(|| {
                        DatasetError::Incompatible(format!(
                            "records at delay {} µs are missing from the manifest",
                            b.delay_us
                        ))
                    })
            })
            .collect::<Result<_, _>>()?;
        for idx in &mut self.block_index {
            *idx = remap[*idx as usize];
        }
        self.metadata = metadata;
        Ok(self)
    }
}

fn validate_tags(tags: &[f64], read_clicks: u32, pulse: f64) -> Result<(), String> {
    if tags.len() != read_clicks as usize {
        return Err(format!(
            "{} time tags for {} read clicks",
            tags.len(),
            read_clicks
        ));
    }
    if tags.windows(2).any(|w| w[1] < w[0]) {
        return Err("time tags not sorted".into());
    }
    if tags.iter().any(|&t| !(0.0..=pulse).contains(&t)) {
        return Err(format!("time tag outside the {pulse} µs read pulse"));
    }
    Ok(())
}

/// Incremental construction used by the simulator and the readers.
#[derive(Debug)]
pub(crate) struct DatasetBuilder {
    write_clicks: Vec<u32>,
    read_clicks: Vec<u32>,
    block_index: Vec<u16>,
    tags: Option<TagColumn>,
    read_pulse_us: f64,
    blocks: Vec<SequenceBlock>,
    counts: Vec<u64>,
}

impl DatasetBuilder {
    pub(crate) fn new(read_pulse_us: f64, tagged: bool) -> Self {
        Self {
            write_clicks: Vec::new(),
            read_clicks: Vec::new(),
            block_index: Vec::new(),
            tags: tagged.then(|| TagColumn {
                offsets: vec![0],
                times: Vec::new(),
            }),
            read_pulse_us,
            blocks: Vec::new(),
            counts: Vec::new(),
        }
    }

    pub(crate) fn reserve(&mut self, n: usize) {
        self.write_clicks.reserve(n);
        self.read_clicks.reserve(n);
        self.block_index.reserve(n);
    }

    pub(crate) fn add_block(&mut self, block: SequenceBlock) -> Result<u16, DatasetError> {
        let idx = u16::try_from(self.blocks.len()).map_err(|_| DatasetError::TooManyBlocks)?;
        self.blocks.push(block);
        self.counts.push(0);
        Ok(idx)
    }

    fn block_for(&mut self, delay_us: f64, write_pulse_present: bool) -> Result<u16, DatasetError> {
        if let Some(p) = self
            .blocks
            .iter()
            .position(|b| b.delay_us == delay_us && b.write_pulse_present == write_pulse_present)
        {
            return Ok(p as u16);
        }
        self.add_block(SequenceBlock {
            delay_us,
            write_pulse_present,
            n_sequences: 0,
            seed: None,
        })
    }

    pub(crate) fn push_raw(&mut self, block: u16, w: u32, r: u32, tags: Option<&[f64]>) {
        self.write_clicks.push(w);
        self.read_clicks.push(r);
        self.block_index.push(block);
        self.counts[block as usize] += 1;
        if let Some(col) = &mut self.tags {
            if let Some(t) = tags {
                col.times.extend_from_slice(t);
            }
            col.offsets.push(col.times.len());
        }
    }

    pub(crate) fn finish(mut self) -> Result<ClickDataset, DatasetError> {
        if self.write_clicks.is_empty() {
            return Err(DatasetError::Empty);
        }
        for (b, n) in self.blocks.iter_mut().zip(&self.counts) {
            b.n_sequences = *n;
        }
        Ok(ClickDataset {
            write_clicks: self.write_clicks,
            read_clicks: self.read_clicks,
            block_index: self.block_index,
            tags: self.tags,
            metadata: DatasetMetadata {
                schema_version: SCHEMA_VERSION,
                read_pulse_us: self.read_pulse_us,
                blocks: self.blocks,
            },
        })
    }
}
