//! Dataset files: a `K H seed mode` header line, then one CSV row per tuple
//! `tau,h,s,a,b,r,s_next[,corrupted]`. Indices are 0-based.

use std::io::{BufRead, Write};

use super::{DataError, Dataset, Observations, SliceMode, Transition};

/// Writes the full dataset, including the corruption ledger column.
pub fn write_dataset<W: Write>(out: W, d: &Dataset) -> Result<(), DataError> {
    write_rows(out, d.observations(), Some(d.corrupted_mask()))
}

/// Writes the learner-facing view (no corruption column).
pub fn write_learner_view<W: Write>(out: W, obs: &Observations) -> Result<(), DataError> {
    write_rows(out, obs, None)
}

fn write_rows<W: Write>(
    mut out: W,
    obs: &Observations,
    mask: Option<&[bool]>,
) -> Result<(), DataError> {
    writeln!(out, "{} {} {} {}", obs.k, obs.horizon, obs.seed, obs.mode.as_str())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (i, t) in obs.tuples.iter().enumerate() {
        let mut record = vec![
            t.tau.to_string(),
            t.h.to_string(),
            t.s.to_string(),
            t.a.to_string(),
            t.b.to_string(),
            t.r.to_string(),
            t.s_next.to_string(),
        ];
        if let Some(m) = mask {
            record.push(if m[i] { "1" } else { "0" }.to_string());
        }
        w.write_record(&record).map_err(csv_err(i + 2))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads either file flavor; a learner-facing file yields an all-clean ledger.
pub fn read_dataset<R: BufRead>(mut input: R) -> Result<Dataset, DataError> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_err = |msg: String| DataError::Parse { line: 1, msg };
    if fields.len() != 4 {
        return Err(parse_err(format!("expected `K H seed mode`, got '{}'", header.trim())));
    }
    let k: usize = fields[0].parse().map_err(|_| parse_err("bad K".into()))?;
    let horizon: usize = fields[1].parse().map_err(|_| parse_err("bad H".into()))?;
    let seed: u64 = fields[2].parse().map_err(|_| parse_err("bad seed".into()))?;
    let mode: SliceMode = fields[3].parse()?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut tuples = Vec::with_capacity(k * horizon);
    let mut mask = Vec::with_capacity(k * horizon);
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(csv_err(line))?;
        if record.len() != 7 && record.len() != 8 {
            return Err(DataError::Parse {
                line,
                msg: format!("expected 7 or 8 fields, got {}", record.len()),
            });
        }
        let int = |j: usize| -> Result<usize, DataError> {
            record[j].trim().parse().map_err(|_| DataError::Parse {
                line,
                msg: format!("field {j} is not an index: '{}'", &record[j]),
            })
        };
        let r: f64 = record[5].trim().parse().map_err(|_| DataError::Parse {
            line,
            msg: format!("reward '{}' is not a number", &record[5]),
        })?;
        tuples.push(Transition {
            tau: int(0)?,
            h: int(1)?,
            s: int(2)?,
            a: int(3)?,
            b: int(4)?,
            r,
            s_next: int(6)?,
        });
        mask.push(record.len() == 8 && record[7].trim() == "1");
    }
    if tuples.len() != k * horizon {
        return Err(DataError::Parse {
            line: 1,
            msg: format!("header promises {} tuples, file has {}", k * horizon, tuples.len()),
        });
    }
    Dataset::new(
        Observations {
            k,
            horizon,
            seed,
            mode,
            tuples,
        },
        mask,
    )
}

fn csv_err(line: usize) -> impl Fn(csv::Error) -> DataError {
    move |e| DataError::Parse {
        line,
        msg: e.to_string(),
    }
}
