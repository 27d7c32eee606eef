//! Reward evaluation over recorded traces.
//!
//! Input rows are `step, delta_h, d1, d2, d3, d4, d5`. An optional header is
//! recognised by a non-numeric first field. Output rows repeat the input and
//! append `r_sdf, lift, total, success` (success as 1 or 0).

use std::io::{Read, Write};

use thiserror::Error;

use super::{evaluate, RewardConfig, RewardError, StepSignal, FINGER_COUNT};

const INPUT_FIELDS: usize = 2 + FINGER_COUNT;
const APPENDED: [&str; 4] = ["r_sdf", "lift", "total", "success"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected {INPUT_FIELDS} fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("line {line}: field {field}: {message}")]
    Parse {
        line: u64,
        field: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Signal { line: u64, source: RewardError },
    #[error("invalid reward configuration: {0}")]
    Config(#[from] RewardError),
}

/// Streams `input` to `output` with the reward columns appended. Returns the
/// number of data rows. Empty input produces empty output.
pub fn evaluate_trace<R: Read, W: Write>(
    input: R,
    output: W,
    config: &RewardConfig,
) -> Result<usize, TraceError> {
    config.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut writer = csv::Writer::from_writer(output);

    let mut rows = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            let mut header: Vec<&str> = record.iter().collect();
            header.extend(APPENDED);
            writer.write_record(&header)?;
            continue;
        }
        if record.len() != INPUT_FIELDS {
            return Err(TraceError::FieldCount {
                line,
                found: record.len(),
            });
        }
        let mut values = [0.0; INPUT_FIELDS];
        for (field, (text, value)) in record.iter().zip(values.iter_mut()).enumerate() {
            *value = text
                .parse()
                .map_err(|e: std::num::ParseFloatError| TraceError::Parse {
                    line,
                    field: field + 1,
                    message: format!("{e} ({text:?})"),
                })?;
        }
        let mut distances = [0.0; FINGER_COUNT];
        distances.copy_from_slice(&values[2..]);
        let signal = StepSignal::new(values[1], distances)
            .map_err(|source| TraceError::Signal { line, source })?;
        let reward = evaluate(&signal, config);

        let mut out: Vec<String> = record.iter().map(str::to_owned).collect();
        out.extend([
            reward.r_sdf.to_string(),
            reward.lift.to_string(),
            reward.total.to_string(),
            u8::from(reward.success).to_string(),
        ]);
        writer.write_record(&out)?;
        rows += 1;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(input: &str) -> Result<(usize, String), TraceError> {
        let mut out = Vec::new();
        let n = evaluate_trace(input.as_bytes(), &mut out, &RewardConfig::default())?;
        Ok((n, String::from_utf8(out).unwrap()))
    }

    #[test]
    fn appends_reward_columns() {
        let (n, out) = run("0,0.2,0,0,0,0,0\n1,0,0.195,0.195,0.195,0.195,0.195\n").unwrap();
        assert_eq!(n, 2);
        let rows: Vec<Vec<f64>> = out
            .lines()
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows[0][7..], [40.0, 5025.0, 5065.0, 1.0]);
        assert!((rows[1][9] - (0.5 / 0.22 + 1.0)).abs() < 1e-9);
        assert_eq!(rows[1][10], 0.0);
    }

    #[test]
    fn header_is_extended() {
        let (n, out) = run("step,delta_h,d1,d2,d3,d4,d5\n3,0.1,0,0,0,0,0\n").unwrap();
        assert_eq!(n, 1);
        assert_eq!(
            out.lines().next().unwrap(),
            "step,delta_h,d1,d2,d3,d4,d5,r_sdf,lift,total,success"
        );
    }

    #[test]
    fn empty_input_gives_empty_output() {
        assert_eq!(run("").unwrap(), (0, String::new()));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = run("0,0,0,0,0,0,0\n1,0,0,0,0,0\n").unwrap_err();
        assert!(
            matches!(err, TraceError::FieldCount { line: 2, found: 6 }),
            "{err}"
        );
        let err = run("0,0,0,0,0,0,0\n1,0,0,x,0,0,0\n").unwrap_err();
        assert!(
            matches!(
                err,
                TraceError::Parse {
                    line: 2,
                    field: 4,
                    ..
                }
            ),
            "{err}"
        );
        let err = run("0,0,0,0,0,0,0\n1,inf,0,0,0,0,0\n").unwrap_err();
        assert!(matches!(err, TraceError::Signal { line: 2, .. }), "{err}");
    }
}
