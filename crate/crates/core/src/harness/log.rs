//! Per-episode CSV logs with a trailing moving-average column.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Moving-average window for training runs.
pub const TRAIN_WINDOW: usize = 10;
/// Moving-average window for evaluation runs.
pub const EVAL_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub reward: f64,
    pub moves: usize,
    /// Final status name, or `playing` when a script ran out first.
    pub outcome: String,
    pub wall_s: f64,
    pub level: u8,
    /// Training start index or `r` for the reserved start.
    pub start: String,
    pub moving_avg: f64,
}

/// Mean of the last `window` values up to and including each position;
/// the first rows average over what is available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Fills in `moving_avg` from the reward column.
pub fn fill_moving_average(rows: &mut [EpisodeLog], window: usize) {
    let rewards: Vec<f64> = rows.iter().map(|r| r.reward).collect();
    for (row, m) in rows.iter_mut().zip(moving_average(&rewards, window)) {
        row.moving_avg = m;
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[EpisodeLog]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "episode", "reward", "moves", "outcome", "wall_s", "level", "start", "moving_avg",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<EpisodeLog>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_windows() {
        let m = moving_average(&[1.0, 3.0, 5.0, 7.0], 2);
        assert_eq!(m, vec![1.0, 2.0, 4.0, 6.0]);
        assert_eq!(moving_average(&[], 10), Vec::<f64>::new());
    }

    #[test]
    fn csv_round_trip() {
        let mut rows = vec![
            EpisodeLog {
                episode: 0,
                reward: -1.02,
                moves: 3,
                outcome: "lost_fall".into(),
                wall_s: 0.5,
                level: 1,
                start: "0".into(),
                moving_avg: 0.0,
            };
            3
        ];
        rows[1].episode = 1;
        rows[2].episode = 2;
        fill_moving_average(&mut rows, TRAIN_WINDOW);
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("episode,reward,moves,outcome,wall_s,level,start,moving_avg\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }
}
