//! Episode logs, reward aggregation and CSV export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::radio::Action;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    /// QoS state each UAV reached in this slot.
    pub states: Vec<u8>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub sinr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogMeta {
    pub scenario_hash: String,
    pub seed: u64,
    pub algorithm: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub meta: LogMeta,
    pub num_uavs: usize,
    pub records: Vec<SlotRecord>,
}

impl EpisodeLog {
    pub fn new(meta: LogMeta, num_uavs: usize) -> Self {
        EpisodeLog {
            meta,
            num_uavs,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: SlotRecord) -> Result<()> {
        if record.slot != self.records.len() {
            return Err(Error::invalid(format!(
                "slot {} recorded out of order, expected {}",
                record.slot,
                self.records.len()
            )));
        }
        if record.rewards.len() != self.num_uavs
            || record.states.len() != self.num_uavs
            || record.actions.len() != self.num_uavs
        {
            return Err(Error::invalid("slot record does not cover every UAV"));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `rewards[m][t]`.
    pub fn rewards_per_uav(&self) -> Vec<Vec<f64>> {
        (0..self.num_uavs)
            .map(|m| self.records.iter().map(|r| r.rewards[m]).collect())
            .collect()
    }
}

/// Per-slot fleet aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSeries {
    /// Mean over UAVs of the cumulative discounted reward.
    pub v_avg: Vec<f64>,
    /// Sum over UAVs of the instantaneous reward.
    pub r_sum: Vec<f64>,
}

impl RewardSeries {
    pub fn final_v_avg(&self) -> Option<f64> {
        self.v_avg.last().copied()
    }
}

/// `v[m][t] = Σ_{τ≤t} δ^τ r[m][τ]` for every UAV.
pub fn cumulative_reward(log: &EpisodeLog, discount: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&discount) {
        return Err(Error::invalid(format!(
            "discount must lie in [0, 1], got {discount}"
        )));
    }
    Ok(log
        .rewards_per_uav()
        .into_iter()
        .map(|rewards| {
            let mut acc = 0.0;
            let mut weight = 1.0;
            rewards
                .into_iter()
                .map(|r| {
                    acc += weight * r;
                    weight *= discount;
                    acc
                })
                .collect()
        })
        .collect())
}

pub fn fleet_series(cumulative: &[Vec<f64>], instantaneous: &[Vec<f64>]) -> Result<RewardSeries> {
    if cumulative.len() != instantaneous.len() || cumulative.is_empty() {
        return Err(Error::invalid(
            "cumulative and instantaneous series must cover the same UAVs",
        ));
    }
    let len = cumulative[0].len();
    if cumulative
        .iter()
        .chain(instantaneous)
        .any(|s| s.len() != len)
    {
        return Err(Error::invalid("ragged reward series"));
    }
    let m = cumulative.len() as f64;
    let v_avg = (0..len)
        .map(|t| cumulative.iter().map(|s| s[t]).sum::<f64>() / m)
        .collect();
    let r_sum = (0..len)
        .map(|t| instantaneous.iter().map(|s| s[t]).sum())
        .collect();
    Ok(RewardSeries { v_avg, r_sum })
}

pub fn episode_series(log: &EpisodeLog, discount: f64) -> Result<RewardSeries> {
    if log.num_uavs == 0 {
        return Err(Error::invalid("episode log has no UAVs"));
    }
    fleet_series(&cumulative_reward(log, discount)?, &log.rewards_per_uav())
}

/// `%.9g`-style rendering: 9 significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-5, 1e9)`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(num_uavs: usize) -> Vec<String> {
    let mut header = vec!["t".to_string(), "v_avg".to_string(), "r_sum".to_string()];
    header.extend((0..num_uavs).map(|m| format!("r_uav_{m}")));
    header
}

/// Writes `t,v_avg,r_sum,r_uav_0,...` with one row per slot.
pub fn write_csv(series: &RewardSeries, log: &EpisodeLog, path: &Path) -> Result<()> {
    if series.v_avg.len() != log.len() || series.r_sum.len() != log.len() {
        return Err(Error::invalid("reward series and log differ in length"));
    }
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    writer
        .write_record(csv_header(log.num_uavs))
        .map_err(csv_err)?;
    for (t, record) in log.records.iter().enumerate() {
        let mut row = vec![
            record.slot.to_string(),
            format_sig9(series.v_avg[t]),
            format_sig9(series.r_sum[t]),
        ];
        row.extend(record.rewards.iter().map(|r| format_sig9(*r)));
        writer.write_record(&row).map_err(csv_err)?;
    }
    let mut inner = writer
        .into_inner()
        .map_err(|e| io_err(std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(io_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    Error::invalid(format!("{}: bad number {field:?}: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_from(rewards: &[Vec<f64>]) -> EpisodeLog {
        let m = rewards.len();
        let t = rewards.first().map_or(0, Vec::len);
        let mut log = EpisodeLog::new(
            LogMeta {
                scenario_hash: "test".into(),
                seed: 0,
                algorithm: "marl".into(),
            },
            m,
        );
        for slot in 0..t {
            log.push(SlotRecord {
                slot,
                states: rewards.iter().map(|r| u8::from(r[slot] != 0.0)).collect(),
                actions: vec![
                    Action {
                        user: 0,
                        subchannel: 0,
                        power_level: 0
                    };
                    m
                ],
                rewards: rewards.iter().map(|r| r[slot]).collect(),
                sinr: vec![0.0; m],
            })
            .unwrap();
        }
        log
    }

    #[test]
    fn cumulative_examples() {
        let log = log_from(&[vec![1.0, 1.0, 1.0]]);
        assert_eq!(
            cumulative_reward(&log, 1.0).unwrap(),
            vec![vec![1.0, 2.0, 3.0]]
        );
        assert_eq!(
            cumulative_reward(&log, 0.5).unwrap(),
            vec![vec![1.0, 1.5, 1.75]]
        );
        let zeros = log_from(&[vec![0.0; 4]]);
        assert_eq!(cumulative_reward(&zeros, 0.9).unwrap(), vec![vec![0.0; 4]]);
        assert!(cumulative_reward(&log, 1.1).is_err());
    }

    #[test]
    fn fleet_examples() {
        let single = fleet_series(&[vec![1.0, 3.0]], &[vec![1.0, 2.0]]).unwrap();
        assert_eq!(single.v_avg, vec![1.0, 3.0]);
        let pair = fleet_series(
            &[vec![2.0, 4.0], vec![0.0, 0.0]],
            &[vec![3.0, 1.0], vec![5.0, 0.0]],
        )
        .unwrap();
        assert_eq!(pair.v_avg, vec![1.0, 2.0]);
        assert_eq!(pair.r_sum, vec![8.0, 1.0]);
        assert!(fleet_series(&[vec![1.0], vec![1.0, 2.0]], &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn log_rejects_gaps() {
        let mut log = log_from(&[vec![1.0]]);
        let mut rec = log.records[0].clone();
        rec.slot = 5;
        assert!(log.push(rec).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(143_350.0), "143350");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(123_456_789_012.0), "1.23456789e+11");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(99_999.999_999), "100000");
    }

    #[test]
    fn empty_episode_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let log = log_from(&[vec![], vec![]]);
        let series = episode_series(&log, 1.0).unwrap();
        write_csv(&series, &log, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "t,v_avg,r_sum,r_uav_0,r_uav_1\n"
        );
    }

    #[test]
    fn write_error_names_path() {
        let log = log_from(&[vec![1.0]]);
        let series = episode_series(&log, 1.0).unwrap();
        let path = Path::new("/nonexistent-dir/out.csv");
        let err = write_csv(&series, &log, path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    proptest! {
        #[test]
        fn csv_round_trip(rewards in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 6), 1..4)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("series.csv");
            let log = log_from(&rewards);
            let series = episode_series(&log, 1.0).unwrap();
            write_csv(&series, &log, &path).unwrap();
            let table = read_csv(&path).unwrap();
            prop_assert_eq!(table.header, csv_header(rewards.len()));
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * a.abs().max(b.abs()) + 1e-300;
            for (t, row) in table.rows.iter().enumerate() {
                prop_assert_eq!(row[0], t as f64);
                prop_assert!(close(row[1], series.v_avg[t]));
                prop_assert!(close(row[2], series.r_sum[t]));
                for (m, r) in rewards.iter().enumerate() {
                    prop_assert!(close(row[3 + m], r[t]));
                }
            }
        }

        #[test]
        fn discounted_sum_is_bounded(rewards in prop::collection::vec(-10.0f64..10.0, 1..200), discount in 0.0f64..0.99) {
            let log = log_from(std::slice::from_ref(&rewards));
            let bound = rewards.iter().fold(0.0f64, |a, r| a.max(r.abs())) / (1.0 - discount);
            for v in &cumulative_reward(&log, discount).unwrap()[0] {
                prop_assert!(v.abs() <= bound + 1e-9);
            }
        }

        #[test]
        fn nonnegative_rewards_give_nondecreasing_average(
            rewards in prop::collection::vec(prop::collection::vec(0.0f64..1e5, 50), 1..4)
        ) {
            let series = episode_series(&log_from(&rewards), 1.0).unwrap();
            prop_assert!(series.v_avg.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
