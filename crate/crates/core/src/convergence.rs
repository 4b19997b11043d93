//! Stopping rules and the per-checkpoint trace.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};
use crate::matrix::{dot, DenseMatrix};

pub const DEFAULT_CHECK_INTERVAL: usize = 5;
pub const DEFAULT_BURN_IN: usize = 10;
pub const DEFAULT_EPS_DEG: f64 = 1.0;
/// Default Frobenius tolerance, relative to `‖A‖_F`.
pub const DEFAULT_EPS_F_RELATIVE: f64 = 1e-4;

/// Which measure ends the iteration early, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    MaxIterOnly,
    /// Stop once `‖A − WH‖_F ≤ eps_f`.
    FrobeniusTol { eps_f: f64 },
    /// Stop once every column angle is at most `eps_deg` degrees.
    AngularTol { eps_deg: f64 },
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StopRule::MaxIterOnly => Ok(()),
            StopRule::FrobeniusTol { eps_f } if eps_f > 0.0 && eps_f.is_finite() => Ok(()),
            StopRule::AngularTol { eps_deg } if eps_deg > 0.0 && eps_deg < 90.0 => Ok(()),
            other => Err(NmfError::InvalidConfig(format!("invalid convergence tolerance in {other}"))),
        }
    }

    pub fn needs_angles(&self) -> bool {
        matches!(self, StopRule::AngularTol { .. })
    }
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopRule::MaxIterOnly => f.write_str("maxiter"),
            StopRule::FrobeniusTol { eps_f } => write!(f, "frob:{eps_f}"),
            StopRule::AngularTol { eps_deg } => write!(f, "angular:{eps_deg}"),
        }
    }
}

/// Parses `maxiter`, `frob:EPS` or `angular:EPS`.
impl FromStr for StopRule {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || NmfError::InvalidConfig(format!("cannot parse convergence rule '{s}'"));
        let rule = match s.split_once(':') {
            None if s == "maxiter" => StopRule::MaxIterOnly,
            Some(("frob", eps)) => StopRule::FrobeniusTol { eps_f: eps.parse().map_err(|_| bad())? },
            Some(("angular", eps)) => StopRule::AngularTol { eps_deg: eps.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// A stop rule plus the schedule on which it is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriterion {
    pub rule: StopRule,
    pub check_interval: usize,
    pub burn_in: usize,
}

impl Default for ConvergenceCriterion {
    fn default() -> Self {
        ConvergenceCriterion {
            rule: StopRule::MaxIterOnly,
            check_interval: DEFAULT_CHECK_INTERVAL,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

impl ConvergenceCriterion {
    pub fn new(rule: StopRule) -> Self {
        ConvergenceCriterion { rule, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.check_interval == 0 {
            return Err(NmfError::InvalidConfig("check interval must be at least 1".into()));
        }
        self.rule.validate()
    }

    /// Whether sweep `iteration` (1-based) is a scheduled checkpoint: the
    /// burn-in iteration and every `check_interval` after it.
    pub fn is_checkpoint(&self, iteration: usize) -> bool {
        iteration >= self.burn_in.max(1) && (iteration - self.burn_in.max(1)).is_multiple_of(self.check_interval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    /// `‖A − WH‖²_F`.
    pub objective_sq: f64,
    /// Largest column angle in degrees, when angles were measured.
    pub theta_max_deg: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub checkpoints: Vec<Checkpoint>,
}

impl ConvergenceTrace {
    pub fn push(&mut self, checkpoint: Checkpoint) {
        debug_assert!(self.checkpoints.last().is_none_or(|c| c.iteration < checkpoint.iteration));
        self.checkpoints.push(checkpoint);
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// Same iterations, objectives and angles; wall time is ignored.
    pub fn same_values(&self, other: &ConvergenceTrace) -> bool {
        self.len() == other.len()
            && self.checkpoints.iter().zip(&other.checkpoints).all(|(a, b)| {
                a.iteration == b.iteration
                    && a.objective_sq.to_bits() == b.objective_sq.to_bits()
                    && a.theta_max_deg.map(f64::to_bits) == b.theta_max_deg.map(f64::to_bits)
            })
    }

    /// CSV with header `iteration,objective_sq,theta_max_deg,elapsed_s`; an
    /// absent angle is an empty field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective_sq,theta_max_deg,elapsed_s\n");
        for c in &self.checkpoints {
            let theta = c.theta_max_deg.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", c.iteration, c.objective_sq, theta, c.elapsed_s));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut trace = ConvergenceTrace::default();
        for (idx, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| NmfError::Parse { line: idx + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err("expected 4 fields"));
            }
            trace.push(Checkpoint {
                iteration: f[0].parse().map_err(|_| err("iteration"))?,
                objective_sq: f[1].parse().map_err(|_| err("objective_sq"))?,
                theta_max_deg: if f[2].is_empty() { None } else { Some(f[2].parse().map_err(|_| err("theta"))?) },
                elapsed_s: f[3].parse().map_err(|_| err("elapsed_s"))?,
            });
        }
        Ok(trace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIter,
    FrobeniusTol,
    AngularTol,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::MaxIter => "max_iter",
            Termination::FrobeniusTol => "frobenius_tol",
            Termination::AngularTol => "angular_tol",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop(Termination),
}

/// Angles in degrees between matching columns of two successive bases.
///
/// Columns are compared index by index with no re-matching. A zero column
/// yields 90°.
pub fn angular_measure(prev: &DenseMatrix, curr: &DenseMatrix) -> Result<Vec<f64>> {
    if prev.shape() != curr.shape() {
        return Err(NmfError::DimensionMismatch(format!(
            "previous basis {}x{} vs current {}x{}",
            prev.rows(),
            prev.cols(),
            curr.rows(),
            curr.cols()
        )));
    }
    let k = prev.cols();
    let np = prev.column_norms();
    let nc = curr.column_norms();
    // ‖â − b̂‖² and ‖â + b̂‖² of the unit columns
    let mut diff = vec![0.0; k];
    let mut sum = vec![0.0; k];
    for i in 0..prev.rows() {
        for (j, (&a, &b)) in prev.row(i).iter().zip(curr.row(i)).enumerate() {
            if np[j] == 0.0 || nc[j] == 0.0 {
                continue;
            }
            let (x, y) = (a / np[j], b / nc[j]);
            diff[j] += (x - y) * (x - y);
            sum[j] += (x + y) * (x + y);
        }
    }
    let roundoff = 4.0 * f64::EPSILON * (prev.rows().max(1) as f64).sqrt();
    Ok((0..k)
        .map(|j| {
            if np[j] == 0.0 || nc[j] == 0.0 {
                return 90.0;
            }
            let d = diff[j].sqrt();
            if d <= roundoff {
                return 0.0;
            }
            // 2·atan2 form of arccos(⟨â, b̂⟩), accurate near 0° and 180°
            (2.0 * d.atan2(sum[j].sqrt())).to_degrees()
        })
        .collect())
}

/// Greedy re-matching of the columns of `curr` to those of `prev` by
/// cosine, largest first. Returns, for each column of `prev`, the column of
/// `curr` matched to it.
pub fn match_columns(prev: &DenseMatrix, curr: &DenseMatrix) -> Vec<usize> {
    let k = prev.cols();
    let pc: Vec<Vec<f64>> = (0..k).map(|j| prev.column(j)).collect();
    let cc: Vec<Vec<f64>> = (0..curr.cols()).map(|j| curr.column(j)).collect();
    let cos = |a: &[f64], b: &[f64]| {
        let d = (dot(a, a) * dot(b, b)).sqrt();
        if d == 0.0 {
            0.0
        } else {
            dot(a, b) / d
        }
    };
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * cc.len());
    for (i, p) in pc.iter().enumerate() {
        for (j, c) in cc.iter().enumerate() {
            pairs.push((cos(p, c), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![usize::MAX; k];
    let mut used = vec![false; cc.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
        }
    }
    out
}

/// Angles after greedily re-matching columns; robust to column swaps.
pub fn angular_measure_matched(prev: &DenseMatrix, curr: &DenseMatrix) -> Result<Vec<f64>> {
    if prev.shape() != curr.shape() {
        return angular_measure(prev, curr);
    }
    let perm = match_columns(prev, curr);
    let reordered = DenseMatrix::from_fn(curr.rows(), curr.cols(), |i, j| curr[(i, perm[j])]);
    angular_measure(prev, &reordered)
}

/// Evaluates the stop rule against the latest checkpoint.
pub fn should_stop(criterion: &ConvergenceCriterion, trace: &ConvergenceTrace, latest_thetas: Option<&[f64]>) -> Decision {
    let Some(last) = trace.last() else { return Decision::Continue };
    if !criterion.is_checkpoint(last.iteration) {
        return Decision::Continue;
    }
    match criterion.rule {
        StopRule::MaxIterOnly => Decision::Continue,
        StopRule::FrobeniusTol { eps_f } => {
            if last.objective_sq.sqrt() <= eps_f {
                Decision::Stop(Termination::FrobeniusTol)
            } else {
                Decision::Continue
            }
        }
        StopRule::AngularTol { eps_deg } => match latest_thetas {
            Some(t) if !t.is_empty() && t.iter().all(|th| *th <= eps_deg) => Decision::Stop(Termination::AngularTol),
            _ => Decision::Continue,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_at(iteration: usize, objective_sq: f64) -> ConvergenceTrace {
        let mut t = ConvergenceTrace::default();
        t.push(Checkpoint { iteration, objective_sq, theta_max_deg: None, elapsed_s: 0.0 });
        t
    }

    #[test]
    fn angles_of_identical_and_scaled() {
        let w = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.5]]);
        assert_eq!(angular_measure(&w, &w).unwrap(), vec![0.0, 0.0]);
        let mut scaled = w.clone();
        scaled.scale(3.0);
        assert_eq!(angular_measure(&w, &scaled).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_computed_angles() {
        let a = DenseMatrix::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]);
        let s = 1.0 / 2f64.sqrt();
        let b = DenseMatrix::from_columns(3, &[vec![0.0, 1.0, 0.0], vec![s, s, 0.0]]);
        let t = angular_measure(&a, &b).unwrap();
        assert!((t[0] - 90.0).abs() < 1e-12);
        assert!((t[1] - 45.0).abs() < 1e-12);
    }

    #[test]
    fn zero_column_is_ninety_degrees() {
        let a = DenseMatrix::from_columns(2, &[vec![0.0, 0.0]]);
        let b = DenseMatrix::from_columns(2, &[vec![1.0, 0.0]]);
        assert_eq!(angular_measure(&a, &b).unwrap(), vec![90.0]);
        assert!(angular_measure(&a, &DenseMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn matched_angles_ignore_swaps() {
        let a = DenseMatrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = DenseMatrix::from_columns(2, &[vec![0.0, 2.0], vec![3.0, 0.0]]);
        assert_eq!(match_columns(&a, &b), vec![1, 0]);
        assert_eq!(angular_measure_matched(&a, &b).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn stop_decisions() {
        let crit = ConvergenceCriterion { rule: StopRule::AngularTol { eps_deg: 1.0 }, check_interval: 5, burn_in: 10 };
        let t = trace_at(10, 1.0);
        assert_eq!(should_stop(&crit, &t, Some(&[0.0, 0.0])), Decision::Stop(Termination::AngularTol));
        assert_eq!(should_stop(&crit, &t, Some(&[0.5, 2.0])), Decision::Continue);
        // not a checkpoint, or before burn-in
        assert_eq!(should_stop(&crit, &trace_at(12, 1.0), Some(&[0.0])), Decision::Continue);
        assert_eq!(should_stop(&crit, &trace_at(5, 1.0), Some(&[0.0])), Decision::Continue);

        let frob = ConvergenceCriterion { rule: StopRule::FrobeniusTol { eps_f: 2.0 }, ..crit };
        assert_eq!(should_stop(&frob, &trace_at(15, 4.0), None), Decision::Stop(Termination::FrobeniusTol));
        assert_eq!(should_stop(&frob, &trace_at(15, 4.01), None), Decision::Continue);

        let max = ConvergenceCriterion { rule: StopRule::MaxIterOnly, ..crit };
        assert_eq!(should_stop(&max, &trace_at(15, 0.0), Some(&[0.0])), Decision::Continue);
    }

    #[test]
    fn parse_rules() {
        assert_eq!("maxiter".parse::<StopRule>().unwrap(), StopRule::MaxIterOnly);
        assert_eq!("frob:0.5".parse::<StopRule>().unwrap(), StopRule::FrobeniusTol { eps_f: 0.5 });
        assert_eq!("angular:1".parse::<StopRule>().unwrap(), StopRule::AngularTol { eps_deg: 1.0 });
        for bad in ["angular:90", "angular:0", "frob:-1", "frob", "lin:1"] {
            assert!(bad.parse::<StopRule>().is_err(), "{bad}");
        }
    }

    #[test]
    fn checkpoint_schedule() {
        let c = ConvergenceCriterion::default();
        let hits: Vec<usize> = (1..=30).filter(|&i| c.is_checkpoint(i)).collect();
        assert_eq!(hits, vec![10, 15, 20, 25, 30]);
        let early = ConvergenceCriterion { burn_in: 0, check_interval: 1, ..c };
        assert!(early.is_checkpoint(1));
    }

    #[test]
    fn trace_csv_round_trip() {
        let mut t = ConvergenceTrace::default();
        t.push(Checkpoint { iteration: 10, objective_sq: 0.1 + 0.2, theta_max_deg: Some(1.5), elapsed_s: 0.25 });
        t.push(Checkpoint { iteration: 15, objective_sq: 1e-300, theta_max_deg: None, elapsed_s: 1.0 });
        let back = ConvergenceTrace::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
    }
}
