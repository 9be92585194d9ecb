//! Reading and writing tables, policies and plot data.
//!
//! Floats are written in shortest round-trip form so a re-run with the same
//! seed produces byte-identical files and a read-back reproduces every value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayesian::TypeStrategy;
use crate::equilibria::{EquilibriumResult, MixedStrategy, StageGame};
use crate::error::{Error, Result};
use crate::game::{GameSpec, PolicyPair, TrajectoryStep};
use crate::nashq::{CurvePoint, QTables};

/// One state's block of a Q-table document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QStateEntry {
    pub index: usize,
    pub tau: usize,
    pub g_s: f64,
    pub g_a: f64,
    /// `q1[a][b]`
    pub q1: Vec<Vec<f64>>,
    pub q2: Vec<Vec<f64>>,
    pub visits: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableDocument {
    pub actions_attacker: Vec<f64>,
    pub actions_sensor: Vec<f64>,
    pub states: Vec<QStateEntry>,
}

impl QTableDocument {
    pub fn new(spec: &GameSpec, tables: &QTables) -> Result<Self> {
        tables.check_spec(spec)?;
        let (na, nb) = (spec.n_attacker(), spec.n_sensor());
        let states = (0..spec.num_states())
            .map(|s| {
                let st = spec.state_of(s);
                let (g_s, g_a) = spec.gains_of(st);
                let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
                    (0..na).map(|a| (0..nb).map(|b| f(a, b)).collect()).collect()
                };
                QStateEntry {
                    index: s,
                    tau: st.tau,
                    g_s,
                    g_a,
                    q1: grid(&|a, b| tables.q1(s, a, b)),
                    q2: grid(&|a, b| tables.q2(s, a, b)),
                    visits: (0..na)
                        .map(|a| (0..nb).map(|b| tables.visits[tables.idx(s, a, b)]).collect())
                        .collect(),
                }
            })
            .collect();
        Ok(Self {
            actions_attacker: spec.actions_attacker().to_vec(),
            actions_sensor: spec.actions_sensor().to_vec(),
            states,
        })
    }

    pub fn to_tables(&self) -> Result<QTables> {
        let (na, nb) = (self.actions_attacker.len(), self.actions_sensor.len());
        let mut t = QTables::zeros(self.states.len(), na, nb);
        for (s, e) in self.states.iter().enumerate() {
            if e.index != s {
                return Err(Error::Parse(format!("state entry {s} has index {}", e.index)));
            }
            let shaped = |m: usize, n: usize| m == na && n == nb;
            let ok = shaped(e.q1.len(), e.q1.first().map_or(nb, Vec::len))
                && e.q1.iter().chain(&e.q2).all(|r| r.len() == nb)
                && e.q2.len() == na
                && e.visits.len() == na
                && e.visits.iter().all(|r| r.len() == nb);
            if !ok {
                return Err(Error::Parse(format!("state {s}: blocks must be {na}x{nb}")));
            }
            for a in 0..na {
                for b in 0..nb {
                    let i = t.idx(s, a, b);
                    t.q1[i] = e.q1[a][b];
                    t.q2[i] = e.q2[a][b];
                    t.visits[i] = e.visits[a][b];
                }
            }
        }
        Ok(t)
    }
}

pub fn write_qtables_json(path: &Path, spec: &GameSpec, tables: &QTables) -> Result<()> {
    write_json(path, &QTableDocument::new(spec, tables)?)
}

pub fn read_qtables_json(path: &Path) -> Result<QTables> {
    let doc: QTableDocument = read_json(path)?;
    doc.to_tables()
}

/// Player 1's table with one row per state and one column per action pair
/// `(a, b)`, attacker action outermost.
pub fn write_qtable_csv(path: &Path, spec: &GameSpec, tables: &QTables) -> Result<()> {
    tables.check_spec(spec)?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["state".to_string(), "tau".into(), "g_s".into(), "g_a".into()];
    for &a in spec.actions_attacker() {
        for &b in spec.actions_sensor() {
            header.push(format!("({a},{b})"));
        }
    }
    w.write_record(&header)?;
    for s in 0..spec.num_states() {
        let st = spec.state_of(s);
        let (g_s, g_a) = spec.gains_of(st);
        let mut row = vec![format!("s{s}"), st.tau.to_string(), g_s.to_string(), g_a.to_string()];
        row.extend(tables.q1_state(s).iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One state's equilibrium in a policy document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub index: usize,
    pub tau: usize,
    pub g_s: f64,
    pub g_a: f64,
    pub attacker: MixedStrategy,
    pub sensor: MixedStrategy,
    pub value_p1: f64,
    pub value_p2: f64,
    pub deviation_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub actions_attacker: Vec<f64>,
    pub actions_sensor: Vec<f64>,
    pub states: Vec<PolicyEntry>,
}

impl PolicyDocument {
    pub fn new(spec: &GameSpec, policies: &[EquilibriumResult]) -> Result<Self> {
        if policies.len() != spec.num_states() {
            return Err(Error::Dimension(format!(
                "{} policies for {} states",
                policies.len(),
                spec.num_states()
            )));
        }
        let states = policies
            .iter()
            .enumerate()
            .map(|(s, p)| {
                let st = spec.state_of(s);
                let (g_s, g_a) = spec.gains_of(st);
                PolicyEntry {
                    index: s,
                    tau: st.tau,
                    g_s,
                    g_a,
                    attacker: p.strat_p1.clone(),
                    sensor: p.strat_p2.clone(),
                    value_p1: p.value_p1,
                    value_p2: p.value_p2,
                    deviation_gap: p.deviation_gap,
                }
            })
            .collect();
        Ok(Self {
            actions_attacker: spec.actions_attacker().to_vec(),
            actions_sensor: spec.actions_sensor().to_vec(),
            states,
        })
    }

    pub fn policy_pair(&self) -> PolicyPair {
        PolicyPair {
            attacker: self.states.iter().map(|e| e.attacker.clone()).collect(),
            sensor: self.states.iter().map(|e| e.sensor.clone()).collect(),
        }
    }
}

pub fn write_policies_json(path: &Path, spec: &GameSpec, policies: &[EquilibriumResult]) -> Result<()> {
    write_json(path, &PolicyDocument::new(spec, policies)?)
}

/// Policies for `spec`; the action sets in the file must match.
pub fn read_policies_json(path: &Path, spec: &GameSpec) -> Result<PolicyPair> {
    let doc: PolicyDocument = read_json(path)?;
    if doc.actions_attacker != spec.actions_attacker() || doc.actions_sensor != spec.actions_sensor() {
        return Err(Error::InvalidArgument(format!(
            "{} was written for different action sets",
            path.display()
        )));
    }
    let pair = doc.policy_pair();
    pair.check(spec)?;
    Ok(pair)
}

/// `step` followed by player 1's Q-value at state 0 for each action pair.
pub fn write_curve_csv(path: &Path, spec: &GameSpec, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["step".to_string()];
    for &a in spec.actions_attacker() {
        for &b in spec.actions_sensor() {
            header.push(format!("q1({a},{b})"));
        }
    }
    w.write_record(&header)?;
    for p in curve {
        let mut row = vec![p.step.to_string()];
        row.extend(p.q1_s0.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, steps: &[TrajectoryStep]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in steps {
        w.serialize(s)?;
    }
    if steps.is_empty() {
        w.write_record(["step", "tau", "g_s", "g_a", "a", "b", "q", "gamma", "trace_p", "r1"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryStep>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Rows are actions, columns the player's own type values:
/// `Pr(a = action | type)`.
pub fn write_type_strategy_csv(path: &Path, strategy: &TypeStrategy, type_label: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["action".to_string()];
    header.extend(strategy.types.iter().map(|t| format!("{type_label}={t}")));
    w.write_record(&header)?;
    for (k, a) in strategy.actions.iter().enumerate() {
        let mut row = vec![a.to_string()];
        row.extend((0..strategy.types.len()).map(|t| strategy.prob(t, k).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses one or two whitespace-separated matrices, separated by a blank
/// line; `#` starts a comment. A single matrix is read as a zero-sum game
/// for the row player.
pub fn parse_matrix_file(text: &str) -> Result<StageGame> {
    let mut blocks: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !blocks.last().unwrap().is_empty() {
                blocks.push(Vec::new());
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: `{tok}` is not a number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        blocks.last_mut().unwrap().push(row);
    }
    if blocks.last().is_some_and(Vec::is_empty) {
        blocks.pop();
    }
    match blocks.len() {
        1 => StageGame::zero_sum(blocks.pop().unwrap()),
        2 => {
            let p2 = blocks.pop().unwrap();
            let p1 = blocks.pop().unwrap();
            StageGame::new(p1, p2)
        }
        0 => Err(Error::Parse("no matrix found".into())),
        n => Err(Error::Parse(format!("expected two matrices, found {n}"))),
    }
    .map_err(|e| match e {
        Error::Parse(_) => e,
        other => Error::Parse(other.to_string()),
    })
}

pub fn read_matrix_file(path: &Path) -> Result<StageGame> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_file(&text)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
