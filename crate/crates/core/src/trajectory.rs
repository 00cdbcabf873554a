//! Trajectory CSV: one row per `(tick, agent)`, columns
//! `tick,agent_id,x,y,heading`, shill as `agent_id` 0. Reals carry 17
//! significant digits so read-back is bit-exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AgentState, SwarmState};

pub const HEADER: [&str; 5] = ["tick", "agent_id", "x", "y", "heading"];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct TrajectoryWriter<W: Write> {
    csv: csv::Writer<W>,
}

impl TrajectoryWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(inner: W) -> Result<Self> {
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(inner);
        csv.write_record(HEADER)?;
        Ok(Self { csv })
    }

    pub fn write_state(&mut self, state: &SwarmState) -> Result<()> {
        let tick = state.t.to_string();
        let slots = state.shill.iter().map(|s| (0, s)).chain(state.agents.iter().enumerate().map(|(i, a)| (i + 1, a)));
        for (id, a) in slots {
            self.csv.write_record([
                tick.as_str(),
                &id.to_string(),
                &real(a.position[0]),
                &real(a.position[1]),
                &real(a.heading),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.csv.flush()?;
        self.csv.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_trajectory(path: impl AsRef<Path>, states: &[SwarmState]) -> Result<()> {
    let mut w = TrajectoryWriter::create(path)?;
    for s in states {
        w.write_state(s)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<SwarmState>> {
    parse_trajectory(File::open(path)?)
}

pub fn parse_trajectory(reader: impl Read) -> Result<Vec<SwarmState>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = csv.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Trajectory(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }

    let mut states: Vec<SwarmState> = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).ok_or_else(|| Error::Trajectory(format!("row {}: missing column {}", line + 2, HEADER[i])));
        let bad = |what: &str| Error::Trajectory(format!("row {}: bad {what}", line + 2));
        let tick: u64 = field(0)?.parse().map_err(|_| bad("tick"))?;
        let id: usize = field(1)?.parse().map_err(|_| bad("agent_id"))?;
        let x: f64 = field(2)?.parse().map_err(|_| bad("x"))?;
        let y: f64 = field(3)?.parse().map_err(|_| bad("y"))?;
        let heading: f64 = field(4)?.parse().map_err(|_| bad("heading"))?;
        let agent = AgentState { position: [x, y], heading };

        if states.last().is_none_or(|s| s.t != tick) {
            states.push(SwarmState { t: tick, agents: Vec::new(), shill: None });
        }
        let state = states.last_mut().expect("pushed above");
        match id {
            0 if state.shill.is_none() && state.agents.is_empty() => state.shill = Some(agent),
            id if id == state.agents.len() + 1 => state.agents.push(agent),
            _ => return Err(Error::Trajectory(format!("row {}: agent_id {id} out of order in tick {tick}", line + 2))),
        }
    }

    if let Some(first) = states.first() {
        let n = first.n();
        if let Some(bad) = states.iter().find(|s| s.n() != n) {
            return Err(Error::Trajectory(format!("tick {} has {} agents, tick {} has {n}", bad.t, bad.n(), first.t)));
        }
    }
    Ok(states)
}
