use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::model::State;
use crate::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 7] = ["time", "pos1", "pos2", "vel1", "vel2", "tau1", "tau2"];
pub const TRAJECTORY_HEADER_EXTENDED: [&str; 11] = [
    "time",
    "pos1",
    "pos2",
    "vel1",
    "vel2",
    "tau1",
    "tau2",
    "tau_des1",
    "tau_des2",
    "tau_pert1",
    "tau_pert2",
];

/// Uniformly sampled closed-loop record.
///
/// Sample `k` holds the true state at `time[k]` and the torques applied over
/// `[time[k], time[k] + dt)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    pub time: Vec<f64>,
    pub states: Vec<State>,
    /// Motor torques after filtering, noise and clamping.
    pub tau: Vec<[f64; 2]>,
    /// Controller commands.
    pub tau_des: Vec<[f64; 2]>,
    /// External perturbation torques.
    pub tau_pert: Vec<[f64; 2]>,
    /// Set when the simulation produced a non-finite state and stopped early.
    pub diverged: bool,
}

impl Trajectory {
    pub fn with_capacity(dt: f64, n: usize) -> Self {
        Self {
            dt,
            time: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            tau: Vec::with_capacity(n),
            tau_des: Vec::with_capacity(n),
            tau_pert: Vec::with_capacity(n),
            diverged: false,
        }
    }

    pub fn push(&mut self, t: f64, s: State, tau: [f64; 2], tau_des: [f64; 2], tau_pert: [f64; 2]) {
        self.time.push(t);
        self.states.push(s);
        self.tau.push(tau);
        self.tau_des.push(tau_des);
        self.tau_pert.push(tau_pert);
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn final_state(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn duration(&self) -> f64 {
        self.time.last().copied().unwrap_or(0.0)
    }

    /// Total torque acting on the plant at each sample.
    pub fn plant_torque(&self, k: usize) -> [f64; 2] {
        [
            self.tau[k][0] + self.tau_pert[k][0],
            self.tau[k][1] + self.tau_pert[k][1],
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W, extended: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if extended {
            w.write_record(TRAJECTORY_HEADER_EXTENDED)?;
        } else {
            w.write_record(TRAJECTORY_HEADER)?;
        }
        for k in 0..self.len() {
            let s = &self.states[k];
            let mut row = vec![
                self.time[k],
                s.q1,
                s.q2,
                s.qd1,
                s.qd2,
                self.tau[k][0],
                self.tau[k][1],
            ];
            if extended {
                row.extend_from_slice(&self.tau_des[k]);
                row.extend_from_slice(&self.tau_pert[k]);
            }
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<trajectory>", e))?;
        Ok(())
    }

    /// Parses either the 7-column or the 11-column layout. Missing command
    /// columns default to the applied torque; missing perturbation columns
    /// default to zero.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let extended = if header == TRAJECTORY_HEADER {
            false
        } else if header == TRAJECTORY_HEADER_EXTENDED {
            true
        } else {
            return Err(Error::format(
                "trajectory csv",
                format!("unexpected header {header:?}"),
            ));
        };

        let mut traj = Trajectory::default();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let vals = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format("trajectory csv", format!("row {}: {e}", line + 1)))?;
            if vals.len() != header.len() {
                return Err(Error::format(
                    "trajectory csv",
                    format!("row {} has {} fields", line + 1, vals.len()),
                ));
            }
            let s = State::new(vals[1], vals[2], vals[3], vals[4]);
            let tau = [vals[5], vals[6]];
            let (tau_des, tau_pert) = if extended {
                ([vals[7], vals[8]], [vals[9], vals[10]])
            } else {
                (tau, [0.0, 0.0])
            };
            traj.push(vals[0], s, tau, tau_des, tau_pert);
        }
        traj.dt = uniform_dt(&traj.time)?;
        Ok(traj)
    }

    pub fn save(&self, path: &Path, extended: bool) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(f), extended)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }
}

fn uniform_dt(time: &[f64]) -> Result<f64> {
    if time.len() < 2 {
        return Ok(0.0);
    }
    let dt = (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::format(
            "trajectory csv",
            "time column is not increasing",
        ));
    }
    let uniform = time
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt.max(1.0));
    if !uniform {
        return Err(Error::format(
            "trajectory csv",
            "time column is not uniformly sampled",
        ));
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize) -> Trajectory {
        let mut t = Trajectory::with_capacity(0.002, n);
        for k in 0..n {
            let x = k as f64;
            t.push(
                x * 0.002,
                State::new(0.1 * x, -0.2 * x, 1.0 / (x + 1.0), std::f64::consts::PI),
                [x.sin(), x.cos()],
                [2.0 * x.sin(), 0.0],
                [0.0, 1e-9 * x],
            );
        }
        t.dt = 0.002;
        t
    }

    #[test]
    fn extended_roundtrip_is_exact() {
        let t = sample(50);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, true).unwrap();
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.states, t.states);
        assert_eq!(back.tau, t.tau);
        assert_eq!(back.tau_des, t.tau_des);
        assert_eq!(back.tau_pert, t.tau_pert);
        assert!((back.dt - 0.002).abs() < 1e-15);
    }

    #[test]
    fn basic_layout_header() {
        let t = sample(3);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,pos1,pos2,vel1,vel2,tau1,tau2\n"));
        let back = Trajectory::read_csv(text.as_bytes()).unwrap();
        assert!(back.tau_pert.iter().all(|p| *p == [0.0, 0.0]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Trajectory::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = "time,pos1,pos2,vel1,vel2,tau1,tau2\n0,0,0,0,0,x,0\n";
        assert!(Trajectory::read_csv(bad.as_bytes()).is_err());
        let nonuniform =
            "time,pos1,pos2,vel1,vel2,tau1,tau2\n0,0,0,0,0,0,0\n0.1,0,0,0,0,0,0\n0.5,0,0,0,0,0,0\n";
        assert!(Trajectory::read_csv(nonuniform.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_arbitrary_values(vals in proptest::collection::vec(-1e6..1e6f64, 11)) {
            let mut t = Trajectory::default();
            for k in 0..3 {
                let s = State::new(vals[0], vals[1], vals[2], vals[3]);
                t.push(k as f64 * 0.01, s, [vals[4], vals[5]], [vals[6], vals[7]], [vals[8], vals[9]]);
            }
            let mut buf = Vec::new();
            t.write_csv(&mut buf, true).unwrap();
            let back = Trajectory::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.states, t.states);
            prop_assert_eq!(back.tau_pert, t.tau_pert);
        }
    }
}
