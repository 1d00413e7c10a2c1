use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use super::Controller;
use crate::dynamics::State;
use crate::{Error, Result};

/// Size of the instantaneous feature block `[cos q1, sin q1, cos q2, sin q2, qd1, qd2]`.
pub const FEATURE_DIM: usize = 6;
/// Number of velocity frames (current plus eleven previous) fed to history policies.
pub const HISTORY_WINDOW: usize = 12;
/// Velocities are divided by this before entering the network (rad/s).
pub const VELOCITY_SCALE: f64 = 20.0;

pub const POLICY_MAGIC: [u8; 4] = *b"PBNC";
pub const POLICY_VERSION: u32 = 1;

const OUTPUTS: usize = 2;

/// Fully connected tanh network with a flat parameter vector.
///
/// `layers` lists every layer width from input to output. Parameters are
/// stored layer by layer, each as a row-major weight matrix followed by its
/// bias vector. The output layer is squashed with `tanh` and scaled by the
/// torque limits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    layers: Vec<usize>,
    history_window: usize,
    params: Vec<f64>,
}

impl PolicyParams {
    /// Zero-initialized network with the given hidden widths.
    pub fn zeros(hidden: &[usize], history_window: usize) -> Result<Self> {
        let mut layers = vec![Self::input_dim_for(history_window)];
        layers.extend_from_slice(hidden);
        layers.push(OUTPUTS);
        let n = Self::count(&layers);
        Self::new(layers, history_window, vec![0.0; n])
    }

    pub fn new(layers: Vec<usize>, history_window: usize, params: Vec<f64>) -> Result<Self> {
        if history_window != 0 && history_window != HISTORY_WINDOW {
            return Err(Error::InvalidArgument(format!(
                "history window must be 0 or {HISTORY_WINDOW}, got {history_window}"
            )));
        }
        if layers.len() < 2 || layers.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "bad layer sizes {layers:?}"
            )));
        }
        if layers[0] != Self::input_dim_for(history_window) || *layers.last().unwrap() != OUTPUTS {
            return Err(Error::InvalidArgument(format!(
                "layers {layers:?} do not match input {} / output {OUTPUTS}",
                Self::input_dim_for(history_window)
            )));
        }
        let expected = Self::count(&layers);
        if params.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "parameter vector has {} entries, architecture needs {expected}",
                params.len()
            )));
        }
        Ok(Self {
            layers,
            history_window,
            params,
        })
    }

    pub fn input_dim_for(history_window: usize) -> usize {
        FEATURE_DIM + 2 * history_window
    }

    fn count(layers: &[usize]) -> usize {
        layers.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn history_window(&self) -> usize {
        self.history_window
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.layers.clone(), self.history_window, params)
    }

    /// Forward pass. Returns `tau_limit[i] * tanh(z_i)` for both outputs.
    pub fn forward(&self, features: &[f64], tau_limits: [f64; 2]) -> Result<[f64; 2]> {
        let acts = self.activations(features)?;
        let z = acts.last().unwrap();
        Ok([tau_limits[0] * z[0], tau_limits[1] * z[1]])
    }

    /// Post-tanh activations of every layer, input first.
    fn activations(&self, features: &[f64]) -> Result<Vec<Vec<f64>>> {
        if features.len() != self.input_dim() {
            return Err(Error::FeatureLength {
                expected: self.input_dim(),
                got: features.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(features.to_vec());
        let mut offset = 0;
        for w in self.layers.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let bias = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let x = acts.last().unwrap();
            let y = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    let z: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias[o];
                    z.tanh()
                })
                .collect();
            acts.push(y);
        }
        Ok(acts)
    }

    /// Gradient of output `which` with respect to every parameter, by
    /// reverse-mode accumulation through the tanh layers.
    pub fn output_gradient(
        &self,
        features: &[f64],
        tau_limits: [f64; 2],
        which: usize,
    ) -> Result<Vec<f64>> {
        let acts = self.activations(features)?;
        let mut grad = vec![0.0; self.params.len()];
        let n_layers = self.layers.len() - 1;

        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.layers.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }

        // d out / d a_L, where a_L is the output activation.
        let mut delta_a = vec![0.0; OUTPUTS];
        delta_a[which] = tau_limits[which];

        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.layers[l], self.layers[l + 1]);
            let x = &acts[l];
            let y = &acts[l + 1];
            let delta_z: Vec<f64> = (0..n_out)
                .map(|o| delta_a[o] * (1.0 - y[o] * y[o]))
                .collect();
            let off = offsets[l];
            for o in 0..n_out {
                for i in 0..n_in {
                    grad[off + o * n_in + i] = delta_z[o] * x[i];
                }
                grad[off + n_in * n_out + o] = delta_z[o];
            }
            let weights = &self.params[off..off + n_in * n_out];
            delta_a = (0..n_in)
                .map(|i| (0..n_out).map(|o| weights[o * n_in + i] * delta_z[o]).sum())
                .collect();
        }
        Ok(grad)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.layers.len() + 8 * self.params.len());
        out.extend_from_slice(&POLICY_MAGIC);
        out.extend_from_slice(&POLICY_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.history_window as u32).to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for &w in &self.layers {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
        for &v in &self.params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::format("policy file", msg.to_owned());
        let mut cursor = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cursor.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = cursor.split_at(n);
            cursor = tail;
            Ok(head)
        };
        if take(4)? != POLICY_MAGIC {
            return Err(bad("bad magic"));
        }
        let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let version = read_u32(take(4)?);
        if version != POLICY_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let history_window = read_u32(take(4)?) as usize;
        let n_layers = read_u32(take(4)?) as usize;
        if n_layers > 1024 {
            return Err(bad("implausible layer count"));
        }
        let layers = (0..n_layers)
            .map(|_| take(4).map(|b| read_u32(b) as usize))
            .collect::<Result<Vec<_>>>()?;
        let n_params = Self::count(&layers);
        let params = (0..n_params)
            .map(|_| take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())))
            .collect::<Result<Vec<_>>>()?;
        if !cursor.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Self::new(layers, history_window, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Runs a [`PolicyParams`] network as a feedback controller.
#[derive(Debug, Clone)]
pub struct PolicyController {
    policy: PolicyParams,
    tau_limits: [f64; 2],
    history: VecDeque<[f64; 2]>,
    a_prev: [f64; 2],
    elapsed: f64,
    fault: bool,
    features: Vec<f64>,
}

impl PolicyController {
    pub fn new(policy: PolicyParams, tau_limits: [f64; 2]) -> Self {
        let cap = policy.history_window().max(1);
        let dim = policy.input_dim();
        Self {
            policy,
            tau_limits,
            history: VecDeque::with_capacity(cap),
            a_prev: [0.0; 2],
            elapsed: 0.0,
            fault: false,
            features: Vec::with_capacity(dim),
        }
    }

    pub fn policy(&self) -> &PolicyParams {
        &self.policy
    }

    pub fn previous_action(&self) -> [f64; 2] {
        self.a_prev
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Feature vector for a measurement given the current history buffer.
    pub fn encode(&self, s: &State) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.policy.input_dim());
        encode_into(&mut f, s, &self.history, self.policy.history_window());
        f
    }
}

fn encode_into(out: &mut Vec<f64>, s: &State, history: &VecDeque<[f64; 2]>, window: usize) {
    out.clear();
    out.extend_from_slice(&[
        s.q1.cos(),
        s.q1.sin(),
        s.q2.cos(),
        s.q2.sin(),
        s.qd1 / VELOCITY_SCALE,
        s.qd2 / VELOCITY_SCALE,
    ]);
    if window > 0 {
        // Oldest first; short histories are padded with the oldest frame.
        let pad = window - history.len();
        let first = history.front().copied().unwrap_or([s.qd1, s.qd2]);
        for v in std::iter::repeat_n(first, pad).chain(history.iter().copied()) {
            out.push(v[0] / VELOCITY_SCALE);
            out.push(v[1] / VELOCITY_SCALE);
        }
    }
}

impl Controller for PolicyController {
    fn reset(&mut self) {
        self.history.clear();
        self.a_prev = [0.0; 2];
        self.elapsed = 0.0;
        self.fault = false;
    }

    fn get_control(&mut self, measured: &State, t: f64) -> [f64; 2] {
        self.elapsed = t;
        if !measured.is_finite() {
            self.fault = true;
            self.a_prev = [0.0; 2];
            return [0.0; 2];
        }
        let window = self.policy.history_window();
        if window > 0 {
            if self.history.len() == window {
                self.history.pop_front();
            }
            self.history.push_back(measured.velocities());
        }
        let mut features = std::mem::take(&mut self.features);
        encode_into(&mut features, measured, &self.history, window);
        let out = self
            .policy
            .forward(&features, self.tau_limits)
            .unwrap_or([0.0; 2]);
        self.features = features;
        self.a_prev = out;
        out
    }

    fn faulted(&self) -> bool {
        self.fault
    }
}
