//! Mechanic learning-rate tuner wrapped around a base optimizer.
//!
//! The base optimizer proposes updates `u_k`; Mechanic accumulates them
//! into a displacement `Δ` from the reference point and learns a scale
//! `S = Σᵢ sᵢ` by running one coin-betting style scalar tuner per entry of
//! the `β` vector. Parameters are always `w = w_ref + S·Δ`.

use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::{check_positive, check_unit_interval, StepRule};
use crate::error::{Error, Result};
use crate::tensor::{dot, norm2, StepContext};

pub const MECHANIC_BETAS: [f64; 6] = [0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999];

/// Base optimizer proposing the updates that Mechanic rescales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanicBase {
    /// AdamW direction with peak learning rate `lr`.
    Adam(AdamConfig),
    Sgd { lr: f64 },
}

impl MechanicBase {
    pub(crate) fn set_beta1(&mut self, beta1: f64) {
        if let MechanicBase::Adam(c) = self {
            c.beta1 = beta1;
        }
    }

    pub(crate) fn set_beta2(&mut self, beta2: f64) {
        if let MechanicBase::Adam(c) = self {
            c.beta2 = beta2;
        }
    }
}

/// Which form of the scalar tuner to run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanicForm {
    /// `m = max(β·m, |h|)`, `s = W/(√v + ε)`.
    #[default]
    Reference,
    /// `m = max(β·m, h)`, `s = √(W/(v + ε))`. With `h ≤ 0` throughout a
    /// descent the wealth stays 0 and the parameters never leave `w_ref`.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanicConfig {
    pub base: MechanicBase,
    #[serde(default)]
    pub form: MechanicForm,
    pub betas: Vec<f64>,
    /// Internal decay `λ_mech`.
    pub lambda: f64,
    pub s_init: f64,
    pub eps: f64,
}

impl Default for MechanicConfig {
    fn default() -> Self {
        Self {
            base: MechanicBase::Adam(AdamConfig { lr: 1.0, ..AdamConfig::default() }),
            form: MechanicForm::Reference,
            betas: MECHANIC_BETAS.to_vec(),
            lambda: 1e-2,
            s_init: 1e-4,
            eps: 1e-8,
        }
    }
}

impl MechanicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::InvalidConfig("mechanic needs at least one beta".into()));
        }
        for &b in &self.betas {
            check_unit_interval("mechanic beta", b)?;
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda = {} must be >= 0", self.lambda)));
        }
        check_positive("s_init", self.s_init)?;
        check_positive("eps", self.eps)?;
        match self.base {
            MechanicBase::Adam(c) => c.validate(),
            MechanicBase::Sgd { lr } => check_positive("sgd lr", lr),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BaseState {
    Adam(AdamState),
    Sgd { lr: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanicState {
    pub cfg: MechanicConfig,
    base: BaseState,
    pub w_ref: Vec<f64>,
    pub delta: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Disables accumulation of base updates into `Δ` (testing hook).
    pub freeze_delta: bool,
    scratch: Vec<f64>,
}

impl MechanicState {
    pub fn new(cfg: MechanicConfig, w: &[f64]) -> Self {
        let n = cfg.betas.len();
        let base = match cfg.base {
            MechanicBase::Adam(c) => BaseState::Adam(AdamState::new(c, false, w.len())),
            MechanicBase::Sgd { lr } => BaseState::Sgd { lr },
        };
        Self {
            cfg,
            base,
            w_ref: w.to_vec(),
            delta: vec![0.0; w.len()],
            m: vec![0.0; n],
            v: vec![0.0; n],
            r: vec![0.0; n],
            s: vec![0.0; n],
            freeze_delta: false,
            scratch: vec![0.0; w.len()],
        }
    }

    /// Current scale `Σᵢ sᵢ`.
    pub fn scale(&self) -> f64 {
        self.s.iter().sum()
    }

    /// Base update `u_k` for gradient `g` at parameters `w`.
    fn base_update(&mut self, w: &[f64], g: &[f64], ctx: &StepContext) {
        let wd = ctx.weight_decay;
        match &mut self.base {
            BaseState::Adam(adam) => {
                adam.direction(g, &mut self.scratch);
                let lr = adam.cfg.lr * ctx.multiplier;
                for (u, wi) in self.scratch.iter_mut().zip(w) {
                    *u = -lr * (*u + wd * wi);
                }
            }
            BaseState::Sgd { lr } => {
                let lr = *lr * ctx.multiplier;
                for ((u, gi), wi) in self.scratch.iter_mut().zip(g).zip(w) {
                    *u = -lr * (gi + wd * wi);
                }
            }
        }
    }
}

impl StepRule for MechanicState {
    fn dim(&self) -> usize {
        self.w_ref.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        self.base_update(w, g, ctx);

        // h uses Δ_k, i.e. the displacement before this step's update.
        let scale = self.scale();
        let w_norm = norm2(w);
        let mut h = dot(g, &self.delta);
        if w_norm > 0.0 && self.cfg.lambda > 0.0 {
            let coef = self.cfg.lambda * scale * norm2(g) / w_norm;
            h += coef * dot(w, &self.delta);
        }

        if !self.freeze_delta {
            for (d, u) in self.delta.iter_mut().zip(&self.scratch) {
                *d += u;
            }
        }

        let eps = self.cfg.eps;
        let form = self.cfg.form;
        let h_max = match form {
            MechanicForm::Reference => h.abs(),
            MechanicForm::Printed => h,
        };
        for i in 0..self.cfg.betas.len() {
            let beta = self.cfg.betas[i];
            self.m[i] = (beta * self.m[i]).max(h_max);
            self.v[i] = beta * beta * self.v[i] + h * h;
            self.r[i] = (beta * self.r[i] - self.s[i] * h).max(0.0);
            let wealth = self.cfg.s_init * self.m[i] + self.r[i];
            self.s[i] = match form {
                MechanicForm::Reference => wealth / (self.v[i].sqrt() + eps),
                MechanicForm::Printed => (wealth / (self.v[i] + eps)).sqrt(),
            };
        }

        let scale = self.scale();
        for ((wi, wr), d) in w.iter_mut().zip(&self.w_ref).zip(&self.delta) {
            *wi = wr + scale * d;
        }
    }
}
