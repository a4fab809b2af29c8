use crate::mixing::MixingMatrix;

/// One logged (step, agent) entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub run: usize,
    pub step: usize,
    pub agent: usize,
    /// Raw loss for loss games, raw return for reward games.
    pub loss_or_return: f64,
    /// Additive surrogate for exact runs, last trial estimate for bandit runs.
    pub rho: f64,
    pub rho_max: Option<f64>,
    pub ratio_to_optimal: Option<f64>,
    pub attention: f64,
    pub mixing_row: Vec<f64>,
}

/// Time series of one seeded run plus its final state.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub rows: Vec<RecordRow>,
    /// Largest `|sum f^A - sum f| / (1 + |sum f|)` seen at any step.
    pub max_budget_violation: f64,
    pub final_params: Vec<f64>,
    pub final_values: Vec<f64>,
    pub final_mixing: MixingMatrix,
    /// Free-form description of the run's instance, e.g. a generated network.
    pub label: Option<String>,
}

impl RunRecord {
    pub fn new(run: usize, seed: u64, a: MixingMatrix) -> Self {
        Self {
            run,
            seed,
            rows: Vec::new(),
            max_budget_violation: 0.0,
            final_params: Vec::new(),
            final_values: Vec::new(),
            final_mixing: a,
            label: None,
        }
    }

    pub fn final_total(&self) -> f64 {
        self.final_values.iter().sum()
    }

    /// Logged step indices in order.
    pub fn steps(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.step) {
                out.push(r.step);
            }
        }
        out
    }

    pub fn rows_at(&self, step: usize) -> impl Iterator<Item = &RecordRow> {
        self.rows.iter().filter(move |r| r.step == step)
    }

    pub fn last_step(&self) -> Option<usize> {
        self.rows.last().map(|r| r.step)
    }

    pub fn track_budget(&mut self, raw: &[f64], mixed: &[f64]) {
        let s: f64 = raw.iter().sum();
        let m: f64 = mixed.iter().sum();
        let v = (m - s).abs() / (1.0 + s.abs());
        if v > self.max_budget_violation || v.is_nan() {
            self.max_budget_violation = v;
        }
    }
}
