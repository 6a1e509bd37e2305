use serde::{Deserialize, Serialize};

/// Group-level standard deviations of the random effects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSd {
    DriftSubject,
    DriftSituation,
    BoundarySubject,
    BoundarySituation,
}

impl GroupSd {
    pub const ALL: [GroupSd; 4] = [
        GroupSd::DriftSubject,
        GroupSd::DriftSituation,
        GroupSd::BoundarySubject,
        GroupSd::BoundarySituation,
    ];

    fn offset(self) -> usize {
        match self {
            GroupSd::DriftSubject => 0,
            GroupSd::DriftSituation => 1,
            GroupSd::BoundarySubject => 2,
            GroupSd::BoundarySituation => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupSd::DriftSubject => "sigma_v_subject",
            GroupSd::DriftSituation => "sigma_v_situation",
            GroupSd::BoundarySubject => "sigma_a_subject",
            GroupSd::BoundarySituation => "sigma_a_situation",
        }
    }
}

/// Positions of each block in the flat unconstrained vector:
///
/// ```text
/// [beta0_v, beta0_a, beta0_t, beta0_z,
///  u_v_raw[J], u_a_raw[J], w_v_raw[K], w_a_raw[K],
///  log_sigma_v_subject, log_sigma_v_situation, log_sigma_a_subject, log_sigma_a_situation]
/// ```
///
/// Offsets are stored standardized (non-centered); the natural offset is the
/// standardized value times its group standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub n_subjects: usize,
    pub n_scenarios: usize,
}

impl ParameterLayout {
    pub const BETA0_V: usize = 0;
    pub const BETA0_A: usize = 1;
    pub const BETA0_T: usize = 2;
    pub const BETA0_Z: usize = 3;

    pub fn new(n_subjects: usize, n_scenarios: usize) -> Self {
        ParameterLayout {
            n_subjects,
            n_scenarios,
        }
    }

    pub fn dim(&self) -> usize {
        4 + 2 * self.n_subjects + 2 * self.n_scenarios + 4
    }

    pub fn u_v(&self, j: usize) -> usize {
        4 + j
    }

    pub fn u_a(&self, j: usize) -> usize {
        4 + self.n_subjects + j
    }

    pub fn w_v(&self, k: usize) -> usize {
        4 + 2 * self.n_subjects + k
    }

    pub fn w_a(&self, k: usize) -> usize {
        4 + 2 * self.n_subjects + self.n_scenarios + k
    }

    pub fn log_sigma(&self, g: GroupSd) -> usize {
        4 + 2 * self.n_subjects + 2 * self.n_scenarios + g.offset()
    }

    /// Names of the unconstrained coordinates, in layout order.
    pub fn names(&self, subjects: &[String], scenarios: &[String]) -> Vec<String> {
        assert_eq!(subjects.len(), self.n_subjects);
        assert_eq!(scenarios.len(), self.n_scenarios);
        let mut out: Vec<String> = ["beta0_v", "beta0_a", "beta0_t", "beta0_z"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        out.extend(subjects.iter().map(|s| format!("u_v_raw[{s}]")));
        out.extend(subjects.iter().map(|s| format!("u_a_raw[{s}]")));
        out.extend(scenarios.iter().map(|k| format!("w_v_raw[{k}]")));
        out.extend(scenarios.iter().map(|k| format!("w_a_raw[{k}]")));
        out.extend(GroupSd::ALL.iter().map(|g| format!("log_{}", g.name())));
        out
    }
}

/// Owned unconstrained model state with natural-scale accessors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    pub layout: ParameterLayout,
    pub values: Vec<f64>,
}

impl ParameterVector {
    /// All coordinates zero: unit group standard deviations, zero offsets.
    pub fn zeros(layout: ParameterLayout) -> Self {
        ParameterVector {
            layout,
            values: vec![0.0; layout.dim()],
        }
    }

    pub fn from_values(layout: ParameterLayout, values: Vec<f64>) -> Option<Self> {
        (values.len() == layout.dim()).then_some(ParameterVector { layout, values })
    }

    pub fn beta0_v(&self) -> f64 {
        self.values[ParameterLayout::BETA0_V]
    }

    pub fn beta0_a(&self) -> f64 {
        self.values[ParameterLayout::BETA0_A]
    }

    pub fn beta0_t(&self) -> f64 {
        self.values[ParameterLayout::BETA0_T]
    }

    pub fn beta0_z(&self) -> f64 {
        self.values[ParameterLayout::BETA0_Z]
    }

    pub fn set_beta0(&mut self, v: f64, a: f64, t: f64, z: f64) {
        self.values[ParameterLayout::BETA0_V] = v;
        self.values[ParameterLayout::BETA0_A] = a;
        self.values[ParameterLayout::BETA0_T] = t;
        self.values[ParameterLayout::BETA0_Z] = z;
    }

    pub fn sigma(&self, g: GroupSd) -> f64 {
        self.values[self.layout.log_sigma(g)].exp()
    }

    /// Sets a group standard deviation, keeping the natural offsets of that
    /// group fixed (their standardized values are rescaled).
    pub fn set_sigma(&mut self, g: GroupSd, sigma: f64) {
        assert!(sigma > 0.0);
        let old = self.sigma(g);
        let idx = self.offset_indices(g);
        for i in idx {
            self.values[i] *= old / sigma;
        }
        self.values[self.layout.log_sigma(g)] = sigma.ln();
    }

    fn offset_indices(&self, g: GroupSd) -> Vec<usize> {
        let l = self.layout;
        match g {
            GroupSd::DriftSubject => (0..l.n_subjects).map(|j| l.u_v(j)).collect(),
            GroupSd::BoundarySubject => (0..l.n_subjects).map(|j| l.u_a(j)).collect(),
            GroupSd::DriftSituation => (0..l.n_scenarios).map(|k| l.w_v(k)).collect(),
            GroupSd::BoundarySituation => (0..l.n_scenarios).map(|k| l.w_a(k)).collect(),
        }
    }

    pub fn u_v(&self, j: usize) -> f64 {
        self.sigma(GroupSd::DriftSubject) * self.values[self.layout.u_v(j)]
    }

    pub fn u_a(&self, j: usize) -> f64 {
        self.sigma(GroupSd::BoundarySubject) * self.values[self.layout.u_a(j)]
    }

    pub fn w_v(&self, k: usize) -> f64 {
        self.sigma(GroupSd::DriftSituation) * self.values[self.layout.w_v(k)]
    }

    pub fn w_a(&self, k: usize) -> f64 {
        self.sigma(GroupSd::BoundarySituation) * self.values[self.layout.w_a(k)]
    }

    pub fn set_u_v(&mut self, j: usize, offset: f64) {
        let i = self.layout.u_v(j);
        self.values[i] = offset / self.sigma(GroupSd::DriftSubject);
    }

    pub fn set_u_a(&mut self, j: usize, offset: f64) {
        let i = self.layout.u_a(j);
        self.values[i] = offset / self.sigma(GroupSd::BoundarySubject);
    }

    pub fn set_w_v(&mut self, k: usize, offset: f64) {
        let i = self.layout.w_v(k);
        self.values[i] = offset / self.sigma(GroupSd::DriftSituation);
    }

    pub fn set_w_a(&mut self, k: usize, offset: f64) {
        let i = self.layout.w_a(k);
        self.values[i] = offset / self.sigma(GroupSd::BoundarySituation);
    }
}
