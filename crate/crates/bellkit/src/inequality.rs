//! Bell-type inequality evaluation and the two-step averaging consistency
//! check for hidden-variable models with polarization-conditioned densities.
//!
//! Every report is normalized so that `violated <=> lhs > rhs + TAU_INEQ`
//! regardless of the inequality's textbook orientation, which keeps the
//! downstream handling uniform.

use serde::Serialize;

use crate::types::Sign;

/// Analytic comparison tolerance. Frequency inputs carry their own
/// statistical tolerance instead (see the cross-context analysis).
pub const TAU_INEQ: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive margin means violated.
    pub margin: f64,
    pub violated: bool,
}

impl InequalityReport {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.to_string(), lhs, rhs, margin: lhs - rhs, violated: lhs > rhs + TAU_INEQ }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{name} = {value} outside {range}")]
pub struct DomainError {
    pub name: &'static str,
    pub value: f64,
    pub range: &'static str,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("unknown inequality `{0}`; expected bell, wigner, or chsh")]
pub struct InequalityKindError(pub String);

fn check_correlation(name: &'static str, value: f64) -> Result<(), DomainError> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(DomainError { name, value, range: "[-1, 1]" })
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), DomainError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(DomainError { name, value, range: "[0, 1]" })
    }
}

/// Covariance form: `|<a,b> - <c,b>| <= 1 - <a,c>` for `+/-1` variables on
/// one probability space.
pub fn bell_covariance(e_ab: f64, e_cb: f64, e_ac: f64) -> Result<InequalityReport, DomainError> {
    check_correlation("e_ab", e_ab)?;
    check_correlation("e_cb", e_cb)?;
    check_correlation("e_ac", e_ac)?;
    Ok(InequalityReport::new("bell-covariance", (e_ab - e_cb).abs(), 1.0 - e_ac))
}

/// Probability form: `P(a=+1,b=+1) + P(b=-1,c=+1) >= P(a=+1,c=+1)`.
///
/// The textbook orientation is a lower bound, so the report swaps sides:
/// it stores `lhs = P(a=+1,c=+1)` and `rhs = P(a=+1,b=+1) + P(b=-1,c=+1)`,
/// keeping `violated <=> margin > 0`.
pub fn wigner(p_ab_pp: f64, p_bc_mp: f64, p_ac_pp: f64) -> Result<InequalityReport, DomainError> {
    check_probability("p_ab_pp", p_ab_pp)?;
    check_probability("p_bc_mp", p_bc_mp)?;
    check_probability("p_ac_pp", p_ac_pp)?;
    Ok(InequalityReport::new("wigner", p_ac_pp, p_ab_pp + p_bc_mp))
}

/// `|E(a,b) + E(a,b') + E(a',b) - E(a',b')| <= 2`.
pub fn chsh(
    e_ab: f64,
    e_ab2: f64,
    e_a2b: f64,
    e_a2b2: f64,
) -> Result<InequalityReport, DomainError> {
    check_correlation("e_ab", e_ab)?;
    check_correlation("e_ab2", e_ab2)?;
    check_correlation("e_a2b", e_a2b)?;
    check_correlation("e_a2b2", e_a2b2)?;
    Ok(InequalityReport::new("chsh", (e_ab + e_ab2 + e_a2b - e_a2b2).abs(), 2.0))
}

// ---------------------------------------------------------------------------
// Two-step averaging over polarization-conditioned hidden densities
// ---------------------------------------------------------------------------

/// Station outcome as a function of the settings `(a, b)`, the pair
/// polarizations `(u, v)` and the hidden value `lambda`.
pub type StationFn = dyn Fn(f64, f64, f64, f64, f64) -> Sign + Send + Sync;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("conditioning on zero-mass polarization cell (u={iu}, v={iv})")]
    ZeroMassCell { iu: usize, iv: usize },
}

/// Joint weights `P(u, v, lambda)` on finite grids, stored row-major in
/// `(u, v, lambda)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointWeights {
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub p: Vec<f64>,
}

impl JointWeights {
    pub fn new(
        u_grid: Vec<f64>,
        v_grid: Vec<f64>,
        lambda_grid: Vec<f64>,
        p: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let expected = u_grid.len() * v_grid.len() * lambda_grid.len();
        if p.len() != expected {
            return Err(ModelError::Invalid(format!(
                "expected {expected} weights, got {}",
                p.len()
            )));
        }
        if expected == 0 {
            return Err(ModelError::Invalid("empty grid".into()));
        }
        if p.iter().any(|w| *w < 0.0) {
            return Err(ModelError::Invalid("negative weight".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { u_grid, v_grid, lambda_grid, p })
    }

    fn idx(&self, iu: usize, iv: usize, il: usize) -> usize {
        (iu * self.v_grid.len() + iv) * self.lambda_grid.len() + il
    }
}

/// Pair-polarization density `F(u,v)` plus one conditional hidden density
/// per cell. Cells with `F(u,v) = 0` carry no conditional: they are excluded
/// from the model domain rather than assigned an arbitrary one.
#[derive(Clone, Debug, PartialEq)]
pub struct LeggetModel {
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// `nu x nv`, row-major.
    pub f: Vec<f64>,
    /// Conditional density over `lambda_grid` per `(u, v)`; `None` marks an
    /// excluded zero-mass cell.
    pub rho: Vec<Option<Vec<f64>>>,
}

impl LeggetModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let nu = self.u_grid.len();
        let nv = self.v_grid.len();
        let nl = self.lambda_grid.len();
        if self.f.len() != nu * nv || self.rho.len() != nu * nv {
            return Err(ModelError::Invalid("grid/table size mismatch".into()));
        }
        if self.f.iter().any(|x| *x < 0.0) {
            return Err(ModelError::Invalid("negative F cell".into()));
        }
        let total: f64 = self.f.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::Invalid(format!("F sums to {total}, not 1")));
        }
        for (cell, rho) in self.rho.iter().enumerate() {
            match rho {
                Some(d) => {
                    if d.len() != nl {
                        return Err(ModelError::Invalid("conditional length mismatch".into()));
                    }
                    if d.iter().any(|x| *x < 0.0) {
                        return Err(ModelError::Invalid("negative conditional entry".into()));
                    }
                    let s: f64 = d.iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(ModelError::Invalid(format!(
                            "conditional at cell {cell} sums to {s}, not 1"
                        )));
                    }
                }
                None => {
                    if self.f[cell] != 0.0 {
                        return Err(ModelError::Invalid(format!(
                            "cell {cell} has positive mass but no conditional"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The conditional hidden density at `(u, v)`. Asking for an excluded
    /// cell is an error naming the cell.
    pub fn conditional(&self, iu: usize, iv: usize) -> Result<&[f64], ModelError> {
        self.rho[iu * self.v_grid.len() + iv]
            .as_deref()
            .ok_or(ModelError::ZeroMassCell { iu, iv })
    }
}

/// Marginalizes and conditions a joint `P(u,v,lambda)` into a two-step
/// model: `F(u,v) = sum_lambda P`, `rho_uv = P / F` where `F > 0`.
pub fn model_from_joint(joint: &JointWeights) -> Result<LeggetModel, ModelError> {
    let nu = joint.u_grid.len();
    let nv = joint.v_grid.len();
    let nl = joint.lambda_grid.len();
    let mut f = vec![0.0; nu * nv];
    let mut rho = Vec::with_capacity(nu * nv);
    for iu in 0..nu {
        for iv in 0..nv {
            let cell = iu * nv + iv;
            let mass: f64 = (0..nl).map(|il| joint.p[joint.idx(iu, iv, il)]).sum();
            f[cell] = mass;
            if mass == 0.0 {
                rho.push(None);
            } else {
                rho.push(Some(
                    (0..nl).map(|il| joint.p[joint.idx(iu, iv, il)] / mass).collect(),
                ));
            }
        }
    }
    let model = LeggetModel {
        u_grid: joint.u_grid.clone(),
        v_grid: joint.v_grid.clone(),
        lambda_grid: joint.lambda_grid.clone(),
        f,
        rho,
    };
    model.validate()?;
    Ok(model)
}

/// The two-step average: for each polarization cell, average `A.B` over the
/// conditional hidden density, then average the results over `F(u,v)`.
pub fn leggett_two_step(
    model: &LeggetModel,
    station_a: &StationFn,
    station_b: &StationFn,
    a: f64,
    b: f64,
) -> Result<f64, ModelError> {
    model.validate()?;
    let nv = model.v_grid.len();
    let mut total = 0.0;
    for (iu, &u) in model.u_grid.iter().enumerate() {
        for (iv, &v) in model.v_grid.iter().enumerate() {
            let weight = model.f[iu * nv + iv];
            if weight == 0.0 {
                continue;
            }
            let rho = self::LeggetModel::conditional(model, iu, iv)?;
            let mut inner = 0.0;
            for (il, &lambda) in model.lambda_grid.iter().enumerate() {
                let product =
                    station_a(a, b, u, v, lambda).value() * station_b(a, b, u, v, lambda).value();
                inner += product * rho[il];
            }
            total += inner * weight;
        }
    }
    Ok(total)
}

/// The single-measure average `E(A.B) = sum P(u,v,lambda) A B` over the
/// joint weights directly.
pub fn leggett_joint_average(
    joint: &JointWeights,
    station_a: &StationFn,
    station_b: &StationFn,
    a: f64,
    b: f64,
) -> Result<f64, ModelError> {
    // Re-validate via the constructor invariants.
    JointWeights::new(
        joint.u_grid.clone(),
        joint.v_grid.clone(),
        joint.lambda_grid.clone(),
        joint.p.clone(),
    )?;
    let mut total = 0.0;
    for (iu, &u) in joint.u_grid.iter().enumerate() {
        for (iv, &v) in joint.v_grid.iter().enumerate() {
            for (il, &lambda) in joint.lambda_grid.iter().enumerate() {
                let w = joint.p[joint.idx(iu, iv, il)];
                if w == 0.0 {
                    continue;
                }
                total += w
                    * station_a(a, b, u, v, lambda).value()
                    * station_b(a, b, u, v, lambda).value();
            }
        }
    }
    Ok(total)
}
