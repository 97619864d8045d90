//! The parameter cascade: raw tuple, derived sequences, and the exact
//! validator.
//!
//! Every scale in the iteration is a power of `λ_q = a^(b^q)`, so each
//! admissibility condition is a monomial inequality and reduces to an exact
//! comparison of rational exponents — no floating point is involved in the
//! pass/fail decision of those rows. Only the lower bounds on `a` itself
//! (whose exponent `c` involves a logarithm) and the two convergent series
//! are evaluated in floating point, with generous documented safety margins.
//!
//! At certified scale `a` is far too large to represent as a number; it is
//! carried as `log₂ a` and all derived sequences are materialised in
//! log₂-space. Desk-scale tuples keep `a` small enough that the actual
//! grids, radii and frequencies are representable as `f64`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::jets::JetParams;
use crate::scheme::SchemeError;

/// Exact rational scalar used for all exponent arithmetic.
pub type Frac = BigRational;

/// `n/d` as an exact rational.
pub fn fr(n: i64, d: i64) -> Frac {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as an exact rational.
pub fn fi(n: i64) -> Frac {
    BigRational::from_integer(BigInt::from(n))
}

/// Raw parameter tuple. Rational fields are exact; the `f64` fields are
/// measured/diagnostic constants that never enter an exactness-critical
/// comparison.
#[derive(Clone, Debug)]
pub struct RawParams {
    pub d: usize,
    /// `log₂ a`; the base is always a power of two in our tuples.
    pub a_log2: u64,
    pub b: u64,
    pub iota: Frac,
    pub sigma: Frac,
    pub epsilon: Frac,
    pub alpha: Frac,
    pub beta: Frac,
    /// `ς` (transverse-radius exponent, `r_⊥ = λ^{-2ς}`).
    pub varsigma: Frac,
    /// `τ` (parallel-radius exponent, `r_∥ = λ^{-τ}`).
    pub tau: Frac,
    /// Exponent of the noise-truncation frequency, `f(q) = λ_q^{s₄}`.
    pub s4: Frac,
    /// The `L^p` integrability exponent of the cascade.
    pub p_exp: Frac,
    pub n_star: u64,
    /// The constant `A` of the moment bookkeeping.
    pub big_a: u64,
    /// The moment order `J`.
    pub j_cap: u64,
    /// Measured stand-in for the universal constant `L`.
    pub l_const: f64,
    /// Measured stand-ins for `M₀` and `M`.
    pub m_0: f64,
    pub m_const: f64,
    pub e_lo: f64,
    pub e_hi: f64,
    pub e_dot_max: f64,
    /// Desk-scale override of the mollification scale `ℓ` (the formula value
    /// is astronomically small outside the asymptotic regime); the paper
    /// sequence is still derived and reported.
    pub ell_override: Option<f64>,
    /// Desk-scale override of the temporal oscillation speed `μ`.
    pub mu_override: Option<f64>,
}

/// Comparison relation of one cascade row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
            Rel::Eq => "==",
        }
    }

    /// Logical negation, used by the mutation test: a validator whose row
    /// direction were flipped must reject the certified tuple.
    pub fn negate(self) -> NegatedRel {
        NegatedRel(self)
    }

    fn eval<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Rel::Le => lhs <= rhs,
            Rel::Lt => lhs < rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
            Rel::Eq => lhs == rhs,
        }
    }
}

/// Negation of a relation (not a flipped direction: the complement).
pub struct NegatedRel(Rel);

impl NegatedRel {
    fn eval<T: PartialOrd>(&self, lhs: &T, rhs: &T) -> bool {
        !self.0.eval(lhs, rhs)
    }
}

/// Value pair of one row: exact rationals for monomial-exponent rows,
/// base-2 logarithms (or plain reals) for the few analytic rows.
#[derive(Clone, Debug)]
pub enum RowValues {
    Exact { lhs: Frac, rhs: Frac },
    Real { lhs: f64, rhs: f64 },
}

/// One validated condition with its provenance group and margin.
#[derive(Clone, Debug)]
pub struct CascadeRow {
    pub name: String,
    pub group: &'static str,
    pub relation: Rel,
    pub values: RowValues,
    pub pass: bool,
    /// `rhs − lhs` (so positive margin means slack for a `≤` row).
    pub margin: String,
}

impl CascadeRow {
    fn exact(name: impl Into<String>, group: &'static str, lhs: Frac, rel: Rel, rhs: Frac) -> Self {
        let pass = rel.eval(&lhs, &rhs);
        let margin = (&rhs - &lhs).to_string();
        CascadeRow {
            name: name.into(),
            group,
            relation: rel,
            values: RowValues::Exact { lhs, rhs },
            pass,
            margin,
        }
    }

    fn real(name: impl Into<String>, group: &'static str, lhs: f64, rel: Rel, rhs: f64) -> Self {
        let pass = rel.eval(&lhs, &rhs);
        CascadeRow {
            name: name.into(),
            group,
            relation: rel,
            values: RowValues::Real { lhs, rhs },
            pass,
            margin: format!("{:e}", rhs - lhs),
        }
    }

    /// Evaluate this row under the negated relation (mutation probe).
    pub fn holds_negated(&self) -> bool {
        let neg = self.relation.negate();
        match &self.values {
            RowValues::Exact { lhs, rhs } => neg.eval(lhs, rhs),
            RowValues::Real { lhs, rhs } => neg.eval(lhs, rhs),
        }
    }

    pub fn csv_line(&self) -> String {
        let (l, r) = match &self.values {
            RowValues::Exact { lhs, rhs } => (lhs.to_string(), rhs.to_string()),
            RowValues::Real { lhs, rhs } => (format!("{lhs:e}"), format!("{rhs:e}")),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.group,
            self.name.replace(',', ";"),
            l,
            self.relation.symbol(),
            r,
            self.pass,
            self.margin
        )
    }
}

/// Full validation report.
#[derive(Clone, Debug)]
pub struct CascadeReport {
    pub rows: Vec<CascadeRow>,
}

impl CascadeReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&CascadeRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,condition,lhs,relation,rhs,pass,margin\n");
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Parameter set with derived sequences; construction runs the validator
/// and stores the report (desk tuples are allowed to fail asymptotic rows —
/// callers decide what to enforce).
#[derive(Clone, Debug)]
pub struct ParameterSet {
    pub raw: RawParams,
    pub report: CascadeReport,
}

/// Derive the parameter set: materialise sequences and validate every row.
pub fn derive_parameters(raw: RawParams) -> Result<ParameterSet, SchemeError> {
    if raw.d < 3 {
        return Err(SchemeError::BadParams(format!("dimension must be ≥ 3, got {}", raw.d)));
    }
    if raw.b < 2 || raw.a_log2 == 0 {
        return Err(SchemeError::BadParams("need b ≥ 2 and a ≥ 2".into()));
    }
    for (name, v) in [("α", &raw.alpha), ("β", &raw.beta)] {
        if !(v > &Frac::zero() && v < &Frac::one()) {
            return Err(SchemeError::BadParams(format!("{name} must lie in (0,1)")));
        }
    }
    if raw.e_lo <= 0.0 || raw.e_hi < raw.e_lo {
        return Err(SchemeError::BadParams("energy bounds need 0 < e_lo ≤ e_hi".into()));
    }
    let report = validate_rows(&raw);
    Ok(ParameterSet { raw, report })
}

impl ParameterSet {
    /// `x := α/(σ−2ε)`, the ubiquitous normalised smallness parameter.
    pub fn x(&self) -> Frac {
        &self.raw.alpha / (&self.raw.sigma - fi(2) * &self.raw.epsilon)
    }

    /// `log₂ λ_q = log₂(a) · b^q`.
    pub fn log2_lambda(&self, q: u32) -> f64 {
        self.raw.a_log2 as f64 * (self.raw.b as f64).powi(q as i32)
    }

    /// `λ_q` as `f64` (infinite at certified scale — desk tuples only).
    pub fn lambda(&self, q: u32) -> f64 {
        self.log2_lambda(q).exp2()
    }

    /// `δ_q`: `1/4` for `q ∈ {0,1}`, `(1/16)(λ₂/λ_q)^{2β}` for `q ≥ 2`.
    pub fn delta(&self, q: u32) -> f64 {
        if q <= 1 {
            0.25
        } else {
            let beta = self.raw.beta.to_f64().expect("β fits f64");
            let log2 = -4.0 + 2.0 * beta * (self.log2_lambda(2) - self.log2_lambda(q));
            log2.exp2()
        }
    }

    /// `log₂ ℓ_q` from `ℓ^{σ−2ε} = λ_{q+1}^{−2α} λ_q^{−2d−10}` (the paper
    /// sequence, ignoring any desk override).
    pub fn log2_ell_formula(&self, q: u32) -> f64 {
        let alpha = self.raw.alpha.to_f64().expect("α fits f64");
        let s2e = (&self.raw.sigma - fi(2) * &self.raw.epsilon).to_f64().expect("σ−2ε fits f64");
        (-2.0 * alpha * self.log2_lambda(q + 1)
            - (2.0 * self.raw.d as f64 + 10.0) * self.log2_lambda(q))
            / s2e
    }

    /// Mollification scale actually used at level `q`.
    pub fn ell(&self, q: u32) -> f64 {
        self.raw.ell_override.unwrap_or_else(|| self.log2_ell_formula(q).exp2())
    }

    /// `o_q = −Σ_{r≥q} ℓ_r` of the paper sequence (time-shift bookkeeping).
    pub fn o_shift(&self, q: u32) -> f64 {
        let mut total = 0.0;
        for r in q..q + 64 {
            let term = self.log2_ell_formula(r).exp2();
            total += term;
            if term < 1e-300 {
                break;
            }
        }
        -total
    }

    /// Noise truncation frequency `f(q) = λ_q^{s₄}`.
    pub fn f_freq(&self, q: u32) -> f64 {
        let s4 = self.raw.s4.to_f64().expect("s₄ fits f64");
        (s4 * self.log2_lambda(q)).exp2()
    }

    /// Jet scales at the step `q → q+1`: `λ = λ_{q+1}`, `r_⊥ = λ^{−2ς}`,
    /// `r_∥ = λ^{−τ}`, `μ = λ^{dς}` (or the desk override).
    pub fn jet_params(&self, q: u32) -> Result<JetParams, SchemeError> {
        let log2_l = self.log2_lambda(q + 1);
        let lambda = log2_l.exp2();
        if !lambda.is_finite() {
            return Err(SchemeError::BadParams(
                "λ_{q+1} is not representable — jet construction is desk-scale only".into(),
            ));
        }
        let vs = self.raw.varsigma.to_f64().expect("ς fits f64");
        let tau = self.raw.tau.to_f64().expect("τ fits f64");
        let r_perp = (-2.0 * vs * log2_l).exp2();
        let r_par = (-tau * log2_l).exp2();
        let mu = self
            .raw
            .mu_override
            .unwrap_or_else(|| (self.raw.d as f64 * vs * log2_l).exp2());
        Ok(JetParams::new(lambda, r_perp, r_par, mu)?)
    }

    /// `4 Σ_{r≥1} δ_r^{1/2}`, summed directly in log space.
    pub fn delta_series(&self) -> f64 {
        let mut total = self.delta(1).sqrt();
        for r in 2..200u32 {
            let term = self.delta(r).sqrt();
            total += term;
            if term < 1e-300 {
                break;
            }
        }
        4.0 * total
    }

    /// `Σ_{r≥0} ℓ_r` of the paper sequence.
    pub fn ell_series(&self) -> f64 {
        -self.o_shift(0)
    }
}

/// `c_A = f_A(x_max) = 1/(e·ln(1 + 1/A))`, increasing in `A`; the cascade
/// constant is `c = max_{A ∈ [10, b−1]} c_A = c_{max(10, b−1)}`.
fn c_constant(big_a: u64, b: u64) -> f64 {
    let a_eff = (b.saturating_sub(1)).max(big_a).max(10) as f64;
    1.0 / (std::f64::consts::E * (1.0_f64 / a_eff).ln_1p())
}

fn validate_rows(raw: &RawParams) -> CascadeReport {
    let d = fi(raw.d as i64);
    let b = fi(raw.b as i64);
    let one = Frac::one();
    let two = fi(2);
    let s2e = &raw.sigma - &two * &raw.epsilon;
    let x = &raw.alpha / &s2e;
    let s1 = &two * &raw.varsigma;
    let s2 = raw.tau.clone();
    let s3 = &d * &raw.varsigma;
    let s4 = raw.s4.clone();
    let p = raw.p_exp.clone();
    let iota = raw.iota.clone();
    let cap_sigma = (&d - &one) * &s1 + &s2; // Σ = (d−1)s₁ + s₂
    let kx = |cd: i64, c0: i64| (fi(cd) * &d + fi(c0)) * &x; // (cd·d + c0)·x

    let mut rows: Vec<CascadeRow> = Vec::new();

    // --- §3.3.1 bullet conditions -------------------------------------
    rows.push(CascadeRow::exact(
        "(90d+208)·α <= σ−2ε",
        "choice-of-parameters",
        (fi(90) * &d + fi(208)) * &raw.alpha,
        Rel::Le,
        s2e.clone(),
    ));
    rows.push(CascadeRow::exact(
        "β <= (2d+6)(σ−2ε)(4−σ+2ε)/(2−σ+2ε)²",
        "choice-of-parameters",
        raw.beta.clone(),
        Rel::Le,
        (fi(2) * &d + fi(6)) * &s2e * (fi(4) - &s2e) / ((fi(2) - &s2e) * (fi(2) - &s2e)),
    ));
    rows.push(CascadeRow::exact(
        "10 <= A",
        "choice-of-parameters",
        fi(10),
        Rel::Le,
        fi(raw.big_a as i64),
    ));
    rows.push(CascadeRow::exact(
        "A <= b−1",
        "choice-of-parameters",
        fi(raw.big_a as i64),
        Rel::Le,
        &b - &one,
    ));
    // a-lower bounds: log₂ a >= c·log₂ K (c involves a logarithm, so these
    // three rows are floating-point with huge margins).
    let c_max = c_constant(raw.big_a, raw.b);
    let jla = raw.j_cap as f64 * raw.l_const * raw.big_a as f64;
    let a_log2 = raw.a_log2 as f64;
    rows.push(CascadeRow::real(
        "log2(a) >= c·log2((8N*+32)JLA)",
        "choice-of-parameters",
        c_max * ((8.0 * raw.n_star as f64 + 32.0) * jla).log2(),
        Rel::Le,
        a_log2,
    ));
    rows.push(CascadeRow::real(
        "log2(a) >= c·log2((8N*+6)LA)",
        "energy-control",
        c_max * ((8.0 * raw.n_star as f64 + 6.0) * raw.l_const * raw.big_a as f64).log2(),
        Rel::Le,
        a_log2,
    ));
    rows.push(CascadeRow::real(
        "log2(a) >= c·log2(32JLA)",
        "regularity",
        c_max * (32.0 * jla).log2(),
        Rel::Le,
        a_log2,
    ));
    // a^{βb²} ≥ 3 ⇔ βb²·log₂a ≥ log₂3; log₂3 = 1.58496… < 1585/1000, so the
    // exact-rational comparison against 1585/1000 is sufficient.
    rows.push(CascadeRow::exact(
        "β·b²·log2(a) >= 1585/1000 (a^{βb²} >= 3)",
        "choice-of-parameters",
        fr(1585, 1000),
        Rel::Le,
        &raw.beta * &b * &b * fi(raw.a_log2 as i64),
    ));
    rows.push(CascadeRow::exact(
        "(ι−1)·σ·α > 2β·b³",
        "choice-of-parameters",
        fi(2) * &raw.beta * &b * &b * &b,
        Rel::Lt,
        (&iota - &one) * &raw.sigma * &raw.alpha,
    ));
    rows.push(CascadeRow::exact(
        "α·b > 2d+4N*",
        "choice-of-parameters",
        fi(2) * &d + fi(4 * raw.n_star as i64),
        Rel::Lt,
        &raw.alpha * &b,
    ));
    rows.push(CascadeRow::exact(
        "σ >= ι−1",
        "choice-of-parameters",
        &iota - &one,
        Rel::Le,
        raw.sigma.clone(),
    ));
    rows.push(CascadeRow::exact("σ < 1", "choice-of-parameters", raw.sigma.clone(), Rel::Lt, one.clone()));
    rows.push(CascadeRow::exact(
        "ε < σ/2",
        "choice-of-parameters",
        raw.epsilon.clone(),
        Rel::Lt,
        &raw.sigma / &two,
    ));
    rows.push(CascadeRow::exact("N* >= 2", "choice-of-parameters", fi(2), Rel::Le, fi(raw.n_star as i64)));
    // b ∈ 2ς_d·N (needed so λ^{2ς} is an integer power of a).
    let vs_den = raw.varsigma.denom().to_i64().unwrap_or(i64::MAX);
    rows.push(CascadeRow::exact(
        "b ≡ 0 mod 2ς_d",
        "choice-of-parameters",
        fi((raw.b % (2 * vs_den as u64).max(1)) as i64),
        Rel::Eq,
        fi(0),
    ));

    // --- window memberships -------------------------------------------
    rows.push(CascadeRow::exact(
        "ς >= 1/3 + (2/3)x",
        "windows",
        fr(1, 3) + fr(2, 3) * &x,
        Rel::Le,
        raw.varsigma.clone(),
    ));
    rows.push(CascadeRow::exact(
        "ς <= 1/2 − (15d+34)x",
        "windows",
        raw.varsigma.clone(),
        Rel::Le,
        fr(1, 2) - kx(15, 34),
    ));
    rows.push(CascadeRow::exact(
        "τ >= (20d+48)x",
        "windows",
        kx(20, 48),
        Rel::Le,
        raw.tau.clone(),
    ));
    rows.push(CascadeRow::exact(
        "τ <= 6ς−2+(20d+44)x",
        "windows",
        raw.tau.clone(),
        Rel::Le,
        fi(6) * &raw.varsigma - &two + kx(20, 44),
    ));
    rows.push(CascadeRow::exact("p > 1", "windows", one.clone(), Rel::Lt, p.clone()));
    let p_cap1 = &cap_sigma / (&d * &s1 + &s2 - &one + kx(20, 46));
    let p_cap2 = fi(2) * &cap_sigma / (&cap_sigma + (&d - &two) * &s4 + kx(20, 48));
    rows.push(CascadeRow::exact(
        "p <= ((d−1)s₁+s₂)/(ds₁+s₂−1+(20d+46)x)",
        "windows",
        p.clone(),
        Rel::Le,
        p_cap1.clone(),
    ));
    rows.push(CascadeRow::exact(
        "p <= 2Σ/(Σ+(d−2)s₄+(20d+48)x)",
        "windows",
        p.clone(),
        Rel::Le,
        p_cap2.clone(),
    ));
    // Noise-frequency window: s₄ strictly inside
    // (2βb³/((ι−1)σ), min{(2αb(ι−1)−2βb³)/((ι−1)(1−σ)), 2ς}).
    let f_lo = fi(2) * &raw.beta * &b * &b * &b / ((&iota - &one) * &raw.sigma);
    let f_hi1 = (fi(2) * &raw.alpha * &b * (&iota - &one) - fi(2) * &raw.beta * &b * &b * &b)
        / ((&iota - &one) * (&one - &raw.sigma));
    rows.push(CascadeRow::exact(
        "s₄ > 2βb³/((ι−1)σ)",
        "windows",
        f_lo.clone(),
        Rel::Lt,
        s4.clone(),
    ));
    rows.push(CascadeRow::exact(
        "s₄ < (2αb(ι−1)−2βb³)/((ι−1)(1−σ))",
        "windows",
        s4.clone(),
        Rel::Lt,
        f_hi1,
    ));
    rows.push(CascadeRow::exact("s₄ < 2ς", "windows", s4.clone(), Rel::Lt, &two * &raw.varsigma));
    rows.push(CascadeRow::exact(
        "frequency window nonempty: 2βb³/((ι−1)σ) < 2ς",
        "windows",
        f_lo,
        Rel::Lt,
        &two * &raw.varsigma,
    ));

    // --- essential bounds (a)–(h): exponents of λ_{q+1} ----------------
    // r_⊥ = λ^{−s₁}, r_∥ = λ^{−s₂}, μ = λ^{s₃}, f(q+1) = λ^{s₄},
    // f(q) = λ^{s₄/b}; a condition `X ≤ λ^{−k·x}` becomes `exp(X) ≤ −k·x`.
    let ess = |name: &str, lhs: Frac, cd: i64, c0: i64| {
        CascadeRow::exact(
            format!("essential ({name}): exponent <= −({cd}d+{c0})x"),
            "essential-bounds",
            lhs,
            Rel::Le,
            -(fi(cd) * &d + fi(c0)) * &x,
        )
    };
    let half = fr(1, 2);
    rows.push(ess("a", &half * &s1 - &half, 10, 24));
    rows.push(ess(
        "b",
        -(&s1) * ((&d - &one) / &iota - (&d - &one) / &two) - &s2 * (&one / &iota - &half) + &one,
        14,
        36,
    ));
    rows.push(ess(
        "c",
        -(&s1) * ((&d - &one) / &p - (&d - fi(3)) / &two) - &s2 * (&one / &p - fr(3, 2)) + &s3,
        10,
        24,
    ));
    rows.push(ess(
        "d",
        (&d - &two) / &two * &s4 - &s1 * ((&d - &one) / &p - (&d - &one) / &two)
            - &s2 * (&one / &p - &half),
        10,
        24,
    ));
    rows.push(ess(
        "e",
        (&d - &two) / &two * &s4 / &b - &s1 * ((&d - &one) / &p - (&d - &one))
            - &s2 * (&one / &p - &one)
            - &s3,
        12,
        26,
    ));
    rows.push(ess(
        "f",
        -(&s1) * ((&d - &one) / &p - &d) - &s2 * (&one / &p - &one) - &one,
        20,
        46,
    ));
    rows.push(ess("g", -(&s1) + &s2, 20, 46));
    rows.push(ess("h", (&d - &one) / &two * &s1 + &half * &s2 - &s3, 20, 46));

    // --- generation tables ---------------------------------------------
    rows.push(CascadeRow::exact(
        "gen: ι <= 2Σ/(Σ+2+(28d+72)x)",
        "generation-tables",
        iota.clone(),
        Rel::Le,
        fi(2) * &cap_sigma / (&cap_sigma + &two + kx(28, 72)),
    ));
    rows.push(CascadeRow::exact(
        "gen1: s₁ <= 1−(20d+48)x",
        "generation-tables",
        s1.clone(),
        Rel::Le,
        &one - kx(20, 48),
    ));
    rows.push(CascadeRow::exact(
        "gen1: s₂ <= s₁−(20d+46)x",
        "generation-tables",
        s2.clone(),
        Rel::Le,
        &s1 - kx(20, 46),
    ));
    rows.push(CascadeRow::exact(
        "gen1: s₃ >= (d−1)s₁/2+s₂/2+(20d+46)x",
        "generation-tables",
        (&d - &one) / &two * &s1 + &half * &s2 + kx(20, 46),
        Rel::Le,
        s3.clone(),
    ));
    rows.push(CascadeRow::exact(
        "gen1: p <= 2Σ/((d−3)s₁+3s₂+2s₃+(20d+48)x)",
        "generation-tables",
        &p * ((&d - fi(3)) * &s1 + fi(3) * &s2 + &two * &s3 + kx(20, 48)),
        Rel::Le,
        fi(2) * &cap_sigma,
    ));
    rows.push(CascadeRow::exact(
        "gen1: p <= 2Σ/(2Σ−2s₃+(d−2)s₄+(24d+52)x)",
        "generation-tables",
        &p * (&two * &cap_sigma - &two * &s3 + (&d - &two) * &s4 + kx(24, 52)),
        Rel::Le,
        fi(2) * &cap_sigma,
    ));
    rows.push(CascadeRow::exact(
        "gen2: s₃ <= (d+3)s₁/2−s₂/2−1+(10d+22)x",
        "generation-tables",
        s3.clone(),
        Rel::Le,
        (&d + fi(3)) / &two * &s1 - &half * &s2 - &one + kx(10, 22),
    ));
    rows.push(CascadeRow::exact(
        "gen2: s₃ >= (d−1)s₁/2+s₂/2+(2d+2)x",
        "generation-tables",
        (&d - &one) / &two * &s1 + &half * &s2 + kx(2, 2),
        Rel::Le,
        s3.clone(),
    ));
    rows.push(CascadeRow::exact(
        "gen3: s₁ <= 1−(30d+68)x",
        "generation-tables",
        s1.clone(),
        Rel::Le,
        &one - kx(30, 68),
    ));
    rows.push(CascadeRow::exact(
        "gen3: s₂ <= 3s₁−2+(20d+44)x",
        "generation-tables",
        s2.clone(),
        Rel::Le,
        fi(3) * &s1 - &two + kx(20, 44),
    ));
    rows.push(CascadeRow::exact(
        "gen3: s₃ == d·s₁/2",
        "generation-tables",
        s3.clone(),
        Rel::Eq,
        &d / &two * &s1,
    ));
    rows.push(CascadeRow::exact(
        "gen4: (70d+160)α < σ−2ε",
        "generation-tables",
        (fi(70) * &d + fi(160)) * &raw.alpha,
        Rel::Lt,
        s2e.clone(),
    ));
    rows.push(CascadeRow::exact(
        "gen5: s₁ >= 2/3+(4/3)x",
        "generation-tables",
        fr(2, 3) + fr(4, 3) * &x,
        Rel::Le,
        s1.clone(),
    ));
    rows.push(CascadeRow::exact(
        "gen5: s₂ >= (20d+48)x",
        "generation-tables",
        kx(20, 48),
        Rel::Le,
        s2.clone(),
    ));
    rows.push(CascadeRow::exact("gen5: s₄ < s₁", "generation-tables", s4.clone(), Rel::Lt, s1.clone()));

    // --- key-bound tables ------------------------------------------------
    rows.push(CascadeRow::exact(
        "key3: (32d+80)α < σ−2ε",
        "key-bound-tables",
        (fi(32) * &d + fi(80)) * &raw.alpha,
        Rel::Lt,
        s2e.clone(),
    ));
    rows.push(CascadeRow::exact(
        "key4: α·b > 3d/2+5",
        "key-bound-tables",
        fr(3, 2) * &d + fi(5),
        Rel::Lt,
        &raw.alpha * &b,
    ));
    rows.push(CascadeRow::exact(
        "key5-linear: α·b > d+9",
        "key-bound-tables",
        &d + fi(9),
        Rel::Lt,
        &raw.alpha * &b,
    ));
    // ℓ^{σ/2−ε} = λ_{q+1}^{−α}λ_q^{−d−5}; compare λ_q exponents.
    rows.push(CascadeRow::exact(
        "key5-linear: ℓ^{σ/2−ε} < λ_{q+1}^{−α}",
        "key-bound-tables",
        -(&raw.alpha) * &b - (&d + fi(5)),
        Rel::Lt,
        -(&raw.alpha) * &b,
    ));
    // Linear-error variant of essential (e) with f(q) and −(10d+24)x.
    rows.push(ess(
        "key5-linear f(q)-row",
        (&d - &two) / &two * &s4 / &b - &s1 * ((&d - &one) / &p - (&d - &one))
            - &s2 * (&one / &p - &one)
            - &s3,
        10,
        24,
    ));
    // Nonlinear-error rows in λ_q exponents.
    rows.push(CascadeRow::exact(
        "key5-nonlinear1: λ_{q+1}^{−2α}f^{1−σ}(q) < λ_{q+1}^{−2βb²/(ι−1)}",
        "key-bound-tables",
        fi(-2) * &raw.alpha * &b + (&one - &raw.sigma) * &s4,
        Rel::Lt,
        fi(-2) * &raw.beta * &b * &b * &b / (&iota - &one),
    ));
    rows.push(CascadeRow::exact(
        "key5-nonlinear1: (ι−1)α > 2βb²",
        "key-bound-tables",
        fi(2) * &raw.beta * &b * &b,
        Rel::Lt,
        (&iota - &one) * &raw.alpha,
    ));
    rows.push(CascadeRow::exact(
        "key5-nonlinear2: f^{−σ}(q) < λ_{q+1}^{−2βb²/(ι−1)}",
        "key-bound-tables",
        -(&raw.sigma) * &s4,
        Rel::Lt,
        fi(-2) * &raw.beta * &b * &b * &b / (&iota - &one),
    ));

    // --- energy-control table --------------------------------------------
    rows.push(CascadeRow::exact(
        "energyI: ℓ^{σ/2−ε}λ_q^{d+4} < λ_{q+1}^{−α}",
        "energy-control",
        -(&raw.alpha) * &b - (&d + fi(5)) + (&d + fi(4)),
        Rel::Lt,
        -(&raw.alpha) * &b,
    ));
    rows.push(CascadeRow::exact(
        "energyI: 4N*+6 < α·b",
        "energy-control",
        fi(4 * raw.n_star as i64 + 6),
        Rel::Lt,
        &raw.alpha * &b,
    ));
    rows.push(ess(
        "energyIV f(q+1)-row",
        (&d - &two) / &two * &s4 - &s1 * ((&d - &one) / &p - (&d - &one) / &two)
            - &s2 * (&one / &p - &half),
        2,
        4,
    ));

    // --- convergent series (direct summation, generous tolerance) --------
    // 4Σ_{r≥1} δ_r^{1/2} ≤ 4: sum directly in log₂-space.
    let beta_f = raw.beta.to_f64().unwrap_or(0.0);
    let l2l = |q: u32| raw.a_log2 as f64 * (raw.b as f64).powi(q as i32);
    let mut dsum = 0.5; // δ₁^{1/2}
    for r in 2..400u32 {
        let log2 = 0.5 * (-4.0 + 2.0 * beta_f * (l2l(2) - l2l(r)));
        let term = log2.exp2();
        dsum += term;
        if term < 1e-300 {
            break;
        }
    }
    rows.push(CascadeRow::real("series: 4Σδ_r^{1/2} <= 4", "series", 4.0 * dsum, Rel::Le, 4.0));
    let alpha_f = raw.alpha.to_f64().unwrap_or(0.0);
    let s2e_f = s2e.to_f64().unwrap_or(1.0);
    let mut lsum = 0.0;
    for r in 0..400u32 {
        let log2 =
            (-2.0 * alpha_f * l2l(r + 1) - (2.0 * raw.d as f64 + 10.0) * l2l(r)) / s2e_f;
        let term = log2.exp2();
        lsum += term;
        if term < 1e-300 {
            break;
        }
    }
    rows.push(CascadeRow::real("series: Σℓ_r <= 1", "series", lsum, Rel::Le, 1.0));

    CascadeReport { rows }
}

/// Re-run the validator on a parameter set (the report is also stored at
/// construction).
pub fn validate_cascade(ps: &ParameterSet) -> CascadeReport {
    validate_rows(&ps.raw)
}

/// The certified tuple for `d = 3`: hand-derived by exact-rational search,
/// passes every cascade row. `a = 2^(2·10¹¹)` exists only in log₂-space.
pub fn certified_tuple() -> RawParams {
    RawParams {
        d: 3,
        a_log2: 200_000_000_000,
        b: 120_000,
        iota: fr(21, 20),
        sigma: fr(1, 2),
        epsilon: fr(1, 100),
        alpha: fr(1, 5000),
        beta: BigRational::new(BigInt::from(1), BigInt::from(10u8).pow(21)),
        varsigma: fr(9, 20),
        tau: fr(3, 5),
        s4: fr(1, 2),
        p_exp: fr(51, 50),
        n_star: 4,
        big_a: 10,
        j_cap: 1,
        l_const: 10.0,
        m_0: 100.0,
        m_const: 50.0,
        e_lo: 0.5,
        e_hi: 4.0,
        e_dot_max: 1.0,
        ell_override: None,
        mu_override: None,
    }
}

/// The desk tuple: `λ₁ = 4` with every identity intact; asymptotic rows
/// (and the `b ≡ 0 mod 2ς_d` divisibility row) fail and are reported, never
/// asserted. `ς = 1/2` gives `λ₁·r_⊥ = 1` (the thinnest admissible
/// periodisation), and the jet Nyquist requirement `2·5·λ₁ = 40` points per
/// axis fits a 64³ grid — the binding constraint for a desk-size iterate.
pub fn desk_tuple() -> RawParams {
    RawParams {
        d: 3,
        a_log2: 1, // a = 2
        b: 2,
        iota: fr(11, 10),
        sigma: fr(1, 2),
        epsilon: fr(1, 100),
        alpha: fr(1, 100),
        beta: fr(1, 4),
        varsigma: fr(1, 2),
        tau: fr(1, 2),
        s4: fi(1),
        p_exp: fr(51, 50),
        n_star: 4,
        big_a: 10,
        j_cap: 1,
        l_const: 10.0,
        m_0: 100.0,
        m_const: 50.0,
        e_lo: 1e-6,
        e_hi: 100.0,
        e_dot_max: 10.0,
        ell_override: Some(1.0 / 64.0),
        mu_override: Some(0.5),
    }
}
