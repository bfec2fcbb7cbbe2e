//! Finite differences for `-u'' + H(delta) u' - (mu/delta^2) u + u_+^p / delta^s = 0`
//! on a graded mesh in the distance variable, with Dirichlet data at the
//! innermost node and either Dirichlet data at `delta = 1` (slab) or symmetry
//! at the center (ball).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::grid::Grid;
use crate::interp::ProfileInterp;
use crate::real::Real;
use crate::regime::ProblemParams;
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InnerBoundary<T = f64> {
    /// Dirichlet value at the first grid node.
    DirichletValue { value: T },
    /// Dirichlet value on `{delta = eps}`, the first node of a grid starting at `eps`.
    Exhausted { eps: T, value: T },
}

impl<T: Real> InnerBoundary<T> {
    pub fn value(&self) -> T {
        match *self {
            InnerBoundary::DirichletValue { value } | InnerBoundary::Exhausted { value, .. } => value,
        }
    }

    pub fn eps(&self) -> Option<T> {
        match *self {
            InnerBoundary::Exhausted { eps, .. } => Some(eps),
            InnerBoundary::DirichletValue { .. } => None,
        }
    }

    fn with_value(&self, value: T) -> Self {
        match *self {
            InnerBoundary::DirichletValue { .. } => InnerBoundary::DirichletValue { value },
            InnerBoundary::Exhausted { eps, .. } => InnerBoundary::Exhausted { eps, value },
        }
    }
}

/// Discrete operator `F(u) = -Delta_h u - (mu/delta^2) u + u_+^p / delta^s` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator<T = f64> {
    geometry: Geometry,
    params: ProblemParams<T>,
    grid: Grid<T>,
    bc_inner: InnerBoundary<T>,
    bc_outer: T,
    /// `-Delta_h` stencil for each node; rows of Dirichlet nodes are unused.
    stencil: Tridiagonal<T>,
    hardy: Vec<T>,
    absorption_weight: Vec<T>,
}

/// Second-order three-point coefficients of `u''` and `u'` on a nonuniform mesh.
fn three_point<T: Real>(hm: T, hp: T) -> ([T; 3], [T; 3]) {
    let two = T::lit(2.0);
    let sum = hm + hp;
    let d2 = [two / (hm * sum), -two / (hm * hp), two / (hp * sum)];
    let d1 = [-hp / (hm * sum), (hp - hm) / (hm * hp), hm / (hp * sum)];
    (d2, d1)
}

pub fn discretize<T: Real>(
    geometry: Geometry,
    params: ProblemParams<T>,
    grid: Grid<T>,
    bc_inner: InnerBoundary<T>,
    bc_outer: T,
) -> Result<DiscreteOperator<T>> {
    if !(bc_inner.value() >= T::zero() && bc_inner.value().is_finite()) {
        return Err(Error::InvalidParams("inner boundary value must be finite and >= 0".into()));
    }
    if !(bc_outer >= T::zero() && bc_outer.is_finite()) {
        return Err(Error::InvalidParams("outer boundary value must be finite and >= 0".into()));
    }
    if let Some(eps) = bc_inner.eps() {
        if grid.delta_min() != eps {
            return Err(Error::InvalidGrid(format!(
                "grid must start at the exhaustion level {eps} (starts at {})",
                grid.delta_min()
            )));
        }
    }
    let x = grid.nodes();
    let n = x.len();
    let mut stencil = Tridiagonal::zeros(n);
    for i in 1..n - 1 {
        let (d2, d1) = three_point(x[i] - x[i - 1], x[i + 1] - x[i]);
        let h = geometry.curvature(x[i]);
        stencil.lower[i] = -d2[0] + h * d1[0];
        stencil.diag[i] = -d2[1] + h * d1[1];
        stencil.upper[i] = -d2[2] + h * d1[2];
    }
    if let Geometry::Ball { dim } = geometry {
        // Center: -Delta u = -N u_rr with a mirrored ghost node.
        let h = x[n - 1] - x[n - 2];
        let c = T::lit(2.0) * T::from_usize(dim).unwrap() / (h * h);
        stencil.lower[n - 1] = -c;
        stencil.diag[n - 1] = c;
    }
    let hardy = x.iter().map(|&d| params.mu() / (d * d)).collect();
    let absorption_weight = x.iter().map(|&d| d.powf(-params.s())).collect();
    Ok(DiscreteOperator { geometry, params, grid, bc_inner, bc_outer, stencil, hardy, absorption_weight })
}

impl<T: Real> DiscreteOperator<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn params(&self) -> &ProblemParams<T> {
        &self.params
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn bc_inner(&self) -> InnerBoundary<T> {
        self.bc_inner
    }

    pub fn bc_outer(&self) -> T {
        self.bc_outer
    }

    /// Hardy coefficient `mu / delta_i^2` at each node.
    pub fn hardy_coefficients(&self) -> &[T] {
        &self.hardy
    }

    /// Same operator with a different inner Dirichlet value.
    pub fn with_inner_value(&self, value: T) -> Self {
        Self { bc_inner: self.bc_inner.with_value(value), ..self.clone() }
    }

    /// Indices of nodes whose values are unknowns.
    pub fn unknowns(&self) -> std::ops::Range<usize> {
        let n = self.grid.len();
        match self.geometry {
            Geometry::Slab => 1..n - 1,
            Geometry::Ball { .. } => 1..n,
        }
    }

    /// Copies the boundary data into a full nodal vector.
    pub fn apply_boundary(&self, u: &mut [T]) {
        u[0] = self.bc_inner.value();
        if self.geometry == Geometry::Slab {
            let n = u.len();
            u[n - 1] = self.bc_outer;
        }
    }

    /// `-Delta_h u` at node `i`.
    pub fn laplacian_at(&self, u: &[T], i: usize) -> T {
        let st = &self.stencil;
        let mut acc = st.diag[i] * u[i] + st.lower[i] * u[i - 1];
        if i + 1 < u.len() {
            acc = acc + st.upper[i] * u[i + 1];
        }
        acc
    }

    /// Residual and term scale at node `i`.
    pub fn residual_at(&self, u: &[T], i: usize) -> (T, T) {
        let st = &self.stencil;
        let mut lap = st.diag[i] * u[i] + st.lower[i] * u[i - 1];
        let mut scale = (st.diag[i] * u[i]).abs() + (st.lower[i] * u[i - 1]).abs();
        if i + 1 < u.len() {
            lap = lap + st.upper[i] * u[i + 1];
            scale = scale + (st.upper[i] * u[i + 1]).abs();
        }
        let hardy = self.hardy[i] * u[i];
        let absorb = u[i].pos().powf(self.params.p()) * self.absorption_weight[i];
        (lap - hardy + absorb, scale + hardy.abs() + absorb)
    }

    /// Residual on all nodes (zero on Dirichlet nodes) and its relative max norm.
    pub fn residual(&self, u: &[T]) -> (Vec<T>, T) {
        let mut r = vec![T::zero(); u.len()];
        let mut norm = T::zero();
        for i in self.unknowns() {
            let (f, s) = self.residual_at(u, i);
            r[i] = f;
            norm = norm.max(relative(f, s));
        }
        (r, norm)
    }

    fn weighted_merit(&self, u: &[T], weights: &[T]) -> T {
        self.unknowns()
            .map(|i| {
                let f = self.residual_at(u, i).0 * weights[i];
                f * f
            })
            .sum::<T>()
            .sqrt()
    }

    /// Jacobian restricted to the unknowns, plus `shift` on the diagonal.
    fn jacobian(&self, u: &[T], shift: Option<&[T]>) -> Tridiagonal<T> {
        let range = self.unknowns();
        let m = range.len();
        let mut j = Tridiagonal::zeros(m);
        let p = self.params.p();
        for (k, i) in range.clone().enumerate() {
            j.lower[k] = if k > 0 { self.stencil.lower[i] } else { T::zero() };
            j.upper[k] = if k + 1 < m { self.stencil.upper[i] } else { T::zero() };
            let mut d = self.stencil.diag[i] - self.hardy[i];
            d = d + match shift {
                Some(sh) => sh[i],
                None => p * u[i].pos().powf(p - T::one()) * self.absorption_weight[i],
            };
            j.diag[k] = d;
        }
        j
    }
}

fn relative<T: Real>(f: T, scale: T) -> T {
    if scale == T::zero() {
        if f == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        f.abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions<T = f64> {
    /// Target for the relative residual `max_i |F_i| / scale_i`.
    pub tol: T,
    pub max_newton: usize,
    pub max_monotone: usize,
    /// Nodewise lower and upper bounds; iterates are clamped into them.
    pub bracket: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_newton: 200, max_monotone: 200_000, bracket: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSolution<T = f64> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
    pub bc_inner: InnerBoundary<T>,
    pub bc_outer: T,
    pub residual_norm: T,
    pub iterations: usize,
    pub geometry: Geometry,
    pub params: ProblemParams<T>,
    /// Whether the monotone fallback was needed.
    pub used_fallback: bool,
}

impl<T: Real> GridSolution<T> {
    /// Wraps nodal values (e.g. a barrier) with the residual of `op`.
    pub fn from_values(op: &DiscreteOperator<T>, values: Vec<T>) -> Self {
        let (_, norm) = op.residual(&values);
        GridSolution {
            grid: op.grid.clone(),
            values,
            bc_inner: op.bc_inner,
            bc_outer: op.bc_outer,
            residual_norm: norm,
            iterations: 0,
            geometry: op.geometry,
            params: op.params,
            used_fallback: false,
        }
    }

    pub fn nodes(&self) -> &[T] {
        self.grid.nodes()
    }

    /// Operator this solution was computed with.
    pub fn operator(&self) -> Result<DiscreteOperator<T>> {
        discretize(self.geometry, self.params, self.grid.clone(), self.bc_inner, self.bc_outer)
    }

    pub fn interpolant(&self) -> ProfileInterp<T> {
        ProfileInterp::new(self.grid.nodes(), &self.values)
    }

    pub fn value_at(&self, delta: T) -> Option<T> {
        self.interpolant().eval(delta)
    }

    /// Unknown nodes at which `u` exceeds `bound` (relative slack `1e-9`).
    pub fn exceedances(&self, bound: &[T]) -> Vec<usize> {
        let last = match self.geometry {
            Geometry::Slab => self.values.len() - 1,
            Geometry::Ball { .. } => self.values.len(),
        };
        (1..last).filter(|&i| self.values[i] > bound[i] * (T::one() + T::lit(1e-9))).collect()
    }

    /// Nodes of the unknown range at which `u` exceeds the Keller-Osserman
    /// bound with amplitude `gamma`. On an exhausted domain the bound is the
    /// regularized profile `gamma delta^{s/(p-1)} (delta - eps)^{-2/(p-1)}`.
    pub fn ko_violations(&self, gamma: T) -> Vec<usize> {
        let pm1 = self.params.p() - T::one();
        let a = self.params.s() / pm1;
        let c = -T::lit(2.0) / pm1;
        let eps = self.bc_inner.eps().unwrap_or(T::zero());
        let x = self.grid.nodes();
        let last = match self.geometry {
            Geometry::Slab => x.len() - 1,
            Geometry::Ball { .. } => x.len(),
        };
        (1..last)
            .filter(|&i| {
                let bound = gamma * x[i].powf(a) * (x[i] - eps).powf(c);
                self.values[i] > bound * (T::one() + T::lit(1e-9))
            })
            .collect()
    }
}

/// Damped Newton with clamping, falling back to monotone iteration when the
/// line search stalls.
pub fn solve_bvp<T: Real>(op: &DiscreteOperator<T>, initial: &[T], options: &SolveOptions<T>) -> Result<GridSolution<T>> {
    let n = op.grid.len();
    if initial.len() != n {
        return Err(Error::Precondition("initial iterate has wrong length".into()));
    }
    if initial.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(Error::Precondition("initial iterate must be finite and nonnegative".into()));
    }
    let clamp = |u: &mut Vec<T>| {
        for (k, v) in u.iter_mut().enumerate() {
            let mut w = v.pos();
            if let Some((lo, hi)) = &options.bracket {
                w = w.max(lo[k]).min(hi[k]);
            }
            *v = w;
        }
        op.apply_boundary(u);
    };
    let mut u = initial.to_vec();
    clamp(&mut u);
    let mut iterations = 0;
    let mut used_fallback = false;
    let range = op.unknowns();

    let finish = |u: Vec<T>, norm: T, iterations: usize, used_fallback: bool| GridSolution {
        grid: op.grid.clone(),
        values: u,
        bc_inner: op.bc_inner,
        bc_outer: op.bc_outer,
        residual_norm: norm,
        iterations,
        geometry: op.geometry,
        params: op.params,
        used_fallback,
    };

    let mut rounds = 0;
    loop {
        // Newton phase.
        let mut newton_steps = 0;
        loop {
            let (f, norm) = op.residual(&u);
            if norm <= options.tol {
                return Ok(finish(u, norm, iterations, used_fallback));
            }
            if newton_steps >= options.max_newton {
                break;
            }
            let weights: Vec<T> = (0..n)
                .map(|i| {
                    if range.contains(&i) {
                        let s = op.residual_at(&u, i).1;
                        if s > T::zero() {
                            T::one() / s
                        } else {
                            T::one()
                        }
                    } else {
                        T::zero()
                    }
                })
                .collect();
            let merit = op.weighted_merit(&u, &weights);
            let jac = op.jacobian(&u, None);
            let rhs: Vec<T> = range.clone().map(|i| -f[i]).collect();
            let step = match jac.solve(&rhs) {
                Ok(s) => s,
                Err(_) => break,
            };
            let mut lambda = T::one();
            let mut accepted = None;
            for _ in 0..=30 {
                let mut trial = u.clone();
                for (k, i) in range.clone().enumerate() {
                    trial[i] = u[i] + lambda * step[k];
                }
                clamp(&mut trial);
                let m = op.weighted_merit(&trial, &weights);
                if m < merit {
                    accepted = Some(trial);
                    break;
                }
                lambda = lambda * T::lit(0.5);
            }
            iterations += 1;
            newton_steps += 1;
            match accepted {
                Some(next) => u = next,
                None => break,
            }
        }
        rounds += 1;
        if rounds > 20 || iterations > options.max_monotone {
            let (_, norm) = op.residual(&u);
            return Err(Error::NonConvergence { iterations, residual: norm.as_f64() });
        }
        // Monotone phase, from the lower bracket on the first visit.
        if !used_fallback {
            if let Some((lo, _)) = &options.bracket {
                u = lo.clone();
                clamp(&mut u);
            }
        }
        used_fallback = true;
        let chunk = 500;
        for _ in 0..chunk {
            let p = op.params.p();
            let shift: Vec<T> = (0..n)
                .map(|i| {
                    let w = match &options.bracket {
                        Some((_, hi)) => u[i].max(hi[i]),
                        None => u[i],
                    };
                    p * w.pos().powf(p - T::one()) * op.absorption_weight[i] + op.hardy[i].pos()
                })
                .collect();
            // (A - mu/d^2 + shift) u_new = shift u - u^p/d^s - boundary terms, rewritten
            // as a correction of the current residual.
            let (f, norm) = op.residual(&u);
            if norm <= options.tol {
                return Ok(finish(u, norm, iterations, used_fallback));
            }
            let mat = op.jacobian(&u, Some(&shift));
            let rhs: Vec<T> = range.clone().map(|i| -f[i]).collect();
            let step = mat.solve(&rhs)?;
            for (k, i) in range.clone().enumerate() {
                u[i] = u[i] + step[k];
            }
            clamp(&mut u);
            iterations += 1;
            if iterations > options.max_monotone {
                break;
            }
        }
    }
}

/// Nodal values of a function of `delta` on the grid.
pub fn sample<T: Real>(grid: &Grid<T>, f: impl Fn(T) -> T) -> Vec<T> {
    grid.nodes().iter().map(|&d| f(d)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionOptions<T = f64> {
    pub grading: T,
    pub max_spacing: T,
    /// Dirichlet value at `delta = 1` (slab only).
    pub bc_outer: T,
    pub solve: SolveOptions<T>,
    /// Relative change between the last two boundary values below which the
    /// sequence counts as converged in `M`.
    pub cauchy_tol: T,
    /// The `M` sequence is extended by factors of 100 up to this value until
    /// the Cauchy test passes; equal to the last given `M` to disable.
    pub max_boundary_value: T,
    /// First spacing of each level's mesh relative to `grading * eps`; small
    /// values resolve the layer next to `delta = eps` at large `M`.
    pub layer_resolution: T,
    /// Compact set `[lo, hi]` on which the Cauchy test in `M` is measured.
    pub compact: (T, T),
}

impl<T: Real> Default for ExhaustionOptions<T> {
    fn default() -> Self {
        Self {
            grading: T::lit(crate::grid::DEFAULT_GRADING),
            max_spacing: T::lit(crate::grid::DEFAULT_MAX_SPACING),
            bc_outer: T::zero(),
            solve: SolveOptions::default(),
            cauchy_tol: T::lit(1e-3),
            max_boundary_value: T::lit(1e30),
            layer_resolution: T::lit(1e-8),
            compact: (T::lit(0.1), T::lit(0.9)),
        }
    }
}

/// Solutions on `{delta > eps}` for one `eps`, one per boundary value `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionLevel<T = f64> {
    pub eps: T,
    pub boundary_values: Vec<T>,
    pub solutions: Vec<GridSolution<T>>,
    /// Nodewise `u(M_j) <= u(M_{j+1})`.
    pub monotone_in_m: bool,
    /// Max relative change between the last two `M` on the compact set.
    pub cauchy_gap: T,
}

impl<T: Real> ExhaustionLevel<T> {
    pub fn last(&self) -> &GridSolution<T> {
        self.solutions.last().unwrap()
    }
}

/// Limit profile of the exhaustion family, extrapolated polynomially in `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProfile<T = f64> {
    pub delta: Vec<T>,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionRun<T = f64> {
    pub levels: Vec<ExhaustionLevel<T>>,
    /// Every level passed the Cauchy test in `M`.
    pub cauchy_in_m: bool,
    /// Values at the probe points do not increase as `eps` decreases.
    pub monotone_in_eps: bool,
    pub probes: Vec<T>,
    /// `u_eps(probe)` per level.
    pub probe_values: Vec<Vec<T>>,
    pub limit: LimitProfile<T>,
    /// Present with at least three levels.
    pub collapse: Option<CollapseEstimate<T>>,
    /// Keller-Osserman amplitude valid on every `{delta > eps}` of the run.
    pub ko_gamma: T,
}

const PROBES: [f64; 7] = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];

fn solve_level<T: Real>(
    params: ProblemParams<T>,
    geometry: Geometry,
    eps: T,
    m_sequence: &[T],
    gamma: T,
    options: &ExhaustionOptions<T>,
) -> Result<ExhaustionLevel<T>> {
    let first = options.grading * eps * options.layer_resolution;
    let grid = Grid::graded_from(eps, first, options.grading, options.max_spacing)?;
    let pm1 = params.p() - T::one();
    let (a, c) = (params.s() / pm1, -T::lit(2.0) / pm1);
    let ko = |d: T| if d > eps { gamma * d.powf(a) * (d - eps).powf(c) } else { T::infinity() };
    let mut values: Vec<T> = m_sequence.to_vec();
    let mut solutions: Vec<GridSolution<T>> = Vec::new();
    let mut k = 0;
    loop {
        let m = values[k];
        let op = discretize(geometry, params, grid.clone(), InnerBoundary::Exhausted { eps, value: m }, options.bc_outer)?;
        let init = match solutions.last() {
            // Continuation: the previous solution with the larger boundary value,
            // capped by the super-solution.
            Some(prev) => prev.values.iter().zip(grid.nodes()).map(|(&v, &d)| v.max(ko(d).min(m))).collect(),
            None => sample(&grid, |d| ko(d).min(m)),
        };
        let sol = solve_bvp(&op, &init, &options.solve)?;
        solutions.push(sol);
        k += 1;
        if k >= values.len() {
            let gap = cauchy_gap(&solutions, &grid, options.compact);
            let next = *values.last().unwrap() * T::lit(100.0);
            if gap <= options.cauchy_tol || next > options.max_boundary_value {
                break;
            }
            values.push(next);
        }
    }
    let tol = T::lit(1e-9);
    let monotone_in_m = solutions.windows(2).all(|w| {
        w[0].values.iter().zip(&w[1].values).all(|(&lo, &hi)| lo <= hi + tol * hi.abs().max(T::min_positive_value()))
    });
    let cauchy_gap = cauchy_gap(&solutions, &grid, options.compact);
    Ok(ExhaustionLevel { eps, boundary_values: values, solutions, monotone_in_m, cauchy_gap })
}

fn cauchy_gap<T: Real>(solutions: &[GridSolution<T>], grid: &Grid<T>, compact: (T, T)) -> T {
    if solutions.len() < 2 {
        return T::infinity();
    }
    let (a, b) = (&solutions[solutions.len() - 2], &solutions[solutions.len() - 1]);
    grid.nodes()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= compact.0 && d <= compact.1)
        .map(|(i, _)| relative(b.values[i] - a.values[i], b.values[i].abs()))
        .fold(T::zero(), |m, v| m.max(v))
}

/// Solves on `{delta > eps}` for each `eps` (in parallel) with inner Dirichlet
/// values `M` in increasing order, then extrapolates `eps -> 0`.
///
/// Each level gets its own mesh graded from `eps`.
pub fn exhaustion_solve<T: Real>(
    params: ProblemParams<T>,
    geometry: Geometry,
    eps_sequence: &[T],
    m_sequence: &[T],
    options: &ExhaustionOptions<T>,
) -> Result<ExhaustionRun<T>> {
    use rayon::prelude::*;
    if eps_sequence.is_empty() || eps_sequence.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Precondition("eps sequence must be nonempty and decreasing".into()));
    }
    if eps_sequence.iter().any(|&e| !(e > T::zero() && e < T::lit(0.5))) {
        return Err(Error::Precondition("eps values must lie in (0, 1/2)".into()));
    }
    if m_sequence.is_empty() || m_sequence.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("M sequence must be nonempty and increasing".into()));
    }
    let gamma = crate::barriers::ko_gamma(&params, eps_sequence)?;
    let levels: Vec<ExhaustionLevel<T>> = eps_sequence
        .par_iter()
        .map(|&eps| solve_level(params, geometry, eps, m_sequence, gamma, options))
        .collect::<Result<_>>()?;

    let eps_max = eps_sequence[0];
    let probes: Vec<T> = PROBES.iter().map(|&d| T::lit(d)).filter(|&d| d >= T::lit(5.0) * eps_max).collect();
    let probe_values: Vec<Vec<T>> = levels
        .iter()
        .map(|l| {
            let f = l.last().interpolant();
            probes.iter().map(|&d| f.eval(d).unwrap_or(T::nan())).collect()
        })
        .collect();
    let tol = T::lit(1e-9);
    let monotone_in_eps = probe_values
        .windows(2)
        .all(|w| w[0].iter().zip(&w[1]).all(|(&big, &small)| small <= big + tol * big.abs()));
    let cauchy_in_m = levels.iter().all(|l| l.cauchy_gap <= options.cauchy_tol);
    let limit = extrapolate(&levels);
    let collapse = if probes.is_empty() { None } else { collapse_estimate(&levels, &probe_values) };
    Ok(ExhaustionRun { levels, cauchy_in_m, monotone_in_eps, probes, probe_values, limit, collapse, ko_gamma: gamma })
}

/// Which class of solution a sub/super pair brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairTarget {
    /// Solutions growing like `delta^{(s-2)/(p-1)}`.
    Xxl,
    /// Solutions growing like the large harmonic `delta^{beta_-}`
    /// (`delta^{1/2} log(1/delta)` at `mu = 1/4`).
    Ml,
}

/// Ordered pair of a discrete sub-solution and a discrete super-solution on a
/// common grid. Each member carries its own boundary values as Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubSuperPair<T = f64> {
    pub target: PairTarget,
    pub sub: GridSolution<T>,
    pub sup: GridSolution<T>,
    /// `sub <= sup` at every node.
    pub ordered: bool,
}

impl<T: Real> SubSuperPair<T> {
    /// Operator with inner (and slab outer) data taken from the super-solution.
    pub fn operator(&self) -> Result<DiscreteOperator<T>> {
        self.sup.operator()
    }

    /// Solves between the pair, starting from the sub-solution and keeping the
    /// iterates inside the bracket.
    pub fn solve(&self, options: &SolveOptions<T>) -> Result<GridSolution<T>> {
        let op = self.operator()?;
        let options = SolveOptions { bracket: Some((self.sub.values.clone(), self.sup.values.clone())), ..options.clone() };
        solve_bvp(&op, &self.sub.values, &options)
    }
}

/// Operator whose Dirichlet data are the boundary entries of `values`.
pub(crate) fn operator_for<T: Real>(geometry: Geometry, params: ProblemParams<T>, grid: &Grid<T>, values: &[T]) -> Result<DiscreteOperator<T>> {
    let outer = match geometry {
        Geometry::Slab => values[values.len() - 1],
        Geometry::Ball { .. } => T::zero(),
    };
    discretize(geometry, params, grid.clone(), InnerBoundary::DirichletValue { value: values[0] }, outer)
}

/// Largest signed residual relative to its term scale over the unknowns,
/// for `sign = 1` (sub-solution test) or `sign = -1` (super-solution test).
fn worst_signed_residual<T: Real>(op: &DiscreteOperator<T>, u: &[T], sign: T) -> T {
    op.unknowns()
        .map(|i| {
            let (f, s) = op.residual_at(u, i);
            if s > T::zero() {
                sign * f / s
            } else {
                sign * f
            }
        })
        .fold(T::neg_infinity(), |m, v| m.max(v))
}

const PAIR_SCALINGS: usize = 60;

/// Scales `profile` by `factor^k`, k = 0, 1, ..., until the discrete residual
/// has the wanted sign at every unknown node.
fn scale_until<T: Real>(
    geometry: Geometry,
    params: ProblemParams<T>,
    grid: &Grid<T>,
    profile: &[T],
    start: T,
    factor: T,
    super_solution: bool,
) -> Result<(T, GridSolution<T>)> {
    let sign = if super_solution { -T::one() } else { T::one() };
    let mut amp = start;
    for _ in 0..PAIR_SCALINGS {
        let values: Vec<T> = profile.iter().map(|&v| amp * v).collect();
        let op = operator_for(geometry, params, grid, &values)?;
        if worst_signed_residual(&op, &values, sign) <= T::lit(crate::barriers::SIGN_TOL) {
            return Ok((amp, GridSolution::from_values(&op, values)));
        }
        amp = amp * factor;
    }
    Err(Error::GammaCap { cap: amp.as_f64() })
}

/// Keller-Osserman super-solution `G D^b` on the grid, `b = (s-2)/(p-1)`, with
/// `D = delta` (slab) or `delta (1 - delta/2)` (ball, smooth at the center).
/// `G` starts at the slab amplitude of [`crate::barriers::ko_supersolution`]
/// and is doubled until the discrete residual is nonnegative at every unknown.
pub fn ko_grid_supersolution<T: Real>(
    geometry: Geometry,
    params: ProblemParams<T>,
    grid: &Grid<T>,
) -> Result<(T, GridSolution<T>)> {
    let b = params.ko_exponent();
    let profile: Vec<T> = grid
        .nodes()
        .iter()
        .map(|&d| match geometry {
            Geometry::Slab => d.powf(b),
            Geometry::Ball { .. } => (d * (T::one() - T::lit(0.5) * d)).powf(b),
        })
        .collect();
    let gamma = crate::barriers::ko_supersolution(&params, T::zero())?.gamma;
    scale_until(geometry, params, grid, &profile, gamma, T::lit(2.0), true)
}

/// Discrete sub/super pair for the requested class (existence regime only).
///
/// XXL: the sub-solution is `g (delta^b - k delta^{1/2} log^{1/2}(1/delta))_+`
/// with `b = (s-2)/(p-1)`, `k` chosen so it vanishes at `rho = min(1/2, exp(-1/(1-2b)))`
/// and `g` halved from the sharp constant until the discrete residual is `<= 0`;
/// the super-solution is `G D^b` with `D = delta` (slab) or `delta (1 - delta/2)`
/// (ball), `G` doubled from the Keller-Osserman amplitude.
///
/// ML: the sub-solution is `t (delta^{beta_-} - k delta^a)_+` with `a` the
/// midpoint of `(beta_-, min(beta_- p + 2 - s, beta_- + 1, beta_+))`
/// (`t delta^{1/2}(L - k L^{1/2})_+`, `L = log(1/delta)`, at `mu = 1/4`); the
/// super-solution is `min(tau H, G D^b)` with `H` the large super-harmonic barrier.
pub fn build_subsuper_pair<T: Real + Serialize>(
    geometry: Geometry,
    params: ProblemParams<T>,
    grid: &Grid<T>,
    target: PairTarget,
) -> Result<SubSuperPair<T>> {
    use crate::barriers::{BarrierSpec, NamedBarrier};
    let report = crate::regime::existence_verdict(params);
    if report.verdict != crate::regime::Verdict::Existence {
        return Err(Error::Regime(format!(
            "sub/super pairs need the existence regime, got {:?} for {:?}",
            report.verdict, params
        )));
    }
    let roots = report.roots.expect("existence implies real roots");
    let x = grid.nodes();
    let (one, half, two) = (T::one(), T::lit(0.5), T::lit(2.0));
    let b = params.ko_exponent();
    let mu = params.mu();
    let log_inv = |d: T| -d.ln();

    let (_, ko_sup) = ko_grid_supersolution(geometry, params, grid)?;

    let (sub, sup) = match target {
        PairTarget::Xxl => {
            let rho = half.min((-one / (one - two * b)).exp());
            let k = rho.powf(b - half) / log_inv(rho).sqrt();
            let profile: Vec<T> = x
                .iter()
                .map(|&d| if d < rho { (d.powf(b) - k * d.sqrt() * log_inv(d).sqrt()).pos() } else { T::zero() })
                .collect();
            let sharp = (b * (b - one) + mu).powf(one / (params.p() - one));
            let (_, sub) = scale_until(geometry, params, grid, &profile, sharp, half, false)?;
            (sub, ko_sup)
        }
        PairTarget::Ml => {
            let degenerate = roots.degenerate;
            let rho = if degenerate { T::lit(0.2) } else { half };
            let bm = roots.beta_minus;
            let profile: Vec<T> = if degenerate {
                let k = log_inv(rho).sqrt();
                x.iter()
                    .map(|&d| {
                        if d < rho {
                            let l = log_inv(d);
                            (d.sqrt() * (l - k * l.sqrt())).pos()
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            } else {
                let upper = (bm * params.p() + two - params.s()).min(bm + one).min(roots.beta_plus);
                let a = half * (bm + upper);
                let k = rho.powf(bm - a);
                x.iter().map(|&d| if d < rho { (d.powf(bm) - k * d.powf(a)).pos() } else { T::zero() }).collect()
            };
            let (theta, sub) = scale_until(geometry, params, grid, &profile, one, half, false)?;

            let eta = crate::ode_engine::default_eta_eps(mu);
            let harmonic = BarrierSpec::named(NamedBarrier::LargeSuper, mu, eta)?;
            // The barrier is used only where its linear residual keeps its sign.
            let window = crate::barriers::DistanceWindow::new(x[0], if degenerate { T::lit(0.3) } else { T::lit(0.99) }, 400)?;
            let reach = crate::barriers::validity_radius(&harmonic, &params, &window).rho0 * half;
            let h: Vec<T> = x.iter().map(|&d| if d <= reach { harmonic.eval(d).unwrap_or(T::infinity()) } else { T::infinity() }).collect();
            // Start where tau H covers the sub-solution.
            let mut tau = theta;
            for (&s, &hv) in sub.values.iter().zip(&h) {
                if hv.is_finite() && s > tau * hv {
                    tau = s / hv;
                }
            }
            let mut found = None;
            for _ in 0..PAIR_SCALINGS {
                let values: Vec<T> = h.iter().zip(&ko_sup.values).map(|(&hv, &k)| (tau * hv).min(k)).collect();
                let op = operator_for(geometry, params, grid, &values)?;
                let ordered = sub.values.iter().zip(&values).all(|(&a, &c)| a <= c);
                if ordered && worst_signed_residual(&op, &values, -one) <= T::lit(crate::barriers::SIGN_TOL) {
                    found = Some(GridSolution::from_values(&op, values));
                    break;
                }
                tau = tau * two;
            }
            let sup = found.ok_or(Error::GammaCap { cap: tau.as_f64() })?;
            (sub, sup)
        }
    };
    let ordered = sub.values.iter().zip(&sup.values).all(|(&a, &c)| a <= c);
    Ok(SubSuperPair { target, sub, sup, ordered })
}

/// Discrete comparison: after checking that `sub` and `sup` are discrete
/// sub- and super-solutions ordered on the boundary, solves the problem with
/// boundary data between theirs (without bracketing) and reports whether
/// `sub <= u <= sup` and `sub <= sup` at every node.
pub fn discrete_comparison_check<T: Real>(sub: &GridSolution<T>, sup: &GridSolution<T>) -> Result<bool> {
    if sub.grid != sup.grid || sub.params != sup.params || sub.geometry != sup.geometry {
        return Err(Error::Precondition("sub and sup must share grid, parameters and geometry".into()));
    }
    let n = sub.values.len();
    let (lo, hi) = (&sub.values, &sup.values);
    let mid = |i: usize| T::lit(0.5) * (lo[i] + hi[i]);
    let op = operator_for(sub.geometry, sub.params, &sub.grid, lo)?;
    let tol = T::lit(crate::barriers::SIGN_TOL);
    let sub_worst = worst_signed_residual(&op, lo, T::one());
    if sub_worst > tol {
        return Err(Error::Precondition(format!("sub has a positive discrete residual (relative {sub_worst})")));
    }
    let sup_worst = worst_signed_residual(&op, hi, -T::one());
    if sup_worst > tol {
        return Err(Error::Precondition(format!("sup has a negative discrete residual (relative {sup_worst})")));
    }
    let mut boundary = vec![0];
    if sub.geometry == Geometry::Slab {
        boundary.push(n - 1);
    }
    if boundary.iter().any(|&i| lo[i] > hi[i]) {
        return Err(Error::Precondition("sub exceeds sup on the boundary".into()));
    }
    let outer = if sub.geometry == Geometry::Slab { mid(n - 1) } else { T::zero() };
    let op = discretize(sub.geometry, sub.params, sub.grid.clone(), InnerBoundary::DirichletValue { value: mid(0) }, outer)?;
    let u = solve_bvp(&op, lo, &SolveOptions::default())?;
    let slack = |v: T| T::lit(1e-9) * v.abs();
    Ok((0..n).all(|i| lo[i] <= hi[i] && lo[i] <= u.values[i] + slack(u.values[i]) && u.values[i] <= hi[i] + slack(hi[i])))
}

/// Polynomial extrapolation to `eps = 0` through the last (up to three)
/// levels, on the nodes of the finest mesh with `delta >= 5 eps` of the
/// coarsest level used. A single level is returned as is.
fn extrapolate<T: Real>(levels: &[ExhaustionLevel<T>]) -> LimitProfile<T> {
    let fine_sol = levels.last().unwrap().last();
    if levels.len() < 2 {
        return LimitProfile { delta: fine_sol.nodes().to_vec(), values: fine_sol.values.clone() };
    }
    let used = &levels[levels.len().saturating_sub(3)..];
    let eps: Vec<T> = used.iter().map(|l| l.eps).collect();
    // Lagrange weights of the interpolating polynomial evaluated at 0.
    let weights: Vec<T> = (0..eps.len())
        .map(|i| {
            (0..eps.len()).filter(|&j| j != i).fold(T::one(), |w, j| w * eps[j] / (eps[j] - eps[i]))
        })
        .collect();
    let coarse: Vec<_> = used[..used.len() - 1].iter().map(|l| l.last().interpolant()).collect();
    let mut delta = Vec::new();
    let mut values = Vec::new();
    'nodes: for (&d, &u_fine) in fine_sol.nodes().iter().zip(&fine_sol.values) {
        if d < T::lit(5.0) * eps[0] {
            continue;
        }
        let mut acc = weights[weights.len() - 1] * u_fine;
        for (f, &w) in coarse.iter().zip(&weights) {
            match f.eval(d) {
                Some(u) => acc = acc + w * u,
                None => continue 'nodes,
            }
        }
        delta.push(d);
        values.push(acc.pos());
    }
    LimitProfile { delta, values }
}

/// Power-law fit `u_eps = u_0 + C eps^q` through the last three levels at each
/// probe point, used to detect families that collapse as `eps -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseEstimate<T = f64> {
    /// Fitted `q` per probe; `None` when the three values are not monotone.
    pub rates: Vec<Option<T>>,
    /// Fitted `u_0` per probe (clamped at 0).
    pub limits: Vec<Option<T>>,
    /// Largest `u_0 / u_eps_min` over the probes, infinite if any fit failed.
    pub relative_limit: T,
}

impl<T: Real> CollapseEstimate<T> {
    /// The extrapolated limit is negligible against the finest level.
    pub fn is_trivial(&self, tol: T) -> bool {
        self.relative_limit <= tol
    }
}

fn power_law_limit<T: Real>(eps: [T; 3], u: [T; 3]) -> Option<(T, T)> {
    let (d1, d2) = (u[0] - u[1], u[1] - u[2]);
    if !(d1 * d2 > T::zero()) {
        return None;
    }
    let target = d1 / d2;
    let g = |q: T| (eps[0].powf(q) - eps[1].powf(q)) / (eps[1].powf(q) - eps[2].powf(q)) - target;
    let (mut lo, mut hi) = (T::lit(1e-3), T::lit(8.0));
    if g(lo) * g(hi) > T::zero() {
        return None;
    }
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if g(lo) * g(mid) <= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let q = T::lit(0.5) * (lo + hi);
    let c = d2 / (eps[1].powf(q) - eps[2].powf(q));
    Some((q, (u[2] - c * eps[2].powf(q)).pos()))
}

fn collapse_estimate<T: Real>(levels: &[ExhaustionLevel<T>], probe_values: &[Vec<T>]) -> Option<CollapseEstimate<T>> {
    let n = levels.len();
    if n < 3 {
        return None;
    }
    let eps = [levels[n - 3].eps, levels[n - 2].eps, levels[n - 1].eps];
    let mut rates = Vec::new();
    let mut limits = Vec::new();
    let mut relative_limit = T::zero();
    for k in 0..probe_values[0].len() {
        let u = [probe_values[n - 3][k], probe_values[n - 2][k], probe_values[n - 1][k]];
        match power_law_limit(eps, u) {
            Some((q, u0)) => {
                rates.push(Some(q));
                limits.push(Some(u0));
                relative_limit = relative_limit.max(relative(u0, u[2]));
            }
            None => {
                rates.push(None);
                limits.push(None);
                relative_limit = T::infinity();
            }
        }
    }
    Some(CollapseEstimate { rates, limits, relative_limit })
}
